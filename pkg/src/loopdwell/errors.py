"""Exception hierarchy.

Everything raised on purpose by the package derives from ``LoopDwellError``.
``NumericalFailure`` marks problems with the numbers themselves (defective
matrices without an override) as opposed to malformed or out-of-scope input;
the CLI maps the two families to different exit codes.
"""


class LoopDwellError(Exception):
    """Base class for all package errors."""


class NumericalFailure(LoopDwellError):
    """A quantity cannot be computed from the supplied matrices."""


class DefectiveEndpoint(NumericalFailure):
    """A computation needs an eigenvector matrix of a non-diagonalizable subsystem."""

    def __init__(self, index, what=""):
        self.index = index
        msg = f"subsystem {index} is not diagonalizable"
        if what:
            msg += f"; cannot compute {what}"
        super().__init__(msg)


class ImaginaryAxisEigenvalue(LoopDwellError):
    pass


class NonSquareInput(LoopDwellError):
    pass


class DimensionMismatch(LoopDwellError):
    pass


class CyclicGraph(LoopDwellError):
    def __init__(self, cycle=None):
        self.cycle = cycle
        super().__init__("graph contains a loop" + (f": {cycle}" if cycle else ""))


class CyclicUnstableSubgraph(CyclicGraph):
    pass


class InadmissibleSignal(LoopDwellError):
    pass


class MissingPartition(LoopDwellError):
    pass


class SynthesisFailure(LoopDwellError):
    pass


class HypothesisViolation(LoopDwellError):
    pass


class NotARing(HypothesisViolation):
    pass


class NotBipartite(HypothesisViolation):
    pass


class NotALoop(LoopDwellError):
    pass


class UnstableSource(LoopDwellError):
    pass


class ClassViolation(LoopDwellError):
    pass


class NotCommuting(HypothesisViolation):
    pass


class SchemaError(LoopDwellError):
    def __init__(self, path, reason):
        self.path = path
        self.reason = reason
        super().__init__(f"{path}: {reason}")

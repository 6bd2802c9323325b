"""Stability certificates for switched linear systems on digraphs via simple-loop dwell times."""

__version__ = "0.1.0"

from .certify import (  # noqa: E402
    BoundsReport,
    Inequality,
    RescaledEnsemble,
    StabilityCertificate,
    certify_acyclic_rescaled,
    certify_bipartite,
    certify_commuting,
    certify_general_loopwise,
    certify_general_uniform,
    certify_loop_aggregate,
    certify_ring_loopwise,
    certify_ring_uniform,
    certify_simple_loop_dwell,
    certify_switch_count,
    classical_bounds,
    nu_loop,
    rescale_eigenvectors,
)
from .digraph import (  # noqa: E402
    Digraph,
    SimpleLoop,
    SubgraphPartition,
    enumerate_simple_loops,
    topological_sort,
    validate_hypotheses,
)
from .signal import (  # noqa: E402
    Dwell,
    DwellFlee,
    LoopwiseDwellFlee,
    SimpleLoopDwell,
    SwitchingSignal,
    class_membership,
    standard_decomposition,
    synthesize_signal,
)
from .simulate import envelope, envelope_check, simulate, validate_certificate  # noqa: E402
from .spectral import SubsystemEnsemble, Tolerances, eigendecompose  # noqa: E402

__all__ = [
    "__version__",
    "BoundsReport",
    "Inequality",
    "RescaledEnsemble",
    "StabilityCertificate",
    "certify_acyclic_rescaled",
    "certify_bipartite",
    "certify_commuting",
    "certify_general_loopwise",
    "certify_general_uniform",
    "certify_loop_aggregate",
    "certify_ring_loopwise",
    "certify_ring_uniform",
    "certify_simple_loop_dwell",
    "certify_switch_count",
    "classical_bounds",
    "nu_loop",
    "rescale_eigenvectors",
    "Digraph",
    "SimpleLoop",
    "SubgraphPartition",
    "enumerate_simple_loops",
    "topological_sort",
    "validate_hypotheses",
    "Dwell",
    "DwellFlee",
    "LoopwiseDwellFlee",
    "SimpleLoopDwell",
    "SwitchingSignal",
    "class_membership",
    "standard_decomposition",
    "synthesize_signal",
    "envelope",
    "envelope_check",
    "simulate",
    "validate_certificate",
    "SubsystemEnsemble",
    "Tolerances",
    "eigendecompose",
]

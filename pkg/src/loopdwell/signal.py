"""Switching signals, the standard decomposition, and signal classes.

A signal prefix is a path ``modes[0] -> modes[1] -> ...`` in the digraph
together with the time spent in each mode.  Edge ``e_n = (sigma_n,
sigma_{n+1})`` (1-based) carries the time ``d_n`` spent in ``sigma_n``
before the switch, which is what loop times are summed from.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .digraph import Digraph, SimpleLoop, SubgraphPartition, enumerate_simple_loops
from .errors import InadmissibleSignal, MissingPartition, SynthesisFailure


@dataclass(frozen=True)
class SwitchingSignal:
    modes: tuple[int, ...]
    durations: tuple[float, ...]

    def __post_init__(self):
        modes = tuple(int(m) for m in self.modes)
        durations = tuple(float(d) for d in self.durations)
        if not modes:
            raise ValueError("a signal needs at least one mode")
        if len(modes) != len(durations):
            raise ValueError(f"{len(modes)} modes but {len(durations)} durations")
        bad = [n for n, d in enumerate(durations, start=1) if not d > 0 or not np.isfinite(d)]
        if bad:
            raise ValueError(f"durations must be positive and finite (positions {bad})")
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "durations", durations)

    def __len__(self) -> int:
        return len(self.modes)

    @property
    def switch_times(self) -> np.ndarray:
        """``t_0 = 0, t_1, ..., t_N``; mode ``n`` is active on ``[t_{n-1}, t_n)``."""
        return np.concatenate([[0.0], np.cumsum(self.durations)])

    def edge(self, n: int) -> tuple[int, int]:
        """Edge ``e_n`` (1-based)."""
        return self.modes[n - 1], self.modes[n]

    def prefix(self, n: int) -> "SwitchingSignal":
        return SwitchingSignal(self.modes[:n], self.durations[:n])

    def to_dict(self) -> dict:
        return {"modes": list(self.modes), "durations": list(self.durations)}


@dataclass
class Admissibility:
    admissible: bool
    step: int | None = None
    edge: tuple[int, int] | None = None

    def __bool__(self) -> bool:
        return self.admissible

    @property
    def message(self) -> str:
        if self.admissible:
            return "admissible"
        if self.edge is None:
            return f"mode at position {self.step} is not a vertex of the graph"
        return f"step {self.step}: {self.edge} is not an edge of the graph"


def check_admissible(sig: SwitchingSignal, g: Digraph) -> Admissibility:
    """Every consecutive mode pair must be an edge of ``g``.

    On failure, ``step`` is the 1-based index ``n`` of the offending edge
    ``(sigma_n, sigma_{n+1})``.
    """
    for m in sig.modes:
        if m not in g.vertices:
            return Admissibility(False, sig.modes.index(m) + 1, None)
    for n in range(1, len(sig)):
        e = sig.edge(n)
        if e not in g.edges:
            return Admissibility(False, n, e)
    return Admissibility(True)


# ---------------------------------------------------------------------------
# standard decomposition
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LoopInstance:
    loop: SimpleLoop
    loop_id: int  # 1-based position in enumerate_simple_loops order
    edge_indices: tuple[int, ...]
    vertices: tuple[int, ...]  # traversal order, first edge's source first
    total_time: float

    def to_dict(self) -> dict:
        return {
            "loop": list(self.loop.vertices),
            "loop_id": self.loop_id,
            "edges": list(self.edge_indices),
            "vertices": list(self.vertices),
            "total_time": self.total_time,
        }


@dataclass(frozen=True)
class StandardDecomposition:
    instances: tuple[LoopInstance, ...]
    residual_edges: tuple[int, ...]
    residual_vertices: tuple[int, ...]
    loops: tuple[SimpleLoop, ...]

    def counts(self) -> dict[SimpleLoop, int]:
        """Number of extracted instances of each simple loop."""
        out = {s: 0 for s in self.loops}
        for inst in self.instances:
            out[inst.loop] += 1
        return out

    def to_dict(self) -> dict:
        return {
            "instances": [i.to_dict() for i in self.instances],
            "residual_edges": list(self.residual_edges),
            "residual_vertices": list(self.residual_vertices),
        }


def standard_decomposition(
    sig: SwitchingSignal, g: Digraph, loops: Sequence[SimpleLoop] | None = None
) -> StandardDecomposition:
    """Split the path of ``sig`` into simple-loop instances and a residual path.

    Loops are extracted at the earliest position where the residual path
    revisits a vertex, the enclosed edges are removed, and the scan restarts
    on what is left.  The residual path is kept as a stack, which gives the
    same extractions in the same order as restarting each scan from the
    beginning: before a new edge is added the residual never repeats a
    vertex, so the first repeat is always the newly reached vertex.
    """
    check = check_admissible(sig, g)
    if not check:
        raise InadmissibleSignal(check.message)
    if loops is None:
        loops = enumerate_simple_loops(g)
    loop_id = {s: i for i, s in enumerate(loops, start=1)}

    res_vertices = [sig.modes[0]]
    res_edges: list[int] = []
    where = {sig.modes[0]: 0}
    instances = []
    for n in range(1, len(sig)):
        v = sig.modes[n]
        res_edges.append(n)
        q = where.get(v)
        if q is None:
            where[v] = len(res_vertices)
            res_vertices.append(v)
            continue
        edges = tuple(res_edges[q:])
        vertices = tuple(res_vertices[q:])
        loop = SimpleLoop(vertices)
        instances.append(
            LoopInstance(
                loop,
                loop_id[loop],
                edges,
                vertices,
                float(sum(sig.durations[e - 1] for e in edges)),
            )
        )
        for u in res_vertices[q + 1 :]:
            del where[u]
        del res_vertices[q + 1 :]
        del res_edges[q:]
    return StandardDecomposition(tuple(instances), tuple(res_edges), tuple(res_vertices), tuple(loops))


# ---------------------------------------------------------------------------
# signal classes
# ---------------------------------------------------------------------------


def _positive(name, *values):
    for v in values:
        if not (v > 0 and np.isfinite(v)):
            raise ValueError(f"{name} parameters must be positive and finite, got {v!r}")


@dataclass(frozen=True)
class Dwell:
    """Every mode is held for at least ``tau``."""

    tau: float

    def __post_init__(self):
        _positive("dwell", self.tau)

    def to_dict(self):
        return {"variant": "dwell", "params": {"tau": self.tau}}


@dataclass(frozen=True)
class SimpleLoopDwell:
    """Each extracted instance of loop ``i`` takes at least ``taus[i]``.

    ``taus`` follows the order of :func:`enumerate_simple_loops`.
    """

    taus: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "taus", tuple(float(t) for t in self.taus))
        _positive("simple-loop dwell", *self.taus)

    def to_dict(self):
        return {"variant": "simple-loop-dwell", "params": {"taus": list(self.taus)}}


@dataclass(frozen=True)
class DwellFlee:
    """Stable modes held at least ``tau``, unstable modes at most ``eta``."""

    tau: float
    eta: float

    def __post_init__(self):
        _positive("dwell/flee", self.tau, self.eta)

    def to_dict(self):
        return {"variant": "dwell-flee", "params": {"tau": self.tau, "eta": self.eta}}


@dataclass(frozen=True)
class LoopwiseDwellFlee:
    """Per loop instance: stable time at least ``taus[i]``, unstable time at most ``etas[i]``.

    A loop without stable (unstable) vertices carries no dwell (flee)
    constraint.
    """

    taus: tuple[float, ...]
    etas: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "taus", tuple(float(t) for t in self.taus))
        object.__setattr__(self, "etas", tuple(float(t) for t in self.etas))
        if len(self.taus) != len(self.etas):
            raise ValueError("taus and etas must have the same length")
        _positive("loopwise dwell/flee", *self.taus, *self.etas)

    def to_dict(self):
        return {
            "variant": "loopwise-dwell-flee",
            "params": {"taus": list(self.taus), "etas": list(self.etas)},
        }


SignalClassSpec = Union[Dwell, SimpleLoopDwell, DwellFlee, LoopwiseDwellFlee]


@dataclass(frozen=True)
class Constraint:
    label: str
    value: float
    bound: float
    sense: str  # ">=" or "<="

    @property
    def slack(self) -> float:
        return self.value - self.bound if self.sense == ">=" else self.bound - self.value

    @property
    def satisfied(self) -> bool:
        return self.slack >= 0

    def to_dict(self):
        return {
            "label": self.label,
            "value": self.value,
            "bound": self.bound,
            "sense": self.sense,
            "slack": self.slack,
        }


@dataclass
class MembershipReport:
    spec: SignalClassSpec
    constraints: list[Constraint] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.satisfied for c in self.constraints)

    @property
    def violations(self) -> list[Constraint]:
        return [c for c in self.constraints if not c.satisfied]

    @property
    def min_slack(self) -> float | None:
        return min((c.slack for c in self.constraints), default=None)

    def __bool__(self) -> bool:
        return self.passed

    def to_dict(self):
        return {
            "class": self.spec.to_dict(),
            "passed": self.passed,
            "constraints_checked": len(self.constraints),
            "min_slack": self.min_slack,
            "violations": [c.to_dict() for c in self.violations],
        }


def _needs_partition(spec, part):
    if isinstance(spec, (DwellFlee, LoopwiseDwellFlee)) and part is None:
        raise MissingPartition(f"{type(spec).__name__} needs a stable/unstable partition")


def _check_loop_params(spec, loops):
    if len(spec.taus) != len(loops):
        raise ValueError(f"class has {len(spec.taus)} loop parameters but the graph has {len(loops)} simple loops")


def class_membership(
    sig: SwitchingSignal,
    g: Digraph,
    spec: SignalClassSpec,
    part: SubgraphPartition | None = None,
    decomposition: StandardDecomposition | None = None,
) -> MembershipReport:
    """Test whether ``sig`` lies in the signal class ``spec``.

    Loop-based classes are checked on the decomposition of the whole
    prefix; the instances of every shorter prefix are among them.
    """
    _needs_partition(spec, part)
    report = MembershipReport(spec)
    cs = report.constraints
    if isinstance(spec, Dwell):
        for n, d in enumerate(sig.durations, start=1):
            cs.append(Constraint(f"d{n}", d, spec.tau, ">="))
        return report
    if isinstance(spec, DwellFlee):
        for n, (m, d) in enumerate(zip(sig.modes, sig.durations), start=1):
            if part.is_stable(m):
                cs.append(Constraint(f"d{n}", d, spec.tau, ">="))
            else:
                cs.append(Constraint(f"d{n}", d, spec.eta, "<="))
        return report

    dec = decomposition or standard_decomposition(sig, g)
    _check_loop_params(spec, dec.loops)
    for inst in dec.instances:
        i = inst.loop_id - 1
        where = f"loop {inst.loop} on edges {list(inst.edge_indices)}"
        if isinstance(spec, SimpleLoopDwell):
            cs.append(Constraint(f"time on {where}", inst.total_time, spec.taus[i], ">="))
            continue
        stable_t = sum(sig.durations[e - 1] for e in inst.edge_indices if part.is_stable(sig.modes[e - 1]))
        unstable_t = inst.total_time - stable_t
        if any(part.is_stable(v) for v in inst.loop.vertices):
            cs.append(Constraint(f"stable time on {where}", stable_t, spec.taus[i], ">="))
        if any(not part.is_stable(v) for v in inst.loop.vertices):
            cs.append(Constraint(f"unstable time on {where}", unstable_t, spec.etas[i], "<="))
    return report


def switch_counters(sig: SwitchingSignal, part: SubgraphPartition, n: int | None = None) -> tuple[int, int]:
    """Counts of stable and unstable modes among the first ``n`` modes."""
    n = len(sig) if n is None else n
    if not 0 <= n <= len(sig):
        raise ValueError(f"prefix length {n} outside 0..{len(sig)}")
    stable = sum(1 for m in sig.modes[:n] if part.is_stable(m))
    return stable, n - stable


# ---------------------------------------------------------------------------
# synthesis
# ---------------------------------------------------------------------------


def _reference_scale(spec) -> float:
    if isinstance(spec, Dwell):
        return spec.tau
    if isinstance(spec, DwellFlee):
        return min(spec.tau, spec.eta)
    vals = list(spec.taus) + list(getattr(spec, "etas", ()))
    return float(np.median(vals))


# keeps scaled loop budgets on the right side of the bound after rounding
_UP, _DOWN = 1 + 1e-12, 1 - 1e-12


def random_walk(g: Digraph, length: int, rng: np.random.Generator, start: int | None = None) -> list[int]:
    if start is None:
        candidates = [v for v in g.vertices if g.out_degree(v) > 0] or list(g.vertices)
        start = int(rng.choice(candidates))
    modes = [start]
    for _ in range(length - 1):
        succ = g.successors(modes[-1])
        if not succ:
            raise SynthesisFailure(f"random walk reached sink vertex {modes[-1]} after {len(modes)} modes")
        modes.append(int(succ[rng.integers(len(succ))]))
    return modes


def synthesize_signal(
    g: Digraph,
    spec: SignalClassSpec,
    length: int,
    seed: int | np.random.Generator = 0,
    part: SubgraphPartition | None = None,
    start: int | None = None,
) -> SwitchingSignal:
    """Random admissible signal of ``length`` modes inside the class ``spec``.

    The path is a seeded random walk; durations are drawn at random around
    the class's own time scale and then repaired: single durations are
    clamped, and loop instances that miss their budget have the relevant
    durations scaled uniformly (up for dwell budgets, down for flee budgets).
    """
    if length < 1:
        raise ValueError("length must be positive")
    _needs_partition(spec, part)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    modes = random_walk(g, length, rng, start)
    d = rng.uniform(0.25, 1.5, size=length) * _reference_scale(spec)

    if isinstance(spec, Dwell):
        d = np.maximum(d, spec.tau)
    elif isinstance(spec, DwellFlee):
        for n, m in enumerate(modes):
            d[n] = max(d[n], spec.tau) if part.is_stable(m) else min(d[n], spec.eta)
    else:
        dec = standard_decomposition(SwitchingSignal(modes, d), g)
        _check_loop_params(spec, dec.loops)
        for inst in dec.instances:
            i = inst.loop_id - 1
            idx = [e - 1 for e in inst.edge_indices]
            if isinstance(spec, SimpleLoopDwell):
                total = d[idx].sum()
                if total < spec.taus[i]:
                    d[idx] *= _UP * spec.taus[i] / total
                continue
            st = [j for j in idx if part.is_stable(modes[j])]
            un = [j for j in idx if not part.is_stable(modes[j])]
            if st and d[st].sum() < spec.taus[i]:
                d[st] *= _UP * spec.taus[i] / d[st].sum()
            if un and d[un].sum() > spec.etas[i]:
                d[un] *= _DOWN * spec.etas[i] / d[un].sum()
    sig = SwitchingSignal(modes, d)
    report = class_membership(sig, g, spec, part)
    if not report.passed:
        c = report.violations[0]
        raise SynthesisFailure(f"could not satisfy {c.label}: {c.value} {c.sense} {c.bound}")
    return sig

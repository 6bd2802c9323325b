"""Dwell-time bounds and stability certificates.

Every certificate here is a *sufficient* condition.  A ``NotCertified``
verdict only means the inequality failed; it says nothing about
instability.  All inequalities are strict, so a zero margin does not
certify.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .digraph import (
    Digraph,
    SimpleLoop,
    SubgraphPartition,
    enumerate_simple_loops,
    is_bipartite_between,
    is_unidirectional_ring,
    topological_sort,
)
from .errors import (
    ClassViolation,
    CyclicGraph,
    CyclicUnstableSubgraph,
    DefectiveEndpoint,
    HypothesisViolation,
    NotALoop,
    NotARing,
    NotBipartite,
    NotCommuting,
    UnstableSource,
)
from .signal import DwellFlee, SwitchingSignal, class_membership, switch_counters
from .spectral import (
    SubsystemEnsemble,
    check_pairwise_commuting,
    common_diagonals,
    rho_graph,
    transition_cost,
)


@dataclass(frozen=True)
class Inequality:
    """``lhs < rhs`` or ``lhs > rhs``; the margin is positive exactly when it holds."""

    label: str
    lhs: float
    rhs: float
    sense: str = "<"

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs if self.sense == "<" else self.lhs - self.rhs

    @property
    def holds(self) -> bool:
        return self.margin > 0

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "lhs": self.lhs,
            "sense": self.sense,
            "rhs": self.rhs,
            "margin": self.margin,
            "holds": self.holds,
        }


@dataclass
class StabilityCertificate:
    criterion: str
    inequalities: list[Inequality]
    constants: dict = field(default_factory=dict)
    assumptions: dict = field(default_factory=dict)
    expression: str | None = None
    warnings: list[str] = field(default_factory=list)
    series: dict = field(default_factory=dict)

    @property
    def certified(self) -> bool:
        return bool(self.inequalities) and all(q.holds for q in self.inequalities)

    @property
    def verdict(self) -> str:
        return "Certified" if self.certified else "NotCertified"

    @property
    def margin(self) -> float | None:
        return min((q.margin for q in self.inequalities), default=None)

    @property
    def first_violation(self) -> Inequality | None:
        return next((q for q in self.inequalities if not q.holds), None)

    def __bool__(self) -> bool:
        return self.certified

    def to_dict(self) -> dict:
        out = {
            "criterion": self.criterion,
            "verdict": self.verdict,
            "margin": self.margin,
            "inequalities": [q.to_dict() for q in self.inequalities],
            "constants": dict(self.constants),
            "assumptions": dict(self.assumptions),
            "expression": self.expression,
            "warnings": list(self.warnings),
        }
        if self.first_violation is not None:
            out["first_violation"] = self.first_violation.label
        if self.series:
            out["series"] = dict(self.series)
        return out


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _linear_expression(const: float, terms: Sequence[tuple[float, str]]) -> str:
    """Render ``const + sum(coef * name) < 0`` with 6 significant digits."""
    parts = [_fmt(const)]
    for coef, name in terms:
        if coef == 0:
            continue
        sign = "-" if coef < 0 else "+"
        parts.append(f"{sign} {_fmt(abs(coef))}*{name}")
    return " ".join(parts) + " < 0"


# ---------------------------------------------------------------------------
# loop quantities
# ---------------------------------------------------------------------------


def closed_walk_edges(vertices: Sequence[int]) -> list[tuple[int, int]]:
    """Edges of the closed walk ``v0 -> v1 -> ... -> v_last -> v0``."""
    vs = [int(v) for v in vertices]
    if not vs:
        raise NotALoop("empty vertex sequence")
    return [(vs[i], vs[(i + 1) % len(vs)]) for i in range(len(vs))]


def _as_edges(loop, g: Digraph | None = None) -> list[tuple[int, int]]:
    vertices = loop.vertices if isinstance(loop, SimpleLoop) else loop
    edges = closed_walk_edges(vertices)
    if g is not None:
        missing = [e for e in edges if e not in g.edges]
        if missing:
            raise NotALoop(f"{list(vertices)} is not a closed walk in the graph; missing edges {missing}")
    return edges


def loop_cost_sum(ens: SubsystemEnsemble, loop) -> float:
    """Sum of ``ln ||P_s^-1 P_r||`` around a loop; equals ``ln`` of the product of factors."""
    return float(sum(transition_cost(ens, r, s) for r, s in _as_edges(loop)))


def nu_loop(ens: SubsystemEnsemble, loop) -> float:
    """Loop dwell threshold: cost sum divided by the slowest decay rate on the loop.

    ``loop`` is a :class:`SimpleLoop` or any closed vertex walk (a repeated
    or composite loop).
    """
    edges = _as_edges(loop)
    sources = {r for r, _ in edges}
    unstable = sorted(r for r in sources if not ens[r].is_stable)
    if unstable:
        raise UnstableSource(f"loop passes through unstable subsystem(s) {unstable}")
    lam = min(ens.decay(r) for r in sources)
    return loop_cost_sum(ens, loop) / lam


@dataclass
class LoopBounds:
    loop: SimpleLoop
    cost_sum: float | None = None
    lambda_min: float | None = None
    lambda_sum: float | None = None
    mu_max: float | None = None
    mu_sum: float | None = None
    nu: float | None = None
    cycle_ratio: float | None = None

    def to_dict(self) -> dict:
        return {
            "loop": list(self.loop.vertices),
            "cost_sum": self.cost_sum,
            "lambda_min": self.lambda_min,
            "lambda_sum": self.lambda_sum,
            "mu_max": self.mu_max,
            "mu_sum": self.mu_sum,
            "nu": self.nu,
            "cycle_ratio": self.cycle_ratio,
        }


@dataclass
class BoundsReport:
    loops: list[LoopBounds]
    mu_G: float | None = None
    rho_star: float | None = None
    rho2_star: float | None = None
    rho: float | None = None
    rho1: float | None = None
    rho2: float | None = None
    unavailable: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def nus(self) -> list[float | None]:
        return [lb.nu for lb in self.loops]

    def to_dict(self) -> dict:
        return {
            "loops": [lb.to_dict() for lb in self.loops],
            "mu_G": self.mu_G,
            "rho_star": self.rho_star,
            "rho2_star": self.rho2_star,
            "rho": self.rho,
            "rho1": self.rho1,
            "rho2": self.rho2,
            "unavailable": list(self.unavailable),
            "warnings": list(self.warnings),
        }


def _try(fn, unavailable: list[str], what: str):
    try:
        return fn()
    except DefectiveEndpoint as exc:
        unavailable.append(f"{what}: {exc}")
        return None


def _max_factor(ens, edges) -> float | None:
    edges = list(edges)
    if not edges:
        return None
    return max(math.exp(transition_cost(ens, r, s)) for r, s in edges)


def _log_or_zero(factor: float | None) -> float:
    # an empty edge set contributes nothing to the envelope
    return 0.0 if factor is None else math.log(factor)


def classical_bounds(
    ens: SubsystemEnsemble, g: Digraph, part: SubgraphPartition | None = None
) -> BoundsReport:
    """Per-loop data, loop dwell thresholds and the edge/cycle-ratio dwell bounds.

    Quantities that need an eigenvector matrix of a defective subsystem are
    reported as unavailable instead of failing the whole report.  The
    dwell bounds ``mu_G``, ``rho*`` and ``rho2*`` are computed only when
    every subsystem is stable.
    """
    part = part or ens.partition(g)
    loops = enumerate_simple_loops(g)
    unavailable: list[str] = []
    all_stable = not part.unstable
    rows = []
    for s in loops:
        lb = LoopBounds(s)
        sources = [r for r, _ in s.edges]
        st = [r for r in sources if part.is_stable(r)]
        un = [r for r in sources if not part.is_stable(r)]
        lb.lambda_sum = sum(ens.decay(r) for r in st) if st else 0.0
        lb.lambda_min = min((ens.decay(r) for r in st), default=None)
        lb.mu_sum = sum(ens.growth(r) for r in un) if un else 0.0
        lb.mu_max = max((ens.growth(r) for r in un), default=None)
        lb.cost_sum = _try(lambda: loop_cost_sum(ens, s), unavailable, f"cost sum of loop {s}")
        if lb.cost_sum is not None and not un:
            lb.nu = lb.cost_sum / lb.lambda_min
            lb.cycle_ratio = lb.cost_sum / lb.lambda_sum
        rows.append(lb)

    report = BoundsReport(rows, warnings=list(ens.warnings))
    if all_stable:
        edge_vals = []
        for r, s in g.sorted_edges():
            c = _try(lambda: transition_cost(ens, r, s), unavailable, f"mu_G term of edge {(r, s)}")
            if c is not None:
                edge_vals.append(c / ens.decay(r))
        report.mu_G = max(edge_vals, default=None)
        ratios = [lb.cycle_ratio for lb in rows if lb.cycle_ratio is not None]
        report.rho_star = max(ratios, default=None)
        pair_vals = []
        for i, j in g.sorted_edges():
            v = _try(
                lambda: (transition_cost(ens, i, j) + transition_cost(ens, j, i))
                / (ens.decay(i) + ens.decay(j)),
                unavailable,
                f"rho2* term of edge {(i, j)}",
            )
            if v is not None:
                pair_vals.append(v)
        report.rho2_star = max(pair_vals, default=None)
        if len(edge_vals) < len(g.edges) or len(ratios) < len(rows):
            report.warnings.append("mu_G / rho* / rho2* are maxima over the available terms only")
    else:
        unavailable.append("mu_G, rho*, rho2*: defined only when every subsystem is stable")
        report.rho1 = _try(lambda: _max_factor(ens, part.stable_subgraph.edges), unavailable, "rho1")
        report.rho2 = _try(lambda: _max_factor(ens, part.unstable_subgraph.edges), unavailable, "rho2")
    report.rho = _try(lambda: rho_graph(ens, g), unavailable, "rho")
    report.unavailable = unavailable
    return report


# ---------------------------------------------------------------------------
# all-stable certificates
# ---------------------------------------------------------------------------


def _require_all_stable(ens, vertices):
    unstable = sorted(v for v in vertices if not ens[v].is_stable)
    if unstable:
        raise HypothesisViolation(f"subsystems {unstable} are unstable; this criterion needs stable ones")


def certify_simple_loop_dwell(
    ens: SubsystemEnsemble, g: Digraph, taus: Sequence[float]
) -> StabilityCertificate:
    """``tau_i > nu_i`` for every simple loop (taus in enumeration order)."""
    loops = enumerate_simple_loops(g)
    if not loops:
        raise HypothesisViolation("graph has no loop")
    _require_all_stable(ens, g.vertices)
    if len(taus) != len(loops):
        raise ValueError(f"expected {len(loops)} loop dwell times, got {len(taus)}")
    ineqs, nus = [], {}
    for s, tau in zip(loops, taus):
        if not tau > 0:
            raise ValueError("loop dwell times must be positive")
        nu = nu_loop(ens, s)
        nus[str(s)] = nu
        ineqs.append(Inequality(f"tau[{s}] > nu[{s}]", float(tau), nu, ">"))
    return StabilityCertificate(
        "simple-loop-dwell",
        ineqs,
        constants={"nu": nus},
        assumptions={"has_loop": True, "all_stable": True},
        warnings=list(ens.warnings),
    )


def certify_loop_aggregate(
    ens: SubsystemEnsemble, g: Digraph, loops: Iterable[tuple[Sequence[int], float]]
) -> StabilityCertificate:
    """Promised total time on each supplied loop exceeds that loop's threshold.

    Loops are arbitrary closed walks, e.g. a simple loop traversed twice or
    two simple loops sharing a vertex.  Only the supplied loops are checked.
    """
    ineqs, nus = [], {}
    for vertices, time in loops:
        _as_edges(vertices, g)
        if not time > 0:
            raise ValueError("promised loop times must be positive")
        _require_all_stable(ens, vertices)
        nu = nu_loop(ens, vertices)
        name = "->".join(str(v) for v in list(vertices) + [vertices[0]])
        nus[name] = nu
        ineqs.append(Inequality(f"time[{name}] > nu[{name}]", float(time), nu, ">"))
    if not ineqs:
        raise ValueError("no loops supplied")
    return StabilityCertificate(
        "loop-aggregate", ineqs, constants={"nu": nus}, warnings=list(ens.warnings)
    )


# ---------------------------------------------------------------------------
# stable + unstable certificates
# ---------------------------------------------------------------------------


def ring_uniform_condition(
    log_rho: float, sum_lambda: float, sum_mu: float, tau: float, eta: float
) -> StabilityCertificate:
    """``ln rho - (sum lambda) tau + (sum mu) eta < 0``."""
    lhs = log_rho - sum_lambda * tau + sum_mu * eta
    return StabilityCertificate(
        "ring-uniform",
        [Inequality("ln rho - sum(lambda)*tau + sum(mu)*eta < 0", lhs, 0.0)],
        constants={"log_rho": log_rho, "sum_lambda": sum_lambda, "sum_mu": sum_mu, "tau": tau, "eta": eta},
        expression=_linear_expression(log_rho, [(-sum_lambda, "tau"), (sum_mu, "eta")]),
    )


def ring_loopwise_condition(
    log_rho: float, lam: float, mu: float, tau1: float, eta1: float
) -> StabilityCertificate:
    """``ln rho - lambda tau_1 + mu eta_1 < 0``."""
    lhs = log_rho - lam * tau1 + mu * eta1
    return StabilityCertificate(
        "ring-loopwise",
        [Inequality("ln rho - lambda*tau1 + mu*eta1 < 0", lhs, 0.0)],
        constants={"log_rho": log_rho, "lambda": lam, "mu": mu, "tau1": tau1, "eta1": eta1},
        expression=_linear_expression(log_rho, [(-lam, "tau1"), (mu, "eta1")]),
    )


def _ring_data(ens, g, part):
    if not is_unidirectional_ring(g):
        raise NotARing("graph is not a unidirectional ring")
    part = part or ens.partition(g)
    (loop,) = enumerate_simple_loops(g)
    return part, loop, loop_cost_sum(ens, loop)


def _check_times(*values):
    for v in values:
        if not v > 0:
            raise ValueError(f"dwell and flee times must be positive, got {v!r}")


def certify_ring_uniform(
    ens: SubsystemEnsemble,
    g: Digraph,
    tau: float,
    eta: float,
    part: SubgraphPartition | None = None,
) -> StabilityCertificate:
    _check_times(tau, eta)
    part, _, log_rho = _ring_data(ens, g, part)
    sum_lambda = sum(ens.decay(i) for i in part.stable)
    sum_mu = sum(ens.growth(j) for j in part.unstable)
    cert = ring_uniform_condition(log_rho, sum_lambda, sum_mu, tau, eta)
    cert.assumptions = {"unidirectional_ring": True}
    cert.warnings = list(ens.warnings)
    return cert


def certify_ring_loopwise(
    ens: SubsystemEnsemble,
    g: Digraph,
    tau1: float,
    eta1: float,
    part: SubgraphPartition | None = None,
) -> StabilityCertificate:
    _check_times(tau1, eta1)
    part, _, log_rho = _ring_data(ens, g, part)
    lam = min((ens.decay(i) for i in part.stable), default=0.0)
    mu = max((ens.growth(j) for j in part.unstable), default=0.0)
    cert = ring_loopwise_condition(log_rho, lam, mu, tau1, eta1)
    cert.assumptions = {"unidirectional_ring": True}
    cert.warnings = list(ens.warnings)
    return cert


def bipartite_condition(
    log_rho1: float, log_rho2: float, lam: float, mu: float, tau: float, eta: float
) -> StabilityCertificate:
    """``ln rho_1 + ln rho_2 - lambda tau + mu eta < 0``."""
    lhs = log_rho1 + log_rho2 - lam * tau + mu * eta
    return StabilityCertificate(
        "bipartite",
        [Inequality("ln rho1 + ln rho2 - lambda*tau + mu*eta < 0", lhs, 0.0)],
        constants={"log_rho1": log_rho1, "log_rho2": log_rho2, "lambda": lam, "mu": mu, "tau": tau, "eta": eta},
        expression=_linear_expression(log_rho1 + log_rho2, [(-lam, "tau"), (mu, "eta")]),
    )


def certify_bipartite(
    ens: SubsystemEnsemble,
    g: Digraph,
    part: SubgraphPartition | None,
    tau: float,
    eta: float,
) -> StabilityCertificate:
    """Bipartite graph whose two classes are the stable and unstable subsystems.

    Switch factors are ``||P_j^-1 P_i||`` for edge (i, j), as everywhere else.
    """
    _check_times(tau, eta)
    part = part or ens.partition(g)
    if not part.stable or not part.unstable or not is_bipartite_between(g, part):
        raise NotBipartite("edges must all join a stable subsystem to an unstable one")
    rho1 = _max_factor(ens, part.stable_subgraph.edges)
    rho2 = _max_factor(ens, part.unstable_subgraph.edges)
    lam = min(ens.decay(i) for i in part.stable)
    mu = max(ens.growth(j) for j in part.unstable)
    cert = bipartite_condition(_log_or_zero(rho1), _log_or_zero(rho2), lam, mu, tau, eta)
    cert.assumptions = {"bipartite": True}
    cert.warnings = list(ens.warnings)
    return cert


def _loop_rates(ens, part, loop: SimpleLoop):
    st = [r for r, _ in loop.edges if part.is_stable(r)]
    un = [r for r, _ in loop.edges if not part.is_stable(r)]
    return st, un


def certify_general_uniform(
    ens: SubsystemEnsemble,
    g: Digraph,
    part: SubgraphPartition | None,
    tau: float,
    eta: float,
) -> StabilityCertificate:
    """Per simple loop: ``ln rho_i - lambda_si tau + mu_si eta < 0`` with summed rates."""
    _check_times(tau, eta)
    part = part or ens.partition(g)
    loops = enumerate_simple_loops(g)
    if not loops:
        raise HypothesisViolation("graph has no loop")
    ineqs, consts = [], {}
    for s in loops:
        st, un = _loop_rates(ens, part, s)
        log_rho = loop_cost_sum(ens, s)
        lam = sum(ens.decay(r) for r in st)
        mu = sum(ens.growth(r) for r in un)
        ineqs.append(Inequality(f"loop {s}", log_rho - lam * tau + mu * eta, 0.0))
        consts[str(s)] = {"log_rho": log_rho, "lambda": lam, "mu": mu}
    return StabilityCertificate(
        "general-uniform", ineqs, constants={"loops": consts, "tau": tau, "eta": eta}, warnings=list(ens.warnings)
    )


def certify_general_loopwise(
    ens: SubsystemEnsemble,
    g: Digraph,
    part: SubgraphPartition | None,
    taus: Sequence[float],
    etas: Sequence[float],
) -> StabilityCertificate:
    """Per simple loop: ``ln rho_i - lambda_si tau_i + mu_si eta_i < 0``.

    Here ``lambda_si`` is the slowest stable decay on the loop and ``mu_si``
    the fastest unstable growth; an absent class contributes no term.
    """
    part = part or ens.partition(g)
    loops = enumerate_simple_loops(g)
    if not loops:
        raise HypothesisViolation("graph has no loop")
    if len(taus) != len(loops) or len(etas) != len(loops):
        raise ValueError(f"expected {len(loops)} (tau, eta) pairs")
    _check_times(*taus, *etas)
    ineqs, consts = [], {}
    for s, tau, eta in zip(loops, taus, etas):
        st, un = _loop_rates(ens, part, s)
        log_rho = loop_cost_sum(ens, s)
        lam = min((ens.decay(r) for r in st), default=0.0)
        mu = max((ens.growth(r) for r in un), default=0.0)
        ineqs.append(Inequality(f"loop {s}", log_rho - lam * tau + mu * eta, 0.0))
        consts[str(s)] = {"log_rho": log_rho, "lambda": lam, "mu": mu, "tau": tau, "eta": eta}
    return StabilityCertificate(
        "general-loopwise", ineqs, constants={"loops": consts}, warnings=list(ens.warnings)
    )


def _ls_slope(y: Sequence[float], x: Sequence[float] | None = None) -> float:
    y = np.asarray(y, dtype=float)
    if len(y) < 2:
        return 0.0
    x = np.arange(len(y), dtype=float) if x is None else np.asarray(x, dtype=float)
    return float(np.polyfit(x, y, 1)[0])


def switch_count_condition(
    log_rho1: float,
    log_rho2: float,
    lam: float,
    mu: float,
    tau: float,
    eta: float,
    counts: Sequence[tuple[int, int]],
) -> StabilityCertificate:
    """Evaluate ``E(m) = N_s(m)(ln rho1 - lambda tau) + N_u(m)(ln rho2 + mu eta)``.

    ``counts[m-1]`` holds ``(N_s, N_u)`` after ``m`` modes.  The limsup
    condition is judged at the horizon: ``E`` must end negative and its
    least-squares slope over the last half of the prefixes must be negative.
    """
    a = log_rho1 - lam * tau
    b = log_rho2 + mu * eta
    e = [ns * a + nu * b for ns, nu in counts]
    half = e[len(e) // 2 :] if len(e) >= 4 else e
    slope = _ls_slope(half)
    denom = lam * tau - log_rho1
    ratio = b / denom if denom > 0 else None
    ineqs = [
        Inequality("E(horizon) < 0", e[-1] if e else 0.0, 0.0),
        Inequality("slope of E over last half < 0", slope, 0.0),
    ]
    return StabilityCertificate(
        "switch-count",
        ineqs,
        constants={
            "log_rho1": log_rho1,
            "log_rho2": log_rho2,
            "lambda": lam,
            "mu": mu,
            "tau": tau,
            "eta": eta,
            "stable_term": a,
            "unstable_term": b,
            "threshold_ratio": ratio,
        },
        expression=f"N_s*({_fmt(a)}) + N_u*({_fmt(b)}) -> -inf",
        series={"E": e, "N_s": [c[0] for c in counts], "N_u": [c[1] for c in counts]},
    )


def certify_switch_count(
    ens: SubsystemEnsemble,
    g: Digraph,
    part: SubgraphPartition | None,
    tau: float,
    eta: float,
    sig: SwitchingSignal,
    horizon: int | None = None,
) -> StabilityCertificate:
    """Switch-count criterion along a concrete signal, judged at a finite horizon."""
    _check_times(tau, eta)
    part = part or ens.partition(g)
    member = class_membership(sig, g, DwellFlee(tau, eta), part)
    if not member.passed:
        v = member.violations[0]
        raise ClassViolation(f"signal is not in the dwell/flee class: {v.label}={v.value} {v.sense} {v.bound}")
    horizon = len(sig) if horizon is None else horizon
    if not 1 <= horizon <= len(sig):
        raise ValueError(f"horizon must lie in 1..{len(sig)}")
    if not part.stable:
        raise HypothesisViolation("no stable subsystems")
    rho1 = _max_factor(ens, part.stable_subgraph.edges)
    rho2 = _max_factor(ens, part.unstable_subgraph.edges)
    lam = min(ens.decay(i) for i in part.stable)
    mu = max((ens.growth(j) for j in part.unstable), default=0.0)
    counts = [switch_counters(sig, part, m) for m in range(1, horizon + 1)]
    cert = switch_count_condition(_log_or_zero(rho1), _log_or_zero(rho2), lam, mu, tau, eta, counts)
    late = sig.modes[horizon // 2 : horizon]
    cert.assumptions = {
        "in_dwell_flee_class": True,
        "visits_both_classes_late": any(part.is_stable(m) for m in late)
        and any(not part.is_stable(m) for m in late),
    }
    cert.warnings = list(ens.warnings)
    return cert


# ---------------------------------------------------------------------------
# eigenvector rescaling for an acyclic unstable subgraph
# ---------------------------------------------------------------------------


@dataclass
class RescaledEnsemble:
    bases: dict[int, np.ndarray]
    exponents: dict[int, int]
    base: float
    rho: float | None
    rho_prime: float | None
    alpha_prime: float | None
    order: list[int]
    ensemble: SubsystemEnsemble

    def to_dict(self) -> dict:
        return {
            "exponents": {str(k): v for k, v in sorted(self.exponents.items())},
            "scaling_base": self.base,
            "rho": self.rho,
            "rho_prime": self.rho_prime,
            "alpha_prime": self.alpha_prime,
            "order": list(self.order),
        }


def rescale_eigenvectors(
    ens: SubsystemEnsemble, g: Digraph, part: SubgraphPartition | None, zeta: float
) -> RescaledEnsemble:
    """Scale eigenvector matrices so every unstable-source switch factor is at most ``zeta``.

    With ``rho`` the largest factor ``||P_b^-1 P_a||`` over edges leaving
    unstable vertices, and ``base = rho / zeta``: walking a source-first
    topological order of the unstable subgraph, unstable vertices without
    incoming unstable edges keep their matrix, the other unstable vertices
    get ``base**1, base**2, ...``, and stable vertices reached from unstable
    ones share the next power.  Each unstable edge then gains at least one
    factor ``1/base``.
    """
    if not 0 < zeta < 1:
        raise ValueError("zeta must lie strictly between 0 and 1")
    part = part or ens.partition(g)
    gu = part.unstable_subgraph
    try:
        topological_sort(gu)
    except CyclicGraph as exc:
        raise CyclicUnstableSubgraph(exc.cycle) from None

    rho = _max_factor(ens, gu.edges)
    exponents = {v: 0 for v in g.vertices}
    incident = {v for e in gu.edges for v in e}
    order = [v for v in topological_sort(gu) if v in incident]
    base = 1.0
    if rho is not None and rho >= 1:
        base = rho / zeta
        targets = {b for _, b in gu.edges}
        inner = [v for v in order if v in part.unstable and v in targets]
        for step, v in enumerate(inner, start=1):
            exponents[v] = step
        top = len(inner) + 1
        for v in order:
            if v in part.stable:
                exponents[v] = top
    bases = {v: ens.basis(v) * base ** exponents[v] for v in g.vertices if exponents[v]}
    scaled = ens.with_bases(bases) if bases else ens
    all_bases = {v: scaled.basis(v) for v in g.vertices if v in incident or v in bases}
    return RescaledEnsemble(
        bases=all_bases,
        exponents=exponents,
        base=base,
        rho=rho,
        rho_prime=_max_factor(scaled, gu.edges),
        alpha_prime=_max_factor(scaled, part.stable_subgraph.edges),
        order=order,
        ensemble=scaled,
    )


def certify_acyclic_rescaled(
    ens: SubsystemEnsemble,
    g: Digraph,
    part: SubgraphPartition | None,
    tau: float,
    eta: float,
    zeta: float = 0.99,
) -> StabilityCertificate:
    """Uniform dwell/flee thresholds after rescaling.

    ``tau`` must beat ``max ln||Q_j^-1 Q_i|| / lambda_i`` over edges leaving
    stable vertices and ``eta`` must stay below ``min -ln||Q_j^-1 Q_i|| / mu_i``
    over edges leaving unstable vertices.  A missing edge class leaves the
    corresponding time unconstrained.
    """
    _check_times(tau, eta)
    part = part or ens.partition(g)
    resc = rescale_eigenvectors(ens, g, part, zeta)
    q = resc.ensemble
    tau_terms = [transition_cost(q, i, j) / q.decay(i) for i, j in part.stable_subgraph.sorted_edges()]
    eta_terms = [-transition_cost(q, i, j) / q.growth(i) for i, j in part.unstable_subgraph.sorted_edges()]
    tau_thr = max(tau_terms, default=None)
    eta_thr = min(eta_terms, default=None)
    ineqs = []
    if tau_thr is not None:
        ineqs.append(Inequality("tau > dwell threshold", tau, tau_thr, ">"))
    if eta_thr is not None:
        ineqs.append(Inequality("eta < flee threshold", eta, eta_thr, "<"))
    consts = resc.to_dict()
    consts.update({"tau_threshold": tau_thr, "eta_threshold": eta_thr, "zeta": zeta})
    return StabilityCertificate(
        "acyclic-rescaled",
        ineqs,
        constants=consts,
        assumptions={"unstable_subgraph_acyclic": True},
        expression=(
            f"tau > {_fmt(tau_thr) if tau_thr is not None else '-inf'}, "
            f"eta < {_fmt(eta_thr) if eta_thr is not None else 'inf'}"
        ),
        warnings=list(ens.warnings)
        + ["dwell threshold taken over edges leaving stable subsystems, flee threshold over edges leaving unstable ones"],
    )


# ---------------------------------------------------------------------------
# commuting subsystems
# ---------------------------------------------------------------------------


def certify_commuting(
    ens: SubsystemEnsemble,
    g: Digraph,
    part: SubgraphPartition | None,
    tau: float,
    eta: float,
) -> StabilityCertificate:
    """Pairwise commuting, diagonalizable subsystems sharing one eigenbasis.

    All switch factors are 1 in the common basis, so each axis evolves on
    its own.  On a two-vertex ring with one stable and one unstable
    subsystem the test is ``max_i (alpha_i tau + beta_i eta) < 0`` with
    ``alpha``/``beta`` the real parts of the two diagonals.  On other graphs
    it is applied per simple loop and axis, summing the stable rates times
    ``tau`` and the positive parts of the unstable rates times ``eta``.
    """
    _check_times(tau, eta)
    part = part or ens.partition(g)
    res = check_pairwise_commuting(ens)
    if not res.commuting:
        raise NotCommuting(f"subsystem matrices do not commute (relative commutator {res.max_commutator:.3g})")
    if res.common_basis is None:
        raise DefectiveEndpoint("*", "a common diagonalizing basis")
    diag = common_diagonals(ens, res.common_basis).real
    two_ring = is_unidirectional_ring(g) and g.k == 2 and len(part.stable) == 1
    ineqs, consts = [], {}
    if two_ring:
        (s,) = part.stable
        (u,) = part.unstable
        alpha, beta = diag[s - 1], diag[u - 1]
        vals = alpha * tau + beta * eta
        ineqs.append(Inequality("max_i(alpha_i*tau + beta_i*eta) < 0", float(vals.max()), 0.0))
        consts = {"alpha": alpha.tolist(), "beta": beta.tolist(), "axis_values": vals.tolist()}
    else:
        loops = enumerate_simple_loops(g)
        if not loops:
            raise HypothesisViolation("graph has no loop")
        for loop in loops:
            st, un = _loop_rates(ens, part, loop)
            vals = sum((diag[r - 1] * tau for r in st), np.zeros(ens.dim)) + sum(
                (np.maximum(diag[r - 1], 0.0) * eta for r in un), np.zeros(ens.dim)
            )
            ineqs.append(Inequality(f"loop {loop}", float(vals.max()), 0.0))
            consts[str(loop)] = vals.tolist()
    return StabilityCertificate(
        "commuting",
        ineqs,
        constants=consts,
        assumptions={"pairwise_commuting": True, "two_vertex_ring": two_ring},
        warnings=list(ens.warnings),
    )

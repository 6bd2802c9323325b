"""Exact simulation, the eigenbasis envelope, and Monte Carlo certificate checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .digraph import Digraph, SimpleLoop, SubgraphPartition
from .errors import DefectiveEndpoint, DimensionMismatch, InadmissibleSignal
from .signal import (
    SwitchingSignal,
    check_admissible,
    standard_decomposition,
    synthesize_signal,
)
from .spectral import SubsystemEnsemble, matrix_exponential, rho_graph, transition_cost

#: relative slack of the envelope comparison
ENVELOPE_RTOL = 1e-8
#: a trial decays when its fitted log-norm slope is below ``-SLOPE_SLACK``
SLOPE_SLACK = 1e-6


@dataclass
class Trajectory:
    """Sampled solution plus exact states at the switch times.

    ``switch_log_norms[m]`` is ``ln ||x(t_m)||`` carried through a
    renormalized propagation, so it stays finite on long runs where the
    state itself underflows.
    """

    times: np.ndarray
    states: np.ndarray
    modes: np.ndarray
    switch_times: np.ndarray
    switch_states: np.ndarray
    switch_log_norms: np.ndarray

    @property
    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.states, axis=1) if len(self.states) else np.zeros(0)

    @property
    def switch_norms(self) -> np.ndarray:
        return np.exp(self.switch_log_norms)

    def to_dict(self) -> dict:
        return {
            "switch_times": self.switch_times.tolist(),
            "switch_log_norms": [float(v) for v in self.switch_log_norms],
            "final_state": self.switch_states[-1].real.tolist(),
        }

    def to_csv(self) -> str:
        n = self.states.shape[1]
        lines = [",".join(["t", "mode", "norm"] + [f"x{i}" for i in range(1, n + 1)])]
        for t, m, x in zip(self.times, self.modes, self.states):
            row = [repr(float(t)), str(int(m)), repr(float(np.linalg.norm(x)))]
            row += [repr(float(v)) for v in x]
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"


def _check_x0(ens: SubsystemEnsemble, x0) -> np.ndarray:
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (ens.dim,):
        raise DimensionMismatch(f"initial state has shape {x0.shape}, expected ({ens.dim},)")
    return x0


def simulate(
    ens: SubsystemEnsemble,
    sig: SwitchingSignal,
    x0,
    samples_per_interval: int = 20,
    g: Digraph | None = None,
) -> Trajectory:
    """Propagate ``x0`` through the signal with exact interval propagators.

    Mode ``sigma_m`` is active on ``[t_{m-1}, t_m)``.  With
    ``samples_per_interval = s > 0`` each interval is sampled at ``s``
    equally spaced points starting at its left end, plus the final time.
    Passing ``g`` also checks admissibility.
    """
    x0 = _check_x0(ens, x0)
    if samples_per_interval < 0:
        raise ValueError("samples_per_interval must be nonnegative")
    if g is not None:
        adm = check_admissible(sig, g)
        if not adm:
            raise InadmissibleSignal(adm.message)
    bad = [m for m in set(sig.modes) if m not in ens.indices]
    if bad:
        raise DimensionMismatch(f"signal uses modes {sorted(bad)} outside 1..{len(ens)}")

    nrm0 = float(np.linalg.norm(x0))
    direction = x0 / nrm0 if nrm0 > 0 else x0.copy()
    log_norm = math.log(nrm0) if nrm0 > 0 else -math.inf
    switch_dirs = [direction]
    switch_logs = [log_norm]
    times, states, modes = [], [], []
    t0 = 0.0
    for mode, d in zip(sig.modes, sig.durations):
        a = ens[mode].matrix
        scale = math.exp(log_norm) if nrm0 > 0 else 0.0
        for j in range(samples_per_interval):
            s = d * j / samples_per_interval
            times.append(t0 + s)
            states.append(scale * (matrix_exponential(a, s) @ direction))
            modes.append(mode)
        y = matrix_exponential(a, d) @ direction
        ny = float(np.linalg.norm(y))
        if nrm0 > 0 and ny > 0:
            direction = y / ny
            log_norm += math.log(ny)
        else:
            direction = np.zeros_like(direction)
            log_norm = -math.inf
        switch_dirs.append(direction)
        switch_logs.append(log_norm)
        t0 += d
    logs = np.array(switch_logs)
    with np.errstate(under="ignore"):
        switch_states = np.array([v * math.exp(lg) if lg > -math.inf else v * 0 for v, lg in zip(switch_dirs, logs)])
    if samples_per_interval:
        times.append(t0)
        states.append(switch_states[-1])
        modes.append(sig.modes[-1])
    return Trajectory(
        times=np.array(times),
        states=np.array(states).reshape(len(states), ens.dim),
        modes=np.array(modes, dtype=int),
        switch_times=sig.switch_times,
        switch_states=switch_states,
        switch_log_norms=logs,
    )


# ---------------------------------------------------------------------------
# envelope
# ---------------------------------------------------------------------------


@dataclass
class InstanceTerm:
    loop: SimpleLoop
    edge_indices: tuple[int, ...]
    exact: float
    bound: float | None

    def to_dict(self) -> dict:
        return {
            "loop": list(self.loop.vertices),
            "edges": list(self.edge_indices),
            "exact": self.exact,
            "bound": self.bound,
        }


@dataclass
class Redistribution:
    """``ln a_n`` split over the standard decomposition of the first ``n`` modes.

    ``exact`` terms use each mode's own rate, so ``sum(exact) + residual``
    reproduces ``log_a`` up to rounding.  ``bound`` terms replace every
    rate on an instance by the loop's slowest decay and therefore dominate
    the exact terms (all-stable loops only).
    """

    n: int
    log_a: float
    residual: float
    instances: list[InstanceTerm]
    counts: dict[str, int]

    @property
    def loop_sum(self) -> float:
        return float(math.fsum(t.exact for t in self.instances))

    @property
    def identity_error(self) -> float:
        return abs(self.loop_sum + self.residual - self.log_a)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "log_a": self.log_a,
            "residual": self.residual,
            "loop_sum": self.loop_sum,
            "instances": [t.to_dict() for t in self.instances],
            "counts": dict(self.counts),
        }


@dataclass
class EnvelopeSeries:
    """``log_a[m-1] = ln a_m`` for ``m = 1..N`` (so ``log_a[0] = 0``).

    ``a_m`` multiplies the switch factors and eigenvalue growth of the first
    ``m - 1`` intervals; ``rho * a_m * ||x0||`` bounds ``||x(t_{m-1})||``.
    """

    log_a: np.ndarray
    rho: float
    step_terms: np.ndarray
    final_rate: float
    final_duration: float
    redistribution: Redistribution
    _sig: SwitchingSignal = field(repr=False)
    _graph: Digraph = field(repr=False)
    _ens: SubsystemEnsemble = field(repr=False)

    @property
    def log_bound_final(self) -> float:
        """``ln`` of the bound on ``||x(t_N)|| / ||x0||``."""
        return math.log(self.rho) + float(self.log_a[-1]) + self.final_rate * self.final_duration

    @property
    def residual(self) -> float:
        return self.redistribution.residual

    def redistribute(self, n: int) -> Redistribution:
        return _redistribute(self._ens, self._graph, self._sig, n, self.log_a[n - 1])

    def to_dict(self) -> dict:
        return {
            "rho": self.rho,
            "log_a": [float(v) for v in self.log_a],
            "log_bound_final": self.log_bound_final,
            "redistribution": self.redistribution.to_dict(),
        }


def _require_diagonalizable(ens, modes):
    for m in sorted(set(modes)):
        if ens[m].defective:
            raise DefectiveEndpoint(m, "a diagonal envelope (eigenvalue growth bound)")


def _redistribute(ens, g, sig, n, log_a_n) -> Redistribution:
    prefix = sig.prefix(n)
    dec = standard_decomposition(prefix, g)

    def term(idx: int) -> float:
        r, s = sig.edge(idx)
        return transition_cost(ens, r, s) + ens.rate(r) * sig.durations[idx - 1]

    instances = []
    for inst in dec.instances:
        exact = math.fsum(term(i) for i in inst.edge_indices)
        sources = [sig.modes[i - 1] for i in inst.edge_indices]
        bound = None
        if all(ens[m].is_stable for m in sources):
            lam_c = min(ens.decay(m) for m in sources)
            cost = math.fsum(transition_cost(ens, *sig.edge(i)) for i in inst.edge_indices)
            bound = cost - lam_c * inst.total_time
        instances.append(InstanceTerm(inst.loop, tuple(inst.edge_indices), exact, bound))
    residual = math.fsum(term(i) for i in dec.residual_edges)
    counts = {str(loop): c for loop, c in dec.counts().items()}
    return Redistribution(n, float(log_a_n), residual, instances, counts)


def envelope(ens: SubsystemEnsemble, g: Digraph, sig: SwitchingSignal) -> EnvelopeSeries:
    """Log-space envelope ``ln a_m`` along the signal, with the per-loop split."""
    adm = check_admissible(sig, g)
    if not adm:
        raise InadmissibleSignal(adm.message)
    _require_diagonalizable(ens, sig.modes)
    n = len(sig)
    steps = np.array(
        [transition_cost(ens, *sig.edge(j)) + ens.rate(sig.modes[j - 1]) * sig.durations[j - 1] for j in range(1, n)]
    )
    log_a = np.concatenate([[0.0], np.cumsum(steps)]) if n > 1 else np.zeros(1)
    rho = rho_graph(ens, g)
    red = _redistribute(ens, g, sig, n, log_a[-1])
    return EnvelopeSeries(
        log_a=log_a,
        rho=rho,
        step_terms=steps,
        final_rate=ens.rate(sig.modes[-1]),
        final_duration=sig.durations[-1],
        redistribution=red,
        _sig=sig,
        _graph=g,
        _ens=ens,
    )


@dataclass
class EnvelopeCheck:
    holds: bool
    log_norms: np.ndarray
    log_bounds: np.ndarray
    worst_gap: float

    def __bool__(self) -> bool:
        return self.holds

    def to_dict(self) -> dict:
        return {
            "holds": self.holds,
            "worst_gap": self.worst_gap,
            "log_norms": [float(v) for v in self.log_norms],
            "log_bounds": [float(v) for v in self.log_bounds],
        }


def envelope_check(ens: SubsystemEnsemble, g: Digraph, sig: SwitchingSignal, x0) -> EnvelopeCheck:
    """Compare ``||x(t_m)||`` with ``rho * a_{m+1} * ||x0||`` at every switch time.

    The last state ``x(t_N)`` is compared with the bound carried through
    the final interval.  ``worst_gap`` is the largest
    ``ln ||x|| - ln bound``; the check allows a relative slack of 1e-8.
    """
    x0 = _check_x0(ens, x0)
    env = envelope(ens, g, sig)
    traj = simulate(ens, sig, x0, samples_per_interval=0)
    log_x0 = math.log(np.linalg.norm(x0)) if np.any(x0) else -math.inf
    bounds = np.concatenate([math.log(env.rho) + env.log_a, [env.log_bound_final]]) + log_x0
    norms = traj.switch_log_norms
    if log_x0 == -math.inf:
        return EnvelopeCheck(True, norms, bounds, -math.inf)
    gaps = norms - bounds
    return EnvelopeCheck(bool(np.all(gaps <= math.log1p(ENVELOPE_RTOL))), norms, bounds, float(gaps.max()))


# ---------------------------------------------------------------------------
# Monte Carlo validation
# ---------------------------------------------------------------------------


def decay_slope(traj: Trajectory) -> float:
    """Least-squares slope of ``ln ||x(t_m)||`` against ``t_m`` over the last half of the switches."""
    t = traj.switch_times[1:]
    y = traj.switch_log_norms[1:]
    h = len(t) // 2
    t, y = t[h:], y[h:]
    if len(t) < 2 or not np.all(np.isfinite(y)):
        return -math.inf if np.any(np.isneginf(y)) else 0.0
    return float(np.polyfit(t, y, 1)[0])


@dataclass
class TrialResult:
    trial: int
    slope: float
    log_norm_ratio: float
    modes: list[int]

    @property
    def passed(self) -> bool:
        return self.slope < -SLOPE_SLACK and self.log_norm_ratio < 0

    def to_dict(self) -> dict:
        return {
            "trial": self.trial,
            "slope": self.slope,
            "log_norm_ratio": self.log_norm_ratio,
            "passed": self.passed,
        }


@dataclass
class ValidationReport:
    criterion: str | None
    verdict: str | None
    trials: list[TrialResult]

    @property
    def passed(self) -> bool:
        return bool(self.trials) and all(t.passed for t in self.trials)

    @property
    def max_slope(self) -> float:
        return max(t.slope for t in self.trials)

    def to_dict(self) -> dict:
        return {
            "criterion": self.criterion,
            "certificate_verdict": self.verdict,
            "result": "PASS" if self.passed else "FAIL",
            "max_slope": self.max_slope,
            "trials": [t.to_dict() for t in self.trials],
        }


def validate_certificate(
    ens: SubsystemEnsemble,
    g: Digraph,
    cert,
    spec,
    trials: int = 50,
    horizon: int = 200,
    seed: int = 0,
    part: SubgraphPartition | None = None,
) -> ValidationReport:
    """Simulate ``trials`` random class members from random unit initial states.

    Trial ``i`` draws from its own stream spawned from ``seed``, so results
    do not depend on evaluation order.  PASS requires every trial to have a
    negative terminal slope and to end below its initial norm.  A FAIL on a
    certified instance would contradict the certificate; on an uncertified
    one it is merely informative.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    if part is None and any(not ens[v].is_stable for v in g.vertices):
        part = ens.partition(g)
    results = []
    for i, child in enumerate(np.random.SeedSequence(seed).spawn(trials)):
        rng = np.random.default_rng(child)
        sig = synthesize_signal(g, spec, horizon, rng, part=part)
        x0 = rng.standard_normal(ens.dim)
        x0 /= np.linalg.norm(x0)
        traj = simulate(ens, sig, x0, samples_per_interval=0)
        results.append(TrialResult(i, decay_slope(traj), float(traj.switch_log_norms[-1]), list(sig.modes)))
    return ValidationReport(
        getattr(cert, "criterion", None), getattr(cert, "verdict", None), results
    )

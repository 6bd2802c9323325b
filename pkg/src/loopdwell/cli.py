"""Command-line interface: ``loopdwell <command> CONFIG [options]``.

The config is a JSON document; see README.md for the schema.  A
machine-readable report goes to stdout (or ``--output``) and a short human
summary goes to stderr unless ``--quiet`` is given.

Exit codes: 0 success or Certified, 1 NotCertified (or a failed Monte Carlo
validation), 2 input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .certify import (
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
)
from .digraph import (
    Digraph,
    SubgraphPartition,
    enumerate_simple_loops,
    loop_count_bound,
    validate_hypotheses,
)
from .errors import LoopDwellError, NumericalFailure, SchemaError
from .signal import (
    Dwell,
    DwellFlee,
    LoopwiseDwellFlee,
    SimpleLoopDwell,
    SwitchingSignal,
    standard_decomposition,
    synthesize_signal,
)
from .simulate import envelope_check, simulate, validate_certificate
from .spectral import SubsystemEnsemble, Tolerances

EXIT_OK, EXIT_NOT_CERTIFIED, EXIT_INPUT, EXIT_NUMERICAL = 0, 1, 2, 3

CRITERIA = (
    "simple-loop-dwell",
    "loop-aggregate",
    "ring-uniform",
    "ring-loopwise",
    "bipartite",
    "general-uniform",
    "general-loopwise",
    "switch-count",
    "acyclic-rescaled",
    "commuting",
)

# signal class each criterion reads its parameters from
_CRITERION_CLASS = {
    "simple-loop-dwell": SimpleLoopDwell,
    "ring-uniform": DwellFlee,
    "ring-loopwise": LoopwiseDwellFlee,
    "bipartite": DwellFlee,
    "general-uniform": DwellFlee,
    "general-loopwise": LoopwiseDwellFlee,
    "switch-count": DwellFlee,
    "acyclic-rescaled": DwellFlee,
    "commuting": DwellFlee,
}

_VARIANTS = {
    "dwell": (Dwell, ("tau",)),
    "simple-loop-dwell": (SimpleLoopDwell, ("taus",)),
    "dwell-flee": (DwellFlee, ("tau", "eta")),
    "loopwise-dwell-flee": (LoopwiseDwellFlee, ("taus", "etas")),
}


# ---------------------------------------------------------------------------
# config
# ---------------------------------------------------------------------------


@dataclass
class ProblemConfig:
    graph: Digraph
    systems: list[np.ndarray] | None = None
    partition_stable: frozenset[int] | None = None
    signal: SwitchingSignal | None = None
    class_spec: Any = None
    aggregate_loops: list[tuple[list[int], float]] | None = None
    zeta: float = 0.99
    tolerances: Tolerances = field(default_factory=Tolerances)
    defective: str = "reject"
    seed: int = 0
    x0: np.ndarray | None = None


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _need(obj: dict, key: str, path: str):
    if key not in obj:
        raise SchemaError(f"{path}.{key}" if path else key, "required key is missing")
    return obj[key]


def _int(v, path, lo=None, hi=None) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise SchemaError(path, f"expected an integer, got {v!r}")
    if (lo is not None and v < lo) or (hi is not None and v > hi):
        rng = f"{lo}..{hi}" if hi is not None else f">= {lo}"
        raise SchemaError(path, f"{v} is outside {rng}")
    return v


def _positive(v, path) -> float:
    if not _is_number(v) or not v > 0:
        raise SchemaError(path, f"expected a positive number, got {v!r}")
    return float(v)


def _positive_list(v, path) -> list[float]:
    if not isinstance(v, list) or not v:
        raise SchemaError(path, "expected a nonempty array of positive numbers")
    return [_positive(x, f"{path}[{i}]") for i, x in enumerate(v)]


def _parse_graph(raw) -> Digraph:
    if not isinstance(raw, dict):
        raise SchemaError("graph", "expected an object with keys k and edges")
    k = _int(_need(raw, "k", "graph"), "graph.k", lo=1)
    edges = _need(raw, "edges", "graph")
    if not isinstance(edges, list):
        raise SchemaError("graph.edges", "expected an array of [i, j] pairs")
    seen = set()
    for idx, e in enumerate(edges):
        path = f"graph.edges[{idx}]"
        if not isinstance(e, list) or len(e) != 2:
            raise SchemaError(path, "expected a pair [i, j]")
        pair = tuple(_int(v, path, lo=1, hi=k) for v in e)
        if pair in seen:
            raise SchemaError(path, f"duplicate edge {list(pair)}")
        seen.add(pair)
    return Digraph(k, seen)


def _parse_matrix(raw, n, path) -> np.ndarray:
    if not isinstance(raw, list) or not raw:
        raise SchemaError(path, "expected a matrix as a nested or flat row-major array")
    if all(isinstance(r, list) for r in raw):
        rows = len(raw)
        for i, r in enumerate(raw):
            if len(r) != rows:
                raise SchemaError(f"{path}[{i}]", f"row has {len(r)} entries, matrix needs {rows}")
        flat = [x for r in raw for x in r]
        size = rows
    else:
        flat = raw
        size = n if n is not None else math.isqrt(len(raw))
        if size * size != len(raw):
            raise SchemaError(path, f"flat array of length {len(raw)} is not {size}x{size}")
    for i, x in enumerate(flat):
        if not _is_number(x):
            raise SchemaError(path, f"entry {i} is not a finite number: {x!r}")
    if n is not None and size != n:
        raise SchemaError(path, f"matrix is {size}x{size} but n = {n}")
    return np.array(flat, dtype=float).reshape(size, size)


def _parse_class(raw):
    if not isinstance(raw, dict):
        raise SchemaError("class", "expected an object with keys variant and params")
    variant = _need(raw, "variant", "class")
    if variant not in _VARIANTS:
        raise SchemaError("class.variant", f"unknown variant {variant!r}; expected one of {sorted(_VARIANTS)}")
    cls, keys = _VARIANTS[variant]
    params = _need(raw, "params", "class")
    if not isinstance(params, dict):
        raise SchemaError("class.params", "expected an object")
    args = []
    for key in keys:
        path = f"class.params.{key}"
        value = _need(params, key, "class.params")
        args.append(tuple(_positive_list(value, path)) if key.endswith("s") else _positive(value, path))
    try:
        return cls(*args)
    except ValueError as exc:
        raise SchemaError("class.params", str(exc)) from None


def parse_config(text: str) -> ProblemConfig:
    """Validate a JSON config; the first problem found raises :class:`SchemaError`."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("$", f"invalid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise SchemaError("$", "config must be a JSON object")
    g = _parse_graph(_need(raw, "graph", ""))
    cfg = ProblemConfig(graph=g)

    n = raw.get("n")
    if n is not None:
        n = _int(n, "n", lo=1)
    if "systems" in raw:
        systems = raw["systems"]
        if not isinstance(systems, list):
            raise SchemaError("systems", "expected an array of matrices")
        if len(systems) != g.k:
            raise SchemaError("systems", f"{len(systems)} matrices for a graph with {g.k} vertices")
        mats = [_parse_matrix(m, n, f"systems[{i}]") for i, m in enumerate(systems)]
        sizes = {m.shape[0] for m in mats}
        if len(sizes) > 1:
            i = next(i for i, m in enumerate(mats) if m.shape != mats[0].shape)
            raise SchemaError(f"systems[{i}]", f"all matrices must share one size, found {sorted(sizes)}")
        cfg.systems = mats

    if "partition" in raw:
        part = raw["partition"]
        stable = _need(part, "stable", "partition") if isinstance(part, dict) else None
        if not isinstance(stable, list):
            raise SchemaError("partition.stable", "expected an array of vertex indices")
        cfg.partition_stable = frozenset(
            _int(v, f"partition.stable[{i}]", lo=1, hi=g.k) for i, v in enumerate(stable)
        )

    if "signal" in raw:
        sig = raw["signal"]
        if not isinstance(sig, dict):
            raise SchemaError("signal", "expected an object with modes and durations")
        modes = _need(sig, "modes", "signal")
        durations = _need(sig, "durations", "signal")
        if not isinstance(modes, list) or not modes:
            raise SchemaError("signal.modes", "expected a nonempty array of vertex indices")
        modes = [_int(m, f"signal.modes[{i}]", lo=1, hi=g.k) for i, m in enumerate(modes)]
        if not isinstance(durations, list) or len(durations) != len(modes):
            raise SchemaError("signal.durations", "expected one positive duration per mode")
        durations = [_positive(d, f"signal.durations[{i}]") for i, d in enumerate(durations)]
        cfg.signal = SwitchingSignal(modes, durations)

    if "class" in raw:
        cfg.class_spec = _parse_class(raw["class"])

    if "aggregate_loops" in raw:
        loops = raw["aggregate_loops"]
        if not isinstance(loops, list):
            raise SchemaError("aggregate_loops", "expected an array of {vertices, time}")
        parsed = []
        for i, item in enumerate(loops):
            path = f"aggregate_loops[{i}]"
            if not isinstance(item, dict):
                raise SchemaError(path, "expected an object with vertices and time")
            vs = _need(item, "vertices", path)
            if not isinstance(vs, list) or not vs:
                raise SchemaError(f"{path}.vertices", "expected a nonempty array")
            vs = [_int(v, f"{path}.vertices[{j}]", lo=1, hi=g.k) for j, v in enumerate(vs)]
            parsed.append((vs, _positive(_need(item, "time", path), f"{path}.time")))
        cfg.aggregate_loops = parsed

    if "zeta" in raw:
        z = raw["zeta"]
        if not _is_number(z) or not 0 < z < 1:
            raise SchemaError("zeta", f"expected a number strictly between 0 and 1, got {z!r}")
        cfg.zeta = float(z)

    if "tolerances" in raw:
        tol = raw["tolerances"]
        if not isinstance(tol, dict):
            raise SchemaError("tolerances", "expected an object")
        known = Tolerances().to_dict()
        for key, value in tol.items():
            if key not in known:
                raise SchemaError(f"tolerances.{key}", f"unknown tolerance; expected one of {sorted(known)}")
            _positive(value, f"tolerances.{key}")
        cfg.tolerances = Tolerances(**{k: float(v) for k, v in tol.items()})

    if "defective" in raw:
        if raw["defective"] not in ("reject", "jordan"):
            raise SchemaError("defective", "expected 'reject' or 'jordan'")
        cfg.defective = raw["defective"]

    if "seed" in raw:
        cfg.seed = _int(raw["seed"], "seed", lo=0)

    if "x0" in raw:
        x0 = raw["x0"]
        if not isinstance(x0, list) or not all(_is_number(v) for v in x0):
            raise SchemaError("x0", "expected an array of numbers")
        cfg.x0 = np.array(x0, dtype=float)
    return cfg


def load_config(path: str) -> ProblemConfig:
    text = sys.stdin.read() if path == "-" else Path(path).read_text(encoding="utf-8")
    return parse_config(text)


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


def _clean(obj):
    """Make ``obj`` strict-JSON friendly: plain types, non-finite floats as null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": _clean(obj.real), "im": _clean(obj.imag)}
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


@dataclass
class Report:
    command: str
    exit_code: int
    result: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    error: dict | None = None
    human: list[str] = field(default_factory=list, compare=False, repr=False)

    def to_dict(self) -> dict:
        return _clean(
            {
                "command": self.command,
                "exit_code": self.exit_code,
                "result": self.result,
                "warnings": list(self.warnings),
                "error": self.error,
                "version": __version__,
            }
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Report":
        raw = json.loads(text)
        return cls(raw["command"], raw["exit_code"], raw["result"], raw["warnings"], raw["error"])


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


@dataclass
class _Context:
    cfg: ProblemConfig
    args: argparse.Namespace
    warnings: list[str] = field(default_factory=list)
    human: list[str] = field(default_factory=list)

    def warn(self, messages):
        for m in messages:
            if m not in self.warnings:
                self.warnings.append(m)

    def ensemble(self) -> SubsystemEnsemble:
        if self.cfg.systems is None:
            raise SchemaError("systems", "this command needs subsystem matrices")
        policy = None if self.cfg.defective == "reject" else "jordan"
        ens = SubsystemEnsemble.from_matrices(self.cfg.systems, self.cfg.tolerances, policy)
        self.warn(ens.warnings)
        return ens

    def partition(self, ens: SubsystemEnsemble) -> SubgraphPartition:
        part = ens.partition(self.cfg.graph)
        if self.cfg.partition_stable is not None and self.cfg.partition_stable != part.stable:
            raise SchemaError(
                "partition.stable",
                f"{sorted(self.cfg.partition_stable)} does not match the eigenvalue-derived "
                f"stable set {sorted(part.stable)}",
            )
        return part

    def signal(self) -> SwitchingSignal:
        if self.cfg.signal is None:
            raise SchemaError("signal", "this command needs a signal")
        return self.cfg.signal

    def class_spec(self, expected=None):
        spec = self.cfg.class_spec
        if spec is None:
            raise SchemaError("class", "this command needs a signal class")
        if expected is not None and not isinstance(spec, expected):
            name = next(v for v, (c, _) in _VARIANTS.items() if c is expected)
            raise SchemaError("class.variant", f"criterion {self.args.criterion} reads its parameters from variant {name!r}")
        return spec


def _g(x) -> str:
    return "n/a" if x is None else f"{x:.6g}"


def _cmd_loops(ctx: _Context) -> tuple[dict, int]:
    g = ctx.cfg.graph
    loops = enumerate_simple_loops(g)
    part = ctx.partition(ctx.ensemble()) if ctx.cfg.systems is not None else None
    hyp = validate_hypotheses(g, part)
    ctx.human.append(f"{len(loops)} simple loop(s); trace bound {loop_count_bound(g)}")
    ctx.human += [f"  s{i}: {s}" for i, s in enumerate(loops, start=1)]
    return {
        "loops": [list(s.vertices) for s in loops],
        "count": len(loops),
        "trace_bound": loop_count_bound(g),
        "hypotheses": hyp.to_dict(),
    }, EXIT_OK


def _cmd_decompose(ctx: _Context) -> tuple[dict, int]:
    dec = standard_decomposition(ctx.signal(), ctx.cfg.graph)
    for inst in dec.instances:
        ctx.human.append(f"loop {inst.loop} via edges {list(inst.edge_indices)}, time {_g(inst.total_time)}")
    ctx.human.append(f"residual edges {list(dec.residual_edges)}")
    return dec.to_dict(), EXIT_OK


def _cmd_bounds(ctx: _Context) -> tuple[dict, int]:
    ens = ctx.ensemble()
    report = classical_bounds(ens, ctx.cfg.graph, ctx.partition(ens))
    ctx.warn(report.warnings)
    out = report.to_dict()
    if ctx.cfg.aggregate_loops:
        out["nu_C"] = [
            {"vertices": vs, "nu": nu_loop(ens, vs)} for vs, _ in ctx.cfg.aggregate_loops
        ]
    for lb in report.loops:
        ctx.human.append(f"loop {lb.loop}: nu={_g(lb.nu)} cycle ratio={_g(lb.cycle_ratio)}")
    ctx.human.append(f"mu_G={_g(report.mu_G)} rho*={_g(report.rho_star)} rho2*={_g(report.rho2_star)} rho={_g(report.rho)}")
    return out, EXIT_OK


def _certificate(ctx: _Context, criterion: str) -> StabilityCertificate:
    ens = ctx.ensemble()
    g = ctx.cfg.graph
    part = ctx.partition(ens)
    if criterion == "loop-aggregate":
        if not ctx.cfg.aggregate_loops:
            raise SchemaError("aggregate_loops", "criterion loop-aggregate needs promised loop times")
        return certify_loop_aggregate(ens, g, ctx.cfg.aggregate_loops)
    spec = ctx.class_spec(_CRITERION_CLASS[criterion])
    if criterion == "simple-loop-dwell":
        return certify_simple_loop_dwell(ens, g, spec.taus)
    if criterion == "ring-uniform":
        return certify_ring_uniform(ens, g, spec.tau, spec.eta, part)
    if criterion == "ring-loopwise":
        if len(spec.taus) != 1:
            raise SchemaError("class.params.taus", "a ring has one loop; give one (tau, eta) pair")
        return certify_ring_loopwise(ens, g, spec.taus[0], spec.etas[0], part)
    if criterion == "bipartite":
        return certify_bipartite(ens, g, part, spec.tau, spec.eta)
    if criterion == "general-uniform":
        return certify_general_uniform(ens, g, part, spec.tau, spec.eta)
    if criterion == "general-loopwise":
        return certify_general_loopwise(ens, g, part, spec.taus, spec.etas)
    if criterion == "switch-count":
        return certify_switch_count(ens, g, part, spec.tau, spec.eta, ctx.signal(), ctx.args.horizon)
    if criterion == "acyclic-rescaled":
        return certify_acyclic_rescaled(ens, g, part, spec.tau, spec.eta, ctx.cfg.zeta)
    return certify_commuting(ens, g, part, spec.tau, spec.eta)


def _summarize(ctx: _Context, cert: StabilityCertificate):
    ctx.human.append(f"{cert.criterion}: {cert.verdict} (margin {_g(cert.margin)})")
    if cert.expression:
        ctx.human.append(f"  {cert.expression}")
    for q in cert.inequalities:
        mark = "ok " if q.holds else "FAIL"
        ctx.human.append(f"  [{mark}] {q.label}: {_g(q.lhs)} {q.sense} {_g(q.rhs)} (margin {_g(q.margin)})")


def _cmd_certify(ctx: _Context) -> tuple[dict, int]:
    cert = _certificate(ctx, ctx.args.criterion)
    ctx.warn(cert.warnings)
    _summarize(ctx, cert)
    return cert.to_dict(), EXIT_OK if cert.certified else EXIT_NOT_CERTIFIED


def _cmd_simulate(ctx: _Context) -> tuple[dict, int]:
    ens = ctx.ensemble()
    sig = ctx.signal()
    x0 = ctx.cfg.x0 if ctx.cfg.x0 is not None else np.ones(ens.dim)
    traj = simulate(ens, sig, x0, ctx.args.samples, ctx.cfg.graph)
    out = {"trajectory": traj.to_dict()}
    if ctx.args.trace:
        with open(ctx.args.trace, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(traj.to_csv())
        out["trace"] = ctx.args.trace
    try:
        chk = envelope_check(ens, ctx.cfg.graph, sig, x0)
        out["envelope"] = chk.to_dict()
        ctx.human.append(f"envelope {'holds' if chk.holds else 'VIOLATED'} (worst log gap {_g(chk.worst_gap)})")
    except NumericalFailure as exc:
        ctx.warn([f"envelope skipped: {exc}"])
    ctx.human.append(
        f"{len(sig)} intervals, final time {_g(traj.switch_times[-1])}, "
        f"ln||x(T)||/||x0|| = {_g(traj.switch_log_norms[-1] - traj.switch_log_norms[0])}"
    )
    return out, EXIT_OK


def _cmd_validate(ctx: _Context) -> tuple[dict, int]:
    criterion = ctx.args.criterion
    if criterion == "loop-aggregate":
        raise SchemaError("class", "loop-aggregate promises hold for chosen loops only; no class to sample from")
    cert = _certificate(ctx, criterion)
    ctx.warn(cert.warnings)
    _summarize(ctx, cert)
    ens = ctx.ensemble()
    part = ctx.partition(ens)
    rep = validate_certificate(
        ens, ctx.cfg.graph, cert, ctx.cfg.class_spec, ctx.args.trials, ctx.args.horizon or 200, ctx.cfg.seed, part
    )
    ctx.human.append(f"Monte Carlo: {'PASS' if rep.passed else 'FAIL'} over {len(rep.trials)} trials (max slope {_g(rep.max_slope)})")
    code = EXIT_OK if cert.certified and rep.passed else EXIT_NOT_CERTIFIED
    return {"certificate": cert.to_dict(), "validation": rep.to_dict()}, code


def _cmd_synth(ctx: _Context) -> tuple[dict, int]:
    spec = ctx.class_spec()
    part = None
    if isinstance(spec, (DwellFlee, LoopwiseDwellFlee)):
        part = ctx.partition(ctx.ensemble())
    sig = synthesize_signal(ctx.cfg.graph, spec, ctx.args.length, ctx.cfg.seed, part)
    ctx.human.append(f"synthesized {len(sig)} modes in class {spec.to_dict()['variant']}")
    return {"signal": sig.to_dict(), "class": spec.to_dict()}, EXIT_OK


COMMANDS = {
    "loops": _cmd_loops,
    "decompose": _cmd_decompose,
    "bounds": _cmd_bounds,
    "certify": _cmd_certify,
    "simulate": _cmd_simulate,
    "validate": _cmd_validate,
    "synth": _cmd_synth,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="JSON problem file, or - for stdin")
    common.add_argument("-o", "--output", help="write the JSON report here instead of stdout")
    common.add_argument("-q", "--quiet", action="store_true", help="no human summary on stderr")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--defective", choices=("reject", "jordan"), help="override the defective-matrix policy")

    parser = argparse.ArgumentParser(prog="loopdwell", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("loops", parents=[common], help="enumerate simple loops and check graph hypotheses")
    sub.add_parser("decompose", parents=[common], help="standard decomposition of the config signal")
    sub.add_parser("bounds", parents=[common], help="loop thresholds and classical dwell bounds")
    for name, text in (("certify", "evaluate one stability certificate"), ("validate", "certificate plus Monte Carlo simulation")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--criterion", required=True, choices=CRITERIA)
        p.add_argument("--horizon", type=int, help="switch-count horizon, or signal length for validate")
        if name == "validate":
            p.add_argument("--trials", type=int, default=50)
    p = sub.add_parser("simulate", parents=[common], help="exact simulation of the config signal")
    p.add_argument("--trace", help="write a CSV trace (t,mode,norm,x1..xn)")
    p.add_argument("--samples", type=int, default=20, help="samples per interval in the trace")
    p = sub.add_parser("synth", parents=[common], help="random signal in the config class")
    p.add_argument("--length", type=int, default=50)
    return parser


def run(argv: list[str] | None = None) -> Report:
    """Parse ``argv``, execute the command and return its report (no I/O besides files)."""
    args = build_parser().parse_args(argv)
    ctx = None
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.defective is not None:
            cfg.defective = args.defective
        ctx = _Context(cfg, args)
        result, code = COMMANDS[args.command](ctx)
        return Report(args.command, code, result, ctx.warnings, human=ctx.human)
    except NumericalFailure as exc:
        code = EXIT_NUMERICAL
        err = exc
    except (LoopDwellError, ValueError, OSError) as exc:
        code = EXIT_INPUT
        err = exc
    error = {"type": type(err).__name__, "message": str(err)}
    if isinstance(err, SchemaError):
        error["path"] = err.path
    kept = list(ctx.warnings) if ctx is not None else []
    return Report(args.command, code, {}, kept, error, human=[f"error ({type(err).__name__}): {err}"])


def main(argv: list[str] | None = None) -> int:
    report = run(argv)
    args = build_parser().parse_args(argv)
    text = report.to_json()
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if not args.quiet:
        lines = list(report.human) + [f"warning: {w}" for w in report.warnings]
        sys.stderr.write("\n".join(lines) + "\n")
    return report.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

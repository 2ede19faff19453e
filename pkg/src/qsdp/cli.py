"""Command-line front end: ``qsdp {gen,solve,sweep,gamma-probe}``.

Exit codes: 0 converged, 1 input error, 2 iteration limit, 3 diverged,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import io as qio
from .exceptions import InvalidInputError, QSDPError
from .herm import matrix_from_json
from .instances import FAMILIES, RANDOM_FAMILIES, InstanceSpec, build_instance
from .problem import gamma_probe
from .regularizers import REGISTRY, get_regularizer
from .solver import SolverConfig, Status, eps_sweep, solve

EXIT_CODES = {
    Status.CONVERGED: 0,
    Status.MAX_ITERS: 2,
    Status.DIVERGED: 3,
    Status.NUMERICAL_FAILURE: 4,
}
EXIT_INPUT = 1

log = logging.getLogger("qsdp")


def _param(text: str):
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    try:
        return key, json.loads(value)
    except json.JSONDecodeError:
        return key, value


def _ladder(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad epsilon ladder {text!r}") from None


def _add_solver_args(p: argparse.ArgumentParser):
    p.add_argument("--reg", choices=sorted(REGISTRY), default="vn")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-iters", type=int, default=10000)
    p.add_argument("--memory", type=int, default=10)
    p.add_argument("--divergence-norm", type=float, default=1e8)
    p.add_argument("--seed", type=int, help="overrides the seed of an instance spec")
    p.add_argument("--out-dir", type=Path, required=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qsdp", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a problem file from an instance family")
    g.add_argument("family", choices=[f for f in FAMILIES if f != "custom"])
    g.add_argument("--param", type=_param, action="append", default=[], metavar="KEY=VALUE")
    g.add_argument("--seed", type=int)
    g.add_argument("--out", type=Path, required=True)
    g.add_argument("--spec-out", type=Path, help="also write the instance spec here")

    s = sub.add_parser("solve", help="solve a problem file or instance spec")
    s.add_argument("input", type=Path)
    s.add_argument("--eps", type=float, help="override epsilon")
    _add_solver_args(s)

    w = sub.add_parser("sweep", help="warm-started solves along a descending epsilon ladder")
    w.add_argument("input", type=Path)
    w.add_argument("--eps-ladder", type=_ladder, required=True)
    w.add_argument("--traces", action="store_true", help="also write per-rung trace CSVs")
    _add_solver_args(w)

    gp = sub.add_parser("gamma-probe", help="sample eps * Tr[psi(W / eps)]")
    gp.add_argument("matrix", type=Path)
    gp.add_argument("--reg", choices=sorted(REGISTRY), default="vn")
    gp.add_argument("--eps-ladder", type=_ladder, required=True)
    gp.add_argument("--out", type=Path, help="CSV path (stdout when omitted)")
    return parser


def _config(args) -> SolverConfig:
    return SolverConfig(tol=args.tol, max_iters=args.max_iters, memory=args.memory,
                        divergence_norm=args.divergence_norm)


def _load(args):
    inputs = {str(args.input): qio.sha256_file(args.input)} if args.input.exists() else {}
    obj = qio.read_json(args.input)
    if isinstance(obj, dict) and "family" in obj:
        spec = InstanceSpec.from_json(obj)
        if args.seed is not None:
            spec = InstanceSpec(spec.family, spec.params, args.seed)
        inst = build_instance(spec)
    else:
        spec = None
        inst = qio.problem_from_json(obj)
    return inst.check(), spec, inputs


def cmd_gen(args) -> int:
    if args.family in RANDOM_FAMILIES and args.seed is None:
        raise InvalidInputError(f"family {args.family} is random; pass --seed")
    spec = InstanceSpec(args.family, dict(args.param), args.seed)
    inst = build_instance(spec)
    qio.write_json(args.out, qio.problem_to_json(inst))
    if args.spec_out:
        qio.write_json(args.spec_out, spec.to_json())
    return 0


def cmd_solve(args) -> int:
    inst, spec, inputs = _load(args)
    if args.eps is not None:
        inst = inst.with_epsilon(args.eps)
    cfg = _config(args)
    report = solve(inst, get_regularizer(args.reg), cfg)

    out = args.out_dir
    paths = [
        qio.write_json(out / "report.json", qio.report_to_json(report, inst)),
        qio.atomic_write(out / "trace.csv", qio.trace_csv(report.trace)),
    ]
    paths.append(out / "manifest.json")
    resolved = {"reg": args.reg, "epsilon": inst.epsilon, "solver": cfg.as_dict(),
                "spec": spec.to_json() if spec else None}
    qio.write_json(out / "manifest.json", qio.manifest(sys.argv, resolved, inputs, paths))
    log.info("%s after %d iterations, |grad| = %.3g", report.status.value, report.n_iters,
             report.final_grad_norm)
    return EXIT_CODES[report.status]


def cmd_sweep(args) -> int:
    inst, spec, inputs = _load(args)
    cfg = _config(args)
    rungs = eps_sweep(inst, get_regularizer(args.reg), args.eps_ladder, cfg)

    out = args.out_dir
    paths = []
    rows = []
    for k, rung in enumerate(rungs):
        rep = rung.report
        rows.append([float(rung.epsilon), float(rung.dual_value), float(rung.slackness),
                     float(rung.margin), rep.status.value])
        extra = {"slackness_residual": rung.slackness, "zero_temp_margin": rung.margin}
        payload = qio.report_to_json(rep, inst, extra)
        payload["config"] = {k2: v for k2, v in payload["config"].items() if k2 != "alpha0"}
        paths.append(qio.write_json(out / f"rung_{k:02d}.json", payload))
        if args.traces:
            paths.append(qio.atomic_write(out / f"rung_{k:02d}_trace.csv", qio.trace_csv(rep.trace)))
    paths.append(qio.atomic_write(out / "sweep.csv", qio.csv_text(qio.SWEEP_COLUMNS, rows)))
    paths.append(out / "manifest.json")
    resolved = {"reg": args.reg, "eps_ladder": args.eps_ladder, "solver": cfg.as_dict(),
                "spec": spec.to_json() if spec else None}
    qio.write_json(out / "manifest.json", qio.manifest(sys.argv, resolved, inputs, paths))
    return max(EXIT_CODES[r.report.status] for r in rungs)


def cmd_gamma_probe(args) -> int:
    obj = qio.read_json(args.matrix)
    w = matrix_from_json(obj)
    curve = gamma_probe(get_regularizer(args.reg), w, args.eps_ladder)
    text = qio.csv_text(("epsilon", "value"), ([float(e), float(v)] for e, v in curve))
    if args.out:
        qio.atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


COMMANDS = {"gen": cmd_gen, "solve": cmd_solve, "sweep": cmd_sweep, "gamma-probe": cmd_gamma_probe}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors, which would read as an iteration limit
        return EXIT_INPUT if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except QSDPError as exc:
        print(f"qsdp {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

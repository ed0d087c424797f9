"""Command-line entry point: ``qpathfinder {generate,solve,recommend,landscape}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import monitor
from .decompose import cluster_capacitated, subproblems
from .encode import SCALING_STRATEGIES, PENALTY_STRATEGIES, EncodingConfig
from .instances import generate_random, load_instance, write_instance
from .optimizers import METHODS, Objective, init_params
from .pathfinder import (
    CLASSICAL,
    DECOMPOSITIONS,
    DEFAULT_WEIGHTS,
    Budget,
    Caps,
    Settings,
    SolutionPath,
    build_energy,
    default_catalog,
    default_jobs,
    estimate_qubits,
    evaluate_path,
    path_seed,
    recommend,
    report_json,
)

log = logging.getLogger("qpathfinder")


class CliError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


def _positive_int(text):
    val = int(text)
    if val <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return val


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with defaults for any flag (same keys)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--force", action="store_true", help="overwrite existing output files")
    p.add_argument("-v", "--verbose", action="store_true")


def _add_instance(p):
    p.add_argument("--instance", required=True, help="instance file")
    p.add_argument("--format", default="native", choices=["native", "euc2d"])


def _add_run(p, single_path: bool):
    p.add_argument("--qubit-cap", type=int, default=20)
    p.add_argument("--max-evals", type=_positive_int, default=20_000,
                   help="objective evaluations per optimizer run")
    p.add_argument("--timeout", type=float, default=None, help="wall-clock seconds per optimizer run")
    p.add_argument("--lambda", dest="lam", type=float, default=1.2)
    p.add_argument("--bbox-factor", type=float, default=1.0)
    p.add_argument("--calibration", type=float, default=0.5)
    p.add_argument("--depth", type=int, default=None, help="override the recommended QAOA depth")
    if single_path:
        p.add_argument("--decomposition", default="cluster-first", choices=DECOMPOSITIONS)
        p.add_argument("--algorithm", default="qaoa", choices=("qaoa",) + CLASSICAL)
        p.add_argument("--penalty", default="exact-min-search", choices=PENALTY_STRATEGIES)
        p.add_argument("--scaling", default="exact-width", choices=SCALING_STRATEGIES)
        p.add_argument("--optimizer", default="quasi-newton", choices=METHODS)
    else:
        p.add_argument("--penalty", nargs="+", choices=PENALTY_STRATEGIES, default=None,
                       help="restrict the catalog's penalty options")
        p.add_argument("--scaling", nargs="+", choices=SCALING_STRATEGIES, default=None)
        p.add_argument("--optimizer", nargs="+", choices=METHODS, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qpathfinder", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a random CVRP instance")
    _add_common(g)
    g.add_argument("--n", type=int, required=True, help="number of non-depot nodes")
    g.add_argument("--capacity", type=int, required=True)
    g.add_argument("--demand-range", type=int, nargs=2, default=(1, 3), metavar=("LO", "HI"))
    g.add_argument("--bbox", type=float, default=1.0, help="side length of the square")
    g.add_argument("--name", default=None)
    g.add_argument("--out", required=True)

    s = sub.add_parser("solve", help="run one solution path")
    _add_common(s)
    _add_instance(s)
    _add_run(s, single_path=True)
    s.add_argument("--out-dir", required=True)
    s.add_argument("--landscape", type=int, default=None, metavar="K",
                   help="also scan a (2K+1)^2 plane around the final parameters")
    s.add_argument("--extent", type=float, default=0.5)

    r = sub.add_parser("recommend", help="evaluate and rank every catalog path")
    _add_common(r)
    _add_instance(r)
    _add_run(r, single_path=False)
    r.add_argument("--weights", type=float, nargs=3, default=DEFAULT_WEIGHTS,
                   metavar=("QUALITY", "FEASIBILITY", "COST"))
    r.add_argument("--jobs", type=_positive_int, default=None,
                   help="parallel path evaluations (default: available CPUs)")
    r.add_argument("--out-dir", required=True)

    ls = sub.add_parser("landscape", help="scan the QAOA energy over a parameter plane")
    _add_common(ls)
    _add_instance(ls)
    _add_run(ls, single_path=True)
    ls.add_argument("--cluster", type=int, default=0)
    ls.add_argument("--k", type=_positive_int, default=10)
    ls.add_argument("--extent", type=float, default=0.5)
    ls.add_argument("--center", type=float, nargs="+", default=None,
                    help="scan centre (default: linear-ramp initial parameters)")
    ls.add_argument("--u", type=float, nargs="+", default=None)
    ls.add_argument("--v", type=float, nargs="+", default=None)
    ls.add_argument("--out", required=True)
    return parser


def _parse(parser, argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return parser.parse_args(argv)
    try:
        with open(known.config, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError("config", f"cannot read config {known.config}: {exc}") from exc
    cfg = {("lam" if k == "lambda" else k.replace("-", "_")): v for k, v in cfg.items()}
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    command = next((a for a in argv if a in subparsers.choices), None)
    if command is None:
        return parser.parse_args(argv)
    sub = subparsers.choices[command]
    for action in sub._actions:
        if action.dest in cfg:
            action.required = False
            action.default = cfg[action.dest]
    return parser.parse_args(argv)


def _targets(paths, force: bool):
    for p in paths:
        if Path(p).exists() and not force:
            raise CliError("exists", f"{p} already exists (use --force to overwrite)")


def _write(path, text: str):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _settings(args) -> Settings:
    EncodingConfig(lam=args.lam, bbox_factor=args.bbox_factor, calibration=args.calibration)
    return Settings(lam=args.lam, bbox_factor=args.bbox_factor, calibration=args.calibration)


def _caps(args) -> Caps:
    if args.qubit_cap < 0:
        raise CliError("invalid", f"--qubit-cap must be >= 0, got {args.qubit_cap}")
    return Caps(qubit_cap=args.qubit_cap)


def _single_path(args) -> SolutionPath:
    if args.algorithm == "qaoa":
        return SolutionPath(args.decomposition, "qaoa", args.penalty, args.scaling,
                            args.optimizer, "one-hot", args.depth)
    return SolutionPath(args.decomposition, args.algorithm)


def cmd_generate(args) -> list[str]:
    _targets([args.out], args.force)
    inst = generate_random(args.n, args.capacity, tuple(args.demand_range), args.bbox,
                           args.seed, args.name)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_instance(inst, args.out)
    return [args.out]


def cmd_solve(args) -> list[str]:
    inst = load_instance(args.instance, args.format)
    path = _single_path(args)
    caps = _caps(args)
    cl = cluster_capacitated(inst)
    q = estimate_qubits(path, inst, cl)
    if q > caps.qubit_cap:
        raise CliError("pruned", f"path {path.id} needs an estimated {q} qubits, above qubit cap {caps.qubit_cap}")
    out = Path(args.out_dir)
    report_file = out / "report.json"
    _targets([report_file], args.force)
    report = evaluate_path(inst, path, path_seed(args.seed, path.id),
                           Budget(args.max_evals, args.timeout), caps, _settings(args), cl)
    files = []
    for art in report.artifacts:
        trace_file = out / f"trace_cluster{art.cluster}.csv"
        _targets([trace_file], args.force)
        _write(trace_file, monitor.export(art.trace))
        files.append(str(trace_file))
        if len(art.trace) >= 2:
            proj_file = out / f"projection_cluster{art.cluster}.csv"
            _targets([proj_file], args.force)
            _write(proj_file, monitor.export(monitor.project_trajectory(art.trace)))
            files.append(str(proj_file))
        if args.landscape:
            scan_file = out / f"landscape_cluster{art.cluster}.csv"
            _targets([scan_file], args.force)
            obj = Objective(art.energy, art.params.size)
            scan = monitor.landscape_scan(obj, art.params, extent=args.extent, k=args.landscape)
            _write(scan_file, monitor.export(scan))
            files.append(str(scan_file))
    _write(report_file, report_json(report))
    if report.status != "ok":
        raise CliError(report.status, f"path {path.id}: {report.reason}")
    return [str(report_file)] + files


def cmd_recommend(args) -> list[str]:
    inst = load_instance(args.instance, args.format)
    catalog = default_catalog().restrict(
        penalty=args.penalty, scaling=args.scaling, optimizer=args.optimizer)
    out = Path(args.out_dir)
    doc_file, table_file = out / "recommendation.json", out / "recommendation.txt"
    _targets([doc_file, table_file], args.force)
    rec = recommend(inst, catalog, tuple(args.weights), args.seed,
                    Budget(args.max_evals, args.timeout), _caps(args), _settings(args),
                    depth=args.depth, jobs=args.jobs or default_jobs())
    _write(doc_file, rec.to_json())
    _write(table_file, rec.summary_table())
    return [str(doc_file), str(table_file)]


def cmd_landscape(args) -> list[str]:
    _targets([args.out], args.force)
    inst = load_instance(args.instance, args.format)
    if args.algorithm != "qaoa" or args.decomposition != "cluster-first":
        raise CliError("invalid", "landscape scans need a cluster-first qaoa path")
    path = _single_path(args)
    cl = cluster_capacitated(inst)
    tsps = subproblems(inst, cl)
    if not 0 <= args.cluster < len(tsps):
        raise CliError("invalid", f"--cluster {args.cluster} out of range (instance has {len(tsps)})")
    tsp = tsps[args.cluster]
    caps = _caps(args)
    if (tsp.m - 1) ** 2 > caps.qubit_cap:
        raise CliError("pruned", f"cluster {args.cluster} needs {(tsp.m - 1) ** 2} qubits, above cap")
    energy = build_energy(tsp, path, _settings(args).encoding(path, caps)).energy
    p = energy.ansatz.p
    center = np.asarray(args.center if args.center is not None else init_params(p), dtype=float)
    if center.size != 2 * p:
        raise CliError("invalid", f"--center needs {2 * p} values for depth {p}")
    obj = Objective(energy, 2 * p)
    scan = monitor.landscape_scan(obj, center, args.u, args.v, args.extent, args.k)
    _write(args.out, monitor.export(scan))
    return [args.out]


COMMANDS = {
    "generate": cmd_generate,
    "solve": cmd_solve,
    "recommend": cmd_recommend,
    "landscape": cmd_landscape,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = _parse(parser, argv)
    except CliError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        files = COMMANDS[args.command](args)
    except CliError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {' '.join(str(exc).split())}", file=sys.stderr)
        return 1
    for f in files:
        log.info("wrote %s", f)
    return 0


if __name__ == "__main__":
    sys.exit(main())

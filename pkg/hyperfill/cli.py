"""
hyperfill command line: build, params, trace, modulus, verify.

Documents go to stdout (or --out), human summaries and logs to stderr. Any
HyperfillError ends the run with exit code 1 and an error document.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from typing import Any, Dict, List, Optional

from . import __version__
from . import constants as C
from .config_schema import FillingConfig, ModulusConfig, QuadratureConfig, TraceConfig, VerifyConfig
from .documents import (
    filling_from_document,
    filling_to_document,
    parse_interval,
    parse_rho_spec,
    parse_space_spec,
    parse_u_spec,
    read_json,
    to_jsonable,
    write_json,
)
from .errors import HyperfillError, InvalidParameter, ParseError, error_document
from .filling_builder import Filling, build_filling, build_nets, degree_stats
from .modulus_probe import probe
from .reports import run_verification, scenario_list
from .trace_lab.traces import trace_T, trace_tilde
from .trace_params import classify_regime, partition_unit_mass

logger = logging.getLogger("hyperfill")


def _emit(doc: Any, out: Optional[str]) -> None:
    text = write_json(doc, out)
    if out:
        print(f"wrote {out}", file=sys.stderr)
    else:
        print(text)


def _filling_config(args) -> FillingConfig:
    return FillingConfig(alpha=args.alpha, tau=args.tau, levels=args.levels)


def _build(space_spec: str, cfg: FillingConfig) -> Filling:
    space = parse_space_spec(space_spec)
    return build_filling(space, build_nets(space, cfg.alpha, cfg.levels), cfg.tau)


def _load_or_build(args) -> Filling:
    if args.filling:
        return filling_from_document(read_json(args.filling))
    return _build(args.space, _filling_config(args))


def cmd_build(args) -> int:
    filling = _build(args.space, _filling_config(args))
    stats = degree_stats(filling)
    _emit(filling_to_document(filling), args.out)
    print(f"{len(filling.vertices)} vertices, {len(filling.edges)} edges, max degree {stats.global_max}", file=sys.stderr)
    for n, d in stats.per_level.items():
        print(f"  level {n:2d}: degree max {d.max:3d}  mean {d.mean:6.2f}  min {d.min:3d}", file=sys.stderr)
    return 0


def _quad_tol(args) -> float:
    return C.EDGE_QUAD_TOL if args.tol is None else args.tol


def _boundary_points(spec: Optional[List[str]], size: int) -> List[int]:
    """--xi values: indices, or "all" (the default) for every sample point."""
    if not spec or "all" in spec:
        return list(range(size))
    points = []
    for s in spec:
        try:
            xi = int(s)
        except ValueError:
            raise ParseError(f"--xi takes a point index or 'all', got {s!r}") from None
        if not 0 <= xi < size:
            raise InvalidParameter(f"--xi {xi} is outside 0..{size - 1}")
        points.append(xi)
    return points


def cmd_params(args) -> int:
    q = QuadratureConfig(tol=_quad_tol(args), t_max=args.tmax)
    rho = parse_rho_spec(args.rho, args.alpha)
    report = classify_regime(rho, args.p, args.alpha, t_max=q.t_max, max_cells=args.max_cells, tol=q.tol,
                             overflow_guard=q.overflow_guard, samples_per_unit=q.samples_per_unit)
    doc: Dict[str, Any] = {"regime": report, "prediction": report.prediction}
    if args.partition:
        doc["partition"] = partition_unit_mass(rho, args.max_cells, q.t_max)
    _emit(doc, args.out)
    print(f"{report.rho} p={report.p:g}: R={report.R.value:.6g} calR={report.calR.value:.6g} -> {report.prediction}",
          file=sys.stderr)
    return 0


def _strip_samples(verdict) -> Dict[str, Any]:
    doc = to_jsonable(verdict)
    for ray in doc.get("rays", []):
        ray.pop("heights", None)
        ray.pop("values", None)
    return doc


def cmd_trace(args) -> int:
    tc = TraceConfig(tol=C.TRACE_TOL if args.tol is None else args.tol, window=args.window, max_rays=args.max_rays)
    filling = _load_or_build(args)
    rho = parse_rho_spec(args.rho, filling.alpha)
    u = parse_u_spec(args.u, rho=rho, p=args.p, alpha=filling.alpha, t_max=args.tmax)
    points = _boundary_points(args.xi, filling.space.size)
    depth = filling.levels if args.depth is None else args.depth

    results, rows = [], []
    for xi in points:
        v = trace_T(u, filling, xi, max_rays=tc.max_rays, tol=tc.tol, window=tc.window,
                    samples_per_edge=tc.samples_per_edge, oscillation_factor=tc.oscillation_factor, depth=depth)
        t = trace_tilde(u, filling, xi, depth, tol=tc.tol, window=tc.window)
        results.append({"xi": xi, "trace_T": _strip_samples(v), "trace_tilde": _strip_samples(t.verdict),
                        "averages": t.averages})
        rows.extend((xi, r.label, h, val) for r in v.rays for h, val in zip(r.heights, r.values))
        print(f"xi={xi}: T {v.status.label} {'' if v.value is None else f'{v.value:.6g}'}, "
              f"tilde {t.verdict.status.label}", file=sys.stderr)

    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["xi", "ray", "height", "value"])
            w.writerows(rows)
    _emit({"u": u.tag, "rho": rho.describe(), "p": args.p, "depth": depth, "traces": results}, args.out)
    return 0


def cmd_modulus(args) -> int:
    mc = ModulusConfig(depth=args.depth)
    a, b = parse_interval(args.interval)
    rho = parse_rho_spec(args.rho, args.alpha)
    filling = _build(args.space, _filling_config(args)) if args.space else None
    cert = probe(rho, args.p, a, b, depth=mc.depth, alpha=args.alpha, samples_per_unit=mc.samples_per_unit,
                 filling=filling, seed=args.seed)
    _emit(cert, args.out)
    print(f"{rho.describe()} p={args.p:g} on [{a:g}, {b:g}]: {cert.verdict.label}", file=sys.stderr)
    return 0


def cmd_verify(args) -> int:
    cfg = VerifyConfig(seed=args.seed, levels=args.levels, space=args.space, tau=args.tau,
                       scenarios=args.only or None, workers=args.workers)
    cfg.quadrature.t_max = args.tmax
    if args.tol is not None:
        cfg.trace.tol = args.tol
    scenarios = scenario_list(read_json(args.scenarios)) if args.scenarios else None
    matrix = run_verification(cfg, scenarios)
    _emit({"all_agree": matrix.all_agree, "rows": matrix.rows}, args.out)
    for line in matrix.summary():
        print(line, file=sys.stderr)
    return 0 if matrix.all_agree else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--alpha", type=float, default=FillingConfig.alpha, help="net scale alpha > 1")
    common.add_argument("--tau", type=float, default=FillingConfig.tau, help="ball inflation tau > 1")
    common.add_argument("--p", type=float, default=2.0, help="Sobolev exponent p >= 1")
    common.add_argument("--tmax", type=float, default=C.DEFAULT_T_MAX, help="horizon for improper integrals")
    common.add_argument("--tol", type=float, default=None,
                        help="quadrature tolerance for params; detector tolerance for trace and verify")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=None, help="write the JSON document here instead of stdout")
    common.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    common.add_argument("-v", "--verbose", action="store_true", help="same as --log-level INFO")

    parser = argparse.ArgumentParser(prog="hyperfill", description="Hyperbolic fillings and trace experiments")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", parents=[common], help="build a filling document")
    p.add_argument("--space", required=True, help="cantor:depth=8,scale=0.9 | grid:... | path")
    p.add_argument("--levels", type=int, default=FillingConfig.levels)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("params", parents=[common], help="regime parameters R and calR of a weight")
    p.add_argument("--rho", required=True)
    p.add_argument("--cells", "--max-cells", dest="max_cells", type=int, default=C.PARTITION_MAX_CELLS,
                   help="unit-mass cells examined for calR")
    p.add_argument("--partition", action="store_true", help="include the unit-mass partition")
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("trace", parents=[common], help="trace of a radial function at boundary points")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--filling", help="filling document")
    src.add_argument("--space", help="space spec; the filling is built on the fly")
    p.add_argument("--levels", type=int, default=FillingConfig.levels)
    p.add_argument("--rho", required=True)
    p.add_argument("--u", default="smooth")
    p.add_argument("--xi", action="append", help="boundary point index or 'all' (repeatable)")
    p.add_argument("--depth", type=int, default=None, help="cut rays at this level; defaults to the filling depth")
    p.add_argument("--trace-tol", dest="tol", type=float, default=argparse.SUPPRESS, help="same as --tol")
    p.add_argument("--window", type=int, default=C.TRACE_WINDOW)
    p.add_argument("--max-rays", type=int, default=C.MAX_RAYS)
    p.add_argument("--csv", help="write xi,ray,height,value rows here")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("modulus", parents=[common], help="modulus dichotomy on [a, b]")
    p.add_argument("--rho", required=True)
    p.add_argument("--interval", required=True, help="a,b")
    p.add_argument("--depth", type=int, default=C.MODULUS_DEPTH)
    p.add_argument("--space", help="space for the Hölder trials on the positive side")
    p.add_argument("--levels", type=int, default=FillingConfig.levels)
    p.set_defaults(func=cmd_modulus)

    p = sub.add_parser("verify", parents=[common], help="run the verification matrix")
    p.add_argument("--space", default=VerifyConfig.space)
    p.add_argument("--levels", type=int, default=VerifyConfig.levels)
    p.add_argument("--scenarios", help="JSON list of scenario documents")
    p.add_argument("--only", action="append", help="run only this scenario (repeatable)")
    p.add_argument("--workers", type=int, default=VerifyConfig.workers, help="worker processes; 1 runs inline")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = "INFO" if args.verbose and args.log_level == "WARNING" else args.log_level
    logging.basicConfig(stream=sys.stderr, level=getattr(logging, level),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except HyperfillError as e:
        logger.debug("command failed", exc_info=True)
        print(write_json(error_document(e, {"command": args.command})))
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

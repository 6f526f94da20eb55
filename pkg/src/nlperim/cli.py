"""Command-line front end.

Every subcommand emits a single canonical report (JSON by default, CSV
with dotted keys on request) whose bytes depend only on the invocation
and the seed.  Exit codes: 0 success, 1 cache corruption or self-test
failure, 2 accuracy budget exhausted (a partial report is still
printed), 3 invalid inputs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import bounds as bd
from . import cache as cc
from . import engine as eng
from . import geometry as geo
from . import kernels as kr
from . import optimizer as opt
from . import selftest as st
from . import symmetry as sym
from ._report import canonical_json, csv_lines, flatten

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_BUDGET = 2
EXIT_INVALID = 3


class _CliError(Exception):
    """Invalid invocation or input file; maps to exit code 3."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _CliError(message)


# ---------------------------------------------------------------------------
# input loading


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise _CliError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise _CliError(f"{path} is not valid JSON: {exc}") from exc


def _load_body(path: str) -> geo.ConvexBody:
    data = _load_json(path)
    try:
        return geo.body_from_dict(data)
    except geo.GeometryError as exc:
        raise _CliError(f"{path}: {exc}") from exc


def _load_kernel(spec: str) -> kr.Kernel:
    try:
        return kr.parse_kernel_spec(spec)
    except kr.KernelError as exc:
        if not os.path.exists(spec):
            raise _CliError(str(exc)) from exc
    data = _load_json(spec)
    try:
        return kr.kernel_from_dict(data)
    except (kr.KernelError, KeyError, TypeError, ValueError) as exc:
        raise _CliError(f"{spec}: {exc}") from exc


def _parse_axis(text: str, dim: int) -> np.ndarray:
    try:
        vec = np.array([float(v) for v in text.split(",")], dtype=float)
    except ValueError as exc:
        raise _CliError(f"axis {text!r} is not a comma-separated vector") from exc
    if vec.size != dim or not np.linalg.norm(vec) > 0:
        raise _CliError(f"axis {text!r} must be a nonzero vector of length {dim}")
    return vec


def _parse_psi(spec: str):
    parts = spec.split(":")
    if parts[0] == "power" and len(parts) == 2:
        try:
            exp = float(parts[1])
        except ValueError:
            raise _CliError(f"bad exponent in psi spec {spec!r}") from None
        return lambda r: float(r) ** exp, {"type": "power", "exponent": exp}
    raise _CliError(f"cannot parse psi spec {spec!r} (expected power:<exponent>)")


def _accuracy(args) -> eng.AccuracySpec | None:
    if args.rel_tol is None and args.max_samples is None:
        return None
    base = eng.DEFAULT_ACCURACY
    return eng.AccuracySpec(
        rel_tol=base.rel_tol if args.rel_tol is None else args.rel_tol,
        max_samples=int(base.max_samples if args.max_samples is None
                        else args.max_samples))


def _cache(args) -> cc.ConstantsCache:
    return cc.ConstantsCache(args.cache)


# ---------------------------------------------------------------------------
# report plumbing


def _plain(obj):
    """Recursively convert numpy scalars and arrays to built-in types."""
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    return obj


def _estimate_dict(est: eng.Estimate) -> dict:
    return {"value": float(est.value), "error": float(est.error),
            "method": est.method, "samples": int(est.samples)}


def _emit(report, args) -> None:
    report = _plain(report)
    if args.format == "json":
        text = canonical_json(report)
    else:
        rows = report if isinstance(report, list) else [report]
        text = csv_lines([flatten(r) for r in rows])
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _base_report(args, kernel: kr.Kernel | None = None) -> dict:
    rep = {"command": args.command, "seed": int(args.seed)}
    if kernel is not None:
        rep["kernel"] = kr.kernel_to_dict(kernel)
    return rep


# ---------------------------------------------------------------------------
# subcommands


def _cmd_perimeter(args) -> int:
    kernel = _load_kernel(args.kernel)
    body = _load_body(args.body)
    rep = _base_report(args, kernel)
    rep["body"] = args.body
    try:
        est = eng.perimeter(body, kernel, _accuracy(args), method=args.method,
                            seed=args.seed, workers=args.workers)
    except eng.BudgetExceeded as exc:
        rep["perimeter"] = _estimate_dict(exc.estimate)
        rep["budget_exhausted"] = True
        _emit(rep, args)
        return EXIT_BUDGET
    rep["perimeter"] = _estimate_dict(est)
    _emit(rep, args)
    return EXIT_OK


def _cmd_interaction(args) -> int:
    kernel = _load_kernel(args.kernel)
    E = _load_body(args.body_a)
    F = _load_body(args.body_b)
    rep = _base_report(args, kernel)
    rep["body_a"], rep["body_b"] = args.body_a, args.body_b
    try:
        est = eng.interaction(E, F, kernel, _accuracy(args), seed=args.seed,
                              workers=args.workers)
    except eng.BudgetExceeded as exc:
        rep["interaction"] = _estimate_dict(exc.estimate)
        rep["budget_exhausted"] = True
        _emit(rep, args)
        return EXIT_BUDGET
    rep["interaction"] = _estimate_dict(est)
    _emit(rep, args)
    return EXIT_OK


def _cmd_hausdorff(args) -> int:
    A = _load_body(args.body_a)
    B = _load_body(args.body_b)
    h, pa, pb = geo.hausdorff_distance(A, B)
    rep = _base_report(args)
    rep.update({"body_a": args.body_a, "body_b": args.body_b,
                "distance": float(h), "witness_inner": pa, "witness_outer": pb})
    _emit(rep, args)
    return EXIT_OK


def _cmd_symmetrize(args) -> int:
    body = _load_body(args.body)
    nu = _parse_axis(args.nu, body.dim)
    rounded = sym.symmetrize(body, nu, nodes=args.nodes)
    rep = _base_report(args)
    rep.update({"body": args.body, "nu": nu,
                "volume_before": geo.volume(body),
                "volume_after": geo.volume(rounded),
                "result": geo.body_to_dict(rounded)})
    _emit(rep, args)
    return EXIT_OK


def _cmd_monotonicity(args) -> int:
    kernel = _load_kernel(args.kernel)
    A = _load_body(args.body_a)
    B = _load_body(args.body_b)
    deficit, ok = bd.check_monotonicity(kernel, A, B, _accuracy(args),
                                        seed=args.seed, workers=args.workers)
    rep = _base_report(args, kernel)
    rep.update({"body_a": args.body_a, "body_b": args.body_b,
                "deficit": _estimate_dict(deficit), "satisfied": bool(ok)})
    _emit(rep, args)
    return EXIT_OK


def _deficit_methods(kernel: kr.Kernel, method: str) -> list[str]:
    if method != "all":
        return [method]
    methods = ["interp", "optimized"]
    if kernel.form == "fractional":
        methods.insert(1, "explicit")
    return methods


def _cmd_deficit(args) -> int:
    kernel = _load_kernel(args.kernel)
    A = _load_body(args.body_a)
    B = _load_body(args.body_b)
    cache = _cache(args)
    accuracy = _accuracy(args)
    frame = bd.deficit_frame(A, B, kernel)
    reports = []
    for name in _deficit_methods(kernel, args.method):
        if name == "interp":
            rep = bd.bound_interp(kernel, frame, cache=cache)
        elif name == "explicit":
            if kernel.form != "fractional":
                raise _CliError("the explicit bound needs a fractional kernel")
            rep = bd.bound_explicit(kernel.s, frame, cache=cache)
        else:
            rep = bd.bound_optimized(kernel, frame, nodes=args.nodes,
                                     seed=args.seed, workers=args.workers,
                                     starts=args.starts)
        rep = bd.evaluate_inequality(kernel, A, B, rep, accuracy,
                                     seed=args.seed, workers=args.workers)
        reports.append(rep)
    out = _base_report(args, kernel)
    out.update({"body_a": args.body_a, "body_b": args.body_b,
                "reports": [r.to_dict() for r in reports]})
    if len(reports) > 1:
        vals = [r.bound_value for r in reports]
        slack = 3.0 * max(r.bound_error for r in reports)
        out["ascending"] = all(vals[i] <= vals[i + 1] + slack
                               for i in range(len(vals) - 1))
    _emit(out, args)
    return EXIT_OK


def _cmd_oned(args) -> int:
    kernel = _load_kernel(args.kernel)
    if kernel.dim != 1:
        raise _CliError("the segment bound needs a 1-d kernel")
    if args.psi is not None:
        psi, psi_info = _parse_psi(args.psi)
    elif kernel.form == "fractional":
        psi, psi_info = _parse_psi(f"power:{1.0 - kernel.s}")
    else:
        raise _CliError("--psi is required for non-fractional kernels")
    A = geo.make_segment(0.0, args.length_a)
    B = geo.make_segment(0.0, args.length_b)
    bound = bd.segment_bound(kernel, psi, A, B, seed=args.seed,
                             cache=_cache(args),
                             check_condition=not args.skip_condition_check)
    rep = _base_report(args, kernel)
    rep.update({"length_a": float(args.length_a),
                "length_b": float(args.length_b),
                "psi": psi_info, "bound_value": float(bound)})
    _emit(rep, args)
    return EXIT_OK


def _cmd_optimize_f(args) -> int:
    kernel = _load_kernel(args.kernel)
    est = opt.f_value(kernel, args.height, args.base_area, args.volume,
                      nodes=args.nodes, seed=args.seed, workers=args.workers,
                      starts=args.starts, accuracy=_accuracy(args))
    rep = _base_report(args, kernel)
    rep.update({"height": float(args.height),
                "base_area": float(args.base_area),
                "volume": float(args.volume), "nodes": int(args.nodes),
                "f": _estimate_dict(est), "detail": dict(est.detail)})
    _emit(rep, args)
    return EXIT_OK


def _cmd_selftest(args) -> int:
    cfg = st.SuiteConfig(suite=args.suite, seed=args.seed,
                         workers=args.workers)
    results = []
    for key, _ in st.CRITERIA:
        res = st.run_criterion(key, cfg)
        results.append(res)
        status = "PASS" if res.passed else "FAIL"
        print(f"{status} {res.key:26s} {res.seconds:7.1f}s  {res.summary}",
              flush=True)
        for line in res.failures:
            print(f"     {line}", flush=True)
    rows = [r.row() for r in results]
    out = args.output
    if out is None and args.suite == "full":
        out = "selftest_full.csv"
    if out is not None:
        if args.format == "json":
            text = canonical_json(_plain(
                {"command": "selftest", "seed": int(args.seed),
                 "suite": args.suite, "criteria": rows}))
        else:
            text = csv_lines(rows)
        with open(out, "w") as fh:
            fh.write(text)
        print(f"report written to {out}", flush=True)
    failed = [r.key for r in results if not r.passed]
    if failed:
        print(f"FAILED: {', '.join(failed)}", flush=True)
        return EXIT_FAILURE
    print(f"all {len(results)} criteria passed", flush=True)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser assembly


def _build_parser() -> _Parser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0,
                        help="random seed recorded in every report")
    common.add_argument("--workers", type=int, default=1,
                        help="worker count for Monte Carlo and multistart")
    common.add_argument("--rel-tol", type=float, default=None,
                        help="relative accuracy target")
    common.add_argument("--max-samples", type=float, default=None,
                        help="Monte Carlo sample budget")
    common.add_argument("--cache", default=None,
                        help="constants cache path (default NLPERIM_CACHE "
                             "or the user cache directory)")
    common.add_argument("--output", default=None,
                        help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json",
                        help="report format")

    parser = _Parser(prog="nlperim",
                     description="kernel perimeters of convex bodies")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    p = sub.add_parser("perimeter", parents=[common],
                       help="kernel perimeter of one body")
    p.add_argument("--body", required=True, help="body JSON file")
    p.add_argument("--kernel", required=True,
                   help="kernel spec frac:<dim>:<s> or a JSON file")
    p.add_argument("--method", choices=("auto", "slice", "mc"),
                   default="auto")
    p.set_defaults(run=_cmd_perimeter)

    p = sub.add_parser("interaction", parents=[common],
                       help="interaction energy of two disjoint bodies")
    p.add_argument("--body-a", required=True)
    p.add_argument("--body-b", required=True)
    p.add_argument("--kernel", required=True)
    p.set_defaults(run=_cmd_interaction)

    p = sub.add_parser("hausdorff", parents=[common],
                       help="one-sided Hausdorff distance of nested bodies")
    p.add_argument("--body-a", required=True, help="inner body")
    p.add_argument("--body-b", required=True, help="outer body")
    p.set_defaults(run=_cmd_hausdorff)

    p = sub.add_parser("symmetrize", parents=[common],
                       help="rounding along an axis at fixed slice volume")
    p.add_argument("--body", required=True)
    p.add_argument("--nu", required=True,
                   help="axis as comma-separated components")
    p.add_argument("--nodes", type=int, default=512,
                   help="profile resolution of the result")
    p.set_defaults(run=_cmd_symmetrize)

    p = sub.add_parser("monotonicity", parents=[common],
                       help="check P(A) <= P(B) for nested bodies")
    p.add_argument("--body-a", required=True, help="inner body")
    p.add_argument("--body-b", required=True, help="outer body")
    p.add_argument("--kernel", required=True)
    p.set_defaults(run=_cmd_monotonicity)

    p = sub.add_parser("deficit", parents=[common],
                       help="lower bounds for the perimeter deficit")
    p.add_argument("--body-a", required=True, help="inner body")
    p.add_argument("--body-b", required=True, help="outer body")
    p.add_argument("--kernel", required=True)
    p.add_argument("--method", default="all",
                   choices=("interp", "explicit", "optimized", "all"))
    p.add_argument("--nodes", type=int, default=128,
                   help="profile nodes for the optimized bound")
    p.add_argument("--starts", type=int, default=8,
                   help="multistart count for the optimized bound")
    p.set_defaults(run=_cmd_deficit)

    p = sub.add_parser("oned", parents=[common],
                       help="segment deficit bound c_phi (psi(|B|)-psi(|A|))")
    p.add_argument("--length-a", type=float, required=True)
    p.add_argument("--length-b", type=float, required=True)
    p.add_argument("--kernel", required=True)
    p.add_argument("--psi", default=None,
                   help="profile spec power:<exponent>; defaults to "
                        "power:(1-s) for fractional kernels")
    p.add_argument("--skip-condition-check", action="store_true",
                   help="skip the sampled two-parameter condition check")
    p.set_defaults(run=_cmd_oned)

    p = sub.add_parser("optimize-f", parents=[common],
                       help="maximal competitor interaction and deficit value")
    p.add_argument("--kernel", required=True)
    p.add_argument("--height", type=float, required=True,
                   help="cone height (Hausdorff gap)")
    p.add_argument("--base-area", type=float, required=True,
                   help="cone base measure")
    p.add_argument("--volume", type=float, required=True,
                   help="competitor volume budget")
    p.add_argument("--nodes", type=int, default=128)
    p.add_argument("--starts", type=int, default=8)
    p.set_defaults(run=_cmd_optimize_f)

    p = sub.add_parser("selftest", parents=[common],
                       help="run the verification suite")
    p.add_argument("--suite", choices=("fast", "full"), default="fast")
    p.set_defaults(run=_cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.run(args)
    except _CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except cc.CacheIntegrityError as exc:
        print(f"error: CacheIntegrityError: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except (geo.GeometryError, kr.KernelError, bd.BoundsError,
            eng.SingularEvaluation, eng.UnsupportedGeometry,
            opt.OptimizerError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except eng.BudgetExceeded as exc:
        print(f"error: budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())

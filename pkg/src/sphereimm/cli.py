"""Command-line interface.

Every run writes one JSON report (to ``--out`` or stdout) and exits with

* 0 on success,
* 1 on input or internal errors (the report carries an ``error`` block),
* 2 when two methods disagree,
* 3 when a certificate fails or a computation is inconclusive.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from fractions import Fraction

import numpy as np

from . import __version__
from .degree import (DegreeConfig, DegreeRouteConfig, degree_on_sphere, degree_route,
                     local_degree_at_origin)
from .errors import ParseError, SphereImmError
from .family import FamilySpec, ScanConfig, fit_sign_representation, scan
from .immersion import ImmersionConfig, check_immersion_small_spheres
from .io import map_to_document, parse_document, parse_map
from .kernels import BACKEND
from .polycore import PolynomialMap
from .selfint import SelfIntConfig, intersection_number_via_pairs

SCHEMA_VERSION = "1.0"
EXIT_OK, EXIT_INPUT, EXIT_DISAGREE, EXIT_INCONCLUSIVE = 0, 1, 2, 3

log = logging.getLogger("sphereimm")


class UsageError(SphereImmError):
    """Bad command-line values."""


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Fraction):
        return str(o)
    raise TypeError(f"not serialisable: {type(o).__name__}")


def _load(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(exc.strerror or str(exc), path) from None
    return text


def _radii(text: str | None):
    if text is None or text == "auto":
        return None
    try:
        vals = [float(Fraction(v)) for v in text.split(",")]
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"--radius expects 'auto' or comma-separated positive numbers, "
                         f"got {text!r}") from None
    if any(v <= 0 for v in vals):
        raise UsageError("radii must be positive")
    return vals


def _parse_grid(specs: list[str], names: tuple[str, ...]):
    """``name=v1,v2,...`` per parameter; ``;`` may separate several in one flag."""
    axes = {}
    for spec in specs:
        for part in filter(None, (p.strip() for p in spec.split(";"))):
            if "=" not in part:
                raise UsageError(f"grid entry {part!r} must look like name=v1,v2,...")
            name, vals = part.split("=", 1)
            name = name.strip()
            if name not in names:
                raise UsageError(f"unknown parameter {name!r}; family has {list(names)}")
            try:
                axes[name] = tuple(Fraction(v.strip()) for v in vals.split(",") if v.strip())
            except (ValueError, ZeroDivisionError):
                raise UsageError(f"malformed grid values in {part!r}") from None
            if not axes[name]:
                raise UsageError(f"empty grid for {name!r}")
    missing = [n for n in names if n not in axes]
    if missing:
        raise UsageError(f"no grid given for parameter(s) {missing}")
    return [axes[n] for n in names]


def _require_map(obj) -> PolynomialMap:
    if isinstance(obj, FamilySpec):
        raise UsageError("this command takes a single map, not a family (drop lambda_vars)")
    return obj


def _configs(args):
    seed = args.seed
    return (ImmersionConfig(seed=seed), SelfIntConfig(seed=seed),
            DegreeRouteConfig(degree=DegreeConfig(seed=seed)))


def _immersion_with(icfg: ImmersionConfig, radii):
    if not radii:
        return icfg
    return replace(icfg, radii=tuple(sorted(set(icfg.radii) | set(radii), reverse=True)))


# -- commands ----------------------------------------------------------------------

def cmd_check_immersion(args, g):
    icfg, _, _ = _configs(args)
    cert = check_immersion_small_spheres(_require_map(g), _immersion_with(icfg, _radii(args.radius)))
    code = EXIT_OK if cert.passed else EXIT_INCONCLUSIVE
    return {"certificate": cert.to_dict()}, code


def _intersection(args, g, method: str):
    g = _require_map(g)
    icfg, scfg, dcfg = _configs(args)
    radii = _radii(args.radius)
    cert = check_immersion_small_spheres(g, _immersion_with(icfg, radii))
    result = {"certificate": cert.to_dict()}
    if not cert.passed:
        result["reason"] = "immersion certificate did not pass"
        return result, EXIT_INCONCLUSIVE
    radii = radii or [cert.r0_estimate]
    values = {}
    code = EXIT_OK
    if method in ("pairs", "both"):
        reports = [intersection_number_via_pairs(g, r, scfg) for r in radii]
        result["pairs_reports"] = [rep.to_dict() for rep in reports]
        nums = [rep.intersection_number for rep in reports]
        if None in nums or len(set(nums)) != 1:
            result["pairs"] = None
            code = EXIT_INCONCLUSIVE
        else:
            result["pairs"] = values["pairs"] = nums[0]
    if method in ("degree", "both"):
        try:
            rep = degree_route(g, dcfg)
            result["degree_report"] = rep.to_dict()
            result["degree"] = values["degree"] = rep.value
        except SphereImmError as exc:
            result["degree"] = None
            result["degree_error"] = {"type": type(exc).__name__, "message": str(exc),
                                      "evidence": getattr(exc, "evidence", None)}
            code = EXIT_INCONCLUSIVE
    if method == "both":
        agree = len(values) == 2 and values["pairs"] == values["degree"]
        result["agreement"] = agree
        if len(values) == 2 and not agree:
            code = EXIT_DISAGREE
    if code == EXIT_OK:
        result["intersection_number"] = next(iter(values.values()))
    return result, code


def cmd_intersection(args, g):
    return _intersection(args, g, args.method)


def cmd_cross_validate(args, g):
    return _intersection(args, g, "both")


def cmd_degree(args, g):
    H = _require_map(g)
    cfg = DegreeConfig(seed=args.seed)
    methods = ("preimage_count", "kronecker_integral") if args.method == "both" else (args.method,)
    radii = _radii(args.radius)
    result = {}
    if radii is None:
        res = local_degree_at_origin(H, cfg, methods)
        result["local_degree"] = res.to_dict()
        result["degree"] = res.value
        return result, EXIT_OK
    per = []
    for r in radii:
        entry = {"radius": r}
        for m in methods:
            entry[m] = degree_on_sphere(H, r, m, cfg).to_dict()
        vals = {entry[m]["value"] for m in methods}
        entry["agreement"] = len(vals) == 1
        per.append(entry)
    result["per_radius"] = per
    if not all(e["agreement"] for e in per):
        return result, EXIT_DISAGREE
    result["degree"] = [per[i][methods[0]]["value"] for i in range(len(per))]
    return result, EXIT_OK


def cmd_scan(args, fam):
    if not isinstance(fam, FamilySpec):
        raise UsageError("scan needs a family document (with lambda_vars)")
    icfg, scfg, dcfg = _configs(args)
    fam = fam.with_axes(*_parse_grid(args.grid, fam.lambda_names))
    report = scan(fam, ScanConfig(method=args.method, immersion=icfg, selfint=scfg, degree=dcfg))
    if args.fit_degree is not None:
        report.sign_fit = fit_sign_representation(report, args.fit_degree, fam.p)
    result = report.to_dict(list(fam.lambda_names))
    result["table"] = report.table()
    code = EXIT_OK if report.defined() else EXIT_INCONCLUSIVE
    return result, code


COMMANDS = {
    "check-immersion": cmd_check_immersion,
    "intersection": cmd_intersection,
    "degree": cmd_degree,
    "scan": cmd_scan,
    "cross-validate": cmd_cross_validate,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("map", help="map document (JSON)")
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--threads", type=int,
                        help="worker threads (default: $SPHEREIMM_THREADS or 1)")
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = argparse.ArgumentParser(prog="sphereimm",
                                description="Intersection numbers of immersions of small spheres.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check-immersion", parents=[common],
                       help="certify g is an immersion on small spheres")
    c.add_argument("--radius", help="extra radii to certify (comma-separated)")

    c = sub.add_parser("intersection", parents=[common], help="intersection number of g")
    c.add_argument("--method", choices=("pairs", "degree", "both"), default="both")
    c.add_argument("--radius", default="auto", help="'auto' or comma-separated radii")

    c = sub.add_parser("cross-validate", parents=[common],
                       help="compare the pair and degree routes")
    c.add_argument("--radius", default="auto", help="'auto' or comma-separated radii")

    c = sub.add_parser("degree", parents=[common], help="degree of a square map R^m -> R^m")
    c.add_argument("--method", choices=("preimage_count", "kronecker_integral", "both"),
                   default="both")
    c.add_argument("--radius", default="auto",
                   help="sphere radius (comma-separated list) or 'auto' for the local degree at 0")

    c = sub.add_parser("scan", parents=[common], help="scan a family over a parameter grid")
    c.add_argument("--grid", action="append", required=True,
                   help="name=v1,v2,... (repeat or separate with ';' for several parameters)")
    c.add_argument("--fit-degree", type=int, default=None,
                   help="fit I = c*sgn(h) with deg h <= this bound")
    c.add_argument("--method", choices=("pairs", "degree", "both"), default="both")
    return p


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if args.threads is not None:
        os.environ["SPHEREIMM_THREADS"] = str(max(1, args.threads))
    report = {"schema_version": SCHEMA_VERSION, "command": args.command,
              "options": {k: v for k, v in sorted(vars(args).items())
                          if k not in ("command", "out", "verbose", "threads")},
              "backend": BACKEND}
    try:
        text = _load(args.map)
        g, xs, ls = parse_document(text)
        report["input"] = map_to_document(g, xs, ls)
        obj = parse_map(text)
        result, code = COMMANDS[args.command](args, obj)
        report["result"] = result
    except (ParseError, UsageError) as exc:
        report["error"] = {"type": type(exc).__name__, "message": str(exc),
                           "location": getattr(exc, "location", None)}
        code = EXIT_INPUT
    except SphereImmError as exc:
        report["error"] = {"type": type(exc).__name__, "message": str(exc),
                           "evidence": getattr(exc, "evidence", None)}
        code = EXIT_INCONCLUSIVE
    except Exception as exc:  # noqa: BLE001 - every failure becomes a report entry
        log.debug("internal error", exc_info=True)
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
        code = EXIT_INPUT
    report["exit_code"] = code
    out = json.dumps(report, indent=2, default=_json_default) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

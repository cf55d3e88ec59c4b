"""Command-line frontend.

Subcommands:
    verify       run the three tests; exit 0 Verified, 1 Falsified, 2 error
    regions      dump the region partition (optionally render a figure)
    bound        characteristic polynomial and region-count bound
    check-point  print V, activation pattern, gradient, Vdot at one point
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from .arrangement import Box, enumerate_regions
from .combinatorics import region_upper_bound
from .dynamics import builtin, load_dynamics
from .errors import ConfigError, VerifierError
from .gopt import Budget
from .network import activation_pattern, eval_v, load_network, region_gradient
from .report import (
    format_report,
    render_region_figure,
    write_region_dump,
    write_report,
)
from .verifier import VerifyConfig, verify


@dataclass
class RunConfig:
    """Everything a verification run needs, assembled from CLI flags."""

    net_path: str
    dynamics_path: str | None
    builtin_name: str | None
    box_lo: float | None
    box_hi: float | None
    box_file: str | None
    hole_frac: float
    samples: int | None
    iters: int
    margin: float
    workers: int
    region_cap: int
    paranoid: bool
    compute_bound: bool
    report_path: str
    dump_regions: str | None

    def __post_init__(self):
        if not 0.0 < self.hole_frac < 1.0:
            raise ConfigError(f"hole fraction must be in (0, 1), got {self.hole_frac}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")


def _parse_box_pair(text: str):
    parts = text.split(",")
    if len(parts) != 2:
        raise ConfigError(f"invalid box {text!r}: expected 'lo,hi'")
    try:
        lo, hi = float(parts[0]), float(parts[1])
    except ValueError as exc:
        raise ConfigError(f"invalid box {text!r}: {exc}") from exc
    return lo, hi


def _build_box(p: int, box_pair, box_file):
    if box_file is not None:
        with open(box_file, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict) or "lo" not in raw or "hi" not in raw:
            raise ConfigError(f"box file {box_file} needs fields 'lo' and 'hi'")
        return Box(lo=np.asarray(raw["lo"], dtype=float),
                   hi=np.asarray(raw["hi"], dtype=float))
    if box_pair is None:
        raise ConfigError("either --box or --box-file is required")
    lo, hi = box_pair
    return Box(lo=np.full(p, lo), hi=np.full(p, hi))


def _load_model(p: int, dynamics_path, builtin_name):
    if (dynamics_path is None) == (builtin_name is None):
        raise ConfigError("exactly one of --dynamics or --builtin is required")
    if builtin_name is not None:
        return builtin(builtin_name, p)
    return load_dynamics(dynamics_path)


def _add_common(sub):
    sub.add_argument("--net", required=True, help="weight file (JSON)")


def _add_box_flags(sub):
    sub.add_argument("--box", default=None, metavar="LO,HI",
                     help="box bounds applied to every axis, e.g. -10,10")
    sub.add_argument("--box-file", default=None,
                     help="JSON file with per-axis 'lo' and 'hi' arrays")


def _add_dynamics_flags(sub):
    sub.add_argument("--dynamics", default=None, help="dynamics file (JSON)")
    sub.add_argument("--builtin", default=None,
                     choices=["neg_cubic", "bilinear_osc", "coupled_bilinear"],
                     help="builtin dynamics name")


def _add_verify_flags(sub):
    sub.add_argument("--hole-frac", type=float, default=0.001,
                     help="origin hole volume as a fraction of the box (default 0.001)")
    sub.add_argument("--samples", type=int, default=None,
                     help="optimizer samples per polytope (default 64*2^min(p,4))")
    sub.add_argument("--iters", type=int, default=100,
                     help="max local-refinement iterations (default 100)")
    sub.add_argument("--margin", type=float, default=0.0,
                     help="treat decrease-test maxima >= -margin as violations")
    sub.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                     help="parallel workers for the per-polytope tests")
    sub.add_argument("--region-cap", type=int, default=5_000_000,
                     help="abort if the region count exceeds this cap")
    sub.add_argument("--paranoid", action="store_true",
                     help="8x optimizer budget plus vertex-seeded local starts")
    sub.add_argument("--bound", action="store_true",
                     help="include the Zaslavsky region bound in the report")
    sub.add_argument("--report", default="relulyap_report.txt",
                     help="report file path (default relulyap_report.txt)")
    sub.add_argument("--dump-regions", default=None, metavar="PATH",
                     help="also write the region dump to PATH")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relulyap",
        description="Verify a shallow ReLU Lyapunov candidate over a box "
                    "by exact region enumeration.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    v = subs.add_parser("verify", help="run the full verification")
    _add_common(v)
    _add_dynamics_flags(v)
    _add_box_flags(v)
    _add_verify_flags(v)

    r = subs.add_parser("regions", help="dump the region partition")
    _add_common(r)
    _add_box_flags(r)
    r.add_argument("--out", default="regions.tsv", help="dump file path")
    r.add_argument("--plot", default=None, metavar="PATH",
                   help="render the 2D partition to an image file")
    r.add_argument("--overlay", action="store_true",
                   help="run a verify pass and append its counterexamples")
    _add_dynamics_flags(r)
    _add_verify_flags(r)

    b = subs.add_parser("bound", help="characteristic polynomial and region bound")
    _add_common(b)

    c = subs.add_parser("check-point", help="evaluate the candidate at one point")
    _add_common(c)
    c.add_argument("--point", required=True, help="comma-separated coordinates")
    _add_dynamics_flags(c)
    return parser


def _run_config_from_args(args) -> RunConfig:
    return RunConfig(
        net_path=args.net,
        dynamics_path=getattr(args, "dynamics", None),
        builtin_name=getattr(args, "builtin", None),
        box_lo=None, box_hi=None,
        box_file=args.box_file,
        hole_frac=args.hole_frac,
        samples=args.samples,
        iters=args.iters,
        margin=args.margin,
        workers=args.workers,
        region_cap=args.region_cap,
        paranoid=args.paranoid,
        compute_bound=args.bound,
        report_path=args.report,
        dump_regions=args.dump_regions,
    )


def _verify_from_args(args):
    config = _run_config_from_args(args)
    net = load_network(config.net_path)
    box = _build_box(net.input_dim,
                     _parse_box_pair(args.box) if args.box else None,
                     config.box_file)
    model = _load_model(net.input_dim, config.dynamics_path, config.builtin_name)
    vconf = VerifyConfig(
        hole_frac=config.hole_frac,
        budget=Budget(samples=config.samples, iters=config.iters,
                      paranoid=config.paranoid),
        margin=config.margin,
        workers=config.workers,
        region_cap=config.region_cap,
        compute_bound=config.compute_bound,
    )
    report = verify(net, model, box, vconf)
    report.config["net"] = config.net_path
    report.config["dynamics"] = config.builtin_name or config.dynamics_path
    return config, net, box, report


def cmd_verify(args) -> int:
    config, net, box, report = _verify_from_args(args)
    write_report(report, config.report_path)
    if config.dump_regions:
        regions = enumerate_regions(net, box, region_cap=config.region_cap)
        write_region_dump(regions, config.dump_regions, report.counterexamples)
    sys.stdout.write(format_report(report))
    return 0 if report.verdict == "Verified" else 1


def cmd_regions(args) -> int:
    net = load_network(args.net)
    box = _build_box(net.input_dim,
                     _parse_box_pair(args.box) if args.box else None,
                     args.box_file)
    regions = enumerate_regions(net, box, region_cap=args.region_cap)
    counterexamples = None
    if args.overlay:
        _, _, _, report = _verify_from_args(args)
        counterexamples = report.counterexamples
    write_region_dump(regions, args.out, counterexamples)
    sys.stdout.write(f"{len(regions.regions)} regions written to {args.out}\n")
    if args.plot:
        render_region_figure(regions, args.plot, counterexamples)
        sys.stdout.write(f"figure written to {args.plot}\n")
    return 0


def cmd_bound(args) -> int:
    net = load_network(args.net)
    bound, chi, n_planes = region_upper_bound(net)
    n_raw = sum(1 for l in range(net.hidden_dim)
                if float(np.linalg.norm(net.W1[l])) > 0.0)
    sys.stdout.write(f"{chi}; regions <= {bound}\n")
    if n_planes < n_raw:
        sys.stdout.write(f"note: {n_raw} hyperplanes deduplicated to {n_planes} "
                         "distinct planes\n")
    machine = {
        "characteristic_polynomial": list(chi.coefficients),
        "region_bound": bound,
        "deduplicated_planes": n_planes,
    }
    sys.stdout.write(json.dumps(machine, sort_keys=True) + "\n")
    return 0


def cmd_check_point(args) -> int:
    net = load_network(args.net)
    x = np.array([float(t) for t in args.point.split(",")])
    value = eval_v(net, x)
    pattern = activation_pattern(net, x)
    grad = region_gradient(net, pattern)
    sys.stdout.write(f"V: {value!r}\n")
    sys.stdout.write("pattern: " + "".join(str(int(b)) for b in pattern) + "\n")
    sys.stdout.write("gradient: " + ",".join(repr(float(g)) for g in grad) + "\n")
    if args.builtin or args.dynamics:
        from .dynamics import eval_f

        model = _load_model(net.input_dim, args.dynamics, args.builtin)
        fx = eval_f(model, x)
        sys.stdout.write("f: " + ",".join(repr(float(v)) for v in fx) + "\n")
        sys.stdout.write(f"Vdot: {float(grad @ fx)!r}\n")
    return 0


def _normalize_argv(argv):
    """Glue values like '-10,10' onto their flag so argparse does not
    mistake the leading dash for an option."""
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in ("--box", "--point") and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    args = parser.parse_args(_normalize_argv(list(argv)))
    handlers = {
        "verify": cmd_verify,
        "regions": cmd_regions,
        "bound": cmd_bound,
        "check-point": cmd_check_point,
    }
    try:
        return handlers[args.command](args)
    except VerifierError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())

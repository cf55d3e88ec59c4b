"""Report and dump files, plus the optional figure rendering.

Two versioned text formats, both tab-delimited where they hold tables:

verify report (schema relulyap-verify-report/1)
    key: value header lines (verdict, region_count, bound, config echo,
    timing.* lines), then one counterexample per row:
    kind <TAB> region_id <TAB> measured <TAB> point

region dump (schema relulyap-regions/1)
    one region per row: id <TAB> pattern <TAB> interior <TAB> radius
    <TAB> vertices (semicolon-separated points).  For p = 2 the
    vertices are in counterclockwise order, ready for polygon plotting.
    An optional counterexample table is appended after a verify run.

Reports are written atomically (temp file + rename) and are
byte-identical across runs with the same configuration once the
timing.* lines are ignored.
"""

from __future__ import annotations

import math
import os
import tempfile

import numpy as np

from .arrangement import RegionSet
from .verifier import VerificationReport

VERIFY_SCHEMA = "relulyap-verify-report/1"
REGIONS_SCHEMA = "relulyap-regions/1"


def _fmt(x) -> str:
    if isinstance(x, (np.floating, float)):
        return repr(float(x))
    return str(x)


def _fmt_point(x) -> str:
    return ",".join(repr(float(v)) for v in x)


def atomic_write(path, text: str) -> None:
    """Write text to path via a temp file in the same directory."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".txt")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_report(report: VerificationReport, include_timings: bool = True) -> str:
    lines = [f"schema: {VERIFY_SCHEMA}"]
    lines.append(f"verdict: {report.verdict}")
    lines.append(f"region_count: {report.region_count}")
    bound = "none" if report.zaslavsky_bound is None else str(report.zaslavsky_bound)
    lines.append(f"zaslavsky_bound: {bound}")
    lines.append(f"counterexample_count: {len(report.counterexamples)}")
    for key in sorted(report.config):
        lines.append(f"config.{key}: {_fmt(report.config[key])}")
    if include_timings:
        for key in sorted(report.timings):
            lines.append(f"timing.{key}: {report.timings[key]:.3f}")
    lines.append("counterexamples:")
    lines.append("kind\tregion_id\tmeasured\tpoint")
    for ce in report.counterexamples:
        rid = "none" if ce.region_id is None else str(ce.region_id)
        lines.append(f"{ce.kind}\t{rid}\t{_fmt(ce.measured)}\t{_fmt_point(ce.point)}")
    return "\n".join(lines) + "\n"


def write_report(report: VerificationReport, path) -> None:
    atomic_write(path, format_report(report))


def _ccw_order(vertices: np.ndarray, center: np.ndarray) -> np.ndarray:
    angles = np.arctan2(vertices[:, 1] - center[1], vertices[:, 0] - center[0])
    return vertices[np.argsort(angles, kind="stable")]


def format_region_dump(regions: RegionSet, counterexamples=None) -> str:
    p = regions.box.dim
    lines = [f"schema: {REGIONS_SCHEMA}"]
    lines.append(f"box: {_fmt_point(regions.box.lo)} {_fmt_point(regions.box.hi)}")
    lines.append(f"region_count: {len(regions.regions)}")
    lines.append("id\tpattern\tinterior\tradius\tvertices")
    for region in regions.regions:
        verts = region.vertices
        if p == 2:
            verts = _ccw_order(verts, region.interior_point)
        vtxt = ";".join(_fmt_point(v) for v in verts)
        pattern = "".join(str(int(b)) for b in region.pattern)
        lines.append(f"{region.id}\t{pattern}\t{_fmt_point(region.interior_point)}"
                     f"\t{_fmt(region.chebyshev_radius)}\t{vtxt}")
    if counterexamples is not None:
        lines.append("counterexamples:")
        lines.append("kind\tregion_id\tmeasured\tpoint")
        for ce in counterexamples:
            rid = "none" if ce.region_id is None else str(ce.region_id)
            lines.append(f"{ce.kind}\t{rid}\t{_fmt(ce.measured)}\t{_fmt_point(ce.point)}")
    return "\n".join(lines) + "\n"


def write_region_dump(regions: RegionSet, path, counterexamples=None) -> None:
    atomic_write(path, format_region_dump(regions, counterexamples))


def render_region_figure(regions: RegionSet, path, counterexamples=None,
                         net=None, value_samples: int = 0) -> None:
    """Save a figure of the 2D region partition (and counterexamples) to a file."""
    if regions.box.dim != 2:
        raise ValueError("region figures are only rendered for 2-dimensional boxes")
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from matplotlib.patches import Polygon

    fig, ax = plt.subplots(figsize=(7, 7))
    cmap = plt.get_cmap("tab20")
    for region in regions.regions:
        verts = _ccw_order(region.vertices, region.interior_point)
        ax.add_patch(Polygon(verts, closed=True,
                             facecolor=cmap(region.id % 20), alpha=0.45,
                             edgecolor="black", linewidth=0.8))
    if counterexamples:
        pts = np.array([ce.point for ce in counterexamples])
        ax.plot(pts[:, 0], pts[:, 1], "o", color="red", markersize=5,
                label=f"{len(pts)} counterexamples")
        ax.legend(loc="upper right")
    box = regions.box
    ax.set_xlim(box.lo[0], box.hi[0])
    ax.set_ylim(box.lo[1], box.hi[1])
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.set_title(f"{len(regions.regions)} regions")
    ax.set_aspect("equal")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)

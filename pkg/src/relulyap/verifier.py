"""The three Lyapunov-condition tests over the enumerated regions.

Condition (i), value zero at the origin, is a single evaluation.
Condition (ii), positivity, reduces to vertex checks because the
candidate is affine on each region, so its minimum over a bounded
polytope sits at a vertex.  Condition (iii), strict decrease, is
checked per region by rotating the (constant) gradient onto the first
axis and globally maximizing the first component of the rotated
dynamics; a nonnegative maximum is a violation.

A small hypercube hole around the origin (0.1% of the box volume by
default) is excluded from conditions (ii) and (iii) for numerical
stability.  The complement box-minus-hole is nonconvex, so it is
covered by 2p overlapping axis slabs; each region is intersected with
each slab, keeping every subproblem a polytope.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .arrangement import (
    Box,
    DEGENERACY_TOL_FACTOR,
    Region,
    RegionSet,
    VERTEX_TOL_FACTOR,
    chebyshev_center,
    enumerate_regions,
    vertex_enumeration,
)
from .dynamics import DynamicsModel, eval_f, jacobian
from .errors import ConfigError, ZeroGradient
from .gopt import Budget, PolytopeDomain, global_max
from .network import ShallowReluNet, eval_v, region_gradient

ORIGIN_TOL = 1e-9

KIND_ORIGIN = "OriginValue"
KIND_NONPOSITIVE = "NonPositive"
KIND_NONDECREASING = "NonDecreasing"


@dataclass
class Counterexample:
    """A witness point violating one of the three conditions."""

    point: np.ndarray
    kind: str
    region_id: int | None
    measured: float


@dataclass(frozen=True)
class Rotation:
    """Orthogonal T with T g = a e1, a = ||g|| > 0."""

    matrix: np.ndarray
    scale: float


@dataclass
class VerifyConfig:
    hole_frac: float = 0.001
    budget: Budget = field(default_factory=Budget)
    margin: float = 0.0
    workers: int = 1
    region_cap: int = 5_000_000
    compute_bound: bool = False


@dataclass
class VerificationReport:
    verdict: str  # "Verified" | "Falsified"
    counterexamples: list
    region_count: int
    zaslavsky_bound: int | None
    timings: dict
    config: dict


def test_origin(net: ShallowReluNet) -> Counterexample | None:
    """Condition (i): the candidate must evaluate to zero at the origin.

    Compared at |V(0)| > 1e-9: the value is a sum of n floating-point
    terms, so exact zero is unattainable for generic trained weights.
    """
    v0 = eval_v(net, np.zeros(net.input_dim))
    if abs(v0) > ORIGIN_TOL:
        return Counterexample(point=np.zeros(net.input_dim), kind=KIND_ORIGIN,
                              region_id=None, measured=v0)
    return None


def hole_halfwidths(box: Box, hole_frac: float) -> np.ndarray:
    """Per-axis half-width of an origin hypercube holding hole_frac of the volume."""
    if not 0.0 < hole_frac < 1.0:
        raise ConfigError(f"hole fraction must be in (0, 1), got {hole_frac}")
    return 0.5 * hole_frac ** (1.0 / box.dim) * (box.hi - box.lo)


def hole_slabs(box: Box, hole_frac: float) -> list:
    """Halfspace constraints covering box minus the origin hole.

    Returns 2p single constraints (a, rhs) meaning a . x <= rhs: for
    each axis j the slabs {x_j >= h_j} and {x_j <= -h_j}.  Their union
    with the box is exactly the box without the open hole, and each
    intersected with a convex region stays a polytope.
    """
    h = hole_halfwidths(box, hole_frac)
    p = box.dim
    slabs = []
    for j in range(p):
        a_pos = np.zeros(p)
        a_pos[j] = -1.0
        slabs.append((a_pos, -float(h[j])))   # x_j >= h_j
        a_neg = np.zeros(p)
        a_neg[j] = 1.0
        slabs.append((a_neg, -float(h[j])))   # x_j <= -h_j
    return slabs


@dataclass
class SlabPolytope:
    """A region intersected with one hole slab, solved and vertexed."""

    region: Region
    slab_index: int
    A: np.ndarray
    b: np.ndarray
    interior_point: np.ndarray
    radius: float
    vertices: np.ndarray


def _pmap(fn, items, workers: int):
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def slab_polytopes(regions: RegionSet, slabs, workers: int = 1) -> list:
    """Intersect every region with every slab, dropping degenerate pieces."""
    box = regions.box
    deg_tol = DEGENERACY_TOL_FACTOR * box.diameter

    def solve(task):
        region, si = task
        a, rhs = slabs[si]
        A = np.vstack([region.A, a[None, :]])
        b = np.concatenate([region.b, [rhs]])
        center, radius = chebyshev_center(A, b)
        if radius <= deg_tol:
            return None
        verts = vertex_enumeration(A, b, center, scale=box.diameter)
        return SlabPolytope(region=region, slab_index=si, A=A, b=b,
                            interior_point=center, radius=radius, vertices=verts)

    tasks = [(r, si) for r in regions.regions for si in range(len(slabs))]
    solved = _pmap(solve, tasks, workers)
    return [s for s in solved if s is not None]


def test_positivity(net: ShallowReluNet, regions: RegionSet, slabs,
                    polys: list | None = None, workers: int = 1) -> list:
    """Condition (ii): V must be positive at every region-slab vertex.

    The candidate is affine on each region, so a nonpositive value
    anywhere in a polytope forces a nonpositive vertex; checking
    vertices is therefore complete.  Vertices shared between slabs or
    neighboring regions are reported once.
    """
    if polys is None:
        polys = slab_polytopes(regions, slabs, workers=workers)
    box = regions.box
    dedup_tol = VERTEX_TOL_FACTOR * box.diameter

    hits = []
    for poly in polys:
        values = eval_v(net, poly.vertices)
        for v, val in zip(poly.vertices, values):
            if np.linalg.norm(v) <= dedup_tol:
                continue  # the origin itself is exempt from condition (ii)
            if val <= 0.0:
                hits.append((poly.region.id, tuple(v), float(val)))
    hits.sort(key=lambda h: (h[0], h[1]))

    out = []
    kept_points = []
    for rid, pt, val in hits:
        v = np.array(pt)
        if any(np.linalg.norm(v - u) <= dedup_tol for u in kept_points):
            continue
        kept_points.append(v)
        out.append(Counterexample(point=v, kind=KIND_NONPOSITIVE,
                                  region_id=rid, measured=val))
    return out


def householder_to_e1(g: np.ndarray, tol: float = 1e-12) -> Rotation:
    """Orthogonal reflection T with T g = ||g|| e1.

    Identity when g already points along positive e1; otherwise the
    Householder reflection about u = g - ||g|| e1.
    """
    g = np.asarray(g, dtype=float)
    a = float(np.linalg.norm(g))
    if a <= tol:
        raise ZeroGradient(f"gradient norm {a} at or below tolerance {tol}")
    p = g.size
    e1 = np.zeros(p)
    e1[0] = a
    u = g - e1
    unorm2 = float(u @ u)
    if unorm2 <= (tol * a) ** 2:
        return Rotation(matrix=np.eye(p), scale=a)
    T = np.eye(p) - 2.0 * np.outer(u, u) / unorm2
    return Rotation(matrix=T, scale=a)


def _net_scale(net: ShallowReluNet) -> float:
    return max(1.0, float(np.sum(np.abs(net.w2) * np.linalg.norm(net.W1, axis=1))))


def test_decrease(net: ShallowReluNet, regions: RegionSet, model: DynamicsModel,
                  slabs, budget: Budget | None = None, margin: float = 0.0,
                  polys: list | None = None, workers: int = 1) -> list:
    """Condition (iii): the rotated dynamics' first component must stay negative.

    Per region the gradient g is constant; with T g = ||g|| e1 the sign
    of (T f(x))_1 matches the sign of the Lie derivative, so one global
    maximization per region-slab polytope decides the condition.  A
    nonnegative maximum (or >= -margin when a safety margin is set)
    yields one counterexample per violating polytope.  Regions with a
    zero gradient have Lie derivative identically zero, which already
    fails the strict inequality: their deepest point outside the hole
    is reported directly.
    """
    if polys is None:
        polys = slab_polytopes(regions, slabs, workers=workers)
    budget = budget or Budget()
    grad_tol = 1e-12 * _net_scale(net)

    by_region = {}
    for poly in polys:
        by_region.setdefault(poly.region.id, []).append(poly)

    def check_region(rid):
        found = []
        pieces = by_region[rid]
        region = pieces[0].region
        g = region_gradient(net, region.pattern)
        if np.linalg.norm(g) <= grad_tol:
            deepest = max(pieces, key=lambda s: s.radius)
            found.append(Counterexample(point=deepest.interior_point,
                                        kind=KIND_NONDECREASING,
                                        region_id=rid, measured=0.0))
            return found
        rot = householder_to_e1(g)
        t_row = rot.matrix[0]

        def objective(X):
            return eval_f(model, X) @ t_row

        def gradient(x):
            return jacobian(model, x).T @ t_row

        for poly in sorted(pieces, key=lambda s: s.slab_index):
            domain = PolytopeDomain(A=poly.A, b=poly.b,
                                    bbox_lo=poly.vertices.min(axis=0),
                                    bbox_hi=poly.vertices.max(axis=0),
                                    interior_point=poly.interior_point,
                                    vertices=poly.vertices)
            result = global_max(objective, gradient, domain, budget)
            if result.value >= -margin:
                found.append(Counterexample(point=result.argmax,
                                            kind=KIND_NONDECREASING,
                                            region_id=rid,
                                            measured=result.value))
        return found

    groups = _pmap(check_region, sorted(by_region), workers)
    return [ce for group in groups for ce in group]


def _sort_key(ce: Counterexample):
    rid = -1 if ce.region_id is None else ce.region_id
    return (rid, ce.kind, tuple(ce.point))


def verify(net: ShallowReluNet, model: DynamicsModel, box: Box,
           config: VerifyConfig | None = None) -> VerificationReport:
    """Run all three tests and assemble the verdict.

    Verified if and only if no counterexample was found.  The report is
    deterministic for a fixed configuration: counterexamples are sorted
    by (region id, kind, point).
    """
    config = config or VerifyConfig()
    timings = {}
    S = []

    t0 = time.perf_counter()
    origin_ce = test_origin(net)
    if origin_ce is not None:
        S.append(origin_ce)
    timings["test_origin_s"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    regions = enumerate_regions(net, box, region_cap=config.region_cap)
    slabs = hole_slabs(box, config.hole_frac)
    polys = slab_polytopes(regions, slabs, workers=config.workers)
    timings["enumerate_s"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    S.extend(test_positivity(net, regions, slabs, polys=polys, workers=config.workers))
    timings["test_positivity_s"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    S.extend(test_decrease(net, regions, model, slabs, budget=config.budget,
                           margin=config.margin, polys=polys, workers=config.workers))
    timings["test_decrease_s"] = time.perf_counter() - t0

    bound = None
    if config.compute_bound:
        from .combinatorics import region_upper_bound

        try:
            bound, _, _ = region_upper_bound(net)
        except Exception:
            bound = None

    S.sort(key=_sort_key)
    return VerificationReport(
        verdict="Verified" if not S else "Falsified",
        counterexamples=S,
        region_count=len(regions),
        zaslavsky_bound=bound,
        timings=timings,
        config={
            "hole_frac": config.hole_frac,
            "samples": config.budget.samples,
            "iters": config.budget.iters,
            "paranoid": config.budget.paranoid,
            "margin": config.margin,
            "workers": config.workers,
            "region_cap": config.region_cap,
        },
    )


def counterexample_valid(net: ShallowReluNet, model: DynamicsModel | None,
                         regions: RegionSet | None, box: Box, hole_frac: float,
                         ce: Counterexample, margin: float = 0.0) -> bool:
    """Re-evaluate the violated condition at the witness point.

    Used by the test suite to confirm soundness of every returned
    counterexample: the claimed violation must reproduce under direct
    evaluation, and (except for the origin check) the point must lie in
    the box and outside the origin hole.
    """
    x = ce.point
    if ce.kind == KIND_ORIGIN:
        return abs(eval_v(net, np.zeros(net.input_dim))) > ORIGIN_TOL
    geom_tol = VERTEX_TOL_FACTOR * box.diameter
    in_box = bool(np.all(x >= box.lo - geom_tol) and np.all(x <= box.hi + geom_tol))
    h = hole_halfwidths(box, hole_frac)
    outside_hole = bool(np.any(np.abs(x) >= h - geom_tol))
    if not (in_box and outside_hole):
        return False
    if ce.kind == KIND_NONPOSITIVE:
        return eval_v(net, x) <= 0.0
    if ce.kind == KIND_NONDECREASING:
        if regions is not None and ce.region_id is not None:
            pattern = regions.regions[ce.region_id].pattern
        else:
            from .network import activation_pattern

            pattern = activation_pattern(net, x)
        g = region_gradient(net, pattern)
        gnorm = float(np.linalg.norm(g))
        if gnorm <= 1e-12 * _net_scale(net):
            # Zero-gradient region: the Lie derivative vanishes
            # identically, which fails the strict decrease condition.
            return True
        fx = eval_f(model, x)
        # The slack matches the rotation-identity tolerance: the
        # optimizer sees g.f through the Householder row, so the two
        # formulas agree only to ~1e-9 * |g| * |f| in floating point.
        slack = 1e-9 * gnorm * float(np.linalg.norm(fx))
        return float(g @ fx) >= -margin * gnorm - slack
    return False

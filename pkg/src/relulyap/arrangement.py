"""Hyperplane arrangement of the hidden layer, restricted to a box.

Each hidden neuron with a nonzero weight row contributes the hyperplane
w . x + b = 0.  Neurons whose (w, b) pairs are scalar multiples of each
other describe the same geometric plane and are merged into a
coincidence group; the breadth-first search over activation patterns
flips a whole group at a time, which keeps the search complete when a
plane is shared by oppositely-oriented neurons.

Regions are convex polytopes {x : Ax <= b} built from one halfspace per
coincidence group plus the 2p box facets.  Each region carries its
Chebyshev center (deepest interior point), its vertex set, and the list
of groups supporting one of its facets.
"""

from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import HalfspaceIntersection, QhullError

from .errors import (
    BudgetExceeded,
    ConfigError,
    DimensionError,
    LPError,
    NumericalError,
    Unbounded,
)
from .network import ShallowReluNet, activation_pattern

ZERO_NORMAL_TOL = 1e-12
COINCIDENCE_RTOL = 1e-9
VERTEX_TOL_FACTOR = 1e-7
DEGENERACY_TOL_FACTOR = 1e-9
ON_PLANE_TOL = 1e-7
DEFAULT_REGION_CAP = 5_000_000


@dataclass(frozen=True)
class Hyperplane:
    """The plane normal . x + offset = 0 contributed by one hidden neuron."""

    normal: np.ndarray
    offset: float
    neuron: int


@dataclass(frozen=True)
class Box:
    """Axis-aligned compact region of interest [lo_1,hi_1] x ... x [lo_p,hi_p]."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ConfigError("invalid box: lo and hi must be vectors of equal length")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ConfigError("invalid box: non-finite bound")
        if not np.all(lo < hi):
            raise ConfigError(f"invalid box: need lo < hi componentwise, got {lo} .. {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.size

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.hi - self.lo))

    def halfspaces(self):
        """Box facets as (A, b) with Ax <= b."""
        p = self.dim
        A = np.vstack([np.eye(p), -np.eye(p)])
        b = np.concatenate([self.hi, -self.lo])
        return A, b

    def volume(self) -> float:
        return float(np.prod(self.hi - self.lo))


@dataclass
class Region:
    """One full-dimensional polytope of the arrangement inside the box."""

    id: int
    pattern: np.ndarray          # per-neuron activation bits, length n
    A: np.ndarray                # halfspace matrix, region = {x : Ax <= b}
    b: np.ndarray
    vertices: np.ndarray         # (V, p), lexicographically sorted
    interior_point: np.ndarray   # Chebyshev center
    chebyshev_radius: float
    bbox: Box                    # componentwise extent of the vertices
    facet_groups: tuple          # coincidence groups supporting a facet

    def contains(self, x, tol: float = 1e-9):
        """Membership test; x may be a point or a batch of points."""
        x = np.asarray(x, dtype=float)
        return np.all(x @ self.A.T <= self.b + tol, axis=-1)


@dataclass
class RegionSet:
    """All regions of a network's arrangement restricted to a box."""

    regions: list
    hyperplanes: list
    coincidence_groups: list     # partition of hyperplane indices
    box: Box
    group_normals: np.ndarray    # (k, p) unit representative normals
    group_offsets: np.ndarray    # (k,)
    always_active: tuple = ()    # zero-row neurons with positive bias
    always_inactive: tuple = ()

    def __len__(self):
        return len(self.regions)


def hyperplanes_from_network(net: ShallowReluNet):
    """Hyperplanes of the hidden layer plus their coincidence grouping.

    Returns (planes, groups): groups partition indices into `planes`,
    merging neurons whose (w, b) rows are proportional.  Zero-normal
    neurons cut nothing and are left out with a warning; their bias sign
    fixes their activation bit globally.
    """
    planes = []
    for l in range(net.hidden_dim):
        w = net.W1[l]
        if np.linalg.norm(w) <= ZERO_NORMAL_TOL:
            state = "always-active" if net.b1[l] > 0 else "always-inactive"
            warnings.warn(
                f"hidden unit {l} has a zero weight row ({state}); "
                "excluded from the arrangement",
                stacklevel=2,
            )
            continue
        planes.append(Hyperplane(normal=w.copy(), offset=float(net.b1[l]), neuron=l))

    # Union-find over proportional (w, b) rows.
    parent = list(range(len(planes)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    augmented = [np.concatenate([pl.normal, [pl.offset]]) for pl in planes]
    for i in range(len(planes)):
        for j in range(i + 1, len(planes)):
            u, v = augmented[i], augmented[j]
            lam = float(u @ v) / float(v @ v)
            if lam != 0.0 and np.linalg.norm(u - lam * v) <= COINCIDENCE_RTOL * np.linalg.norm(u):
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)

    groups_by_root = {}
    for i in range(len(planes)):
        groups_by_root.setdefault(find(i), []).append(i)
    groups = [groups_by_root[r] for r in sorted(groups_by_root)]
    return planes, groups


def chebyshev_center(A: np.ndarray, b: np.ndarray):
    """Deepest interior point of {x : Ax <= b} and its inscribed radius.

    Solves max r subject to A_i . x + r ||A_i|| <= b_i with r free, so a
    nonpositive radius signals an empty or measure-zero polytope.  The
    polytope must be bounded (include box facets), otherwise Unbounded
    is raised.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, p = A.shape
    if m == 0:
        raise Unbounded("no constraints; include bounding-box facets")
    norms = np.linalg.norm(A, axis=1)
    cost = np.zeros(p + 1)
    cost[-1] = -1.0
    res = linprog(cost, A_ub=np.column_stack([A, norms]), b_ub=b,
                  bounds=[(None, None)] * (p + 1), method="highs")
    if res.status == 3:
        raise Unbounded("Chebyshev LP unbounded; include bounding-box facets")
    if res.status != 0:
        raise LPError(f"Chebyshev LP failed: {res.message}")
    return res.x[:p], float(res.x[-1])


def vertex_enumeration(A: np.ndarray, b: np.ndarray, interior: np.ndarray,
                       scale: float | None = None) -> np.ndarray:
    """All vertices of the bounded polytope {x : Ax <= b}.

    `interior` must be strictly feasible.  Duplicates are merged at
    tolerance VERTEX_TOL_FACTOR * scale; when scale is omitted it is
    taken from the polytope's own extent.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    interior = np.asarray(interior, dtype=float)
    halfspaces = np.column_stack([A, -b])
    try:
        hs = HalfspaceIntersection(halfspaces, interior)
    except QhullError as exc:
        raise NumericalError(f"halfspace intersection failed: {exc}") from exc
    raw = np.asarray(hs.intersections, dtype=float)
    if raw.size == 0 or not np.all(np.isfinite(raw)):
        raise NumericalError("halfspace intersection returned no finite vertices")
    if scale is None:
        extent = raw.max(axis=0) - raw.min(axis=0)
        scale = max(1.0, float(np.max(extent)))
    tol = VERTEX_TOL_FACTOR * scale
    order = np.lexsort(raw.T[::-1])
    kept = []
    for idx in order:
        v = raw[idx]
        if all(np.linalg.norm(v - u) > tol for u in kept):
            kept.append(v)
    return np.array(kept)


def _pattern_from_sides(net, planes, groups, orientations, sides) -> np.ndarray:
    """Per-neuron activation bits implied by per-group sides (+1/-1)."""
    bits = np.zeros(net.hidden_dim, dtype=np.int8)
    # Zero-row neurons keep a global bit from their bias sign.
    covered = {pl.neuron for pl in planes}
    for l in range(net.hidden_dim):
        if l not in covered and net.b1[l] > 0:
            bits[l] = 1
    for g, members in enumerate(groups):
        for i in members:
            if orientations[g][i] * sides[g] > 0:
                bits[planes[i].neuron] = 1
    return bits


def _region_halfspaces(box, group_normals, group_offsets, sides):
    """Stack per-group halfspaces (on the side given by `sides`) and box facets."""
    box_A, box_b = box.halfspaces()
    if len(sides) == 0:
        return box_A, box_b
    s = np.asarray(sides, dtype=float)
    A = np.vstack([-(s[:, None] * group_normals), box_A])
    b = np.concatenate([s * group_offsets, box_b])
    return A, b


def _seed_point(box, group_normals, group_offsets):
    """Deterministic strictly-feasible start: box center, nudged off planes."""
    center = 0.5 * (box.lo + box.hi)
    width = box.hi - box.lo
    step = 0.37 * 0.5 * (0.001 ** (1.0 / box.dim)) * width
    x = center.copy()
    for _ in range(200):
        if len(group_normals) == 0:
            return x
        dist = np.abs(group_normals @ x + group_offsets)
        if np.min(dist) > ON_PLANE_TOL * (1.0 + np.linalg.norm(x)):
            return x
        x = np.clip(x + step, box.lo + 1e-6 * width, box.hi - 1e-6 * width)
    raise NumericalError("could not find a seed point clear of all hyperplanes")


def enumerate_regions(net: ShallowReluNet, box: Box,
                      region_cap: int = DEFAULT_REGION_CAP) -> RegionSet:
    """Breadth-first enumeration of all full-dimensional regions in the box.

    Starting from the region containing a seed point, neighbors are
    generated by flipping one coincidence group at a time, restricted to
    groups supporting a facet of the current region.  Degenerate
    candidates (Chebyshev radius at or below tolerance) are discarded.
    Region ids are assigned after sorting patterns lexicographically, so
    the result is independent of visit order.
    """
    if box.dim != net.input_dim:
        raise DimensionError(f"box dimension {box.dim} != input_dim {net.input_dim}")
    planes, groups = hyperplanes_from_network(net)

    k = len(groups)
    p = net.input_dim
    group_normals = np.zeros((k, p))
    group_offsets = np.zeros(k)
    orientations = []  # per group: {plane index -> +-1 relative to representative}
    for g, members in enumerate(groups):
        rep = planes[members[0]]
        nrm = np.linalg.norm(rep.normal)
        group_normals[g] = rep.normal / nrm
        group_offsets[g] = rep.offset / nrm
        orient = {}
        for i in members:
            lam = float(planes[i].normal @ group_normals[g])
            orient[i] = 1 if lam > 0 else -1
        orientations.append(orient)

    covered = {pl.neuron for pl in planes}
    always_active = tuple(l for l in range(net.hidden_dim)
                          if l not in covered and net.b1[l] > 0)
    always_inactive = tuple(l for l in range(net.hidden_dim)
                            if l not in covered and net.b1[l] <= 0)

    deg_tol = DEGENERACY_TOL_FACTOR * box.diameter
    seed = _seed_point(box, group_normals, group_offsets)
    seed_sides = tuple(1 if group_normals[g] @ seed + group_offsets[g] > 0 else -1
                       for g in range(k))

    visited = {seed_sides}
    queue = deque([seed_sides])
    solved = []
    while queue:
        sides = queue.popleft()
        A, b = _region_halfspaces(box, group_normals, group_offsets, sides)
        center, radius = chebyshev_center(A, b)
        if radius <= deg_tol:
            continue
        vertices = vertex_enumeration(A, b, center, scale=box.diameter)
        facets = []
        for g in range(k):
            resid = np.abs(vertices @ group_normals[g] + group_offsets[g])
            vnorm = 1.0 + np.linalg.norm(vertices, axis=1)
            if np.any(resid <= ON_PLANE_TOL * vnorm):
                facets.append(g)
        solved.append((sides, A, b, center, radius, vertices, tuple(facets)))
        if len(solved) > region_cap:
            raise BudgetExceeded(f"more than {region_cap} regions; raise the cap to continue")
        for g in facets:
            flipped = tuple(-s if i == g else s for i, s in enumerate(sides))
            if flipped not in visited:
                visited.add(flipped)
                queue.append(flipped)

    records = []
    for sides, A, b, center, radius, vertices, facets in solved:
        bits = _pattern_from_sides(net, planes, groups, orientations, sides)
        records.append((tuple(bits), A, b, center, radius, vertices, facets))
    records.sort(key=lambda r: r[0])

    regions = []
    for rid, (bits, A, b, center, radius, vertices, facets) in enumerate(records):
        regions.append(Region(
            id=rid,
            pattern=np.array(bits, dtype=np.int8),
            A=A, b=b,
            vertices=vertices,
            interior_point=center,
            chebyshev_radius=radius,
            bbox=Box(lo=vertices.min(axis=0), hi=vertices.max(axis=0)),
            facet_groups=facets,
        ))
    return RegionSet(
        regions=regions,
        hyperplanes=planes,
        coincidence_groups=groups,
        box=box,
        group_normals=group_normals,
        group_offsets=group_offsets,
        always_active=always_active,
        always_inactive=always_inactive,
    )


def region_count_oracle(net: ShallowReluNet, box: Box, grid_n: int) -> int:
    """Distinct activation patterns over a dense grid (test oracle, p <= 3).

    Grid points sitting on a hyperplane are dropped so every counted
    pattern belongs to a full-dimensional region; the result is a lower
    bound on the true region count.
    """
    p = box.dim
    if p > 3:
        raise DimensionError("grid oracle is limited to p <= 3")
    axes = [box.lo[j] + (np.arange(grid_n) + 0.5) * (box.hi[j] - box.lo[j]) / grid_n
            for j in range(p)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.column_stack([m.ravel() for m in mesh])

    planes, _ = hyperplanes_from_network(net)
    if planes:
        N = np.array([pl.normal / np.linalg.norm(pl.normal) for pl in planes])
        c = np.array([pl.offset / np.linalg.norm(pl.normal) for pl in planes])
        dist = np.abs(pts @ N.T + c)
        pts = pts[np.all(dist > 1e-9 * box.diameter, axis=1)]

    patterns = activation_pattern(net, pts)
    return len(np.unique(patterns, axis=0))

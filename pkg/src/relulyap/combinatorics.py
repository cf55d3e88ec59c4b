"""Intersection-poset combinatorics for region-count bounds.

The flats of an arrangement are the nonempty intersections of its
hyperplanes (including the ambient space).  Ordered by reverse
inclusion, with the Mobius recursion

    mu(ambient) = 1,    mu(y) = -sum_{x < y} mu(x),

the characteristic polynomial chi(t) = sum mu(x) t^dim(x) counts regions
via Zaslavsky's theorem: r = (-1)^p chi(-1).  Restricted to a compact
box this is an upper bound.  Diagnostic only; the verifier never needs
it, so the construction is capped at a small number of planes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space

from .errors import LimitExceeded
from .network import ShallowReluNet

DEFAULT_PLANE_LIMIT = 16
CONTAINMENT_TOL = 1e-8


@dataclass
class Flat:
    """A nonempty intersection of hyperplanes (the ambient space included)."""

    id: int
    dim: int
    basepoint: np.ndarray
    direction_basis: np.ndarray   # (p, dim) orthonormal columns
    generators: frozenset         # indices of all planes containing the flat


@dataclass
class FlatPoset:
    flats: list
    less: dict      # flat id -> frozenset of ids strictly below (containing it)
    mobius: dict    # flat id -> int
    dim: int        # ambient dimension


@dataclass(frozen=True)
class CharPoly:
    """Integer coefficients indexed by degree 0..p; leading coefficient 1."""

    coefficients: tuple

    def __call__(self, t: int) -> int:
        return sum(c * t ** d for d, c in enumerate(self.coefficients))

    def __str__(self):
        terms = []
        for d in range(len(self.coefficients) - 1, -1, -1):
            c = self.coefficients[d]
            if c == 0:
                continue
            mag = abs(c)
            if d == 0:
                body = f"{mag}"
            elif d == 1:
                body = "t" if mag == 1 else f"{mag}t"
            else:
                body = f"t^{d}" if mag == 1 else f"{mag}t^{d}"
            if not terms:
                terms.append(body if c > 0 else f"-{body}")
            else:
                terms.append(f"+ {body}" if c > 0 else f"- {body}")
        return " ".join(terms) if terms else "0"


def _solve_flat(normals, offsets, rows, p):
    """Affine solution set of the stacked plane equations, or None if empty."""
    if not rows:
        return np.zeros(p), np.eye(p)
    N = normals[rows]
    c = -offsets[rows]
    x0, *_ = np.linalg.lstsq(N, c, rcond=None)
    if np.linalg.norm(N @ x0 - c) > CONTAINMENT_TOL * (1.0 + np.linalg.norm(x0)):
        return None
    basis = null_space(N)
    return x0, basis


def _containing_planes(normals, offsets, basepoint, basis):
    """All plane indices whose hyperplane contains the given flat."""
    resid = np.abs(normals @ basepoint + offsets)
    tol = CONTAINMENT_TOL * (1.0 + np.linalg.norm(basepoint))
    on_point = resid <= tol
    if basis.shape[1] > 0:
        along = np.max(np.abs(normals @ basis), axis=1)
        on_point &= along <= CONTAINMENT_TOL
    return frozenset(int(i) for i in np.nonzero(on_point)[0])


def build_flat_poset(planes, p: int, limit: int = DEFAULT_PLANE_LIMIT) -> FlatPoset:
    """All distinct flats of a deduplicated arrangement, with Mobius values.

    `planes` is a sequence of objects with .normal and .offset (one per
    coincidence group).  Flats are grown by intersecting known flats
    with single hyperplanes until closure; each flat is identified by
    the full set of planes containing it, which makes the containment
    order a plain subset test.
    """
    if len(planes) > limit:
        raise LimitExceeded(f"{len(planes)} planes exceed the poset limit of {limit}")
    if len(planes) == 0:
        ambient = Flat(id=0, dim=p, basepoint=np.zeros(p),
                       direction_basis=np.eye(p), generators=frozenset())
        return FlatPoset(flats=[ambient], less={0: frozenset()}, mobius={0: 1}, dim=p)

    normals = np.array([pl.normal / np.linalg.norm(pl.normal) for pl in planes])
    offsets = np.array([pl.offset / np.linalg.norm(pl.normal) for pl in planes])

    by_gens = {}
    ambient_key = frozenset()
    by_gens[ambient_key] = (np.zeros(p), np.eye(p))
    work = [ambient_key]
    while work:
        key = work.pop()
        basepoint, basis = by_gens[key]
        for i in range(len(planes)):
            if i in key:
                continue
            sol = _solve_flat(normals, offsets, sorted(key | {i}), p)
            if sol is None:
                continue
            gens = _containing_planes(normals, offsets, sol[0], sol[1])
            if gens not in by_gens:
                by_gens[gens] = sol
                work.append(gens)

    flats = []
    for gens in sorted(by_gens, key=lambda g: (len(g), sorted(g))):
        basepoint, basis = by_gens[gens]
        flats.append(Flat(id=len(flats), dim=basis.shape[1],
                          basepoint=basepoint, direction_basis=basis,
                          generators=gens))

    less = {}
    for f in flats:
        less[f.id] = frozenset(g.id for g in flats
                               if g.generators < f.generators)

    mobius = {}
    for f in sorted(flats, key=lambda f: -f.dim):
        if not f.generators:
            mobius[f.id] = 1
        else:
            mobius[f.id] = -sum(mobius[x] for x in less[f.id])
    return FlatPoset(flats=flats, less=less, mobius=mobius, dim=p)


def characteristic_polynomial(poset: FlatPoset) -> CharPoly:
    """chi(t) = sum over flats of mu(flat) * t^dim(flat)."""
    coeffs = [0] * (poset.dim + 1)
    for f in poset.flats:
        coeffs[f.dim] += poset.mobius[f.id]
    return CharPoly(coefficients=tuple(coeffs))


def zaslavsky_count(chi: CharPoly, p: int) -> int:
    """Exact region count of the unrestricted arrangement: (-1)^p chi(-1)."""
    return (-1) ** p * chi(-1)


def region_upper_bound(net: ShallowReluNet, limit: int = DEFAULT_PLANE_LIMIT):
    """Zaslavsky count of the network's deduplicated arrangement.

    One representative plane per coincidence group; inside a compact box
    the enumerated region count never exceeds this value.  Returns
    (bound, chi, n_dedup_planes).
    """
    from .arrangement import hyperplanes_from_network

    planes, groups = hyperplanes_from_network(net)
    reps = [planes[members[0]] for members in groups]
    poset = build_flat_poset(reps, net.input_dim, limit=limit)
    chi = characteristic_polynomial(poset)
    return zaslavsky_count(chi, net.input_dim), chi, len(reps)

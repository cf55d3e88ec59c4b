"""Intersection poset, Mobius values, characteristic polynomial, bounds."""

import numpy as np
import pytest

from relulyap.arrangement import Box, Hyperplane, enumerate_regions
from relulyap.combinatorics import (
    CharPoly,
    build_flat_poset,
    characteristic_polynomial,
    region_upper_bound,
    zaslavsky_count,
)
from relulyap.errors import LimitExceeded
from relulyap.network import ShallowReluNet, l1_norm_net


def line(w, b):
    return Hyperplane(normal=np.asarray(w, dtype=float), offset=float(b), neuron=0)


def worked_example_planes():
    """Two horizontal lines y = 1 and y = -1 plus one transversal."""
    return [line([0, 1], -1), line([4, -3], 0), line([0, 1], 1)]


def mobius_via_geometry(poset):
    """Independent Mobius recomputation from geometric flat containment."""
    def contains(f, g):
        # flat f contains flat g: g's basepoint sits in f's affine hull
        # and every direction of g stays inside it (projector test).
        tol = 1e-7 * (1 + np.linalg.norm(g.basepoint))
        D = f.direction_basis
        diff = g.basepoint - f.basepoint
        resid = diff - D @ (D.T @ diff)
        if np.linalg.norm(resid) > tol:
            return False
        if g.direction_basis.shape[1] == 0:
            return True
        G = g.direction_basis
        proj = G - D @ (D.T @ G)
        return float(np.max(np.abs(proj))) <= 1e-7

    order = sorted(poset.flats, key=lambda f: -f.dim)
    mob = {}
    for f in order:
        below = [g for g in poset.flats
                 if g.dim > f.dim and contains(g, f)]
        if f.dim == poset.dim:
            mob[f.id] = 1
        else:
            mob[f.id] = -sum(mob[g.id] for g in below)
    return mob


class TestWorkedExample:
    def test_poset_structure(self):
        poset = build_flat_poset(worked_example_planes(), 2)
        dims = sorted(f.dim for f in poset.flats)
        assert dims == [0, 0, 1, 1, 1, 2]
        mob = [poset.mobius[f.id] for f in poset.flats]
        by_dim = {2: [], 1: [], 0: []}
        for f in poset.flats:
            by_dim[f.dim].append(poset.mobius[f.id])
        assert by_dim[2] == [1]
        assert by_dim[1] == [-1, -1, -1]
        assert by_dim[0] == [1, 1]

    def test_intersection_points(self):
        poset = build_flat_poset(worked_example_planes(), 2)
        points = sorted(tuple(np.round(f.basepoint, 6)) for f in poset.flats
                        if f.dim == 0)
        assert points == [(-0.75, -1.0), (0.75, 1.0)]

    def test_characteristic_polynomial(self):
        poset = build_flat_poset(worked_example_planes(), 2)
        chi = characteristic_polynomial(poset)
        assert chi.coefficients == (2, -3, 1)
        assert str(chi) == "t^2 - 3t + 2"

    def test_region_count_six(self):
        chi = characteristic_polynomial(build_flat_poset(worked_example_planes(), 2))
        assert zaslavsky_count(chi, 2) == 6


class TestPosetConstruction:
    def test_empty_arrangement(self):
        poset = build_flat_poset([], 3)
        assert len(poset.flats) == 1
        assert poset.mobius[poset.flats[0].id] == 1
        chi = characteristic_polynomial(poset)
        assert chi.coefficients == (0, 0, 0, 1)
        assert zaslavsky_count(chi, 3) == 1

    def test_three_generic_lines(self):
        # a triangle: three line flats, three point flats with mu = 1
        planes = [line([1, 0], 0), line([0, 1], 0), line([1, 1], -2)]
        poset = build_flat_poset(planes, 2)
        points = [f for f in poset.flats if f.dim == 0]
        assert len(points) == 3
        assert all(poset.mobius[f.id] == 1 for f in points)
        chi = characteristic_polynomial(poset)
        assert chi.coefficients == (3, -3, 1)
        assert zaslavsky_count(chi, 2) == 7

    def test_boolean_arrangement(self):
        planes = [line([1, 0], 0), line([0, 1], 0)]
        chi = characteristic_polynomial(build_flat_poset(planes, 2))
        assert chi.coefficients == (1, -2, 1)
        assert zaslavsky_count(chi, 2) == 4

    def test_central_three_lines(self):
        # three concurrent lines: one double point with mu = 2
        planes = [line([1, 0], 0), line([0, 1], 0), line([1, 1], 0)]
        poset = build_flat_poset(planes, 2)
        points = [f for f in poset.flats if f.dim == 0]
        assert len(points) == 1
        assert poset.mobius[points[0].id] == 2
        chi = characteristic_polynomial(poset)
        assert zaslavsky_count(chi, 2) == 6

    def test_limit(self):
        planes = [line([1, i * 0.01], i) for i in range(17)]
        with pytest.raises(LimitExceeded):
            build_flat_poset(planes, 2)

    def test_mobius_recursion_via_independent_geometry(self):
        rng = np.random.default_rng(77)
        for trial in range(10):
            k = int(rng.integers(1, 5))
            planes = [line(rng.normal(size=2), rng.uniform(-2, 2))
                      for _ in range(k)]
            poset = build_flat_poset(planes, 2)
            independent = mobius_via_geometry(poset)
            assert independent == poset.mobius

    def test_whitney_sign_alternation(self):
        rng = np.random.default_rng(79)
        for _ in range(10):
            k = int(rng.integers(1, 6))
            planes = [line(rng.normal(size=3), rng.uniform(-2, 2))
                      for _ in range(k)]
            chi = characteristic_polynomial(build_flat_poset(planes, 3))
            for d, c in enumerate(chi.coefficients):
                if c != 0:
                    assert np.sign(c) == (-1) ** (3 - d)


def random_generic_lines(rng, k):
    """Random lines with well-separated angles and nearby intersections.

    Rejection keeps every pairwise normal determinant >= 0.3 (angles
    above ~17 degrees) and every pair of intersection points >= 0.8
    apart, so a fine sampling grid resolves every region.
    """
    while True:
        planes = []
        for _ in range(k):
            w = rng.normal(size=2)
            w /= np.linalg.norm(w)
            planes.append(line(w, rng.uniform(-1.5, 1.5)))
        pts = []
        ok = True
        for i in range(k):
            for j in range(i + 1, k):
                M = np.array([planes[i].normal, planes[j].normal])
                if abs(np.linalg.det(M)) < 0.3:
                    ok = False
                    break
                pts.append(np.linalg.solve(M, [-planes[i].offset,
                                               -planes[j].offset]))
            if not ok:
                break
        if ok:
            for a in range(len(pts)):
                for b in range(a + 1, len(pts)):
                    if np.linalg.norm(pts[a] - pts[b]) < 0.8:
                        ok = False
        if ok:
            hw = 4.0
            for x in pts:
                hw = max(hw, 2.0 * float(np.max(np.abs(x))))
            return planes, hw


def grid_region_count(planes, p, box_hw, grid_n=None):
    """Sampling oracle: count distinct sign vectors on a grid."""
    if grid_n is None:
        grid_n = min(1200, max(600, int(box_hw * 60)))
    axes = [np.linspace(-box_hw, box_hw, grid_n) + 0.001234 for _ in range(p)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.column_stack([m.ravel() for m in mesh])
    N = np.array([pl.normal for pl in planes])
    c = np.array([pl.offset for pl in planes])
    vals = pts @ N.T + c
    keep = np.all(np.abs(vals) > 1e-9, axis=1)
    # pack each sign vector into one integer so np.unique stays cheap
    codes = (vals[keep] > 0) @ (1 << np.arange(len(planes)))
    return len(np.unique(codes))


class TestZaslavskyAgainstSampling:
    def test_random_line_arrangements(self):
        rng = np.random.default_rng(83)
        agree = 0
        for trial in range(30):
            k = int(rng.integers(1, 5))
            # box big enough to contain every pairwise intersection
            planes, hw = random_generic_lines(rng, k)
            chi = characteristic_polynomial(build_flat_poset(planes, 2))
            expected = zaslavsky_count(chi, 2)
            assert grid_region_count(planes, 2, hw) == expected
            agree += 1
        assert agree == 30


class TestRegionUpperBound:
    def test_l1_p2_deduplicated(self):
        bound, chi, n_planes = region_upper_bound(l1_norm_net(2))
        assert bound == 4
        assert n_planes == 2
        assert chi.coefficients == (1, -2, 1)

    def test_empty_arrangement_net(self):
        net = ShallowReluNet(2, 2, np.zeros((2, 2)), np.array([1.0, -1.0]),
                             np.ones(2), 0.0)
        with pytest.warns(UserWarning):
            bound, _, n_planes = region_upper_bound(net)
        assert bound == 1 and n_planes == 0

    def test_three_generic_planes(self):
        W1 = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        net = ShallowReluNet(2, 3, W1, np.array([0.0, 0.0, -2.0]),
                             np.ones(3), 0.0)
        bound, _, _ = region_upper_bound(net)
        assert bound == 7

    def test_enumeration_never_exceeds_bound(self):
        box = Box(lo=np.full(2, -10.0), hi=np.full(2, 10.0))
        for p in (2, 3):
            net = l1_norm_net(p)
            bound, _, _ = region_upper_bound(net)
            count = len(enumerate_regions(
                net, Box(lo=np.full(p, -10.0), hi=np.full(p, 10.0))))
            assert count <= bound
            assert count == 2 ** p and bound == 2 ** p


class TestCharPolyFormatting:
    def test_monomial(self):
        assert str(CharPoly((0, 0, 0, 1))) == "t^3"

    def test_evaluate(self):
        chi = CharPoly((2, -3, 1))
        assert chi(-1) == 6
        assert chi(1) == 0

"""Acceptance gate: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
summary lines.
"""

import time

import numpy as np
import pytest

from relulyap.arrangement import Box, enumerate_regions
from relulyap.combinatorics import (
    build_flat_poset,
    characteristic_polynomial,
    region_upper_bound,
    zaslavsky_count,
)
from relulyap.dynamics import builtin, eval_f, parse_dynamics
from relulyap.gopt import Budget, PolytopeDomain, global_max
from relulyap.network import (
    ShallowReluNet,
    activation_pattern,
    eval_v,
    l1_norm_net,
    region_gradient,
)
from relulyap.verifier import (
    counterexample_valid,
    hole_halfwidths,
    householder_to_e1,
    verify,
)

from test_combinatorics import (
    grid_region_count,
    mobius_via_geometry,
    random_generic_lines,
    worked_example_planes,
)


def box(p, lo, hi):
    return Box(lo=np.full(p, lo), hi=np.full(p, hi))


# --- criterion 3/4 shared battery ---------------------------------------

def _random_2d_net(rng):
    """n <= 8 hidden units, weights in [-2, 2], output bias zeroing V(0)."""
    n = int(rng.integers(2, 9))
    raw = ShallowReluNet(2, n,
                         rng.uniform(-2, 2, size=(n, 2)),
                         rng.uniform(-2, 2, size=n),
                         rng.uniform(-2, 2, size=n), 0.0)
    return ShallowReluNet(2, n, raw.W1, raw.b1, raw.w2,
                          -eval_v(raw, np.zeros(2)))


def _grid_oracle_violation(net, b, hole_frac, n=500):
    """Independent 500x500 grid check of all three conditions."""
    if abs(eval_v(net, np.zeros(net.input_dim))) > 1e-9:
        return True
    h = hole_halfwidths(b, hole_frac)
    axes = [np.linspace(b.lo[j], b.hi[j], n) for j in range(2)]
    pts = np.column_stack([m.ravel() for m in np.meshgrid(*axes, indexing="ij")])
    pts = pts[~np.all(np.abs(pts) < h, axis=1)]
    pre = pts @ net.W1.T + net.b1
    V = np.maximum(pre, 0.0) @ net.w2 + net.b2
    if np.any(V <= 0.0):
        return True
    norms = np.linalg.norm(net.W1, axis=1)
    ok = norms > 0
    clear = np.all(np.abs(pre[:, ok]) / norms[ok] > 1e-9, axis=1)
    U = (pre > 0.0).astype(float)
    G = (U * net.w2) @ net.W1
    F = np.column_stack([-pts[:, 0] + pts[:, 0] * pts[:, 1],
                         -pts[:, 1] - pts[:, 0] ** 2])
    return bool(np.any(np.sum(G * F, axis=1)[clear] >= 0.0))


@pytest.fixture(scope="module")
def grid_battery():
    """20 random 2D nets against the bilinear oscillator, plus extras."""
    rng = np.random.default_rng(20260809)
    b = box(2, -4.0, 4.0)
    model = builtin("bilinear_osc", 2)
    runs = []
    for _ in range(20):
        net = _random_2d_net(rng)
        report = verify(net, model, b)
        oracle = _grid_oracle_violation(net, b, 0.001)
        regions = enumerate_regions(net, b)
        runs.append((net, model, b, report, oracle, regions))
    return runs


# --- the eight criteria --------------------------------------------------

def test_criterion_1_table_region_counts():
    t0 = time.perf_counter()
    counts = []
    for p in range(2, 7):
        net = l1_norm_net(p)  # n = 2p hidden units
        rs = enumerate_regions(net, box(p, -10.0, 10.0))
        counts.append(len(rs))
        assert len(rs) == 2 ** p
    elapsed = time.perf_counter() - t0
    assert counts == [4, 8, 16, 32, 64]
    assert elapsed < 10.0
    print(f"\n[criterion 1] PASS: region counts {counts} for p=2..6 "
          f"in {elapsed:.2f}s (< 10 s)")


def test_criterion_2_verified_verdicts():
    t0 = time.perf_counter()
    for p in range(2, 7):
        net = l1_norm_net(p)
        report = verify(net, builtin("neg_cubic", p), box(p, -10.0, 10.0))
        assert report.verdict == "Verified", f"p={p} not verified"
        assert len(report.counterexamples) == 0
        assert report.region_count == 2 ** p
    elapsed = time.perf_counter() - t0
    assert elapsed < 60.0
    print(f"\n[criterion 2] PASS: Verified with |S| = 0 for p=2..6 "
          f"in {elapsed:.1f}s (< 60 s)")


def test_criterion_3_grid_oracle_completeness(grid_battery):
    t0 = time.perf_counter()
    n_oracle_falsified = 0
    n_verifier_only = 0
    for net, model, b, report, oracle, regions in grid_battery:
        if oracle:
            n_oracle_falsified += 1
            assert report.verdict == "Falsified", \
                "oracle found a violation the verifier missed"
        elif report.verdict == "Falsified":
            n_verifier_only += 1
            for ce in report.counterexamples:
                assert counterexample_valid(net, model, regions, b, 0.001, ce), \
                    "verifier-only counterexample failed re-validation"
    elapsed = time.perf_counter() - t0
    assert len(grid_battery) >= 20
    assert elapsed < 300.0
    print(f"\n[criterion 3] PASS: {len(grid_battery)} nets, "
          f"{n_oracle_falsified} oracle-falsified all caught, "
          f"{n_verifier_only} verifier-only falsifications re-validated")


def test_criterion_4_counterexample_soundness(grid_battery):
    total = 0
    failures = 0
    for net, model, b, report, _, regions in grid_battery:
        for ce in report.counterexamples:
            total += 1
            if not counterexample_valid(net, model, regions, b, 0.001, ce):
                failures += 1
    # dedicated falsified runs on top of the battery
    b2 = box(2, -10.0, 10.0)
    l1 = l1_norm_net(2)
    extras = [
        (ShallowReluNet(2, 4, l1.W1, l1.b1, -np.ones(4), 0.0),
         builtin("neg_cubic", 2)),
        (l1, parse_dynamics(["x1", "x2"], 2)),
        (ShallowReluNet(2, 4, l1.W1, l1.b1, np.zeros(4), 0.0),
         builtin("neg_cubic", 2)),
        (ShallowReluNet(2, 4, l1.W1, l1.b1, l1.w2, 0.5),
         builtin("neg_cubic", 2)),
    ]
    for net, model in extras:
        report = verify(net, model, b2)
        regions = enumerate_regions(net, b2)
        assert report.verdict == "Falsified"
        for ce in report.counterexamples:
            total += 1
            if not counterexample_valid(net, model, regions, b2, 0.001, ce):
                failures += 1
    assert failures == 0, f"{failures}/{total} counterexamples failed re-validation"
    assert total > 0
    print(f"\n[criterion 4] PASS: {total}/{total} counterexamples re-validated")


def test_criterion_5_rotation_and_gradient_numerics():
    t0 = time.perf_counter()
    rng = np.random.default_rng(515)
    checked_pairs = 0
    for p in (2, 3, 5, 10):
        for _ in range(1000):
            g = rng.normal(size=p)
            f = rng.normal(size=p)
            if np.linalg.norm(g) < 1e-8:
                continue
            rot = householder_to_e1(g)
            err = abs(g @ f - np.linalg.norm(g) * (rot.matrix @ f)[0])
            assert err <= 1e-9 * np.linalg.norm(g) * np.linalg.norm(f)
            checked_pairs += 1

    step = 1e-5
    checked_nets = 0
    while checked_nets < 200:
        p = int(rng.integers(2, 6))
        n = int(rng.integers(2, 9))
        net = ShallowReluNet(2, n, rng.uniform(-2, 2, (n, 2)),
                             rng.uniform(-2, 2, n), rng.uniform(-2, 2, n),
                             0.0) if p == 2 else ShallowReluNet(
            p, n, rng.uniform(-2, 2, (n, p)), rng.uniform(-2, 2, n),
            rng.uniform(-2, 2, n), 0.0)
        x = rng.uniform(-3, 3, size=net.input_dim)
        pre = net.W1 @ x + net.b1
        if np.min(np.abs(pre)) < 10 * step * max(1.0, float(np.max(np.abs(net.W1)))):
            continue
        g = region_gradient(net, activation_pattern(net, x))
        fd = np.empty(net.input_dim)
        for j in range(net.input_dim):
            e = np.zeros(net.input_dim)
            e[j] = step
            fd[j] = (eval_v(net, x + e) - eval_v(net, x - e)) / (2 * step)
        assert np.max(np.abs(g - fd)) <= 1e-4
        checked_nets += 1
    elapsed = time.perf_counter() - t0
    assert elapsed < 30.0
    print(f"\n[criterion 5] PASS: {checked_pairs} rotation pairs and "
          f"{checked_nets} gradient checks in {elapsed:.1f}s (< 30 s)")


def test_criterion_6_combinatorics():
    poset = build_flat_poset(worked_example_planes(), 2)
    chi = characteristic_polynomial(poset)
    assert chi.coefficients == (2, -3, 1)
    assert zaslavsky_count(chi, 2) == 6
    assert mobius_via_geometry(poset) == poset.mobius

    rng = np.random.default_rng(606)
    agree = 0
    for _ in range(100):
        k = int(rng.integers(1, 5))
        planes, hw = random_generic_lines(rng, k)
        poset = build_flat_poset(planes, 2)
        assert mobius_via_geometry(poset) == poset.mobius
        chi = characteristic_polynomial(poset)
        expected = zaslavsky_count(chi, 2)
        assert grid_region_count(planes, 2, hw) == expected
        agree += 1
    assert agree == 100
    print(f"\n[criterion 6] PASS: worked example chi(t) = t^2 - 3t + 2 with "
          f"6 regions; {agree}/100 sampled arrangements match Zaslavsky")


def _battery_domains():
    """Ten objective/polytope pairs for the optimizer gate."""
    unit = PolytopeDomain(
        A=np.vstack([np.eye(2), -np.eye(2)]), b=np.array([1.0, 1.0, 0.0, 0.0]),
        bbox_lo=np.zeros(2), bbox_hi=np.ones(2), interior_point=np.full(2, 0.5))
    sym = PolytopeDomain(
        A=np.vstack([np.eye(2), -np.eye(2)]), b=np.ones(4),
        bbox_lo=np.full(2, -1.0), bbox_hi=np.ones(2), interior_point=np.zeros(2))
    tri = PolytopeDomain(
        A=np.array([[-1.0, 0.0], [0.0, -1.0], [1.0, 1.0]]),
        b=np.array([0.0, 0.0, 2.0]),
        bbox_lo=np.zeros(2), bbox_hi=np.full(2, 2.0),
        interior_point=np.full(2, 0.5))
    wide = PolytopeDomain(
        A=np.vstack([np.eye(2), -np.eye(2)]), b=np.array([2.0, 2.0, 0.0, 0.0]),
        bbox_lo=np.zeros(2), bbox_hi=np.full(2, 2.0), interior_point=np.ones(2))
    # irregular pentagon around (0.5, 0.5)
    angles = np.linspace(0, 2 * np.pi, 6)[:-1] + 0.3
    A5 = np.column_stack([np.cos(angles), np.sin(angles)])
    b5 = A5 @ np.full(2, 0.5) + np.array([0.9, 1.1, 0.8, 1.0, 1.2])
    pent = PolytopeDomain(A=A5, b=b5, bbox_lo=np.full(2, -1.0),
                          bbox_hi=np.full(2, 2.0), interior_point=np.full(2, 0.5))
    return [
        ("linear box", unit,
         lambda X: X @ np.array([1.0, 2.0]), lambda x: np.array([1.0, 2.0])),
        ("linear triangle", tri,
         lambda X: X @ np.array([2.0, -1.0]), lambda x: np.array([2.0, -1.0])),
        ("concave quad interior", unit,
         lambda X: -np.sum((X - 0.3) ** 2, axis=1), lambda x: -2 * (x - 0.3)),
        ("concave quad boundary", unit,
         lambda X: -np.sum((X - np.array([1.4, 0.5])) ** 2, axis=1),
         lambda x: -2 * (x - np.array([1.4, 0.5]))),
        ("saddle quad", sym,
         lambda X: X[:, 0] ** 2 - X[:, 1] ** 2,
         lambda x: np.array([2 * x[0], -2 * x[1]])),
        ("cubic triangle", tri,
         lambda X: X[:, 0] * X[:, 1] - X[:, 0] ** 3,
         lambda x: np.array([x[1] - 3 * x[0] ** 2, x[0]])),
        ("cubic corner", sym,
         lambda X: -X[:, 0] ** 3 - X[:, 1] ** 3,
         lambda x: np.array([-3 * x[0] ** 2, -3 * x[1] ** 2])),
        ("trig multimodal", wide,
         lambda X: np.sin(5 * X[:, 0]) + np.sin(5 * X[:, 1]),
         lambda x: 5 * np.cos(5 * x)),
        ("trig pentagon", pent,
         lambda X: np.sin(3 * X[:, 0]) * np.cos(3 * X[:, 1]),
         lambda x: np.array([3 * np.cos(3 * x[0]) * np.cos(3 * x[1]),
                             -3 * np.sin(3 * x[0]) * np.sin(3 * x[1])])),
        ("mixed cubic trig", wide,
         lambda X: X[:, 0] * X[:, 1] - X[:, 0] ** 3 + np.sin(2 * X[:, 1]),
         lambda x: np.array([x[1] - 3 * x[0] ** 2, x[0] + 2 * np.cos(2 * x[1])])),
    ]


def _grid_max(fun, dom, n=401):
    axes = [np.linspace(dom.bbox_lo[j], dom.bbox_hi[j], n) for j in range(dom.dim)]
    pts = np.column_stack([m.ravel() for m in np.meshgrid(*axes, indexing="ij")])
    feas = dom.feasible(pts, tol=1e-12)
    return float(np.max(fun(pts[feas])))


def test_criterion_7_optimizer_battery():
    hits = 0
    for name, dom, fun, grad in _battery_domains():
        first = global_max(fun, grad, dom)
        second = global_max(fun, grad, dom)
        assert first.value == second.value, f"{name}: value not reproducible"
        assert first.argmax.tobytes() == second.argmax.tobytes(), \
            f"{name}: argmax not bit-identical"
        oracle = _grid_max(fun, dom)
        assert first.value >= oracle - 1e-3, \
            f"{name}: optimizer {first.value} below grid oracle {oracle}"
        hits += 1
    assert hits == 10
    print(f"\n[criterion 7] PASS: 10/10 battery objectives within 1e-3 of the "
          "grid oracle, bit-identical across repeat runs")


def test_criterion_8_zaslavsky_consistency(grid_battery):
    checked = 0
    for p in range(2, 7):
        net = l1_norm_net(p)
        count = len(enumerate_regions(net, box(p, -10.0, 10.0)))
        bound, _, n_planes = region_upper_bound(net)
        assert n_planes <= 16
        assert count <= bound
        checked += 1
    for net, _, b, report, _, regions in grid_battery:
        bound, _, n_planes = region_upper_bound(net)
        assert n_planes <= 16
        assert len(regions) <= bound
        checked += 1
    print(f"\n[criterion 8] PASS: region count <= Zaslavsky bound for "
          f"{checked} networks")

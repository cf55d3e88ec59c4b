"""Global maximization of a smooth objective over a convex polytope.

Two phases, both deterministic:

1. Global: an unscrambled Sobol sequence fills the polytope's bounding
   hyperrectangle; infeasible points are discarded; a neighborhood
   graph over the survivors (Delaunay 1-skeleton in low dimension,
   k-nearest-neighbor graph above that) picks out samples that beat all
   their neighbors.
2. Local: from each such sample a sequential-quadratic ascent runs with
   the analytic gradient, honoring Ax <= b and the box bounds.

The returned point is the best of all raw samples and refined points,
so the result never falls below the sampling phase.  Global optimality
is heuristic for general nonconvex objectives; the budget is caller
controlled and a paranoid mode (8x samples plus vertex-seeded starts)
trades time for confidence.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.spatial import Delaunay, QhullError, cKDTree
from scipy.stats import qmc

from .errors import BudgetError, NoFeasibleSample

FEAS_TOL = 1e-7
MAX_LOCAL_STARTS = 32


@dataclass
class PolytopeDomain:
    """Search domain {x : Ax <= b} with its bounding box and an interior point."""

    A: np.ndarray
    b: np.ndarray
    bbox_lo: np.ndarray
    bbox_hi: np.ndarray
    interior_point: np.ndarray
    vertices: np.ndarray | None = None  # optional; enables vertex-seeded starts

    @property
    def dim(self) -> int:
        return self.bbox_lo.size

    def feasible(self, x, tol: float = FEAS_TOL):
        x = np.asarray(x, dtype=float)
        return np.all(x @ self.A.T <= self.b + tol, axis=-1)


@dataclass
class Budget:
    """Sampling/iteration knobs.  samples=None picks 64 * 2^min(p, 4)."""

    samples: int | None = None
    iters: int = 100
    paranoid: bool = False

    def resolve_samples(self, p: int) -> int:
        n = self.samples if self.samples is not None else 64 * 2 ** min(p, 4)
        if self.paranoid:
            n *= 8
        if n < 2 * (p + 1):
            raise BudgetError(f"need at least {2 * (p + 1)} samples for dimension {p}, got {n}")
        return n


@dataclass
class OptResult:
    argmax: np.ndarray
    value: float
    n_evals: int
    n_local_starts: int
    status: str  # "Converged" | "BudgetExhausted"


def _neighbor_edges(points: np.ndarray) -> list:
    """1-skeleton of a simplicial complex over the sample points.

    Delaunay for p <= 3; a k-nearest-neighbor graph above that, where a
    full triangulation gets too expensive.
    """
    n, p = points.shape
    if p <= 3 and n > p + 1:
        try:
            tri = Delaunay(points)
            edges = set()
            for simplex in tri.simplices:
                for i in range(len(simplex)):
                    for j in range(i + 1, len(simplex)):
                        a, b = int(simplex[i]), int(simplex[j])
                        edges.add((min(a, b), max(a, b)))
            return sorted(edges)
        except QhullError:
            pass  # coplanar samples etc.; fall through to kNN
    k = min(2 * p + 2, n - 1)
    if k < 1:
        return []
    tree = cKDTree(points)
    _, idx = tree.query(points, k=k + 1)
    edges = set()
    for a in range(n):
        for b in idx[a][1:]:
            edges.add((min(a, int(b)), max(a, int(b))))
    return sorted(edges)


def _local_maxima(values: np.ndarray, edges: list) -> list:
    """Indices of samples that are >= every graph neighbor."""
    n = len(values)
    is_max = np.ones(n, dtype=bool)
    for a, b in edges:
        if values[a] < values[b]:
            is_max[a] = False
        elif values[b] < values[a]:
            is_max[b] = False
    return [int(i) for i in np.nonzero(is_max)[0]]


def global_max(objective, gradient, domain: PolytopeDomain,
               budget: Budget | None = None) -> OptResult:
    """Maximize objective over the polytope domain.

    `objective` must accept a batch (N, p) and return (N,); `gradient`
    takes a single point.  Raises NoFeasibleSample only when no sample
    is feasible *and* the domain's interior point is unusable; otherwise
    the interior point serves as the fallback start.
    """
    budget = budget or Budget()
    p = domain.dim
    n_samples = budget.resolve_samples(p)

    sampler = qmc.Sobol(d=p, scramble=False)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        unit = sampler.random(n_samples)
    samples = domain.bbox_lo + unit * (domain.bbox_hi - domain.bbox_lo)
    feas_mask = domain.feasible(samples, tol=0.0)
    feas = samples[feas_mask]
    n_evals = 0

    start_points = []
    if len(feas) == 0:
        interior_ok = bool(domain.feasible(domain.interior_point))
        if not interior_ok:
            raise NoFeasibleSample("no feasible sample and no usable interior point")
        feas_values = np.empty(0)
    else:
        feas_values = np.asarray(objective(feas), dtype=float)
        n_evals += len(feas)
        if len(feas) >= p + 2:
            edges = _neighbor_edges(feas)
            maxima = _local_maxima(feas_values, edges)
        else:
            maxima = list(range(len(feas)))
        if len(maxima) > MAX_LOCAL_STARTS:
            order = sorted(maxima, key=lambda i: (-feas_values[i], i))
            maxima = order[:MAX_LOCAL_STARTS]
        start_points = [feas[i] for i in maxima]

    start_points.append(np.asarray(domain.interior_point, dtype=float))
    if budget.paranoid and domain.vertices is not None:
        start_points.extend(np.asarray(v, dtype=float) for v in domain.vertices)

    A, b = domain.A, domain.b
    constraints = [{
        "type": "ineq",
        "fun": lambda x: b - A @ x,
        "jac": lambda x: -A,
    }]
    bounds = list(zip(domain.bbox_lo, domain.bbox_hi))

    def neg_obj(x):
        return -float(objective(x[None, :])[0])

    def neg_grad(x):
        return -np.asarray(gradient(x), dtype=float)

    candidates = []  # (value, point)
    if len(feas):
        best_raw = int(np.argmax(feas_values))
        candidates.append((float(feas_values[best_raw]), feas[best_raw]))

    all_converged = True
    n_starts = 0
    for x0 in start_points:
        with warnings.catch_warnings():
            # Routine notice when a trial step pokes past the bbox and
            # gets clipped; the constraint handling is unaffected.
            warnings.filterwarnings("ignore", message=".*outside bounds.*",
                                    category=RuntimeWarning)
            res = minimize(neg_obj, x0, jac=neg_grad, method="SLSQP",
                           bounds=bounds, constraints=constraints,
                           options={"maxiter": budget.iters, "ftol": 1e-12})
        n_starts += 1
        n_evals += int(res.nfev)
        if not res.success:
            all_converged = False
        if domain.feasible(res.x):
            candidates.append((-float(res.fun), np.asarray(res.x, dtype=float)))

    if not candidates:
        # Every refinement drifted infeasible and there were no raw
        # samples; fall back to the interior point itself.
        x = np.asarray(domain.interior_point, dtype=float)
        candidates.append((float(objective(x[None, :])[0]), x))
        n_evals += 1

    best_value, best_point = candidates[0]
    for value, point in candidates[1:]:
        if value > best_value:
            best_value, best_point = value, point
    return OptResult(
        argmax=best_point,
        value=best_value,
        n_evals=n_evals,
        n_local_starts=n_starts,
        status="Converged" if all_converged else "BudgetExhausted",
    )

"""Recovery algorithms for the shuffled linear model.

All solvers minimize ||y - Pi X b||^2 jointly over permutations and
coefficients.  The inner assignment for a fixed coefficient vector is a
linear assignment with scores <y, Pi(Xb)> and is solved by sorting; the
coefficient refit for a fixed permutation goes through an orthogonal
factorization rather than the normal equations.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetError, DimensionError, InvalidArgumentError, SingularDesignError
from .perm import Permutation
from .theory import net_cardinality_bound

SOLVERS = ("exact_d1", "net_search", "brute_force", "alt_min")

BRUTE_FORCE_CAP = 8
NET_BUDGET = 10**6


@dataclass(frozen=True)
class Estimate:
    """Solver output: recovered permutation and coefficients plus diagnostics."""

    pi_hat: Permutation
    beta_hat: np.ndarray
    residual_sq: float
    qap_objective: float
    solver: str
    stats: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "solver": self.solver,
            "pi_hat": self.pi_hat.to_one_based(),
            "beta_hat": np.asarray(self.beta_hat).ravel().tolist(),
            "residual_sq": float(self.residual_sq),
            "qap_objective": float(self.qap_objective),
            "stats": self.stats,
        }


@dataclass(frozen=True)
class NetSpec:
    """Axis-aligned grid net of the radius-r ball around ``center``.

    Grid spacing 2*delta/sqrt(d) makes every ball point at most delta from
    a grid point; the cardinality never exceeds (1 + 2r/delta)^d.
    """

    center: np.ndarray
    radius: float
    delta: float

    def __post_init__(self):
        center = np.atleast_1d(np.asarray(self.center, dtype=float))
        object.__setattr__(self, "center", center)
        if not self.radius > 0 or not self.delta > 0:
            raise InvalidArgumentError("net radius and delta must be positive")
        if self.delta > 2 * self.radius:
            raise InvalidArgumentError("net resolution delta must satisfy delta <= 2*radius")


def _check_inputs(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2:
        raise DimensionError("X must be a 2-d array")
    n, d = X.shape
    if y.shape[0] != n:
        raise DimensionError(f"y has length {y.shape[0]}, expected n={n}")
    if d > n:
        raise DimensionError(f"d={d} exceeds n={n}")
    return X, y


def _check_rank(X: np.ndarray) -> None:
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise SingularDesignError("design matrix is numerically rank deficient")


def sorted_match(y: np.ndarray, v: np.ndarray) -> tuple[Permutation, bool]:
    """Permutation maximizing <y, Pi v>: k-th smallest y gets k-th smallest v.

    Stable sorts break equal keys by original index; the returned flag
    reports whether any equal keys were encountered.
    """
    y = np.asarray(y, dtype=float)
    v = np.asarray(v, dtype=float)
    if y.shape != v.shape:
        raise DimensionError("sorted_match requires equal-length vectors")
    order_y = np.argsort(y, kind="stable")
    order_v = np.argsort(v, kind="stable")
    mapping = np.empty(y.size, dtype=np.intp)
    mapping[order_y] = order_v
    ties = bool(np.any(np.diff(y[order_y]) == 0) or np.any(np.diff(v[order_v]) == 0))
    return Permutation(mapping), ties


def least_squares_beta(X: np.ndarray, pi: Permutation, y: np.ndarray) -> np.ndarray:
    """Coefficients minimizing ||y - Pi X b||^2 for the fixed permutation."""
    X, y = _check_inputs(X, y)
    if pi.n != X.shape[0]:
        raise DimensionError("permutation size does not match X")
    A = pi.apply(X)
    beta, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
    if rank < X.shape[1]:
        raise SingularDesignError("design matrix is numerically rank deficient")
    return beta


def residual_and_objective(X: np.ndarray, pi: Permutation, y: np.ndarray) -> tuple[float, float]:
    """(||P_perp y||^2, ||P y||^2) for P the projection onto span(Pi X)."""
    X, y = _check_inputs(X, y)
    if pi.n != X.shape[0]:
        raise DimensionError("permutation size does not match X")
    _check_rank(X)
    Q, _ = np.linalg.qr(pi.apply(X))
    proj = Q @ (Q.T @ y)
    residual_sq = float(np.sum((y - proj) ** 2))
    qap_objective = float(np.sum(proj**2))
    return residual_sq, qap_objective


def _refit_residual(X: np.ndarray, pi: Permutation, y: np.ndarray) -> tuple[np.ndarray, float]:
    beta = least_squares_beta(X, pi, y)
    r = y - pi.apply(X) @ beta
    return beta, float(r @ r)


def _finalize(X: np.ndarray, y: np.ndarray, pi: Permutation, solver: str, stats: dict) -> Estimate:
    beta = least_squares_beta(X, pi, y)
    residual_sq, qap_objective = residual_and_objective(X, pi, y)
    return Estimate(pi_hat=pi, beta_hat=beta, residual_sq=residual_sq,
                    qap_objective=qap_objective, solver=solver, stats=stats)


def solve_exact_d1(X: np.ndarray, y: np.ndarray) -> Estimate:
    """Exact maximum-likelihood solve for d = 1.

    For either sign of the scalar coefficient the optimal assignment matches
    the sort order of y against that of x (reversed for the negative sign);
    refitting the coefficient on both candidates and keeping the lower
    residual yields the global optimum.
    """
    X, y = _check_inputs(X, y)
    if X.shape[1] != 1:
        raise InvalidArgumentError(f"solve_exact_d1 requires d=1, got d={X.shape[1]}")
    x = X[:, 0]
    order_y = np.argsort(y, kind="stable")
    order_x = np.argsort(x, kind="stable")
    ties = bool(np.any(np.diff(y[order_y]) == 0) or np.any(np.diff(x[order_x]) == 0))

    m_pos = np.empty(x.size, dtype=np.intp)
    m_pos[order_y] = order_x
    m_neg = np.empty(x.size, dtype=np.intp)
    m_neg[order_y] = order_x[::-1]

    best_pi, best_res = None, math.inf
    for mapping in (m_pos, m_neg):
        pi = Permutation(mapping)
        _, res = _refit_residual(X, pi, y)
        if res < best_res:
            best_pi, best_res = pi, res
    return _finalize(X, y, best_pi, "exact_d1",
                     {"candidates": 2, "degenerate_ties": ties})


def build_grid_net(spec: NetSpec) -> np.ndarray:
    """Grid points of the net, ordered lexicographically by lattice index.

    Only lattice points inside the ball are kept, so cardinality stays under
    (1 + 2r/delta)^d; every point of the ball at distance >= delta from its
    boundary is within delta of some net point (pad the radius when full-ball
    coverage matters).
    """
    d = spec.center.size
    h = 2.0 * spec.delta / math.sqrt(d)
    k_max = int(math.floor(spec.radius / h))
    axis = h * np.arange(-k_max, k_max + 1)
    grids = np.meshgrid(*([axis] * d), indexing="ij")
    offsets = np.stack([g.ravel() for g in grids], axis=-1)
    keep = np.sum(offsets**2, axis=1) <= spec.radius**2 + 1e-12
    return spec.center[None, :] + offsets[keep]


def default_net(X: np.ndarray, y: np.ndarray, budget: int = NET_BUDGET) -> NetSpec:
    """Warm-started net: sorted match on the first column, refit, radius 3||b||."""
    X, y = _check_inputs(X, y)
    d = X.shape[1]
    x0 = X[:, 0]
    order_y = np.argsort(y, kind="stable")
    order_x = np.argsort(x0, kind="stable")
    best_beta, best_res = None, math.inf
    for rev in (order_x, order_x[::-1]):
        mapping = np.empty(x0.size, dtype=np.intp)
        mapping[order_y] = rev
        beta, res = _refit_residual(X, Permutation(mapping), y)
        if res < best_res:
            best_beta, best_res = beta, res
    radius = 3.0 * float(np.linalg.norm(best_beta))
    if radius == 0.0:
        radius = 1.0
    # delta sized so (1 + 2r/delta)^d just meets the budget
    denom = float(budget) ** (1.0 / d) - 1.0
    delta = 2 * radius if denom <= 1e-12 else (2.0 * radius / denom) * (1 + 1e-9)
    delta = min(delta, 2 * radius)
    return NetSpec(center=best_beta, radius=radius, delta=delta)


def solve_net_search(X: np.ndarray, y: np.ndarray, net: NetSpec | None = None,
                     budget: int = NET_BUDGET) -> Estimate:
    """Grid search over coefficient candidates, assignment by sorting per point.

    Evaluates the sorted-assignment residual at every net point, keeps the
    minimizer (ties to the lexicographically smaller permutation), and refits
    the coefficient on the winning permutation.
    """
    X, y = _check_inputs(X, y)
    _check_rank(X)
    d = X.shape[1]
    if net is None:
        net = default_net(X, y, budget)
    if net.center.size != d:
        raise DimensionError(f"net center has dimension {net.center.size}, expected d={d}")
    bound = net_cardinality_bound(net.radius, net.delta, d)
    if bound > budget:
        raise BudgetError(
            f"net cardinality bound (1+2r/delta)^d = {bound:.6g} exceeds budget {budget}")

    points = build_grid_net(net)
    ys = np.sort(y, kind="stable")
    ties = bool(np.any(np.diff(ys) == 0))

    costs = np.empty(points.shape[0])
    chunk = 65536
    for start in range(0, points.shape[0], chunk):
        block = points[start:start + chunk]
        Vs = np.sort(block @ X.T, axis=1, kind="stable")   # candidate Xb per point
        if not ties:
            ties = bool(np.any(np.diff(Vs, axis=1) == 0))
        costs[start:start + chunk] = np.sum((Vs - ys[None, :]) ** 2, axis=1)

    best_idx = int(np.argmin(costs))
    best_cost = float(costs[best_idx])
    pi_best, _ = sorted_match(y, points[best_idx] @ X.T)

    # exact cost ties across net points resolve to the lexicographically
    # smaller mapping, independent of evaluation order
    tie_idx = np.nonzero(costs == best_cost)[0]
    if tie_idx.size > 1:
        for idx in tie_idx:
            cand, _ = sorted_match(y, points[idx] @ X.T)
            if tuple(cand.mapping) < tuple(pi_best.mapping):
                pi_best = cand

    stats = {
        "net_points": int(points.shape[0]),
        "cardinality_bound": float(bound),
        "degenerate_ties": ties,
        "best_unrefit_residual": best_cost,
    }
    return _finalize(X, y, pi_best, "net_search", stats)


def solve_brute_force(X: np.ndarray, y: np.ndarray, cap: int = BRUTE_FORCE_CAP) -> Estimate:
    """Global optimum by exhaustive enumeration of all n! permutations.

    Enumeration is lexicographic in the forward mapping; exact residual ties
    keep the lexicographically smaller permutation.
    """
    X, y = _check_inputs(X, y)
    n = X.shape[0]
    if n > cap:
        raise BudgetError(f"brute force enumerates n! permutations; n={n} exceeds cap {cap}")
    _check_rank(X)
    Q, _ = np.linalg.qr(X)
    ynorm2 = float(y @ y)

    perms = np.array(list(itertools.permutations(range(n))), dtype=np.intp)
    invs = np.argsort(perms, axis=1)          # row-wise inverse: Pi^T y == y[inv]
    G = y[invs] @ Q
    residuals = ynorm2 - np.sum(G**2, axis=1)
    best = int(np.argmin(residuals))          # first minimum = lexicographically smaller
    pi = Permutation(perms[best])
    est = _finalize(X, y, pi, "brute_force", {"permutations": int(perms.shape[0]), "cap": cap})
    return est


def solve_alt_min(X: np.ndarray, y: np.ndarray, init: Permutation | None = None,
                  max_iters: int = 100) -> Estimate:
    """Alternating minimization: coefficient refit, then sorted reassignment.

    The recorded residual trace (after each refit) is non-increasing; the
    loop stops at a permutation fixed point or at the iteration cap.
    """
    X, y = _check_inputs(X, y)
    if max_iters < 1:
        raise InvalidArgumentError("max_iters must be >= 1")
    pi = Permutation.identity(X.shape[0]) if init is None else init
    if pi.n != X.shape[0]:
        raise DimensionError("init permutation size does not match X")

    trace: list[float] = []
    ties_seen = False
    converged = False
    iterations = 0
    for _ in range(max_iters):
        beta, res = _refit_residual(X, pi, y)
        trace.append(res)
        pi_next, ties = sorted_match(y, X @ beta)
        ties_seen = ties_seen or ties
        iterations += 1
        if pi_next == pi:
            converged = True
            break
        pi = pi_next

    stats = {
        "iterations": iterations,
        "converged": converged,
        "degenerate_ties": ties_seen,
        "residual_trace": trace,
    }
    return _finalize(X, y, pi, "alt_min", stats)

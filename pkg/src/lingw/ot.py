"""Exact discrete optimal transport and the linear OT embedding (gLOT).

The exact solver is a network simplex on the transportation polytope
(see :mod:`lingw.kernels`). No entropic smoothing is used anywhere, so plans
are vertices of the polytope with at most ``n + m - 1`` nonzero entries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import (
    DimensionMismatch,
    InfeasibleError,
    LinGWError,
    MarginalError,
    ValidationError,
    ZeroRowError,
)
from .measure import MARGINAL_TOL, ThreePlan, TransportPlan

SUM_TOL = 1e-9


def sq_euclidean(X, Y):
    """Matrix of squared Euclidean distances between the rows of X and Y."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if Y.ndim == 1:
        Y = Y[:, None]
    diff = X[:, None, :] - Y[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _check_weights(w, name):
    w = np.ascontiguousarray(w, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValidationError(f"{name}: weights must be a non-empty vector")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise ValidationError(f"{name}: weights must be finite and nonnegative")
    return w


def transport_lp(C, mu, nu):
    """Optimal vertex plan of ``min <C, P>`` over couplings of ``mu`` and ``nu``.

    ``C`` may carry negative entries (used as the linear oracle of the
    Frank-Wolfe solvers). ``nu`` is rescaled to the mass of ``mu`` once the
    sums agree within 1e-9.
    """
    C = np.ascontiguousarray(C, dtype=float)
    mu = _check_weights(mu, "mu")
    nu = _check_weights(nu, "nu")
    if C.shape != (mu.size, nu.size):
        raise DimensionMismatch(f"cost shape {C.shape} vs weights ({mu.size}, {nu.size})")
    if not np.all(np.isfinite(C)):
        raise ValidationError("cost matrix must be finite")
    smu, snu = mu.sum(), nu.sum()
    if abs(smu - snu) > SUM_TOL:
        raise InfeasibleError(f"weight sums differ: {smu!r} vs {snu!r}")
    if snu != smu:
        nu = nu * (smu / snu)
    n, m = C.shape
    plan, pivots, ok = kernels.transport_simplex(C, mu, nu, 100 * n * m + 10_000)
    if not ok:
        raise LinGWError(f"network simplex exceeded {pivots} pivots")
    return plan


@dataclass(frozen=True)
class OtResult:
    plan: TransportPlan
    cost: float
    distance: float


def solve_ot(cost_matrix, mu, nu) -> OtResult:
    """Exact optimal transport for a given cost matrix.

    Parameters
    ----------
    cost_matrix : array-like, shape (n, m)
    mu, nu : array-like
        Source and target weights; sums must agree within 1e-9.

    Returns
    -------
    OtResult
        ``cost`` is the objective ``sum(C * plan)``; ``distance`` its square
        root (meaningful when ``C`` holds squared distances).
    """
    C = np.asarray(cost_matrix, dtype=float)
    if np.any(C < 0):
        raise ValidationError("cost matrix must be nonnegative")
    plan = transport_lp(C, mu, nu)
    cost = float(np.sum(C * plan))
    return OtResult(
        plan=TransportPlan(plan, np.asarray(mu, float), plan.sum(axis=0)),
        cost=cost,
        distance=float(np.sqrt(max(cost, 0.0))),
    )


def wasserstein(points_x, mu, points_y, nu) -> OtResult:
    """2-Wasserstein distance between two weighted point clouds."""
    return solve_ot(sq_euclidean(points_x, points_y), mu, nu)


@dataclass(frozen=True, eq=False)
class BarycentricMap:
    """Per-reference-atom image of a barycentric projection.

    ``targets`` is an ``(n, d)`` float array for ``kind='euclidean'`` and an
    ``(n,)`` integer array of target support indices for ``kind='metric'``.
    """

    kind: str
    targets: np.ndarray

    def __post_init__(self):
        if self.kind not in ("euclidean", "metric"):
            raise ValidationError(f"unknown map kind {self.kind!r}")
        t = np.array(self.targets, dtype=float if self.kind == "euclidean" else np.int64)
        if self.kind == "euclidean" and t.ndim == 1:
            t = t[:, None]
        t.setflags(write=False)
        object.__setattr__(self, "targets", t)

    def __len__(self):
        return self.targets.shape[0]


def _row_masses(P):
    sigma = P.sum(axis=1)
    bad = np.flatnonzero(sigma <= 0)
    if bad.size:
        raise ZeroRowError(f"reference atom {int(bad[0])} carries no mass")
    return sigma


def euclidean_barycentric_projection(plan, target_points) -> BarycentricMap:
    """Conditional means ``(1/sigma_i) sum_j plan[i, j] x_j``."""
    P = plan.matrix if isinstance(plan, TransportPlan) else np.asarray(plan, dtype=float)
    X = np.asarray(target_points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] != P.shape[1]:
        raise DimensionMismatch(f"plan has {P.shape[1]} columns, {X.shape[0]} target points")
    sigma = _row_masses(P)
    return BarycentricMap("euclidean", (P / sigma[:, None]) @ X)


def glot(ref_weights, map_a: BarycentricMap, map_b: BarycentricMap) -> float:
    """gLOT distance ``||T_A - T_B||`` in L2 of the reference measure."""
    if map_a.kind != "euclidean" or map_b.kind != "euclidean":
        raise DimensionMismatch("gLOT needs euclidean barycentric maps")
    w = np.asarray(ref_weights, dtype=float)
    if map_a.targets.shape != map_b.targets.shape or map_a.targets.shape[0] != w.size:
        raise DimensionMismatch(
            f"maps {map_a.targets.shape} / {map_b.targets.shape} vs reference size {w.size}"
        )
    diff = map_a.targets - map_b.targets
    return float(np.sqrt(np.sum(w * np.einsum("ij,ij->i", diff, diff))))


def pushforward(weights, map_: BarycentricMap):
    """Atoms and weights of the image measure of the reference under ``map_``."""
    return map_.targets.copy(), np.asarray(weights, dtype=float).copy()


def conditional_glue(A, B):
    """3-plan with conditionally independent couplings ``A[i,j] B[i,k] / sigma_i``."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    sigma = A.sum(axis=1)
    safe = np.where(sigma > 0, sigma, 1.0)
    return A[:, :, None] * B[:, None, :] / safe[:, None, None]


def _check_shared_reference(A, B):
    if A.shape[0] != B.shape[0]:
        raise MarginalError("plans have different reference sizes", np.inf)
    gap = float(np.max(np.abs(A.sum(axis=1) - B.sum(axis=1))))
    if gap > MARGINAL_TOL:
        raise MarginalError(f"reference marginals differ by {gap:g}", gap)


def factorized_lmo(A, B, G):
    """Minimize ``sum_ijk G[j,k] pi[i,j,k]`` over 3-plans with pair marginals A and B.

    The constraints decouple over the reference index, so this solves one
    transportation LP per reference atom on the supports of ``A[i]`` and
    ``B[i]``.
    """
    n, m = A.shape
    k = B.shape[1]
    out = np.zeros((n, m, k))
    for i in range(n):
        ja = np.flatnonzero(A[i] > 0)
        kb = np.flatnonzero(B[i] > 0)
        if ja.size == 0 or kb.size == 0:
            continue
        a, b = A[i, ja], B[i, kb]
        plan = transport_lp(G[np.ix_(ja, kb)], a / a.sum(), b / b.sum())
        out[i][np.ix_(ja, kb)] = a.sum() * plan
    return out


def w_sigma_lp(plan_a, plan_b, points_x, points_y):
    """Optimal 3-plan for the linear objective ``sum ||x_j - y_k||^2 pi[i,j,k]``.

    Returns ``(ThreePlan, value)`` where ``value`` is the square root of the
    optimal objective.
    """
    A = plan_a.matrix if isinstance(plan_a, TransportPlan) else np.asarray(plan_a, float)
    B = plan_b.matrix if isinstance(plan_b, TransportPlan) else np.asarray(plan_b, float)
    _check_shared_reference(A, B)
    cost = sq_euclidean(points_x, points_y)
    if cost.shape != (A.shape[1], B.shape[1]):
        raise DimensionMismatch("point sets do not match plan columns")
    tensor = factorized_lmo(A, B, cost)
    value = float(np.einsum("ijk,jk->", tensor, cost))
    return ThreePlan(tensor, A, B), float(np.sqrt(max(value, 0.0)))

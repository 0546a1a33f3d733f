"""Linear Gromov-Wasserstein embeddings against a fixed reference space.

Each target space is lifted once: a GW plan from the reference is turned into
a map on the reference atoms through the generalized barycentric projection,
and the target metric is pulled back along that map. Pairwise gLGW distances
then only need weighted L2 norms of pulled-back matrices.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .errors import LinGWIOError, ParseError, RefMismatch, ValidationError
from .gw import GwConfig, default_init_specs, gw_quadratic, solve_gw
from .measure import MmSpace, ThreePlan, TransportPlan
from .ot import BarycentricMap, _check_shared_reference, _row_masses, conditional_glue, factorized_lmo

BOUND_TOL = 1e-6


def generalized_barycentric_projection(plan, target_metric) -> BarycentricMap:
    """Metric-space barycentric projection of a plan.

    Each reference atom ``i`` goes to the target index minimizing
    ``sum_j plan[i, j] * d(x, x_j)**2``; near-ties (relative 1e-12) go to the
    lowest index.
    """
    P = plan.matrix if isinstance(plan, TransportPlan) else np.asarray(plan, dtype=float)
    D = np.asarray(target_metric, dtype=float)
    if D.shape != (P.shape[1], P.shape[1]):
        raise ValidationError(f"target metric {D.shape} does not match plan columns {P.shape[1]}")
    _row_masses(P)
    cost = P @ (D * D).T
    best = cost.min(axis=1, keepdims=True)
    tol = 1e-12 * np.maximum(np.abs(best), np.finfo(float).tiny)
    idx = np.argmax(cost <= best + tol, axis=1)
    return BarycentricMap("metric", idx)


@dataclass(frozen=True, eq=False)
class LgwEmbedding:
    ref_id: str
    target_id: str
    map: BarycentricMap
    embedded_metric: np.ndarray
    plan_cost: float

    def __post_init__(self):
        E = np.array(self.embedded_metric, dtype=float)
        E.setflags(write=False)
        object.__setattr__(self, "embedded_metric", E)
        n = len(self.map)
        if E.shape != (n, n):
            raise ValidationError("embedded metric does not match map length")
        if np.any(E != E.T) or np.any(np.diag(E) != 0):
            raise ValidationError("embedded metric must be symmetric with zero diagonal")

    @property
    def n(self):
        return len(self.map)

    def to_dict(self):
        return {
            "ref_id": self.ref_id,
            "target_id": self.target_id,
            "map": self.map.targets.tolist(),
            "embedded_metric": self.embedded_metric.tolist(),
            "plan_cost": self.plan_cost,
        }

    @classmethod
    def from_dict(cls, obj):
        try:
            return cls(
                ref_id=str(obj["ref_id"]),
                target_id=str(obj["target_id"]),
                map=BarycentricMap("metric", np.asarray(obj["map"], dtype=np.int64)),
                embedded_metric=np.asarray(obj["embedded_metric"], dtype=float),
                plan_cost=float(obj["plan_cost"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed embedding record: {exc}") from exc


def pull_back(target_metric, map_: BarycentricMap):
    idx = map_.targets
    return np.asarray(target_metric, dtype=float)[np.ix_(idx, idx)]


def embed(ref: MmSpace, target: MmSpace, config: Optional[GwConfig] = None) -> LgwEmbedding:
    """Lift ``target`` to the reference via a fixed GW plan."""
    res = solve_gw(ref, target, config)
    tmap = generalized_barycentric_projection(res.plan, target.metric)
    return LgwEmbedding(ref.id, target.id, tmap, pull_back(target.metric, tmap), res.cost)


def _check_pair(ref_weights, emb_a, emb_b):
    w = np.asarray(ref_weights, dtype=float)
    if emb_a.ref_id != emb_b.ref_id:
        raise RefMismatch(f"references differ: {emb_a.ref_id!r} vs {emb_b.ref_id!r}")
    if not (emb_a.n == emb_b.n == w.size):
        raise RefMismatch(f"reference sizes differ: {emb_a.n}, {emb_b.n}, weights {w.size}")
    return w


def glgw(ref_weights, emb_a: LgwEmbedding, emb_b: LgwEmbedding) -> float:
    """gLGW distance between two embeddings over the same reference."""
    w = _check_pair(ref_weights, emb_a, emb_b)
    diff = emb_a.embedded_metric - emb_b.embedded_metric
    return float(np.sqrt(np.sum(np.outer(w, w) * diff * diff)))


def glgw_pairwise(ref_weights, embeddings) -> np.ndarray:
    """All pairwise gLGW distances (one ``O(n^2)`` evaluation per pair)."""
    embeddings = list(embeddings)
    if not embeddings:
        return np.zeros((0, 0))
    first = embeddings[0]
    for e in embeddings[1:]:
        _check_pair(ref_weights, first, e)
    w = np.asarray(ref_weights, dtype=float)
    if w.size != first.n:
        raise RefMismatch("reference weights do not match embeddings")
    E = np.ascontiguousarray(np.stack([e.embedded_metric for e in embeddings]))
    return kernels.pairwise_weighted_l2(E, np.outer(w, w))


def save_embedding(emb: LgwEmbedding, path) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(emb.to_dict()) + "\n")
    except OSError as exc:
        raise LinGWIOError(f"{path}: {exc}") from exc


def load_embedding(path) -> LgwEmbedding:
    try:
        with open(path, encoding="utf-8") as fh:
            return LgwEmbedding.from_dict(json.load(fh))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc
    except OSError as exc:
        raise LinGWIOError(f"{path}: {exc}") from exc


def load_embeddings_dir(directory):
    names = sorted(f for f in os.listdir(directory) if f.endswith(".json"))
    embs = [load_embedding(os.path.join(directory, f)) for f in names]
    return sorted(embs, key=lambda e: e.target_id)


def apply_reference_isometry(plan, perm):
    """Plan ``(I, id)#pi`` for a reference self-map ``I(i) = perm[i]``."""
    P = plan.matrix if isinstance(plan, TransportPlan) else np.asarray(plan, float)
    out = np.zeros_like(P)
    out[np.asarray(perm)] = P
    return out


def three_plan_objective(tensor, metric_x, metric_y) -> float:
    """Quadratic 3-plan objective; it only depends on the (x, y) marginal."""
    return max(gw_quadratic(np.asarray(metric_x, float), np.asarray(metric_y, float),
                            np.asarray(tensor).sum(axis=0)), 0.0)


def _three_plan_fw(A, B, DX, DY, pi, max_iter, rel_tol):
    """Frank-Wolfe over 3-plans from ``pi``; works on the (x, y) marginal."""
    mu, nu = A.sum(axis=0), B.sum(axis=0)
    C = ((DX * DX) @ mu)[:, None] + ((DY * DY) @ nu)[None, :]
    gamma = pi.sum(axis=0)
    T = DX @ gamma @ DY
    f = float(np.sum(C * gamma) - 2.0 * np.sum(T * gamma))
    for _ in range(max_iter):
        grad = 2.0 * (C - 2.0 * T)
        S = factorized_lmo(A, B, grad)
        dg = S.sum(axis=0) - gamma
        TD = DX @ dg @ DY
        a = -2.0 * float(np.sum(TD * dg))
        b = float(np.sum(C * dg)) - 4.0 * float(np.sum(T * dg))
        if a > 0:
            step = min(max(-b / (2.0 * a), 0.0), 1.0)
        else:
            step = 1.0 if a + b < 0 else 0.0
        if step == 0.0:
            break
        g_new = gamma + step * dg
        T_new = T + step * TD
        f_new = float(np.sum(C * g_new) - 2.0 * np.sum(T_new * g_new))
        if f_new > f:
            break
        pi = pi + step * (S - pi)
        gamma, T = g_new, T_new
        rel = abs(f - f_new) / max(f_new, 1e-16)
        f = f_new
        if rel < rel_tol:
            break
    pi = np.maximum(pi, 0.0)
    return pi, three_plan_objective(pi, DX, DY)


def gw_s_three_plan(ref: MmSpace, plan_a, plan_b, metric_x, metric_y,
                    config: Optional[GwConfig] = None, init=None):
    """Frank-Wolfe over 3-plans glued along the reference.

    Parameters
    ----------
    ref : MmSpace
        Reference space; both plans start at its atoms.
    plan_a, plan_b : TransportPlan or array-like
        Couplings from the reference to X and to Y.
    metric_x, metric_y : array-like
        Target metrics.
    config : GwConfig, optional
        ``max_iter``, ``rel_tol``, ``restarts`` and ``seed`` are used.
    init : array-like, optional
        Single starting 3-plan. By default the solver starts from the
        conditionally independent glue and from ``config.restarts`` seeded
        random vertices of the 3-plan polytope, keeping the best.

    Returns
    -------
    (ThreePlan, float)
        Best 3-plan found and the square root of its objective, an upper
        bound on the infimum over all such 3-plans.
    """
    config = GwConfig() if config is None else config
    A = plan_a.matrix if isinstance(plan_a, TransportPlan) else np.asarray(plan_a, float)
    B = plan_b.matrix if isinstance(plan_b, TransportPlan) else np.asarray(plan_b, float)
    _check_shared_reference(A, B)
    if A.shape[0] != ref.n:
        raise ValidationError("plans do not start at the reference")
    DX = np.asarray(metric_x, float)
    DY = np.asarray(metric_y, float)
    if init is not None:
        starts = [("init", np.array(init, dtype=float))]
    else:
        starts = [("glue", conditional_glue(A, B))]
        for r in range(config.restarts):
            s = config.seed + r
            G = np.random.default_rng(s).random((A.shape[1], B.shape[1]))
            starts.append((f"random({s})", factorized_lmo(A, B, G)))
    best = None
    for tag, pi0 in starts:
        pi, value = _three_plan_fw(A, B, DX, DY, pi0, config.max_iter, config.rel_tol)
        if best is None or (value, tag) < (best[1], best[2]):
            best = (pi, value, tag)
    return ThreePlan(best[0], A, B), float(np.sqrt(best[1]))


def check_lgw_bounds(ref: MmSpace, space_x: MmSpace, space_y: MmSpace,
                     config: Optional[GwConfig] = None, tol: float = BOUND_TOL) -> dict:
    """Numerically check ``GW(X,Y) <= GW_S <= GW(S,X) + GW(S,Y)``.

    The 3-plan value is compared against the GW distance found with the
    3-plan's (x, y) marginal among the inits, and against the independent
    glue, which the Minkowski inequality bounds by the two leg distances.
    """
    config = GwConfig() if config is None else config
    gw_sx = solve_gw(ref, space_x, config)
    gw_sy = solve_gw(ref, space_y, config)
    three, value = gw_s_three_plan(ref, gw_sx.plan, gw_sy.plan, space_x.metric, space_y.metric, config)
    glue = conditional_glue(gw_sx.plan.matrix, gw_sy.plan.matrix)
    glue_value = float(np.sqrt(three_plan_objective(glue, space_x.metric, space_y.metric)))
    specs = list(config.inits) if config.inits is not None else default_init_specs(space_x, space_y)
    specs.append(("p23", three.p23()))
    gw_xy = solve_gw(space_x, space_y, config.with_inits(specs))
    upper = gw_sx.distance + gw_sy.distance
    lower_slack = value + tol - gw_xy.distance
    glue_slack = glue_value + tol - value
    upper_slack = upper + tol - glue_value
    violations = []
    if lower_slack < 0:
        violations.append("lower")
    if glue_slack < 0:
        violations.append("glue")
    if upper_slack < 0:
        violations.append("upper")
    return {
        "ref_id": ref.id,
        "x_id": space_x.id,
        "y_id": space_y.id,
        "gw_xy": gw_xy.distance,
        "gw_s": value,
        "gw_s_glue": glue_value,
        "gw_sx": gw_sx.distance,
        "gw_sy": gw_sy.distance,
        "lower_ok": lower_slack >= 0,
        "upper_ok": glue_slack >= 0 and upper_slack >= 0,
        "lower_slack": lower_slack,
        "upper_slack": min(glue_slack, upper_slack),
        "violations": violations,
    }

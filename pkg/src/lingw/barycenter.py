"""Fixed-support, fixed-weight GW barycenters by block coordinate descent."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ValidationError
from .gw import GwConfig, solve_gw
from .measure import MmSpace

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BarycenterConfig:
    points: int
    lambdas: Optional[Sequence[float]] = None
    outer_iters: int = 20
    seed: int = 0
    inner_gw: GwConfig = field(default_factory=GwConfig)
    init_plans: Optional[Sequence] = None
    tol: float = 1e-8

    def __post_init__(self):
        if self.points < 1:
            raise ValidationError("barycenter needs at least one point")
        if self.lambdas is not None and abs(sum(self.lambdas) - 1.0) > 1e-9:
            raise ValidationError("lambdas must sum to 1")


def _lambdas(config, K):
    if config.lambdas is None:
        return np.full(K, 1.0 / K)
    lam = np.asarray(config.lambdas, dtype=float)
    if lam.size != K:
        raise ValidationError(f"{lam.size} lambdas for {K} spaces")
    return lam


def random_metric(n, seed):
    rng = np.random.default_rng(seed)
    d = np.triu(rng.random((n, n)), 1)
    return d + d.T


def metric_update(plans, metrics, lambdas, weights):
    """Closed-form minimizer of the objective in the barycenter metric for fixed plans."""
    acc = np.zeros((weights.size, weights.size))
    for lam, P, D in zip(lambdas, plans, metrics):
        acc += lam * (P @ D @ P.T)
    d = acc / np.outer(weights, weights)
    d = 0.5 * (d + d.T)
    np.fill_diagonal(d, 0.0)
    return np.maximum(d, 0.0)


def barycenter_objective(bary: MmSpace, spaces, lambdas=None, config: Optional[GwConfig] = None) -> float:
    """``sum_k lambda_k GW^2(bary, X_k)`` with GW found by :func:`solve_gw`."""
    K = len(spaces)
    lam = np.full(K, 1.0 / K) if lambdas is None else np.asarray(lambdas, float)
    return float(sum(l * solve_gw(bary, X, config).cost for l, X in zip(lam, spaces)))


def solve_barycenter(spaces: Sequence[MmSpace], config: BarycenterConfig, id="barycenter",
                     return_history=False):
    """Alternate GW plan updates and closed-form metric updates.

    The barycenter keeps uniform weights on ``config.points`` atoms. Each
    sweep warm-starts the inner GW solves from the previous plans, so the
    objective never increases.
    """
    K = len(spaces)
    if K < 1:
        raise ValidationError("need at least one input space")
    lam = _lambdas(config, K)
    n = config.points
    w = np.full(n, 1.0 / n)
    metrics = [X.metric for X in spaces]
    gw_cfg = config.inner_gw
    history = []

    if config.init_plans is not None:
        plans = [np.asarray(P, float) for P in config.init_plans]
        if len(plans) != K:
            raise ValidationError("one init plan per input space is required")
        d = metric_update(plans, metrics, lam, w)
    else:
        plans = None
        d = random_metric(n, config.seed)

    for sweep in range(config.outer_iters):
        S = MmSpace(id=id, weights=w, metric=d, metric_kind="explicit")
        new_plans, obj = [], 0.0
        for k, X in enumerate(spaces):
            cfg = gw_cfg
            if plans is not None:
                base = list(gw_cfg.inits) if gw_cfg.inits is not None else ["product"]
                cfg = gw_cfg.with_inits([("warm", plans[k])] + base)
            res = solve_gw(S, X, cfg)
            new_plans.append(res.plan.matrix)
            obj += lam[k] * res.cost
        history.append(obj)
        plans = new_plans
        d_new = metric_update(plans, metrics, lam, w)
        change = float(np.max(np.abs(d_new - d)))
        d = d_new
        log.debug("barycenter sweep %d objective %.6g change %.3g", sweep, obj, change)
        if change < config.tol:
            break

    out = MmSpace(id=id, weights=w, metric=d, metric_kind="explicit")
    if return_history:
        return out, history
    return out

"""Discrete metric-measure spaces, transport plans and their on-disk formats.

All containers are frozen dataclasses holding read-only numpy arrays, so they
can be shared between worker processes and threads without copying concerns.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import LinGWIOError, MarginalError, ParseError, ValidationError

METRIC_KINDS = ("euclidean", "geodesic", "explicit")

WEIGHT_SUM_TOL = 1e-12
SYMMETRY_TOL = 1e-12
EUCLIDEAN_TOL = 1e-9
MARGINAL_TOL = 1e-9


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


def pairwise_euclidean(points):
    """Euclidean distance matrix of the rows of ``points`` (exactly symmetric)."""
    p = np.asarray(points, dtype=float)
    diff = p[:, None, :] - p[None, :, :]
    d = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    return 0.5 * (d + d.T)


@dataclass(frozen=True, eq=False)
class MmSpace:
    """Finite metric-measure space ``(X, d_X, mu)``.

    Parameters
    ----------
    id : str
        Identifier, used for sorting and as matrix header.
    weights : array-like, shape (n,)
        Strictly positive probability masses.
    metric : array-like, shape (n, n)
        Symmetric, zero-diagonal, nonnegative distance matrix.
    metric_kind : {'euclidean', 'geodesic', 'explicit'}
        Provenance of ``metric``. Only euclidean spaces admit the Euclidean
        barycentric projection.
    points : array-like, shape (n, d), optional
        Ambient coordinates.
    label : str, optional
        Class tag.
    """

    id: str
    weights: np.ndarray
    metric: np.ndarray
    metric_kind: str = "explicit"
    points: Optional[np.ndarray] = None
    label: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "weights", _frozen(self.weights))
        object.__setattr__(self, "metric", _frozen(self.metric))
        if self.points is not None:
            pts = np.asarray(self.points, dtype=float)
            if pts.ndim == 1:
                pts = pts[:, None]
            object.__setattr__(self, "points", _frozen(pts))
        self._validate()

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def _validate(self):
        w, d = self.weights, self.metric
        if w.ndim != 1 or w.shape[0] < 1:
            raise ValidationError("weights: must be a non-empty vector")
        n = w.shape[0]
        if d.shape != (n, n):
            raise ValidationError(f"metric: shape {d.shape} does not match n={n}")
        if self.metric_kind not in METRIC_KINDS:
            raise ValidationError(f"metric_kind: unknown kind {self.metric_kind!r}")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(d))):
            raise ValidationError("finite: weights and metric must be finite")
        if np.any(w <= 0):
            raise ValidationError("positive weights: every weight must be > 0")
        if abs(w.sum() - 1.0) > WEIGHT_SUM_TOL:
            raise ValidationError(f"normalization: weights sum to {w.sum()!r}, not 1")
        if np.any(d < 0):
            raise ValidationError("nonnegative metric: negative entry found")
        scale = max(1.0, float(np.max(d)))
        if np.max(np.abs(d - d.T)) > SYMMETRY_TOL * scale:
            raise ValidationError("symmetry: metric is not symmetric")
        if np.any(np.diag(d) != 0):
            raise ValidationError("zero diagonal: metric has nonzero diagonal")
        if self.points is not None:
            if self.points.shape[0] != n:
                raise ValidationError("points: row count does not match n")
            if self.metric_kind == "euclidean":
                err = np.max(np.abs(pairwise_euclidean(self.points) - d))
                if err > EUCLIDEAN_TOL:
                    raise ValidationError(
                        f"euclidean consistency: metric deviates from point distances by {err:g}"
                    )

    @classmethod
    def from_points(cls, points, weights=None, id="space", label=None):
        """Euclidean space on ``points`` (uniform weights by default)."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        n = pts.shape[0]
        w = np.full(n, 1.0 / n) if weights is None else np.asarray(weights, dtype=float)
        return cls(id=id, weights=w, metric=pairwise_euclidean(pts),
                   metric_kind="euclidean", points=pts, label=label)

    def with_id(self, id, label=None):
        return MmSpace(id=id, weights=self.weights, metric=self.metric,
                       metric_kind=self.metric_kind, points=self.points,
                       label=self.label if label is None else label)

    def triangle_violation(self) -> float:
        """Largest ``d[i,k] - d[i,j] - d[j,k]`` over all triples (0 if none)."""
        d = self.metric
        worst = 0.0
        for j in range(self.n):
            viol = d - (d[:, j][:, None] + d[j, :][None, :])
            worst = max(worst, float(viol.max()))
        return worst

    def to_dict(self):
        return {
            "id": self.id,
            "label": self.label,
            "n": self.n,
            "weights": self.weights.tolist(),
            "metric_kind": self.metric_kind,
            "metric": self.metric.tolist(),
            "points": None if self.points is None else self.points.tolist(),
        }


def space_from_dict(obj, drop_zero=False) -> MmSpace:
    try:
        weights = np.asarray(obj["weights"], dtype=float)
        metric = np.asarray(obj["metric"], dtype=float)
        points = obj.get("points")
        points = None if points is None else np.asarray(points, dtype=float)
        n = int(obj["n"])
        kind = obj.get("metric_kind", "explicit")
        ident = str(obj["id"])
        label = obj.get("label")
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed mm-space record: {exc}") from exc
    if weights.ndim != 1 or weights.shape[0] != n:
        raise ValidationError(f"n: declared n={n} does not match {weights.shape[0]} weights")
    if drop_zero:
        keep = weights > 0
        weights = weights[keep]
        metric = metric[np.ix_(keep, keep)]
        if points is not None:
            points = points[keep]
    return MmSpace(id=ident, weights=weights, metric=metric, metric_kind=kind,
                   points=points, label=label)


def dumps_space(space: MmSpace) -> str:
    # float repr is the shortest round-tripping decimal, so this is canonical
    return json.dumps(space.to_dict()) + "\n"


def load_mm_space(path, drop_zero=False) -> MmSpace:
    """Read and validate an mm-space JSON file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc
    except OSError as exc:
        raise LinGWIOError(f"{path}: {exc}") from exc
    return space_from_dict(obj, drop_zero=drop_zero)


def save_mm_space(space: MmSpace, path) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(dumps_space(space))
    except OSError as exc:
        raise LinGWIOError(f"{path}: {exc}") from exc


def load_spaces_dir(directory, drop_zero=False):
    """All ``*.json`` spaces of a directory, sorted by id."""
    names = sorted(f for f in os.listdir(directory) if f.endswith(".json"))
    spaces = [load_mm_space(os.path.join(directory, f), drop_zero=drop_zero) for f in names]
    return sorted(spaces, key=lambda s: s.id)


@dataclass(frozen=True, eq=False)
class TransportPlan:
    """Coupling matrix together with the marginals it is meant to satisfy."""

    matrix: np.ndarray
    row_marginal: np.ndarray
    col_marginal: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", _frozen(self.matrix))
        object.__setattr__(self, "row_marginal", _frozen(self.row_marginal))
        object.__setattr__(self, "col_marginal", _frozen(self.col_marginal))

    @classmethod
    def from_matrix(cls, matrix):
        m = np.asarray(matrix, dtype=float)
        return cls(m, m.sum(axis=1), m.sum(axis=0))

    @property
    def shape(self):
        return self.matrix.shape

    def marginal_violation(self) -> float:
        p = self.matrix
        return max(float(np.max(np.abs(p.sum(axis=1) - self.row_marginal))),
                   float(np.max(np.abs(p.sum(axis=0) - self.col_marginal))))


def validate_plan(plan: TransportPlan, tol: float = MARGINAL_TOL) -> None:
    """Raise :class:`MarginalError` unless ``plan`` is a nonnegative coupling of its marginals."""
    p = plan.matrix
    if p.shape != (plan.row_marginal.shape[0], plan.col_marginal.shape[0]):
        raise MarginalError(f"plan shape {p.shape} does not match marginals", np.inf)
    neg = float(-p.min()) if p.size else 0.0
    if neg > 0:
        raise MarginalError(f"plan has negative entry {-neg:g}", neg)
    viol = plan.marginal_violation()
    if viol > tol:
        raise MarginalError(f"marginal violation {viol:g} exceeds {tol:g}", viol)


def product_plan(mu, nu) -> TransportPlan:
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    return TransportPlan(np.outer(mu, nu), mu, nu)


def save_plan_csv(plan, path) -> None:
    """Write nonzero entries as ``i,j,mass`` rows."""
    p = plan.matrix if isinstance(plan, TransportPlan) else np.asarray(plan)
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["i", "j", "mass"])
            for i, j in zip(*np.nonzero(p)):
                w.writerow([int(i), int(j), repr(float(p[i, j]))])
    except OSError as exc:
        raise LinGWIOError(f"{path}: {exc}") from exc


def load_plan_csv(path, shape) -> np.ndarray:
    out = np.zeros(shape)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise LinGWIOError(f"{path}: {exc}") from exc
    try:
        for row in rows[1:]:
            if row:
                out[int(row[0]), int(row[1])] += float(row[2])
    except (ValueError, IndexError) as exc:
        raise ParseError(f"{path}: bad plan triplet ({exc})") from exc
    return out


@dataclass(frozen=True, eq=False)
class ThreePlan:
    """Tensor ``pi[s, x, y]`` with prescribed (s,x) and (s,y) marginals."""

    tensor: np.ndarray
    marginal12: np.ndarray
    marginal13: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "tensor", _frozen(self.tensor))
        object.__setattr__(self, "marginal12", _frozen(self.marginal12))
        object.__setattr__(self, "marginal13", _frozen(self.marginal13))

    def p12(self):
        return self.tensor.sum(axis=2)

    def p13(self):
        return self.tensor.sum(axis=1)

    def p23(self):
        return self.tensor.sum(axis=0)

    def validate(self, tol: float = MARGINAL_TOL) -> None:
        t = self.tensor
        if t.size and t.min() < 0:
            raise MarginalError("3-plan has negative entry", float(-t.min()))
        viol = max(float(np.max(np.abs(self.p12() - self.marginal12))),
                   float(np.max(np.abs(self.p13() - self.marginal13))))
        if viol > tol:
            raise MarginalError(f"3-plan marginal violation {viol:g}", viol)


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    ids: tuple
    values: np.ndarray
    labels: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "ids", tuple(str(i) for i in self.ids))
        object.__setattr__(self, "values", _frozen(self.values))
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(self.labels))
        v = self.values
        n = len(self.ids)
        if v.shape != (n, n):
            raise ValidationError(f"distance matrix shape {v.shape} does not match {n} ids")
        if n and np.max(np.abs(v - v.T)) > 1e-9:
            raise ValidationError("symmetry: distance matrix is not symmetric")
        if n and np.any(np.diag(v) != 0):
            raise ValidationError("zero diagonal: distance matrix has nonzero diagonal")
        if np.any(v < 0):
            raise ValidationError("nonnegative: distance matrix has negative entries")
        if self.labels is not None and len(self.labels) != n:
            raise ValidationError("labels: length does not match ids")

    def __len__(self):
        return len(self.ids)

    def with_labels(self, labels):
        return DistanceMatrix(self.ids, self.values, tuple(labels))


def save_distance_csv(dm: DistanceMatrix, path) -> None:
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["id", *dm.ids])
            for k, ident in enumerate(dm.ids):
                w.writerow([ident, *(repr(float(x)) for x in dm.values[k])])
    except OSError as exc:
        raise LinGWIOError(f"{path}: {exc}") from exc


def load_distance_csv(path, labels_path=None) -> DistanceMatrix:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as exc:
        raise LinGWIOError(f"{path}: {exc}") from exc
    if not rows or rows[0][0] != "id":
        raise ParseError(f"{path}: missing 'id' header")
    ids = rows[0][1:]
    try:
        if [r[0] for r in rows[1:]] != ids:
            raise ParseError(f"{path}: row ids do not match header")
        values = np.array([[float(x) for x in r[1:]] for r in rows[1:]]).reshape(len(ids), len(ids))
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    labels = None
    if labels_path is not None:
        lab = load_labels_csv(labels_path)
        try:
            labels = tuple(lab[i] for i in ids)
        except KeyError as exc:
            raise ParseError(f"{labels_path}: no label for id {exc}") from exc
    return DistanceMatrix(tuple(ids), values, labels)


def save_labels_csv(ids: Sequence[str], labels: Sequence[str], path) -> None:
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["id", "label"])
            w.writerows(zip(ids, labels))
    except OSError as exc:
        raise LinGWIOError(f"{path}: {exc}") from exc


def load_labels_csv(path) -> dict:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as exc:
        raise LinGWIOError(f"{path}: {exc}") from exc
    return {r[0]: r[1] for r in rows[1:]}

"""Diagnostics on pairwise-distance matrices."""

from __future__ import annotations

import numpy as np

from . import kernels
from .errors import ClassTooSmall, DegenerateVariance, IdMismatch, ValidationError
from .measure import DistanceMatrix

MRE_FLOOR = 1e-12


def _values(dist):
    return dist.values if isinstance(dist, DistanceMatrix) else np.asarray(dist, dtype=float)


def classical_mds(dist, dim=2):
    """Torgerson MDS.

    Columns come in order of decreasing eigenvalue, negative eigenvalues are
    clamped to zero, and each column is flipped so that its first nonzero
    coordinate is positive.
    """
    if dim < 1:
        raise ValidationError("dim must be >= 1")
    D = _values(dist)
    N = D.shape[0]
    J = np.eye(N) - 1.0 / N
    B = -0.5 * J @ (D * D) @ J
    B = 0.5 * (B + B.T)
    evals, evecs = np.linalg.eigh(B)
    order = np.argsort(evals)[::-1][:dim]
    evals = np.clip(evals[order], 0.0, None)
    X = evecs[:, order] * np.sqrt(evals)
    if X.shape[1] < dim:
        X = np.hstack([X, np.zeros((N, dim - X.shape[1]))])
    tol = 1e-12 * max(1.0, float(np.abs(X).max(initial=0.0)))
    for c in range(dim):
        nz = np.flatnonzero(np.abs(X[:, c]) > tol)
        if nz.size and X[nz[0], c] < 0:
            X[:, c] = -X[:, c]
    return X


def confusion_matrix(dist, labels=None, repetitions=10_000, seed=0):
    """Nearest-representative classification averaged over random draws.

    Each repetition picks one representative per class and assigns every
    other item to the class of its nearest representative. Returns
    ``(classes, matrix)`` with rows indexed by true class and normalized to 1.
    """
    D = np.ascontiguousarray(_values(dist))
    if labels is None:
        labels = dist.labels
    if labels is None:
        raise ValidationError("labels are required")
    labels = list(labels)
    classes = sorted(set(labels))
    cls_idx = np.array([classes.index(l) for l in labels], dtype=np.int64)
    members = [np.flatnonzero(cls_idx == c) for c in range(len(classes))]
    for c, mem in zip(classes, members):
        if mem.size < 2:
            raise ClassTooSmall(f"class {c!r} has {mem.size} member(s), need 2")
    rng = np.random.default_rng(seed)
    reps = np.column_stack([mem[rng.integers(mem.size, size=repetitions)] for mem in members])
    counts = kernels.confusion_counts(D, cls_idx, np.ascontiguousarray(reps), len(classes))
    return classes, counts / counts.sum(axis=1, keepdims=True)


def compare_distance_matrices(reference: DistanceMatrix, other: DistanceMatrix) -> dict:
    """MRE against ``reference`` and Pearson correlation over unordered pairs."""
    if tuple(reference.ids) != tuple(other.ids):
        raise IdMismatch("distance matrices have different ids or order")
    N = len(reference.ids)
    if N < 3:
        raise ValidationError("need at least 3 items")
    iu = np.triu_indices(N, 1)
    a = reference.values[iu]
    b = other.values[iu]
    keep = a > MRE_FLOOR
    mre = float(np.mean(np.abs(b[keep] - a[keep]) / a[keep])) if keep.any() else float("nan")
    if np.std(a) == 0 or np.std(b) == 0:
        raise DegenerateVariance("one of the matrices has constant off-diagonal entries")
    pcc = float(np.corrcoef(a, b)[0, 1])
    return {"mre": mre, "pcc": pcc, "pairs_used": int(keep.sum())}


def gw_kernel(dist, alpha):
    if not alpha > 0:
        raise ValidationError("alpha must be > 0")
    return np.exp(-alpha * _values(dist))

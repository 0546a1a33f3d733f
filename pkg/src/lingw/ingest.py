"""Turn raster images, point lists and triangle meshes into mm-spaces."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from . import kernels
from .kernels._numpy_impl import FPS_TIE_RTOL
from .errors import (
    DisconnectedMesh,
    LinGWIOError,
    NonTriangleFace,
    ParseError,
    TooFewPixels,
    ValidationError,
)
from .measure import MmSpace


class DisconnectedWarning(UserWarning):
    pass


# ---------------------------------------------------------------- images

def _pgm_tokens(data: bytes):
    """Header tokens of a PGM file and the offset right after the header."""
    tokens, pos = [], 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise ParseError("truncated PGM header")
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    return tokens, pos + 1


def read_pgm(path) -> np.ndarray:
    """Read a plain (P2) or raw (P5) PGM into a float array scaled to [0, 1]."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise LinGWIOError(f"{path}: {exc}") from exc
    try:
        tokens, offset = _pgm_tokens(data)
        magic = tokens[0]
        width, height, maxval = (int(t) for t in tokens[1:4])
    except (ValueError, ParseError) as exc:
        raise ParseError(f"{path}: bad PGM header ({exc})") from exc
    if magic not in (b"P2", b"P5") or width < 1 or height < 1 or not 0 < maxval < 65536:
        raise ParseError(f"{path}: unsupported PGM ({magic!r}, {width}x{height}, max {maxval})")
    count = width * height
    if magic == b"P5":
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        raw = np.frombuffer(data, dtype=dtype, count=count, offset=offset) \
            if len(data) - offset >= count * dtype.itemsize else None
    else:
        # strip comments from the body before splitting
        body = b"\n".join(line.split(b"#", 1)[0] for line in data[offset - 1:].splitlines())
        try:
            raw = np.array(body.split(), dtype=np.int64)
        except ValueError:
            raw = None
        if raw is not None and raw.size != count:
            raw = None
    if raw is None:
        raise ParseError(f"{path}: PGM body has wrong length")
    return raw.reshape(height, width).astype(float) / maxval


def write_pgm(image, path, maxval=255, plain=False) -> None:
    """Write a [0, 1] grayscale array as PGM."""
    img = np.clip(np.asarray(image, dtype=float), 0.0, 1.0)
    vals = np.rint(img * maxval).astype(np.int64)
    h, w = vals.shape
    try:
        with open(path, "wb") as fh:
            if plain:
                fh.write(f"P2\n{w} {h}\n{maxval}\n".encode())
                for row in vals:
                    fh.write((" ".join(map(str, row)) + "\n").encode())
            else:
                fh.write(f"P5\n{w} {h}\n{maxval}\n".encode())
                dtype = ">u2" if maxval > 255 else "u1"
                fh.write(vals.astype(dtype).tobytes())
    except OSError as exc:
        raise LinGWIOError(f"{path}: {exc}") from exc


def pixel_coordinates(image, threshold):
    """Centers ``(col + 0.5, height - row - 0.5)`` of pixels brighter than ``threshold``."""
    img = np.asarray(image, dtype=float)
    rows, cols = np.nonzero(img > threshold)
    return np.column_stack([cols + 0.5, img.shape[0] - rows - 0.5])


def read_points_csv(path) -> np.ndarray:
    """Rows ``x,y[,z]``; a non-numeric first row is treated as a header."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise LinGWIOError(f"{path}: {exc}") from exc
    if rows:
        try:
            [float(c) for c in rows[0]]
        except ValueError:
            rows = rows[1:]
    try:
        pts = np.array([[float(c) for c in r] for r in rows])
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if pts.ndim != 2 or pts.shape[0] == 0 or pts.shape[1] not in (2, 3):
        raise ParseError(f"{path}: expected rows of 2 or 3 coordinates")
    return pts


def _seeds(seed, k=2):
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(k)]


def points_to_space(points, sample_points=None, seed=0, id="points", label=None) -> MmSpace:
    """Uniform Euclidean space on ``points``, FPS-reduced to ``sample_points`` if needed."""
    pts = np.asarray(points, dtype=float)
    if sample_points is not None and pts.shape[0] > sample_points:
        idx = fps_points(pts, sample_points, seed=seed)
        pts = pts[np.sort(idx)]
    return MmSpace.from_points(pts, id=id, label=label)


def image_to_space(path_or_image, threshold=0.5, sample_points=50, seed=0,
                   id=None, label=None) -> MmSpace:
    """Uniform measure on the bright pixels of a grayscale image.

    More than ``sample_points`` pixels are reduced by Euclidean farthest-point
    sampling with a seeded random first point.
    """
    if isinstance(path_or_image, np.ndarray):
        img, default_id = path_or_image, "image"
    else:
        img, default_id = read_pgm(path_or_image), str(path_or_image)
    pts = pixel_coordinates(img, threshold)
    if pts.shape[0] < sample_points:
        raise TooFewPixels(f"{pts.shape[0]} pixels above {threshold}, need {sample_points}")
    return points_to_space(pts, sample_points, seed, id=id or default_id, label=label)


# ---------------------------------------------------------------- meshes

@dataclass(frozen=True, eq=False)
class WeightedGraph:
    vertex_count: int
    edges: np.ndarray  # (E, 2) int
    lengths: np.ndarray  # (E,)

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        ln = np.asarray(self.lengths, dtype=float).reshape(-1)
        if e.shape[0] != ln.shape[0]:
            raise ValidationError("one length per edge is required")
        if np.any(e[:, 0] == e[:, 1]):
            raise ValidationError("self-loops are not allowed")
        if e.size and (e.min() < 0 or e.max() >= self.vertex_count):
            raise ValidationError("edge index out of range")
        if np.any(ln <= 0):
            raise ValidationError("edge lengths must be positive")
        object.__setattr__(self, "edges", e)
        object.__setattr__(self, "lengths", ln)

    def csgraph(self):
        n = self.vertex_count
        e = self.edges
        return coo_matrix(
            (np.r_[self.lengths, self.lengths], (np.r_[e[:, 0], e[:, 1]], np.r_[e[:, 1], e[:, 0]])),
            shape=(n, n),
        ).tocsr()


def read_off(path):
    """Vertices ``(V, 3)`` and triangles ``(F, 3)`` of an OFF file."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise LinGWIOError(f"{path}: {exc}") from exc
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    tokens = " ".join(ln for ln in lines if ln).split()
    if not tokens or not tokens[0].startswith("OFF"):
        raise ParseError(f"{path}: missing OFF header")
    rest = tokens[0][3:]
    pos = 1
    if rest:
        tokens.insert(1, rest)
    try:
        nv, nf = int(tokens[pos]), int(tokens[pos + 1])
        pos += 3
        verts = np.array(tokens[pos:pos + 3 * nv], dtype=float).reshape(nv, 3)
        pos += 3 * nv
        faces = []
        for f in range(nf):
            k = int(tokens[pos])
            if k != 3:
                raise NonTriangleFace(f"{path}: face {f} has {k} vertices")
            faces.append([int(t) for t in tokens[pos + 1:pos + 4]])
            pos += 1 + k
    except NonTriangleFace:
        raise
    except (ValueError, IndexError) as exc:
        raise ParseError(f"{path}: malformed OFF body ({exc})") from exc
    faces = np.array(faces, dtype=np.int64).reshape(-1, 3)
    if faces.size and (faces.min() < 0 or faces.max() >= nv):
        raise ParseError(f"{path}: face index out of range")
    return verts, faces


def write_off(vertices, faces, path) -> None:
    v = np.asarray(vertices, float)
    f = np.asarray(faces, np.int64)
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"OFF\n{len(v)} {len(f)} 0\n")
            for p in v:
                fh.write(" ".join(repr(float(c)) for c in p) + "\n")
            for t in f:
                fh.write("3 " + " ".join(str(int(c)) for c in t) + "\n")
    except OSError as exc:
        raise LinGWIOError(f"{path}: {exc}") from exc


def triangles_to_graph(vertices, faces):
    """Graph with one edge per distinct triangle side, weighted by its length."""
    v = np.asarray(vertices, float)
    f = np.asarray(faces, np.int64)
    sides = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
    sides = np.sort(sides, axis=1)
    sides = sides[sides[:, 0] != sides[:, 1]]
    sides = np.unique(sides, axis=0)
    lengths = np.linalg.norm(v[sides[:, 0]] - v[sides[:, 1]], axis=1)
    return WeightedGraph(len(v), sides, lengths)


def mesh_to_graph(path):
    verts, faces = read_off(path)
    return triangles_to_graph(verts, faces), verts


class GeodesicResult(NamedTuple):
    distances: np.ndarray
    disconnected: bool


def dijkstra_distances(graph: WeightedGraph, sources) -> GeodesicResult:
    """Shortest-path lengths from each source to every vertex.

    Unreachable vertices get ``inf``; that case is flagged in the result and
    reported as a :class:`DisconnectedWarning` rather than raised.
    """
    src = np.atleast_1d(np.asarray(sources, dtype=np.int64))
    if graph.vertex_count == 0:
        return GeodesicResult(np.zeros((src.size, 0)), False)
    dist = dijkstra(graph.csgraph(), directed=False, indices=src)
    dist = np.atleast_2d(dist)
    disconnected = bool(np.isinf(dist).any())
    if disconnected:
        warnings.warn("graph is not connected from every source", DisconnectedWarning, stacklevel=2)
    return GeodesicResult(dist, disconnected)


# ---------------------------------------------------------------- sampling

def farthest_point_sample(distance_fn: Callable[[int], np.ndarray], candidate_count: int, k: int,
                          seed=0, first: Optional[int] = None) -> np.ndarray:
    """Greedy max-min subset of ``range(candidate_count)``.

    ``distance_fn(i)`` returns distances from candidate ``i`` to all
    candidates. The first index is drawn from ``seed`` unless ``first`` is
    given; max-min ties (relative 1e-9) go to the lowest index.
    """
    if k > candidate_count:
        raise ValidationError(f"cannot pick {k} of {candidate_count} candidates")
    if first is None:
        first = int(np.random.default_rng(seed).integers(candidate_count))
    out = np.empty(k, np.int64)
    dmin = np.full(candidate_count, np.inf)
    cur = first
    for s in range(k):
        out[s] = cur
        np.minimum(dmin, np.asarray(distance_fn(cur), dtype=float), out=dmin)
        best = dmin.max()
        cur = int(np.argmax(dmin >= best - FPS_TIE_RTOL * best))
    return out


def fps_points(points, k, seed=0, first=None):
    pts = np.ascontiguousarray(points, dtype=float)
    n = pts.shape[0]
    if k > n:
        raise ValidationError(f"cannot pick {k} of {n} points")
    if first is None:
        first = int(np.random.default_rng(seed).integers(n))
    return np.asarray(kernels.fps_points(pts, k, first))


def fps_matrix(D, k, seed=0, first=None):
    D = np.ascontiguousarray(D, dtype=float)
    n = D.shape[1]
    if k > n:
        raise ValidationError(f"cannot pick {k} of {n} candidates")
    if first is None:
        first = int(np.random.default_rng(seed).integers(n))
    return np.asarray(kernels.fps_matrix(D, k, first))


def mesh_arrays_to_space(vertices, faces, coarse_points=4000, final_points=50, seed=0,
                         id="mesh", label=None) -> MmSpace:
    """Two-step reduction of a triangle mesh to a geodesic mm-space.

    1. Euclidean FPS of the vertices down to ``coarse_points``.
    2. Geodesic distances on the full mesh graph from every coarse point,
       geodesic FPS down to ``final_points``; each final point is weighted
       by the share of coarse points in its geodesic Voronoi cell.
    """
    verts = np.asarray(vertices, float)
    graph = triangles_to_graph(verts, faces)
    s_coarse, s_final = _seeds(seed)
    nv = len(verts)
    if nv > coarse_points:
        coarse = np.sort(fps_points(verts, coarse_points, seed=s_coarse))
    else:
        coarse = np.arange(nv)
    geo = dijkstra(graph.csgraph(), directed=False, indices=coarse)[:, coarse]
    if np.isinf(geo).any():
        raise DisconnectedMesh("mesh graph is not connected")
    geo = 0.5 * (geo + geo.T)
    np.fill_diagonal(geo, 0.0)
    c = len(coarse)
    if c <= final_points:
        final = np.arange(c)
    else:
        final = np.sort(fps_matrix(geo, final_points, seed=s_final))
    to_final = geo[:, final]
    nearest = to_final.min(axis=1, keepdims=True)
    # near-ties go to the lowest final-point index, robust to rounding noise
    cell = np.argmax(to_final <= nearest + FPS_TIE_RTOL * nearest, axis=1)
    weights = np.bincount(cell, minlength=len(final)) / c
    metric = geo[np.ix_(final, final)]
    return MmSpace(id=id, weights=weights, metric=metric, metric_kind="geodesic",
                   points=verts[coarse[final]], label=label)


def mesh_to_space(path, coarse_points=4000, final_points=50, seed=0, id=None, label=None) -> MmSpace:
    verts, faces = read_off(path)
    return mesh_arrays_to_space(verts, faces, coarse_points, final_points, seed,
                                id=id or str(path), label=label)

"""Synthetic shapes standing in for the image and mesh collections.

Rasters are sampled at pixel centers, so a shape rotated by a multiple of 90
degrees yields an exactly isometric pixel set.
"""

import numpy as np


def _grid(shape):
    h, w = shape
    rows, cols = np.mgrid[0:h, 0:w]
    x = cols + 0.5
    y = h - rows - 0.5
    return x, y


def ellipse_image(shape=(20, 20), a=5.0, b=3.0, angle=0.0, center=None):
    """Binary image of a filled ellipse with semi-axes ``a`` (along ``angle``) and ``b``."""
    h, w = shape
    cx, cy = (w / 2.0, h / 2.0) if center is None else center
    x, y = _grid(shape)
    c, s = np.cos(angle), np.sin(angle)
    u = (x - cx) * c + (y - cy) * s
    v = -(x - cx) * s + (y - cy) * c
    return ((u / a) ** 2 + (v / b) ** 2 <= 1.0).astype(float)


def cross_image(shape=(20, 20), arm=7.0, half_width=1.5, angle=0.0, center=None):
    """Binary image of a plus-shaped cross."""
    h, w = shape
    cx, cy = (w / 2.0, h / 2.0) if center is None else center
    x, y = _grid(shape)
    c, s = np.cos(angle), np.sin(angle)
    u = (x - cx) * c + (y - cy) * s
    v = -(x - cx) * s + (y - cy) * c
    horiz = (np.abs(u) <= arm) & (np.abs(v) <= half_width)
    vert = (np.abs(v) <= arm) & (np.abs(u) <= half_width)
    return (horiz | vert).astype(float)


def elliptical_disks(axes=(2.5, 4.0, 5.5, 7.0, 8.5), shape=(20, 20)):
    """One disk per ordered pair of semi-axes.

    ``(a, b)`` and ``(b, a)`` are 90-degree rotations of each other, so the
    off-diagonal entries of the axes grid come in isometric pairs. Returns a
    list of ``(id, image)``.
    """
    out = []
    for i, a in enumerate(axes):
        for j, b in enumerate(axes):
            out.append((f"ell_{i}{j}", ellipse_image(shape, a, b)))
    return out


def cylinder_mesh(radius=1.0, length=8.0, rings=25, segments=12, rotation=None, offset=None):
    """Open triangulated cylinder along the z axis, optionally rigidly moved."""
    theta = 2 * np.pi * np.arange(segments) / segments
    z = np.linspace(0.0, length, rings)
    verts = np.array([[radius * np.cos(t), radius * np.sin(t), zz] for zz in z for t in theta])
    faces = []
    for r in range(rings - 1):
        for s in range(segments):
            a = r * segments + s
            b = r * segments + (s + 1) % segments
            c = a + segments
            d = b + segments
            faces.append([a, b, d])
            faces.append([a, d, c])
    if rotation is not None:
        verts = verts @ np.asarray(rotation, float).T
    if offset is not None:
        verts = verts + np.asarray(offset, float)
    return verts, np.array(faces, dtype=np.int64)


def random_rotation_3d(seed):
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def rigid_motion_2d(points, angle, shift):
    c, s = np.cos(angle), np.sin(angle)
    R = np.array([[c, -s], [s, c]])
    return np.asarray(points, float) @ R.T + np.asarray(shift, float)


def ellipses_and_crosses(per_class=10, shape=(28, 28), seed=0):
    """Two shape classes with mild size jitter and random in-plane rotations.

    Returns a list of ``(id, label, image)``; ellipses come first. Semi-axes
    and arm lengths scale with the grid so every shape keeps enough pixels.
    """
    rng = np.random.default_rng(seed)
    s = min(shape) / 20.0
    out = []
    for k in range(per_class):
        a, b = rng.uniform(7.0, 8.0) * s, rng.uniform(3.5, 4.5) * s
        out.append((f"ellipse_{k:02d}", "ellipse", ellipse_image(shape, a, b, rng.uniform(0, np.pi))))
    for k in range(per_class):
        arm, hw = rng.uniform(7.0, 8.0) * s, rng.uniform(1.0, 1.5) * s
        out.append((f"cross_{k:02d}", "cross", cross_image(shape, arm, hw, rng.uniform(0, np.pi / 2))))
    return out

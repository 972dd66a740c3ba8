"""Kendall shape space of planar triangles, identified with the 2-sphere.

A triangle is viewed as three complex numbers; quotienting translation and
scale gives a preshape on the complex 2-sphere, and quotienting planar
rotation (the Hopf fiber) lands on the ordinary 2-sphere.  The forward map
uses z1 and z2 only, legitimately: centering makes z3 redundant.

With z1 = x11 + i x12 and z2 = x21 + i x22 the forward map is

    y1 + i y2 = 2 z1 conj(z2),    y3 = |z2|^2 - |z1|^2,

followed by colatitude theta = arccos(y3 / r) and longitude
phi = atan2(y2, y1).  One checks directly that composing with the backward
parameterization z1 = sin(theta/2) e^{i(psi+phi)/2},
z2 = cos(theta/2) e^{i(psi-phi)/2} recovers (theta, phi) for every psi,
and that multiplying z by a unit complex number (a planar rotation of the
triangle) leaves y unchanged.
"""

from __future__ import annotations

import csv

import numpy as np

from .errors import DegenerateTriangle
from .geometry import Point, geodesic_distance


class Triangle:
    """Three labeled planar vertices, one per row of a 3x2 matrix."""

    __slots__ = ("vertices",)

    def __init__(self, vertices):
        v = np.asarray(vertices, dtype=float)
        if v.shape != (3, 2):
            raise ValueError("triangle vertices must form a 3x2 matrix")
        if not np.all(np.isfinite(v)):
            raise ValueError("triangle vertices must be finite")
        self.vertices = v

    @property
    def z(self) -> np.ndarray:
        """Vertices as complex numbers."""
        return self.vertices[:, 0] + 1j * self.vertices[:, 1]


class TrianglePreshape:
    """A centered, unit-norm complex 3-vector (translation and scale removed)."""

    __slots__ = ("z",)

    def __init__(self, z):
        z = np.asarray(z, dtype=complex)
        if z.shape != (3,):
            raise ValueError("preshape must have three complex entries")
        if abs(z.sum()) > 1e-10 or abs(np.linalg.norm(z) - 1.0) > 1e-10:
            raise ValueError("preshape must be centered with unit norm")
        self.z = z


def triangle_preshape(t: Triangle) -> TrianglePreshape:
    """Center a triangle and scale it to unit norm.

    Raises
    ------
    DegenerateTriangle
        If all three vertices coincide (nothing remains after centering).
    """
    z = t.z
    z = z - z.mean()
    norm = np.linalg.norm(z)
    if norm < 1e-12:
        raise DegenerateTriangle("all vertices coincide")
    return TrianglePreshape(z / norm)


def hopf_forward(pre: TrianglePreshape) -> Point:
    """Map a preshape to its similarity class, a point on the 2-sphere."""
    z1, z2 = pre.z[0], pre.z[1]
    w = 2.0 * z1 * np.conj(z2)
    y = np.array([w.real, w.imag, abs(z2) ** 2 - abs(z1) ** 2])
    r = np.linalg.norm(y)
    if r < 1e-15:
        raise DegenerateTriangle("preshape maps to the origin")
    return Point(y / r)


def hopf_backward(theta: float, phi: float, psi: float = 0.0) -> Triangle:
    """A triangle whose shape is the sphere point (theta, phi).

    ``psi`` selects a representative within the similarity class; it
    rotates the triangle in the plane and does not affect the shape.
    """
    if not 0.0 <= theta <= np.pi:
        raise ValueError("colatitude theta must lie in [0, pi]")
    s, c = np.sin(theta / 2.0), np.cos(theta / 2.0)
    x11 = np.cos((psi + phi) / 2.0) * s
    x12 = np.sin((psi + phi) / 2.0) * s
    x21 = np.cos((psi - phi) / 2.0) * c
    x22 = np.sin((psi - phi) / 2.0) * c
    return Triangle(
        [[x11, x12], [x21, x22], [-(x11 + x21), -(x12 + x22)]]
    )


def point_to_angles(p: Point) -> tuple[float, float]:
    """Colatitude and longitude of a sphere point, longitude in (-pi, pi]."""
    x, y, z = p.coords
    return float(np.arccos(np.clip(z, -1.0, 1.0))), float(np.arctan2(y, x))


def triangle_shape_distance(t0: Triangle, t1: Triangle) -> float:
    """Geodesic distance between the shapes of two triangles.

    Invariant under translation, scaling, and planar rotation of either
    input; zero exactly for similar triangles.
    """
    p0 = hopf_forward(triangle_preshape(t0))
    p1 = hopf_forward(triangle_preshape(t1))
    return geodesic_distance(p0, p1)


# ---------------------------------------------------------------------------
# triangles.csv: one triangle per row, columns x11 x12 x21 x22 x31 x32.

def save_triangles(path, triangles) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x11", "x12", "x21", "x22", "x31", "x32"])
        for t in triangles:
            writer.writerow([f"{v:.17g}" for v in t.vertices.ravel()])


def load_triangles(path) -> list[Triangle]:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if rows and rows[0] and rows[0][0] == "x11":
        rows = rows[1:]
    if not rows:
        raise ValueError("triangle file contains no data rows")
    out = []
    for row in rows:
        vals = [float(v) for v in row]
        if len(vals) != 6:
            raise ValueError("each triangle row needs six values")
        out.append(Triangle(np.array(vals).reshape(3, 2)))
    return out

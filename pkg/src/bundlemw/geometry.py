"""Geometry of punctured unit spheres S^{D-1} in any ambient dimension.

Provides exponential/log maps, geodesic distance, parallel transport along
minimal geodesics, Frechet means, and moving frames: an orthonormal tangent
basis at a distinguished point, transported to arbitrary points to give a
consistent coordinate system on every tangent space.  All operations are
pure functions of immutable values and safe to share across threads.

Accuracy is only guaranteed away from the puncture: transports and logs to
points m with <p, m> <= -1 + 1e-10 raise :class:`AntipodalPoint`, and
conditioning degrades as <p, m> approaches -1 (we recommend staying above
-0.99).
"""

from __future__ import annotations

import json
from typing import Optional, Sequence

import numpy as np

from .errors import AntipodalPoint, DegenerateFrame, NoConvergence

# <p,q> at or below -1 + ANTIPODE_TOL counts as the puncture.
ANTIPODE_TOL = 1e-10


class Point:
    """A point on the unit sphere, stored as a unit vector in R^D.

    Coordinates are renormalized on construction; zero vectors are rejected.
    """

    __slots__ = ("coords",)

    def __init__(self, coords):
        c = np.asarray(coords, dtype=float)
        if c.ndim != 1 or c.size < 2:
            raise ValueError("point coordinates must be a vector in R^D, D >= 2")
        if not np.all(np.isfinite(c)):
            raise ValueError("point coordinates must be finite")
        n = float(np.linalg.norm(c))
        if n < 1e-12:
            raise ValueError("cannot normalize a zero vector to the sphere")
        self.coords = c / n

    @property
    def dim(self) -> int:
        """Ambient dimension D."""
        return self.coords.size

    def __repr__(self) -> str:
        return f"Point({np.array2string(self.coords, precision=6)})"


class TangentVector:
    """A vector in the tangent space of the sphere at ``base``.

    The component along ``base`` must vanish to 1e-10 (relative to the
    vector norm); the residual normal component is projected away exactly.
    """

    __slots__ = ("base", "vec")

    def __init__(self, base: Point, vec):
        v = np.asarray(vec, dtype=float)
        if v.shape != base.coords.shape:
            raise ValueError("tangent vector and base point dimensions differ")
        dot = float(v @ base.coords)
        if abs(dot) > 1e-10 * max(1.0, float(np.linalg.norm(v))):
            raise ValueError("vector is not tangent at the base point")
        self.base = base
        self.vec = v - dot * base.coords

    @classmethod
    def _trusted(cls, base: Point, vec: np.ndarray) -> "TangentVector":
        # internal constructor for vectors already known to be tangent;
        # skips the projection so identities stay bitwise exact
        t = object.__new__(cls)
        t.base = base
        t.vec = vec
        return t

    def norm(self) -> float:
        return float(np.linalg.norm(self.vec))

    def __repr__(self) -> str:
        return f"TangentVector(base={self.base!r}, vec={np.array2string(self.vec, precision=6)})"


class MovingFrame:
    """A distinguished point with a full orthonormal tangent basis.

    ``basis`` holds d = D - 1 tangent vectors at ``p`` whose Gram matrix is
    the identity to 1e-10.  Transporting the basis to another point (see
    :func:`transport_frame`) yields the moving frame F(m) used to express
    tangent vectors and covariances in R^d coordinates.
    """

    __slots__ = ("p", "basis")

    def __init__(self, p: Point, basis: Sequence[TangentVector]):
        basis = tuple(basis)
        if len(basis) != p.dim - 1:
            raise ValueError(f"frame needs {p.dim - 1} basis vectors, got {len(basis)}")
        for b in basis:
            if np.max(np.abs(b.base.coords - p.coords)) > 1e-12:
                raise ValueError("basis vectors must all be based at the frame point")
        mat = np.array([b.vec for b in basis])
        gram = mat @ mat.T
        if np.max(np.abs(gram - np.eye(len(basis)))) > 1e-10:
            raise ValueError("frame basis is not orthonormal")
        self.p = p
        self.basis = basis

    @property
    def dim(self) -> int:
        """Fiber dimension d = D - 1."""
        return len(self.basis)

    @property
    def matrix(self) -> np.ndarray:
        """Basis vectors as rows of a d x D matrix."""
        return np.array([b.vec for b in self.basis])


def sphere_exp(p: Point, v: TangentVector) -> Point:
    """Exponential map: follow the geodesic from ``p`` with velocity ``v``."""
    if v.base.dim != p.dim or np.max(np.abs(v.base.coords - p.coords)) > 1e-12:
        raise ValueError("tangent vector is not based at p")
    theta = v.norm()
    if theta < 1e-14:
        return Point(p.coords)
    return Point(np.cos(theta) * p.coords + np.sin(theta) * (v.vec / theta))


def _angle_from_chords(c, chord, cochord):
    """Angle between unit vectors from their dot product and the norms of
    their difference and sum.

    Using 2*arcsin(chord/2) for acute pairs and pi - 2*arcsin(cochord/2)
    for obtuse ones keeps the result well conditioned at both ends; in
    particular bitwise-equal inputs give exactly zero.
    """
    acute = 2.0 * np.arcsin(np.clip(0.5 * chord, 0.0, 1.0))
    obtuse = np.pi - 2.0 * np.arcsin(np.clip(0.5 * cochord, 0.0, 1.0))
    return np.where(c >= 0.0, acute, obtuse)


def sphere_log(p: Point, q: Point) -> TangentVector:
    """Inverse of :func:`sphere_exp`: the initial velocity of the minimal
    geodesic from ``p`` to ``q``.

    Raises
    ------
    AntipodalPoint
        If ``q`` is within tolerance of the antipode of ``p``, where the
        log map is undefined.
    """
    c = float(np.clip(np.sum(p.coords * q.coords), -1.0, 1.0))
    if c <= -1.0 + ANTIPODE_TOL:
        raise AntipodalPoint("log map undefined at the antipode")
    theta = geodesic_distance(p, q)
    if theta == 0.0:
        return TangentVector(p, np.zeros(p.dim))
    u = q.coords - c * p.coords
    return TangentVector(p, (theta / float(_last_axis_norm(u))) * u)


def _last_axis_norm(A: np.ndarray) -> np.ndarray:
    """sqrt of the row-wise sum of squares, via the same reduction whether
    the input is a single vector or a stack, so scalar and batched callers
    produce bitwise-identical values."""
    return np.sqrt(np.sum(A * A, axis=-1))


def geodesic_distance(p: Point, q: Point) -> float:
    """Great-circle distance arccos(<p, q>) in [0, pi]."""
    c = float(np.sum(p.coords * q.coords))
    chord = float(_last_axis_norm(p.coords - q.coords))
    cochord = float(_last_axis_norm(p.coords + q.coords))
    return float(_angle_from_chords(c, chord, cochord))


def parallel_transport(v: TangentVector, q: Point) -> TangentVector:
    """Transport ``v`` along the minimal geodesic from its base point to ``q``.

    The component along the geodesic rotates within the geodesic plane; the
    orthogonal component is unchanged.  Transport is a linear isometry.
    """
    p = v.base
    if np.array_equal(p.coords, q.coords):
        return TangentVector._trusted(q, v.vec.copy())
    c = float(np.clip(p.coords @ q.coords, -1.0, 1.0))
    if c <= -1.0 + ANTIPODE_TOL:
        raise AntipodalPoint("parallel transport undefined to the antipode")
    # Levi-Civita transport along the minimal geodesic, closed form.
    w = v.vec - (float(v.vec @ q.coords) / (1.0 + c)) * (p.coords + q.coords)
    return TangentVector(q, w)


def frechet_mean(
    points: Sequence[Point],
    weights=None,
    tol: float = 1e-10,
    max_iter: int = 200,
) -> Point:
    """Weighted Frechet (Karcher) mean by fixed-point iteration.

    Starting from the normalized Euclidean mean, iterates
    m <- exp_m(sum_i w_i log_m(x_i)) until the tangent update norm drops
    below ``tol``.  Uniqueness is only guaranteed when the points lie in an
    open geodesic ball of radius < pi/2 around the initializer; this is not
    checked.

    Raises
    ------
    NoConvergence
        After ``max_iter`` iterations without meeting ``tol``.
    AntipodalPoint
        If an iterate becomes antipodal to a data point.
    """
    if len(points) == 0:
        raise ValueError("frechet_mean needs at least one point")
    X = np.array([pt.coords for pt in points])
    if weights is None:
        w = np.full(len(points), 1.0 / len(points))
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (len(points),) or np.any(w < -1e-12):
            raise ValueError("weights must be a nonnegative vector matching the points")
        s = float(w.sum())
        if s <= 0:
            raise ValueError("weights must not sum to zero")
        w = np.clip(w, 0.0, None) / s
    m0 = w @ X
    n0 = float(np.linalg.norm(m0))
    if n0 < 1e-12:
        raise ValueError("weighted Euclidean mean is zero; no stable initialization")
    m = Point(m0)
    for _ in range(max_iter):
        logs = log_batch(m.coords, X)
        t = w @ logs
        if float(np.linalg.norm(t)) < tol:
            return m
        m = sphere_exp(m, TangentVector(m, t))
    raise NoConvergence(f"Frechet mean did not converge in {max_iter} iterations")


def build_reference_frame(p: Point, rng_seed: int = 0, basis=None) -> MovingFrame:
    """Construct an orthonormal tangent frame at ``p``.

    With ``basis`` given (a d x D array or a sequence of tangent vectors),
    that basis is validated and used directly.  Otherwise d = D - 1 random
    ambient directions are projected to the tangent space and orthonormalized
    by PCA (eigenvectors of their Gram operator), deterministically for a
    given ``rng_seed``.  Eigenvector signs follow the first-nonzero-entry-
    positive convention.

    Raises
    ------
    DegenerateFrame
        If ten consecutive random draws are rank-deficient.
    """
    D = p.dim
    d = D - 1
    if basis is not None:
        vecs = [b if isinstance(b, TangentVector) else TangentVector(p, b) for b in basis]
        return MovingFrame(p, vecs)
    rng = np.random.default_rng(rng_seed)
    for _ in range(10):
        W = rng.standard_normal((d, D))
        W -= np.outer(W @ p.coords, p.coords)
        cov = W.T @ W
        evals, evecs = np.linalg.eigh(cov)
        order = np.argsort(evals)[::-1][:d]
        lam = evals[order]
        if lam[-1] <= 1e-10 * max(lam[0], 1e-30):
            continue
        B = evecs[:, order].T
        # eigenvectors of the projected Gram operator are tangent up to
        # rounding; re-project and fix the sign convention
        B -= np.outer(B @ p.coords, p.coords)
        B /= np.linalg.norm(B, axis=1, keepdims=True)
        for row in B:
            nz = np.flatnonzero(np.abs(row) > 1e-9)
            if nz.size and row[nz[0]] < 0:
                row *= -1.0
        return MovingFrame(p, [TangentVector(p, b) for b in B])
    raise DegenerateFrame("random tangent vectors were rank-deficient ten times")


def transport_frame(frame: MovingFrame, m: Point) -> MovingFrame:
    """Parallel-transport the frame basis to ``m``, giving F(m).

    Transport is an isometry, so the result is again a valid orthonormal
    frame, now based at ``m``.
    """
    rows = transport_batch(frame.matrix, frame.p.coords, m.coords)
    return MovingFrame(m, [TangentVector._trusted(m, r) for r in rows])


def tangent_coordinates(frame: MovingFrame, v: TangentVector) -> np.ndarray:
    """Coordinates (<v, f_j>)_j of ``v`` in the frame based at the same point."""
    if np.max(np.abs(frame.p.coords - v.base.coords)) > 1e-12:
        raise ValueError("tangent vector and frame are based at different points")
    return frame.matrix @ v.vec


def tangent_from_coordinates(frame: MovingFrame, c) -> TangentVector:
    """Inverse of :func:`tangent_coordinates`: rebuild sum_j c_j f_j."""
    c = np.asarray(c, dtype=float)
    if c.shape != (frame.dim,):
        raise ValueError(f"expected {frame.dim} coordinates, got shape {c.shape}")
    return TangentVector(frame.p, c @ frame.matrix)


def standard_frame(D: int) -> MovingFrame:
    """The frame at p = e_1 with basis (e_2, ..., e_D)."""
    p = Point(np.eye(D)[0])
    return MovingFrame(p, [TangentVector(p, np.eye(D)[j]) for j in range(1, D)])


# ---------------------------------------------------------------------------
# Batch kernels over coordinate arrays.  Rows are points / tangent vectors;
# used by the sampling and estimation pipelines where object-per-point
# wrappers would dominate runtime.

def exp_batch(m: np.ndarray, V: np.ndarray) -> np.ndarray:
    """exp_m applied to each row of the tangent array V (n x D)."""
    theta = np.linalg.norm(V, axis=1, keepdims=True)
    small = theta[:, 0] < 1e-14
    safe = np.where(theta < 1e-14, 1.0, theta)
    X = np.cos(theta) * m + np.sin(theta) * (V / safe)
    X[small] = m
    return X / np.linalg.norm(X, axis=1, keepdims=True)


def log_batch(m: np.ndarray, X: np.ndarray) -> np.ndarray:
    """log_m applied to each row of the point array X (n x D)."""
    c = np.clip(np.sum(X * m, axis=-1), -1.0, 1.0)
    if np.any(c <= -1.0 + ANTIPODE_TOL):
        raise AntipodalPoint("log map undefined at the antipode")
    theta = _angle_from_chords(c, _last_axis_norm(X - m), _last_axis_norm(X + m))
    U = X - c[:, None] * m
    un = _last_axis_norm(U)
    scale = np.where(un < 1e-14, 0.0, theta / np.where(un < 1e-14, 1.0, un))
    return scale[:, None] * U


def transport_batch(V: np.ndarray, p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Transport each row of V from T_p to T_q along the minimal geodesic."""
    if np.array_equal(p, q):
        return V.copy()
    c = float(np.clip(p @ q, -1.0, 1.0))
    if c <= -1.0 + ANTIPODE_TOL:
        raise AntipodalPoint("parallel transport undefined to the antipode")
    return V - np.outer((V @ q) / (1.0 + c), p + q)


def pairwise_geodesic(X: np.ndarray, Y: Optional[np.ndarray] = None) -> np.ndarray:
    """Geodesic distance matrix between rows of X and rows of Y (default X)."""
    if Y is None:
        Y = X
    c = np.sum(X[:, None, :] * Y[None, :, :], axis=-1)
    chord = _last_axis_norm(X[:, None, :] - Y[None, :, :])
    cochord = _last_axis_norm(X[:, None, :] + Y[None, :, :])
    return _angle_from_chords(c, chord, cochord)


# ---------------------------------------------------------------------------
# Serialization: frame.json = {"p": [...], "basis": [[...], ...]}

def frame_to_dict(frame: MovingFrame) -> dict:
    return {"p": frame.p.coords.tolist(), "basis": frame.matrix.tolist()}


def frame_from_dict(data: dict) -> MovingFrame:
    p = Point(data["p"])
    return build_reference_frame(p, basis=np.asarray(data["basis"], dtype=float))


def save_frame(path, frame: MovingFrame) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(frame_to_dict(frame), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_frame(path) -> MovingFrame:
    with open(path, encoding="utf-8") as fh:
        return frame_from_dict(json.load(fh))


def frames_equal(a: MovingFrame, b: MovingFrame, tol: float = 1e-8) -> bool:
    """Whether two frames have the same point and basis within ``tol``."""
    return (
        a.dim == b.dim
        and a.p.dim == b.p.dim
        and np.max(np.abs(a.p.coords - b.p.coords)) <= tol
        and np.max(np.abs(a.matrix - b.matrix)) <= tol
    )

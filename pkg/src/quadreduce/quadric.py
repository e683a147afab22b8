"""Plane-quadric algebra: construction, evaluation, placement, collapse cost.

A quadric stores the error form eval(x) = x^T A x - 2 b.x + c. Summing the
quadrics of several planes accumulates the total squared plane distance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._kernels import COND_LIMIT, PIVOT_REL_TOL


@dataclass
class Quadric:
    A: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    b: np.ndarray = field(default_factory=lambda: np.zeros(3))
    c: float = 0.0

    def __add__(self, other: "Quadric") -> "Quadric":
        return Quadric(self.A + other.A, self.b + other.b, self.c + other.c)

    def __iadd__(self, other: "Quadric") -> "Quadric":
        self.A += other.A
        self.b += other.b
        self.c += other.c
        return self

    def __mul__(self, w: float) -> "Quadric":
        return Quadric(self.A * w, self.b * w, self.c * w)

    __rmul__ = __mul__

    def eval(self, x) -> float:
        q = self.packed()
        return float(_kernels.eval_packed(q, float(x[0]), float(x[1]), float(x[2])))

    def packed(self) -> np.ndarray:
        """10-slot layout used by the compiled kernels."""
        A, b = self.A, self.b
        return np.array([A[0, 0], A[0, 1], A[0, 2], A[1, 1], A[1, 2], A[2, 2],
                         b[0], b[1], b[2], self.c])

    @classmethod
    def from_packed(cls, q) -> "Quadric":
        A = np.array([[q[0], q[1], q[2]],
                      [q[1], q[3], q[4]],
                      [q[2], q[4], q[5]]])
        return cls(A, np.array([q[6], q[7], q[8]]), float(q[9]))


def plane_quadric(p, n) -> Quadric:
    """Quadric of the plane through p with unit normal n, so that
    eval(x) = (n . (x - p))^2."""
    p = np.asarray(p, dtype=float)
    n = np.asarray(n, dtype=float)
    norm = np.linalg.norm(n)
    if abs(norm - 1.0) > 1e-6:
        raise ValueError(f"plane normal must be unit length, got |n| = {norm}")
    d = float(n @ p)
    return Quadric(np.outer(n, n), d * n, d * d)


def face_quadric(mesh, face_id: int) -> Quadric:
    """Area-weighted plane quadric of a face; zero for degenerate faces."""
    from .mesh import face_normal_area

    normal, area = face_normal_area(mesh, face_id)
    if area == 0.0:
        return Quadric()
    p = mesh.vertices[mesh.faces[face_id][0]]
    return plane_quadric(p, normal) * area


def optimal_position(q_sum: Quadric, e0, e1,
                     cond_limit: float = COND_LIMIT,
                     pivot_rel_tol: float = PIVOT_REL_TOL) -> np.ndarray:
    """Minimizer of the summed quadric.

    Solves the 3x3 normal equations; if they are rank deficient the best of
    {e0, e1, midpoint} is returned (ties resolve in that order)."""
    q = q_sum.packed()
    e0 = np.asarray(e0, dtype=float)
    e1 = np.asarray(e1, dtype=float)
    x, y, z, _ = _kernels.place_packed(
        q, e0[0], e0[1], e0[2], e1[0], e1[1], e1[2], cond_limit, pivot_rel_tol)
    return np.array([x, y, z])


def collapse_cost(q_e0: Quadric, q_e1: Quadric, e0, e1, v,
                  mode: str = "new") -> float:
    """Cost of merging an edge's endpoints at placement v.

    mode="original" is the summed-quadric error at v; mode="new" subtracts
    the residuals already present at the endpoints, measuring only the error
    the collapse would introduce (may be negative)."""
    if mode not in ("new", "original"):
        raise ValueError(f"unknown cost mode {mode!r}")
    total = (q_e0 + q_e1).eval(v)
    if mode == "new":
        total -= q_e0.eval(e0) + q_e1.eval(e1)
    return total

"""Per-vertex attributes: linear attribute functionals, capped joint
influences, and linear-blend-skinned posing.

Each scalar attribute channel accumulates least-squares blocks in the 15-slot
layout documented in _kernels; a channel's fitted value at a position p is
(sum(w g) . p + sum(w d)) / sum(w).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels

MAX_QUADRIC_INFLUENCES = 16
MAX_VERTEX_INFLUENCES = 4


@dataclass
class AttributeFunctional:
    """Linear field s(p) = g . p + d fitted over a polygon's corners."""
    g: np.ndarray
    d: float

    def eval(self, p) -> float:
        return float(self.g @ np.asarray(p, dtype=float) + self.d)


def fit_attribute_functional(points, values, face_normal) -> AttributeFunctional:
    """Least-squares fit of g, d over the corner samples, with an extra row
    forcing g to stay orthogonal to the face normal."""
    points = np.asarray(points, dtype=float)
    values = np.asarray(values, dtype=float)
    n = np.asarray(face_normal, dtype=float)
    if len(points) < 3:
        raise ValueError("need at least 3 sample points")
    if abs(np.linalg.norm(n) - 1.0) > 1e-6:
        raise ValueError("face normal must be unit length")
    rows = np.empty((len(points) + 1, 4))
    rows[:-1, :3] = points
    rows[:-1, 3] = 1.0
    rows[-1, :3] = n
    rows[-1, 3] = 0.0
    rhs = np.concatenate([values, [0.0]])
    sol, *_ = np.linalg.lstsq(rows, rhs, rcond=None)
    return AttributeFunctional(sol[:3], float(sol[3]))


def channel_block(func: AttributeFunctional, weight: float) -> np.ndarray:
    """15-slot accumulator for one weighted functional."""
    g, d = func.g, func.d
    out = np.empty(15)
    out[0] = weight * g[0] * g[0]
    out[1] = weight * g[0] * g[1]
    out[2] = weight * g[0] * g[2]
    out[3] = weight * g[1] * g[1]
    out[4] = weight * g[1] * g[2]
    out[5] = weight * g[2] * g[2]
    out[6:9] = weight * d * g
    out[9] = weight * d * d
    out[10:13] = weight * g
    out[13] = weight * d
    out[14] = weight
    return out


def channel_value(block, p) -> float:
    """Fitted channel value at p (the optimum of the accumulated residual)."""
    w = block[14]
    if w <= 0.0:
        return 0.0
    return float((block[10] * p[0] + block[11] * p[1] + block[12] * p[2]
                  + block[13]) / w)


def channel_residual(block, p) -> float:
    return float(_kernels.channel_residual(
        np.asarray(block, dtype=float), float(p[0]), float(p[1]), float(p[2])))


# -- joint influences --------------------------------------------------------


def merge_joint_functionals(q0_joints: dict, q1_joints: dict, p0, p1) -> dict:
    """Union of two sparse joint-functional maps, capped at 16 entries.

    While over the cap, the joint whose fitted influence is smallest at both
    endpoint positions (max over the two) is dropped; ties drop the larger
    joint id."""
    merged: dict[int, np.ndarray] = {}
    for src in (q0_joints, q1_joints):
        for jid, block in src.items():
            if jid in merged:
                merged[jid] = merged[jid] + block
            else:
                merged[jid] = block.copy()
    while len(merged) > MAX_QUADRIC_INFLUENCES:
        worst = min(
            merged,
            key=lambda j: (max(channel_value(merged[j], p0),
                               channel_value(merged[j], p1)), -j),
        )
        del merged[worst]
    return merged


def finalize_influences(functionals: dict, p) -> list:
    """Vertex influences from a joint-functional map: evaluate at p, clamp
    negatives, keep the top 4 (ties prefer smaller joint id), renormalize."""
    if not functionals:
        raise ValueError("no joint functionals to finalize")
    raw = [(jid, channel_value(block, p)) for jid, block in functionals.items()]
    clamped = sorted(((jid, max(v, 0.0)) for jid, v in raw),
                     key=lambda t: (-t[1], t[0]))
    top = clamped[:MAX_VERTEX_INFLUENCES]
    total = sum(v for _, v in top)
    if total <= 0.0:
        keep = sorted(raw, key=lambda t: (-t[1], t[0]))[:MAX_VERTEX_INFLUENCES]
        return [(jid, 1.0 / len(keep)) for jid, _ in keep]
    return [(jid, v / total) for jid, v in top if v > 0.0]


def normalize_influences(entries, tol: float = 1e-4):
    """Renormalize (joint, weight) entries to sum to 1; returns (entries,
    was_renormalized)."""
    total = sum(w for _, w in entries)
    if total <= 0.0:
        raise ValueError("influence weights sum to zero")
    if abs(total - 1.0) <= tol:
        return [(j, w) for j, w in entries], False
    return [(j, w / total) for j, w in entries], True


# -- attribute storage -------------------------------------------------------


@dataclass
class AttributeSet:
    """Per-vertex attribute arrays carried by a mesh. Any field may be None."""
    uv: Optional[np.ndarray] = None         # (nv, 2)
    normal: Optional[np.ndarray] = None     # (nv, 3)
    color: Optional[np.ndarray] = None      # (nv, 3)
    influences: Optional[list] = None       # per vertex: [(joint, weight), ...]

    _DENSE = (("uv", 2), ("normal", 3), ("color", 3))

    def copy(self) -> "AttributeSet":
        return AttributeSet(
            uv=None if self.uv is None else self.uv.copy(),
            normal=None if self.normal is None else self.normal.copy(),
            color=None if self.color is None else self.color.copy(),
            influences=None if self.influences is None
            else [list(e) for e in self.influences],
        )

    def subset(self, idx) -> "AttributeSet":
        return AttributeSet(
            uv=None if self.uv is None else self.uv[idx],
            normal=None if self.normal is None else self.normal[idx],
            color=None if self.color is None else self.color[idx],
            influences=None if self.influences is None
            else [list(self.influences[i]) for i in idx],
        )

    def dense_channels(self):
        """(name, component) pairs for every scalar channel present."""
        out = []
        for name, width in self._DENSE:
            if getattr(self, name) is not None:
                out.extend((name, k) for k in range(width))
        return out

    def channel_values(self, vertex: int):
        vals = []
        for name, width in self._DENSE:
            arr = getattr(self, name)
            if arr is not None:
                vals.extend(float(arr[vertex, k]) for k in range(width))
        return vals

    def write_merged(self, vertex: int, merged: dict):
        """Store engine-produced merged values at a surviving vertex."""
        if "dense" in merged:
            vals = merged["dense"]
            i = 0
            for name, width in self._DENSE:
                arr = getattr(self, name)
                if arr is not None:
                    arr[vertex] = vals[i:i + width]
                    i += width
        if "influences" in merged and self.influences is not None:
            self.influences[vertex] = list(merged["influences"])


# -- skinning ----------------------------------------------------------------


@dataclass
class SkeletonPose:
    """Per-joint transforms, already composed with the inverse bind."""
    matrices: np.ndarray  # (n_joints, 4, 4)

    @classmethod
    def identity(cls, n_joints: int) -> "SkeletonPose":
        return cls(np.tile(np.eye(4), (n_joints, 1, 1)))


def lbs_pose(mesh, pose: SkeletonPose) -> np.ndarray:
    """Linear-blend-skinned positions: v' = sum_k w_k M_k v."""
    attrs = mesh.attributes
    if attrs is None or attrs.influences is None:
        raise ValueError("mesh has no joint influences")
    n_joints = len(pose.matrices)
    out = np.zeros_like(mesh.vertices)
    hom = np.concatenate([mesh.vertices, np.ones((len(mesh.vertices), 1))], axis=1)
    for v, entries in enumerate(attrs.influences):
        acc = np.zeros(3)
        for jid, w in entries:
            if jid < 0 or jid >= n_joints:
                raise ValueError(f"vertex {v} references unknown joint {jid}")
            acc += w * (pose.matrices[jid] @ hom[v])[:3]
        out[v] = acc
    return out

"""Deterministic synthetic test meshes: subdivided cube, planar quad grid,
and a skinned cylinder with a bend animation.
"""

from __future__ import annotations

import math

import numpy as np

from .attributes import AttributeSet
from .mesh import Mesh, build_mesh
from .mesh_io import Skeleton, SkinSidecar


def subdivided_cube(n: int, side: float = 0.5) -> Mesh:
    """Watertight cube centered at the origin with each face split into
    n x n quads (6 n^2 faces, 6 (n+1)^2 - 12 (n+1) + 8 vertices).

    The default side of 0.5 keeps every edge's initial collapse cost inside
    one eps_abs band at the engine's default settings, so recency ordering
    (not float noise) decides the collapse order."""
    if n < 1:
        raise ValueError("subdivision count must be >= 1")
    verts: list = []
    index: dict = {}

    def vid(x, y, z):
        key = (round(x * n), round(y * n), round(z * n))
        i = index.get(key)
        if i is None:
            i = len(verts)
            index[key] = i
            verts.append((x, y, z))
        return i

    faces = []
    # (origin, u axis, v axis) per side, u x v pointing outward
    sides = [
        ((0, 0, 0), (0, 1, 0), (1, 0, 0)),  # z = 0, normal -z
        ((0, 0, 1), (1, 0, 0), (0, 1, 0)),  # z = 1, normal +z
        ((0, 0, 0), (1, 0, 0), (0, 0, 1)),  # y = 0, normal -y
        ((0, 1, 0), (0, 0, 1), (1, 0, 0)),  # y = 1, normal +y
        ((0, 0, 0), (0, 0, 1), (0, 1, 0)),  # x = 0, normal -x
        ((1, 0, 0), (0, 1, 0), (0, 0, 1)),  # x = 1, normal +x
    ]
    for origin, ua, va in sides:
        o = np.array(origin, dtype=float)
        u = np.array(ua, dtype=float) / n
        v = np.array(va, dtype=float) / n
        for i in range(n):
            for j in range(n):
                p00 = o + i * u + j * v
                p10 = p00 + u
                p11 = p00 + u + v
                p01 = p00 + v
                faces.append(tuple(vid(*p) for p in (p00, p10, p11, p01)))
    pts = (np.array(verts, dtype=float) - 0.5) * side
    return build_mesh(pts, faces)


def grid(w: int, h: int) -> Mesh:
    """Planar w x h quad grid in z = 0 with unit cells."""
    if w < 1 or h < 1:
        raise ValueError("grid dimensions must be >= 1")
    verts = [(i, j, 0.0) for j in range(h + 1) for i in range(w + 1)]
    faces = []
    stride = w + 1
    for j in range(h):
        for i in range(w):
            a = j * stride + i
            faces.append((a, a + 1, a + 1 + stride, a + stride))
    return build_mesh(np.array(verts, dtype=float), faces)


def _bend_frames(n_joints: int, pivot_z: float, n_frames: int, max_angle: float):
    """World transforms bending every joint past the first around the x axis
    at the pivot, ramping from 0 to max_angle."""
    frames = np.tile(np.eye(4), (n_frames, n_joints, 1, 1))
    for f in range(n_frames):
        theta = max_angle * f / max(n_frames - 1, 1)
        c, s = math.cos(theta), math.sin(theta)
        rot = np.eye(4)
        rot[1, 1], rot[1, 2] = c, -s
        rot[2, 1], rot[2, 2] = s, c
        to_piv = np.eye(4)
        to_piv[2, 3] = -pivot_z
        back = np.eye(4)
        back[2, 3] = pivot_z
        m = back @ rot @ to_piv
        for j in range(1, n_joints):
            frames[f, j] = m
    return frames


def skinned_cylinder(segments: int, rings: int, bones: int,
                     radius: float = 0.25, height: float = 1.0,
                     bend_frames: int = 50, blend: float = 0.25):
    """Open cylinder along +z split into evenly sized bone segments, with
    weights blending linearly across a window of `blend` times the segment
    length around each joint pivot. Returns (mesh, sidecar); the sidecar
    carries a "bend" animation ramping to a 90-degree bend over bend_frames
    frames."""
    if segments < 3 or rings < 1 or bones < 1:
        raise ValueError("need segments >= 3, rings >= 1, bones >= 1")
    verts = []
    for r in range(rings + 1):
        z = height * r / rings
        for s in range(segments):
            a = 2.0 * math.pi * s / segments
            verts.append((radius * math.cos(a), radius * math.sin(a), z))
    faces = []
    for r in range(rings):
        base = r * segments
        nxt = (r + 1) * segments
        for s in range(segments):
            s1 = (s + 1) % segments
            faces.append((base + s, base + s1, nxt + s1, nxt + s))
    positions = np.array(verts, dtype=float)

    seg_len = height / bones
    half = 0.5 * blend * seg_len
    influences = []
    for p in positions:
        z = p[2]
        k = min(int(z / seg_len), bones - 1)
        entry = [(k, 1.0)]
        if half > 0.0:
            for pivot_k in (k, k + 1):
                pivot = pivot_k * seg_len
                if 0 < pivot_k < bones and abs(z - pivot) < half:
                    t = (z - (pivot - half)) / (2.0 * half)
                    if 0.0 < t < 1.0:
                        entry = [(pivot_k - 1, 1.0 - t), (pivot_k, t)]
                    break
        influences.append(entry)

    skeleton = Skeleton(
        names=[f"bone{k}" for k in range(bones)],
        parents=[-1] + list(range(bones - 1)),
        inverse_bind=np.tile(np.eye(4), (bones, 1, 1)),
    )
    poses = {}
    if bones > 1:
        pivot = height * 1.0 / bones  # boundary under the second bone
        poses["bend"] = _bend_frames(bones, pivot, bend_frames, math.pi / 2.0)
    sidecar = SkinSidecar(skeleton, influences, poses)
    mesh = build_mesh(positions, faces,
                      AttributeSet(influences=[list(e) for e in influences]))
    return mesh, sidecar


def synth_mesh(kind: str, params):
    """Dispatch by kind: "subdivided_cube" (n), "grid" (w, h),
    "skinned_cylinder" (segments, rings, bones). The cylinder returns
    (mesh, sidecar); the others (mesh, None)."""
    kind = kind.replace("-", "_")
    if kind == "subdivided_cube":
        return subdivided_cube(int(params[0])), None
    if kind == "grid":
        return grid(int(params[0]), int(params[1])), None
    if kind == "skinned_cylinder":
        return skinned_cylinder(int(params[0]), int(params[1]), int(params[2]))
    raise ValueError(f"unknown synthetic mesh kind {kind!r}")

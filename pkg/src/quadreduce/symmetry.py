"""Per-edge extrinsic symmetry weights.

Every edge defines a candidate mirror plane (spanning the edge and the
halfway vector of its adjacent face normals); the weight is the fraction of
mesh vertices that match themselves or a partner across that plane.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import Mesh, face_normal_area


@dataclass
class SymmetryConfig:
    delta: float
    enabled: bool = True


def default_delta(mesh: Mesh) -> float:
    """1e-3 of the bounding-box diagonal of the live vertices."""
    pts = mesh.vertices[mesh.vertex_alive]
    if len(pts) == 0:
        return 1e-3
    diag = float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))
    return 1e-3 * diag if diag > 0.0 else 1e-3


def edge_symmetry_plane(mesh: Mesh, edge):
    """Mirror plane (point, unit normal) for an edge, or None.

    Manifold edges mirror across the plane spanned by the edge and the
    halfway vector of the two face normals; boundary edges use the single
    face normal; non-manifold edges have no plane."""
    fids = mesh.edge_map.get(edge)
    if fids is None:
        raise KeyError(f"unknown edge {edge}")
    e0, e1 = edge
    d = mesh.vertices[e1] - mesh.vertices[e0]
    ln = np.linalg.norm(d)
    if ln <= 0.0:
        return None
    d = d / ln
    if len(fids) == 2:
        n0, a0 = face_normal_area(mesh, fids[0])
        n1, a1 = face_normal_area(mesh, fids[1])
        if a0 == 0.0 or a1 == 0.0:
            return None
        h = n0 + n1
        hn = np.linalg.norm(h)
        if hn <= 1e-9:
            return None  # opposite normals: halfway vector vanishes
        n = np.cross(h / hn, d)
    elif len(fids) == 1:
        fn, area = face_normal_area(mesh, fids[0])
        if area == 0.0:
            return None
        n = np.cross(fn, d)
    else:
        return None  # non-manifold
    nn = np.linalg.norm(n)
    if nn <= 1e-12:
        return None
    return mesh.vertices[e0].copy(), n / nn


def _local_coords(mesh: Mesh, edge, plane):
    """Vertex coordinates in the edge frame: x = signed plane distance,
    y = along the edge, z = the remaining axis."""
    origin, nx = plane
    e0, e1 = edge
    d = mesh.vertices[e1] - mesh.vertices[e0]
    d = d / np.linalg.norm(d)
    z = np.cross(nx, d)
    frame = np.stack([nx, d, z], axis=1)
    pts = mesh.vertices[mesh.vertex_alive]
    return (pts - origin) @ frame


def _greedy_match_count(local: np.ndarray, delta: float) -> int:
    """Greedy mirror matching per the edge-weights algorithm: vertices in
    the plane band self-match; the rest are processed by decreasing plane
    distance and matched to the first remaining vertex within delta of
    their mirror image."""
    x = np.abs(local[:, 0])
    in_band = x < delta
    matched = int(np.count_nonzero(in_band))
    rest = local[~in_band]
    if len(rest) == 0:
        return matched
    order = np.argsort(np.abs(rest[:, 0]), kind="stable")
    rest = rest[order]
    ax = np.abs(rest[:, 0])
    alive = np.ones(len(rest), dtype=bool)
    d2 = delta * delta
    for i in range(len(rest) - 1, -1, -1):
        if not alive[i]:
            continue
        alive[i] = False
        mx = -rest[i, 0]
        my = rest[i, 1]
        mz = rest[i, 2]
        # candidates must sit within delta of the popped distance band
        lo = np.searchsorted(ax, ax[i] - delta, side="left")
        for j in range(lo, len(rest)):
            if not alive[j]:
                continue
            dx = rest[j, 0] - mx
            dy = rest[j, 1] - my
            dz = rest[j, 2] - mz
            if dx * dx + dy * dy + dz * dz < d2:
                alive[j] = False
                matched += 2
                break
    return matched


def symmetry_weight(mesh: Mesh, edge, delta: float) -> float:
    """Fraction of vertices with a mirror partner across the edge plane."""
    plane = edge_symmetry_plane(mesh, edge)
    if plane is None:
        return 0.0
    local = _local_coords(mesh, edge, plane)
    total = len(local)
    if total == 0:
        return 0.0
    return _greedy_match_count(local, delta) / total


def symmetry_weight_brute_force(mesh: Mesh, edge, delta: float) -> float:
    """Oracle: exact maximum matching instead of the greedy pass.

    O(V^2) edges plus augmenting-path matching; intended for tests."""
    plane = edge_symmetry_plane(mesh, edge)
    if plane is None:
        return 0.0
    local = _local_coords(mesh, edge, plane)
    total = len(local)
    if total == 0:
        return 0.0
    x = np.abs(local[:, 0])
    in_band = x < delta
    matched = int(np.count_nonzero(in_band))
    rest = local[~in_band]
    pos = [i for i in range(len(rest)) if rest[i, 0] > 0]
    neg = [i for i in range(len(rest)) if rest[i, 0] <= 0]
    mirror = rest.copy()
    mirror[:, 0] = -mirror[:, 0]
    adj = {
        i: [j for j in neg if np.linalg.norm(rest[j] - mirror[i]) < delta]
        for i in pos
    }
    match_of = {}

    def augment(u, seen):
        for v in adj[u]:
            if v in seen:
                continue
            seen.add(v)
            if v not in match_of or augment(match_of[v], seen):
                match_of[v] = u
                return True
        return False

    pairs = 0
    for u in pos:
        if augment(u, set()):
            pairs += 1
    return (matched + 2 * pairs) / total


def all_symmetry_weights(mesh: Mesh, delta: float) -> dict:
    """symmetry_weight for every unique edge, iterated in sorted order."""
    return {e: symmetry_weight(mesh, e, delta) for e in sorted(mesh.edge_map)}

"""Per-edge quadric weighting: dihedral angle, joint-influence distance,
symmetry, and the combined weight with its degeneracy floor.

Each edge contributes tangent-space plane quadrics to both of its endpoint
quadrics, scaled by the combined weight times the edge length.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .mesh import Mesh, face_normal_area
from .quadric import plane_quadric

log = logging.getLogger(__name__)

WEIGHT_FLOOR = 1e-2


@dataclass
class EdgeWeightInputs:
    dihedral_w: float = 0.0
    sym_s: float = 0.0
    joint_d: float = 0.0
    lambda_sym: float = 0.0
    lambda_joint: float = 0.0


def dihedral_weight(mesh: Mesh, edge) -> float:
    """Angle between the two incident face normals, normalized to [0, 1];
    non-manifold (including boundary) edges weigh 1."""
    fids = mesh.edge_map.get(edge, [])
    if len(fids) != 2:
        return 1.0
    n0, a0 = face_normal_area(mesh, fids[0])
    n1, a1 = face_normal_area(mesh, fids[1])
    d = float(np.clip(n0 @ n1, -1.0, 1.0))
    return math.acos(d) / math.pi


def joint_distance(j0, j1) -> float:
    """Half the l1 distance between two joint-influence distributions,
    taken over the union of joint ids."""
    d0 = dict(j0)
    d1 = dict(j1)
    total = 0.0
    for k in d0.keys() | d1.keys():
        total += abs(d0.get(k, 0.0) - d1.get(k, 0.0))
    return 0.5 * total


def combined_weight(inputs: EdgeWeightInputs) -> float:
    """max of the symmetry, joint and dihedral terms, floored at 1e-2 to
    keep the edge quadrics non-degenerate."""
    return max(inputs.lambda_sym * inputs.sym_s,
               inputs.lambda_joint * inputs.joint_d,
               inputs.dihedral_w,
               WEIGHT_FLOOR)


def edge_tangent_planes(mesh: Mesh, edge):
    """Unit normals of the tangent-space planes for an edge, one per
    incident face: perpendicular to the edge, in each face's plane."""
    e0, e1 = edge
    p0 = mesh.vertices[e0]
    p1 = mesh.vertices[e1]
    d = p1 - p0
    length = np.linalg.norm(d)
    if length <= 0.0:
        return []
    d = d / length
    normals = []
    for fid in mesh.edge_map[edge]:
        fn, area = face_normal_area(mesh, fid)
        if area == 0.0:
            continue
        n = np.cross(d, fn)
        ln = np.linalg.norm(n)
        if ln <= 1e-12:
            continue
        normals.append(n / ln)
    return normals


def accumulate_edge_quadrics(mesh: Mesh, edge, w: float, quadrics,
                             style: str = "per-face"):
    """Add the weighted tangent planes of `edge` to both endpoint entries of
    `quadrics` (a vertex-indexed list of Quadric).

    style="per-face" adds one plane per incident face; style="averaged" adds
    a single plane built from the mean incident normal."""
    e0, e1 = edge
    length = float(np.linalg.norm(mesh.vertices[e1] - mesh.vertices[e0]))
    if length <= 0.0:
        log.warning("skipping zero-length edge %s", edge)
        return
    normals = edge_tangent_planes(mesh, edge)
    if style == "averaged" and normals:
        mean = np.mean(normals, axis=0)
        ln = np.linalg.norm(mean)
        normals = [mean / ln] if ln > 1e-12 else []
    for n in normals:
        q = plane_quadric(mesh.vertices[e0], n) * (w * length)
        quadrics[e0] += q
        quadrics[e1] += q


def batch_edge_weights(mesh: Mesh, config, normals=None) -> dict:
    """Combined weight for every unique edge, in sorted edge order.

    config.edge_weight_mode "none" and "uniform" fix the weight to 0 or 1;
    "dihedral" applies the full combined rule. Symmetry weights are computed
    on demand when lambda_sym > 0; face normals may be passed in to avoid
    recomputation."""
    mode = config.edge_weight_mode
    edges = sorted(mesh.edge_map)
    if mode == "none":
        return {e: 0.0 for e in edges}
    if mode == "uniform":
        return {e: 1.0 for e in edges}
    if mode != "dihedral":
        raise ValueError(f"unknown edge_weight_mode {mode!r}")

    if normals is None:
        from .mesh import all_face_normals_areas
        normals, _ = all_face_normals_areas(mesh)
    ne = len(edges)
    counts = np.fromiter((len(mesh.edge_map[e]) for e in edges),
                         dtype=np.int64, count=ne)
    manifold = counts == 2
    base = np.ones(ne)
    if manifold.any():
        pairs = np.fromiter(
            (f for e, c in zip(edges, counts) if c == 2
             for f in mesh.edge_map[e]),
            dtype=np.int64, count=int(2 * manifold.sum())).reshape(-1, 2)
        n0 = normals[pairs[:, 0]]
        n1 = normals[pairs[:, 1]]
        dots = np.clip(np.einsum("ij,ij->i", n0, n1), -1.0, 1.0)
        base[manifold] = np.arccos(dots) / math.pi

    sym = {}
    if config.lambda_sym > 0.0:
        from .symmetry import all_symmetry_weights, default_delta
        delta = config.sym_delta if config.sym_delta else default_delta(mesh)
        sym = all_symmetry_weights(mesh, delta)

    influences = None
    if config.lambda_joint > 0.0 and mesh.attributes is not None:
        influences = mesh.attributes.influences

    out = {}
    for i, e in enumerate(edges):
        w = base[i]
        if sym:
            w = max(w, config.lambda_sym * sym.get(e, 0.0))
        if influences is not None:
            w = max(w, config.lambda_joint
                    * joint_distance(influences[e[0]], influences[e[1]]))
        out[e] = max(w, WEIGHT_FLOOR)
    return out

"""Hybrid triangle/quad mesh: polygon-soup storage, derived adjacency, and
the topological edge-collapse operation.

Faces are index tuples of arity 3 or 4. Adjacency (edge map, per-vertex face
and neighbor sets) is maintained incrementally through collapses; non-manifold
edges are allowed and simply carry more than two incident faces.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels

log = logging.getLogger(__name__)

EdgeKey = tuple  # (lo, hi) with lo < hi


class MeshError(ValueError):
    """Invalid mesh construction or collapse request."""


def edge_key(u: int, v: int) -> EdgeKey:
    return (u, v) if u < v else (v, u)


def face_edges(face):
    n = len(face)
    return [edge_key(face[i], face[(i + 1) % n]) for i in range(n)]


@dataclass
class CollapseOutcome:
    removed_faces: list = field(default_factory=list)
    retargeted_faces: list = field(default_factory=list)  # quads now triangles
    surviving_vertex: int = -1
    removed_vertex: int = -1


class Mesh:
    def __init__(self, vertices: np.ndarray, faces: list, attributes=None):
        self.vertices = vertices          # (nv, 3) float64, mutated in place
        self.faces: list[Optional[tuple]] = faces  # None = removed
        self.attributes = attributes
        self.edge_map: dict[EdgeKey, list[int]] = {}
        self.vertex_faces: list[set] = [set() for _ in range(len(vertices))]
        self.vertex_neighbors: list[set] = [set() for _ in range(len(vertices))]
        self.vertex_alive = np.zeros(len(vertices), dtype=bool)
        self.n_quads = 0
        self.n_tris = 0
        self._build_adjacency()

    # -- construction ------------------------------------------------------

    def _build_adjacency(self):
        nv = len(self.vertices)
        for fid, face in enumerate(self.faces):
            if face is None:
                continue
            if len(face) == 4:
                self.n_quads += 1
            else:
                self.n_tris += 1
            for v in face:
                self.vertex_faces[v].add(fid)
                self.vertex_alive[v] = True
            for e in face_edges(face):
                self.edge_map.setdefault(e, []).append(fid)
                self.vertex_neighbors[e[0]].add(e[1])
                self.vertex_neighbors[e[1]].add(e[0])

    @property
    def live_faces(self):
        return [f for f in self.faces if f is not None]

    def face_count(self):
        return self.n_quads + self.n_tris

    def non_manifold_edges(self):
        return {e for e, fs in self.edge_map.items() if len(fs) > 2}

    def copy(self) -> "Mesh":
        m = Mesh.__new__(Mesh)
        m.vertices = self.vertices.copy()
        m.faces = list(self.faces)
        m.attributes = self.attributes.copy() if self.attributes is not None else None
        m.edge_map = {e: list(fs) for e, fs in self.edge_map.items()}
        m.vertex_faces = [set(s) for s in self.vertex_faces]
        m.vertex_neighbors = [set(s) for s in self.vertex_neighbors]
        m.vertex_alive = self.vertex_alive.copy()
        m.n_quads = self.n_quads
        m.n_tris = self.n_tris
        return m

    # -- queries -----------------------------------------------------------

    def adjacency_matches_faces(self) -> bool:
        """Debug check: rebuilding adjacency from faces reproduces the
        incrementally maintained structures."""
        fresh = Mesh(self.vertices, list(self.faces))
        return (
            {e: sorted(fs) for e, fs in fresh.edge_map.items()}
            == {e: sorted(fs) for e, fs in self.edge_map.items()}
            and fresh.vertex_faces == self.vertex_faces
            and fresh.vertex_neighbors == self.vertex_neighbors
            and fresh.n_quads == self.n_quads
            and fresh.n_tris == self.n_tris
        )


def build_mesh(positions, faces, attributes=None) -> Mesh:
    positions = np.ascontiguousarray(np.asarray(positions, dtype=np.float64))
    if positions.ndim != 2 or positions.shape[1] != 3:
        raise MeshError(f"positions must be (n, 3), got {positions.shape}")
    nv = len(positions)
    clean = []
    for i, face in enumerate(faces):
        face = tuple(int(v) for v in face)
        if len(face) not in (3, 4):
            raise MeshError(f"face {i} has arity {len(face)}; only 3 or 4 supported")
        if len(set(face)) != len(face):
            raise MeshError(f"face {i} repeats a vertex: {face}")
        for v in face:
            if v < 0 or v >= nv:
                raise MeshError(f"face {i} references out-of-range vertex {v}")
        clean.append(face)
    mesh = Mesh(positions, clean, attributes)
    bad = mesh.non_manifold_edges()
    if bad:
        log.info("mesh has %d non-manifold edges", len(bad))
    return mesh


def face_normal_area(mesh: Mesh, face_id: int):
    """Newell normal (unit) and fan-triangulated area of a face.

    Degenerate faces return a zero normal and area 0."""
    face = mesh.faces[face_id]
    if face is None:
        raise MeshError(f"face {face_id} was removed")
    pts = mesh.vertices
    ids = np.array(face, dtype=np.int64)
    nx, ny, nz = _kernels.newell_normal(pts, ids, len(face), -1, 0.0, 0.0, 0.0)
    n = np.array([nx, ny, nz])
    norm = np.linalg.norm(n)
    area = 0.0
    p0 = pts[face[0]]
    for i in range(1, len(face) - 1):
        area += 0.5 * np.linalg.norm(
            np.cross(pts[face[i]] - p0, pts[face[i + 1]] - p0))
    if norm <= 1e-300 or area == 0.0:
        return np.zeros(3), 0.0
    return n / norm, float(area)


def all_face_normals_areas(mesh: Mesh):
    """Vectorized normals/areas for every face slot (removed faces get
    zeros). Normals are Newell, areas fan-triangulated."""
    nf = len(mesh.faces)
    normals = np.zeros((nf, 3))
    areas = np.zeros(nf)
    tri_ids, quad_ids = [], []
    for fid, f in enumerate(mesh.faces):
        if f is None:
            continue
        (tri_ids if len(f) == 3 else quad_ids).append(fid)
    pts = mesh.vertices
    if tri_ids:
        f = np.array([mesh.faces[i] for i in tri_ids], dtype=np.int64)
        a, b, c = pts[f[:, 0]], pts[f[:, 1]], pts[f[:, 2]]
        n = np.cross(b - a, c - a)
        ln = np.linalg.norm(n, axis=1)
        areas[tri_ids] = 0.5 * ln
        ok = ln > 1e-300
        n[ok] /= ln[ok][:, None]
        n[~ok] = 0.0
        normals[tri_ids] = n
    if quad_ids:
        f = np.array([mesh.faces[i] for i in quad_ids], dtype=np.int64)
        p = pts[f]  # (nq, 4, 3)
        nvec = np.zeros((len(quad_ids), 3))
        for i in range(4):
            va = p[:, i]
            vb = p[:, (i + 1) % 4]
            nvec[:, 0] += (va[:, 1] - vb[:, 1]) * (va[:, 2] + vb[:, 2])
            nvec[:, 1] += (va[:, 2] - vb[:, 2]) * (va[:, 0] + vb[:, 0])
            nvec[:, 2] += (va[:, 0] - vb[:, 0]) * (va[:, 1] + vb[:, 1])
        ar = (0.5 * np.linalg.norm(np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), axis=1)
              + 0.5 * np.linalg.norm(np.cross(p[:, 2] - p[:, 0], p[:, 3] - p[:, 0]), axis=1))
        ln = np.linalg.norm(nvec, axis=1)
        ok = (ln > 1e-300) & (ar > 0.0)
        nvec[ok] /= ln[ok][:, None]
        nvec[~ok] = 0.0
        ar[~ok] = 0.0
        areas[quad_ids] = ar
        normals[quad_ids] = nvec
    return normals, areas


def opposing_edges(mesh: Mesh, edge: EdgeKey):
    """Edges across the quads containing `edge` (the two vertices it does
    not touch). Triangles contribute nothing."""
    if edge not in mesh.edge_map:
        raise MeshError(f"unknown edge {edge}")
    out = []
    for fid in mesh.edge_map[edge]:
        face = mesh.faces[fid]
        if face is None or len(face) != 4:
            continue
        others = [v for v in face if v != edge[0] and v != edge[1]]
        if len(others) == 2:
            out.append(edge_key(others[0], others[1]))
    return out


def total_triangle_count(mesh: Mesh) -> int:
    """Triangle count of the triangulated mesh: 2 * quads + tris."""
    return 2 * mesh.n_quads + mesh.n_tris


# -- collapse ----------------------------------------------------------------


def _merged_tuple(face, a, b):
    """Face tuple after b is replaced by a, removing collapsed duplicates.
    Returns None when fewer than 3 distinct vertices remain."""
    sub = [a if v == b else v for v in face]
    out = []
    for v in sub:
        if not out or v != out[-1]:
            out.append(v)
    if len(out) > 1 and out[0] == out[-1]:
        out.pop()
    if len(set(out)) != len(out):
        # duplicate across non-adjacent corners: drop the second occurrence
        seen, dedup = set(), []
        for v in out:
            if v not in seen:
                seen.add(v)
                dedup.append(v)
        out = dedup
    if len(out) < 3:
        return None
    return tuple(out)


def collapse_is_valid(mesh: Mesh, edge: EdgeKey, new_position) -> bool:
    """Checks the collapse against the link condition, face-orientation
    preservation, and duplicate-vertex creation."""
    a, b = edge
    edge_faces = mesh.edge_map.get(edge)
    if edge_faces is None:
        return False
    if not (math.isfinite(new_position[0]) and math.isfinite(new_position[1])
            and math.isfinite(new_position[2])):
        return False

    # link condition: a vertex adjacent to both endpoints must lie on a face
    # of the edge itself
    common = mesh.vertex_neighbors[a] & mesh.vertex_neighbors[b]
    for v in common:
        if not any(v in mesh.faces[f] for f in edge_faces):
            return False

    # no face may end up referencing a vertex twice; a face holding both
    # endpoints without the edge (quad diagonal) would do exactly that
    ring = mesh.vertex_faces[a] | mesh.vertex_faces[b]
    ef = set(edge_faces)
    for fid in ring - ef:
        face = mesh.faces[fid]
        if a in face and b in face:
            return False

    # orientation: every surviving face keeps its normal direction
    before_flat, after_flat = [], []
    before_counts, after_counts = [], []
    k = 0
    for fid in ring:
        face = mesh.faces[fid]
        if fid in ef:
            if len(face) == 3:
                continue  # removed outright
            new = _merged_tuple(face, a, b)
            if new is None:
                continue
        elif b in face:
            new = tuple(a if v == b else v for v in face)
        else:
            new = face
        before_flat.extend(face)
        if len(face) == 3:
            before_flat.append(-1)
        before_counts.append(len(face))
        after_flat.extend(new)
        if len(new) == 3:
            after_flat.append(-1)
        after_counts.append(len(new))
        k += 1
    if k == 0:
        return True
    before_ids = np.array(before_flat, dtype=np.int64).reshape(k, 4)
    after_ids = np.array(after_flat, dtype=np.int64).reshape(k, 4)
    x, y, z = float(new_position[0]), float(new_position[1]), float(new_position[2])
    return bool(_kernels.flip_check(
        mesh.vertices, before_ids, np.array(before_counts, dtype=np.int64),
        after_ids, np.array(after_counts, dtype=np.int64), k, a, x, y, z))


def collapse_edge(mesh: Mesh, edge: EdgeKey, new_position,
                  merged_attributes=None, validate: bool = True) -> CollapseOutcome:
    """Merge the edge endpoints into the lower-id vertex at new_position.

    Triangles on the edge are removed; quads on the edge drop to triangles;
    any other face that would repeat a vertex is repaired (quad -> triangle)
    or removed (triangle). Adjacency is updated in place."""
    if validate and not collapse_is_valid(mesh, edge, new_position):
        raise MeshError(f"invalid collapse attempted on edge {edge}")
    a, b = edge
    outcome = CollapseOutcome(surviving_vertex=a, removed_vertex=b)

    faces = mesh.faces
    edge_map = mesh.edge_map
    vertex_faces = mesh.vertex_faces
    neighbors = mesh.vertex_neighbors
    touched = list(vertex_faces[b])

    def _unregister(e, fid):
        fs = edge_map[e]
        fs.remove(fid)
        if not fs:
            del edge_map[e]
            neighbors[e[0]].discard(e[1])
            neighbors[e[1]].discard(e[0])

    def _register(e, fid):
        lst = edge_map.get(e)
        if lst is None:
            edge_map[e] = [fid]
            neighbors[e[0]].add(e[1])
            neighbors[e[1]].add(e[0])
        else:
            lst.append(fid)

    for fid in touched:
        old = faces[fid]
        n = len(old)
        was_quad = n == 4
        if a in old:
            new = _merged_tuple(old, a, b)
        else:
            new = tuple(a if v == b else v for v in old)
        if new is None:
            faces[fid] = None
            outcome.removed_faces.append(fid)
            if was_quad:
                mesh.n_quads -= 1
            else:
                mesh.n_tris -= 1
            for i in range(n):
                u = old[i]
                v = old[i + 1] if i + 1 < n else old[0]
                _unregister((u, v) if u < v else (v, u), fid)
            for v in old:
                if v != b:
                    vertex_faces[v].discard(fid)
            continue
        if was_quad and len(new) == 3:
            mesh.n_quads -= 1
            mesh.n_tris += 1
            outcome.retargeted_faces.append(fid)
        faces[fid] = new
        in_old = a in old
        if in_old and b not in (old[old.index(a) - 1],
                                old[(old.index(a) + 1) % n]):
            # repaired diagonal duplicate: edge set changes arbitrarily,
            # rebuild this face's registrations outright
            for i in range(n):
                u = old[i]
                v = old[i + 1] if i + 1 < n else old[0]
                _unregister((u, v) if u < v else (v, u), fid)
            m = len(new)
            for i in range(m):
                u = new[i]
                v = new[i + 1] if i + 1 < m else new[0]
                _register((u, v) if u < v else (v, u), fid)
            for v in old:
                if v != b:
                    vertex_faces[v].discard(fid)
            for v in new:
                vertex_faces[v].add(fid)
            continue
        # common cases: only edges touching the removed vertex change keys;
        # the survivor's preexisting edges in this face keep registrations
        bi = old.index(b)
        for u in (old[bi - 1], old[(bi + 1) % n]):
            _unregister((u, b) if u < b else (b, u), fid)
        m = len(new)
        ai = new.index(a)
        if in_old:
            aio = old.index(a)
            old_a_partners = (old[aio - 1], old[(aio + 1) % n])
        else:
            old_a_partners = ()
        for u in (new[ai - 1], new[(ai + 1) % m]):
            if u not in old_a_partners:
                _register((u, a) if u < a else (a, u), fid)
        # only b can lose membership in a surviving face; its set is cleared below
        vertex_faces[a].add(fid)

    mesh.vertices[a] = new_position
    mesh.vertex_alive[b] = False
    mesh.vertex_faces[b] = set()
    mesh.vertex_neighbors[b] = set()
    if not mesh.vertex_faces[a]:
        mesh.vertex_alive[a] = False
    if mesh.attributes is not None and merged_attributes is not None:
        mesh.attributes.write_merged(a, merged_attributes)
    return outcome


def compact(mesh: Mesh):
    """New mesh without dead vertices; returns (mesh, old_to_new index map)."""
    alive = np.flatnonzero(mesh.vertex_alive)
    remap = -np.ones(len(mesh.vertices), dtype=np.int64)
    remap[alive] = np.arange(len(alive))
    faces = [tuple(int(remap[v]) for v in f) for f in mesh.faces if f is not None]
    attrs = None
    if mesh.attributes is not None:
        attrs = mesh.attributes.subset(alive)
    return build_mesh(mesh.vertices[alive], faces, attrs), remap

"""Mesh and skinning persistence: Wavefront OBJ (quads preserved) and a
JSON skinning sidecar carrying joints, per-vertex influences, and named
pose animations.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .attributes import AttributeSet, SkeletonPose, normalize_influences
from .mesh import Mesh, build_mesh

log = logging.getLogger(__name__)

SIDECAR_VERSION = "1"


class MeshIOError(ValueError):
    """Malformed mesh or sidecar input."""


# -- OBJ ----------------------------------------------------------------------


def _resolve_index(raw: int, count: int, lineno: int) -> int:
    if raw > 0:
        idx = raw - 1
    elif raw < 0:
        idx = count + raw
    else:
        raise MeshIOError(f"line {lineno}: OBJ indices are 1-based, got 0")
    if idx < 0 or idx >= count:
        raise MeshIOError(f"line {lineno}: index {raw} out of range ({count} defined)")
    return idx


def read_obj(path) -> Mesh:
    """Parse v/vt/vn/f records. Triangles and quads are kept as-is; larger
    polygons are fan-triangulated with a warning. Per-corner UV/normal
    references are merged onto vertices, duplicating a vertex when its
    corners disagree (seams)."""
    positions, colors, texcoords, normals = [], [], [], []
    corners = []  # per face: list of (vid, tid, nid)
    with open(path, "r") as fh:
        for lineno, line in enumerate(fh, start=1):
            if "#" in line:
                line = line[:line.index("#")]
            toks = line.split()
            if not toks:
                continue
            kind, args = toks[0], toks[1:]
            try:
                if kind == "v":
                    if len(args) not in (3, 4, 6):
                        raise ValueError(f"expected 3, 4 or 6 floats, got {len(args)}")
                    positions.append([float(x) for x in args[:3]])
                    colors.append([float(x) for x in args[3:6]] if len(args) == 6 else None)
                elif kind == "vt":
                    texcoords.append([float(args[0]), float(args[1]) if len(args) > 1 else 0.0])
                elif kind == "vn":
                    normals.append([float(x) for x in args[:3]])
                elif kind == "f":
                    if len(args) < 3:
                        raise ValueError("face needs at least 3 corners")
                    face = []
                    signs = set()
                    for ref in args:
                        parts = ref.split("/")
                        raw_v = int(parts[0])
                        signs.add(raw_v > 0)
                        vid = _resolve_index(raw_v, len(positions), lineno)
                        tid = nid = -1
                        if len(parts) > 1 and parts[1]:
                            tid = _resolve_index(int(parts[1]), len(texcoords), lineno)
                        if len(parts) > 2 and parts[2]:
                            nid = _resolve_index(int(parts[2]), len(normals), lineno)
                        face.append((vid, tid, nid))
                    if len(signs) > 1:
                        raise ValueError("face mixes absolute and relative indices")
                    if len(face) > 4:
                        log.warning("%s line %d: fan-triangulating a %d-gon",
                                    path, lineno, len(face))
                        for i in range(1, len(face) - 1):
                            corners.append([face[0], face[i], face[i + 1]])
                    else:
                        corners.append(face)
                # g/usemtl/mtllib/etc. records are ignored
            except MeshIOError:
                raise
            except ValueError as exc:
                raise MeshIOError(f"line {lineno}: malformed {kind!r} record: {exc}") from exc

    positions = [list(p) for p in positions]
    colors_list = list(colors)
    has_uv = any(t >= 0 for f in corners for _, t, _ in f)
    has_n = any(n >= 0 for f in corners for *_, n in f)
    has_color = any(c is not None for c in colors_list)

    # resolve wedge attributes to vertices, splitting seam vertices
    variant_of: dict = {}
    uv_out, n_out = {}, {}
    faces = []
    for f in corners:
        out = []
        for vid, tid, nid in f:
            key = (vid, tid, nid)
            use = variant_of.get(key)
            if use is None:
                claimed = any(k[0] == vid for k in variant_of)
                if not claimed:
                    use = vid
                else:
                    use = len(positions)
                    positions.append(list(positions[vid]))
                    colors_list.append(colors_list[vid])
                variant_of[key] = use
                if tid >= 0:
                    uv_out[use] = texcoords[tid]
                if nid >= 0:
                    n_out[use] = normals[nid]
            out.append(use)
        faces.append(tuple(out))

    nv = len(positions)
    attrs = None
    if has_uv or has_n or has_color:
        attrs = AttributeSet()
        if has_uv:
            attrs.uv = np.zeros((nv, 2))
            for v, t in uv_out.items():
                attrs.uv[v] = t
        if has_n:
            attrs.normal = np.zeros((nv, 3))
            for v, n in n_out.items():
                attrs.normal[v] = n
        if has_color:
            attrs.color = np.zeros((nv, 3))
            for v, c in enumerate(colors_list):
                if c is not None:
                    attrs.color[v] = c
    return build_mesh(np.array(positions, dtype=float).reshape(nv, 3), faces, attrs)


def write_obj(mesh: Mesh, path):
    """Write positions (17 significant digits, bit-exact round trip) and
    faces; quads stay 4-sided. UV/normal attributes emit per-vertex vt/vn
    records, colors extend the v records."""
    attrs = mesh.attributes
    has_uv = attrs is not None and attrs.uv is not None
    has_n = attrs is not None and attrs.normal is not None
    has_c = attrs is not None and attrs.color is not None
    with open(path, "w") as fh:
        for i, p in enumerate(mesh.vertices):
            row = f"v {p[0]:.17g} {p[1]:.17g} {p[2]:.17g}"
            if has_c:
                c = attrs.color[i]
                row += f" {c[0]:.17g} {c[1]:.17g} {c[2]:.17g}"
            fh.write(row + "\n")
        if has_uv:
            for t in attrs.uv:
                fh.write(f"vt {t[0]:.17g} {t[1]:.17g}\n")
        if has_n:
            for n in attrs.normal:
                nn = np.linalg.norm(n)
                n = n / nn if nn > 0 else n
                fh.write(f"vn {n[0]:.17g} {n[1]:.17g} {n[2]:.17g}\n")
        for face in mesh.faces:
            if face is None:
                continue
            refs = []
            for v in face:
                i = v + 1
                if has_uv and has_n:
                    refs.append(f"{i}/{i}/{i}")
                elif has_uv:
                    refs.append(f"{i}/{i}")
                elif has_n:
                    refs.append(f"{i}//{i}")
                else:
                    refs.append(str(i))
            fh.write("f " + " ".join(refs) + "\n")


# -- skin sidecar --------------------------------------------------------------


@dataclass
class Skeleton:
    names: list
    parents: list
    inverse_bind: np.ndarray  # (nj, 4, 4)

    def __len__(self):
        return len(self.names)


@dataclass
class SkinSidecar:
    skeleton: Skeleton
    influences: list                    # per vertex: [(joint, weight), ...]
    poses: dict = field(default_factory=dict)  # name -> (frames, nj, 4, 4)

    def pose(self, name: str, frame: int) -> SkeletonPose:
        """Composed per-joint matrices (world x inverse bind) for a frame."""
        frames = self.poses[name]
        world = frames[frame]
        return SkeletonPose(np.einsum("jab,jbc->jac", world, self.skeleton.inverse_bind))

    def rest_pose(self) -> SkeletonPose:
        return SkeletonPose.identity(len(self.skeleton))


def _as_matrix(obj, where):
    arr = np.asarray(obj, dtype=float)
    if arr.shape != (4, 4):
        raise MeshIOError(f"{where}: expected a 4x4 matrix, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise MeshIOError(f"{where}: non-finite transform")
    return arr


def read_skin_sidecar(path) -> SkinSidecar:
    with open(path, "r") as fh:
        data = json.load(fh)
    if data.get("version") != SIDECAR_VERSION:
        raise MeshIOError(f"version: expected {SIDECAR_VERSION!r}, got {data.get('version')!r}")
    joints = data.get("joints")
    if not isinstance(joints, list) or not joints:
        raise MeshIOError("joints: expected a non-empty list")
    names, parents, binds = [], [], []
    for i, j in enumerate(joints):
        names.append(str(j.get("name", f"joint{i}")))
        parent = int(j.get("parent", -1))
        if parent >= len(joints) or parent < -1:
            raise MeshIOError(f"joints[{i}].parent: {parent} out of range")
        parents.append(parent)
        binds.append(_as_matrix(j.get("inverse_bind", np.eye(4).tolist()),
                                f"joints[{i}].inverse_bind"))
    skeleton = Skeleton(names, parents, np.stack(binds))

    raw_inf = data.get("influences")
    if not isinstance(raw_inf, list):
        raise MeshIOError("influences: expected a list (one entry per vertex)")
    influences = []
    for v, entries in enumerate(raw_inf):
        parsed = []
        for e in entries:
            jid, w = int(e[0]), float(e[1])
            if jid < 0 or jid >= len(joints):
                raise MeshIOError(f"influences[{v}]: unknown joint {jid}")
            if w < 0:
                raise MeshIOError(f"influences[{v}]: negative weight {w}")
            parsed.append((jid, w))
        if not parsed:
            raise MeshIOError(f"influences[{v}]: vertex has no influences")
        parsed, renormed = normalize_influences(parsed)
        if renormed:
            log.warning("influences[%d]: weights renormalized to sum to 1", v)
        influences.append(parsed)

    poses = {}
    for name, frames in (data.get("poses") or {}).items():
        arr = []
        for fi, frame in enumerate(frames):
            if len(frame) != len(joints):
                raise MeshIOError(
                    f"poses[{name!r}][{fi}]: expected {len(joints)} joint "
                    f"transforms, got {len(frame)}")
            arr.append(np.stack([
                _as_matrix(m, f"poses[{name!r}][{fi}][{ji}]")
                for ji, m in enumerate(frame)
            ]))
        poses[name] = np.stack(arr) if arr else np.zeros((0, len(joints), 4, 4))
    return SkinSidecar(skeleton, influences, poses)


def write_skin_sidecar(sidecar: SkinSidecar, path):
    data = {
        "version": SIDECAR_VERSION,
        "joints": [
            {
                "name": sidecar.skeleton.names[i],
                "parent": sidecar.skeleton.parents[i],
                "inverse_bind": sidecar.skeleton.inverse_bind[i].tolist(),
            }
            for i in range(len(sidecar.skeleton))
        ],
        "influences": [
            [[int(j), float(w)] for j, w in entries]
            for entries in sidecar.influences
        ],
        "poses": {
            name: np.asarray(frames).tolist()
            for name, frames in sidecar.poses.items()
        },
    }
    with open(path, "w") as fh:
        json.dump(data, fh, indent=1)


def attach_skin(mesh: Mesh, sidecar: SkinSidecar):
    """Copy sidecar influences onto the mesh attribute set."""
    if len(sidecar.influences) != len(mesh.vertices):
        raise MeshIOError(
            f"sidecar covers {len(sidecar.influences)} vertices, mesh has "
            f"{len(mesh.vertices)}")
    if mesh.attributes is None:
        mesh.attributes = AttributeSet()
    mesh.attributes.influences = [list(e) for e in sidecar.influences]

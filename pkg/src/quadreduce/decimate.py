"""Greedy quad-preserving decimation.

Two priority queues drive the collapse order: one over raw collapse cost,
and one over (recency, cost) for edges whose costs fall within eps_abs of
the cost that opened the current equivalence class. Collapsing an edge
bumps the recency of opposing quad edges, which implicitly walks quad
chords before touching unrelated geometry.
"""

from __future__ import annotations

import heapq
import logging
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from ._kernels import COND_LIMIT, PIVOT_REL_TOL
from .attributes import (
    channel_block,
    channel_value,
    finalize_influences,
    fit_attribute_functional,
    merge_joint_functionals,
)
from .edge_weight import batch_edge_weights
from .mesh import (
    Mesh,
    all_face_normals_areas,
    collapse_edge,
    collapse_is_valid,
    compact,
    edge_key,
    opposing_edges,
    total_triangle_count,
)

log = logging.getLogger(__name__)


def approx_equal(a: float, b: float, eps_abs: float) -> bool:
    """Absolute-difference float equality: |a - b| < eps_abs."""
    return abs(a - b) < eps_abs


@dataclass
class DecimationConfig:
    target_total_triangles: Optional[int] = None
    target_ratio: Optional[float] = None
    eps_abs: float = 5e-6
    lambda_sym: float = 0.0
    lambda_joint: float = 1.0
    sym_delta: float = 0.0  # 0 selects the bbox-scaled default
    recency_enabled: bool = True
    cost_mode: str = "new"
    edge_weight_mode: str = "dihedral"
    rng_seed: int = 0
    attribute_weight: float = 1.0
    solver_cond_limit: float = COND_LIMIT
    solver_pivot_rel_tol: float = PIVOT_REL_TOL
    edge_quadric_style: str = "per-face"
    debug_check_adjacency: bool = False

    def validate(self):
        if self.eps_abs < 0.0:
            raise ValueError("eps_abs must be >= 0")
        if self.cost_mode not in ("new", "original"):
            raise ValueError(f"unknown cost_mode {self.cost_mode!r}")
        if self.edge_weight_mode not in ("none", "uniform", "dihedral"):
            raise ValueError(f"unknown edge_weight_mode {self.edge_weight_mode!r}")
        if self.target_ratio is not None and not 0.0 < self.target_ratio <= 1.0:
            raise ValueError("target_ratio must be in (0, 1]")
        if self.target_total_triangles is None and self.target_ratio is None:
            raise ValueError("set target_total_triangles or target_ratio")

    def resolve_target(self, total: int) -> int:
        if self.target_total_triangles is not None:
            return max(0, int(self.target_total_triangles))
        return int(round(self.target_ratio * total))


@dataclass
class DecimationResult:
    mesh: Mesh
    quads: int
    tris: int
    total_triangles: int
    collapse_count: int
    wall_time_s: float
    collapse_log: list
    unreachable: bool
    vertex_map: np.ndarray  # input vertex id -> output id (-1 when removed)
    blocked_attempts: int = 0

    def stats(self) -> dict:
        return {
            "quads": self.quads,
            "tris": self.tris,
            "total_triangles": self.total_triangles,
            "collapses": self.collapse_count,
            "blocked_attempts": self.blocked_attempts,
            "wall_time_s": self.wall_time_s,
            "unreachable_target": self.unreachable,
        }


class _Engine:
    def __init__(self, mesh: Mesh, config: DecimationConfig):
        self.mesh = mesh
        self.config = config
        self.pos = mesh.vertices
        nv = len(self.pos)
        self.vq = np.zeros((nv, 10))
        self.channels = None   # (nv, nchan, 15) dense attribute accumulators
        self.joints = None     # per-vertex dict of joint-id -> 15-slot block
        self.cost: dict = {}
        self.placement: dict = {}
        self.recency: dict = {}
        self.gen: dict = {}
        self.pq_qem: list = []
        self.pq_approx: list = []
        self.in_approx: set = set()
        self.blocked: set = set()
        self.class_anchor = 0.0
        self.class_open = False
        self.collapse_log: list = []
        self.collapses = 0
        self.blocked_attempts = 0
        self.mode_new = config.cost_mode == "new"

    # -- initialization ----------------------------------------------------

    def initialize(self):
        mesh, cfg = self.mesh, self.config
        if mesh.face_count() == 0:
            raise ValueError("cannot decimate an empty mesh")
        normals, areas = all_face_normals_areas(mesh)
        self._accumulate_face_quadrics(normals, areas)
        self._accumulate_attribute_blocks(normals, areas)
        weights = batch_edge_weights(mesh, cfg, normals=normals)
        self._accumulate_edge_quadrics(normals, weights)
        edges = sorted(mesh.edge_map)
        costs, places = self._compute_costs(edges)
        for e, c, p in zip(edges, costs, places):
            self.cost[e] = c
            self.placement[e] = p
            self.gen[e] = 0
            heapq.heappush(self.pq_qem, (c, e[0], e[1], 0))

    def _accumulate_face_quadrics(self, normals, areas):
        mesh = self.mesh
        fids = [i for i, f in enumerate(mesh.faces) if f is not None and areas[i] > 0.0]
        if not fids:
            return
        fids = np.array(fids, dtype=np.int64)
        n = normals[fids]
        w = areas[fids]
        p = self.pos[[mesh.faces[i][0] for i in fids]]
        d = np.einsum("ij,ij->i", n, p)
        rows = np.empty((len(fids), 10))
        rows[:, 0] = n[:, 0] * n[:, 0]
        rows[:, 1] = n[:, 0] * n[:, 1]
        rows[:, 2] = n[:, 0] * n[:, 2]
        rows[:, 3] = n[:, 1] * n[:, 1]
        rows[:, 4] = n[:, 1] * n[:, 2]
        rows[:, 5] = n[:, 2] * n[:, 2]
        rows[:, 6:9] = d[:, None] * n
        rows[:, 9] = d * d
        rows *= w[:, None]
        counts = np.fromiter((len(mesh.faces[i]) for i in fids),
                             dtype=np.int64, count=len(fids))
        vids = np.fromiter(
            (v for i in fids for v in mesh.faces[i]),
            dtype=np.int64, count=int(counts.sum()))
        ridx = np.repeat(np.arange(len(fids)), counts)
        np.add.at(self.vq, vids, rows[ridx])

    def _accumulate_attribute_blocks(self, normals, areas):
        attrs = self.mesh.attributes
        if attrs is None:
            return
        mesh = self.mesh
        nv = len(self.pos)
        chans = attrs.dense_channels()
        aw = self.config.attribute_weight
        if chans:
            self.channels = np.zeros((nv, len(chans), 15))
        if attrs.influences is not None:
            self.joints = [dict() for _ in range(nv)]
        for fid, face in enumerate(mesh.faces):
            if face is None or areas[fid] <= 0.0:
                continue
            pts = self.pos[list(face)]
            n = normals[fid]
            w = areas[fid] * aw
            if chans:
                for ci, (name, comp) in enumerate(chans):
                    vals = getattr(attrs, name)[list(face), comp]
                    func = fit_attribute_functional(pts, vals, n)
                    block = channel_block(func, w)
                    for v in face:
                        self.channels[v, ci] += block
            if self.joints is not None:
                jids = sorted({j for v in face for j, _ in attrs.influences[v]})
                for j in jids:
                    vals = [dict(attrs.influences[v]).get(j, 0.0) for v in face]
                    func = fit_attribute_functional(pts, vals, n)
                    block = channel_block(func, w)
                    for v in face:
                        jb = self.joints[v]
                        if j in jb:
                            jb[j] = jb[j] + block
                        else:
                            jb[j] = block.copy()
        if self.joints is not None:
            for v in range(nv):
                if len(self.joints[v]) > 16:
                    self.joints[v] = merge_joint_functionals(
                        self.joints[v], {}, self.pos[v], self.pos[v])

    def _accumulate_edge_quadrics(self, normals, weights):
        if self.config.edge_weight_mode == "none":
            return
        mesh = self.mesh
        edges = sorted(mesh.edge_map)
        e_arr = np.array(edges, dtype=np.int64)
        p0 = self.pos[e_arr[:, 0]]
        evec = self.pos[e_arr[:, 1]] - p0
        elen = np.linalg.norm(evec, axis=1)
        w_arr = np.array([weights[e] for e in edges])
        ok_edge = elen > 0.0
        if not ok_edge.all():
            log.warning("skipping %d zero-length edges", int((~ok_edge).sum()))
        counts = np.fromiter((len(mesh.edge_map[e]) for e in edges),
                             dtype=np.int64, count=len(edges))
        inc_f = np.fromiter((f for e in edges for f in mesh.edge_map[e]),
                            dtype=np.int64, count=int(counts.sum()))
        inc_e = np.repeat(np.arange(len(edges)), counts)
        keep = ok_edge[inc_e]
        inc_e = inc_e[keep]
        inc_f = inc_f[keep]
        if len(inc_e) == 0:
            return
        dirs = evec[inc_e] / elen[inc_e][:, None]
        n = np.cross(dirs, normals[inc_f])
        if self.config.edge_quadric_style == "averaged":
            sums = np.zeros((len(edges), 3))
            ln = np.linalg.norm(n, axis=1)
            good = ln > 1e-12
            np.add.at(sums, inc_e[good], n[good] / ln[good][:, None])
            counts = np.zeros(len(edges))
            np.add.at(counts, inc_e[good], 1.0)
            keep = counts > 0
            inc_e = np.flatnonzero(keep)
            n = sums[keep] / np.maximum(counts[keep], 1.0)[:, None]
        ln = np.linalg.norm(n, axis=1)
        good = ln > 1e-12
        inc_e = inc_e[good]
        n = n[good] / ln[good][:, None]
        pts = p0[inc_e]
        d = np.einsum("ij,ij->i", n, pts)
        scale = (w_arr * elen)[inc_e]
        rows = np.empty((len(inc_e), 10))
        rows[:, 0] = n[:, 0] * n[:, 0]
        rows[:, 1] = n[:, 0] * n[:, 1]
        rows[:, 2] = n[:, 0] * n[:, 2]
        rows[:, 3] = n[:, 1] * n[:, 1]
        rows[:, 4] = n[:, 1] * n[:, 2]
        rows[:, 5] = n[:, 2] * n[:, 2]
        rows[:, 6:9] = d[:, None] * n
        rows[:, 9] = d * d
        rows *= scale[:, None]
        np.add.at(self.vq, e_arr[inc_e, 0], rows)
        np.add.at(self.vq, e_arr[inc_e, 1], rows)

    # -- cost --------------------------------------------------------------

    def _compute_costs(self, edges):
        if not edges:
            return [], []
        cfg = self.config
        if self.channels is None and self.joints is None:
            arr = np.array(edges, dtype=np.int64)
            costs, places = _kernels.edge_cost_batch(
                self.vq, self.pos, arr, self.mode_new,
                cfg.solver_cond_limit, cfg.solver_pivot_rel_tol)
            costs = np.where(np.isnan(costs), np.inf, costs)
            return costs.tolist(), places.tolist()
        costs, places = [], []
        for e in edges:
            c, p = self._extended_cost(e)
            costs.append(c)
            places.append([float(p[0]), float(p[1]), float(p[2])])
        return costs, places

    def _extended_eval(self, qrow, chan_rows, joint_blocks, x):
        total = _kernels.eval_packed(qrow, x[0], x[1], x[2])
        if chan_rows is not None:
            total += _kernels.channel_residual_sum(chan_rows, x[0], x[1], x[2])
        if joint_blocks is not None:
            for block in joint_blocks:
                total += _kernels.channel_residual(block, x[0], x[1], x[2])
        return total

    def _extended_cost(self, e):
        """Cost/placement with attribute channels: position-block solve plus
        endpoint/midpoint candidates, scored by the full extended error."""
        cfg = self.config
        a, b = e
        qs = self.vq[a] + self.vq[b]
        pa, pb = self.pos[a], self.pos[b]
        chan_rows = None
        if self.channels is not None:
            chan_rows = self.channels[a] + self.channels[b]
        joint_rows = None
        if self.joints is not None:
            ja, jb = self.joints[a], self.joints[b]
            joint_rows = [
                (ja[j] + jb[j]) if (j in ja and j in jb)
                else (ja[j] if j in ja else jb[j])
                for j in sorted(ja.keys() | jb.keys())
            ]
        ok, sx, sy, sz = _kernels.solve_packed(
            qs, cfg.solver_cond_limit, cfg.solver_pivot_rel_tol)
        cands = []
        if ok:
            cands.append(np.array([sx, sy, sz]))
        cands.extend([pa.copy(), pb.copy(), 0.5 * (pa + pb)])
        best_c, best_p = np.inf, cands[0]
        for cand in cands:
            c = self._extended_eval(qs, chan_rows, joint_rows, cand)
            if c < best_c:
                best_c, best_p = c, cand
        if self.mode_new:
            base = _kernels.eval_packed(self.vq[a], pa[0], pa[1], pa[2])
            base += _kernels.eval_packed(self.vq[b], pb[0], pb[1], pb[2])
            if self.channels is not None:
                base += _kernels.channel_residual_sum(
                    self.channels[a], pa[0], pa[1], pa[2])
                base += _kernels.channel_residual_sum(
                    self.channels[b], pb[0], pb[1], pb[2])
            if self.joints is not None:
                for block in self.joints[a].values():
                    base += _kernels.channel_residual(block, pa[0], pa[1], pa[2])
                for block in self.joints[b].values():
                    base += _kernels.channel_residual(block, pb[0], pb[1], pb[2])
            best_c -= base
        if np.isnan(best_c):
            best_c = np.inf
        return best_c, best_p

    # -- queue discipline ----------------------------------------------------

    def _bump(self, e):
        self.gen[e] = self.gen.get(e, 0) + 1

    def _kill_edge(self, e):
        self._bump(e)
        self.cost.pop(e, None)
        self.placement.pop(e, None)
        self.recency.pop(e, None)
        self.in_approx.discard(e)
        self.blocked.discard(e)

    def pop_next_edge(self):
        """Next candidate edge, or None when the queues are exhausted.

        Pops the recency queue first; when it runs dry all recencies reset
        and the cheapest cost-queue edge opens a new equivalence class."""
        while True:
            while self.pq_approx:
                negrec, cost, lo, hi, g = heapq.heappop(self.pq_approx)
                e = (lo, hi)
                if e not in self.in_approx or self.gen.get(e) != g:
                    continue
                self.in_approx.discard(e)
                return e
            if self.config.recency_enabled:
                self.recency.clear()
            while self.pq_qem:
                cost, lo, hi, g = heapq.heappop(self.pq_qem)
                e = (lo, hi)
                if self.gen.get(e) != g or e in self.in_approx:
                    continue
                self.class_anchor = cost
                self.class_open = True
                return e
            return None

    def _drain_equal_costs(self):
        """Move cost-queue entries approximately equal to the class anchor
        into the recency queue."""
        eps = self.config.eps_abs
        while self.pq_qem:
            cost, lo, hi, g = self.pq_qem[0]
            e = (lo, hi)
            if self.gen.get(e) != g or e in self.in_approx:
                heapq.heappop(self.pq_qem)
                continue
            if not approx_equal(cost, self.class_anchor, eps):
                break
            heapq.heappop(self.pq_qem)
            self.in_approx.add(e)
            heapq.heappush(
                self.pq_approx,
                (-self.recency.get(e, 0), cost, lo, hi, g))

    def _merged_attributes(self, e, v, merged_joint_blocks):
        if self.channels is None and merged_joint_blocks is None:
            return None
        merged = {}
        a, b = e
        if self.channels is not None:
            rows = self.channels[a] + self.channels[b]
            merged["dense"] = [channel_value(rows[k], v) for k in range(rows.shape[0])]
        if merged_joint_blocks is not None:
            merged["influences"] = finalize_influences(merged_joint_blocks, v)
        return merged

    def on_collapse_bookkeeping(self, e, rec_e, ops, n_b_old):
        """Post-collapse queue maintenance: recency propagation to opposing
        quad edges, one-ring cost refresh, and the equal-cost drain."""
        mesh, cfg = self.mesh, self.config
        a, b = e
        if cfg.recency_enabled:
            # carry recency across re-keyed (b, x) -> (a, x) edges
            for x in n_b_old:
                if x == a:
                    continue
                old = self.recency.get(edge_key(b, x), 0)
                if old:
                    k = edge_key(a, x)
                    self.recency[k] = max(self.recency.get(k, 0), old)
        for x in n_b_old:
            self._kill_edge(edge_key(b, x))
        if cfg.recency_enabled:
            for op in ops:
                if op not in mesh.edge_map:
                    continue
                r = self.recency.get(op, 0) + rec_e + 1
                self.recency[op] = r
                if op in self.in_approx:
                    self._bump(op)
                    g = self.gen[op]
                    heapq.heappush(self.pq_approx,
                                   (-r, self.cost[op], op[0], op[1], g))
        dirty = sorted(edge_key(a, x) for x in mesh.vertex_neighbors[a])
        costs, places = self._compute_costs(dirty)
        for de, c, p in zip(dirty, costs, places):
            self.cost[de] = c
            self.placement[de] = p
            self.in_approx.discard(de)  # changed cost returns to the cost queue
            self.blocked.discard(de)
            self._bump(de)
            heapq.heappush(self.pq_qem, (c, de[0], de[1], self.gen[de]))
        if cfg.recency_enabled and self.class_open:
            self._drain_equal_costs()

    def run(self, target: int):
        mesh, cfg = self.mesh, self.config
        total = total_triangle_count(mesh)
        unreachable = False
        while total > target:
            e = self.pop_next_edge()
            if e is None:
                unreachable = True
                break
            v = self.placement[e]
            if not collapse_is_valid(mesh, e, v):
                self.blocked.add(e)
                self._bump(e)
                self.blocked_attempts += 1
                continue
            a, b = e
            rec_e = self.recency.get(e, 0)
            ops = opposing_edges(mesh, e)
            n_b_old = set(mesh.vertex_neighbors[b])
            pa = self.pos[a].copy()
            pb = self.pos[b].copy()
            merged_blocks = None
            if self.joints is not None:
                merged_blocks = merge_joint_functionals(
                    self.joints[a], self.joints[b], pa, pb)
            merged = self._merged_attributes(e, v, merged_blocks)
            collapse_edge(mesh, e, v, merged, validate=False)
            self.vq[a] += self.vq[b]
            if self.channels is not None:
                self.channels[a] += self.channels[b]
            if self.joints is not None:
                self.joints[a] = merged_blocks
                self.joints[b] = {}
            self.collapses += 1
            self.collapse_log.append((e, self.cost[e]))
            self.on_collapse_bookkeeping(e, rec_e, ops, n_b_old)
            total = total_triangle_count(mesh)
            if cfg.debug_check_adjacency:
                assert mesh.adjacency_matches_faces(), \
                    f"adjacency drifted after collapsing {e}"
        return unreachable


def decimate(mesh: Mesh, config: DecimationConfig) -> DecimationResult:
    """Decimate a copy of `mesh` down to the configured total triangle count
    (2 * quads + tris). The input mesh is left untouched."""
    config.validate()
    t0 = time.perf_counter()
    total0 = total_triangle_count(mesh)
    target = config.resolve_target(total0)
    work = mesh.copy()
    unreachable = False
    engine = _Engine(work, config)
    if target < total0:
        engine.initialize()
        unreachable = engine.run(target)
        if unreachable:
            log.warning("target %d unreachable; stopped at %d",
                        target, total_triangle_count(work))
    out, remap = compact(work)
    elapsed = time.perf_counter() - t0
    return DecimationResult(
        mesh=out,
        quads=out.n_quads,
        tris=out.n_tris,
        total_triangles=total_triangle_count(out),
        collapse_count=engine.collapses,
        wall_time_s=elapsed,
        collapse_log=engine.collapse_log,
        unreachable=unreachable,
        vertex_map=remap,
        blocked_attempts=engine.blocked_attempts,
    )

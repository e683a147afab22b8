"""Axis-aligned bounding-box tree over triangles for exact closest-surface
queries. Quads are fan-triangulated by the caller; queries run through the
compiled best-first traversal."""

from __future__ import annotations

import numpy as np

from . import _kernels

LEAF_SIZE = 8


class TriangleBVH:
    def __init__(self, tris: np.ndarray):
        """tris: (nt, 3, 3) triangle corner positions."""
        tris = np.ascontiguousarray(tris, dtype=np.float64)
        if tris.ndim != 3 or tris.shape[1:] != (3, 3):
            raise ValueError(f"expected (nt, 3, 3) triangles, got {tris.shape}")
        if len(tris) == 0:
            raise ValueError("cannot build a BVH over zero triangles")
        self.tris = tris
        centroids = tris.mean(axis=1)
        lo = tris.min(axis=1)
        hi = tris.max(axis=1)

        node_min, node_max = [], []
        node_left, node_right = [], []
        node_start, node_count = [], []
        order = np.arange(len(tris))
        # (slice into order, parent slot) work stack; nodes appended in
        # discovery order with children patched afterwards
        stack = [(0, len(tris), -1, False)]
        while stack:
            start, end, parent, is_right = stack.pop()
            idx = len(node_min)
            sel = order[start:end]
            bmin = lo[sel].min(axis=0)
            bmax = hi[sel].max(axis=0)
            node_min.append(bmin)
            node_max.append(bmax)
            if parent >= 0:
                if is_right:
                    node_right[parent] = idx
                else:
                    node_left[parent] = idx
            if end - start <= LEAF_SIZE:
                node_left.append(-1)
                node_right.append(-1)
                node_start.append(start)
                node_count.append(end - start)
                continue
            axis = int(np.argmax(bmax - bmin))
            mid = (start + end) // 2
            part = np.argsort(centroids[sel, axis], kind="stable")
            order[start:end] = sel[part]
            node_left.append(0)
            node_right.append(0)
            node_start.append(start)
            node_count.append(0)
            stack.append((mid, end, idx, True))
            stack.append((start, mid, idx, False))

        self.node_min = np.array(node_min)
        self.node_max = np.array(node_max)
        self.node_left = np.array(node_left, dtype=np.int64)
        self.node_right = np.array(node_right, dtype=np.int64)
        self.node_start = np.array(node_start, dtype=np.int64)
        self.node_count = np.array(node_count, dtype=np.int64)
        self.leaf_tris = order.astype(np.int64)

    def closest(self, points: np.ndarray):
        """Exact distance to the surface and the owning triangle id for each
        query point."""
        points = np.ascontiguousarray(np.atleast_2d(points), dtype=np.float64)
        return _kernels.bvh_closest(
            points, self.tris, self.node_min, self.node_max,
            self.node_left, self.node_right, self.node_start,
            self.node_count, self.leaf_tris)


def brute_force_closest(points: np.ndarray, tris: np.ndarray):
    """O(points x triangles) oracle computing the same distances as the BVH
    with vectorized numpy (Ericson region tests per block)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    tris = np.asarray(tris, dtype=float)
    m = len(points)
    best = np.full(m, np.inf)
    best_tri = np.full(m, -1, dtype=np.int64)
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    ab = b - a
    ac = c - a
    block = max(1, int(2e6 // max(len(tris), 1)))
    for s in range(0, m, block):
        p = points[s:s + block]
        ap = p[:, None, :] - a[None, :, :]
        d1 = np.einsum("tj,ptj->pt", ab, ap)
        d2 = np.einsum("tj,ptj->pt", ac, ap)
        bp = p[:, None, :] - b[None, :, :]
        d3 = np.einsum("tj,ptj->pt", ab, bp)
        d4 = np.einsum("tj,ptj->pt", ac, bp)
        cp = p[:, None, :] - c[None, :, :]
        d5 = np.einsum("tj,ptj->pt", ab, cp)
        d6 = np.einsum("tj,ptj->pt", ac, cp)

        with np.errstate(divide="ignore", invalid="ignore"):
            vc = d1 * d4 - d3 * d2
            vb = d5 * d2 - d1 * d6
            va = d3 * d6 - d5 * d4
            v_ab = d1 / (d1 - d3)
            w_ac = d2 / (d2 - d6)
            w_bc = (d4 - d3) / ((d4 - d3) + (d5 - d6))
            denom = va + vb + vc
            v_in = vb / denom
            w_in = vc / denom

        q = (a[None, :, :] + v_in[..., None] * ab[None, :, :]
             + w_in[..., None] * ac[None, :, :])
        q = np.where(((va <= 0) & ((d4 - d3) >= 0) & ((d5 - d6) >= 0))[..., None],
                     b[None, :, :] + w_bc[..., None] * (c - b)[None, :, :], q)
        q = np.where(((vb <= 0) & (d2 >= 0) & (d6 <= 0))[..., None],
                     a[None, :, :] + w_ac[..., None] * ac[None, :, :], q)
        q = np.where(((d6 >= 0) & (d5 <= d6))[..., None], c[None, :, :], q)
        q = np.where(((vc <= 0) & (d1 >= 0) & (d3 <= 0))[..., None],
                     a[None, :, :] + v_ab[..., None] * ab[None, :, :], q)
        q = np.where(((d3 >= 0) & (d4 <= d3))[..., None], b[None, :, :], q)
        q = np.where(((d1 <= 0) & (d2 <= 0))[..., None], a[None, :, :], q)

        diff = q - p[:, None, :]
        d2all = np.einsum("ptj,ptj->pt", diff, diff)
        ids = np.argmin(d2all, axis=1)
        rows = np.arange(len(p))
        best[s:s + block] = np.sqrt(d2all[rows, ids])
        best_tri[s:s + block] = ids
    return best, best_tri

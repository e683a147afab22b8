"""Compiled numeric kernels shared by the quadric algebra and the collapse engine.

Quadrics are packed as 10 float64 slots: the symmetric matrix part
[a00, a01, a02, a11, a12, a22], the linear part [b0, b1, b2], and the
constant c, so that eval(x) = x^T A x - 2 b.x + c.

Attribute channel accumulators are packed as 15 slots:
[gg00, gg01, gg02, gg11, gg12, gg22, dg0, dg1, dg2, dd, g0, g1, g2, d, w]
holding sum(w g g^T), sum(w d g), sum(w d^2), sum(w g), sum(w d), sum(w).
"""

import numpy as np
from numba import njit

# Fallback thresholds for the 3x3 placement solve; both are overridable
# through DecimationConfig.
COND_LIMIT = 1e8
PIVOT_REL_TOL = 1e-12


@njit(cache=True)
def eval_packed(q, x0, x1, x2):
    return (q[0] * x0 * x0 + q[3] * x1 * x1 + q[5] * x2 * x2
            + 2.0 * (q[1] * x0 * x1 + q[2] * x0 * x2 + q[4] * x1 * x2)
            - 2.0 * (q[6] * x0 + q[7] * x1 + q[8] * x2) + q[9])


@njit(cache=True)
def solve_packed(q, cond_limit, pivot_rel_tol):
    """Solve A x = b for the packed quadric via 3x3 elimination.

    Returns (ok, x0, x1, x2). ok is False when a pivot falls below
    pivot_rel_tol * trace(A) or the pivot-based condition estimate
    exceeds cond_limit.
    """
    m = np.empty((3, 4))
    m[0, 0] = q[0]; m[0, 1] = q[1]; m[0, 2] = q[2]; m[0, 3] = q[6]
    m[1, 0] = q[1]; m[1, 1] = q[3]; m[1, 2] = q[4]; m[1, 3] = q[7]
    m[2, 0] = q[2]; m[2, 1] = q[4]; m[2, 2] = q[5]; m[2, 3] = q[8]

    trace = q[0] + q[3] + q[5]
    piv_tol = pivot_rel_tol * abs(trace)
    min_piv = np.inf
    for col in range(3):
        pr = col
        best = abs(m[col, col])
        for r in range(col + 1, 3):
            v = abs(m[r, col])
            if v > best:
                best = v
                pr = r
        if pr != col:
            for k in range(4):
                tmp = m[col, k]
                m[col, k] = m[pr, k]
                m[pr, k] = tmp
        piv = m[col, col]
        if abs(piv) <= piv_tol:
            return False, 0.0, 0.0, 0.0
        if abs(piv) < min_piv:
            min_piv = abs(piv)
        for r in range(col + 1, 3):
            f = m[r, col] / piv
            for k in range(col, 4):
                m[r, k] -= f * m[col, k]
    if abs(trace) > cond_limit * min_piv:
        return False, 0.0, 0.0, 0.0
    x2 = m[2, 3] / m[2, 2]
    x1 = (m[1, 3] - m[1, 2] * x2) / m[1, 1]
    x0 = (m[0, 3] - m[0, 1] * x1 - m[0, 2] * x2) / m[0, 0]
    return True, x0, x1, x2


@njit(cache=True)
def place_packed(q, e0x, e0y, e0z, e1x, e1y, e1z, cond_limit, pivot_rel_tol):
    """Optimal placement for a summed quadric, with the endpoint/midpoint
    fallback when the normal equations are rank deficient.

    Returns (x, y, z, solved)."""
    ok, x0, x1, x2 = solve_packed(q, cond_limit, pivot_rel_tol)
    if ok:
        return x0, x1, x2, True
    mx = 0.5 * (e0x + e1x)
    my = 0.5 * (e0y + e1y)
    mz = 0.5 * (e0z + e1z)
    c0 = eval_packed(q, e0x, e0y, e0z)
    c1 = eval_packed(q, e1x, e1y, e1z)
    cm = eval_packed(q, mx, my, mz)
    # ties resolve in candidate order: e0, e1, midpoint
    bx, by, bz = e0x, e0y, e0z
    bc = c0
    if c1 < bc:
        bx, by, bz = e1x, e1y, e1z
        bc = c1
    if cm < bc:
        bx, by, bz = mx, my, mz
    return bx, by, bz, False


@njit(cache=True)
def edge_cost_batch(vq, pos, edges, new_mode, cond_limit, pivot_rel_tol):
    """Placement and collapse cost for each (e0, e1) row of `edges`.

    new_mode subtracts the endpoints' current residuals (revised cost);
    otherwise the raw summed-quadric error is returned."""
    n = edges.shape[0]
    costs = np.empty(n)
    places = np.empty((n, 3))
    qs = np.empty(10)
    for i in range(n):
        a = edges[i, 0]
        b = edges[i, 1]
        for j in range(10):
            qs[j] = vq[a, j] + vq[b, j]
        ax, ay, az = pos[a, 0], pos[a, 1], pos[a, 2]
        bx, by, bz = pos[b, 0], pos[b, 1], pos[b, 2]
        x, y, z, _ = place_packed(qs, ax, ay, az, bx, by, bz,
                                  cond_limit, pivot_rel_tol)
        c = eval_packed(qs, x, y, z)
        if new_mode:
            c -= eval_packed(vq[a], ax, ay, az) + eval_packed(vq[b], bx, by, bz)
        costs[i] = c
        places[i, 0] = x
        places[i, 1] = y
        places[i, 2] = z
    return costs, places


@njit(cache=True)
def channel_residual(ch, x0, x1, x2):
    """Least-squares residual of one attribute channel at a position,
    after optimizing out the scalar attribute value."""
    w = ch[14]
    if w <= 0.0:
        return 0.0
    quad = (ch[0] * x0 * x0 + ch[3] * x1 * x1 + ch[5] * x2 * x2
            + 2.0 * (ch[1] * x0 * x1 + ch[2] * x0 * x2 + ch[4] * x1 * x2)
            + 2.0 * (ch[6] * x0 + ch[7] * x1 + ch[8] * x2) + ch[9])
    lin = ch[10] * x0 + ch[11] * x1 + ch[12] * x2 + ch[13]
    return quad - lin * lin / w


@njit(cache=True)
def channel_residual_sum(chans, x0, x1, x2):
    total = 0.0
    for k in range(chans.shape[0]):
        total += channel_residual(chans[k], x0, x1, x2)
    return total


@njit(cache=True)
def newell_normal(pos, ids, count, override_id, ox, oy, oz):
    """Unnormalized Newell normal of a polygon; vertex `override_id`
    reads the override coordinates instead of the position array."""
    nx = 0.0
    ny = 0.0
    nz = 0.0
    for i in range(count):
        va = ids[i]
        vb = ids[(i + 1) % count]
        if va == override_id:
            ax, ay, az = ox, oy, oz
        else:
            ax, ay, az = pos[va, 0], pos[va, 1], pos[va, 2]
        if vb == override_id:
            bx, by, bz = ox, oy, oz
        else:
            bx, by, bz = pos[vb, 0], pos[vb, 1], pos[vb, 2]
        nx += (ay - by) * (az + bz)
        ny += (az - bz) * (ax + bx)
        nz += (ax - bx) * (ay + by)
    return nx, ny, nz


@njit(cache=True)
def flip_check(pos, before_ids, before_counts, after_ids, after_counts,
               nfaces, survivor, nx, ny, nz):
    """True when every surviving face keeps its orientation once the
    survivor vertex moves to (nx, ny, nz)."""
    for f in range(nfaces):
        b0x, b0y, b0z = newell_normal(pos, before_ids[f], before_counts[f],
                                      -1, 0.0, 0.0, 0.0)
        a0x, a0y, a0z = newell_normal(pos, after_ids[f], after_counts[f],
                                      survivor, nx, ny, nz)
        if b0x * a0x + b0y * a0y + b0z * a0z <= 0.0:
            return False
    return True


@njit(cache=True)
def closest_point_triangle(ax, ay, az, bx, by, bz, cx, cy, cz, px, py, pz):
    """Closest point on triangle abc to p (Ericson's region walk)."""
    abx, aby, abz = bx - ax, by - ay, bz - az
    acx, acy, acz = cx - ax, cy - ay, cz - az
    apx, apy, apz = px - ax, py - ay, pz - az

    d1 = abx * apx + aby * apy + abz * apz
    d2 = acx * apx + acy * apy + acz * apz
    if d1 <= 0.0 and d2 <= 0.0:
        return ax, ay, az

    bpx, bpy, bpz = px - bx, py - by, pz - bz
    d3 = abx * bpx + aby * bpy + abz * bpz
    d4 = acx * bpx + acy * bpy + acz * bpz
    if d3 >= 0.0 and d4 <= d3:
        return bx, by, bz

    vc = d1 * d4 - d3 * d2
    if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
        v = d1 / (d1 - d3)
        return ax + v * abx, ay + v * aby, az + v * abz

    cpx, cpy, cpz = px - cx, py - cy, pz - cz
    d5 = abx * cpx + aby * cpy + abz * cpz
    d6 = acx * cpx + acy * cpy + acz * cpz
    if d6 >= 0.0 and d5 <= d6:
        return cx, cy, cz

    vb = d5 * d2 - d1 * d6
    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
        w = d2 / (d2 - d6)
        return ax + w * acx, ay + w * acy, az + w * acz

    va = d3 * d6 - d5 * d4
    if va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
        w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        return bx + w * (cx - bx), by + w * (cy - by), bz + w * (cz - bz)

    denom = 1.0 / (va + vb + vc)
    v = vb * denom
    w = vc * denom
    return (ax + abx * v + acx * w,
            ay + aby * v + acy * w,
            az + abz * v + acz * w)


@njit(cache=True)
def bvh_closest(points, tris, node_min, node_max, node_left, node_right,
                node_start, node_count, leaf_tris):
    """Exact closest-surface distance and triangle id for each query point.

    Best-first traversal over an AABB tree; `tris` is (nt, 3, 3)."""
    n = points.shape[0]
    dists = np.empty(n)
    tri_ids = np.empty(n, dtype=np.int64)
    stack = np.empty(node_min.shape[0] + 1, dtype=np.int64)
    for i in range(n):
        px, py, pz = points[i, 0], points[i, 1], points[i, 2]
        best = np.inf
        best_tri = -1
        top = 0
        stack[0] = 0
        top = 1
        while top > 0:
            top -= 1
            node = stack[top]
            # lower bound: squared distance to the node box
            dx = 0.0
            if px < node_min[node, 0]:
                dx = node_min[node, 0] - px
            elif px > node_max[node, 0]:
                dx = px - node_max[node, 0]
            dy = 0.0
            if py < node_min[node, 1]:
                dy = node_min[node, 1] - py
            elif py > node_max[node, 1]:
                dy = py - node_max[node, 1]
            dz = 0.0
            if pz < node_min[node, 2]:
                dz = node_min[node, 2] - pz
            elif pz > node_max[node, 2]:
                dz = pz - node_max[node, 2]
            if dx * dx + dy * dy + dz * dz >= best:
                continue
            if node_left[node] < 0:
                s = node_start[node]
                for k in range(node_count[node]):
                    t = leaf_tris[s + k]
                    qx, qy, qz = closest_point_triangle(
                        tris[t, 0, 0], tris[t, 0, 1], tris[t, 0, 2],
                        tris[t, 1, 0], tris[t, 1, 1], tris[t, 1, 2],
                        tris[t, 2, 0], tris[t, 2, 1], tris[t, 2, 2],
                        px, py, pz)
                    ddx, ddy, ddz = qx - px, qy - py, qz - pz
                    d2 = ddx * ddx + ddy * ddy + ddz * ddz
                    if d2 < best:
                        best = d2
                        best_tri = t
            else:
                stack[top] = node_left[node]
                top += 1
                stack[top] = node_right[node]
                top += 1
        dists[i] = np.sqrt(best)
        tri_ids[i] = best_tri
    return dists, tri_ids


def warm_up():
    """Force compilation of the hot kernels (cached across processes)."""
    vq = np.zeros((2, 10))
    vq[:, 0] = vq[:, 3] = vq[:, 5] = 1.0
    pos = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    edges = np.array([[0, 1]], dtype=np.int64)
    edge_cost_batch(vq, pos, edges, True, COND_LIMIT, PIVOT_REL_TOL)
    channel_residual_sum(np.zeros((1, 15)), 0.0, 0.0, 0.0)
    ids = np.array([[0, 1, 1, -1]], dtype=np.int64)
    counts = np.array([3], dtype=np.int64)
    flip_check(pos, ids, counts, ids, counts, 1, 0, 0.0, 0.0, 0.0)

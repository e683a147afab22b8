import numpy as np
import pytest

from quadreduce import _kernels
from quadreduce.mesh import build_mesh


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    # compile the numba kernels once so timed tests measure steady state
    _kernels.warm_up()


def quad_strip(n, width=1.0):
    """1 x n strip of unit quads in the z=0 plane."""
    verts = [(i * width, 0.0, 0.0) for i in range(n + 1)]
    verts += [(i * width, width, 0.0) for i in range(n + 1)]
    top = n + 1
    faces = [(i, i + 1, top + i + 1, top + i) for i in range(n)]
    return build_mesh(np.array(verts), faces)


def random_hull_mesh(rng, n_points=40):
    """Closed random triangle mesh: convex hull with outward orientation."""
    from scipy.spatial import ConvexHull

    pts = rng.normal(size=(n_points, 3))
    hull = ConvexHull(pts)
    used = sorted(set(hull.simplices.ravel()))
    remap = {v: i for i, v in enumerate(used)}
    centroid = pts[used].mean(axis=0)
    faces = []
    for tri in hull.simplices:
        a, b, c = (pts[v] for v in tri)
        n = np.cross(b - a, c - a)
        if n @ (a - centroid) < 0:
            tri = tri[::-1]
        faces.append(tuple(remap[v] for v in tri))
    return build_mesh(pts[used], faces)


def jittered_tri_sheet(rng, n=12, jitter=0.45):
    """Flat triangulated sheet with interior vertices jittered in-plane."""
    pts = []
    for j in range(n + 1):
        for i in range(n + 1):
            x, y = float(i), float(j)
            if 0 < i < n and 0 < j < n:
                x += rng.uniform(-jitter, jitter)
                y += rng.uniform(-jitter, jitter)
            pts.append((x, y, 0.0))
    faces = []
    s = n + 1
    for j in range(n):
        for i in range(n):
            a = j * s + i
            faces.append((a, a + 1, a + s))
            faces.append((a + 1, a + 1 + s, a + s))
    return build_mesh(np.array(pts), faces)

import numpy as np
import pytest

from quadreduce.mesh import build_mesh
from quadreduce.symmetry import (
    all_symmetry_weights,
    default_delta,
    edge_symmetry_plane,
    symmetry_weight,
    symmetry_weight_brute_force,
)


def mirror_fan():
    """Two triangles sharing an on-plane edge, one wing either side of x=0."""
    pts = [[0, 0, 0], [0, 1, 0], [1, 0.5, 0], [-1, 0.5, 0]]
    return build_mesh(pts, [(0, 1, 2), (1, 0, 3)])


def tent(n=2, height=0.6):
    """Quad tent with its ridge along x = 0 and mirror symmetry across it."""
    pts = []
    for j in range(n + 1):
        y = j / n
        pts += [(-1.0, y, 0.0), (0.0, y, height), (1.0, y, 0.0)]
    faces = []
    for j in range(n):
        a = 3 * j
        faces.append((a, a + 1, a + 4, a + 3))
        faces.append((a + 1, a + 2, a + 5, a + 4))
    return build_mesh(np.array(pts), faces)


class TestEdgeSymmetryPlane:
    def test_tent_ridge_is_the_mirror_plane(self):
        m = tent()
        point, normal = edge_symmetry_plane(m, (1, 4))
        assert abs(normal[0]) == pytest.approx(1.0, abs=1e-9)
        assert point[0] == pytest.approx(0.0, abs=1e-12)

    def test_boundary_edge_of_flat_sheet(self):
        m = build_mesh([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]],
                       [(0, 1, 2, 3)])
        point, normal = edge_symmetry_plane(m, (0, 1))
        # plane contains the edge and the sheet normal
        assert normal[2] == pytest.approx(0.0, abs=1e-12)
        assert abs(normal[1]) == pytest.approx(1.0, abs=1e-12)

    def test_non_manifold_edge_has_no_plane(self):
        m = build_mesh([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1]],
                       [(0, 1, 2), (0, 1, 3), (0, 1, 4)])
        assert edge_symmetry_plane(m, (0, 1)) is None

    def test_opposite_normals_have_no_plane(self):
        # two coincident faces with opposite winding: halfway vector vanishes
        m = build_mesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]],
                       [(0, 1, 2), (0, 2, 1)])
        assert edge_symmetry_plane(m, (0, 1)) is None


class TestSymmetryWeight:
    def test_fully_symmetric_fan(self):
        m = mirror_fan()
        assert symmetry_weight(m, (0, 1), 1e-3) == pytest.approx(1.0)

    def test_displaced_wing_halves_the_weight(self):
        m = mirror_fan()
        delta = 1e-3
        m.vertices[2, 0] += 10 * delta
        assert symmetry_weight(m, (0, 1), delta) == pytest.approx(0.5)

    def test_one_sided_cloud_matches_oracle(self):
        # fan of triangles entirely on x > 0; edge (0, 1) lies on x = 0
        pts = [[0, 0, 0], [0, 1, 0], [1, 0.5, 0], [1.3, 1.1, 0], [0.9, 1.7, 0]]
        m = build_mesh(pts, [(0, 1, 2), (1, 3, 2), (1, 4, 3)])
        delta = 1e-3
        w = symmetry_weight(m, (0, 1), delta)
        assert w == pytest.approx(symmetry_weight_brute_force(m, (0, 1), delta))
        assert w == pytest.approx(2 / 5)  # only the on-plane vertices self-match

    def test_weights_in_unit_interval(self):
        m = tent(3)
        for e, w in all_symmetry_weights(m, default_delta(m)).items():
            assert 0.0 <= w <= 1.0

    def test_non_manifold_edge_weight_zero(self):
        m = build_mesh([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1]],
                       [(0, 1, 2), (0, 1, 3), (0, 1, 4)])
        assert symmetry_weight(m, (0, 1), 0.1) == 0.0


class TestGreedyAgainstBruteForce:
    def test_small_meshes_with_distinct_distances(self):
        rng = np.random.default_rng(3)
        checked = 0
        for _ in range(60):
            npts = int(rng.integers(4, 13))
            pts = rng.uniform(-1, 1, size=(npts, 3))
            faces = [(0, 1, 2)]
            try:
                m = build_mesh(pts, faces)
            except Exception:
                continue
            delta = float(rng.uniform(0.05, 0.4))
            dists = np.abs(pts[:, 0])
            if np.min(np.abs(np.subtract.outer(dists, dists))
                      + np.eye(npts)) < 1e-6:
                continue  # require distinct plane distances
            g = symmetry_weight(m, (0, 1), delta)
            b = symmetry_weight_brute_force(m, (0, 1), delta)
            assert g <= b + 1e-12
            checked += 1
        assert checked >= 30

    def test_structured_pairs_agree_exactly(self):
        # mirror-symmetric clouds with unambiguous pairings; the face keeps
        # the edge plane at x = 0, extra pairs ride along in other faces
        rng = np.random.default_rng(4)
        for _ in range(30):
            k = int(rng.integers(2, 6))
            right = rng.uniform(0.3, 1.5, size=(k, 3))
            pts = [[0, 0, 0], [0, 1, 0], [1, 0.5, 0], [-1, 0.5, 0]]
            faces = [(0, 1, 2), (1, 0, 3)]
            for i, p in enumerate(right):
                pts.append([p[0], p[1], p[2]])
                pts.append([-p[0], p[1], p[2]])
                faces.append((0, 4 + 2 * i, 2))
                faces.append((4 + 2 * i + 1, 0, 3))
            m = build_mesh(np.array(pts), faces)
            delta = 0.01
            g = symmetry_weight(m, (0, 1), delta)
            b = symmetry_weight_brute_force(m, (0, 1), delta)
            assert g == pytest.approx(b)
            assert g == pytest.approx(1.0)


class TestRigidInvariance:
    def test_rotation_translation_preserve_weights(self):
        m = tent(2)
        base = all_symmetry_weights(m, 1e-3)
        theta = 0.43
        rot = np.array([[np.cos(theta), -np.sin(theta), 0],
                        [np.sin(theta), np.cos(theta), 0],
                        [0, 0, 1.0]])
        rot2 = np.array([[1, 0, 0],
                         [0, np.cos(0.7), -np.sin(0.7)],
                         [0, np.sin(0.7), np.cos(0.7)]])
        moved = m.copy()
        moved.vertices[:] = m.vertices @ (rot2 @ rot).T + np.array([3.0, -2.0, 5.0])
        after = all_symmetry_weights(moved, 1e-3)
        for e in base:
            assert abs(base[e] - after[e]) <= 1e-9

    def test_translation_only(self):
        m = mirror_fan()
        base = all_symmetry_weights(m, 1e-3)
        moved = m.copy()
        moved.vertices[:] = m.vertices + np.array([10.0, 20.0, -5.0])
        after = all_symmetry_weights(moved, 1e-3)
        assert base == after


class TestGlobalMirrorArgmax:
    def test_ridge_edges_attain_the_max(self):
        m = tent(4)
        weights = all_symmetry_weights(m, default_delta(m))
        best = max(weights.values())
        ridge = [e for e in weights
                 if abs(m.vertices[e[0]][0]) < 1e-12
                 and abs(m.vertices[e[1]][0]) < 1e-12]
        assert ridge
        for e in ridge:
            assert weights[e] == pytest.approx(best)

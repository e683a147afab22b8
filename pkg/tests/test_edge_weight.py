import numpy as np
import pytest

from quadreduce.decimate import DecimationConfig, decimate
from quadreduce.edge_weight import (
    EdgeWeightInputs,
    batch_edge_weights,
    combined_weight,
    dihedral_weight,
    joint_distance,
)
from quadreduce.mesh import all_face_normals_areas, build_mesh
from quadreduce.quadric import Quadric
from quadreduce.edge_weight import accumulate_edge_quadrics
from quadreduce.synth import grid, subdivided_cube

from conftest import jittered_tri_sheet


def bent_pair(angle):
    """Two triangles sharing edge (1, 2), the second one tilted by angle."""
    c, s = np.cos(angle), np.sin(angle)
    pts = [[0, 0, 0], [1, 0, 0], [1, 1, 0], [1 + c, 0, s], [1 + c, 1, s]]
    return build_mesh(pts, [(0, 2, 1), (1, 2, 4, 3)])


class TestDihedralWeight:
    def test_coplanar(self):
        m = bent_pair(0.0)
        assert dihedral_weight(m, (1, 2)) == pytest.approx(0.0, abs=1e-7)

    def test_perpendicular(self):
        m = bent_pair(np.pi / 2)
        assert dihedral_weight(m, (1, 2)) == pytest.approx(0.5)

    def test_boundary_edge(self):
        m = bent_pair(0.3)
        assert dihedral_weight(m, (0, 1)) == 1.0

    def test_range(self):
        rng = np.random.default_rng(0)
        for _ in range(25):
            m = bent_pair(rng.uniform(0, np.pi))
            assert 0.0 <= dihedral_weight(m, (1, 2)) <= 1.0


class TestJointDistance:
    def test_identical(self):
        assert joint_distance([(0, 0.5), (1, 0.5)], [(0, 0.5), (1, 0.5)]) == 0.0

    def test_disjoint(self):
        assert joint_distance([(0, 1.0)], [(1, 1.0)]) == 1.0

    def test_partial_overlap_expansion(self):
        alpha, beta = 0.7, 0.2
        d = joint_distance([(0, alpha), (1, 1 - alpha)], [(1, beta), (2, 1 - beta)])
        assert d == pytest.approx(0.5 * (alpha + abs((1 - alpha) - beta) + (1 - beta)))

    def test_metric_properties(self):
        rng = np.random.default_rng(1)

        def random_dist():
            ids = rng.choice(8, size=rng.integers(1, 5), replace=False)
            w = rng.random(len(ids))
            w /= w.sum()
            return [(int(i), float(x)) for i, x in zip(ids, w)]

        for _ in range(200):
            a, b, c = random_dist(), random_dist(), random_dist()
            dab = joint_distance(a, b)
            assert 0.0 <= dab <= 1.0 + 1e-12
            assert dab == pytest.approx(joint_distance(b, a))
            assert joint_distance(a, a) == pytest.approx(0.0)
            assert dab <= joint_distance(a, c) + joint_distance(c, b) + 1e-12


class TestCombinedWeight:
    def test_floor(self):
        assert combined_weight(EdgeWeightInputs()) == 0.01

    def test_symmetry_dominates(self):
        w = combined_weight(EdgeWeightInputs(dihedral_w=0.5, sym_s=0.9, lambda_sym=1.0))
        assert w == 0.9

    def test_joint_dominates(self):
        w = combined_weight(EdgeWeightInputs(joint_d=1.0, lambda_joint=1.0))
        assert w == 1.0


class TestAccumulateEdgeQuadrics:
    def test_plane_contains_both_endpoints(self):
        m = grid(2, 1)
        quadrics = [Quadric() for _ in range(len(m.vertices))]
        accumulate_edge_quadrics(m, (1, 4), 0.3, quadrics)
        assert quadrics[1].eval(m.vertices[1]) == pytest.approx(0.0, abs=1e-12)
        assert quadrics[1].eval(m.vertices[4]) == pytest.approx(0.0, abs=1e-12)

    def test_tangent_penalty_strength(self):
        # interior unit edge on a flat sheet: one plane per incident face,
        # each weighing w * len = 0.01
        m = grid(2, 2)
        e = (4, 7)  # vertical interior edge of the 3x3 vertex grid
        assert len(m.edge_map[e]) == 2
        quadrics = [Quadric() for _ in range(len(m.vertices))]
        accumulate_edge_quadrics(m, e, 0.01, quadrics)
        edge_dir = m.vertices[7] - m.vertices[4]
        tangent = np.array([edge_dir[1], -edge_dir[0], 0.0])
        tangent /= np.linalg.norm(tangent)
        off = 0.25
        val = quadrics[4].eval(m.vertices[4] + off * tangent)
        assert val == pytest.approx(0.01 * off ** 2 * 2, rel=1e-9)

    def test_boundary_edge_adds_one_plane(self):
        m = grid(2, 1)
        e = (0, 1)
        assert len(m.edge_map[e]) == 1
        quadrics = [Quadric() for _ in range(len(m.vertices))]
        accumulate_edge_quadrics(m, e, 1.0, quadrics)
        # rank-1 accumulation: a single plane
        assert np.linalg.matrix_rank(quadrics[0].A, tol=1e-9) == 1


class TestBatchEdgeWeights:
    def test_flat_grid_floors(self):
        m = grid(3, 3)
        w = batch_edge_weights(m, DecimationConfig(target_ratio=0.5))
        interior = [e for e in m.edge_map if len(m.edge_map[e]) == 2]
        assert all(w[e] == pytest.approx(0.01) for e in interior)

    def test_cube_crease_edges(self):
        m = subdivided_cube(1)
        w = batch_edge_weights(m, DecimationConfig(target_ratio=0.5))
        assert all(v == pytest.approx(0.5) for v in w.values())

    def test_uniform_mode(self):
        m = subdivided_cube(2)
        cfg = DecimationConfig(target_ratio=0.5, edge_weight_mode="uniform")
        w = batch_edge_weights(m, cfg)
        assert set(w.values()) == {1.0}

    def test_none_mode(self):
        m = subdivided_cube(2)
        cfg = DecimationConfig(target_ratio=0.5, edge_weight_mode="none")
        w = batch_edge_weights(m, cfg)
        assert set(w.values()) == {0.0}


class TestWeightModeAblation:
    def test_dihedral_avoids_flips_none_attempts_them(self):
        # on an irregular coplanar sheet, unweighted quadrics leave the
        # in-plane placement undetermined; the engine's fallback then tries
        # endpoint placements whose flips the validity gate must catch
        rng = np.random.default_rng(7)
        m = jittered_tri_sheet(rng, n=14)
        res_none = decimate(m, DecimationConfig(
            target_ratio=0.12, edge_weight_mode="none"))
        res_dih = decimate(m, DecimationConfig(
            target_ratio=0.12, edge_weight_mode="dihedral"))
        assert res_none.blocked_attempts >= 1
        assert res_dih.blocked_attempts < res_none.blocked_attempts
        # no flipped faces may survive in either output
        for res in (res_none, res_dih):
            normals, areas = all_face_normals_areas(res.mesh)
            live = [i for i, f in enumerate(res.mesh.faces) if f is not None]
            assert all(normals[i][2] > 0.0 or areas[i] == 0.0 for i in live)

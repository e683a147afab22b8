import numpy as np
import pytest

from quadreduce.mesh import build_mesh
from quadreduce.quadric import (
    Quadric,
    collapse_cost,
    face_quadric,
    optimal_position,
    plane_quadric,
)


def brute_force_error(planes, x):
    """Independent oracle: sum of squared plane distances."""
    x = np.asarray(x, dtype=float)
    return sum(float(n @ (x - p)) ** 2 for p, n in planes)


def random_planes(rng, k):
    normals = rng.normal(size=(k, 3))
    normals /= np.linalg.norm(normals, axis=1)[:, None]
    points = rng.uniform(-2, 2, size=(k, 3))
    return list(zip(points, normals))


class TestPlaneQuadric:
    def test_point_in_plane(self):
        q = plane_quadric([0, 0, 0], [0, 0, 1])
        assert q.eval([1, 2, 0]) == pytest.approx(0.0, abs=1e-15)

    def test_squared_distance(self):
        q = plane_quadric([0, 0, 0], [0, 0, 1])
        assert q.eval([0, 0, -3]) == pytest.approx(9.0)

    def test_offset_plane(self):
        q = plane_quadric([1, 1, 1], [1, 0, 0])
        assert q.eval([4, 9, 9]) == pytest.approx(9.0)

    def test_rejects_non_unit_normal(self):
        with pytest.raises(ValueError):
            plane_quadric([0, 0, 0], [0, 0, 2])

    def test_matches_brute_force_on_random_planes(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            planes = random_planes(rng, 5)
            q = Quadric()
            for p, n in planes:
                q += plane_quadric(p, n)
            x = rng.uniform(-3, 3, size=3)
            assert q.eval(x) == pytest.approx(brute_force_error(planes, x),
                                              rel=1e-9, abs=1e-12)


class TestEval:
    def test_zero_quadric(self):
        assert Quadric().eval([3.0, -1.0, 2.0]) == 0.0

    def test_additivity(self):
        q = plane_quadric([0, 0, 0], [0, 0, 1]) + plane_quadric([0, 0, 0], [0, 0, 1])
        assert q.eval([0, 0, 1]) == pytest.approx(2.0)

    def test_nonnegative_and_zero_only_on_plane(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            p = rng.uniform(-2, 2, size=3)
            n = rng.normal(size=3)
            n /= np.linalg.norm(n)
            q = plane_quadric(p, n)
            x = rng.uniform(-3, 3, size=3)
            val = q.eval(x)
            assert val >= -1e-12
            on_plane = x - n * (n @ (x - p))
            assert q.eval(on_plane) == pytest.approx(0.0, abs=1e-12)

    def test_translation_equivariance(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            p = rng.uniform(-1, 1, size=3)
            n = rng.normal(size=3)
            n /= np.linalg.norm(n)
            x = rng.uniform(-2, 2, size=3)
            t = rng.uniform(-5, 5, size=3)
            a = plane_quadric(p, n).eval(x)
            b = plane_quadric(p + t, n).eval(x + t)
            assert b == pytest.approx(a, rel=1e-10, abs=1e-12)


class TestFaceQuadric:
    def test_unit_square(self):
        mesh = build_mesh([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]],
                          [(0, 1, 2, 3)])
        q = face_quadric(mesh, 0)
        assert q.eval([0.5, 0.5, 2.0]) == pytest.approx(4.0)

    def test_area_weighting(self):
        mesh = build_mesh([[0, 0, 0], [2, 0, 0], [2, 2, 0], [0, 2, 0]],
                          [(0, 1, 2, 3)])
        q = face_quadric(mesh, 0)
        assert q.eval([1.0, 1.0, 1.0]) == pytest.approx(4.0)

    def test_triangle(self):
        mesh = build_mesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [(0, 1, 2)])
        q = face_quadric(mesh, 0)
        assert q.eval([0.2, 0.2, 2.0]) == pytest.approx(2.0)

    def test_degenerate_face_yields_zero(self):
        mesh = build_mesh([[0, 0, 0], [1, 0, 0], [2, 0, 0]], [(0, 1, 2)])
        q = face_quadric(mesh, 0)
        assert q.eval([5.0, 5.0, 5.0]) == 0.0


class TestOptimalPosition:
    def test_three_orthogonal_planes(self):
        q = (plane_quadric([0, 0, 0], [1, 0, 0])
             + plane_quadric([0, 0, 0], [0, 1, 0])
             + plane_quadric([0, 0, 0], [0, 0, 1]))
        x = optimal_position(q, [1, 1, 1], [2, 2, 2])
        assert np.allclose(x, [0, 0, 0], atol=1e-12)

    def test_rank_deficient_midpoint_fallback(self):
        q = plane_quadric([0, 0, 0], [0, 0, 1]) + plane_quadric([0, 0, 1], [0, 0, 1])
        e0 = np.array([0.0, 0.0, 0.0])
        e1 = np.array([0.0, 0.0, 1.0])
        x = optimal_position(q, e0, e1)
        # candidates evaluate: e0 -> 1.0, e1 -> 1.0, midpoint -> 0.5
        assert np.allclose(x, [0, 0, 0.5])

    def test_tie_prefers_first_endpoint(self):
        q = plane_quadric([0, 0, 0], [0, 0, 1])
        x = optimal_position(q, [1, 2, 0], [3, 4, 0])
        assert np.allclose(x, [1, 2, 0])

    def test_gradient_vanishes_at_solution(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            q = Quadric()
            for p, n in random_planes(rng, 6):
                q += plane_quadric(p, n)
            x = optimal_position(q, rng.uniform(-1, 1, 3), rng.uniform(-1, 1, 3))
            h = 1e-5
            grad = np.empty(3)
            for i in range(3):
                dx = np.zeros(3)
                dx[i] = h
                grad[i] = (q.eval(x + dx) - q.eval(x - dx)) / (2 * h)
            assert np.linalg.norm(grad) <= 1e-8 * (1.0 + np.linalg.norm(q.b))


class TestCollapseCost:
    def test_endpoints_on_own_planes_makes_modes_agree(self):
        # anchored construction: each endpoint quadric passes through it
        e0 = np.array([0.0, 0.0, 0.0])
        e1 = np.array([1.0, 0.0, 0.0])
        q0 = plane_quadric(e0, [0, 0, 1]) + plane_quadric(e0, [0, 1, 0])
        q1 = plane_quadric(e1, [0, 0, 1]) + plane_quadric(e1, [1, 0, 0])
        v = np.array([0.3, 0.4, 0.5])
        new = collapse_cost(q0, q1, e0, e1, v, "new")
        orig = collapse_cost(q0, q1, e0, e1, v, "original")
        assert new == pytest.approx(orig, rel=1e-12)

    def test_plane_pair(self):
        q = plane_quadric([0, 0, 0], [0, 0, 1])
        e0 = np.array([1.0, 0.0, 0.0])
        e1 = np.array([0.0, 1.0, 0.0])
        v = np.array([0.0, 0.0, 1.0])
        assert collapse_cost(q, q, e0, e1, v, "new") == pytest.approx(2.0)
        assert collapse_cost(q, q, e0, e1, v, "original") == pytest.approx(2.0)

    def test_paid_error_is_subtracted(self):
        # endpoint e0 sits off its accumulated planes by a known residual
        e0 = np.array([0.0, 0.0, 0.3 ** 0.5])
        e1 = np.array([1.0, 0.0, 0.0])
        q0 = plane_quadric([0, 0, 0], [0, 0, 1])   # q0(e0) = 0.3
        q1 = plane_quadric(e1, [1, 0, 0])           # q1(e1) = 0
        v = np.array([0.0, 0.0, 0.0])
        orig = collapse_cost(q0, q1, e0, e1, v, "original")
        new = collapse_cost(q0, q1, e0, e1, v, "new")
        assert q0.eval(e0) == pytest.approx(0.3)
        assert new == pytest.approx(orig - 0.3)

    def test_new_cost_can_go_negative(self):
        # error already paid at e0 exceeds the error at the placement
        e0 = np.array([0.0, 0.0, 0.3 ** 0.5])
        e1 = np.array([1.0, 0.0, 0.0])
        q0 = plane_quadric([0, 0, 0], [0, 0, 1])
        q1 = plane_quadric(e1, [1, 0, 0])
        assert collapse_cost(q0, q1, e0, e1, e1, "new") == pytest.approx(-0.3)

    def test_modes_share_argmin(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            q0 = Quadric()
            q1 = Quadric()
            for p, n in random_planes(rng, 4):
                q0 += plane_quadric(p, n)
            for p, n in random_planes(rng, 4):
                q1 += plane_quadric(p, n)
            e0 = rng.uniform(-1, 1, 3)
            e1 = rng.uniform(-1, 1, 3)
            x = optimal_position(q0 + q1, e0, e1)
            # the subtracted term is constant in v, so the argmin is shared
            assert collapse_cost(q0, q1, e0, e1, x, "new") <= min(
                collapse_cost(q0, q1, e0, e1, e0, "new"),
                collapse_cost(q0, q1, e0, e1, e1, "new")) + 1e-12

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError):
            collapse_cost(Quadric(), Quadric(), [0, 0, 0], [1, 0, 0],
                          [0, 0, 0], "memoryless")

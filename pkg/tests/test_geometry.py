"""Level-set tracing, frame conventions, and the tube map."""

import numpy as np
import pytest

from wallwave.errors import DegenerateGradient, NoConvergence, OutOfRange, OutsideTube
from wallwave.geometry import (
    DomainWall,
    RectificationMap,
    default_eta,
    trace_level_set,
    wall_slope,
)


class TestFlatWall:
    def test_identity_frame(self, flat_curve):
        # gamma(xt) = (xt, 0), tau = (1, 0), nu = (0, 1), k = 0, mu = 1
        xs = np.linspace(-3.0, 3.0, 17)
        g = flat_curve.gamma(xs)
        assert np.allclose(g[:, 0], xs, atol=1e-10)
        assert np.allclose(g[:, 1], 0.0, atol=1e-12)
        assert np.allclose(flat_curve.tangent(xs), [1.0, 0.0], atol=1e-10)
        assert np.allclose(flat_curve.normal(xs), [0.0, 1.0], atol=1e-10)
        assert np.allclose(flat_curve.curvature_at(xs), 0.0, atol=1e-10)
        assert np.allclose(flat_curve.slope(xs), 1.0, atol=1e-12)
        assert not flat_curve.closed

    def test_identity_rectification(self, flat_curve):
        rmap = RectificationMap(flat_curve, eta=0.5)
        p = rmap.forward(np.asarray(3.0), np.asarray(0.05))
        assert np.allclose(p, [3.0, 0.05], atol=1e-12)
        xt, yt = rmap.inverse(3.0, 0.05)
        assert abs(xt - 3.0) < 1e-10 and abs(yt - 0.05) < 1e-10

    def test_out_of_range(self, flat_curve):
        with pytest.raises(OutOfRange):
            flat_curve.slope(10.0)


class TestCircleWall:
    def test_closure_and_length(self, circle_curve):
        assert circle_curve.closed
        assert abs(circle_curve.total_length - 2.0 * np.pi) < 1e-8

    def test_slope_is_two(self, circle_curve):
        # |grad kappa| = 2 on the unit circle (hand computation)
        assert np.allclose(circle_curve.mu, 2.0, atol=1e-9)
        xs = np.linspace(0, circle_curve.total_length, 50)
        assert np.allclose(circle_curve.slope(xs), 2.0, atol=1e-9)

    def test_slope_scales_with_radius(self):
        wall = DomainWall.circle(1.7)
        cur = trace_level_set(wall, (1.7, 0.0), step=0.01)
        assert np.allclose(cur.mu, 2.0 * 1.7, atol=1e-8)
        assert abs(cur.total_length - 2.0 * np.pi * 1.7) < 1e-7

    def test_signed_curvature_and_jacobian(self, circle_curve, circle_map):
        # Outward normal + positively oriented frame => clockwise arclength,
        # signed curvature -1/R, Jacobian 1 - yt k = 1 + yt growing outward.
        assert np.allclose(circle_curve.curvature, -1.0, atol=1e-9)
        assert np.all(circle_map.jacobian(np.array([0.3]), np.array([0.1])) > 1.0)

    def test_orientation_invariants(self, circle_curve):
        det = circle_curve.tau[:, 0] * circle_curve.nu[:, 1] \
            - circle_curve.tau[:, 1] * circle_curve.nu[:, 0]
        assert np.max(np.abs(det - 1.0)) <= 1e-12
        norms_t = np.hypot(circle_curve.tau[:, 0], circle_curve.tau[:, 1])
        norms_n = np.hypot(circle_curve.nu[:, 0], circle_curve.nu[:, 1])
        assert np.max(np.abs(norms_t - 1.0)) <= 1e-12
        assert np.max(np.abs(norms_n - 1.0)) <= 1e-12
        dots = np.sum(circle_curve.tau * circle_curve.nu, axis=1)
        assert np.max(np.abs(dots)) <= 1e-12

    def test_on_curve(self, circle_wall, circle_curve):
        k = circle_wall.kappa(circle_curve.points[:, 0], circle_curve.points[:, 1])
        assert np.max(np.abs(k)) < 1e-10

    def test_phi_forward_values(self, circle_map):
        # seed (1,0) is arclength 0; clockwise: pi/2 -> (0,-1), 3pi/2 -> (0,1)
        assert np.allclose(circle_map.forward(np.asarray(0.0), np.asarray(0.1)), [1.1, 0.0], atol=1e-9)
        assert np.allclose(circle_map.forward(np.asarray(np.pi / 2), np.asarray(0.0)), [0.0, -1.0], atol=1e-9)
        assert np.allclose(circle_map.forward(np.asarray(3 * np.pi / 2), np.asarray(0.0)), [0.0, 1.0], atol=1e-9)

    def test_phi_inverse_values(self, circle_map):
        xt, yt = circle_map.inverse(0.0, 1.1)
        assert abs(xt - 3 * np.pi / 2) < 1e-8
        assert abs(yt - 0.1) < 1e-9

    def test_center_outside_tube(self, circle_map):
        assert circle_map.eta < 0.5
        with pytest.raises(OutsideTube):
            circle_map.inverse(0.0, 0.0)

    def test_forward_rejects_beyond_tube(self, circle_map):
        with pytest.raises(OutsideTube):
            circle_map.forward(np.asarray(0.0), np.asarray(2.5 * circle_map.eta))

    def test_default_eta_rule(self, circle_curve):
        # min(0.4/max|k|, boundary distance)/2 = min(0.4, 0.8)/2 = 0.2
        assert abs(default_eta(circle_curve) - 0.2) < 1e-6

    def test_arclength_mod_reduction(self, circle_map):
        L = circle_map.curve.total_length
        p1 = circle_map.forward(np.asarray(1.0), np.asarray(0.1))
        p2 = circle_map.forward(np.asarray(1.0 + 2 * L), np.asarray(0.1))
        assert np.allclose(p1, p2, atol=1e-10)

    def test_theta_continuity_and_winding(self, circle_curve):
        xs = np.linspace(-7.0, 7.0, 4001)
        th = circle_curve.theta_at(xs)
        assert np.max(np.abs(np.diff(th))) < 0.02
        L = circle_curve.total_length
        assert abs((circle_curve.theta_at(np.asarray(L + 0.3))
                    - circle_curve.theta_at(np.asarray(0.3))) + 2 * np.pi) < 1e-8


class TestTraceErrors:
    def test_seed_far_from_curve(self, circle_wall):
        with pytest.raises(NoConvergence):
            trace_level_set(circle_wall, (5.0, 5.0))

    def test_seed_close_but_outside_reach(self):
        wall = DomainWall.circle(1.0, bounds=(-8, 8, -8, 8))
        with pytest.raises(NoConvergence):
            trace_level_set(wall, (5.0, 5.0))

    def test_degenerate_gradient_at_seed(self):
        wall = DomainWall.from_expression("x**2 + y**2", (-1, 1, -1, 1))
        with pytest.raises(DegenerateGradient):
            trace_level_set(wall, (0.0, 0.0))


class TestProperties:
    def test_inverse_roundtrip_1000_points(self, circle_map, rng):
        L = circle_map.curve.total_length
        xts = rng.uniform(0.0, L, 1000)
        yts = rng.uniform(-2 * circle_map.eta, 2 * circle_map.eta, 1000)
        pts = circle_map.forward(xts, yts)
        xt2, yt2, ok = circle_map.inverse_array(pts[:, 0], pts[:, 1])
        assert ok.all()
        pts2 = circle_map.forward(xt2, yt2)
        assert np.max(np.hypot(*(pts - pts2).T)) <= 1e-10
        assert np.max(np.abs(yt2 - yts)) <= 1e-10

    def test_wall_taylor_quadratic(self, circle_wall, circle_curve, rng):
        # |kappa(Phi(xt, yt)) - yt mu(xt)| <= C yt^2: halving yt quarters it
        rmap = RectificationMap(circle_curve)
        xs = rng.uniform(0.0, circle_curve.total_length, 300)
        defects = []
        for h in (0.1, 0.05):
            p = rmap.forward(xs, np.full_like(xs, h))
            d = np.abs(circle_wall.kappa(p[:, 0], p[:, 1]) - h * circle_curve.slope(xs))
            defects.append(np.max(d))
        ratio = defects[0] / defects[1]
        assert 4.0 / 1.5 <= ratio <= 4.0 * 1.5

    def test_arclength_fidelity(self, circle_curve):
        xs = np.linspace(0, circle_curve.total_length, 1234)
        d = circle_curve._gamma(xs, 1)
        assert np.max(np.abs(np.hypot(d[:, 0], d[:, 1]) - 1.0)) <= 1e-8

    def test_open_curve_arclength_fidelity(self):
        wall = DomainWall.from_expression("y - 0.3*sin(2*x)", (-3, 3, -2, 2))
        cur = trace_level_set(wall, (0.0, 0.0), step=0.005)
        xs = np.linspace(cur.x[0] + 0.1, cur.x[-1] - 0.1, 501)
        d = cur._gamma(xs, 1)
        assert np.max(np.abs(np.hypot(d[:, 0], d[:, 1]) - 1.0)) <= 1e-8
        # slope of this wall on Gamma varies; all samples positive
        assert cur.mu.min() > 0

    def test_wall_slope_alias(self, circle_curve):
        assert abs(wall_slope(circle_curve, 0.7) - 2.0) < 1e-9


def test_csv_export(tmp_path, circle_curve):
    path = tmp_path / "curve.csv"
    circle_curve.to_csv(path)
    header = path.read_text().splitlines()[0]
    assert header == "xt,x,y,taux,tauy,nux,nuy,k,mu"
    rows = path.read_text().splitlines()[1:]
    assert len(rows) == len(circle_curve.x)

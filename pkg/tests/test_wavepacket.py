"""Wavepacket assembly, pushforward, closed forms, and stationary phase."""

import warnings

import numpy as np
import pytest
from scipy.integrate import quad

from wallwave.eikonal import solve_phase
from wallwave.errors import EmptySupport, InvalidBranch, UnderResolvedQuadrature, ValidityWarning
from wallwave.fields import Field, GridSpec2D
from wallwave.geometry import DomainWall, RectificationMap, trace_level_set
from wallwave.spectral import Model, ModelSpec, dirac_branch, kg_branch
from wallwave.wavepacket import (
    Envelope,
    RealEnvelope,
    WavepacketSpec,
    assemble_pair_rectified,
    assemble_rectified,
    evaluate_physical,
    fft_synthesis_t0,
    max_amplitude_decay,
    push_forward,
    quadrature_oracle,
    relativistic_mode,
    relativistic_pair,
    stationary_phase_eval,
)

EPS = 1e-2
MS = ModelSpec(Model.DIRAC, EPS)
MSK = ModelSpec(Model.KLEIN_GORDON, EPS)


@pytest.fixture(scope="module")
def flat_spec(flat_curve):
    ph = solve_phase(MS, dirac_branch(1, +1), flat_curve, 0.0, (-4.5, 4.5))
    env = Envelope.gaussian(1.0, 0.35)
    return WavepacketSpec(model=MS, branch=dirac_branch(1, +1), phase=ph, envelope=env, x0=0.0)


class TestEnvelopes:
    def test_gaussian_normalized(self):
        env = Envelope.gaussian(0.7, 0.4)
        val = quad(lambda s: float(env(np.asarray(s))) ** 2, *env.support)[0]
        assert abs(val - 1.0) < 1e-8

    def test_gaussian_boundary_decay(self):
        env = Envelope.gaussian(0.0, 1.0)
        assert abs(float(env(np.asarray(env.support[1])))) < 1e-14

    def test_bump_normalized_compact(self):
        env = Envelope.bump(0.5, 1.5)
        val = quad(lambda s: float(env(np.asarray(s))) ** 2, 0.5, 1.5, limit=200)[0]
        assert abs(val - 1.0) < 1e-8
        assert float(env(np.asarray(0.499))) == 0.0
        assert float(env(np.asarray(1.501))) == 0.0

    def test_bump_needs_interval(self):
        with pytest.raises(EmptySupport):
            Envelope.bump(1.0, 1.0)

    def test_real_gaussian_derivative(self):
        env = RealEnvelope.gaussian(0.8, carrier=1.5)
        h = 1e-6
        x = np.asarray(0.3)
        fd = (env(x + h) - env(x - h)) / (2 * h)
        assert abs(fd - env.derivative(x)) < 1e-8


class TestAssembly:
    def test_t0_matches_fft_synthesis(self, flat_spec):
        yt = np.linspace(-0.7, 0.7, 41)
        xn, vals = fft_synthesis_t0(flat_spec, yt, n_xi=4096)
        sel = (xn > -1.2) & (xn < 1.2)
        rect = assemble_rectified(flat_spec, 0.0, xn[sel], yt)
        err = np.max(np.abs(rect.values - vals[:, sel, :]))
        assert err / np.max(np.abs(rect.values)) < 1e-8

    def test_t1_matches_adaptive_quadrature(self, flat_spec, rng):
        # independent oracle: QUADPACK at 10 random points
        xs = rng.uniform(-0.8, 0.8, 10)
        ys = rng.uniform(-0.25, 0.25, 10)
        worst = 0.0
        for x, y in zip(xs, ys):
            r = assemble_rectified(flat_spec, 1.0, np.array([x]), np.array([y]))
            q = quadrature_oracle(flat_spec, 1.0, float(x), float(y))
            worst = max(worst, float(np.max(np.abs(r.values[:, 0, 0] - q)) / np.max(np.abs(q))))
        assert worst < 1e-7

    def test_norm_constant_in_time(self, flat_spec):
        yt = np.linspace(-0.9, 0.9, 121)
        xt = np.linspace(-2.6, 2.6, 801)
        norms = [assemble_rectified(flat_spec, t, xt, yt).l2_norm() for t in (0.0, 0.5, 1.0)]
        assert max(norms) / min(norms) - 1.0 < 0.01

    def test_under_resolved_budget(self, flat_spec):
        with pytest.raises(UnderResolvedQuadrature):
            assemble_rectified(flat_spec, 1.0, np.array([0.0]), np.array([0.0]), max_nodes=10)

    def test_horizon_warning(self, flat_spec):
        with pytest.warns(ValidityWarning):
            assemble_rectified(flat_spec, 9.0, np.array([0.0]), np.array([0.0]))

    def test_kg_pair_time_derivative(self, flat_curve):
        ph = solve_phase(MSK, kg_branch(1, +1), flat_curve, 0.0, (0.4, 1.6))
        spec = WavepacketSpec(model=MSK, branch=kg_branch(1, +1), phase=ph,
                              envelope=Envelope.bump(0.5, 1.5), x0=0.0)
        xt = np.linspace(-0.4, 0.4, 9)
        yt = np.linspace(-0.3, 0.3, 9)
        v, w = assemble_pair_rectified(spec, 0.2, xt, yt)
        h = 1e-5
        vp = assemble_rectified(spec, 0.2 + h, xt, yt)
        vm = assemble_rectified(spec, 0.2 - h, xt, yt)
        fd = EPS * (vp.values - vm.values) / (2 * h)
        assert np.max(np.abs(fd - w.values)) / np.max(np.abs(w.values)) < 1e-6


class TestRelativisticModes:
    def test_flat_dirac_u0_closed_form(self, flat_curve):
        rmap = RectificationMap(flat_curve, eta=0.5)
        grid = GridSpec2D.from_box((-2.0, 2.0), (-1.0, 1.0), 256, 128)
        env = RealEnvelope.gaussian(1.0)
        t = 0.4
        fld = relativistic_mode(MS, dirac_branch(0), rmap, env, 0.0, t, grid)
        X, Y = grid.meshgrid()
        sq = np.sqrt(EPS)
        ref = (
            EPS**-0.5
            * np.asarray(env((X + t) / sq))
            * np.pi**-0.25 * np.exp(-0.5 * (Y / sq) ** 2)
        )
        assert np.allclose(fld.values[0], ref / np.sqrt(2), atol=1e-7 * np.max(np.abs(ref)))
        assert np.allclose(fld.values[1], -ref / np.sqrt(2), atol=1e-7 * np.max(np.abs(ref)))

    def test_flat_kg_both_directions(self, flat_curve):
        rmap = RectificationMap(flat_curve, eta=0.5)
        grid = GridSpec2D.from_box((-2.0, 2.0), (-1.0, 1.0), 256, 128)
        env = RealEnvelope.gaussian(1.0)
        t = 0.4
        X, Y = grid.meshgrid()
        sq = np.sqrt(EPS)
        gauss = np.pi**-0.25 * np.exp(-0.5 * (Y / sq) ** 2)
        for s in (+1, -1):
            fld = relativistic_mode(MSK, kg_branch(0, s), rmap, env, 0.0, t, grid)
            ref = EPS**-0.5 * np.asarray(env((X - s * t) / sq)) * gauss
            assert np.max(np.abs(fld.values[0] - ref)) < 1e-7 * np.max(np.abs(ref))

    def test_invalid_branch(self, circle_map):
        grid = GridSpec2D.from_box((-1.6, 1.6), (-1.6, 1.6), 64, 64)
        with pytest.raises(InvalidBranch):
            relativistic_mode(MS, dirac_branch(1, +1), circle_map,
                              RealEnvelope.gaussian(1.0), 0.0, 0.0, grid)

    def test_circle_circulation(self, circle_map):
        # center moves clockwise-positive arclength backwards: speed -1
        grid = GridSpec2D.from_box((-1.6, 1.6), (-1.6, 1.6), 192, 192)
        env = RealEnvelope.gaussian(0.6)
        from wallwave.pde import observables

        f0 = relativistic_mode(MS, dirac_branch(0), circle_map, env, 0.0, 0.0, grid)
        f1 = relativistic_mode(MS, dirac_branch(0), circle_map, env, 0.0, 0.5, grid)
        c0 = observables(f0, circle_map)["center"]
        c1 = observables(f1, circle_map)["center"]
        L = circle_map.curve.total_length
        delta = (c1 - c0 + L / 2) % L - L / 2
        assert abs(delta + 0.5) < 5e-3

    def test_kg_pair_consistency(self, flat_curve):
        rmap = RectificationMap(flat_curve, eta=0.5)
        grid = GridSpec2D.from_box((-2.0, 2.0), (-1.0, 1.0), 128, 64)
        env = RealEnvelope.gaussian(1.0)
        u, du = relativistic_pair(MSK, kg_branch(0, -1), rmap, env, 0.0, 0.3, grid)
        h = 1e-5
        up = relativistic_mode(MSK, kg_branch(0, -1), rmap, env, 0.0, 0.3 + h, grid)
        um = relativistic_mode(MSK, kg_branch(0, -1), rmap, env, 0.0, 0.3 - h, grid)
        fd = EPS * (up.values - um.values) / (2 * h)
        assert np.max(np.abs(fd - du.values)) < 1e-7 * np.max(np.abs(du.values)) + 1e-12


class TestPushForward:
    def test_flat_identity_sampling(self, flat_spec, flat_curve):
        rmap = RectificationMap(flat_curve, eta=0.5)
        xt = np.linspace(-1.5, 1.5, 301)
        yt = np.linspace(-0.5, 0.5, 101)
        rect = assemble_rectified(flat_spec, 0.3, xt, yt)
        grid = GridSpec2D.from_box((xt[0], xt[-1]), (yt[0], yt[-1]), 280, 96)
        fld = push_forward(rmap, rect, grid)
        direct = assemble_rectified(flat_spec, 0.3, grid.x, grid.y)
        num = np.max(np.abs(fld.values - direct.values))
        assert num / np.max(np.abs(direct.values)) < 2e-4  # bicubic interpolation error

    def test_circle_centered_at_seed(self, circle_map):
        # packet assembled around xt=0 appears at (1, 0)
        eps = 4e-3
        ms = ModelSpec(Model.DIRAC, eps)
        curve = circle_map.curve
        ph = solve_phase(ms, dirac_branch(1, +1), curve, 0.0, (-2.0, 4.0))
        spec = WavepacketSpec(model=ms, branch=dirac_branch(1, +1), phase=ph,
                              envelope=Envelope.gaussian(1.0, 0.3), x0=0.0)
        sq = np.sqrt(eps)
        xt = np.arange(-0.8, 0.8, sq / 8)
        yt = np.arange(-2 * circle_map.eta, 2 * circle_map.eta, sq / 8)
        rect = assemble_rectified(spec, 0.0, xt, yt)
        grid = GridSpec2D.from_box((-1.6, 1.6), (-1.6, 1.6), 256, 256)
        fld = push_forward(circle_map, rect, grid)
        dens = fld.pointwise_abs() ** 2
        i, j = np.unravel_index(np.argmax(dens), dens.shape)
        assert abs(grid.x[i] - 1.0) < 0.05 and abs(grid.y[j]) < 0.05

    def test_norm_preserved_with_jacobian(self, circle_map):
        eps = 1e-3
        ms = ModelSpec(Model.DIRAC, eps)
        curve = circle_map.curve
        ph = solve_phase(ms, dirac_branch(1, +1), curve, 0.0, (-2.0, 4.0))
        spec = WavepacketSpec(model=ms, branch=dirac_branch(1, +1), phase=ph,
                              envelope=Envelope.gaussian(1.0, 0.3), x0=0.0)
        sq = np.sqrt(eps)
        xt = np.arange(-0.7, 0.7, sq / 8)
        yt = np.arange(-2 * circle_map.eta, 2 * circle_map.eta, sq / 8)
        rect = assemble_rectified(spec, 0.0, xt, yt)
        grid = GridSpec2D.from_box((-1.6, 1.6), (-1.6, 1.6), 1024, 1024)
        fld = push_forward(circle_map, rect, grid)
        # ||u||_{L2} = ||v sqrt(1 - yt k)|| within 1e-3 (discrete Jacobian oracle)
        weighted = rect.l2_norm(jacobian_curve=curve)
        assert abs(fld.l2_norm() - weighted) / weighted < 1e-3

    def test_evaluate_physical_matches_push_forward(self, circle_map):
        eps = 4e-3
        ms = ModelSpec(Model.DIRAC, eps)
        curve = circle_map.curve
        ph = solve_phase(ms, dirac_branch(1, +1), curve, 0.0, (-2.0, 4.0))
        spec = WavepacketSpec(model=ms, branch=dirac_branch(1, +1), phase=ph,
                              envelope=Envelope.gaussian(1.0, 0.3), x0=0.0)
        sq = np.sqrt(eps)
        xt = np.arange(-0.9, 0.9, sq / 10)
        yt = np.arange(-2 * circle_map.eta, 2 * circle_map.eta, sq / 10)
        rect = assemble_rectified(spec, 0.2, xt, yt)
        grid = GridSpec2D.from_box((0.4, 1.4), (-0.5, 0.5), 192, 192)
        via_interp = push_forward(circle_map, rect, grid)
        direct = evaluate_physical(spec, circle_map, 0.2, grid)
        scale = np.max(np.abs(direct.values))
        assert np.max(np.abs(via_interp.values - direct.values)) / scale < 5e-4


class TestStationaryPhase:
    @pytest.fixture(scope="class")
    def sp_spec(self, flat_curve):
        eps = 1e-3
        ms = ModelSpec(Model.DIRAC, eps)
        env = Envelope.gaussian(0.0, 1.0)
        ph = solve_phase(ms, dirac_branch(1, +1), flat_curve, 0.0,
                         (env.support[0] - 0.5, env.support[1] + 0.5))
        return WavepacketSpec(model=ms, branch=dirac_branch(1, +1), phase=ph,
                              envelope=env, x0=0.0)

    def test_bulk_accuracy_vs_quadrature(self, sp_spec):
        sp = stationary_phase_eval(sp_spec, 1.0, 0.0, 0.0, warn=False)
        q = quadrature_oracle(sp_spec, 1.0, 0.0, 0.0)
        assert np.max(np.abs(sp - q)) / np.max(np.abs(q)) < 0.03

    def test_error_scaling_in_eps(self, sp_spec, flat_curve):
        eps4 = sp_spec.model.epsilon / 4
        ms4 = ModelSpec(Model.DIRAC, eps4)
        env = sp_spec.envelope
        ph4 = solve_phase(ms4, dirac_branch(1, +1), flat_curve, 0.0,
                          (env.support[0] - 0.5, env.support[1] + 0.5))
        spec4 = WavepacketSpec(model=ms4, branch=dirac_branch(1, +1), phase=ph4,
                               envelope=env, x0=0.0)
        errs = []
        for s in (sp_spec, spec4):
            sp = stationary_phase_eval(s, 1.0, 0.5, 0.0, warn=False)
            q = quadrature_oracle(s, 1.0, 0.5, 0.0)
            errs.append(float(np.max(np.abs(sp - q)) / np.max(np.abs(q))))
        ratio = errs[0] / errs[1]
        assert 2.0 / 1.5 <= ratio <= 2.0 * 1.5

    def test_negligible_outside_cone(self, sp_spec):
        assert stationary_phase_eval(sp_spec, 1.0, 1.5, 0.0, warn=False) is None
        q = quadrature_oracle(sp_spec, 1.0, 1.5, 0.0)
        peak = quadrature_oracle(sp_spec, 1.0, 0.0, 0.0)
        assert np.max(np.abs(q)) < sp_spec.model.epsilon**2 * np.max(np.abs(peak))

    def test_asymptotic_regime_warning(self, sp_spec):
        with pytest.warns(ValidityWarning):
            stationary_phase_eval(sp_spec, 0.05, 0.0, 0.0)


class TestAmplitudeDecay:
    def test_table_and_slope(self, flat_curve):
        eps = 1e-3
        ms = ModelSpec(Model.DIRAC, eps)
        env = Envelope.gaussian(0.0, 0.8)
        ph = solve_phase(ms, dirac_branch(1, +1), flat_curve, 0.0,
                         (env.support[0] - 0.5, env.support[1] + 0.5))
        spec = WavepacketSpec(model=ms, branch=dirac_branch(1, +1), phase=ph,
                              envelope=env, x0=0.0)
        sq = np.sqrt(eps)
        yt = np.linspace(-6 * sq, 6 * sq, 49)
        ts = [0.6, 1.0, 1.6]
        xt = np.arange(-2.2, 2.2, 0.02)
        rows = max_amplitude_decay(spec, ts, xt, yt)
        from wallwave.utils import loglog_slope

        slope = loglog_slope([r[0] for r in rows], [r[1] for r in rows])
        assert abs(slope + 0.5) < 0.05

    def test_relativistic_no_decay(self, flat_curve):
        rmap = RectificationMap(flat_curve, eta=0.5)
        eps = 1e-3
        ms = ModelSpec(Model.DIRAC, eps)
        env = RealEnvelope.gaussian(1.0)
        grid = GridSpec2D.from_box((-2.4, 2.4), (-0.3, 0.3), 1200, 150)
        amps = []
        for t in (0.6, 1.0, 1.6):
            fld = relativistic_mode(ms, dirac_branch(0), rmap, env, 0.0, t, grid)
            amps.append(float(np.max(fld.pointwise_abs())))
        from wallwave.utils import loglog_slope

        assert abs(loglog_slope([0.6, 1.0, 1.6], amps)) < 0.02


def test_spec_validation(flat_curve):
    ph = solve_phase(MS, dirac_branch(1, +1), flat_curve, 0.0, (-1.0, 1.0))
    with pytest.raises(ValueError):
        WavepacketSpec(model=MS, branch=dirac_branch(1, +1), phase=ph,
                       envelope=Envelope.bump(-0.5, 0.5), x0=0.0, J=1)
    with pytest.raises(EmptySupport):
        WavepacketSpec(model=MS, branch=dirac_branch(1, +1), phase=ph,
                       envelope=Envelope.gaussian(0.0, 1.0), x0=0.0)

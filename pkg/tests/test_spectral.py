"""Hermite basis, dispersion branches, and transverse profiles."""

import numpy as np
import pytest
from scipy.integrate import quad

from wallwave.errors import InvalidBranch, ZeroEnergy
from wallwave.spectral import (
    BranchKind,
    BranchSpec,
    Model,
    ModelSpec,
    dirac_branch,
    dispersion,
    dispersion_derivs,
    group_velocity,
    hermite,
    hermite_stack,
    kg_branch,
    transverse_profile,
    transverse_spectrum_fd,
    validate_branch,
)


class TestHermite:
    def test_ground_state_at_zero(self):
        assert abs(hermite(0, 0.0) - np.pi ** -0.25) < 1e-14

    def test_first_excited_odd(self):
        assert hermite(1, 0.0) == 0.0

    def test_norm_by_quadrature(self):
        # independent oracle: adaptive quadrature of phi_3^2
        val = quad(lambda z: hermite(3, z) ** 2, -15, 15, limit=200)[0]
        assert abs(val - 1.0) < 1e-10

    def test_orthonormality(self):
        z = np.linspace(-14, 14, 7001)
        h = hermite_stack(12, z)
        gram = h @ h.T * (z[1] - z[0])
        assert np.max(np.abs(gram - np.eye(13))) < 1e-9

    def test_ladder_identity(self):
        z = np.linspace(-8, 8, 1601)
        fd = 1e-3
        for m in (1, 4, 9):
            d = (8 * (hermite(m, z + fd) - hermite(m, z - fd))
                 - (hermite(m, z + 2 * fd) - hermite(m, z - 2 * fd))) / (12 * fd)
            lhs = z * hermite(m, z) + d
            assert np.max(np.abs(lhs - np.sqrt(2 * m) * hermite(m - 1, z))) < 1e-8

    def test_overflow_safe_high_order(self):
        vals = hermite(50, np.linspace(-10, 10, 101))
        assert np.all(np.isfinite(vals))
        assert np.max(np.abs(vals)) < 1.0


class TestDispersion:
    def test_flat_wall_dirac_m1(self):
        e = dispersion(Model.DIRAC, dirac_branch(1, +1), 0.0, 1.0)
        assert abs(e - np.sqrt(2.0)) < 1e-14

    def test_kg_m0_linear(self):
        e = dispersion(Model.KLEIN_GORDON, kg_branch(0, -1), 3.0, 1.0)
        assert abs(e + 3.0) < 1e-14

    def test_slope_generalization(self):
        # -sqrt(2*2*2 + 1) = -3; the FD oracle below verifies the family
        e = dispersion(Model.DIRAC, dirac_branch(2, -1), 1.0, 2.0)
        assert abs(e + 3.0) < 1e-14

    def test_dirac_m0_only_negative_chirality(self):
        with pytest.raises(InvalidBranch):
            dispersion(Model.DIRAC, BranchSpec(0, +1), 0.5, 1.0)
        with pytest.raises(InvalidBranch):
            dirac_branch(0, +1)
        with pytest.raises(InvalidBranch):
            validate_branch(Model.DIRAC, BranchSpec(0, +1))

    def test_flat_reduction(self):
        xi = np.linspace(-3, 3, 31)
        e = dispersion(Model.DIRAC, dirac_branch(1, +1), xi, 1.0)
        assert np.allclose(e, np.sqrt(2.0 + xi * xi), atol=1e-14)

    def test_kinds(self):
        assert dirac_branch(0).kind(Model.DIRAC) is BranchKind.RELATIVISTIC
        assert kg_branch(0, +1).kind(Model.KLEIN_GORDON) is BranchKind.RELATIVISTIC
        assert dirac_branch(2, -1).kind(Model.DIRAC) is BranchKind.DISPERSIVE


class TestGroupVelocity:
    def test_even_minimum(self):
        v = group_velocity(Model.DIRAC, dirac_branch(1, +1), 0.0, 1.0)
        assert abs(v) < 1e-14

    def test_limit_subluminal(self):
        v = group_velocity(Model.DIRAC, dirac_branch(1, +1), 100.0, 1.0)
        assert abs(v - 1.0) < 1e-4
        xi = np.linspace(-60, 60, 1201)
        v = group_velocity(Model.DIRAC, dirac_branch(1, +1), xi, 1.0)
        assert np.all(np.abs(v) < 1.0)

    def test_relativistic_speed_minus_one(self):
        xi = np.linspace(-5, 5, 11)
        v = group_velocity(Model.DIRAC, dirac_branch(0), xi, 1.0)
        assert np.allclose(v, -1.0, atol=1e-15)

    def test_zero_energy_raises(self):
        with pytest.raises(ZeroEnergy):
            group_velocity(Model.KLEIN_GORDON, kg_branch(0, +1), 0.0, 1.0)

    def test_matches_finite_differences(self):
        h = 1e-6
        for model, br, mu in (
            (Model.DIRAC, dirac_branch(1, +1), 1.0),
            (Model.DIRAC, dirac_branch(3, -1), 2.0),
            (Model.KLEIN_GORDON, kg_branch(2, +1), 1.5),
        ):
            for xi in (-1.7, 0.3, 2.5):
                v = group_velocity(model, br, xi, mu)
                fd = (dispersion(model, br, xi + h, mu) - dispersion(model, br, xi - h, mu)) / (2 * h)
                assert abs(v - fd) < 1e-8

    def test_second_derivative_consistency(self):
        h = 1e-5
        _, _, d2 = dispersion_derivs(Model.DIRAC, dirac_branch(1, +1), 0.7, 1.3)
        fd = (dispersion(Model.DIRAC, dirac_branch(1, +1), 0.7 + h, 1.3)
              - 2 * dispersion(Model.DIRAC, dirac_branch(1, +1), 0.7, 1.3)
              + dispersion(Model.DIRAC, dirac_branch(1, +1), 0.7 - h, 1.3)) / h**2
        assert abs(d2 - fd) < 1e-5


class TestProfiles:
    z = np.linspace(-14, 14, 5601)
    dz = z[1] - z[0]

    def test_dirac_m0_matches_paper_form(self):
        p = transverse_profile(Model.DIRAC, dirac_branch(0), 0.7, 1.0)
        v = p(self.z)
        ref = np.pi ** -0.25 * np.exp(-self.z**2 / 2)
        assert np.allclose(v[0], ref / np.sqrt(2), atol=1e-12)
        assert np.allclose(v[1], -ref / np.sqrt(2), atol=1e-12)
        assert abs(np.sum((v**2).sum(0)) * self.dz - 1.0) < 1e-10

    def test_dirac_m1_matches_paper_spinor(self):
        # (sigma1+sigma3)(1, (E - xi) z)^T e^{-z^2/2}/pi^{1/4}, normalized
        for xi, s in ((0.0, +1), (1.3, +1), (-0.8, -1)):
            e = s * np.sqrt(2 + xi * xi)
            raw = np.stack([
                (1 + (e - xi) * self.z), (1 - (e - xi) * self.z)
            ]) * np.exp(-self.z**2 / 2) / np.pi**0.25
            raw /= np.sqrt(np.sum((raw**2).sum(0)) * self.dz)
            v = transverse_profile(Model.DIRAC, dirac_branch(1, s), xi, 1.0)(self.z)
            sign = np.sign(np.sum(raw[0] * v[0]) or 1.0)
            assert np.max(np.abs(v - sign * raw)) < 1e-9

    def test_kg_slope_scaled_gaussian(self):
        # mu = 4: (mu/pi)^{1/4} e^{-mu z^2/2}, unit norm by quadrature oracle
        p = transverse_profile(Model.KLEIN_GORDON, kg_branch(0, -1), 1.0, 4.0)
        v = p(self.z)
        ref = (4.0 / np.pi) ** 0.25 * np.exp(-2.0 * self.z**2)
        assert np.max(np.abs(v - ref)) < 1e-12
        nrm = quad(lambda t: float(p(np.asarray(t)) ** 2), -10, 10)[0]
        assert abs(nrm - 1.0) < 1e-10

    def test_norms_unit(self):
        for model, br, xi, mu in (
            (Model.DIRAC, dirac_branch(0), 0.4, 2.0),
            (Model.DIRAC, dirac_branch(1, +1), 1.1, 2.0),
            (Model.DIRAC, dirac_branch(3, -1), -0.6, 1.5),
            (Model.KLEIN_GORDON, kg_branch(2, +1), 0.9, 2.0),
        ):
            v = transverse_profile(model, br, xi, mu)(self.z)
            dens = (v**2).sum(0) if v.ndim == 2 else v**2
            assert abs(np.sum(dens) * self.dz - 1.0) < 1e-10

    def test_gaussian_decay(self):
        for br, mu in ((dirac_branch(2, +1), 1.0), (dirac_branch(1, -1), 2.0)):
            v = transverse_profile(Model.DIRAC, br, 0.9, mu)(self.z)
            mag = np.sqrt((v**2).sum(0))
            tail = np.abs(self.z) >= 6.0
            bound = np.exp(-self.z[tail] ** 2 / 4.0)
            assert np.all(mag[tail] <= 5.0 * bound)


class TestDiagonalizationOracle:
    """The FD/Fourier diagonalization is the oracle for derived dispersion."""

    @pytest.mark.parametrize("mu", [1.0, 2.0])
    @pytest.mark.parametrize("xi", [-2.0, 0.0, 2.0])
    def test_dirac_branches(self, mu, xi):
        es = transverse_spectrum_fd(Model.DIRAC, xi, mu, count=7)
        pred = sorted([-xi] + [
            s * np.sqrt(2 * m * mu + xi * xi) for m in (1, 2, 3) for s in (1, -1)
        ])
        assert np.max(np.abs(np.sort(es) - np.array(pred))) < 1e-4

    @pytest.mark.parametrize("mu", [1.0, 2.0])
    @pytest.mark.parametrize("xi", [-2.0, 0.0, 2.0])
    def test_kg_branches(self, mu, xi):
        es = transverse_spectrum_fd(Model.KLEIN_GORDON, xi, mu, count=4)
        pred = sorted(
            [s * np.sqrt(2 * m * mu + xi * xi) for m in (0, 1, 2, 3) for s in (1, -1)],
            key=abs,
        )[: len(es)]
        assert np.max(np.abs(np.sort(es) - np.sort(np.array(pred)))) < 1e-4

    def test_asymmetry_no_plus_xi_mode(self):
        # at xi=1 the spectrum contains -1 but not +1 (single chirality)
        es = transverse_spectrum_fd(Model.DIRAC, 1.0, 1.0, count=7)
        assert np.min(np.abs(es - (-1.0))) < 1e-6
        others = es[np.abs(es - (-1.0)) > 1e-6]
        assert np.min(np.abs(others - 1.0)) > 0.5


def test_model_spec_validation():
    with pytest.raises(ValueError):
        ModelSpec(Model.DIRAC, 0.3)
    with pytest.raises(ValueError):
        ModelSpec(Model.DIRAC, -0.1)
    ms = ModelSpec(Model.KLEIN_GORDON, 0.01)
    assert ms.q == 2 and ModelSpec(Model.DIRAC, 0.01).q == 1

"""Transverse oscillator basis, dispersion branches, and mode profiles.

On the linearized wall ``kappa approx mu * yt`` the transverse structure of
confined modes is governed by ladder operators built from ``eps d_y + mu y``;
in the scaled variable z = yt/sqrt(eps) the eigenfunctions are Hermite
functions of sqrt(mu) z.  The branches supported here:

Dirac (2-spinor):
    m = 0:   E = -xi (single chirality; the (0,+) label is rejected),
             profile chi_0(z) (1, -1)^T / sqrt2.
    m >= 1:  E = s sqrt(2 m mu + xi^2), s = +-1, profile built from
             chi_{m-1}, chi_m in the Hadamard-rotated frame.

Klein-Gordon (scalar):
    m = 0:   E = s|xi| (two counter-propagating unit-speed modes; group
             velocity undefined at xi = 0),
    m >= 1:  E = s sqrt(2 m mu + xi^2), profile chi_m(z),

with chi_m(z) = mu^{1/4} phi_m(sqrt(mu) z) and phi_m the L^2-normalized
Hermite functions.  All functions are vectorized over xi and z.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InvalidBranch, ZeroEnergy

__all__ = [
    "Model",
    "ModelSpec",
    "BranchKind",
    "BranchSpec",
    "hermite",
    "hermite_stack",
    "dispersion",
    "dispersion_derivs",
    "group_velocity",
    "TransverseProfile",
    "transverse_profile",
    "transverse_spectrum_fd",
]


class Model(Enum):
    DIRAC = "dirac"
    KLEIN_GORDON = "klein_gordon"

    @property
    def q(self):
        """Multiscale exponent: the operator is scaled by eps^{-q/2}."""
        return 1 if self is Model.DIRAC else 2

    @property
    def components(self):
        return 2 if self is Model.DIRAC else 1


@dataclass(frozen=True)
class ModelSpec:
    """Model selection plus the semiclassical parameter."""

    model: Model
    epsilon: float

    def __post_init__(self):
        if not 0.0 < self.epsilon <= 0.25:
            raise ValueError(f"epsilon must be in (0, 0.25], got {self.epsilon}")

    @property
    def q(self):
        return self.model.q

    @property
    def sqrt_eps(self):
        return float(np.sqrt(self.epsilon))


class BranchKind(Enum):
    RELATIVISTIC = "relativistic"
    DISPERSIVE = "dispersive"


@dataclass(frozen=True)
class BranchSpec:
    """Transverse mode index m and sign label s of a spectral branch."""

    m: int
    s: int = -1

    def __post_init__(self):
        if self.m < 0:
            raise InvalidBranch(f"mode index must be >= 0, got {self.m}")
        if self.s not in (-1, +1):
            raise InvalidBranch(f"sign label must be +-1, got {self.s}")

    def kind(self, model):
        if self.m == 0:
            return BranchKind.RELATIVISTIC
        return BranchKind.DISPERSIVE


def validate_branch(model, branch):
    """Reject branch labels the model does not support (Dirac (0,+))."""
    if model is Model.DIRAC and branch.m == 0 and branch.s == +1:
        raise InvalidBranch(
            "the Dirac wall carries no m=0 mode of positive chirality; only (0,-) exists"
        )
    return branch


def dirac_branch(m, s=None):
    """Branch factory that makes the Dirac (0,+) combination unrepresentable."""
    if m == 0:
        if s == +1:
            raise InvalidBranch("Dirac m=0 admits only the negative-chirality branch")
        return BranchSpec(0, -1)
    if s is None:
        raise InvalidBranch("dispersive Dirac branches need an explicit sign")
    return BranchSpec(m, s)


def kg_branch(m, s):
    return BranchSpec(m, s)


# ---------------------------------------------------------------------------
# Hermite functions
# ---------------------------------------------------------------------------


def hermite(m, z):
    """L^2-normalized Hermite function phi_m(z).

    Uses the stable recurrence on normalized functions
    phi_m = z sqrt(2/m) phi_{m-1} - sqrt((m-1)/m) phi_{m-2},
    which stays bounded for any m (no factorial overflow).
    """
    z = np.asarray(z, dtype=float)
    phi_prev = np.pi ** -0.25 * np.exp(-0.5 * z * z)
    if m == 0:
        return phi_prev
    phi = np.sqrt(2.0) * z * phi_prev
    for n in range(2, m + 1):
        phi, phi_prev = z * np.sqrt(2.0 / n) * phi - np.sqrt((n - 1) / n) * phi_prev, phi
    return phi


def hermite_stack(mmax, z):
    """All phi_0..phi_mmax at once; shape (mmax+1,) + z.shape."""
    z = np.asarray(z, dtype=float)
    out = np.empty((mmax + 1,) + z.shape)
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * z * z)
    if mmax >= 1:
        out[1] = np.sqrt(2.0) * z * out[0]
    for n in range(2, mmax + 1):
        out[n] = z * np.sqrt(2.0 / n) * out[n - 1] - np.sqrt((n - 1) / n) * out[n - 2]
    return out


def chi(m, z, mu):
    """Slope-scaled oscillator eigenfunction, unit L^2(dz) norm."""
    return mu ** 0.25 * hermite(m, np.sqrt(mu) * np.asarray(z, dtype=float))


# ---------------------------------------------------------------------------
# Dispersion relations
# ---------------------------------------------------------------------------


def dispersion(model, branch, xi, mu):
    """Branch energy E_{m,s}(xi) at wall slope mu > 0.

    Dirac m=0: E = -xi exactly (slope-independent, single chirality).
    All other branches: E = s sqrt(2 m mu + xi^2); for KG m=0 this
    degenerates to s|xi|, the two unit-speed modes.
    """
    validate_branch(model, branch)
    xi = np.asarray(xi, dtype=float)
    if np.any(np.asarray(mu) <= 0):
        raise ValueError("wall slope mu must be positive")
    if model is Model.DIRAC and branch.m == 0:
        return -xi
    return branch.s * np.sqrt(2.0 * branch.m * np.asarray(mu, dtype=float) + xi * xi)


def dispersion_derivs(model, branch, xi, mu):
    """(E, dE/dxi, d2E/dxi2), all analytic."""
    validate_branch(model, branch)
    xi = np.asarray(xi, dtype=float)
    if model is Model.DIRAC and branch.m == 0:
        return -xi, -np.ones_like(xi), np.zeros_like(xi)
    if branch.m == 0:  # KG m=0: piecewise linear, kink at xi=0
        e = branch.s * np.abs(xi)
        de = branch.s * np.sign(xi)
        return e, de, np.zeros_like(xi)
    e = branch.s * np.sqrt(2.0 * branch.m * mu + xi * xi)
    de = xi / e
    d2e = 2.0 * branch.m * mu / e**3
    return e, de, d2e


def group_velocity(model, branch, xi, mu):
    """dE/dxi; raises ZeroEnergy on the KG m=0 branch at xi = 0."""
    validate_branch(model, branch)
    xi = np.asarray(xi, dtype=float)
    if model is not Model.DIRAC or branch.m != 0:
        if branch.m == 0 and np.any(xi == 0.0):
            raise ZeroEnergy("KG m=0 branch has E=0 at xi=0; group velocity undefined")
    return dispersion_derivs(model, branch, xi, mu)[1]


# ---------------------------------------------------------------------------
# Transverse profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TransverseProfile:
    """Normalized transverse mode profile in the scaled variable z.

    ``weights`` are the coefficients of (chi_{m-1}, chi_m) in the rotated
    spinor frame for Dirac (m>=1); calling the object evaluates the
    physical-frame components: shape (2,) + z.shape for Dirac, z.shape
    for Klein-Gordon.
    """

    model: Model
    branch: BranchSpec
    xi: float
    mu: float
    weights: tuple

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        mu = self.mu
        if self.model is Model.KLEIN_GORDON:
            return chi(self.branch.m, z, mu)
        if self.branch.m == 0:
            g = chi(0, z, mu)
            return np.stack([g, -g]) / np.sqrt(2.0)
        a, b = self.weights
        w1 = a * chi(self.branch.m - 1, z, mu)
        w2 = b * chi(self.branch.m, z, mu)
        return np.stack([w1 + w2, w1 - w2]) / np.sqrt(2.0)

    @property
    def norm_constant(self):
        return 1.0


def _dirac_weights(m, s, xi, mu):
    """Rotated-frame coefficients (a, b) of the normalized Dirac spinor."""
    e = s * np.sqrt(2.0 * m * mu + xi * xi)
    c = e - xi
    n = np.sqrt(2.0 * m * mu + c * c)
    return np.sqrt(2.0 * m * mu) / n, c / n


def transverse_profile(model, branch, xi, mu):
    """Normalized transverse profile of branch (m, s) at wavenumber xi.

    The returned object is immutable and evaluates at arbitrary z arrays.
    For Dirac m>=1 this is the normalized version of the flat-wall spinor
    (sigma1+sigma3)(1, (E-xi) z ...)^T with sqrt(2 m mu + xi^2) in place of
    sqrt(2 + xi^2); for m=0 it is the Gaussian times (1,-1)^T/sqrt2.
    """
    validate_branch(model, branch)
    xi = float(xi)
    mu = float(mu)
    if mu <= 0:
        raise ValueError("wall slope mu must be positive")
    if model is Model.DIRAC and branch.m >= 1:
        weights = _dirac_weights(branch.m, branch.s, xi, mu)
    else:
        weights = (1.0, 0.0)
    return TransverseProfile(model=model, branch=branch, xi=xi, mu=mu, weights=weights)


def profile_weights(model, branch, xi, mu):
    """Vectorized (a, b) rotated-frame weights over an array of xi (Dirac m>=1)."""
    xi = np.asarray(xi, dtype=float)
    e = branch.s * np.sqrt(2.0 * branch.m * mu + xi * xi)
    c = e - xi
    n = np.sqrt(2.0 * branch.m * mu + c * c)
    return np.sqrt(2.0 * branch.m * mu) / n, c / n


# ---------------------------------------------------------------------------
# Finite-difference diagonalization oracle
# ---------------------------------------------------------------------------


def _d2_4th(n, h):
    import scipy.sparse as sps

    c0, c1, c2 = -2.5 / h**2, 4.0 / 3.0 / h**2, -1.0 / 12.0 / h**2
    return sps.diags(
        [c2, c1, c0, c1, c2], [-2, -1, 0, 1, 2], shape=(n, n), format="csr"
    )


def _fourier_d1(n, period):
    """Dense spectral differentiation matrix on n (odd) periodic points."""
    if n % 2 == 0:
        n += 1
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=period / n)
    d = np.fft.ifft(1j * k[:, None] * np.fft.fft(np.eye(n), axis=0), axis=0)
    return np.real(d), n


def transverse_spectrum_fd(model, xi, mu, zmax=12.0, n=2000, count=10):
    """Numerically diagonalized rectified flat-wall transverse operator.

    Klein-Gordon uses a 4th-order finite-difference second derivative on
    |z| <= zmax; the first-order Dirac operator uses a Fourier
    differentiation matrix instead (a centered first difference carries
    lattice-doubler eigenvalues inside the spectral gap).  Returns the
    ``count`` eigenvalues closest to zero.  This oracle knows nothing about
    the analytic branch formulas it validates.
    """
    import scipy.sparse as sps
    from scipy.sparse.linalg import eigsh

    if model is Model.KLEIN_GORDON:
        z = np.linspace(-zmax, zmax, n)
        h = z[1] - z[0]
        # -d2/dz2 + mu^2 z^2 - mu, then E = s sqrt(xi^2 + lambda)
        op = (-_d2_4th(n, h) + sps.diags(mu**2 * z * z - mu)).tocsc()
        lam = eigsh(op, k=count, sigma=0.0, which="LM", return_eigenvectors=False)
        lam = np.maximum(np.sort(lam), 0.0)  # clip FD noise on the zero mode
        es = np.concatenate([np.sqrt(xi * xi + lam), -np.sqrt(xi * xi + lam)])
        es = np.sort(es)
        keep = np.argsort(np.abs(es))[:count]
        return np.sort(es[keep])
    # Dirac: h = xi sigma1 + D_z sigma2 + mu z sigma3 acting on (u1, u2).
    # With D_z = -i d/dz, the blocks are [[mu z, xi - d/dz], [xi + d/dz, -mu z]].
    # The periodic seam of the Fourier grid is an anti-wall binding its own
    # edge modes; those are rejected by a localization filter below.
    nn = min(int(n), 901)
    d1, nn = _fourier_d1(nn, 2.0 * zmax)
    z = -zmax + 2.0 * zmax * np.arange(nn) / nn
    idm = np.eye(nn)
    zdiag = np.diag(mu * z)
    op = np.block([[zdiag, xi * idm - d1], [xi * idm + d1, -zdiag]])
    es, vecs = np.linalg.eigh(op)
    mass = np.abs(vecs[:nn]) ** 2 + np.abs(vecs[nn:]) ** 2
    seam = np.abs(z) > zmax - 3.0
    wall_localized = mass[seam].sum(axis=0) < 1e-8
    es = es[wall_localized]
    keep = np.argsort(np.abs(es))[:count]
    return np.sort(es[keep])


def branch_table_csv(path, model, branch, mu, xi_values):
    """Export (xi, E, dE/dxi) rows for plotting."""
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["xi", "E", "dE_dxi"])
        for xi in xi_values:
            e, de, _ = dispersion_derivs(model, branch, float(xi), mu)
            w.writerow([f"{float(xi):.12g}", f"{float(e):.12g}", f"{float(de):.12g}"])

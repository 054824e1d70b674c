"""Separable eikonal phases G(t, xt, xi) = -B(xi) t + A(xt, xi).

B is the branch energy anchored at the launch arclength x0 (so that
d_x A(x0, xi) = xi holds exactly and the t = 0 ansatz is a semiclassical
Fourier synthesis centered at x0).  Along the curve the local wavenumber
k(xt, xi) = d_x A solves the eikonal relation

    dispersion(k(xt, xi), mu(xt)) = B(xi),

which for dispersive branches gives k = sgn(xi) sqrt(B^2 - 2 m mu(xt)) and
for relativistic branches k = xi identically.  Walls with constant slope
admit the exact primitive A = xi (xt - x0); otherwise A is accumulated by
panel quadrature and the validity range is truncated at turning points
(B^2 - 2 m mu <= margin), which are reported, not fatal.
"""

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .errors import (
    DegenerateHessian,
    EmptySupport,
    MultipleRoots,
    NoConvergence,
    OutsideValidity,
    TurningPointAtLaunch,
    TurningPointWarning,
)
from .spectral import BranchKind, Model, dispersion_derivs, validate_branch
from .utils import gl_panel

__all__ = ["PhaseSolution", "solve_phase", "stationary_point", "phase_hessian"]


def _normalize_support(xi_support):
    """Support as a sorted list of disjoint (lo, hi) tuples."""
    if np.isscalar(xi_support[0]):
        intervals = [tuple(map(float, xi_support))]
    else:
        intervals = [tuple(map(float, iv)) for iv in xi_support]
    intervals = sorted((lo, hi) for lo, hi in intervals if hi > lo)
    if not intervals:
        raise EmptySupport("wavenumber support is empty")
    return intervals


@dataclass
class PhaseSolution:
    """Eikonal pair (A, B) for one branch, launch point, and support.

    Immutable after construction; all queries are pure.
    """

    model: object
    branch: object
    curve: object
    x0: float
    support: list
    xi_grid: np.ndarray
    valid_range: tuple
    mu0: float
    const_mu: bool
    turning_truncated: bool = False
    _a_splines: dict = field(default_factory=dict, repr=False)

    # -- branch energy ------------------------------------------------------

    def B(self, xi):
        return dispersion_derivs(self.model.model, self.branch, xi, self.mu0)[0]

    def dB(self, xi):
        return dispersion_derivs(self.model.model, self.branch, xi, self.mu0)[1]

    def d2B(self, xi):
        return dispersion_derivs(self.model.model, self.branch, xi, self.mu0)[2]

    # -- local wavenumber and its xi-derivatives -----------------------------

    def _mu_at(self, xt):
        return self.curve.slope(self.curve.reduce(np.asarray(xt, dtype=float)))

    def k(self, xt, xi):
        xt = np.asarray(xt, dtype=float)
        xi = np.asarray(xi, dtype=float)
        if self.branch.kind(self.model.model) is BranchKind.RELATIVISTIC:
            return np.broadcast_arrays(xi, xt)[0].copy()
        if self.const_mu:
            return np.broadcast_arrays(xi, xt)[0].copy()
        b = self.B(xi)
        rad = b * b - 2.0 * self.branch.m * self._mu_at(xt)
        rad = np.maximum(rad, 0.0)
        return np.sign(xi) * np.sqrt(rad)

    def dk_dxi(self, xt, xi):
        xt = np.asarray(xt, dtype=float)
        xi = np.asarray(xi, dtype=float)
        if self.branch.kind(self.model.model) is BranchKind.RELATIVISTIC or self.const_mu:
            return np.ones(np.broadcast(xt, xi).shape)
        b, db, _ = dispersion_derivs(self.model.model, self.branch, xi, self.mu0)
        kk = self.k(xt, xi)
        return b * db / kk

    def d2k_dxi2(self, xt, xi):
        xt = np.asarray(xt, dtype=float)
        xi = np.asarray(xi, dtype=float)
        if self.branch.kind(self.model.model) is BranchKind.RELATIVISTIC or self.const_mu:
            return np.zeros(np.broadcast(xt, xi).shape)
        b, db, d2b = dispersion_derivs(self.model.model, self.branch, xi, self.mu0)
        kk = self.k(xt, xi)
        dk = b * db / kk
        return (db * db + b * d2b) / kk - (b * db) * dk / (kk * kk)

    # -- accumulated phase ----------------------------------------------------

    def _integral_of(self, func, name, xt, xi):
        """integral_{x0}^{xt} func(s, xi) ds by cached per-xi antiderivatives."""
        xt_b, xi_b = np.broadcast_arrays(
            np.asarray(xt, dtype=float), np.asarray(xi, dtype=float)
        )
        out = np.empty(xt_b.shape)
        flat_xt, flat_xi, flat_out = xt_b.ravel(), xi_b.ravel(), out.reshape(-1)
        lo, hi = self.valid_range
        dense = np.linspace(lo, hi, 801)
        for x in np.unique(flat_xi):
            key = (name, float(x))
            spl = self._a_splines.get(key)
            if spl is None:
                prim = CubicSpline(dense, func(dense, x)).antiderivative()
                self._a_splines[key] = spl = (prim, float(prim(self.x0)))
            prim, at_x0 = spl
            sel = flat_xi == x
            flat_out[sel] = prim(np.clip(flat_xt[sel], lo, hi)) - at_x0
        return out if out.shape else float(out)

    def A(self, xt, xi):
        """A(xt, xi) = integral of the local wavenumber from x0; A(x0) = 0."""
        xt = np.asarray(xt, dtype=float)
        xi = np.asarray(xi, dtype=float)
        if self.branch.kind(self.model.model) is BranchKind.RELATIVISTIC or self.const_mu:
            return xi * (xt - self.x0)
        return self._integral_of(self.k, "k", xt, xi)

    def dA_dxi(self, xt, xi):
        xt = np.asarray(xt, dtype=float)
        xi = np.asarray(xi, dtype=float)
        if self.branch.kind(self.model.model) is BranchKind.RELATIVISTIC or self.const_mu:
            return (xt - self.x0) * np.ones_like(xi)
        return self._integral_of(self.dk_dxi, "dk", xt, xi)

    def d2A_dxi2(self, xt, xi):
        xt = np.asarray(xt, dtype=float)
        xi = np.asarray(xi, dtype=float)
        if self.branch.kind(self.model.model) is BranchKind.RELATIVISTIC or self.const_mu:
            return np.zeros(np.broadcast(xt, xi).shape)
        return self._integral_of(self.d2k_dxi2, "d2k", xt, xi)

    # -- full phase ------------------------------------------------------------

    def G(self, t, xt, xi):
        return -self.B(xi) * t + self.A(xt, xi)

    def dG_dxi(self, t, xt, xi):
        return -self.dB(xi) * t + self.dA_dxi(xt, xi)

    def d2G_dxi2(self, t, xt, xi):
        return -self.d2B(xi) * t + self.d2A_dxi2(xt, xi)

    # -- support helpers ---------------------------------------------------------

    def in_support(self, xi):
        xi = np.asarray(xi, dtype=float)
        ok = np.zeros(xi.shape, dtype=bool)
        for lo, hi in self.support:
            ok |= (xi >= lo) & (xi <= hi)
        return ok

    def check_valid(self, xt, tol=1e-9):
        xt = np.asarray(xt, dtype=float)
        lo, hi = self.valid_range
        if np.any(xt < lo - tol) or np.any(xt > hi + tol):
            raise OutsideValidity(
                f"samples outside the turning-point-free range [{lo:.6g}, {hi:.6g}]"
            )

    def to_csv(self, path, xt_values, xi_values):
        """Debug table: xt, xi, A, d_x A, d_xi A."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["xt", "xi", "A", "dA_dx", "dA_dxi"])
            for x in xt_values:
                for s in xi_values:
                    w.writerow(
                        [f"{v:.12g}" for v in (
                            x, s, float(self.A(x, s)), float(self.k(x, s)),
                            float(self.dA_dxi(x, s)),
                        )]
                    )


def solve_phase(
    model_spec,
    branch,
    curve,
    x0,
    xi_support,
    x_range=None,
    n_xi=257,
    turning_margin=1e-6,
):
    """Construct the separable phase for one branch on one curve.

    ``xi_support`` is an interval (lo, hi) or a list of disjoint intervals.
    ``x_range`` is the arclength window of interest; for closed curves it
    defaults to one full period on each side of the launch point (the
    covering picture).  Turning points shrink the validity range with a
    TurningPointWarning; TurningPointAtLaunch is raised when even the
    launch point sits at the turning threshold.
    """
    validate_branch(model_spec.model, branch)
    support = _normalize_support(xi_support)
    x0 = float(x0)

    if model_spec.model is Model.KLEIN_GORDON and branch.m == 0:
        for lo, hi in support:
            if lo <= 0.0 <= hi:
                raise EmptySupport(
                    "KG m=0 support must avoid xi=0 (zero-energy kink)"
                )

    if x_range is None:
        if curve.closed:
            x_range = (x0 - curve.total_length, x0 + curve.total_length)
        else:
            x_range = (float(curve.x[0]), float(curve.x[-1]))
    x_range = (float(x_range[0]), float(x_range[1]))
    if not (x_range[0] <= x0 <= x_range[1]):
        raise ValueError("x0 must lie inside x_range")

    # xi grid covering the support (used for root scanning).
    pieces = []
    total = sum(hi - lo for lo, hi in support)
    for lo, hi in support:
        n = max(8, int(round(n_xi * (hi - lo) / total)))
        pieces.append(np.linspace(lo, hi, n))
    xi_grid = np.unique(np.concatenate(pieces))

    dense = np.linspace(x_range[0], x_range[1], 2001)
    mu_dense = curve.slope(curve.reduce(dense))
    mu0 = float(curve.slope(curve.reduce(np.asarray(x0))))
    const_mu = float(np.ptp(mu_dense)) < 1e-9 * max(1.0, abs(mu0))

    # Turning-point truncation (dispersive branches on variable-slope walls).
    valid = x_range
    truncated = False
    kind = branch.kind(model_spec.model)
    if kind is BranchKind.DISPERSIVE and not const_mu:
        xi_min_abs = min(
            (0.0 if lo <= 0.0 <= hi else min(abs(lo), abs(hi))) for lo, hi in support
        )
        if xi_min_abs**2 <= turning_margin:
            raise TurningPointAtLaunch(
                "support reaches the turning threshold at the launch point;"
                " use a support bounded away from xi=0 on variable-slope walls"
            )
        # valid where 2 m (mu(xt) - mu0) <= xi_min^2 - margin
        ok = 2.0 * branch.m * (mu_dense - mu0) <= xi_min_abs**2 - turning_margin
        i0 = int(np.argmin(np.abs(dense - x0)))
        if not ok[i0]:
            raise TurningPointAtLaunch("launch point beyond a turning point")
        lo_i = i0
        while lo_i > 0 and ok[lo_i - 1]:
            lo_i -= 1
        hi_i = i0
        while hi_i < len(dense) - 1 and ok[hi_i + 1]:
            hi_i += 1
        valid = (float(dense[lo_i]), float(dense[hi_i]))
        truncated = valid != x_range
        if truncated:
            warnings.warn(
                f"validity range truncated at turning points to [{valid[0]:.4g}, {valid[1]:.4g}]",
                TurningPointWarning,
                stacklevel=2,
            )

    return PhaseSolution(
        model=model_spec,
        branch=branch,
        curve=curve,
        x0=x0,
        support=support,
        xi_grid=xi_grid,
        valid_range=valid,
        mu0=mu0,
        const_mu=const_mu,
        turning_truncated=truncated,
    )


def stationary_point(phase, t, xt, tol=1e-12):
    """Root of d_xi G(t, xt, .) inside the support, or None.

    Scans the xi grid for sign changes, brackets with Brent, and polishes
    with Newton using the analytic second derivative.  Raises MultipleRoots
    when several stationary points coexist (caller decides), NoConvergence
    when polishing stalls.
    """
    if t == 0.0:
        raise ValueError("stationary point is defined for t != 0")
    xt = float(xt)
    phase.check_valid(xt)

    def g(xi):
        return float(phase.dG_dxi(t, xt, xi))

    roots = []
    for lo, hi in phase.support:
        grid = phase.xi_grid[(phase.xi_grid >= lo) & (phase.xi_grid <= hi)]
        vals = phase.dG_dxi(t, xt, grid)
        sgn = np.sign(vals)
        for i in range(len(grid) - 1):
            if sgn[i] == 0.0:
                roots.append(float(grid[i]))
            elif sgn[i] * sgn[i + 1] < 0.0:
                roots.append(brentq(g, grid[i], grid[i + 1], xtol=1e-14, rtol=8.9e-16))
        if len(grid) and sgn[-1] == 0.0:
            roots.append(float(grid[-1]))
    roots = sorted(set(round(r, 13) for r in roots))
    if not roots:
        return None
    if len(roots) > 1:
        raise MultipleRoots(roots)
    xi = roots[0]
    scale = 1.0 + abs(t) + abs(xt - phase.x0)
    for _ in range(60):
        val = float(phase.dG_dxi(t, xt, xi))
        if abs(val) < tol * scale:
            return float(xi)
        der = float(phase.d2G_dxi2(t, xt, xi))
        if der == 0.0:
            break
        xi = xi - val / der
    if abs(float(phase.dG_dxi(t, xt, xi))) < 1e-11 * scale:
        return float(xi)
    raise NoConvergence("stationary-point Newton polish stalled")


def phase_hessian(phase, t, xt, xi_star, degeneracy_tol=1e-9):
    """d2_xi G at the stationary point; raises DegenerateHessian near caustics."""
    val = float(phase.d2G_dxi2(t, xt, xi_star))
    if abs(val) < degeneracy_tol * (1.0 + abs(t)):
        raise DegenerateHessian(
            f"|d2G/dxi2| = {abs(val):.3g} below threshold; stationary phase refused"
        )
    return val

"""Domain walls, level-set tracing, and tubular (rectified) coordinates.

A domain wall is a scalar field kappa(x, y) whose zero level set Gamma
confines wavepackets.  This module traces Gamma with a predictor-corrector
marcher, reparametrizes it by arclength, equips it with the orthonormal
frame (tau, nu) and signed curvature, and builds the tube map

    Phi(xt, yt) = gamma(xt) + yt * nu(xt)

together with its Newton inverse.  Sign conventions used everywhere else:

* nu = grad kappa / |grad kappa|, so the wall slope mu = grad kappa . nu
  equals |grad kappa| and is positive by construction;
* tau = (nu_y, -nu_x), so det[tau nu] = +1 (positively oriented frame);
* signed curvature k = tau' . nu = -tau^T H tau / |grad kappa|, which makes
  the Jacobian of Phi equal to 1 - yt * k (on a circle traced with outward
  normal this gives k = -1/R and Jacobian 1 + yt/R, growing outward).
"""

import csv
from dataclasses import dataclass, field

import numpy as np
import sympy as sp
from scipy.interpolate import CubicSpline, PchipInterpolator
from scipy.spatial import cKDTree

from .errors import (
    CurveLeavesDomain,
    DegenerateGradient,
    NoConvergence,
    OutOfRange,
    OutsideTube,
)
from .utils import gl_panel

__all__ = [
    "DomainWall",
    "LevelCurve",
    "RectificationMap",
    "trace_level_set",
    "wall_slope",
]


def _as_xy(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return x, y


class DomainWall:
    """Scalar wall kappa(x, y) with analytic gradient and Hessian.

    Construct through one of the factories: :meth:`flat_y`, :meth:`circle`,
    or :meth:`from_expression`.  All callables accept scalars or arrays and
    broadcast.  ``bounds`` is the rectangle (xmin, xmax, ymin, ymax) on
    which the wall is considered evaluable.
    """

    def __init__(self, kind, kappa, grad, hess, bounds, params=None):
        self.kind = kind
        self._kappa = kappa
        self._grad = grad
        self._hess = hess
        self.bounds = tuple(float(b) for b in bounds)
        self.params = dict(params or {})
        if not (self.bounds[0] < self.bounds[1] and self.bounds[2] < self.bounds[3]):
            raise ValueError("bounds must be (xmin, xmax, ymin, ymax) with xmin<xmax, ymin<ymax")

    # -- factories ---------------------------------------------------------

    @classmethod
    def flat_y(cls, bounds=(-2.0, 2.0, -2.0, 2.0)):
        """kappa = y: the straight wall along the x-axis."""

        def kappa(x, y):
            x, y = _as_xy(x, y)
            return np.broadcast_arrays(x, y)[1].copy()

        def grad(x, y):
            x, y = _as_xy(x, y)
            shape = np.broadcast(x, y).shape
            g = np.zeros(shape + (2,))
            g[..., 1] = 1.0
            return g

        def hess(x, y):
            x, y = _as_xy(x, y)
            return np.zeros(np.broadcast(x, y).shape + (2, 2))

        return cls("flat_y", kappa, grad, hess, bounds)

    @classmethod
    def circle(cls, radius=1.0, bounds=None):
        """kappa = x^2 + y^2 - R^2: closed circular wall of the given radius."""
        r = float(radius)
        if bounds is None:
            bounds = (-1.8 * r, 1.8 * r, -1.8 * r, 1.8 * r)

        def kappa(x, y):
            x, y = _as_xy(x, y)
            return x * x + y * y - r * r

        def grad(x, y):
            x, y = _as_xy(x, y)
            x, y = np.broadcast_arrays(x, y)
            return np.stack([2.0 * x, 2.0 * y], axis=-1)

        def hess(x, y):
            x, y = _as_xy(x, y)
            shape = np.broadcast(x, y).shape
            h = np.zeros(shape + (2, 2))
            h[..., 0, 0] = 2.0
            h[..., 1, 1] = 2.0
            return h

        return cls("circle", kappa, grad, hess, bounds, params={"radius": r})

    @classmethod
    def from_expression(cls, expression, bounds=(-2.0, 2.0, -2.0, 2.0)):
        """Wall from a sympy-parsable expression in x and y.

        The gradient and Hessian are derived symbolically, so the expression
        must be closed-form differentiable (polynomials, exp, tanh, ...).
        """
        x, y = sp.symbols("x y", real=True)
        try:
            expr = sp.sympify(expression, locals={"x": x, "y": y})
        except (sp.SympifyError, SyntaxError, TypeError) as exc:
            raise ValueError(f"cannot parse wall expression {expression!r}: {exc}") from exc
        free = expr.free_symbols - {x, y}
        if free:
            raise ValueError(f"wall expression contains unknown symbols: {free}")

        fk = sp.lambdify((x, y), expr, modules="numpy")
        dfs = [sp.lambdify((x, y), sp.diff(expr, v), modules="numpy") for v in (x, y)]
        d2fs = [
            [sp.lambdify((x, y), sp.diff(expr, u, v), modules="numpy") for v in (x, y)]
            for u in (x, y)
        ]

        def _bcast(val, shape):
            return np.broadcast_to(np.asarray(val, dtype=float), shape)

        def kappa(px, py):
            px, py = _as_xy(px, py)
            shape = np.broadcast(px, py).shape
            return _bcast(fk(px, py), shape).copy()

        def grad(px, py):
            px, py = _as_xy(px, py)
            shape = np.broadcast(px, py).shape
            return np.stack([_bcast(d(px, py), shape) for d in dfs], axis=-1)

        def hess(px, py):
            px, py = _as_xy(px, py)
            shape = np.broadcast(px, py).shape
            rows = [np.stack([_bcast(d(px, py), shape) for d in row], axis=-1) for row in d2fs]
            return np.stack(rows, axis=-2)

        return cls("expr", kappa, grad, hess, bounds, params={"expression": str(expression)})

    # -- evaluation --------------------------------------------------------

    def kappa(self, x, y):
        return self._kappa(x, y)

    def grad(self, x, y):
        return self._grad(x, y)

    def hess(self, x, y):
        return self._hess(x, y)

    def grad_norm(self, x, y):
        g = self._grad(x, y)
        return np.sqrt(np.sum(g * g, axis=-1))

    def contains(self, x, y):
        xmin, xmax, ymin, ymax = self.bounds
        x, y = _as_xy(x, y)
        return (x >= xmin) & (x <= xmax) & (y >= ymin) & (y <= ymax)

    def boundary_distance(self, x, y):
        xmin, xmax, ymin, ymax = self.bounds
        x, y = _as_xy(x, y)
        return np.minimum.reduce([x - xmin, xmax - x, y - ymin, ymax - y])


def _project_to_curve(wall, p, curve_tol, grad_tol=1e-8, maxiter=30):
    """Newton projection of p onto kappa^{-1}(0) along grad kappa."""
    p = np.asarray(p, dtype=float).copy()
    for _ in range(maxiter):
        k = float(wall.kappa(p[0], p[1]))
        g = wall.grad(p[0], p[1])
        g2 = float(g @ g)
        if g2 < grad_tol**2:
            raise DegenerateGradient(f"|grad kappa| < {grad_tol} near {tuple(p)}")
        if abs(k) < curve_tol:
            return p
        p -= (k / g2) * np.asarray(g)
    raise NoConvergence(f"Newton projection onto the level set stalled near {tuple(p)}")


def _frame_at(wall, pts):
    """Frame/curvature data at points assumed to lie on Gamma."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    g = wall.grad(pts[:, 0], pts[:, 1])
    gn = np.sqrt(np.sum(g * g, axis=-1))
    nu = g / gn[:, None]
    tau = np.stack([nu[:, 1], -nu[:, 0]], axis=-1)
    h = wall.hess(pts[:, 0], pts[:, 1])
    tht = np.einsum("ni,nij,nj->n", tau, h, tau)
    nhn = np.einsum("ni,nij,nj->n", nu, h, nu)
    curv = -tht / gn
    return tau, nu, gn, curv, nhn


def _march(wall, start, direction, step, max_length, curve_tol, closure_ref=None):
    """Predictor-corrector marching from ``start`` in +-tau direction.

    Returns (points, closed): points excludes ``start`` itself; ``closed``
    is True when the path returned to ``closure_ref`` (forward runs only).
    """
    pts = []
    p = np.asarray(start, dtype=float)
    traveled = 0.0
    min_loop = 5 * step
    while traveled < max_length:
        tau, _, gn, _, _ = _frame_at(wall, p[None, :])
        if gn[0] < 1e-8:
            raise DegenerateGradient("gradient degenerates along the traced path")
        cand = p + direction * step * tau[0]
        if not bool(wall.contains(cand[0], cand[1])):
            break
        cand = _project_to_curve(wall, cand, curve_tol)
        pts.append(cand)
        traveled += step
        if closure_ref is not None and traveled > min_loop:
            if np.hypot(*(cand - closure_ref)) < 0.75 * step:
                tau_c, _, _, _, _ = _frame_at(wall, cand[None, :])
                tau_0, _, _, _, _ = _frame_at(wall, closure_ref[None, :])
                if float(tau_c[0] @ tau_0[0]) > 0.8:
                    pts.pop()  # the closing point duplicates the start
                    return np.array(pts), True
        p = cand
    return (np.array(pts) if pts else np.zeros((0, 2))), False


def _segment_lengths(spline, t):
    """Arclength of each spline interval via 7-point Gauss-Legendre."""
    out = np.empty(len(t) - 1)
    for i in range(len(t) - 1):
        nodes, wts = gl_panel(t[i], t[i + 1], 7)
        d = spline(nodes, 1)
        out[i] = float(np.sum(wts * np.hypot(d[:, 0], d[:, 1])))
    return out


def trace_level_set(
    wall,
    seed,
    step=0.01,
    max_length=200.0,
    curve_tol=1e-12,
    mu_min=1e-6,
    seed_reach=0.5,
    arclength_passes=3,
):
    """Trace the zero level set of ``wall`` through (a projection of) ``seed``.

    The tracer marches with tangent predictor steps and Newton correctors,
    detects closure, and reparametrizes to arclength by iterating
    chord-length fits with spline quadrature.  The returned samples are
    spaced by approximately ``step`` and the seed projects to arclength 0.

    Raises NoConvergence when the seed is outside the domain or too far
    from Gamma for the projection to be trusted, DegenerateGradient when
    |grad kappa| degenerates, and CurveLeavesDomain when no usable curve
    fits inside the domain bounds.
    """
    seed = np.asarray(seed, dtype=float)
    if not bool(wall.contains(seed[0], seed[1])):
        raise NoConvergence(f"seed {tuple(seed)} lies outside the wall's domain bounds")
    g = np.asarray(wall.grad(seed[0], seed[1]), dtype=float)
    gn = float(np.hypot(g[0], g[1]))
    if gn < 1e-8:
        raise DegenerateGradient("|grad kappa| vanishes at the seed")
    if abs(float(wall.kappa(seed[0], seed[1]))) > seed_reach * gn:
        raise NoConvergence("seed too far from the level set for Newton projection")
    p0 = _project_to_curve(wall, seed, curve_tol)

    fwd, closed = _march(wall, p0, +1.0, step, max_length, curve_tol, closure_ref=p0)
    if closed:
        pts = np.vstack([p0[None, :], fwd])
    else:
        bwd, _ = _march(wall, p0, -1.0, step, max_length, curve_tol)
        pts = np.vstack([bwd[::-1], p0[None, :], fwd])
    if len(pts) < 8:
        raise CurveLeavesDomain("traced curve has fewer than 8 usable samples inside the domain")

    # Iterated arclength reparametrization: spline fit, arclength by
    # quadrature, uniform resample, Newton reprojection onto Gamma.
    for _ in range(arclength_passes):
        if closed:
            t = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(pts, axis=0).T))])
            t = np.append(t, t[-1] + np.hypot(*(pts[0] - pts[-1])))
            spl = CubicSpline(t, np.vstack([pts, pts[:1]]), bc_type="periodic")
        else:
            t = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(pts, axis=0).T))])
            spl = CubicSpline(t, pts, bc_type="natural")
        seg = _segment_lengths(spl, spl.x)
        s = np.concatenate([[0.0], np.cumsum(seg)])
        total = s[-1]
        n = max(int(round(total / step)), 8)
        u = np.linspace(0.0, total, n, endpoint=False) if closed else np.linspace(0.0, total, n + 1)
        t_of_s = PchipInterpolator(s, spl.x)
        pts = spl(t_of_s(u))
        pts = np.array([_project_to_curve(wall, q, curve_tol) for q in pts])

    # Final accurate arclengths of the (reprojected) samples.
    if closed:
        t = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(pts, axis=0).T))])
        t = np.append(t, t[-1] + np.hypot(*(pts[0] - pts[-1])))
        spl = CubicSpline(t, np.vstack([pts, pts[:1]]), bc_type="periodic")
        seg = _segment_lengths(spl, spl.x)
        x_arc = np.concatenate([[0.0], np.cumsum(seg)])
        total_length = x_arc[-1]
        x_arc = x_arc[:-1]
    else:
        t = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(pts, axis=0).T))])
        spl = CubicSpline(t, pts, bc_type="natural")
        seg = _segment_lengths(spl, spl.x)
        x_arc = np.concatenate([[0.0], np.cumsum(seg)])
        total_length = None

    tau, nu, mu, curv, knn = _frame_at(wall, pts)
    if np.min(mu) < mu_min:
        raise DegenerateGradient(f"wall slope falls below mu_min={mu_min} along Gamma")

    theta = np.unwrap(np.arctan2(tau[:, 1], tau[:, 0]))
    winding = 0.0
    if closed:
        # Holonomy of the tangent angle around the loop: integral of the
        # signed curvature, snapped to the topologically exact +-2*pi.
        loop = np.trapezoid(np.append(curv, curv[0]), np.append(x_arc, total_length))
        winding = 2.0 * np.pi * np.round(loop / (2.0 * np.pi))
        if winding == 0.0:
            raise CurveLeavesDomain("closed curve with zero tangent winding; tracing failed")

    curve = LevelCurve(
        wall=wall,
        x=x_arc,
        points=pts,
        tau=tau,
        nu=nu,
        curvature=curv,
        mu=mu,
        theta=theta,
        kappa_nn=knn,
        closed=closed,
        total_length=total_length,
        winding=winding,
    )

    # Shift the arclength origin to the projected seed.
    x_seed = curve.locate(p0)
    curve = curve.shift_origin(x_seed)
    return curve


@dataclass
class LevelCurve:
    """Arclength-parametrized level curve with frame, slope, and curvature.

    Immutable after construction (treat arrays as read-only); all accessors
    are pure and safe to share across threads.
    """

    wall: DomainWall
    x: np.ndarray
    points: np.ndarray
    tau: np.ndarray
    nu: np.ndarray
    curvature: np.ndarray
    mu: np.ndarray
    theta: np.ndarray
    kappa_nn: np.ndarray
    closed: bool
    total_length: float | None
    winding: float = 0.0
    _gamma: CubicSpline = field(default=None, repr=False, compare=False)
    _theta_spl: CubicSpline = field(default=None, repr=False, compare=False)
    _tree: cKDTree = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.closed:
            xs = np.append(self.x, self.total_length)
            ps = np.vstack([self.points, self.points[:1]])
            self._gamma = CubicSpline(xs, ps, bc_type="periodic")
            th = np.append(self.theta, self.theta[0] + self.winding)
            k0 = float(self.curvature[0])
            self._theta_spl = CubicSpline(xs, th, bc_type=((1, k0), (1, k0)))
        else:
            self._gamma = CubicSpline(self.x, self.points, bc_type="natural")
            self._theta_spl = CubicSpline(self.x, self.theta, bc_type="natural")
        self._tree = cKDTree(self.points)

    # -- parameter handling --------------------------------------------------

    def reduce(self, xt):
        """Representative arclength: mod L for closed curves, identity otherwise."""
        xt = np.asarray(xt, dtype=float)
        if self.closed:
            return np.mod(xt, self.total_length)
        return xt

    def _check_range(self, xt, tol=1e-9):
        if self.closed:
            return
        xt = np.asarray(xt, dtype=float)
        lo, hi = self.x[0] - tol, self.x[-1] + tol
        if np.any(xt < lo) or np.any(xt > hi):
            raise OutOfRange(
                f"arclength outside parametrized range [{self.x[0]:.6g}, {self.x[-1]:.6g}]"
            )

    def _eval_free(self, xt, der=0):
        """Spline evaluation without range checks (closed: reduced, open: clamped)."""
        xt = np.asarray(xt, dtype=float)
        if self.closed:
            return self._gamma(np.mod(xt, self.total_length), der)
        return self._gamma(np.clip(xt, self.x[0], self.x[-1]), der)

    # -- geometric accessors --------------------------------------------------

    def gamma(self, xt):
        self._check_range(xt)
        return self._gamma(self.reduce(xt))

    def tangent(self, xt):
        self._check_range(xt)
        d = self._gamma(self.reduce(xt), 1)
        return d / np.linalg.norm(d, axis=-1, keepdims=True)

    def normal(self, xt):
        t = self.tangent(xt)
        return np.stack([-t[..., 1], t[..., 0]], axis=-1)

    def slope(self, xt):
        """Wall slope mu(xt) = grad kappa . nu, evaluated analytically on Gamma."""
        self._check_range(xt)
        p = self.gamma(xt)
        g = self.wall.grad(p[..., 0], p[..., 1])
        return np.sum(g * self.normal(xt), axis=-1)

    def curvature_at(self, xt):
        self._check_range(xt)
        p = self.gamma(xt)
        t = self.tangent(xt)
        h = self.wall.hess(p[..., 0], p[..., 1])
        gn = self.wall.grad_norm(p[..., 0], p[..., 1])
        return -np.einsum("...i,...ij,...j->...", t, h, t) / gn

    def kappa_nn_at(self, xt):
        self._check_range(xt)
        p = self.gamma(xt)
        n = self.normal(xt)
        h = self.wall.hess(p[..., 0], p[..., 1])
        return np.einsum("...i,...ij,...j->...", n, h, n)

    def theta_at(self, xt):
        """Tangent angle, continuous across the closed-curve seam (winding added)."""
        self._check_range(xt)
        xt = np.asarray(xt, dtype=float)
        if self.closed:
            wraps = np.floor(xt / self.total_length)
            return self._theta_spl(xt - wraps * self.total_length) + wraps * self.winding
        return self._theta_spl(xt)

    # -- misc ------------------------------------------------------------------

    def locate(self, p):
        """Arclength of the point on the curve closest to p (p near Gamma)."""
        p = np.asarray(p, dtype=float)
        _, idx = self._tree.query(p)
        xt = float(self.x[idx])
        for _ in range(40):
            d = self._gamma(self.reduce(xt)) - p
            t = self._gamma(self.reduce(xt), 1)
            f = float(d @ t)
            fp = float(t @ t + d @ self._gamma(self.reduce(xt), 2))
            if abs(fp) < 1e-14:
                break
            dx = f / fp
            xt -= dx
            if abs(dx) < 1e-13:
                break
        return xt

    def shift_origin(self, x0):
        """New curve with arclength origin moved to x0 (seed normalization)."""
        if abs(x0) < 1e-14:
            return self
        if self.closed:
            x_new = np.mod(self.x - x0, self.total_length)
            order = np.argsort(x_new)
            return LevelCurve(
                wall=self.wall,
                x=x_new[order],
                points=self.points[order],
                tau=self.tau[order],
                nu=self.nu[order],
                curvature=self.curvature[order],
                mu=self.mu[order],
                theta=np.unwrap(self.theta[order]),
                kappa_nn=self.kappa_nn[order],
                closed=True,
                total_length=self.total_length,
                winding=self.winding,
            )
        return LevelCurve(
            wall=self.wall,
            x=self.x - x0,
            points=self.points,
            tau=self.tau,
            nu=self.nu,
            curvature=self.curvature,
            mu=self.mu,
            theta=self.theta,
            kappa_nn=self.kappa_nn,
            closed=False,
            total_length=None,
            winding=0.0,
        )

    def min_boundary_distance(self):
        return float(np.min(self.wall.boundary_distance(self.points[:, 0], self.points[:, 1])))

    def max_abs_curvature(self):
        return float(np.max(np.abs(self.curvature)))

    def to_csv(self, path):
        """Export samples: xt, x, y, taux, tauy, nux, nuy, k, mu."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["xt", "x", "y", "taux", "tauy", "nux", "nuy", "k", "mu"])
            for i in range(len(self.x)):
                w.writerow(
                    [f"{v:.12g}" for v in (
                        self.x[i], self.points[i, 0], self.points[i, 1],
                        self.tau[i, 0], self.tau[i, 1], self.nu[i, 0], self.nu[i, 1],
                        self.curvature[i], self.mu[i],
                    )]
                )


def wall_slope(curve, xt):
    """mu(xt) = grad kappa . nu along the curve; positive by construction."""
    return curve.slope(xt)


def default_eta(curve):
    """Tube half-width: min(0.4/max|k|, boundary distance) / 2."""
    cands = [curve.min_boundary_distance()]
    kmax = curve.max_abs_curvature()
    if kmax > 0:
        cands.append(0.4 / kmax)
    return 0.5 * float(min(cands))


@dataclass
class RectificationMap:
    """Tubular-coordinate map Phi(xt, yt) = gamma(xt) + yt nu(xt).

    ``eta`` is the half-width on which the cutoff is identically one; the
    map itself is used (and invertible) on |yt| <= 2 eta, which requires
    2 eta max|k| < 1.  Immutable and thread-safe after construction.
    """

    curve: LevelCurve
    eta: float = None

    def __post_init__(self):
        if self.eta is None:
            self.eta = default_eta(self.curve)
        self.eta = float(self.eta)
        kmax = self.curve.max_abs_curvature()
        if 2.0 * self.eta * kmax >= 1.0:
            raise ValueError(
                f"tube too wide: 2*eta*max|k| = {2 * self.eta * kmax:.3g} >= 1"
            )
        self._grid_cache = {}

    def grid_inverse(self, grid):
        """Cached inverse_array over a GridSpec2D's meshgrid (reused by
        pushforwards, observables, and repeated snapshot comparisons)."""
        tube = self._grid_cache.get(grid)
        if tube is None:
            X, Y = grid.meshgrid()
            tube = self.inverse_array(X.ravel(), Y.ravel())
            self._grid_cache[grid] = tube
        return tube

    def forward(self, xt, yt):
        """Physical point of tube coordinates; raises OutsideTube beyond 2 eta."""
        xt = np.asarray(xt, dtype=float)
        yt = np.asarray(yt, dtype=float)
        if np.any(np.abs(yt) > 2.0 * self.eta * (1.0 + 1e-9)):
            raise OutsideTube(f"|yt| exceeds 2*eta = {2 * self.eta:.6g}")
        return self.curve.gamma(xt) + yt[..., None] * self.curve.normal(xt)

    def jacobian(self, xt, yt):
        """det dPhi = 1 - yt * k(xt), positive on the tube."""
        return 1.0 - np.asarray(yt, dtype=float) * self.curve.curvature_at(xt)

    def inverse(self, x, y):
        """Tube coordinates of a physical point (scalar interface).

        Raises OutsideTube when the point is farther than 2 eta from Gamma
        and NoConvergence when the Newton iteration stalls.
        """
        xt, yt, ok = self.inverse_array(np.atleast_1d(x), np.atleast_1d(y))
        if not bool(ok[0]):
            raise OutsideTube("point outside the 2*eta tube around Gamma")
        return float(xt[0]), float(yt[0])

    def inverse_array(self, x, y, newton_tol=1e-12, maxiter=40):
        """Vectorized inverse: returns (xt, yt, inside_mask).

        Points farther than 2 eta from the curve are masked out instead of
        raising; coordinates for masked points are unreliable.  Convergence
        is enforced only for points unambiguously inside the tube; edge and
        past-the-end stragglers are masked out.
        """
        x = np.asarray(x, dtype=float).ravel()
        y = np.asarray(y, dtype=float).ravel()
        pts = np.stack([x, y], axis=-1)
        dist, idx = self.curve._tree.query(pts)
        spacing = float(np.max(np.diff(np.sort(self.curve.x)))) if len(self.curve.x) > 1 else 0.0
        near = dist <= 2.0 * self.eta + 2.0 * spacing
        xt = self.curve.x[idx].astype(float)
        yt = np.zeros_like(xt)
        active = near.copy()
        cur = self.curve
        for _ in range(maxiter):
            if not np.any(active):
                break
            xa, ya = xt[active], yt[active]
            g = cur._eval_free(xa)
            d = cur._eval_free(xa, 1)
            d2 = cur._eval_free(xa, 2)
            dn = np.linalg.norm(d, axis=-1, keepdims=True)
            t = d / dn
            n = np.stack([-t[..., 1], t[..., 0]], axis=-1)
            k = (d[..., 0] * d2[..., 1] - d[..., 1] * d2[..., 0]) / dn[..., 0] ** 3
            r = pts[active] - (g + ya[:, None] * n)
            dxt = np.sum(r * t, axis=-1) / np.maximum(1.0 - ya * k, 0.05)
            dyt = np.sum(r * n, axis=-1)
            xt[active] += dxt
            yt[active] += dyt
            done = np.hypot(dxt, dyt) < newton_tol
            still = active.copy()
            still[active] = ~done
            active = still
        g = cur._eval_free(xt)
        d = cur._eval_free(xt, 1)
        t = d / np.linalg.norm(d, axis=-1, keepdims=True)
        n = np.stack([-t[..., 1], t[..., 0]], axis=-1)
        res = np.hypot(*(pts - (g + yt[:, None] * n)).T)
        converged = res < 1e-9
        inside = near & converged & (np.abs(yt) <= 2.0 * self.eta * (1.0 + 1e-9))
        if not self.curve.closed:
            inside &= (xt >= self.curve.x[0] - 1e-9) & (xt <= self.curve.x[-1] + 1e-9)
            core = near & (dist <= 2.0 * self.eta - spacing) & \
                (self.curve.x[idx] > self.curve.x[0] + 2 * spacing) & \
                (self.curve.x[idx] < self.curve.x[-1] - 2 * spacing)
        else:
            core = near & (dist <= 2.0 * self.eta - spacing)
        if np.any(core & ~converged):
            raise NoConvergence("tube inversion did not converge for interior points")
        xt = self.curve.reduce(xt)
        return xt, yt, inside


def phi_forward(rmap, xt, yt):
    """Spec-level alias for RectificationMap.forward (scalar or array)."""
    return rmap.forward(np.asarray(xt, dtype=float), np.asarray(yt, dtype=float))


def phi_inverse(rmap, p):
    """Spec-level alias for RectificationMap.inverse on a single point."""
    return rmap.inverse(p[0], p[1])

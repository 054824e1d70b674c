"""The acceptance experiments E1-E6 and the property suites.

Each experiment builds its own walls/packets/solvers, measures the
quantities its criteria gate, writes artifacts under the output
directory, and returns ReportRows (one per criterion or sub-criterion).
Everything is deterministic given the config seed.
"""

import os
from pathlib import Path

import numpy as np

from . import pde
from .eikonal import phase_hessian, solve_phase, stationary_point
from .errors import ConfigError
from .fields import Field, GridSpec2D, write_field
from .geometry import DomainWall, RectificationMap, trace_level_set
from .pde import DiracSolver, EnergyNorm, KGSolver, compare, observables, residual
from .report import ReportRow, write_rows
from .spectral import (
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
    transverse_spectrum_fd,
)
from .utils import loglog_slope, unwrap_series
from .wavepacket import (
    Envelope,
    RealEnvelope,
    WavepacketSpec,
    assemble_rectified,
    evaluate_physical,
    quadrature_oracle,
    relativistic_mode,
    relativistic_pair,
    stationary_phase_eval,
)

__all__ = ["run_experiment", "EXPERIMENTS"]


# ---------------------------------------------------------------------------
# Shared setup helpers
# ---------------------------------------------------------------------------


def _flat_wall(xmax=2.2, ymax=1.1):
    return DomainWall.flat_y((-xmax, xmax, -ymax, ymax))


def _flat_curve(wall, step=0.02):
    return trace_level_set(wall, (0.0, 0.0), step=step)


def _resolved_n(length, eps, per_sqrt_eps=8, minimum=32):
    h = np.sqrt(eps) / per_sqrt_eps
    return max(minimum, int(np.ceil(length / h)))


def _dirac_dt(eps, t_end, target=5e-4):
    """Step size from the measured order-4 error model 0.4 eps^{-5/2} t dt^4."""
    return (target * eps**2.5 / (0.4 * max(t_end, 1e-9))) ** 0.25


def _kg_dt(solver, eps, t_end, target=1e-3):
    acc = np.sqrt(target * eps**1.5 / (0.06 * max(t_end, 1e-9)))
    return min(0.45 * solver.stable_dt(), acc)


def _flat_field_from_rect(grid, rect):
    """On the flat wall rectified coordinates are physical coordinates."""
    return Field(grid, rect.values, time=rect.time, epsilon=rect.epsilon)


def _dirac_band_overlap(field, eps, mu=1.0):
    """||P0 u|| / ||u||: projection onto the m=0 traveling band.

    P0 projects onto span{ f(x) chi0(y/sqrt(eps)) (1,-1)/sqrt2 } over all
    envelopes f, which majorizes the overlap with every m=0 traveling
    profile (Cauchy-Schwarz).
    """
    g = field.grid
    y = g.y
    phi0 = (mu / (np.pi * eps)) ** 0.25 * np.exp(-mu * y * y / (2.0 * eps))
    minus = (field.values[0] - field.values[1]) / np.sqrt(2.0)
    amp = (minus * phi0[None, :]).sum(axis=1) * g.hy
    band = np.sqrt(np.sum(np.abs(amp) ** 2) * g.hx)
    return band / field.l2_norm()


def _center_speed(times, centers, closed_length=None):
    c = np.asarray(centers, dtype=float)
    if closed_length:
        c = unwrap_series(c, closed_length)
    return float(np.polyfit(np.asarray(times, dtype=float), c, 1)[0])


def _row(exp, eps, t, metric, value, tol_text, ok):
    return ReportRow(exp, float(eps), float(t), metric, float(value), tol_text, bool(ok))


# ---------------------------------------------------------------------------
# E1: flat-wall exact kernel membership
# ---------------------------------------------------------------------------


def run_e1(cfg, out):
    eps = float(cfg.params.get("epsilon", 1e-2))
    ms_d = ModelSpec(Model.DIRAC, eps)
    ms_k = ModelSpec(Model.KLEIN_GORDON, eps)
    wall = _flat_wall()
    curve = _flat_curve(wall)
    rmap = RectificationMap(curve, eta=0.5)
    nx = _resolved_n(4.4, eps)
    ny = _resolved_n(2.2, eps)
    grid = GridSpec2D.from_box((-2.2, 2.2), (-1.1, 1.1), nx, ny)
    t_eval = 0.3
    rows = []

    env_r = RealEnvelope.gaussian(1.0)
    prov_u0 = lambda t: relativistic_mode(ms_d, dirac_branch(0), rmap, env_r, 0.0, t, grid)
    r = residual(ms_d, wall, prov_u0, t_eval, grid)
    rows.append(_row("E1", eps, t_eval, "residual_dirac_u0", r, "<1e-7", r < 1e-7))

    env_b = Envelope.bump(0.7, 1.3)
    for s in (+1, -1):
        br = dirac_branch(1, s)
        ph = solve_phase(ms_d, br, curve, 0.0, (-2.0, 4.0))
        spec = WavepacketSpec(model=ms_d, branch=br, phase=ph, envelope=env_b, x0=0.0)

        def prov(t, spec=spec):
            rect = assemble_rectified(spec, t, grid.x, grid.y)
            return _flat_field_from_rect(grid, rect)

        r = residual(ms_d, wall, prov, t_eval, grid)
        rows.append(
            _row("E1", eps, t_eval, f"residual_dirac_u1_s{s:+d}", r, "<1e-7", r < 1e-7)
        )

    for s in (+1, -1):
        br = kg_branch(0, s)
        prov = lambda t, br=br: relativistic_mode(ms_k, br, rmap, env_r, 0.0, t, grid)
        r = residual(ms_k, wall, prov, t_eval, grid)
        rows.append(
            _row("E1", eps, t_eval, f"residual_kg_u_s{s:+d}", r, "<1e-7", r < 1e-7)
        )
    return rows


# ---------------------------------------------------------------------------
# E2: curved-wall error scaling
# ---------------------------------------------------------------------------


def _e2_ansatz_field(kind, ms, curve, rmap, grid, t, env_r, spec):
    if kind == "relativistic":
        return relativistic_mode(ms, dirac_branch(0), rmap, env_r, 0.0, t, grid)
    # dispersive: separable rectified assembly + bicubic pushforward (the
    # interpolation error ~1e-5 is far below the measured O(sqrt(eps)))
    sq = np.sqrt(ms.epsilon)
    mid = 0.5 * (spec.envelope.support[0] + spec.envelope.support[1])
    center = float(spec.phase.dB(mid)) * t
    h = sq / 8.0
    xt = np.arange(center - 1.3, center + 1.3 + h, h)
    yt = np.arange(-2 * rmap.eta, 2 * rmap.eta + h, h)
    rect = assemble_rectified(spec, t, xt, yt)
    from .wavepacket import push_forward

    return push_forward(rmap, rect, grid, center_hint=center)


def run_e2(cfg, out):
    """Curved-wall error scaling.

    The error of a dispersive packet beats against the neighbouring
    branches at frequency (E_{m'} - E_m)/sqrt(eps), so a fixed-time sample
    aliases an O(sqrt(eps))-amplitude oscillation; the scaling observable
    is the maximum of the energy error over a window of times spanning at
    least one beat period at the largest epsilon.
    """
    eps_list = [float(e) for e in cfg.params.get("epsilons", (1.6e-2, 4e-3, 1e-3))]
    grids = {e: int(n) for e, n in zip(eps_list, cfg.params.get("grids", (256, 512, 1024)))}
    # 12 samples over [0.6, 1.2]: the window spans >= half a beat period
    # (hence contains an error peak) at every epsilon in the list.
    snap_times = [float(t) for t in cfg.params.get(
        "snapshots", np.round(np.linspace(0.6, 1.2, 12), 6)
    )]
    t_end = max(snap_times)
    wall = DomainWall.circle(1.0)
    curve = trace_level_set(wall, (1.0, 0.0), step=0.005)
    rmap = RectificationMap(curve)
    norm = EnergyNorm(Model.DIRAC)
    env_r = RealEnvelope.gaussian(1.0)
    env_d = Envelope.gaussian(1.0, 0.2)
    rows = []

    for kind in ("relativistic", "dispersive"):
        errors = {}
        for eps in eps_list:
            ms = ModelSpec(Model.DIRAC, eps)
            n = grids[eps]
            grid = GridSpec2D.from_box((-1.8, 1.8), (-1.8, 1.8), n, n)
            spec = None
            if kind == "dispersive":
                br = dirac_branch(1, +1)
                ph = solve_phase(ms, br, curve, 0.0, (-2.0, 4.0))
                spec = WavepacketSpec(model=ms, branch=br, phase=ph, envelope=env_d, x0=0.0)
            u0 = _e2_ansatz_field(kind, ms, curve, rmap, grid, 0.0, env_r, spec)
            sol = DiracSolver(ms, wall, grid)
            _, snaps = sol.evolve(
                u0, t_end, _dirac_dt(eps, t_end, target=1.2e-3), order=4,
                snapshot_times=snap_times,
            )
            e = 0.0
            for snap in snaps:
                ref = _e2_ansatz_field(kind, ms, curve, rmap, grid, snap.time, env_r, spec)
                e = max(e, compare(snap, ref, norm))
            errors[eps] = e
            rows.append(_row("E2", eps, t_end, f"energy_error_{kind}", e, "-", True))
            if eps == max(eps_list):
                write_field(out / f"e2_{kind}_num_eps{eps:g}.bin", snaps[-1])
        for hi, lo in zip(eps_list[:-1], eps_list[1:]):
            if abs(hi / lo - 4.0) > 1e-9:
                continue
            ratio = errors[hi] / errors[lo]
            rows.append(
                _row(
                    "E2", hi, t_end, f"error_ratio_{kind}_{hi:g}_over_{lo:g}",
                    ratio, "[1.5,3]", 1.5 <= ratio <= 3.0,
                )
            )
    return rows


# ---------------------------------------------------------------------------
# E3: dispersive amplitude law
# ---------------------------------------------------------------------------


def _e3_max_amp(eps, t_values, sigma=0.8):
    ms = ModelSpec(Model.DIRAC, eps)
    wall = _flat_wall(xmax=3.2, ymax=1.1)
    curve = _flat_curve(wall)
    br = dirac_branch(1, +1)
    env = Envelope.gaussian(0.0, sigma)
    ph = solve_phase(ms, br, curve, 0.0, (env.support[0] - 1, env.support[1] + 1))
    spec = WavepacketSpec(model=ms, branch=br, phase=ph, envelope=env, x0=0.0)
    # |v| varies on O(1) scales; coarse sampling of the modulus suffices.
    sq = np.sqrt(eps)
    yt = np.linspace(-8.0 * sq, 8.0 * sq, 81)
    out = []
    for t in t_values:
        xt = np.linspace(-(t + 0.5), t + 0.5, int(np.ceil((2 * t + 1) / 0.02)) + 1)
        rect = assemble_rectified(spec, float(t), xt, yt)
        out.append(float(np.max(rect.pointwise_abs())))
    return out


def run_e3(cfg, out):
    eps = float(cfg.params.get("epsilon", 1e-3))
    t_values = np.array([0.5, 0.65, 0.85, 1.1, 1.4, 1.7, 2.0])
    rows = []
    amps = _e3_max_amp(eps, t_values)
    slope = loglog_slope(t_values, amps)
    rows.append(_row("E3", eps, 2.0, "amplitude_slope", slope, "-0.5+-0.05", abs(slope + 0.5) <= 0.05))
    a_eps = _e3_max_amp(eps, [1.0])[0]
    a_2eps = _e3_max_amp(2 * eps, [1.0])[0]
    ratio = a_eps / a_2eps
    target = 2.0 ** 0.25
    rows.append(
        _row(
            "E3", eps, 1.0, "amplitude_eps_prefactor", ratio,
            f"{target:.6g}+-5%", abs(ratio - target) <= 0.05 * target,
        )
    )
    return rows


# ---------------------------------------------------------------------------
# E4: asymmetric relativistic transport
# ---------------------------------------------------------------------------


def run_e4(cfg, out):
    rows = []
    eps = float(cfg.params.get("epsilon", 4e-3))
    snap_times = [0.25, 0.5, 0.75, 1.0]

    # -- Dirac flat wall: center speed -1 and reversed-spinor decoherence.
    import scipy.fft as sfft

    ms = ModelSpec(Model.DIRAC, eps)
    wall = _flat_wall(xmax=2.2, ymax=0.9)
    curve = _flat_curve(wall)
    rmap = RectificationMap(curve, eta=0.4)
    nx = sfft.next_fast_len(_resolved_n(4.4, eps))
    ny = sfft.next_fast_len(_resolved_n(1.8, eps))
    grid = GridSpec2D.from_box((-2.2, 2.2), (-0.9, 0.9), nx, ny)
    env_r = RealEnvelope.gaussian(1.0)
    u0 = relativistic_mode(ms, dirac_branch(0), rmap, env_r, 0.5, 0.0, grid)
    sol = DiracSolver(ms, wall, grid)
    dt = _dirac_dt(eps, 1.0, target=1e-3)
    _, snaps = sol.evolve(u0, 1.0, dt, order=4, snapshot_times=snap_times)
    times = [0.0] + [s.time for s in snaps]
    centers = [observables(u0)["center"]] + [observables(s)["center"] for s in snaps]
    speed = _center_speed(times, centers)
    rows.append(_row("E4", eps, 1.0, "dirac_flat_center_speed", speed, "-1+-0.01", abs(speed + 1.0) <= 0.01))
    overlap_true = _dirac_band_overlap(snaps[-1], eps)
    rows.append(_row("E4", eps, 1.0, "dirac_flat_m0_overlap_control", overlap_true, ">=0.9", overlap_true >= 0.9))

    # Same Gaussian profile with the reversed spinor (1,1)/sqrt2: recover the
    # scalar amplitude g from u0 = g (1,-1)/sqrt2 and reattach it to (1,1).
    amp = (u0.values[0] - u0.values[1]) / np.sqrt(2.0)
    rev = Field(grid, np.stack([amp, amp]) / np.sqrt(2.0), epsilon=eps, model="dirac")
    revT, _ = sol.evolve(rev, 1.0, dt, order=4)
    overlap_rev = _dirac_band_overlap(revT, eps)
    rows.append(_row("E4", eps, 1.0, "dirac_flat_reversed_overlap", overlap_rev, "<0.2", overlap_rev < 0.2))
    write_field(out / "e4_reversed_final.bin", revT)

    # -- Dirac circle wall: arclength center speed -1.
    wall_c = DomainWall.circle(1.0)
    curve_c = trace_level_set(wall_c, (1.0, 0.0), step=0.005)
    rmap_c = RectificationMap(curve_c)
    n = _resolved_n(3.6, eps, minimum=256)
    n = 2 ** int(np.ceil(np.log2(n)))
    grid_c = GridSpec2D.from_box((-1.8, 1.8), (-1.8, 1.8), n, n)
    u0c = relativistic_mode(ms, dirac_branch(0), rmap_c, env_r, 0.0, 0.0, grid_c)
    sol_c = DiracSolver(ms, wall_c, grid_c)
    _, snaps_c = sol_c.evolve(u0c, 1.0, _dirac_dt(eps, 1.0), order=4, snapshot_times=snap_times)
    X, Y = grid_c.meshgrid()
    tube = rmap_c.inverse_array(X.ravel(), Y.ravel())
    times = [0.0] + [s.time for s in snaps_c]
    cens = [observables(u0c, rmap_c, tube)["center"]] + [
        observables(s, rmap_c, tube)["center"] for s in snaps_c
    ]
    speed_c = _center_speed(times, cens, closed_length=curve_c.total_length)
    rows.append(_row("E4", eps, 1.0, "dirac_circle_center_speed", speed_c, "-1+-0.01", abs(speed_c + 1.0) <= 0.01))

    # -- KG flat wall: both directions, speed +-1.
    ms_k = ModelSpec(Model.KLEIN_GORDON, eps)
    sol_k = KGSolver(ms_k, wall, grid)
    dt_k = _kg_dt(sol_k, eps, 1.0)
    for s in (+1, -1):
        x0 = -0.5 * s
        u, du = relativistic_pair(ms_k, kg_branch(0, s), rmap, env_r, x0, 0.0, grid)
        state = Field(grid, np.stack([u.values[0], du.values[0]]), epsilon=eps, model="klein_gordon")
        _, snaps_k, _ = sol_k.evolve(state, 1.0, dt_k, snapshot_times=snap_times)
        times = [0.0] + [s2.time for s2 in snaps_k]
        cens = [observables(state, comps=(0,))["center"]] + [
            observables(s2, comps=(0,))["center"] for s2 in snaps_k
        ]
        speed = _center_speed(times, cens)
        rows.append(
            _row(
                "E4", eps, 1.0, f"kg_center_speed_s{s:+d}", speed,
                f"{s:+d}+-0.01", abs(speed - s) <= 0.01,
            )
        )
    return rows


# ---------------------------------------------------------------------------
# E5: support cone and non-stationary decay
# ---------------------------------------------------------------------------


def run_e5(cfg, out):
    eps = float(cfg.params.get("epsilon", 1e-3))
    ms = ModelSpec(Model.DIRAC, eps)
    wall = _flat_wall(xmax=3.0, ymax=1.1)
    curve = _flat_curve(wall)
    br = dirac_branch(1, +1)
    env = Envelope.bump(0.4, 1.6)
    ph = solve_phase(ms, br, curve, 0.0, (-1.0, 3.0))
    spec = WavepacketSpec(model=ms, branch=br, phase=ph, envelope=env, x0=0.0)
    sq = np.sqrt(eps)
    h = sq / 8.0
    xt = np.arange(-2.2, 2.2 + h, h)
    yt = np.arange(-12.0 * sq, 12.0 * sq + h, h)
    rows = []

    rect0 = assemble_rectified(spec, 0.0, xt, yt)
    dens0 = (rect0.pointwise_abs() ** 2).sum(axis=1)
    cum0 = np.cumsum(dens0) / dens0.sum()
    lo = xt[np.searchsorted(cum0, 0.005)]
    hi = xt[np.searchsorted(cum0, 0.995)]
    w = max(abs(lo), abs(hi))

    t = 1.0
    rect1 = assemble_rectified(spec, t, xt, yt)
    dens1 = (rect1.pointwise_abs() ** 2).sum(axis=1)
    inside = np.abs(xt) <= 1.05 * t + w
    frac = float(dens1[inside].sum() / dens1.sum())
    rows.append(_row("E5", eps, t, "mass_fraction_in_cone", frac, ">=0.99", frac >= 0.99))

    peak = float(np.max(rect1.pointwise_abs()))
    far = quadrature_oracle(spec, t, 1.5 * t, 0.0)
    far_ratio = float(np.max(np.abs(far)) / peak)
    rows.append(_row("E5", eps, t, "far_field_ratio_r1.5", far_ratio, "<1e-4", far_ratio < 1e-4))
    return rows


# ---------------------------------------------------------------------------
# E6: stationary phase vs quadrature
# ---------------------------------------------------------------------------


def _e6_setup(eps):
    ms = ModelSpec(Model.DIRAC, eps)
    wall = _flat_wall(xmax=2.4, ymax=1.1)
    curve = _flat_curve(wall)
    br = dirac_branch(1, +1)
    env = Envelope.gaussian(0.0, 2.0)
    ph = solve_phase(ms, br, curve, 0.0, (env.support[0] - 1, env.support[1] + 1))
    return WavepacketSpec(model=ms, branch=br, phase=ph, envelope=env, x0=0.0)


def run_e6(cfg, out):
    eps = float(cfg.params.get("epsilon", 1e-3))
    rng = np.random.default_rng(cfg.seed)
    rows = []
    t = 1.0
    spec = _e6_setup(eps)

    pts = rng.uniform(-0.8, 0.8, size=6)
    zs = rng.uniform(-1.0, 1.0, size=6) * np.sqrt(eps)
    errs = []
    for r, y in zip(pts, zs):
        sp = stationary_phase_eval(spec, t, float(r), float(y), warn=False)
        q = quadrature_oracle(spec, t, float(r), float(y))
        errs.append(float(np.max(np.abs(sp - q)) / np.max(np.abs(q))))
    worst = max(errs)
    rows.append(_row("E6", eps, t, "sp_vs_quadrature_max_rel_err", worst, "<0.05", worst < 0.05))

    spec4 = _e6_setup(eps / 4.0)
    r0 = 0.5
    q1 = quadrature_oracle(spec, t, r0, 0.0)
    q4 = quadrature_oracle(spec4, t, r0, 0.0)
    e1 = float(np.max(np.abs(stationary_phase_eval(spec, t, r0, 0.0, warn=False) - q1)) / np.max(np.abs(q1)))
    e4 = float(np.max(np.abs(stationary_phase_eval(spec4, t, r0, 0.0, warn=False) - q4)) / np.max(np.abs(q4)))
    ratio = e1 / e4
    rows.append(_row("E6", eps, t, "sp_error_ratio_eps_over_eps4", ratio, "[1.5,3]", 1.5 <= ratio <= 3.0))

    xi_star = stationary_point(spec.phase, t, 1.0 / np.sqrt(3.0))
    err = abs(xi_star - 1.0)
    rows.append(_row("E6", eps, t, "stationary_point_at_inv_sqrt3", err, "<=1e-8", err <= 1e-8))
    return rows


# ---------------------------------------------------------------------------
# Property suites
# ---------------------------------------------------------------------------


def run_props(cfg, out):
    rng = np.random.default_rng(cfg.seed)
    rows = []

    # Geometry: frame orthonormality/orientation, inverse roundtrip, Taylor law.
    wall = DomainWall.circle(1.0)
    curve = trace_level_set(wall, (1.0, 0.0), step=0.005)
    rmap = RectificationMap(curve)
    det = curve.tau[:, 0] * curve.nu[:, 1] - curve.tau[:, 1] * curve.nu[:, 0]
    err = float(np.max(np.abs(det - 1.0)))
    rows.append(_row("props", 0, 0, "geometry_frame_det", err, "<=1e-12", err <= 1e-12))
    xts = rng.uniform(0.0, curve.total_length, 1000)
    yts = rng.uniform(-2 * rmap.eta, 2 * rmap.eta, 1000)
    pts = rmap.forward(xts, yts)
    xt2, yt2, ok = rmap.inverse_array(pts[:, 0], pts[:, 1])
    pts2 = rmap.forward(xt2, yt2)
    err = float(np.max(np.hypot(*(pts - pts2).T))) if ok.all() else np.inf
    rows.append(_row("props", 0, 0, "geometry_inverse_roundtrip", err, "<=1e-10", err <= 1e-10))
    # Taylor: |kappa(Phi) - yt mu| <= C yt^2, halving yt quarters the defect
    xs = rng.uniform(0.0, curve.total_length, 200)
    defect = []
    for h in (0.1, 0.05):
        p = rmap.forward(xs, np.full_like(xs, h))
        d = np.abs(wall.kappa(p[:, 0], p[:, 1]) - h * curve.slope(xs))
        defect.append(float(np.max(d)))
    q = defect[0] / defect[1]
    rows.append(_row("props", 0, 0, "geometry_taylor_quadratic", q, "[2.67,6]", 2.67 <= q <= 6.0))
    d1 = curve._gamma(np.linspace(0, curve.total_length, 1000), 1)
    err = float(np.max(np.abs(np.hypot(d1[:, 0], d1[:, 1]) - 1.0)))
    rows.append(_row("props", 0, 0, "geometry_arclength_fidelity", err, "<=1e-8", err <= 1e-8))

    # Spectral: orthonormality, ladder, diagonalization oracle.
    z = np.linspace(-14.0, 14.0, 7001)
    dz = z[1] - z[0]
    H = hermite_stack(12, z)
    gram = H @ H.T * dz
    err = float(np.max(np.abs(gram - np.eye(13))))
    rows.append(_row("props", 0, 0, "spectral_orthonormality", err, "<=1e-9", err <= 1e-9))
    worst = 0.0
    zz = z[np.abs(z) <= 8.0]
    for m in range(1, 11):
        h = 1e-3
        d = (8 * (hermite(m, zz + h) - hermite(m, zz - h))
             - (hermite(m, zz + 2 * h) - hermite(m, zz - 2 * h))) / (12 * h)
        lhs = zz * hermite(m, zz) + d
        worst = max(worst, float(np.max(np.abs(lhs - np.sqrt(2.0 * m) * hermite(m - 1, zz)))))
    rows.append(_row("props", 0, 0, "spectral_ladder_identity", worst, "<=1e-8", worst <= 1e-8))
    worst = 0.0
    for mu in (1.0, 2.0):
        for xi in (-2.0, 0.0, 2.0):
            es = transverse_spectrum_fd(Model.DIRAC, xi, mu, count=7)
            pred = sorted([-xi] + [s * np.sqrt(2 * m * mu + xi * xi) for m in (1, 2, 3) for s in (1, -1)])
            worst = max(worst, float(np.max(np.abs(np.sort(es) - np.asarray(pred)))))
            esk = transverse_spectrum_fd(Model.KLEIN_GORDON, xi, mu, count=4)
            predk = sorted(
                [s * np.sqrt(2 * m * mu + xi * xi) for m in (0, 1, 2, 3) for s in (1, -1)],
                key=abs,
            )[: len(esk)]
            worst = max(worst, float(np.max(np.abs(np.sort(esk) - np.sort(np.asarray(predk))))))
    rows.append(_row("props", 0, 0, "spectral_diagonalization_oracle", worst, "<=1e-4", worst <= 1e-4))
    # group velocity strictly subluminal on Dirac branches
    xi = np.linspace(-50, 50, 2001)
    vmax = 0.0
    for m in (1, 2, 3):
        for s in (+1, -1):
            vmax = max(vmax, float(np.max(np.abs(group_velocity(Model.DIRAC, dirac_branch(m, s), xi, 1.0)))))
    rows.append(_row("props", 0, 0, "spectral_subluminal", vmax, "<1", vmax < 1.0))

    # Eikonal: residual and Hessian consistency on a variable wall.
    ms = ModelSpec(Model.DIRAC, 1e-2)
    wall_v = DomainWall.from_expression("y*(1 + 0.3*exp(-x**2))", (-3, 3, -1.5, 1.5))
    curve_v = trace_level_set(wall_v, (0.0, 0.0), step=0.02)
    ph = solve_phase(ms, dirac_branch(1, +1), curve_v, 0.0, (0.8, 1.4), x_range=(-2.5, 2.5))
    xg = np.linspace(ph.valid_range[0], ph.valid_range[1], 41)
    qg = np.linspace(0.8, 1.4, 13)
    kk = ph.k(xg[None, :], qg[:, None])
    mu_g = curve_v.slope(xg)
    res = np.abs(dispersion(Model.DIRAC, ph.branch, kk, mu_g[None, :]) - ph.B(qg)[:, None])
    err = float(np.max(res))
    rows.append(_row("props", 1e-2, 0, "eikonal_residual", err, "<=1e-10", err <= 1e-10))
    xi_s = stationary_point(ph, 1.0, 0.35)
    g2 = phase_hessian(ph, 1.0, 0.35, xi_s)
    h = 1e-4
    fd = (float(ph.dG_dxi(1.0, 0.35, xi_s + h)) - float(ph.dG_dxi(1.0, 0.35, xi_s - h))) / (2 * h)
    err = abs(g2 - fd) / (1.0 + abs(g2))
    rows.append(_row("props", 1e-2, 0, "eikonal_hessian_vs_fd", err, "<=1e-6", err <= 1e-6))
    resid = abs(float(ph.dG_dxi(1.0, 0.35, xi_s)))
    rows.append(_row("props", 1e-2, 0, "eikonal_newton_residual", resid, "<1e-11", resid < 1e-11))
    # Hamiltonian flow: center from dG/dxi=0 moves at the group velocity.
    from scipy.optimize import brentq

    xi0, t0, hh = 1.1, 0.5, 1e-3

    def _center(t):
        return brentq(lambda x: float(ph.dG_dxi(t, x, xi0)), -1.5, 1.5, xtol=1e-14)

    dc = (8 * (_center(t0 + hh) - _center(t0 - hh))
          - (_center(t0 + 2 * hh) - _center(t0 - 2 * hh))) / (12 * hh)
    c0 = _center(t0)
    vg = float(group_velocity(Model.DIRAC, ph.branch, ph.k(c0, xi0), curve_v.slope(np.asarray(c0))))
    err = abs(dc - vg)
    rows.append(_row("props", 1e-2, 0, "eikonal_transport_consistency", err, "<=1e-6", err <= 1e-6))

    # Solver invariants: unitarity over 1e4 steps; KG energy drift.
    eps = 1e-2
    ms_d = ModelSpec(Model.DIRAC, eps)
    wall_f = _flat_wall(xmax=1.6, ymax=0.8)
    curve_f = trace_level_set(wall_f, (0.0, 0.0), step=0.02)
    rmap_f = RectificationMap(curve_f, eta=0.35)
    grid = GridSpec2D.from_box((-1.6, 1.6), (-0.8, 0.8), 128, 64)
    env_r = RealEnvelope.gaussian(0.6)
    u0 = relativistic_mode(ms_d, dirac_branch(0), rmap_f, env_r, 0.0, 0.0, grid)
    sol = DiracSolver(ms_d, wall_f, grid)
    n0 = u0.l2_norm()
    U = u0.values
    drift = 0.0
    for i in range(10000):
        U = sol.step(U, 1e-4, order=2)
        if (i + 1) % 1000 == 0:
            drift = max(drift, abs(float(np.sqrt(np.sum(np.abs(U) ** 2) * grid.cell_area)) - n0))
    rows.append(_row("props", eps, 1.0, "dirac_unitarity_drift_1e4", drift, "<1e-10", drift < 1e-10))

    ms_k = ModelSpec(Model.KLEIN_GORDON, eps)
    sol_k = KGSolver(ms_k, wall_f, grid)
    u, du = relativistic_pair(ms_k, kg_branch(0, -1), rmap_f, env_r, 0.0, 0.0, grid)
    state = Field(grid, np.stack([u.values[0], du.values[0]]), epsilon=eps, model="klein_gordon")
    _, _, edrift = sol_k.evolve(state, 1.0, 0.5 * sol_k.stable_dt())
    rows.append(_row("props", eps, 1.0, "kg_energy_drift", edrift, "<1e-6", edrift < 1e-6))

    # Time reversal of the Dirac step.
    U = u0.values
    for _ in range(50):
        U = sol.step(U, 2e-3, order=2)
    for _ in range(50):
        U = sol.step(U, -2e-3, order=2)
    err = float(np.max(np.abs(U - u0.values)))
    rows.append(_row("props", eps, 0, "dirac_time_reversal", err, "<=1e-11", err <= 1e-11))
    return rows


EXPERIMENTS = {
    "E1": run_e1,
    "E2": run_e2,
    "E3": run_e3,
    "E4": run_e4,
    "E5": run_e5,
    "E6": run_e6,
    "props": run_props,
}


def run_experiment(cfg):
    """Dispatch one experiment; writes report.csv and returns its rows."""
    if cfg.experiment_id not in EXPERIMENTS:
        raise ConfigError(f"field 'experiment.id': no runner for {cfg.experiment_id!r}")
    pde.set_threads(cfg.threads)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = EXPERIMENTS[cfg.experiment_id](cfg, out)
    write_rows(out / "report.csv", rows)
    return rows

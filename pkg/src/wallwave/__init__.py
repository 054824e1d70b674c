"""Semiclassical wavepackets along curved domain-wall interfaces.

Construction of WKB edge wavepackets for 2-D Dirac and Klein-Gordon wall
models (rectified tube coordinates, spectral branches, eikonal phases,
oscillatory-integral assembly, stationary-phase asymptotics) plus direct
spectral PDE solvers and the validation experiments comparing the two.
"""

from .eikonal import PhaseSolution, phase_hessian, solve_phase, stationary_point
from .errors import WallwaveError
from .fields import Field, GridSpec2D, read_field, write_field
from .geometry import (
    DomainWall,
    LevelCurve,
    RectificationMap,
    trace_level_set,
    wall_slope,
)
from .pde import DiracSolver, EnergyNorm, KGSolver, compare, observables, residual
from .spectral import (
    BranchKind,
    BranchSpec,
    Model,
    ModelSpec,
    TransverseProfile,
    dirac_branch,
    dispersion,
    group_velocity,
    hermite,
    kg_branch,
    transverse_profile,
)
from .wavepacket import (
    Envelope,
    RealEnvelope,
    WavepacketSpec,
    assemble_rectified,
    evaluate_physical,
    max_amplitude_decay,
    push_forward,
    quadrature_oracle,
    relativistic_mode,
    stationary_phase_eval,
)

__version__ = "0.1.0"

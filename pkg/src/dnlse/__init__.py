"""Wavepacket spreading in the disordered discrete nonlinear Schrödinger chain

    i dpsi_n/dt = -psi_{n+1} - psi_{n-1} + eps_n psi_n + beta |psi_n|^p psi_n

with split-step propagation, reliability checks, disorder ensembles and
power-law analysis of the second moment.
"""

from .analysis import (
    AlphaCurve,
    CollapseResult,
    FitResult,
    fit_alpha,
    fit_stability,
    heuristic_ratio,
    running_alpha,
    scaling_collapse,
)
from .config import SimulationConfig, __version__
from .ensemble import EnsembleConfig, EnsembleResult, run_ensemble, sweep
from .model import (
    DisorderRealization,
    ModelParams,
    initial_wavepacket,
    linear_hamiltonian,
    make_disorder,
)
from .observables import (
    MomentSeries,
    energy,
    norm,
    participation_number,
    second_moment,
    tail_mass,
)
from .propagator import (
    SABA2,
    STRANG,
    SplitScheme,
    evolve,
    kinetic_step,
    potential_phase_step,
    saba_step,
    time_reverse_run,
)
from .validation import CriterionReport, check_t1, check_t2, check_t3

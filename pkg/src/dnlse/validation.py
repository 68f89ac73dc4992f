"""Reliability checks for numerical trajectories.

* ``t1`` integrates forward and back and measures how far the state is from
  where it started.
* ``t2`` compares the m2 series of one realization against a rerun at half
  the step.
* ``t3`` is the same comparison on ensemble averages.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import SimulationConfig
from .errors import DegenerateDenominatorError, GridMismatchError
from .model import initial_wavepacket, make_disorder
from .propagator import evolve, get_scheme, sample_grid, time_reverse_run

T1_THRESHOLD = 0.1
T2_THRESHOLD = 0.01
T3_THRESHOLD = 0.01
QUADRATURE = "trapezoid in t over samples t > 0, divided by the integration span"


@dataclass
class CriterionReport:
    criterion: str
    value: float
    threshold: float
    passed: bool = field(init=False)
    config: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        self.passed = bool(self.value < self.threshold)

    def to_dict(self) -> dict:
        return {
            "criterion": self.criterion,
            "value": self.value,
            "threshold": self.threshold,
            "passed": self.passed,
            "config": self.config,
            "details": self.details,
        }


def relative_deviation(t, coarse, fine) -> float:
    """Time average of ``|coarse - fine| / fine`` over the samples with ``t > 0``."""
    t = np.asarray(t, dtype=float)
    coarse = np.asarray(coarse, dtype=float)
    fine = np.asarray(fine, dtype=float)
    keep = t > 0
    t, coarse, fine = t[keep], coarse[keep], fine[keep]
    if np.any(fine == 0):
        raise DegenerateDenominatorError("reference m2 vanishes at a sample after t = 0")
    integrand = np.abs((coarse - fine) / fine)
    if len(t) == 1:
        return float(integrand[0])
    return float(np.trapezoid(integrand, t) / (t[-1] - t[0]))


def check_t1(config: SimulationConfig, seed: int, T: float) -> CriterionReport:
    """Time-reversal test; passes when the summed amplitude error is below 0.1."""
    cfg = config.resolved()
    disorder = make_disorder(seed, cfg.size, cfg.W)
    delta, _ = time_reverse_run(initial_wavepacket(cfg.size), disorder, cfg.params,
                                get_scheme(cfg.scheme), cfg.dt, T)
    return CriterionReport("t1", delta, T1_THRESHOLD, cfg.to_dict(),
                           {"seed": seed, "T": T, "norm": "l1 of complex differences"})


def check_t2(config: SimulationConfig, seed: int, T: float) -> CriterionReport:
    """Step-halving test on a single realization (same disorder for both runs)."""
    cfg = config.resolved()
    times = sample_grid(T, cfg.dt, cfg.n_samples)
    disorder = make_disorder(seed, cfg.size, cfg.W)
    psi0 = initial_wavepacket(cfg.size)
    kw = dict(centroid=cfg.centroid, margin=cfg.margin, threshold=cfg.tail_threshold)
    coarse = evolve(psi0, disorder, cfg.params, cfg.scheme, cfg.dt, T, times, **kw)
    fine = evolve(psi0, disorder, cfg.params, cfg.scheme, cfg.dt / 2, T, times, **kw)
    delta = relative_deviation(times, coarse.m2, fine.m2)
    return CriterionReport("t2", delta, T2_THRESHOLD, cfg.to_dict(),
                           {"seed": seed, "T": T, "quadrature": QUADRATURE})


def check_t3(coarse, fine) -> CriterionReport:
    """Step-halving test on ensemble averages (``coarse`` at dt, ``fine`` at dt/2)."""
    if len(coarse.t) != len(fine.t) or not np.array_equal(coarse.t, fine.t):
        raise GridMismatchError("ensemble averages were sampled on different time grids")
    if coarse.completed != fine.completed:
        raise GridMismatchError(
            f"realization counts differ: {coarse.completed} vs {fine.completed}")
    delta = relative_deviation(coarse.t, coarse.mean_m2, fine.mean_m2)
    return CriterionReport("t3", delta, T3_THRESHOLD, dict(coarse.meta.get("config", {})),
                           {"realizations": coarse.completed, "quadrature": QUADRATURE,
                            "fine_dt": fine.meta.get("config", {}).get("dt")})

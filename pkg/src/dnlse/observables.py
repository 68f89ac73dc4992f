"""Scalar diagnostics of a lattice state and the time series that holds them.

All functions reduce over the last axis, so they accept a single state of
shape ``(N,)`` or a stack of states of shape ``(R, N)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, LatticeMismatchError, UndefinedDiagnosticError
from .model import DisorderRealization, ModelParams, site_labels

COLUMNS = ("t", "m2", "norm", "energy", "participation", "tail_mass")
TAIL_MARGIN = 16
TAIL_THRESHOLD = 1e-8


def density(psi):
    psi = np.asarray(psi)
    return psi.real**2 + psi.imag**2


def norm(psi):
    return density(psi).sum(axis=-1)


def second_moment(psi, centroid: bool = False):
    """Sum of ``n**2 |psi_n|**2`` about the center site.

    With ``centroid=True`` the moment is taken about the instantaneous mean
    position instead.
    """
    rho = density(psi)
    n = site_labels(rho.shape[-1]).astype(float)
    # Elementwise sums rather than BLAS products keep stacked and single
    # states bitwise identical.
    m2 = (rho * n**2).sum(axis=-1)
    if centroid:
        mass = rho.sum(axis=-1)
        mean = (rho * n).sum(axis=-1) / mass
        m2 = m2 - mass * mean**2
    return m2


def nonlinear_density(rho, p: float):
    """``|psi|**p`` from ``rho = |psi|**2``; ``|0|**0`` is taken as 1."""
    if p == 2:
        return rho
    if p == 0:
        return np.ones_like(rho)
    return rho ** (0.5 * p)


def energy(psi, disorder: DisorderRealization, params: ModelParams):
    """Conserved Hamiltonian whose variational derivative gives the equation of motion.

    ``E = sum -2 Re(conj(psi_{n+1}) psi_n) + eps_n |psi_n|^2
    + 2 beta / (p + 2) |psi_n|^(p + 2)``, neighbours taken periodically.
    """
    psi = np.asarray(psi)
    if psi.shape[-1] != disorder.size:
        raise LatticeMismatchError(f"state has {psi.shape[-1]} sites, disorder {disorder.size}")
    if params.p <= -2:
        raise ConfigError("nonlinearity degree must exceed -2")
    return _energy(psi, disorder.epsilons, params.beta, params.p)


def _energy(psi, eps, beta, p):
    rho = density(psi)
    hop = -2.0 * (np.conj(np.roll(psi, -1, axis=-1)) * psi).real.sum(axis=-1)
    onsite = (rho * eps).sum(axis=-1)
    nonlin = 2.0 * beta / (p + 2.0) * (rho * nonlinear_density(rho, p)).sum(axis=-1)
    return hop + onsite + nonlin


def participation_number(psi):
    rho = density(psi)
    num = rho.sum(axis=-1) ** 2
    den = (rho**2).sum(axis=-1)
    if np.any(den == 0):
        raise UndefinedDiagnosticError("participation number of the zero state")
    return num / den


def tail_mass(psi, margin: int = TAIL_MARGIN):
    """Mass within ``margin`` sites of either lattice edge."""
    rho = density(psi)
    size = rho.shape[-1]
    if not 0 < margin < size / 2:
        raise ConfigError(f"margin must lie in (0, {size / 2}), got {margin}")
    return rho[..., :margin].sum(axis=-1) + rho[..., -margin:].sum(axis=-1)


@dataclass(frozen=True)
class ObservableRecord:
    t: float
    m2: float
    norm: float
    energy: float
    participation: float
    tail_mass: float


@dataclass
class MomentSeries:
    """Observables recorded at increasing sample times for a single run."""

    t: np.ndarray
    m2: np.ndarray
    norm: np.ndarray
    energy: np.ndarray
    participation: np.ndarray
    tail_mass: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in COLUMNS:
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        lengths = {getattr(self, name).shape for name in COLUMNS}
        if len(lengths) != 1:
            raise ValueError("all observable columns must have the same length")
        if len(self.t) and (self.t[0] != 0 or np.any(np.diff(self.t) <= 0)):
            raise ValueError("sample times must start at 0 and increase strictly")

    def __len__(self):
        return len(self.t)

    def records(self):
        for row in zip(*(getattr(self, name) for name in COLUMNS)):
            yield ObservableRecord(*map(float, row))

    def as_array(self) -> np.ndarray:
        return np.column_stack([getattr(self, name) for name in COLUMNS])

    def to_csv(self, path) -> Path:
        path = Path(path)
        np.savetxt(path, self.as_array(), fmt="%.17g", delimiter=",",
                   header=",".join(COLUMNS), comments="")
        return path

    def to_json(self, path) -> Path:
        path = Path(path)
        doc = {"meta": self.meta, "columns": {name: getattr(self, name).tolist() for name in COLUMNS}}
        path.write_text(json.dumps(doc, indent=2, default=_jsonable))
        return path

    @classmethod
    def from_csv(cls, path, meta=None) -> MomentSeries:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(*data.T, meta=dict(meta or {}))

    @classmethod
    def from_json(cls, path) -> MomentSeries:
        doc = json.loads(Path(path).read_text())
        return cls(*(doc["columns"][name] for name in COLUMNS), meta=doc["meta"])


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")

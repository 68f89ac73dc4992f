"""Lattice, disorder and parameter definitions for the disordered DNLS chain.

The lattice is symmetric, sites ``n = -L .. L`` stored at index ``n + L``.
Wavefunctions are plain complex numpy arrays whose last axis runs over sites,
so a stack of realizations is simply a 2-D array.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, EmptyLatticeError, OracleSizeError

ORACLE_CAP = 64


def half_width(size: int) -> int:
    """Return L for a symmetric lattice of ``size = 2L + 1`` sites."""
    if size < 1 or size % 2 == 0:
        raise ConfigError(f"symmetric lattice needs an odd positive size, got {size}")
    return size // 2


def site_labels(size: int) -> np.ndarray:
    """Signed site labels ``n`` for every storage index."""
    L = half_width(size)
    return np.arange(-L, L + 1)


def storage_index(n: int, size: int) -> int:
    L = half_width(size)
    if not -L <= n <= L:
        raise IndexError(f"site {n} outside lattice [-{L}, {L}]")
    return n + L


@dataclass(frozen=True)
class ModelParams:
    """Nonlinearity strength ``beta``, degree ``p`` and disorder width ``W``."""

    beta: float
    p: float
    W: float

    def __post_init__(self):
        for name in ("beta", "p", "W"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise ConfigError(f"{name} must be finite and >= 0, got {value}")

    @property
    def is_linear(self) -> bool:
        return self.beta == 0


@dataclass(frozen=True, eq=False)
class DisorderRealization:
    """Frozen on-site energies of one sample together with their provenance."""

    epsilons: np.ndarray = field(repr=False)
    W: float
    seed: int

    @property
    def size(self) -> int:
        return self.epsilons.shape[-1]

    def shifted(self, c: float) -> DisorderRealization:
        """Same realization with a constant added to every on-site energy."""
        return DisorderRealization(self.epsilons + c, self.W, self.seed)

    def to_table(self, path) -> None:
        """Write a two-column ``site epsilon`` text table."""
        table = np.column_stack([site_labels(self.size), self.epsilons])
        np.savetxt(
            path, table, fmt=["%d", "%.17g"],
            header=f"seed={self.seed} W={self.W!r} size={self.size}\nn epsilon",
        )


def _generator(seed: int) -> np.random.Generator:
    # Philox is counter based: the stream depends only on the key.
    return np.random.Generator(np.random.Philox(key=int(seed) % 2**64))


def make_disorder(seed: int, size: int, W: float) -> DisorderRealization:
    """Draw ``size`` i.i.d. energies uniform on ``[-W/2, W/2]``."""
    if size < 1:
        raise EmptyLatticeError("cannot draw disorder for an empty lattice")
    if W < 0:
        raise ConfigError(f"disorder width must be >= 0, got {W}")
    eps = _generator(seed).uniform(-0.5 * W, 0.5 * W, size=size)
    return DisorderRealization(eps, float(W), int(seed))


def initial_wavepacket(size: int) -> np.ndarray:
    """All amplitude on the center site ``n = 0``."""
    L = half_width(size)
    psi = np.zeros(size, dtype=complex)
    psi[L] = 1.0
    return psi


def linear_hamiltonian(disorder: DisorderRealization, *, periodic: bool = False,
                       cap: int = ORACLE_CAP) -> np.ndarray:
    """Dense tight-binding matrix of the linear chain, for small oracle checks.

    Diagonal is ``eps_n``, nearest-neighbour entries are ``-1``.  Open
    boundaries by default; ``periodic=True`` adds the wraparound bond that the
    spectral propagator implies.
    """
    N = disorder.size
    if N > cap:
        raise OracleSizeError(f"dense oracle limited to {cap} sites, got {N}")
    H = np.diag(np.asarray(disorder.epsilons, dtype=float))
    idx = np.arange(N - 1)
    H[idx, idx + 1] = H[idx + 1, idx] = -1.0
    if periodic and N > 2:
        H[0, N - 1] = H[N - 1, 0] = -1.0
    elif periodic and N == 2:
        H[0, 1] = H[1, 0] = -2.0
    return H


def hopping_matrix(size: int, *, periodic: bool = True) -> np.ndarray:
    """Kinetic part ``-psi_{n+1} - psi_{n-1}`` as a dense matrix."""
    zero = DisorderRealization(np.zeros(size), 0.0, 0)
    return linear_hamiltonian(zero, periodic=periodic, cap=max(size, ORACLE_CAP))

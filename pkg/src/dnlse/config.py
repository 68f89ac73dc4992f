"""Run configuration shared by the propagator drivers, validation and the CLI."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError
from .model import ModelParams
from .observables import TAIL_MARGIN, TAIL_THRESHOLD
from .propagator import default_dt, get_scheme, sample_grid

__version__ = "0.1.0"


@dataclass(frozen=True)
class SimulationConfig:
    """Physical parameters, numerics and sampling of a single trajectory.

    ``dt=None`` picks the step from the beta-keyed default table.  ``sample_dt``
    is the step the sample grid is snapped to; it defaults to ``dt`` and is set
    to the coarse step when a run is compared with a step-halved twin.
    """

    beta: float
    p: float
    W: float = 4.0
    dt: float | None = None
    t_max: float = 1000.0
    L: int = 512
    scheme: str = "SABA2"
    n_samples: int = 200
    sample_dt: float | None = None
    seed: int = 0
    centroid: bool = False
    margin: int = TAIL_MARGIN
    tail_threshold: float = TAIL_THRESHOLD

    def __post_init__(self):
        # Canonical types, so that equal configurations share a digest.
        for name in ("beta", "p", "W", "t_max", "tail_threshold"):
            object.__setattr__(self, name, float(getattr(self, name)))
        for name in ("dt", "sample_dt"):
            if getattr(self, name) is not None:
                object.__setattr__(self, name, float(getattr(self, name)))
        for name in ("L", "n_samples", "seed", "margin"):
            value = getattr(self, name)
            if int(value) != value:
                raise ConfigError(f"{name} must be an integer, got {value}")
            object.__setattr__(self, name, int(value))
        object.__setattr__(self, "centroid", bool(self.centroid))
        ModelParams(self.beta, self.p, self.W)
        get_scheme(self.scheme)
        if self.dt is not None and not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if not self.t_max > 0:
            raise ConfigError(f"t_max must be positive, got {self.t_max}")
        if self.L < 1:
            raise ConfigError(f"lattice half-width must be >= 1, got {self.L}")
        if not 0 < self.margin < self.L:
            raise ConfigError(f"tail margin {self.margin} must lie in (0, L={self.L})")
        if self.n_samples < 1:
            raise ConfigError("need at least one sample time")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    @property
    def size(self) -> int:
        return 2 * self.L + 1

    @property
    def params(self) -> ModelParams:
        return ModelParams(self.beta, self.p, self.W)

    def resolved(self) -> SimulationConfig:
        """Copy with ``dt`` and ``sample_dt`` filled in."""
        dt = self.dt if self.dt is not None else default_dt(self.beta)
        return dataclasses.replace(self, dt=dt, sample_dt=self.sample_dt or dt)

    def replace(self, **changes) -> SimulationConfig:
        return dataclasses.replace(self, **changes)

    def sample_times(self):
        cfg = self.resolved()
        return sample_grid(cfg.t_max, cfg.sample_dt, cfg.n_samples)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> SimulationConfig:
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        return cls(**data)

    def digest(self) -> str:
        return config_digest(self.resolved().to_dict())


def config_digest(data: dict) -> str:
    blob = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def load_config_file(path) -> dict:
    """Read a TOML or JSON mapping of configuration values."""
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json":
        return json.loads(text)
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib
    return tomllib.loads(text)

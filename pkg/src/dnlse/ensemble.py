"""Disorder-ensemble averaging with checkpointing and (p, beta) sweeps.

Realization ``r`` of an ensemble uses disorder seed ``base_seed + r``.
Realizations are propagated in fixed batches (the batch layout depends only
on the configuration, never on the worker count) and reduced in realization
order, so results are bitwise reproducible for any ``jobs``.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import SimulationConfig, __version__, config_digest
from .errors import CheckpointError, ConfigError, EnsembleInvalidError
from .model import initial_wavepacket, make_disorder
from .propagator import _steps_for, get_scheme, run_batch

log = logging.getLogger(__name__)

CHECKPOINT_FORMAT = 1
MAX_FAILURE_FRACTION = 0.01
CSV_COLUMNS = ("t", "mean_m2", "stderr_m2", "mean_log_m2")


@dataclass(frozen=True)
class EnsembleConfig:
    sim: SimulationConfig
    realizations: int
    base_seed: int = 0
    jobs: int = 1
    batch: int = 25

    def __post_init__(self):
        if self.realizations < 1:
            raise ConfigError("an ensemble needs at least one realization")
        if self.batch < 1 or self.jobs < 1:
            raise ConfigError("batch and jobs must be positive")
        if not 0 <= self.base_seed < 2**64:
            raise ConfigError("base seed must be a 64-bit unsigned integer")

    def seed(self, r: int) -> int:
        return (self.base_seed + r) % 2**64

    def identity(self) -> dict:
        """Everything that determines the numbers (worker count excluded)."""
        return {
            "sim": self.sim.resolved().to_dict(),
            "realizations": self.realizations,
            "base_seed": self.base_seed,
            "batch": self.batch,
        }


@dataclass
class EnsembleResult:
    t: np.ndarray
    mean_m2: np.ndarray
    stderr_m2: np.ndarray
    mean_log_m2: np.ndarray
    completed: int
    failures: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    m2: np.ndarray | None = field(default=None, repr=False)

    def to_csv(self, path) -> Path:
        path = Path(path)
        table = np.column_stack([self.t, self.mean_m2, self.stderr_m2, self.mean_log_m2])
        np.savetxt(path, table, fmt="%.17g", delimiter=",", header=",".join(CSV_COLUMNS), comments="")
        return path

    def write(self, path) -> Path:
        """CSV data plus a ``.json`` metadata sidecar next to it."""
        path = self.to_csv(path)
        doc = dict(self.meta, completed=self.completed, failures=self.failures)
        path.with_suffix(".json").write_text(json.dumps(doc, indent=2))
        return path

    @classmethod
    def read(cls, path) -> EnsembleResult:
        path = Path(path)
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        sidecar = path.with_suffix(".json")
        meta = json.loads(sidecar.read_text()) if sidecar.exists() else {}
        return cls(*data.T, completed=meta.get("completed", 0),
                   failures=meta.get("failures", []), meta=meta)


def welford(rows):
    """One-pass mean and sample variance over ``rows`` in iteration order."""
    count, mean, m2 = 0, None, None
    for row in rows:
        row = np.asarray(row, dtype=float)
        count += 1
        if mean is None:
            mean, m2 = row.copy(), np.zeros_like(row)
            continue
        delta = row - mean
        mean += delta / count
        m2 += delta * (row - mean)
    if count == 0:
        raise EnsembleInvalidError("no successful realization to average")
    var = m2 / (count - 1) if count > 1 else np.zeros_like(mean)
    return mean, var, count


def _run_chunk(sim_data: dict, seeds: list):
    sim = SimulationConfig.from_dict(sim_data)
    times = sim.sample_times()
    steps = _steps_for(times, sim.dt)
    eps = np.stack([make_disorder(s, sim.size, sim.W).epsilons for s in seeds])
    psi0 = np.broadcast_to(initial_wavepacket(sim.size), eps.shape)
    obs, violations, _ = run_batch(
        psi0, eps, sim.params, get_scheme(sim.scheme), sim.dt, steps,
        centroid=sim.centroid, margin=sim.margin, threshold=sim.tail_threshold,
    )
    return obs["m2"], violations


class _Checkpoint:
    """Per-realization m2 series plus status, written atomically."""

    PENDING, DONE, FAILED = 0, 1, 2

    def __init__(self, cfg: EnsembleConfig, n_times: int):
        self.identity = cfg.identity()
        self.digest = config_digest(self.identity)
        self.m2 = np.full((cfg.realizations, n_times), np.nan)
        self.status = np.zeros(cfg.realizations, dtype=np.int8)
        self.fail_index = np.full(cfg.realizations, -1, dtype=np.int64)

    def save(self, path):
        path = Path(path)
        tmp = path.with_name(path.name + ".tmp")
        with open(tmp, "wb") as fh:
            np.savez(
                fh, format=CHECKPOINT_FORMAT, digest=self.digest,
                identity=json.dumps(self.identity, sort_keys=True),
                m2=self.m2, status=self.status, fail_index=self.fail_index,
            )
        os.replace(tmp, path)

    @classmethod
    def load(cls, path, cfg: EnsembleConfig, n_times: int) -> _Checkpoint:
        ckpt = cls(cfg, n_times)
        try:
            with np.load(path, allow_pickle=False) as data:
                fmt = int(data["format"])
                digest = str(data["digest"])
                identity = json.loads(str(data["identity"]))
                m2, status, fail_index = data["m2"], data["status"], data["fail_index"]
        except (OSError, KeyError, ValueError) as exc:
            raise CheckpointError(f"unreadable checkpoint {path}: {exc}") from exc
        if fmt != CHECKPOINT_FORMAT:
            raise CheckpointError(f"checkpoint format {fmt}, expected {CHECKPOINT_FORMAT}")
        if digest != ckpt.digest:
            diff = _dict_diff(identity, ckpt.identity)
            raise CheckpointError(f"checkpoint was written for a different configuration: {diff}")
        if m2.shape != ckpt.m2.shape:
            raise CheckpointError("checkpoint array shape does not match the configuration")
        ckpt.m2, ckpt.status, ckpt.fail_index = m2.copy(), status.copy(), fail_index.copy()
        return ckpt


def _dict_diff(old: dict, new: dict, prefix="") -> dict:
    diff = {}
    for key in sorted(set(old) | set(new)):
        a, b = old.get(key), new.get(key)
        if isinstance(a, dict) and isinstance(b, dict):
            diff.update(_dict_diff(a, b, prefix + key + "."))
        elif a != b:
            diff[prefix + key] = (a, b)
    return diff


def _chunks(cfg: EnsembleConfig):
    for start in range(0, cfg.realizations, cfg.batch):
        yield list(range(start, min(start + cfg.batch, cfg.realizations)))


def run_ensemble(cfg: EnsembleConfig, checkpoint=None, *, limit: int | None = None) -> EnsembleResult:
    """Run (or continue) an ensemble and average its m2 series.

    With ``checkpoint`` set, progress is saved after every batch and an
    existing file is resumed.  ``limit`` stops after that many new
    realizations, leaving a partial result; this is how an interrupted run is
    modelled.
    """
    sim = cfg.sim.resolved()
    times = sim.sample_times()
    if checkpoint is not None and Path(checkpoint).exists():
        state = _Checkpoint.load(checkpoint, cfg, len(times))
        log.info("resuming %s: %d realizations already done", checkpoint, int((state.status > 0).sum()))
    else:
        state = _Checkpoint(cfg, len(times))

    todo = [c for c in _chunks(cfg) if np.any(state.status[c] == _Checkpoint.PENDING)]
    if limit is not None:
        kept, budget = [], limit
        for c in todo:
            if budget < len(c):
                break
            kept.append(c)
            budget -= len(c)
        todo = kept

    started = time.perf_counter()
    sim_data = sim.to_dict()
    if cfg.jobs > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            futures = [pool.submit(_run_chunk, sim_data, [cfg.seed(r) for r in c]) for c in todo]
            for c, fut in zip(todo, futures):
                _record(state, c, *fut.result())
                _progress(state, cfg, checkpoint)
    else:
        for c in todo:
            _record(state, c, *_run_chunk(sim_data, [cfg.seed(r) for r in c]))
            _progress(state, cfg, checkpoint)

    return _reduce(state, cfg, sim, times, time.perf_counter() - started)


def _record(state, chunk, m2, violations):
    for row, r in enumerate(chunk):
        state.m2[r] = m2[row]
        if violations[row] >= 0:
            state.status[r] = _Checkpoint.FAILED
            state.fail_index[r] = violations[row]
        else:
            state.status[r] = _Checkpoint.DONE


def _progress(state, cfg, checkpoint):
    if checkpoint is not None:
        state.save(checkpoint)
    log.info("ensemble beta=%g p=%g: %d/%d realizations", cfg.sim.beta, cfg.sim.p,
             int((state.status > 0).sum()), cfg.realizations)


def _reduce(state, cfg, sim, times, wall) -> EnsembleResult:
    ok = np.flatnonzero(state.status == _Checkpoint.DONE)
    failed = np.flatnonzero(state.status == _Checkpoint.FAILED)
    failures = [
        {"realization": int(r), "seed": cfg.seed(int(r)), "t": float(times[state.fail_index[r]])}
        for r in failed
    ]
    finished = len(ok) + len(failed)
    if finished and len(failed) > MAX_FAILURE_FRACTION * finished:
        raise EnsembleInvalidError(
            f"{len(failed)} of {finished} realizations hit the lattice edge; increase L"
        )
    m2 = state.m2[ok]
    mean, var, count = welford(m2)
    with np.errstate(divide="ignore"):
        logs = np.where(m2 > 0, np.log(np.where(m2 > 0, m2, 1.0)), np.nan)
    mean_log, _, _ = welford(logs)
    meta = {
        "config": sim.to_dict(),
        "realizations": cfg.realizations,
        "base_seed": cfg.base_seed,
        "seeds": [cfg.base_seed, cfg.base_seed + cfg.realizations - 1],
        "batch": cfg.batch,
        "jobs": cfg.jobs,
        "scheme": sim.scheme,
        "version": __version__,
        "wall_time_s": wall,
    }
    return EnsembleResult(times, mean, np.sqrt(var / count), mean_log, count, failures, meta, m2)


# -- sweeps -----------------------------------------------------------------


def point_seed(base_seed: int, p_index: int, beta_index: int, n_beta: int, realizations: int) -> int:
    """Base seed of grid point ``(p_index, beta_index)``.

    Points take consecutive, non-overlapping seed blocks of length
    ``realizations`` in row-major (p, beta) order, so every realization of the
    sweep gets a distinct seed and point (0, 0) reuses ``base_seed``.
    """
    return (base_seed + (p_index * n_beta + beta_index) * realizations) % 2**64


@dataclass
class SweepPoint:
    p: float
    beta: float
    seed: int
    result: EnsembleResult | None = None
    error: str | None = None


def sweep(grid, template: EnsembleConfig, out_dir=None, checkpoint_dir=None) -> list[SweepPoint]:
    """One ensemble per ``(p, beta)`` pair; failures are recorded and the sweep continues.

    When the template leaves ``dt`` unset every point takes the default step
    of its own beta.
    """
    grid = [(float(p), float(b)) for p, b in grid]
    if not grid:
        raise ConfigError("empty sweep grid")
    ps = sorted({p for p, _ in grid})
    betas = sorted({b for _, b in grid})
    points = []
    for p, beta in grid:
        seed = point_seed(template.base_seed, ps.index(p), betas.index(beta), len(betas),
                          template.realizations)
        cfg = dataclasses.replace(template, sim=template.sim.replace(p=p, beta=beta), base_seed=seed)
        point = SweepPoint(p, beta, seed)
        ckpt = None
        if checkpoint_dir is not None:
            ckpt = Path(checkpoint_dir) / f"ckpt_p{p:g}_beta{beta:g}.npz"
        try:
            point.result = run_ensemble(cfg, ckpt)
        except (EnsembleInvalidError, CheckpointError, ConfigError) as exc:
            point.error = str(exc)
            log.warning("sweep point p=%g beta=%g failed: %s", p, beta, exc)
        if out_dir is not None and point.result is not None:
            point.result.write(Path(out_dir) / f"ensemble_p{p:g}_beta{beta:g}.csv")
        points.append(point)
    return points

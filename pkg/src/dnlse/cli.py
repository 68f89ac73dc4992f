"""Command-line driver: ``dnlse {run,ensemble,sweep,validate,fit,collapse}``.

Exit status: 0 success, 1 failed criterion or fit, 2 configuration error,
3 runtime guard (lattice edge reached).
"""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import sys
from pathlib import Path


from . import analysis
from .config import SimulationConfig, __version__, load_config_file
from .ensemble import EnsembleConfig, EnsembleResult, run_ensemble, sweep
from .errors import (
    BoundaryContaminationError,
    CheckpointError,
    ConfigError,
    EnsembleInvalidError,
    FitError,
)
from .model import initial_wavepacket, make_disorder
from .observables import MomentSeries
from .propagator import evolve
from .validation import check_t1, check_t2, check_t3

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_GUARD = 0, 1, 2, 3

log = logging.getLogger("dnlse")

# flag dest -> SimulationConfig field
_SIM_FLAGS = {"beta": "beta", "p": "p", "W": "W", "dt": "dt", "t_max": "t_max", "L": "L",
              "scheme": "scheme", "seed": "seed", "n_samples": "n_samples", "centroid": "centroid"}


def _shared(parser: argparse.ArgumentParser):
    g = parser.add_argument_group("simulation")
    g.add_argument("--config", type=Path, help="TOML or JSON file with configuration values")
    g.add_argument("--beta", type=float)
    g.add_argument("--p", type=float)
    g.add_argument("--W", type=float)
    g.add_argument("--dt", type=float, help="time step (default: beta-keyed table)")
    g.add_argument("--t-max", dest="t_max", type=float)
    g.add_argument("--L", type=int, help="lattice half-width, size 2L+1")
    g.add_argument("--scheme", choices=["SABA2", "strang", "yoshida4"])
    g.add_argument("--seed", type=int)
    g.add_argument("--n-samples", dest="n_samples", type=int)
    g.add_argument("--centroid", action="store_true", default=None,
                   help="measure m2 about the packet centroid instead of n = 0")
    g.add_argument("--R", type=int, default=None, help="number of realizations")
    g.add_argument("--jobs", type=int, default=1)
    g.add_argument("--batch", type=int, default=25, help="realizations propagated together")
    g.add_argument("--out", type=Path, default=Path("."))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dnlse", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="single-realization m2(t) trace")
    _shared(p)
    p.add_argument("--save-disorder", action="store_true")

    p = sub.add_parser("ensemble", help="disorder-averaged m2(t)")
    _shared(p)
    p.add_argument("--resume", type=Path, metavar="CKPT", help="continue from a checkpoint")

    p = sub.add_parser("sweep", help="ensembles over a (p, beta) grid")
    p.add_argument("grid", type=Path, help="TOML/JSON with p and beta lists or explicit points")
    _shared(p)

    p = sub.add_parser("validate", help="reliability criteria t1/t2/t3")
    _shared(p)
    p.add_argument("--t1", action="store_true")
    p.add_argument("--t2", action="store_true")
    p.add_argument("--t3", action="store_true")
    p.add_argument("--T", type=float, help="check horizon (default t-max)")

    p = sub.add_parser("fit", help="power-law exponent of m2(t)")
    p.add_argument("inputs", nargs="+", type=Path, help="series or ensemble CSV files")
    p.add_argument("--window", nargs=2, type=float, metavar=("T_LO", "T_HI"))
    p.add_argument("--windows", nargs="+", metavar="LO,HI")
    p.add_argument("--out", type=Path, default=Path("."))

    p = sub.add_parser("collapse", help="affine collapse of alpha(p) curves")
    p.add_argument("curves", nargs="+", type=Path)
    p.add_argument("--reference-beta", type=float, default=1.0)
    p.add_argument("--out", type=Path, default=Path("."))
    return parser


def resolve_config(args) -> SimulationConfig:
    """CLI flags override the config file, which overrides built-in defaults."""
    values = {}
    if getattr(args, "config", None) is not None:
        values.update(load_config_file(args.config))
    for dest, name in _SIM_FLAGS.items():
        v = getattr(args, dest, None)
        if v is not None:
            values[name] = v
    values.pop("R", None)
    values.pop("jobs", None)
    for required in ("beta", "p"):
        if required not in values:
            raise ConfigError(f"--{required} is required")
    return SimulationConfig.from_dict(values).resolved()


def _realizations(args) -> int:
    R = args.R
    if R is None and args.config is not None:
        R = load_config_file(args.config).get("R")
    return 1 if R is None else int(R)


def _write_json(path: Path, doc) -> Path:
    path.write_text(json.dumps(doc, indent=2))
    return path


def cmd_run(args) -> int:
    cfg = resolve_config(args)
    args.out.mkdir(parents=True, exist_ok=True)
    disorder = make_disorder(cfg.seed, cfg.size, cfg.W)
    series = evolve(
        initial_wavepacket(cfg.size), disorder, cfg.params, cfg.scheme, cfg.dt, cfg.t_max,
        cfg.sample_times(), centroid=cfg.centroid, margin=cfg.margin, threshold=cfg.tail_threshold,
        meta={"config": cfg.to_dict(), "version": __version__},
    )
    stem = args.out / f"run_beta{cfg.beta:g}_p{cfg.p:g}_seed{cfg.seed}"
    series.to_csv(stem.with_name(stem.name + ".csv"))
    series.to_json(stem.with_name(stem.name + ".json"))
    if args.save_disorder:
        disorder.to_table(stem.with_name(stem.name + "_disorder.txt"))
    print(stem.with_name(stem.name + ".csv"))
    return EXIT_OK


def cmd_ensemble(args) -> int:
    cfg = resolve_config(args)
    ens = EnsembleConfig(cfg, _realizations(args), base_seed=cfg.seed, jobs=args.jobs, batch=args.batch)
    args.out.mkdir(parents=True, exist_ok=True)
    stem = args.out / f"ensemble_beta{cfg.beta:g}_p{cfg.p:g}"
    ckpt = args.resume if args.resume is not None else stem.with_name(stem.name + ".ckpt.npz")
    if args.resume is not None and not args.resume.exists():
        raise ConfigError(f"checkpoint {args.resume} does not exist")
    result = run_ensemble(ens, ckpt)
    print(result.write(stem.with_name(stem.name + ".csv")))
    return EXIT_OK


def _grid_points(doc: dict):
    if "points" in doc:
        return [tuple(pt) for pt in doc["points"]]
    if "p" in doc and "beta" in doc:
        return list(itertools.product(doc["p"], doc["beta"]))
    raise ConfigError("grid file needs either 'points' or both 'p' and 'beta' lists")


def cmd_sweep(args) -> int:
    doc = load_config_file(args.grid)
    points = _grid_points(doc)
    values = dict(doc.get("config", {}))
    for dest, name in _SIM_FLAGS.items():
        v = getattr(args, dest, None)
        if v is not None:
            values[name] = v
    p0, b0 = points[0]
    values.setdefault("p", p0)
    values.setdefault("beta", b0)
    sim = SimulationConfig.from_dict(values)
    R = args.R if args.R is not None else int(doc.get("R", 1))
    template = EnsembleConfig(sim, R, base_seed=sim.seed, jobs=args.jobs, batch=args.batch)
    args.out.mkdir(parents=True, exist_ok=True)
    results = sweep(points, template, out_dir=args.out, checkpoint_dir=args.out)
    table = args.out / "sweep.csv"
    with open(table, "w") as fh:
        fh.write("p,beta,seed,completed,failures,file,error\n")
        for pt in results:
            done = pt.result.completed if pt.result else 0
            nfail = len(pt.result.failures) if pt.result else 0
            name = f"ensemble_p{pt.p:g}_beta{pt.beta:g}.csv" if pt.result else ""
            err = (pt.error or "").replace(",", ";")
            fh.write(f"{pt.p!r},{pt.beta!r},{pt.seed},{done},{nfail},{name},{err}\n")
    print(table)
    return EXIT_OK if all(pt.result is not None for pt in results) else EXIT_FAILED


def cmd_validate(args) -> int:
    wanted = [c for c in ("t1", "t2", "t3") if getattr(args, c)]
    if not wanted:
        raise ConfigError("choose at least one of --t1, --t2, --t3")
    cfg = resolve_config(args)
    T = args.T if args.T is not None else cfg.t_max
    if T > cfg.t_max:
        raise ConfigError(f"check horizon T={T} exceeds t-max={cfg.t_max}")
    reports = []
    if "t1" in wanted:
        reports.append(check_t1(cfg, cfg.seed, T))
    if "t2" in wanted:
        reports.append(check_t2(cfg, cfg.seed, T))
    if "t3" in wanted:
        R = _realizations(args)
        coarse_cfg = cfg.replace(t_max=T)
        fine_cfg = coarse_cfg.replace(dt=cfg.dt / 2, sample_dt=cfg.dt)
        coarse = run_ensemble(EnsembleConfig(coarse_cfg, R, cfg.seed, args.jobs, args.batch))
        fine = run_ensemble(EnsembleConfig(fine_cfg, R, cfg.seed, args.jobs, args.batch))
        reports.append(check_t3(coarse, fine))
    doc = [r.to_dict() for r in reports]
    args.out.mkdir(parents=True, exist_ok=True)
    _write_json(args.out / "validate.json", doc)
    print(json.dumps(doc, indent=2))
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAILED


def load_series(path: Path):
    """Read a run or ensemble CSV together with its JSON sidecar metadata."""
    header = path.read_text().split("\n", 1)[0]
    if header.startswith("t,mean_m2"):
        result = EnsembleResult.read(path)
        return result, result.meta.get("config", {})
    sidecar = path.with_suffix(".json")
    if sidecar.exists():
        series = MomentSeries.from_json(sidecar)
        return series, series.meta.get("config", series.meta)
    return MomentSeries.from_csv(path), {}


def _parse_windows(args):
    if args.windows:
        try:
            return [tuple(float(x) for x in w.split(",")) for w in args.windows]
        except ValueError:
            raise ConfigError("windows are written LO,HI") from None
    if args.window:
        return [tuple(args.window)]
    return [(500.0, 1000.0)]


def cmd_fit(args) -> int:
    windows = _parse_windows(args)
    if any(len(w) != 2 for w in windows):
        raise ConfigError("windows are written LO,HI")
    args.out.mkdir(parents=True, exist_ok=True)
    doc, curves, failed = [], {}, False
    for path in args.inputs:
        series, cfg = load_series(path)
        fits, errors, spread = analysis.fit_stability(series, windows)
        failed |= bool(errors)
        entry = {"input": str(path), "beta": cfg.get("beta"), "p": cfg.get("p"),
                 "fits": [f.to_dict() for f in fits.values()],
                 "errors": {f"{w[0]:g},{w[1]:g}": e for w, e in errors.items()},
                 "alpha_spread": spread}
        doc.append(entry)
        if fits and cfg.get("beta") is not None and cfg.get("p") is not None:
            first = fits.get(tuple(map(float, windows[0])))
            if first is not None:
                curves.setdefault(float(cfg["beta"]), []).append((cfg["p"], first.alpha, first.alpha_stderr))
    _write_json(args.out / "fit.json", doc)
    for beta, pts in curves.items():
        analysis.AlphaCurve(beta, pts).to_csv(args.out / f"alpha_beta{beta:g}.csv")
    print(json.dumps(doc, indent=2))
    return EXIT_FAILED if failed else EXIT_OK


def cmd_collapse(args) -> int:
    curves = [analysis.AlphaCurve.from_csv(path) for path in args.curves]
    args.out.mkdir(parents=True, exist_ok=True)
    result = analysis.scaling_collapse(curves, args.reference_beta)
    for path in result.write(args.out / "collapse"):
        print(path)
    return EXIT_OK


COMMANDS = {"run": cmd_run, "ensemble": cmd_ensemble, "sweep": cmd_sweep,
            "validate": cmd_validate, "fit": cmd_fit, "collapse": cmd_collapse}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (BoundaryContaminationError, EnsembleInvalidError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except FitError as exc:
        print(f"fit failed: {exc}", file=sys.stderr)
        return EXIT_FAILED
    except (ConfigError, CheckpointError, ValueError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

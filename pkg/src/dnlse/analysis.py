"""Power-law fits of m2(t), alpha(p) curves and their affine collapse."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateCollapseError, FitDomainError, FitError, InsufficientDataError

PAPER_WINDOWS = ((300.0, 1000.0), (500.0, 1000.0), (800.0, 1000.0))


@dataclass
class FitResult:
    """``m2 ~ D t**alpha`` fitted over ``window`` by least squares in log-log."""

    alpha: float
    D: float
    window: tuple
    n_points: int
    rms_residual: float
    covariance: np.ndarray = field(repr=False)

    @property
    def alpha_stderr(self) -> float:
        return float(np.sqrt(self.covariance[1, 1]))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["window"] = list(self.window)
        d["covariance"] = np.asarray(self.covariance).tolist()
        d["alpha_stderr"] = self.alpha_stderr
        return d


def _series_arrays(series):
    """(t, m2, stderr or None) from a MomentSeries, EnsembleResult or a tuple."""
    if hasattr(series, "mean_m2"):
        return np.asarray(series.t), np.asarray(series.mean_m2), np.asarray(series.stderr_m2)
    if hasattr(series, "m2"):
        return np.asarray(series.t), np.asarray(series.m2), None
    t, m2, *rest = series
    return np.asarray(t, float), np.asarray(m2, float), (np.asarray(rest[0], float) if rest else None)


def fit_alpha(series, window=(500.0, 1000.0)) -> FitResult:
    """Unweighted OLS of ``log m2`` on ``log t`` for samples inside ``window``.

    The covariance of ``(log D, alpha)`` propagates the per-point standard
    errors when the input carries them (ensemble averages), and otherwise uses
    the fit residuals.
    """
    t_lo, t_hi = map(float, window)
    if not t_lo < t_hi:
        raise FitError(f"empty fit window {window}")
    t, m2, err = _series_arrays(series)
    inside = (t >= t_lo) & (t <= t_hi)
    if inside.sum() < 3:
        raise InsufficientDataError(f"only {int(inside.sum())} samples in window {window}")
    if np.any(m2[inside] <= 0):
        raise FitDomainError("m2 must be positive inside the fit window")
    x, y = np.log(t[inside]), np.log(m2[inside])
    X = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    n = len(x)
    xtx_inv = np.linalg.inv(X.T @ X)
    if err is not None and np.any(err[inside] > 0):
        sigma = err[inside] / m2[inside]
        cov = xtx_inv @ (X.T * sigma**2) @ X @ xtx_inv
    else:
        dof = max(n - 2, 1)
        cov = xtx_inv * float(resid @ resid) / dof
    return FitResult(float(coef[1]), float(np.exp(coef[0])), (t_lo, t_hi), n,
                     float(np.sqrt(np.mean(resid**2))), cov)


def fit_stability(series, windows=PAPER_WINDOWS):
    """Fit every window; returns ``(fits, errors, spread)``.

    ``fits`` maps window to :class:`FitResult`, ``errors`` maps window to the
    message of a failed fit, and ``spread`` is max(alpha) - min(alpha) over
    the successful fits.
    """
    fits, errors = {}, {}
    for w in windows:
        w = tuple(map(float, w))
        try:
            fits[w] = fit_alpha(series, w)
        except FitError as exc:
            errors[w] = str(exc)
    alphas = [f.alpha for f in fits.values()]
    spread = float(max(alphas) - min(alphas)) if alphas else float("nan")
    return fits, errors, spread


def running_alpha(series, window_width_decades: float = 0.5):
    """Local log-log slope over sliding windows of fixed width in ``log10 t``.

    Returns ``(t_center, alpha)`` arrays; only windows lying fully inside the
    positive-m2 part of the series with at least three samples are used.
    """
    t, m2, _ = _series_arrays(series)
    ok = (t > 0) & (m2 > 0)
    x, y = np.log10(t[ok]), np.log10(m2[ok])
    if len(x) < 3 or x[-1] - x[0] < window_width_decades:
        raise InsufficientDataError("series spans less than one window in log t")
    half = 0.5 * window_width_decades
    centers, slopes = [], []
    for xc in x:
        if xc - half < x[0] - 1e-12 or xc + half > x[-1] + 1e-12:
            continue
        sel = np.abs(x - xc) <= half + 1e-12
        if sel.sum() < 3:
            continue
        slope = np.polyfit(x[sel], y[sel], 1)[0]
        centers.append(10**xc)
        slopes.append(slope)
    if not centers:
        raise InsufficientDataError("no window holds three samples")
    return np.array(centers), np.array(slopes)


def heuristic_ratio(delta_n: float, beta: float, p: float) -> float:
    """Nonlinear frequency shift over mean level spacing for a packet spread over ``delta_n`` sites."""
    if delta_n < 1:
        raise ValueError(f"delta_n must be >= 1, got {delta_n}")
    if p == 2:
        return float(beta)
    return float(beta * delta_n ** (-(p - 2) / 2))


def predicted_alpha(p: float) -> float:
    """The 1/(p + 1) law proposed in the literature, tabulated next to measured values."""
    return 1.0 / (p + 1.0)


@dataclass
class AlphaCurve:
    beta: float
    points: list  # (p, alpha, alpha_stderr), p strictly increasing

    def __post_init__(self):
        self.points = sorted((float(p), float(a), float(s)) for p, a, s in self.points)
        ps = [pt[0] for pt in self.points]
        if len(set(ps)) != len(ps):
            raise ValueError("duplicate p values in an alpha curve")

    @property
    def p(self):
        return np.array([pt[0] for pt in self.points])

    @property
    def alpha(self):
        return np.array([pt[1] for pt in self.points])

    def to_csv(self, path) -> Path:
        path = Path(path)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["beta", "p", "alpha", "alpha_stderr", "alpha_1_over_p_plus_1"])
            for p, a, s in self.points:
                w.writerow([repr(self.beta), repr(p), repr(a), repr(s), repr(predicted_alpha(p))])
        return path

    @classmethod
    def from_csv(cls, path) -> AlphaCurve:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        if not rows:
            raise ValueError(f"{path} holds no curve points")
        betas = {float(r["beta"]) for r in rows}
        if len(betas) != 1:
            raise ValueError(f"{path} mixes several beta values")
        return cls(betas.pop(), [(r["p"], r["alpha"], r.get("alpha_stderr") or 0.0) for r in rows])


@dataclass
class CollapseResult:
    reference_beta: float
    coefficients: dict  # beta -> (c1, c2)
    residual_before: float
    residual_after: float
    p: np.ndarray = field(repr=False)
    rescaled: dict = field(repr=False)  # beta -> c1 * alpha + c2 on the reference p grid

    def to_dict(self) -> dict:
        return {
            "reference_beta": self.reference_beta,
            "coefficients": {repr(b): {"c1": c1, "c2": c2} for b, (c1, c2) in self.coefficients.items()},
            "residual_before": self.residual_before,
            "residual_after": self.residual_after,
        }

    def write(self, prefix) -> list[Path]:
        """``<prefix>.json``, a coefficient CSV and whitespace-separated plot columns."""
        prefix = Path(prefix)
        js = prefix.with_name(prefix.name + ".json")
        js.write_text(json.dumps(self.to_dict(), indent=2))
        table = prefix.with_name(prefix.name + "_coefficients.csv")
        with open(table, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["beta", "c1", "c2"])
            for b, (c1, c2) in sorted(self.coefficients.items()):
                w.writerow([repr(b), repr(c1), repr(c2)])
        plot = prefix.with_name(prefix.name + "_plot.dat")
        betas = sorted(self.rescaled)
        cols = np.column_stack([self.p] + [self.rescaled[b] for b in betas])
        header = "p " + " ".join(f"alpha_bar_beta{b:g}" for b in betas)
        np.savetxt(plot, cols, fmt="%.10g", header=header)
        return [js, table, plot]


def _affine_fit(x, y):
    """(c1, c2) minimizing sum (c1 x + c2 - y)**2."""
    if np.ptp(x) == 0:
        raise DegenerateCollapseError("alpha is constant along a curve; the scale c1 is unidentifiable")
    xm, ym = x.mean(), y.mean()
    c1 = np.sum((x - xm) * (y - ym)) / np.sum((x - xm) ** 2)
    return float(c1), float(ym - c1 * xm)


def scaling_collapse(curves, reference_beta: float = 1.0) -> CollapseResult:
    """Map each curve onto the reference by ``alpha_bar = c1 alpha + c2``.

    Curves are compared on the reference p values inside each curve's p range,
    interpolating linearly in p.  Residuals are the RMS distance to the
    reference over all non-reference curves, before (c1 = 1, c2 = 0) and after.
    """
    curves = list(curves)
    refs = [c for c in curves if c.beta == reference_beta]
    if len(refs) != 1:
        raise ValueError(f"need exactly one curve with beta={reference_beta}")
    if len(curves) < 2:
        raise ValueError("collapse needs at least two curves")
    ref = refs[0]
    coefficients = {ref.beta: (1.0, 0.0)}
    rescaled = {ref.beta: ref.alpha.copy()}
    before, after = [], []
    for curve in curves:
        if curve is ref:
            continue
        common = (ref.p >= curve.p[0]) & (ref.p <= curve.p[-1])
        if common.sum() < 3:
            raise ValueError(f"curve beta={curve.beta} shares fewer than 3 p values with the reference")
        a = np.interp(ref.p[common], curve.p, curve.alpha)
        target = ref.alpha[common]
        c1, c2 = _affine_fit(a, target)
        coefficients[curve.beta] = (c1, c2)
        before.append(a - target)
        after.append(c1 * a + c2 - target)
        full = np.full(len(ref.p), np.nan)
        full[common] = c1 * a + c2
        rescaled[curve.beta] = full
    rms = lambda parts: float(np.sqrt(np.mean(np.concatenate(parts) ** 2)))
    return CollapseResult(reference_beta, coefficients, rms(before), rms(after), ref.p.copy(), rescaled)

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dnlse.analysis import (
    PAPER_WINDOWS,
    AlphaCurve,
    fit_alpha,
    fit_stability,
    heuristic_ratio,
    predicted_alpha,
    running_alpha,
    scaling_collapse,
)
from dnlse.errors import DegenerateCollapseError, FitDomainError, InsufficientDataError

T = np.concatenate([[0.0], np.geomspace(1, 1000, 200)])


def test_exact_power_law():
    fit = fit_alpha((T, 3 * T**0.5), (500, 1000))
    assert fit.alpha == pytest.approx(0.5, abs=1e-12)
    assert fit.D == pytest.approx(3.0, rel=1e-11)
    assert fit.rms_residual < 1e-12
    assert fit.n_points >= 3 and fit.window == (500.0, 1000.0)


def test_constant_series():
    fit = fit_alpha((T, np.full_like(T, 40.0)), (500, 1000))
    assert fit.alpha == pytest.approx(0, abs=1e-12)
    assert fit.D == pytest.approx(40, rel=1e-12)


def test_fit_errors():
    m2 = 2 * T**0.3
    bad = m2.copy()
    bad[-3] = 0
    with pytest.raises(FitDomainError):
        fit_alpha((T, bad), (500, 1000))
    with pytest.raises(InsufficientDataError):
        fit_alpha((T, m2), (2000, 3000))


def test_fit_uses_ensemble_errors():
    from dnlse.ensemble import EnsembleResult
    m2 = 2 * T**0.3
    res = EnsembleResult(T, m2, 0.01 * m2, np.log(np.where(T > 0, m2, 1)), 50)
    fit = fit_alpha(res, (500, 1000))
    assert fit.alpha == pytest.approx(0.3, abs=1e-12)
    assert fit.alpha_stderr > 0


@given(s=st.floats(1e-2, 1e2), lam=st.floats(0.5, 2.0), alpha=st.floats(0.0, 1.0))
@settings(max_examples=40, deadline=None)
def test_fit_equivariance(s, lam, alpha):
    rng = np.random.default_rng(1)
    m2 = 4 * T**alpha * (1 + 0.02 * rng.standard_normal(T.size))
    m2[0] = 0
    base = fit_alpha((T, m2), (1, 1000))
    scaled = fit_alpha((T, s * m2), (1, 1000))
    assert scaled.alpha == pytest.approx(base.alpha, abs=1e-9)
    assert scaled.D == pytest.approx(s * base.D, rel=1e-9)
    stretched = fit_alpha((lam * T, m2), (lam, lam * 1000))
    assert stretched.alpha == pytest.approx(base.alpha, abs=1e-9)
    assert stretched.D == pytest.approx(base.D * lam ** (-base.alpha), rel=1e-9)


def test_stability_on_exact_power_law():
    fits, errors, spread = fit_stability((T, 2 * T**0.33), PAPER_WINDOWS)
    assert not errors and len(fits) == 3
    assert spread < 1e-12


def test_stability_records_bad_window():
    fits, errors, _ = fit_stability((T, 2 * T**0.33), [(500, 1000), (5000, 9000)])
    assert list(errors) == [(5000.0, 9000.0)]
    assert (500.0, 1000.0) in fits


def test_running_alpha_constant_for_power_law():
    t, a = running_alpha((T, 7 * T**0.4), 0.5)
    np.testing.assert_allclose(a, 0.4, atol=1e-10)
    assert t.min() >= 10**0.25 * (1 - 1e-9)


def test_running_alpha_saturation():
    m2 = np.where(T < 100, T, 100.0)
    t, a = running_alpha((T, m2), 0.5)
    assert a[0] == pytest.approx(1.0, abs=1e-9)
    assert a[-1] == pytest.approx(0.0, abs=1e-9)
    assert np.all(np.diff(a) <= 1e-12)


def test_running_alpha_short_series():
    with pytest.raises(InsufficientDataError):
        running_alpha((T[:5], T[:5]), 2.0)


def curve(beta, ps, alphas):
    return AlphaCurve(beta, [(p, a, 0.0) for p, a in zip(ps, alphas)])


PS = np.array([0.1, 0.25, 0.5, 1, 2, 4])
ALPHA = np.array([0.1, 0.3, 0.42, 0.38, 0.3, 0.12])


def test_collapse_identity():
    res = scaling_collapse([curve(1.0, PS, ALPHA), curve(0.5, PS, ALPHA)], 1.0)
    c1, c2 = res.coefficients[0.5]
    assert c1 == pytest.approx(1, abs=1e-12) and c2 == pytest.approx(0, abs=1e-12)
    assert res.residual_after < 1e-12 and res.coefficients[1.0] == (1.0, 0.0)


def test_collapse_recovers_affine_map():
    res = scaling_collapse([curve(1.0, PS, ALPHA), curve(0.5, PS, 0.5 * ALPHA + 0.1)], 1.0)
    c1, c2 = res.coefficients[0.5]
    assert abs(c1 - 2) < 1e-10 and abs(c2 + 0.2) < 1e-10
    assert res.residual_after < 1e-10 < res.residual_before


def test_collapse_interpolates_mismatched_grid():
    fine_p = np.linspace(0.1, 4, 40)
    ref = curve(1.0, PS, 2 * PS + 1)
    other = curve(2.0, fine_p, 0.5 * (2 * fine_p + 1) - 0.3)
    res = scaling_collapse([ref, other], 1.0)
    c1, c2 = res.coefficients[2.0]
    assert c1 == pytest.approx(2, abs=1e-10) and c2 == pytest.approx(0.6, abs=1e-10)


def test_collapse_degenerate():
    with pytest.raises(DegenerateCollapseError):
        scaling_collapse([curve(1.0, PS, ALPHA), curve(0.5, PS, np.full(6, 0.2))], 1.0)


def test_collapse_residual_never_increases():
    rng = np.random.default_rng(3)
    for _ in range(20):
        res = scaling_collapse([curve(1.0, PS, ALPHA), curve(0.5, PS, rng.random(6))], 1.0)
        assert res.residual_after <= res.residual_before + 1e-15


def test_collapse_outputs(tmp_path):
    res = scaling_collapse([curve(1.0, PS, ALPHA), curve(0.5, PS, 0.5 * ALPHA + 0.1)], 1.0)
    js, table, plot = res.write(tmp_path / "collapse")
    data = np.loadtxt(plot)
    assert data.shape == (6, 3)
    np.testing.assert_allclose(data[:, 1], data[:, 2], atol=1e-9)
    assert "c1" in table.read_text()


def test_alpha_curve_csv_roundtrip(tmp_path):
    c = curve(0.75, PS[::-1], ALPHA[::-1])
    assert list(c.p) == sorted(PS)
    back = AlphaCurve.from_csv(c.to_csv(tmp_path / "c.csv"))
    assert back.beta == 0.75 and back.points == c.points


def test_heuristic_ratio():
    for dn in (1, 10, 1000):
        assert heuristic_ratio(dn, 0.7, 2) == 0.7
    assert heuristic_ratio(100, 2.0, 4) == pytest.approx(0.02, rel=1e-14)
    assert heuristic_ratio(1e12, 1.0, 3) < 1e-5
    values = [heuristic_ratio(dn, 1.0, 3) for dn in (1, 10, 100)]
    assert values[0] > values[1] > values[2]
    values = [heuristic_ratio(dn, 1.0, 1) for dn in (1, 10, 100)]
    assert values[0] < values[1] < values[2]
    with pytest.raises(ValueError):
        heuristic_ratio(0.5, 1.0, 2)


def test_predicted_alpha():
    assert predicted_alpha(2) == pytest.approx(1 / 3)

import numpy as np
import pytest
from scipy.linalg import expm
from scipy.special import jv

from dnlse.errors import BoundaryContaminationError, ConfigError, LatticeMismatchError
from dnlse.model import ModelParams, hopping_matrix, initial_wavepacket, linear_hamiltonian, make_disorder
from dnlse.observables import energy, norm
from dnlse.propagator import (
    SABA2,
    STRANG,
    SplitScheme,
    UnverifiedStepWarning,
    default_dt,
    evolve,
    kinetic_step,
    potential_phase_step,
    saba_step,
    sample_grid,
    time_reverse_run,
)

from conftest import random_state


def exact_linear(psi, disorder, T):
    """Propagate with the eigendecomposition of the periodic linear Hamiltonian."""
    vals, vecs = np.linalg.eigh(linear_hamiltonian(disorder, periodic=True))
    return vecs @ (np.exp(-1j * vals * T) * (vecs.conj().T @ psi))


def run_steps(psi, disorder, params, scheme, dt, n):
    for _ in range(n):
        psi = saba_step(psi, disorder, params, scheme, dt)
    return psi


def test_scheme_invariants():
    for scheme in (SABA2, STRANG):
        assert sum(scheme.kinetic) == pytest.approx(1, abs=1e-15)
        assert sum(scheme.potential) == pytest.approx(1, abs=1e-15)
    with pytest.raises(ConfigError):
        SplitScheme("bad", (0.5, 0.6), (1.0,))
    with pytest.raises(ConfigError):
        SplitScheme("lopsided", (0.2, 0.5, 0.3), (0.5, 0.5))


def test_potential_step_preserves_moduli(rng):
    d = make_disorder(1, 15, 4.0)
    psi = random_state(rng, 15)
    out = potential_phase_step(psi, d, ModelParams(1.7, 1.3, 4.0), 0.37)
    np.testing.assert_allclose(np.abs(out), np.abs(psi), rtol=1e-14)


def test_potential_step_identity_without_potential(rng):
    psi = random_state(rng, 9)
    out = potential_phase_step(psi, make_disorder(1, 9, 0.0), ModelParams(0, 2, 0), 1.3)
    np.testing.assert_array_equal(out, psi)


def test_potential_step_pi_rotation():
    psi = initial_wavepacket(5)
    out = potential_phase_step(psi, make_disorder(1, 5, 0.0), ModelParams(1.0, 2.0, 0.0), np.pi)
    assert out[2] == pytest.approx(-1.0, abs=1e-15)


def test_potential_step_size_mismatch():
    with pytest.raises(LatticeMismatchError):
        potential_phase_step(np.ones(5), make_disorder(1, 7, 1.0), ModelParams(0, 2, 1), 0.1)


def test_kinetic_step_uniform_mode():
    N, tau = 16, 0.43
    psi = np.ones(N) / np.sqrt(N)
    np.testing.assert_allclose(kinetic_step(psi, tau), np.exp(2j * tau) * psi, atol=1e-15)


def test_kinetic_step_zero_time(rng):
    psi = random_state(rng, 11)
    np.testing.assert_allclose(kinetic_step(psi, 0.0), psi, atol=1e-15)


def test_kinetic_step_matches_matrix_exponential(rng):
    psi = random_state(rng, 8)
    expected = expm(-1j * 0.3 * hopping_matrix(8)) @ psi
    assert np.max(np.abs(kinetic_step(psi, 0.3) - expected)) < 1e-10


def test_step_is_continuous_in_dt(rng):
    d = make_disorder(2, 15, 4.0)
    psi = random_state(rng, 15)
    params = ModelParams(1.0, 2.0, 4.0)
    changes = [np.linalg.norm(saba_step(psi, d, params, SABA2, dt) - psi) for dt in (1e-2, 1e-3, 1e-4)]
    assert changes[0] > changes[1] > changes[2]
    assert changes[1] / changes[2] == pytest.approx(10, rel=0.05)


def test_step_norm_drift(rng):
    d = make_disorder(2, 31, 4.0)
    psi = random_state(rng, 31)
    params = ModelParams(2.0, 1.5, 4.0)
    for _ in range(50):
        out = saba_step(psi, d, params, SABA2, 0.1)
        assert abs(norm(out) - norm(psi)) < 1e-12
        psi = out


@pytest.mark.parametrize("scheme", [SABA2, STRANG])
def test_linear_evolution_matches_eigendecomposition(rng, scheme):
    d = make_disorder(11, 16, 4.0)
    psi = random_state(rng, 16)
    params = ModelParams(0.0, 2.0, 4.0)
    exact = exact_linear(psi, d, 10.0)
    errs = [np.max(np.abs(run_steps(psi, d, params, scheme, dt, round(10 / dt)) - exact))
            for dt in (0.04, 0.02, 0.01)]
    order = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all((order > 1.8) & (order < 2.2))
    if scheme is SABA2:
        assert errs[-1] < 1e-3


def test_fused_evolve_matches_single_steps(rng):
    d = make_disorder(4, 41, 4.0)
    params = ModelParams(1.0, 2.0, 4.0)
    psi0 = initial_wavepacket(41)
    _, fused = evolve(psi0, d, params, SABA2, 0.05, 5.0, [0.0, 5.0], return_state=True, threshold=np.inf)
    stepped = run_steps(psi0, d, params, SABA2, 0.05, 100)
    np.testing.assert_allclose(fused, stepped, atol=1e-13)


def test_free_lattice_bessel_oracle():
    # psi_n(t) = i^n J_n(2t); the Bessel sum of n^2 J_n^2 is independent of the propagator.
    t = np.array([0.5, 2.0, 5.0, 10.0])
    n = np.arange(-200, 201)
    bessel_m2 = np.array([np.sum(n**2 * jv(n, 2 * tt) ** 2) for tt in t])
    np.testing.assert_allclose(bessel_m2, 2 * t**2, rtol=1e-12)

    size = 201
    series, psi = evolve(initial_wavepacket(size), make_disorder(0, size, 0.0), ModelParams(0, 2, 0),
                         SABA2, 0.01, 10.0, np.concatenate([[0.0], t]), return_state=True)
    np.testing.assert_allclose(series.m2[1:], bessel_m2, rtol=1e-2)
    sites = np.arange(-100, 101)
    np.testing.assert_allclose(psi, 1j**sites * jv(sites, 20.0), atol=1e-3)


def test_gauge_shift_changes_only_phase():
    size = 101
    d = make_disorder(8, size, 4.0)
    params = ModelParams(1.0, 2.0, 4.0)
    psi0 = initial_wavepacket(size)
    a, psi_a = evolve(psi0, d, params, SABA2, 0.01, 20.0, return_state=True, threshold=np.inf)
    b, psi_b = evolve(psi0, d.shifted(1.0), params, SABA2, 0.01, 20.0, return_state=True,
                      threshold=np.inf)
    np.testing.assert_allclose(b.m2, a.m2, rtol=0, atol=1e-10)
    np.testing.assert_allclose(psi_b, np.exp(-1j * 20.0) * psi_a, atol=1e-9)


def test_evolve_is_deterministic():
    size = 81
    d = make_disorder(3, size, 4.0)
    params = ModelParams(0.75, 1.5, 4.0)
    a = evolve(initial_wavepacket(size), d, params, SABA2, 0.01, 10.0, threshold=np.inf)
    b = evolve(initial_wavepacket(size), make_disorder(3, size, 4.0), params, SABA2, 0.01, 10.0,
               threshold=np.inf)
    assert a.as_array().tobytes() == b.as_array().tobytes()


def test_evolve_first_record():
    s = evolve(initial_wavepacket(51), make_disorder(1, 51, 4.0), ModelParams(1, 2, 4), SABA2, 0.1, 10.0,
               threshold=np.inf)
    assert s.t[0] == 0 and s.m2[0] == 0 and s.norm[0] == 1
    assert np.all(np.diff(s.t) > 0)
    assert np.max(np.abs(s.norm - 1)) < 1e-12


def test_boundary_guard_names_time():
    with pytest.raises(BoundaryContaminationError) as info:
        evolve(initial_wavepacket(41), make_disorder(1, 41, 0.0), ModelParams(0, 2, 0), SABA2, 0.01, 20.0)
    assert 0 < info.value.t <= 20.0


def test_sample_times_must_align():
    with pytest.raises(ConfigError):
        evolve(initial_wavepacket(21), make_disorder(1, 21, 1.0), ModelParams(0, 2, 1), SABA2, 0.1,
               1.0, [0.0, 0.55, 1.0])


def test_sample_grid_shape():
    t = sample_grid(1000.0, 0.01)
    assert t[0] == 0 and t[1] == 1.0 and t[-1] == 1000.0
    assert len(t) == 201
    k = t / 0.01
    np.testing.assert_allclose(k, np.rint(k), atol=1e-6)
    coarse = sample_grid(1000.0, 0.1)
    assert len(coarse) < 201 and np.all(np.diff(coarse) > 0)


def test_default_dt_table():
    assert default_dt(0.0) == 0.1
    assert default_dt(0.25) == 0.1
    assert default_dt(0.5) == 0.02
    assert default_dt(0.75) == 0.01
    assert default_dt(1.0) == 0.00025
    with pytest.warns(UnverifiedStepWarning):
        assert default_dt(4.0) == 0.1


def test_time_reversal_is_exact_up_to_roundoff():
    size = 61
    d = make_disorder(5, size, 4.0)
    delta, back = time_reverse_run(initial_wavepacket(size), d, ModelParams(1.0, 2.0, 4.0), SABA2, 1e-3, 1.0)
    assert delta < 1e-8
    assert back.shape == (size,)


def test_time_reversal_linear_long():
    size = 201
    d = make_disorder(5, size, 4.0)
    delta, _ = time_reverse_run(initial_wavepacket(size), d, ModelParams(0.0, 2.0, 4.0), SABA2, 0.01, 1000.0)
    assert delta < 0.1


def test_energy_conserved_short_run():
    size = 101
    d = make_disorder(6, size, 4.0)
    params = ModelParams(1.0, 2.0, 4.0)
    s = evolve(initial_wavepacket(size), d, params, SABA2, 0.01, 50.0, threshold=np.inf)
    drift = np.abs(s.energy - s.energy[0]) / max(1, abs(s.energy[0]))
    assert drift.max() < 1e-3
    assert s.energy[0] == pytest.approx(energy(initial_wavepacket(size), d, params))

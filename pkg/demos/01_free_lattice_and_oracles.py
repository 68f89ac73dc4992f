"""Checking the integrator against problems with known answers.

Without disorder or nonlinearity a packet launched on one site spreads
ballistically, psi_n(t) = i^n J_n(2t), so m2(t) = 2 t^2.  With disorder but
no nonlinearity the exact propagator is available by diagonalizing the
Hamiltonian on a small ring.
"""

# %%
import numpy as np
from scipy.special import jv

from dnlse import SABA2, ModelParams, evolve, initial_wavepacket, make_disorder
from dnlse.model import linear_hamiltonian
from dnlse.propagator import saba_step

# %% Free lattice: m2 follows 2 t^2 and the amplitudes follow Bessel functions
size = 201
times = np.array([0.0, 1.0, 2.5, 5.0, 10.0])
series, psi = evolve(initial_wavepacket(size), make_disorder(0, size, 0.0), ModelParams(0.0, 2.0, 0.0),
                     SABA2, 0.01, 10.0, times, return_state=True)
print(" t      m2        2t^2")
for t, m2 in zip(series.t, series.m2):
    print(f"{t:4.1f}  {m2:9.4f}  {2 * t * t:9.4f}")
n = np.arange(-100, 101)
print("max |psi - i^n J_n(20)| at t=10:", np.abs(psi - 1j**n * jv(n, 20.0)).max())

# %% Disordered ring: second-order convergence towards the exact propagator
N, T = 16, 10.0
disorder = make_disorder(11, N, 4.0)
rng = np.random.default_rng(0)
psi0 = rng.normal(size=N) + 1j * rng.normal(size=N)
psi0 /= np.linalg.norm(psi0)
vals, vecs = np.linalg.eigh(linear_hamiltonian(disorder, periodic=True))
exact = vecs @ (np.exp(-1j * vals * T) * (vecs.conj().T @ psi0))

for dt in (0.04, 0.02, 0.01, 0.005):
    psi = psi0
    for _ in range(round(T / dt)):
        psi = saba_step(psi, disorder, ModelParams(0.0, 2.0, 4.0), SABA2, dt)
    print(f"dt={dt:<6} max error {np.abs(psi - exact).max():.3e}")
# Each halving of dt divides the error by four.

"""Disorder averaging and the spreading exponent.

A small ensemble (R = 16, t up to 300) keeps this quick; exponents measured
this way are rough.  The same calls at R = 200 and t = 1000 give the
desk-scale numbers.
"""

# %%
from pathlib import Path

import numpy as np

from dnlse import EnsembleConfig, SimulationConfig, fit_alpha, fit_stability, run_ensemble
from dnlse.analysis import running_alpha

CKPT = Path("/tmp/demo_ensemble.ckpt.npz")
CKPT.unlink(missing_ok=True)  # a checkpoint from other settings would be refused

sim = SimulationConfig(beta=1.0, p=2.0, W=4.0, dt=0.02, t_max=300.0, L=202, n_samples=80)
result = run_ensemble(EnsembleConfig(sim, realizations=16, base_seed=0, batch=8),
                      checkpoint=CKPT)
print(f"{result.completed} realizations, {len(result.failures)} guard failures")

# %% Power-law fit over a late window, and its sensitivity to the window
fit = fit_alpha(result, (150, 300))
print(f"alpha = {fit.alpha:.3f} +- {fit.alpha_stderr:.3f}, D = {fit.D:.3f}")
fits, errors, spread = fit_stability(result, [(75, 300), (150, 300), (240, 300)])
for w, f in fits.items():
    print(f"window {w}: alpha = {f.alpha:.3f}")
print(f"spread = {spread:.3f}")

# %% Local slope in log-log
tc, a = running_alpha(result, 0.5)
for t, v in zip(tc[::10], a[::10]):
    print(f"t ~ {t:7.1f}  local alpha {v:.3f}")

# %% Rerunning resumes from the checkpoint and returns identical numbers
again = run_ensemble(EnsembleConfig(sim, realizations=16, base_seed=0, batch=8),
                     checkpoint=CKPT)
print("identical after resume:", np.array_equal(again.mean_m2, result.mean_m2))

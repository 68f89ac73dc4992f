"""alpha(p) at two nonlinearity strengths and their affine collapse.

Tiny ensembles (R = 6 to t = 200) so the script finishes in a few minutes;
the curves are noisy and only illustrate the workflow.
"""

# %%
from dnlse import EnsembleConfig, SimulationConfig, fit_alpha, scaling_collapse, sweep
from dnlse.analysis import AlphaCurve, heuristic_ratio, predicted_alpha

P = (0.5, 1.0, 2.0, 4.0)
curves = []
for beta, dt in ((1.0, 0.02), (0.5, 0.02)):
    template = EnsembleConfig(SimulationConfig(beta=beta, p=2.0, W=4.0, dt=dt, t_max=200.0, L=202,
                                               n_samples=60), realizations=6, base_seed=1000)
    points = sweep([(p, beta) for p in P], template)
    fits = [fit_alpha(pt.result, (100, 200)) for pt in points]
    curves.append(AlphaCurve(beta, [(pt.p, f.alpha, f.alpha_stderr) for pt, f in zip(points, fits)]))

# %%
print("  p   " + "  ".join(f"beta={c.beta:g}" for c in curves) + "   1/(p+1)")
for i, p in enumerate(P):
    print(f"{p:4g}  " + "  ".join(f"{c.alpha[i]:8.3f}" for c in curves) + f"   {predicted_alpha(p):.3f}")

# %% Map beta = 0.5 onto beta = 1 with alpha_bar = c1 alpha + c2
collapse = scaling_collapse(curves, reference_beta=1.0)
c1, c2 = collapse.coefficients[0.5]
print(f"c1 = {c1:.3f}, c2 = {c2:.3f}; residual {collapse.residual_before:.4f} -> {collapse.residual_after:.4f}")

# %% Nonlinear shift over level spacing as the packet widens
for p in (1.0, 2.0, 4.0):
    print(f"p={p:g}: " + ", ".join(f"dn={dn}: {heuristic_ratio(dn, 1.0, p):.3g}" for dn in (1, 10, 100)))

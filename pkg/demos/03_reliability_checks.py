"""Is a step size good enough?  Time reversal (t1) and step halving (t2).

t1 integrates to T, reverses the step and integrates back; the summed
amplitude error must stay below 0.1.  t2 reruns the same realization with
half the step; the time-averaged relative m2 deviation must stay below 0.01.
A step that is far too large for strong nonlinearity already fails t2 on
this short horizon; integrated to t = 1000 it loses t1 as well.
"""

# %%
from dnlse import SimulationConfig, check_t1, check_t2

T = 200.0
cases = [
    ("beta=0.5, dt=0.02", SimulationConfig(beta=0.5, p=2.0, dt=0.02, t_max=T, L=150)),
    ("beta=0.25, dt=0.1, 4th order", SimulationConfig(beta=0.25, p=2.0, dt=0.1, t_max=T, L=150,
                                                      scheme="yoshida4")),
    ("beta=4, dt=0.1", SimulationConfig(beta=4.0, p=2.0, dt=0.1, t_max=T, L=150)),
]

# %%
for label, cfg in cases:
    t1 = check_t1(cfg, seed=1, T=T)
    t2 = check_t2(cfg, seed=1, T=T)
    print(f"{label:30s} t1={t1.value:9.2e} {'ok' if t1.passed else 'FAIL':4s}  "
          f"t2={t2.value:8.2e} {'ok' if t2.passed else 'FAIL'}")

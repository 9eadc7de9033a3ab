"""What robustness costs compared with knowing the network exactly.

Run with ``python gallery/03_robust_vs_optimal.py``.
"""

# %% Set up a scenario and observe a handful of nodes for a short while.
import numpy as np

from sisrobust import certify, evaluate_allocation, optimal_allocate, robust_allocate
from sisrobust.experiments import RunConfig, prepare

cfg = RunConfig(n=8, t_max=6, seed=11, density=0.3)
scen = prepare(cfg)
budget = cfg.effective_budget
sensors = scen.sensors(4)
model = scen.model(cfg.t_max, sensors)
print("sensors:", sensors)

# %% The robust allocation only sees the uncertainty set ...
rob = robust_allocate(model, scen.cost, budget)
# ... while the oracle allocation knows the true rates.
opt = optimal_allocate(scen.B_true, scen.cost, budget)
print("robust  dc:", np.round(rob.dc, 4))
print("optimal dc:", np.round(opt.dc, 4))

# %% Both are judged on the true network.
r_rob = evaluate_allocation(scen.B_true, rob.dc)
r_opt = evaluate_allocation(scen.B_true, opt.dc)
print(f"true radius: robust {r_rob:.5f}, optimal {r_opt:.5f}, gap {r_rob - r_opt:.5f}")
print(f"certified bound for the robust allocation: {rob.lambda_star:.5f}")

# %% Sampling the uncertainty set never beats the certificate.
worst, ok = certify(model, rob.dc, rob.lambda_star, count=200, seed=0)
print(f"largest sampled radius {worst:.5f}, below the certificate: {ok}")

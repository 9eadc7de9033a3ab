"""From one observed outbreak to a certified allocation on two nodes.

Run with ``python gallery/01_two_node_walkthrough.py``.
"""

# %% A two-node network where each node infects the other at rate 0.2.
import numpy as np

from sisrobust import CostModel, robust_allocate, worst_case_rho
from sisrobust.epidemic import ObservationSet
from sisrobust.network import ContactNetwork, spectral_radius
from sisrobust.uncertainty import build_model, row_sup

net = ContactNetwork(2, src=[1, 0], dst=[0, 1], weight=[0.2, 0.2])
B = net.rate_matrix()
print("true rate matrix\n", B)

# %% With natural recovery 0.5 the linearized system has radius 0.7.
rho, v = spectral_radius(B + 0.5 * np.eye(2))
print(f"rho(B + 0.5 I) = {rho:.4f}, Perron vector {v}")

# %% We only know the rates up to a factor in [0.5, 1.5] ...
box = build_model(net, None, 0.5, 1.5)
print("box-only sup of beta_01:", row_sup(box, 0, [1.0]))

# ... until two snapshots of the infection levels arrive.
obs = ObservationSet(2, (0, 1), np.array([[0.5, 0.5], [0.3, 0.3]]), np.full(2, 0.5))
model = build_model(net, obs, 0.5, 1.5)
print("data-constrained sup of beta_01:", row_sup(model, 0, [1.0]))

# %% The worst case over the shrunken set drops accordingly.
natural = np.full(2, 0.5)
print("worst-case radius, box only:", worst_case_rho(box, natural))
print("worst-case radius, with data:", worst_case_rho(model, natural))

# %% Spend a budget of 0.6 units to push the certified radius down.
cost = CostModel.homogeneous(2, lower=0.1, upper=0.5)
res = robust_allocate(model, cost, budget=0.6)
print("allocation dc =", res.dc, "spend =", round(res.spend, 6))
print("certified worst-case radius:", res.lambda_star)

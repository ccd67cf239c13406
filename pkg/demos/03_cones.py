# %% [markdown]
# # Cone invariance and Hilbert-metric contraction
#
# The operator maps a cone of positive functions with controlled local
# Hoelder ratio strictly inside itself.  Iterating, the projective metric
# between any two members shrinks geometrically.

# %%
import numpy as np

from thermogap import ConeParams, check_hypotheses, contraction_check, make_doubling, \
    make_potential_fourier, theta_kappa, verify_invariance
from thermogap.cones import random_cone_members
from thermogap.hypotheses import global_holder_factor

f = make_doubling()
pot = make_potential_fourier([[1, 0.01, 0.0]])
assert check_hypotheses(f, pot, alpha=1.0).passed
params = ConeParams(kappa=20.0, delta=0.5, alpha=1.0)

# %%
inv = verify_invariance(f, pot, params, 30, seed=1, grid=256)
print(f"invariance holds: {inv.passed}, observed lambda_hat = {inv.lambda_hat:.3f}")

# %%
members = random_cone_members(params, 20, seed=2, grid=256)
x = np.arange(256) / 256
th = theta_kappa(members[0](x), members[1](x), params)
print(f"Theta_kappa = {th.theta:.4f} >= Theta_+ = {th.theta_plus:.4f}")

# %%
res = contraction_check(f, pot, params, list(zip(members[::2], members[1::2])), 6,
                        inv.lambda_hat, global_holder_factor(0.5), grid=256)
print(f"worst one-step factor {res.max_factor:.3f} vs bound {res.bound:.3f}; "
      f"fitted rate {res.tau_fit:.3f}")

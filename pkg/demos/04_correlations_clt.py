# %% [markdown]
# # Decay of correlations and the central limit theorem
#
# Correlations are computed from the discretised operator without sampling.
# The asymptotic variance follows from a truncated Green-Kubo sum and is
# compared with the spread of simulated Birkhoff sums.

# %%
import numpy as np

from thermogap import correlation, make_doubling, make_manneville_pomeau, make_potential_constant, \
    make_potential_fourier, solve
from thermogap.statistics import clt_empirical, green_kubo

zero = make_potential_constant(0.0)
cos = make_potential_fourier([[1, 1.0, 0.0]]).evaluator

# %%
# for the doubling map cos(2 pi x) and its images are orthogonal
dbl = solve(make_doubling(), zero, 1024)
print(np.round(correlation(dbl, cos, cos, 5).values, 12))

# %%
obs = make_potential_fourier([[1, 1.0, 0.0], [2, 0.0, 0.5]]).evaluator
mp = solve(make_manneville_pomeau(0.25), zero, 1024)
s = correlation(mp, obs, obs, 20)
print(f"fitted decay {s.tau_fit:.3f} (R^2 {s.r2:.3f}), second eigenvalue {mp.tau_sub:.3f}")

# %%
gk = green_kubo(dbl, cos, 50)
res = clt_empirical(make_doubling(), dbl, cos, 500, 20000, seed=0, sigma2=gk.sigma2)
print(f"sigma^2 = {gk.sigma2:.8f}; KS distance to N(0, sigma^2): {res.ks:.4f}")

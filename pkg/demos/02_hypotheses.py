# %% [markdown]
# # Checking the standing hypotheses
#
# Before trusting any spectral gap we check the conditions on the map and the
# potential.  The report lists every inequality with its two sides and the
# margin, and flags the ones sensitive to grid refinement.

# %%
from thermogap import (
    check_hypotheses,
    make_doubling,
    make_manneville_pomeau,
    make_potential_constant,
    make_potential_geometric,
)

# %%
rep = check_hypotheses(make_doubling(), make_potential_constant(0.0))
for rec in rep.records:
    print(f"{rec.name:22s} lhs={rec.lhs:9.4g} rhs={rec.rhs:9.4g} {'ok' if rec.passed else 'FAIL'}")

# %% [markdown]
# The geometric potential `-t log|Df|` on the intermittent map is the
# classical phase-transition family.  At `t = 1` its oscillation is far too
# large; for small `t` it fits inside the admissible window.

# %%
f = make_manneville_pomeau(0.5, sigma=1.99)
for t in (1.0, 0.05, 0.01):
    pot = make_potential_geometric(f, t, hoelder_exponent=0.5)
    r = check_hypotheses(f, pot, alpha=0.5, delta=1.5).record("P")
    print(f"t={t:<5} (P) lhs={r.lhs:.3f}  passed={r.passed}")

# %% [markdown]
# # Continuity of pressure and density along a map family
#
# A symmetric pitchfork bifurcation deforms the doubling map.  As the
# parameter tends to zero the pressure and the normalised density return to
# their values at the unperturbed map.

# %%
import math

from thermogap import make_pitchfork_perturbed, make_potential_geometric, pressure_density_sweep


def family(t):
    f = make_pitchfork_perturbed(t, sigma=1.9)
    return f, make_potential_geometric(f, 0.02, hoelder_exponent=1.0, offset=0.02 * math.log(2))


tab = pressure_density_sweep(family, [0.04, 0.02, 0.01, 0.005], 1024, t_ref=0.0)
for row in tab.rows():
    print(f"t={row['t']:<6} |P - log 2|={abs(row['pressure'] - math.log(2)):.2e} "
          f"||h_t - h_0||={row['h_dist']:.2e}")

# %% [markdown]
# # Why the operator is not continuous in the Lipschitz norm
#
# Shifting the doubling map by `1/(10n)` moves it uniformly closer, yet the
# difference of transfer operators applied to a fixed tent function keeps a
# Lipschitz constant of order one.  Only the sup norm shrinks.

# %%
from thermogap import lip_discontinuity_demo, make_doubling, make_shifted_doubling, paired_preimages

for row in lip_discontinuity_demo([1, 10, 100, 1000]):
    print(f"n={row['n']:<5} sup={row['sup']:.2e}  Lip={row['lip']:.4f}")

# %% [markdown]
# Preimages of nearby points under nearby maps stay paired, with a distance
# bound that is sharp for this linear pair.

# %%
res = paired_preimages(make_doubling(), make_shifted_doubling(1), 0.3, 0.3, 4)
print([float(abs(d - b).max()) for d, b in zip(res.distances, res.bounds)])

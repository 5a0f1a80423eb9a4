# %% [markdown]
# # Corners: exponents, sector barriers and polygon budgets
#
# Near a corner of half-aperture θ the torsion function behaves like
# ρ^α with α = π/(2θ) in the plane. For cones in n dimensions α comes from a
# Gegenbauer root search.

# %%
import numpy as np

from torsionlab import corner_exponent, sector_beta_integral_exact, sector_constant
from torsionlab.experiments import exp_polygon_finiteness, exp_sector_equivalence, l_shaped_hexagon

for n in (2, 3, 4):
    row = [corner_exponent(n, t).alpha for t in (0.5, np.pi / 4, np.pi / 2, 2.5)]
    print(f"n={n}: " + "  ".join(f"{a:.5f}" for a in row))

# %% [markdown]
# The sector barrier integrates in closed form; the constant C(θ, β)
# scales as r^{2(1-β)}.

# %%
for theta in (np.pi / 6, np.pi / 3, 2.0):
    c = sector_constant(theta, 0.5)
    print(f"theta={theta:.4f}  C={c:.6f}  r=2 integral {sector_beta_integral_exact(theta, 2.0, 0.5):.6f}")

# %% [markdown]
# Finite element integrals inside an arc-closed sector stay below the
# barrier value and above the disk lower bound.

# %%
res = exp_sector_equivalence(0.5, (np.pi / 4,), (0.5, 1.0))
for c in res.checks:
    print("PASS" if c["passed"] else "FAIL", c["name"])

# %% [markdown]
# An L-shaped hexagon with a reflex corner: every vertex gets a budget, and
# the normalized integral grows with β.

# %%
res = exp_polygon_finiteness(l_shaped_hexagon(), (0.25, 0.5, 0.75), h0=0.15, levels=2)
for row in res.rows:
    if "normalized" in row:
        print(f"beta={row['beta']}: {row['value']:.5f}  history {row['history']}")
print("all checks passed:", res.passed)

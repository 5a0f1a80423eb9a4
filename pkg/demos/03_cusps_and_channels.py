# %% [markdown]
# # Thin channels: where the integral stops being finite
#
# For a cusp of width ε t^p the integral of u^{-β} is finite exactly when
# p(2β - 1) < 1. A quadratic curvilinear channel diverges for β above 1/2.

# %%
from torsionlab.experiments import cusp_criterion, exp_curvilinear_divergence, exp_cusp

for p in (1.5, 2.0, 3.0):
    print(f"p={p}: " + " ".join("F" if cusp_criterion(p, b / 10) else "." for b in range(1, 10)))

# %% [markdown]
# Truncate the cusp at distance δ from the tip and watch the integral grow.

# %%
res = exp_cusp(p_list=(2.0,), beta_list=(0.5, 0.7, 0.8, 0.9))
# growth I(δ) ~ δ^e: e > 0 means a finite limit, e < 0 a power blow-up
for row in res.rows:
    print(f"beta={row['beta']}  finite={row['finite']}  e expected {row['e_expected']:+.3f}"
          f"  observed {row['e_observed']:+.3f}")

# %%
res = exp_curvilinear_divergence(0.75)
for c in res.checks:
    print("PASS" if c["passed"] else "FAIL", c["name"], c["detail"])

# %% [markdown]
# # Torsion function on a disk and a square
#
# Solve -Δu = 1 with u = 0 on the boundary, then integrate u^{-β}.
# On the unit disk u = (1 - |x|²)/4, so ∫u^{-β} = 4^β π / (1 - β).

# %%
import numpy as np

from torsionlab import beta_integral, interpolate, make_disk, make_rectangle, poisson_solve, triangulate
from torsionlab import mellin_beta_integral, solve_sequence, torsional_rigidity

disk = make_disk(1.0, 256)
f = poisson_solve(triangulate(disk, 0.03))
print(f"nodes {f.mesh.n_nodes}, PCG residual {f.residual:.2e}")
print(f"u(0) = {float(interpolate(f, [[0.0, 0.0]])[0]):.6f}  (exact 0.25)")

# %%
for beta in (0.25, 0.5, 0.75):
    r = beta_integral(f, beta)
    exact = 4**beta * np.pi / (1 - beta)
    print(f"beta={beta}: {r.value:.6f}  exact {exact:.6f}  ratio {r.value / exact:.5f}")

# %% [markdown]
# The same integral from the distribution function |{u < λ}| (layer cake):

# %%
print(f"layer cake, beta=0.5: {mellin_beta_integral(f, 0.5):.6f}")

# %% [markdown]
# ## Unit square: a refinement sequence with Richardson extrapolation

# %%
seq = solve_sequence(make_rectangle(1.0, 1.0), 0.1, 4)
for h, v in zip(seq.hs, seq.functionals["integral_u"]):
    print(f"h={h:<7} ∫u = {v:.8f}")
print("observed orders", np.round(seq.orders["integral_u"], 2))
print(f"extrapolated {seq.extrapolated['integral_u']:.8f}  (series 0.0351442)")
iu, energy, gap = torsional_rigidity(seq.fields[-1])
print(f"∫u = {iu:.8f}, ∫|∇u|² = {energy:.8f}")

# %% [markdown]
# # Value function and optimality conditions
#
# Inside the band z*(m) < z < 0 the value is W + c = A(m) g(z - z*(m)), with
# the scale A(m) fixed by what happens at the boundary. We evaluate W, read off
# decisions, and check the conditions that pin the boundary down.

# %%
import numpy as np

from gritquit.boundary import boundary_lookup, solve_boundary
from gritquit.model import STAGED_PARAMS as p, STAGED_PROFIT as f, gamma_roots
from gritquit.value import (
    bhj_residual,
    decide,
    interior_grid,
    reflection_residual,
    smooth_pasting_residual,
    value,
    value_matching_residual,
    value_surface,
)

b = solve_boundary(p, f)
g = gamma_roots(p)

# %%
for m in (0.3, 1.5, 4.0):
    zs = float(boundary_lookup(b, m))
    for z in (0.0, zs / 2, zs):
        print(f"m={m:3.1f} z={z:+.3f}  W={float(value(z, m, b, p, f, g)):8.4f}  {decide(z, m, b).value}")

# %% [markdown]
# Residuals. Smooth pasting holds exactly in the closed form; the BHJ
# finite-difference residual should fall fourfold when the step halves; the
# reflection condition W_m = W_z at z = 0 is what the boundary ODE encodes.

# %%
print("smooth pasting (analytic, fd):", smooth_pasting_residual(b, p, f, g))
print("value matching:", value_matching_residual(b, p, f, g))
grid = interior_grid(b)
r1 = bhj_residual(b, p, f, g, grid=grid, h_fd=5e-3)[1]
r2 = bhj_residual(b, p, f, g, grid=grid, h_fd=2.5e-3)[1]
print(f"BHJ fd residual {r1:.2e} -> {r2:.2e}, ratio {r1 / r2:.3f}")
m, res, w = reflection_residual(b, p, f, g)
print(f"reflection residual max {res.max():.2e} over {m.size} nodes")

# %%
s = value_surface(b, p, f, g, m_res=8, z_res=5)
print(np.column_stack([s["m"], s["z"], np.round(s["W"], 4), s["decision"]])[:10])

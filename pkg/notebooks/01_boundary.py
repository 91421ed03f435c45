# %% [markdown]
# # Solving the free boundary
#
# The developer watches two numbers: the best quality reached so far, m, and
# the drawdown from it, z <= 0. Below a threshold z*(m) they stop drifting and
# act. Which action depends on m: abort early on, restart in the middle,
# launch near the peak. Here we solve for z*(m) and its cutoffs.

# %%
import numpy as np

from gritquit.boundary import boundary_lookup, solve_boundary, terminal_slope
from gritquit.model import BENCHMARK_PARAMS, BENCHMARK_PROFIT, STAGED_PARAMS, STAGED_PROFIT
from gritquit.reference import reference_cutoffs

# %%
p, f = BENCHMARK_PARAMS, BENCHMARK_PROFIT
b = solve_boundary(p, f)
print(f"m0 = {b.m0:.8f}   m1 = {b.m1:.8f}   m* = {b.m_star}")
print(f"z*(0) = {b.z0:.8f}   terminal slope = {terminal_slope(p, f):.6f}")

# %% [markdown]
# On this parameter set m0 = 0: the market is large enough that the developer
# never abandons. A smaller, slower project has all three stages.

# %%
ps, fs = STAGED_PARAMS, STAGED_PROFIT
bs = solve_boundary(ps, fs)
print(f"m0 = {bs.m0:.6f}   m1 = {bs.m1:.6f}   m* = {bs.m_star}")
for m in np.linspace(0, bs.m_star, 11):
    print(f"  m = {m:5.2f}   z* = {float(boundary_lookup(bs, m)):+.5f}   {bs.stage_of(m).value}")

# %% [markdown]
# Independent check: a plain fixed-step RK4 march with linear event location.

# %%
ref = reference_cutoffs(ps.mu, ps.sigma, ps.r, ps.c, ps.R, ps.L,
                        lambda m: float(fs.pi(m)), lambda m: float(fs.dpi(m)), lambda m: float(fs.d2pi(m)),
                        fs.qbar, h=1e-5)
print("RK4 (m0, m1, z*(0)) =", ref)
print("differences:", abs(ref[0] - bs.m0), abs(ref[1] - bs.m1), abs(ref[2] - bs.z0))

# %%
print(bs.to_csv().splitlines()[:4])

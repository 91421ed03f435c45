# %% [markdown]
# # The running maximum of drifted Brownian motion
#
# Closed forms for the law of sup X, the joint law with the endpoint, and the
# two-barrier hitting probability behind the viability result.

# %%
import numpy as np
from scipy import integrate

from gritquit.maxima import (
    MaxLaw,
    hitting_probability,
    running_max_cdf,
    running_max_density,
    running_max_joint_density,
    simulate_gamblers_ruin,
    simulate_running_max,
)

law = MaxLaw(mu=1.0, sigma=1.0, t=1.0)
print(running_max_cdf(law, [0.0, 0.5, 1.0, 2.0, 4.0]))

# %%
a = 1.0
marg, _ = integrate.quad(lambda b: float(running_max_joint_density(law, a, b)), -14, a - 1e-12)
print(f"marginal of joint at a=1: {marg:.12f}   density: {float(running_max_density(law, a)):.12f}")

# %%
x = simulate_running_max(law, 2000, 1e-4, seed=0)
print(f"P(max <= 1): MC {np.mean(x <= 1):.4f}   exact {float(running_max_cdf(law, 1.0)):.4f}")

# %% [markdown]
# Gambler's ruin from 0 between -1 and +1 with unit drift.

# %%
p_hat, se, _ = simulate_gamblers_ruin(1.0, 1.0, -1.0, 1.0, 20_000, 1e-3, seed=1)
print(f"MC {p_hat:.4f} +- {se:.4f}   exact {hitting_probability(1.0, 1.0, -1.0, 1.0):.4f}")

# %% [markdown]
# # Simulating the policy
#
# Euler steps of the quality process; any rise above the running maximum is
# credited to m. The closed-form W at the start state should match the mean
# discounted payoff up to Monte Carlo noise and a small discretisation bias.

# %%
from gritquit.boundary import solve_boundary
from gritquit.maxima import viability_probability
from gritquit.model import BENCHMARK_PARAMS, BENCHMARK_PROFIT, STAGED_PARAMS, STAGED_PROFIT, gamma_roots
from gritquit.simulate import SimConfig, monte_carlo, simulate_path
from gritquit.value import value

p, f = BENCHMARK_PARAMS, BENCHMARK_PROFIT
b = solve_boundary(p, f)

# %%
one = simulate_path(b, p, f, SimConfig(seed=1), path_id=0)
print(one.outcome.value, f"t={one.t_end:.3f} quality={one.launch_quality:.3f} restarts={one.n_restarts}")
print(f"payoff {one.discounted_payoff:.4f} = {one.terminal_value:.4f} - {one.flow_cost:.4f} - {one.restart_cost:.4f}")

# %%
stats = monte_carlo(b, p, f, SimConfig(n_paths=5000, seed=0))
w = float(value(0.0, 0.0, b, p, f, gamma_roots(p)))
print(f"W(0,0) = {w:.4f}   MC = {stats.mean_payoff.mean:.4f} +- {stats.mean_payoff.se:.4f}")
print("restart histogram:", dict(list(sorted(stats.restart_histogram.items()))[:6]))

# %% [markdown]
# With an exploration stage, the launch probability from the origin is the
# probability of reaching m0 before the abort line.

# %%
bs = solve_boundary(STAGED_PARAMS, STAGED_PROFIT)
st = monte_carlo(bs, STAGED_PARAMS, STAGED_PROFIT, SimConfig(n_paths=4000, seed=2))
print(f"P(launch) MC {st.p_launch.mean:.4f} +- {st.p_launch.se:.4f}; "
      f"closed form {viability_probability(bs, STAGED_PARAMS):.4f}")

# %% [markdown]
# # Comparative statics by re-solving
#
# Nudge one parameter by 1%, solve again, and compare boundaries stage by
# stage on the overlap of their domains.

# %%
from gritquit.model import STAGED_PARAMS, STAGED_PROFIT
from gritquit.sweeps import convergence_study, sweep

for which in ("R", "L", "qbar"):
    print(sweep(STAGED_PARAMS, STAGED_PROFIT, which).table())

# %% [markdown]
# The q̄ FinalPush shift changes sign across the stage: holding pi(0) fixed,
# a later peak also raises pi'(m)/(pi(m) - L + c) below the peak.

# %%
rep = sweep(STAGED_PARAMS, STAGED_PROFIT, "qbar")
s = rep.stage_shifts["FinalPush"]
print(f"FinalPush shift range [{s.lo:+.3e}, {s.hi:+.3e}]")

# %%
for h, d in convergence_study(STAGED_PARAMS, STAGED_PROFIT, "R"):
    print(f"rel step {h:<6} dm0/dR ~ {d:.5f}")

# %% [markdown]
# # Several cells sharing one set of pilots
#
# Seven cells reuse the same orthogonal pilots, so each base station's
# least-squares estimate of its own user also contains that user's
# counterparts in every other cell.  Powers are planned on those estimates
# and then meet the true channels.

# %%
import numpy as np

from mimo_ee import SystemParams, gain_matrix, mrt_beamformers
from mimo_ee import multicell as mcm
from mimo_ee.solver import dinkelbach_solve

par = SystemParams(M=100, K=5, r_min=0.0)
mc = mcm.MultiCellParams(par, L=7)
rng = np.random.default_rng(1)
ch = mcm.layout_and_draw(mc, rng)

# %% [markdown]
# Without noise the estimate is exactly the sum over cells.

# %%
est = mcm.ls_estimate(ch, mc, np.random.default_rng(2), sigma2=0.0)
print("noiseless estimate minus sum over cells:", np.abs(est[0, 0] - ch.g[0].sum(axis=0)).max())

# %%
mcm.ls_estimate(ch, mc, rng)
w = mcm.beams(ch)
alloc = mcm.multicell_solve(mc, ch, w)
realized = mcm.evaluate_on_true(mc, alloc, ch, w)
g0 = ch.g[0, 0]
single = dinkelbach_solve(par, gain_matrix(g0, mrt_beamformers(g0))).eta
print(f"planned network bits/J {alloc.eta:9.2f}")
print(f"realised network bits/J {realized:9.2f}")
print(f"isolated centre cell    {single:9.2f}   ratio {realized / single:.3f}")

# %% [markdown]
# The plan is optimistic: the estimated direct gain includes the
# contaminating users, so realised efficiency falls below the plan and well
# below a cell that has the band to itself.

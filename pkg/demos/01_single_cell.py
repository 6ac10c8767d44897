# %% [markdown]
# # One cell, one channel draw
#
# A base station with 100 antennas serves 5 users with maximum ratio
# transmission.  We draw one channel realisation, find the powers that
# maximise bits per joule, and look at how the outer loop gets there.

# %%
import numpy as np

from mimo_ee import SystemParams, draw_channels, gain_matrix, mrt_beamformers, sinr, rate
from mimo_ee.solver import dinkelbach_solve

par = SystemParams()
rng = np.random.default_rng(0)
ch = draw_channels(par, rng)
G = gain_matrix(ch.g, mrt_beamformers(ch.g))
print("user distances (m):", np.round(ch.distance, 1))

# %% [markdown]
# The gain matrix is dominated by its diagonal: with 100 antennas the beam
# aimed at a user is far stronger there than any other user's beam.

# %%
print("direct / strongest cross gain:", np.round(np.diag(G) / (G - np.diag(np.diag(G))).max(axis=1), 1))

# %%
sol = dinkelbach_solve(par, G)
for row in sol.trace.rows:
    print(f"iteration {row.t1}: eta in {row.eta:10.3f}  ->  bits/J {row.ee:10.3f}  "
          f"residual {row.residual:.3e}  (SCA rounds {row.t2}, inner steps {row.t3})")

# %% [markdown]
# Only a few outer iterations are needed.  The users with weak beams sit on
# the 14 kbit/s floor: in this interference-limited regime extra power buys
# them little rate but still costs energy.

# %%
r = rate(par, sinr(G, sol.p, par.sigma2))
print("powers (W):", sol.p)
print("rates (kbit/s):", np.round(r / 1e3, 3))
print("total power (W) incl. circuit:", sol.p.sum() + par.p_circuit)

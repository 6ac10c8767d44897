# %% [markdown]
# # Checking the solver against brute force
#
# With two users the whole power box can be enumerated on a fine log grid.
# The nested solver should land on the same energy efficiency.

# %%
import numpy as np

from mimo_ee import SystemParams, draw_channels, gain_matrix, mrt_beamformers
from mimo_ee.oracle import GridSpec, grid_search_ee
from mimo_ee.solver import dinkelbach_solve

par = SystemParams(M=4, K=2, r_min=0.0)
for seed in range(5):
    ch = draw_channels(par, np.random.default_rng(seed))
    G = gain_matrix(ch.g, mrt_beamformers(ch.g))
    p_grid, eta_grid = grid_search_ee(par, G, GridSpec(n=1000))
    sol = dinkelbach_solve(par, G)
    print(f"seed {seed}: grid {eta_grid:9.3f} at p={np.array2string(p_grid, precision=3)}  "
          f"solver {sol.eta:9.3f} at p={np.array2string(sol.p, precision=3)}")

# %% [markdown]
# Where one user's power sits at the floor the grid agrees: switching the
# weaker user off is worth more than the rate it would add.

"""Energy-efficient downlink power allocation for massive MIMO cells."""
from .params import SystemParams
from .sysmodel import (ChannelSet, draw_channels, draw_large_scale, draw_fast_fading,
                       mrt_beamformers, gain_matrix, interference, sinr, rate,
                       snr_gap, power_consumption, energy_efficiency)
from .solver import (Network, Solution, SolverTrace, SolverError, InfeasibleError,
                     ScaCoefficients, DualMultipliers, sca_update, power_update,
                     subgradient_step, inner_solve, sca_loop, solve_network,
                     dinkelbach_solve, interference_feedback)

__version__ = "0.1.0"

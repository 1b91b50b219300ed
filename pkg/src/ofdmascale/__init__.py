"""Sum-rate bounds, extreme-value scaling and power optimisation for large OFDMA networks."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .fading import LogNormal, Nakagami, Rayleigh, Weibull, FadingModel
from .geometry import (LayoutKind, NetworkLayout, UserSet, build_dense_layout,
                       build_hex_layout, sample_users_disc, sample_users_per_cell)
from .snr_model import (ChannelParams, SnrTensor, compute_snr_tensor, concentration_band,
                        gain_cdf, numeric_scaling_point, rayleigh_snr_cdf, scaling_point)
from .bounds import (BoundsResult, brute_force_c_star, dense_bracket, extended_bracket,
                     max_statistic_sandwich, mc_bounds, scaling_table)
from .op_solver import (OpInstance, OpSolution, PowerAllocation, fixed_power_x, lbar,
                        op_objective, op_ratio_check, solve_op, solve_x, theorem3_bracket)
from .scheduler import Assignment, achieved_sum_rate, p2p_scaling, schedule_users
from .design import (principle1_required_resources, principle2_feasible,
                     principle3_feasible_range, principle3_kkt_rho, principle4_rho_star,
                     principle4_threshold)
from .miso import BeamSet, miso_sinr, random_orthonormal_beams, solve_op_miso

"""Online control of locally controllable systems by nested regret minimization.

An outer online learner picks target states; an inner solver finds the action
that reaches each target in one round.
"""
from ._kernels import BACKEND
from .audit import audit_regret, best_fixed_state
from .controllers import (ControllerConfig, TrajectoryLog, linear_policy_run, nested_bco_run,
                          oen_ftrl_ap_run, oen_ftrl_run, oen_ftrl_uap_run, probing_oco_run,
                          state_targeting_run)
from .dynamics import DynamicsModel, solve_action
from .geometry import Ball, Box, Simplex, SmoothedSimplex, contract, project

__version__ = "0.1.0"

"""Vanishing viscosity experiments for phi_t + |grad phi|^2 / 2 = f + (eps/2) Lap phi."""

from .cole_hopf import (QuadSpec, ViscousSolution, viscous_field, viscous_gradient_point,
                        viscous_gradients, viscous_solve_grid, viscous_value_point,
                        viscous_values)
from .config import ConfigError, RunConfig, parse_config, serialize_config
from .fields import FnSpec, Grid, GridMismatchError, ProblemSpec, ScalarField, sample_function
from .hopf_lax import (InviscidSolution, hopf_lax_solve, lax_oleinik_time_march,
                       quadratic_inf_convolution)
from .mc import McConfig, McResult, entropy_bound_check, knn_entropy, simulate_feedback_sde
from .radial import RadialCase, expansion_value, limit_value, radial_viscous_value
from .rates import RateFit, RateTable, check_paper_bounds, fit_rate_model, sweep_epsilon
from .supconv import SupConvReport, sup_convolution, supconv_report

__version__ = "0.1.0"

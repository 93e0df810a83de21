"""Spectra of weighted composition operators f -> m(z) f(beta z) on the disc."""

__version__ = "0.1.0"

from .classifier import (ClassifierConfig, GridSpec, SpectralVerdict, classify, condition_31,
                         portrait, prepare, structural_test_periodic)
from .conjugation import EllipticAutomorphism, fixed_point, reduce
from .jensen import count_zeros, jensen_profile, m_one, m_r_quadrature, m_r_zeros, m_star
from .operator import (OperatorHandle, apply, apply_power, iterated_weight, spectral_radius_banach,
                       sup_circle)
from .resolvent import (eigen_periodic, eigenfunction, rotate_resolvent, solve, solve_many,
                        spectral_projection)
from .rotation import (Rotation, beta_power, check_g_condition, continued_fraction,
                       resolvent_growth)
from .series import (TruncatedSeries, add, compose_mobius, compose_rotation, eval_circle,
                     evaluate, exp_series, log_series, mul, radius_estimate, shift_down, shift_up)
from .weights import Weight

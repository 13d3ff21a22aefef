"""Geometry, kernels and maximal operators of the Grushin operator on R^n x R."""
from .errors import (
    BranchCutViolation, ConfigError, DegenerateEnvelope, DimensionMismatch, DomainError, EmptyBall,
    GrushinError, NoConvergence, NonpositiveScale, NoSignChange, OutOfRange, SingularPoint,
    ToleranceNotMet, ZeroMass,
)
from .geometry import Point, PairInvariants, d_K, dilate, pair_invariants
from .kernels import (
    KernelConfig, green_function, heat_kernel, poisson_asymptotic, poisson_kernel,
    poisson_kernel_shifted, poisson_time_average,
)
from .maximal_ops import GridFunction, RadiiSet, composition_check, hds_comparison, maximal, phi_kernel, weak_type_ratio
from .mu import d_CC, mu, mu_inverse, mu_prime
from .numerics import EstimateWithError, QuadratureSpec, RootSpec, find_root_monotone, integrate_1d
from .volumes import BallSpec, Metric, volume_BCC_exact, volume_BK_exact, volume_monte_carlo

__version__ = "0.1.0"

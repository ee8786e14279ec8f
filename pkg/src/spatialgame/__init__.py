"""Closed-form equilibria of a transboundary pollution game on the circle."""

from .cyclic import CyclicOperator, CyclicTridiagonal, SingularSystemError
from .domain import (Arc, CircleGrid, DomainError, EnvironmentSpec, Partition, PlayerSpec,
                     TWO_PI, as_field, build_grid, extend_hat, piecewise_field)
from .dynamics import (ConvergenceReport, CrankNicolson, PollutionState, SteadyStateError,
                       Trajectory, assemble_forward, convergence_report, simulate,
                       steady_state, step)
from .elliptic import (AlphaBoundError, AlphaProfile, alpha_limit_infinite_sigma,
                       alpha_limit_zero_sigma, alpha_profile, alpha_series,
                       alpha_series_advection, alpha_series_no_advection,
                       alpha_upper_bound, assemble_adjoint, solve_resolvent)
from .equilibrium import (AdmissibilityError, EquilibriumProfile, FragmentationReport,
                          PlayerStrategy, WelfareReport, cooperative_equilibrium,
                          depollution, derived_profiles, fragmentation_order_check,
                          investment, nash_equilibrium, nash_strategies,
                          sigma_limit_benchmark, welfare, zero_diffusion_benchmark)

__version__ = "0.1.0"

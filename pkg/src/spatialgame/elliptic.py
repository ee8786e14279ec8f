"""Shadow disutility profiles alpha_j.

Each alpha_j solves the periodic resolvent equation

    rho_j a - sigma a'' + v a' + (v' + delta) a = w_hat_j      on the circle,

i.e. ``(rho_j - Lstar) a = w_hat_j`` with ``Lstar psi = sigma psi'' - v psi'
- (v' + delta) psi``. The finite-difference route is the production path;
the Fourier series below are closed forms for constant coefficients and
serve as independent cross-checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cyclic import CyclicOperator, SingularSystemError
from .domain import CircleGrid, EnvironmentSpec, PlayerSpec, TWO_PI, extend_hat

__all__ = [
    "AlphaBoundError",
    "AlphaProfile",
    "DiscreteAdjointOperator",
    "alpha_limit_infinite_sigma",
    "alpha_limit_zero_sigma",
    "alpha_profile",
    "alpha_series",
    "alpha_series_advection",
    "alpha_series_no_advection",
    "alpha_upper_bound",
    "assemble_adjoint",
    "solve_resolvent",
]

DiscreteAdjointOperator = CyclicOperator


class AlphaBoundError(ArithmeticError):
    """The computed alpha left its a priori bounds (upstream numerical failure)."""


def assemble_adjoint(env: EnvironmentSpec, grid: CircleGrid | None = None) -> CyclicOperator:
    """Centered second-order discretization of ``Lstar``.

    The derivative of the advection field is taken by centered differences of
    the sampled ``v``.
    """
    grid = grid or env.grid
    if env.v.shape[0] != grid.n_points:
        raise ValueError("environment fields do not match the grid")
    h = grid.dx
    diff = env.sigma / h**2
    adv = env.v / (2.0 * h)
    lower = diff + adv
    upper = diff - adv
    diag = -2.0 * diff - (env.v_prime + env.delta)
    return CyclicOperator(lower, diag, upper, kind="adjoint")


def solve_resolvent(op: CyclicOperator, rho: float, rhs) -> tuple[np.ndarray, float]:
    """Solve ``(rho I - op) a = rhs`` directly.

    Returns the solution and the sup-norm residual of the discrete system.
    """
    rhs = np.asarray(rhs, dtype=float)
    try:
        system = op.shifted(rho)
    except SingularSystemError as exc:
        raise SingularSystemError(
            f"resolvent at rho={rho} is singular or ill-conditioned: {exc}", rcond=exc.rcond
        ) from exc
    a = system.solve(rhs)
    residual = float(np.max(np.abs(system.matvec(a) - rhs))) if rhs.size else 0.0
    return a, residual


@dataclass(frozen=True)
class AlphaProfile:
    player: int
    values: np.ndarray
    method: str
    residual: float

    @property
    def min(self) -> float:
        return float(self.values.min())

    @property
    def max(self) -> float:
        return float(self.values.max())


def alpha_upper_bound(player: PlayerSpec) -> float:
    """max of w over the closed arc divided by rho."""
    grid = player.grid
    return float(player.w[player.arc.support_mask(grid)].max() / player.rho)


def alpha_profile(player: PlayerSpec, env: EnvironmentSpec, partition=None,
                  grid: CircleGrid | None = None, *, op: CyclicOperator | None = None,
                  bound_tol: float = 1e-8) -> AlphaProfile:
    """Finite-difference alpha for one player, with bound checks.

    ``partition`` is accepted for symmetry with the other pipeline calls; the
    player's own arc is all the solve needs.
    """
    grid = grid or player.grid
    player.check_discount(env)
    w_hat = extend_hat(player.w, player.arc, grid, weighting="cell")
    if op is None:
        op = assemble_adjoint(env, grid)
    values, residual = solve_resolvent(op, player.rho, w_hat)
    values.setflags(write=False)
    upper = alpha_upper_bound(player)
    if not values.min() > 0.0:
        raise AlphaBoundError(
            f"alpha_{player.label} is not strictly positive (min {values.min():.3e})")
    if values.max() > upper * (1.0 + bound_tol):
        raise AlphaBoundError(
            f"alpha_{player.label} exceeds max(w)/rho = {upper:.6g} (max {values.max():.6g})")
    return AlphaProfile(player.index, values, "finite-difference", residual)


def _points(grid_or_x) -> np.ndarray:
    if isinstance(grid_or_x, CircleGrid):
        return grid_or_x.nodes
    return np.asarray(grid_or_x, dtype=float)


def alpha_series_advection(ell, w0, rho, delta0, sigma, v0, n_terms, grid, start=0.0):
    """Truncated Fourier series of alpha for constant coefficients.

    Disutility ``w0`` on the arc [start, start + ell), constant advection ``v0``.
    Mode ``n`` couples the sine and cosine coefficients (a_n, b_n):

        c a_n - v0 n b_n = W1_n,     c b_n + v0 n a_n = W2_n,     c = rho + delta0 + sigma n^2

    where W1_n, W2_n are the sine/cosine coefficients of w_hat.
    """
    x = _points(grid) - start
    base = ell * w0 / (TWO_PI * (rho + delta0))
    n = np.arange(1, int(n_terms) + 1, dtype=float)[:, None]
    c = rho + delta0 + sigma * n**2
    w1 = w0 * (1.0 - np.cos(n * ell)) / n
    w2 = w0 * np.sin(n * ell) / n
    vn = v0 * n
    det = c**2 + vn**2
    a = (c * w1 + vn * w2) / det
    b = (c * w2 - vn * w1) / det
    terms = a * np.sin(n * x) + b * np.cos(n * x)
    return base + terms.sum(axis=0) / np.pi


def alpha_series_no_advection(ell, w0, rho, delta0, sigma, n_terms, grid, start=0.0):
    """Truncated Fourier series of alpha without advection.

    alpha(x) = ell w0 / (2 pi (rho + delta0))
               + (w0 / pi) sum_n [sin(nx)(1 - cos(n ell)) + sin(n ell) cos(nx)] / (n (rho + delta0 + sigma n^2))
    """
    x = _points(grid) - start
    n = np.arange(1, int(n_terms) + 1, dtype=float)[:, None]
    num = np.sin(n * x) * (1.0 - np.cos(n * ell)) + np.sin(n * ell) * np.cos(n * x)
    den = n * (rho + delta0 + sigma * n**2)
    return ell * w0 / (TWO_PI * (rho + delta0)) + (w0 / np.pi) * (num / den).sum(axis=0)


def _constant(values, name):
    values = np.asarray(values, dtype=float)
    if np.ptp(values) > 1e-12 * max(1.0, np.abs(values).max()):
        raise ValueError(f"{name} is not constant; the series needs constant coefficients")
    return float(values[0])


def alpha_series(player: PlayerSpec, env: EnvironmentSpec, n_terms: int = 64,
                 grid: CircleGrid | None = None) -> np.ndarray:
    """Series alpha for a player in a constant-coefficient environment."""
    grid = grid or player.grid
    support = player.arc.support_mask(grid)
    w0 = _constant(player.w[support], "w")
    delta0 = _constant(env.delta, "delta")
    v0 = _constant(env.v, "v")
    return alpha_series_advection(player.arc.length, w0, player.rho, delta0, env.sigma,
                                  v0, n_terms, grid, start=player.arc.start)


def alpha_limit_zero_sigma(player: PlayerSpec, env: EnvironmentSpec,
                           grid: CircleGrid | None = None) -> np.ndarray:
    """Pointwise limit w_hat / (rho + delta) as diffusion vanishes (no advection)."""
    grid = grid or player.grid
    if env.has_advection:
        raise ValueError("the small-diffusion limit is only available without advection")
    w_hat = extend_hat(player.w, player.arc, grid)
    return w_hat / (player.rho + env.delta)


def alpha_limit_infinite_sigma(player: PlayerSpec, env: EnvironmentSpec,
                               grid: CircleGrid | None = None) -> float:
    """Constant limit  int w_hat / int (rho + delta)  as diffusion grows (no advection)."""
    grid = grid or player.grid
    if env.has_advection:
        raise ValueError("the large-diffusion limit is only available without advection")
    w_hat = extend_hat(player.w, player.arc, grid, weighting="cell")
    return grid.integrate(w_hat) / grid.integrate(player.rho + env.delta)

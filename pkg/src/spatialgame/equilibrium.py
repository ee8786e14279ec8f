"""Closed-form equilibria of the pollution game and their benchmarks.

All strategies are stationary and pointwise in space. For a shadow
disutility ``alpha`` and productivity ``A``:

    b = ((A - 1) eta theta)^(1/(1-theta))
    i = alpha^(-1/gamma) (A - 1)^((1-gamma)/gamma) + (eta theta)^(1/(1-theta)) (A - 1)^(theta/(1-theta))

and then n = i - eta b^theta, y = A i, c = y - i - b.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .domain import CircleGrid, DomainError, EnvironmentSpec, Partition, PlayerSpec
from .dynamics import simulate, steady_state
from .elliptic import (AlphaProfile, alpha_profile, assemble_adjoint, solve_resolvent)

__all__ = [
    "AdmissibilityError",
    "EquilibriumProfile",
    "FragmentationReport",
    "PlayerStrategy",
    "SharedPreferences",
    "WelfareReport",
    "cooperative_equilibrium",
    "depollution",
    "derived_profiles",
    "fragmentation_order_check",
    "investment",
    "nash_equilibrium",
    "nash_strategies",
    "sigma_limit_benchmark",
    "utility",
    "welfare",
    "zero_diffusion_benchmark",
]

REGIMES = ("nash", "cooperative", "zero_diffusion", "sigma_limit")


class AdmissibilityError(ArithmeticError):
    """Negative consumption, investment or abatement in a computed profile."""


def depollution(A, eta, theta):
    return ((np.asarray(A, dtype=float) - 1.0) * eta * theta) ** (1.0 / (1.0 - theta))


def investment(alpha, A, gamma, eta, theta):
    am1 = np.asarray(A, dtype=float) - 1.0
    own = np.asarray(alpha, dtype=float) ** (-1.0 / gamma) * am1 ** ((1.0 - gamma) / gamma)
    return own + (eta * theta) ** (1.0 / (1.0 - theta)) * am1 ** (theta / (1.0 - theta))


def utility(c, gamma):
    return np.asarray(c, dtype=float) ** (1.0 - gamma) / (1.0 - gamma)


@dataclass(frozen=True)
class PlayerStrategy:
    """One player's stationary strategy on the grid-level closure of its arc.

    ``weights`` is the covered fraction of each node's dual cell; fields are
    zero where the weight is zero.
    """

    player: int
    weights: np.ndarray
    alpha: np.ndarray
    i: np.ndarray
    b: np.ndarray
    n: np.ndarray
    y: np.ndarray
    c: np.ndarray

    @property
    def support(self) -> np.ndarray:
        return self.weights > 0


def nash_strategies(alpha, player: PlayerSpec, env: EnvironmentSpec,
                    grid: CircleGrid | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Investment and depollution of ``player`` given its alpha; zero off its arc."""
    grid = grid or player.grid
    values = alpha.values if isinstance(alpha, AlphaProfile) else np.asarray(alpha, dtype=float)
    support = player.arc.support_mask(grid)
    a = values[support]
    if not np.all(a > 0):
        raise AdmissibilityError(f"alpha_{player.label} is not positive on its arc")
    i = np.zeros(grid.n_points)
    b = np.zeros(grid.n_points)
    A = player.A[support]
    i[support] = investment(a, A, player.gamma, env.eta, env.theta)
    b[support] = depollution(A, env.eta, env.theta)
    return i, b


def derived_profiles(i, b, player: PlayerSpec, env: EnvironmentSpec,
                     tol: float = 1e-12) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Net emissions, production and consumption from (i, b)."""
    i = np.asarray(i, dtype=float)
    b = np.asarray(b, dtype=float)
    n = i - env.eta * b**env.theta
    y = player.A * i
    c = y - i - b
    if np.any(i < 0) or np.any(b < 0):
        raise AdmissibilityError(f"player {player.label}: negative investment or depollution")
    if np.any(c < -tol * np.maximum(y, 1.0)):
        raise AdmissibilityError(
            f"player {player.label}: negative consumption (min {c.min():.3e})")
    return n, y, np.maximum(c, 0.0)


def _player_strategy(alpha, player, env, grid) -> PlayerStrategy:
    i, b = nash_strategies(alpha, player, env, grid)
    n, y, c = derived_profiles(i, b, player, env)
    weights = player.arc.cell_fraction(grid)
    out = []
    for arr in (alpha, i, b, n, y, c):
        arr = np.array(arr, dtype=float)
        arr.setflags(write=False)
        out.append(arr)
    return PlayerStrategy(player.index, weights, *out)


@dataclass(frozen=True)
class EquilibriumProfile:
    """Spatial equilibrium fields, each node taken from the player owning it.

    Nodes on M_0 are zero. ``players`` keeps the per-player strategies on the
    closed arcs, which the welfare integrals use.
    """

    regime: str
    grid: CircleGrid
    owner: np.ndarray
    players: tuple
    i: np.ndarray
    b: np.ndarray
    n: np.ndarray
    y: np.ndarray
    c: np.ndarray
    alpha: np.ndarray  # owner's alpha (nash) or the planner's alpha (cooperative)

    @property
    def n_players(self) -> int:
        return len(self.players)


def _assemble(regime, strategies, grid, owner, alpha_field=None) -> EquilibriumProfile:
    fields = {}
    for name in ("i", "b", "n", "y", "c", "alpha"):
        out = np.zeros(grid.n_points)
        for s in strategies:
            mask = owner == s.player
            out[mask] = getattr(s, name)[mask]
        if name == "alpha" and alpha_field is not None:
            out = np.array(alpha_field, dtype=float)
        out.setflags(write=False)
        fields[name] = out
    return EquilibriumProfile(regime, grid, owner, tuple(strategies), **fields)


def _owner(players: Sequence[PlayerSpec], grid):
    return Partition(tuple(p.arc for p in players)).owner(grid)


def _indexed(players):
    players = [players] if isinstance(players, PlayerSpec) else list(players)
    return [p if p.index == j else replace(p, index=j) for j, p in enumerate(players)]


def nash_equilibrium(players: Sequence[PlayerSpec], env: EnvironmentSpec,
                     grid: CircleGrid | None = None) -> EquilibriumProfile:
    """Solve every player's alpha and assemble the open-loop Nash profile."""
    players = _indexed(players)
    grid = grid or players[0].grid
    op = assemble_adjoint(env, grid)
    strategies = [
        _player_strategy(alpha_profile(p, env, grid=grid, op=op).values, p, env, grid)
        for p in players
    ]
    return _assemble("nash", strategies, grid, _owner(players, grid))


@dataclass(frozen=True)
class SharedPreferences:
    """Common preferences, needed by the planner problem."""

    rho: float
    gamma: float


def _shared_preferences(players) -> SharedPreferences:
    rhos = {p.rho for p in players}
    gammas = {p.gamma for p in players}
    if len(rhos) > 1 or len(gammas) > 1:
        raise DomainError(
            "unsupported configuration: the cooperative benchmark needs the same rho "
            f"and gamma for every player (got rho {sorted(rhos)}, gamma {sorted(gammas)})")
    return SharedPreferences(rhos.pop(), gammas.pop())


def cooperative_equilibrium(players: Sequence[PlayerSpec], env: EnvironmentSpec,
                            grid: CircleGrid | None = None) -> EquilibriumProfile:
    """Planner solution: one alpha driven by the summed disutility of all players.

    Advection, when present, enters through the full adjoint operator.
    """
    players = _indexed(players)
    grid = grid or players[0].grid
    prefs = _shared_preferences(players)
    for p in players:
        p.check_discount(env)
    w_total = sum(p.w * p.arc.cell_fraction(grid) for p in players)
    alpha_bar, _ = solve_resolvent(assemble_adjoint(env, grid), prefs.rho, w_total)
    if not np.all(alpha_bar > 0):
        raise AdmissibilityError("planner alpha is not strictly positive")
    strategies = [_player_strategy(alpha_bar, p, env, grid) for p in players]
    return _assemble("cooperative", strategies, grid, _owner(players, grid), alpha_bar)


def zero_diffusion_benchmark(players, env: EnvironmentSpec,
                             grid: CircleGrid | None = None) -> EquilibriumProfile:
    """No-diffusion strategies: alpha_j = w_j / (rho_j + delta) pointwise."""
    players = _indexed(players)
    grid = grid or players[0].grid
    strategies = []
    for p in players:
        alpha0 = np.where(p.arc.support_mask(grid), p.w / (p.rho + env.delta), 0.0)
        strategies.append(_player_strategy(alpha0, p, env, grid))
    return _assemble("zero_diffusion", strategies, grid, _owner(players, grid))


def sigma_limit_benchmark(players, env: EnvironmentSpec,
                          grid: CircleGrid | None = None) -> EquilibriumProfile:
    """Strategies at the infinite-diffusion limit of alpha (no advection)."""
    from .elliptic import alpha_limit_infinite_sigma

    players = _indexed(players)
    grid = grid or players[0].grid
    strategies = []
    for p in players:
        a_inf = alpha_limit_infinite_sigma(p, env, grid)
        strategies.append(_player_strategy(np.full(grid.n_points, a_inf), p, env, grid))
    return _assemble("sigma_limit", strategies, grid, _owner(players, grid))


@dataclass(frozen=True)
class WelfareReport:
    """Per-player welfare v_j(p0) = -int alpha_j p0 + q_j."""

    q: np.ndarray
    alpha_inner: np.ndarray
    value: np.ndarray
    labels: tuple = ()


def welfare(profile: EquilibriumProfile, p0, players: Sequence[PlayerSpec],
            env: EnvironmentSpec) -> WelfareReport:
    """Equilibrium welfare of every player (or of the planner for cooperative).

    Arc integrals weight each node by the covered fraction of its cell.
    """
    players = _indexed(players)
    grid = profile.grid
    p0 = np.asarray(p0, dtype=float)
    strategies = profile.players
    if profile.regime == "cooperative":
        prefs = _shared_preferences(players)
        alpha_bar = profile.alpha
        total = 0.0
        for s in strategies:
            integrand = utility(s.c, prefs.gamma) - alpha_bar * s.n
            total += grid.integrate(np.where(s.support, integrand, 0.0), s.weights)
        q = np.array([total / prefs.rho])
        inner = np.array([grid.integrate(alpha_bar * p0)])
        return WelfareReport(q, inner, q - inner, ("planner",))

    q = np.empty(len(players))
    inner = np.empty(len(players))
    for j, (p, s) in enumerate(zip(players, strategies)):
        own = grid.integrate(np.where(s.support, utility(s.c, p.gamma), 0.0), s.weights)
        emitted = sum(grid.integrate(s.alpha * t.n, t.weights) for t in strategies)
        q[j] = (own - emitted) / p.rho
        inner[j] = grid.integrate(s.alpha * p0)
    return WelfareReport(q, inner, q - inner, tuple(p.label for p in players))


@dataclass(frozen=True)
class FragmentationReport:
    times: np.ndarray
    min_gap: np.ndarray  # min over x of p_fine - p_coarse at each stored time
    steady_gap: float  # min over x of the steady-state difference
    total_fine: float  # int p_inf over the circle, fine configuration
    total_coarse: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(self.min_gap.min() >= -self.tol and self.steady_gap >= -self.tol)


def _is_constant(values) -> bool:
    values = np.asarray(values, dtype=float)
    return bool(np.ptp(values) <= 1e-12 * max(1.0, float(np.abs(values).max())))


def fragmentation_order_check(fine: Partition, coarse: Partition, *, rho: float, gamma: float,
                              w: float, A: float, env: EnvironmentSpec, p0=None,
                              grid: CircleGrid | None = None, T: float = 60.0, dt: float = 0.01,
                              n_samples: int = 61, tol: float = 1e-10) -> FragmentationReport:
    """Compare equilibrium pollution under a partition and a coarsening of it.

    Both configurations share every parameter; all coefficients must be
    homogeneous in space.
    """
    grid = grid or env.grid
    if not fine.refines(coarse):
        raise DomainError("the fine configuration is not a fragmentation of the coarse one")
    if not (_is_constant(env.delta) and _is_constant(env.v)):
        raise DomainError("fragmentation check needs space-homogeneous delta and v")
    if p0 is None:
        p0 = np.zeros(grid.n_points)
    ones = np.ones(grid.n_points)

    def run(partition):
        players = [PlayerSpec(arc, rho, gamma, w * ones, A * ones, index=j)
                   for j, arc in enumerate(partition.arcs)]
        profile = nash_equilibrium(players, env, grid)
        p_inf, _ = steady_state(profile.n, env, grid)
        traj = simulate(p0, profile.n, env, grid, T=T, dt=dt, n_samples=n_samples, p_inf=p_inf)
        return traj, p_inf

    traj_f, pinf_f = run(fine)
    traj_c, pinf_c = run(coarse)
    gaps = np.min(traj_f.states - traj_c.states, axis=1)
    return FragmentationReport(traj_f.times, gaps, float(np.min(pinf_f - pinf_c)),
                               grid.integrate(pinf_f), grid.integrate(pinf_c), tol)

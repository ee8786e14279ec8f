"""Pollution stock dynamics on the circle.

    p_t = sigma p_xx + v p_x - delta p + n(x)

Time stepping is Crank-Nicolson on the centered second-order discretization
of the forward operator ``L = sigma d^2 + v d - delta`` (no v' term; that
term belongs to the adjoint only).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cyclic import CyclicOperator
from .domain import CircleGrid, EnvironmentSpec

__all__ = [
    "ConvergenceReport",
    "CrankNicolson",
    "PollutionState",
    "SteadyStateError",
    "Trajectory",
    "assemble_forward",
    "convergence_report",
    "simulate",
    "steady_state",
    "step",
]


class SteadyStateError(ValueError):
    """The environment admits no (unique, attracting) steady state."""


def assemble_forward(env: EnvironmentSpec, grid: CircleGrid | None = None) -> CyclicOperator:
    grid = grid or env.grid
    if env.v.shape[0] != grid.n_points:
        raise ValueError("environment fields do not match the grid")
    h = grid.dx
    diff = env.sigma / h**2
    adv = env.v / (2.0 * h)
    return CyclicOperator(diff - adv, -2.0 * diff - env.delta, diff + adv, kind="forward")


@dataclass(frozen=True)
class PollutionState:
    t: float
    p: np.ndarray


class CrankNicolson:
    """Reusable stepper: one factored cyclic solve per step."""

    def __init__(self, op: CyclicOperator, dt: float):
        if not dt > 0:
            raise ValueError(f"dt must be > 0, got {dt}")
        self.op = op
        self.dt = float(dt)
        self._implicit = op.shifted(1.0, 0.5 * self.dt)

    def __call__(self, p, source):
        rhs = p + 0.5 * self.dt * self.op.apply(p) + self.dt * source
        return self._implicit.solve(rhs)


def step(state: PollutionState, n_star, env: EnvironmentSpec, grid: CircleGrid | None = None,
         dt: float = 0.01) -> PollutionState:
    """Advance one Crank-Nicolson step of length ``dt``."""
    stepper = CrankNicolson(assemble_forward(env, grid), dt)
    p = stepper(np.asarray(state.p, dtype=float), np.asarray(n_star, dtype=float))
    return PollutionState(state.t + dt, p)


def steady_state(n_star, env: EnvironmentSpec, grid: CircleGrid | None = None,
                 op: CyclicOperator | None = None) -> tuple[np.ndarray, float]:
    """Solve ``L p + n = 0``; returns the profile and the sup-norm residual.

    Requires v'/2 + delta to be bounded below by a positive constant, which
    makes the long-run state unique and globally attracting.
    """
    floor = env.decay_floor
    if not floor > 0.0:
        raise SteadyStateError(
            f"no attracting steady state: needs min(v'/2 + delta) > 0, got {floor:.6g}")
    op = op or assemble_forward(env, grid)
    n_star = np.asarray(n_star, dtype=float)
    system = op.shifted(0.0)
    p = system.solve(n_star)
    residual = float(np.max(np.abs(op.apply(p) + n_star)))
    return p, residual


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (n_samples, n_points)
    mass: np.ndarray
    gap: np.ndarray | None  # sup |p(t) - p_inf|, None without a steady state
    p_inf: np.ndarray | None
    dt: float

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def simulate(p0, n_star, env: EnvironmentSpec, grid: CircleGrid | None = None, T: float = 60.0,
             dt: float = 0.01, n_samples: int = 61, p_inf=None) -> Trajectory:
    """Integrate from ``p0`` to time ``T`` and keep ``n_samples`` snapshots.

    The step is shrunk slightly if needed so that ``T`` is an exact multiple.
    When the environment has a steady state it is computed (unless given) and
    the sup-distance to it is recorded at every sample.
    """
    if not T > 0:
        raise ValueError(f"T must be > 0, got {T}")
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    grid = grid or env.grid
    op = assemble_forward(env, grid)
    n_steps = max(int(np.ceil(T / dt - 1e-9)), 1)
    dt_eff = T / n_steps
    n_samples = max(int(n_samples), 2)
    sample_steps = np.unique(np.round(np.linspace(0, n_steps, n_samples)).astype(int))

    if p_inf is None and env.decay_floor > 0.0:
        p_inf, _ = steady_state(n_star, env, grid, op=op)

    stepper = CrankNicolson(op, dt_eff)
    source = np.asarray(n_star, dtype=float)
    p = np.array(p0, dtype=float)
    states = np.empty((sample_steps.size, grid.n_points))
    states[0] = p
    k = 1
    for s in range(1, n_steps + 1):
        p = stepper(p, source)
        if k < sample_steps.size and s == sample_steps[k]:
            states[k] = p
            k += 1
    times = sample_steps * dt_eff
    mass = states.sum(axis=1) * grid.dx
    gap = None if p_inf is None else np.max(np.abs(states - p_inf), axis=1)
    return Trajectory(times, states, mass, gap, p_inf, dt_eff)


@dataclass(frozen=True)
class ConvergenceReport:
    rate: float | None  # fitted exponential decay rate of the gap
    final_gap: float
    passed: bool
    tol: float


def convergence_report(traj: Trajectory, p_inf=None, tol: float = 1e-4,
                       floor: float = 1e-11) -> ConvergenceReport:
    """Fit ``log gap ~ -rate * t`` over samples with gap above ``floor``."""
    if p_inf is None:
        p_inf = traj.p_inf
    if p_inf is None:
        raise ValueError("convergence_report needs a steady state")
    gap = np.max(np.abs(traj.states - p_inf), axis=1)
    scale = max(float(np.max(np.abs(p_inf))), 1.0)
    keep = gap > floor * scale
    rate = None
    if keep.sum() >= 3:
        slope, _ = np.polyfit(traj.times[keep], np.log(gap[keep]), 1)
        rate = float(-slope)
    final = float(gap[-1])
    return ConvergenceReport(rate, final, final <= tol, tol)

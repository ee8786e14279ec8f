"""Circle grid, territories and spatial parameter fields.

Fields are plain float arrays sampled at the grid nodes ``x_k = k * dx``.
Node ``n - 1`` neighbours node ``0``; there is no duplicated endpoint.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

TWO_PI = 2.0 * np.pi

# tolerance (in units of dx) for deciding that a node sits on an arc endpoint
_SNAP = 1e-9

Value = Union[float, Callable[[np.ndarray], np.ndarray]]


class DomainError(ValueError):
    """Invalid grid, arc, partition or field."""


@dataclass(frozen=True)
class CircleGrid:
    """Uniform periodic grid on [0, 2*pi)."""

    n_points: int

    def __post_init__(self):
        n = self.n_points
        if isinstance(n, bool) or not isinstance(n, (int, np.integer)):
            raise DomainError(f"n_points must be an integer, got {n!r}")
        if n < 8:
            raise DomainError(f"n_points must be >= 8, got {n}")
        if n % 2:
            raise DomainError(f"n_points must be even, got {n}")

    @property
    def dx(self) -> float:
        return TWO_PI / self.n_points

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n_points) * self.dx

    def wrap(self, k):
        """Periodic node index."""
        return np.mod(k, self.n_points)

    def integrate(self, values, weights=None) -> float:
        """Periodic trapezoid rule, optionally with per-node weights."""
        values = np.asarray(values, dtype=float)
        if weights is not None:
            values = values * weights
        return float(self.dx * values.sum())

    def derivative(self, values) -> np.ndarray:
        """Centered first difference with periodic wrap."""
        values = np.asarray(values, dtype=float)
        return (np.roll(values, -1) - np.roll(values, 1)) / (2.0 * self.dx)


def build_grid(n_points: int) -> CircleGrid:
    return CircleGrid(int(n_points) if isinstance(n_points, (int, np.integer)) else n_points)


@dataclass(frozen=True)
class Arc:
    """Half-open arc [start, stop) of the circle, measured counterclockwise.

    ``start`` is reduced to [0, 2*pi); ``stop`` may exceed 2*pi for arcs that
    wrap through the origin. The full circle is ``Arc(0, 2*pi)``.
    """

    start: float
    stop: float

    def __post_init__(self):
        start, stop = float(self.start), float(self.stop)
        if not (np.isfinite(start) and np.isfinite(stop)):
            raise DomainError(f"arc endpoints must be finite, got [{start}, {stop})")
        length = stop - start
        if not 0.0 < length <= TWO_PI + 1e-12:
            raise DomainError(f"arc [{start}, {stop}) must have length in (0, 2*pi]")
        shift = np.floor(start / TWO_PI) * TWO_PI
        object.__setattr__(self, "start", start - shift)
        object.__setattr__(self, "stop", min(stop - shift, start - shift + TWO_PI))

    @property
    def length(self) -> float:
        return self.stop - self.start

    @property
    def center(self) -> float:
        return float(np.mod(0.5 * (self.start + self.stop), TWO_PI))

    @property
    def is_full_circle(self) -> bool:
        return self.length >= TWO_PI - 1e-12

    def offset(self, x):
        """Counterclockwise distance from ``start`` to ``x``, in [0, 2*pi)."""
        return np.mod(np.asarray(x, dtype=float) - self.start, TWO_PI)

    def node_mask(self, grid: CircleGrid) -> np.ndarray:
        """Nodes in the arc; a node on ``start`` belongs, one on ``stop`` does not."""
        if self.is_full_circle:
            return np.ones(grid.n_points, dtype=bool)
        tol = _SNAP * grid.dx
        s = self.offset(grid.nodes)
        s = np.where(s > TWO_PI - tol, 0.0, s)
        return s < self.length - tol

    def cell_fraction(self, grid: CircleGrid) -> np.ndarray:
        """Fraction of each dual cell [x_k - dx/2, x_k + dx/2) covered by the arc."""
        if self.is_full_circle:
            return np.ones(grid.n_points)
        h = grid.dx
        lo = self.offset(grid.nodes) - 0.5 * h
        frac = np.zeros(grid.n_points)
        # the cell may straddle the origin of the offset coordinate
        for shift in (-TWO_PI, 0.0, TWO_PI):
            a = np.maximum(lo + shift, 0.0)
            b = np.minimum(lo + shift + h, self.length)
            frac += np.clip(b - a, 0.0, None)
        frac = frac / h
        frac[np.abs(frac - 1.0) < _SNAP] = 1.0
        frac[frac < _SNAP] = 0.0
        frac[np.abs(frac - 0.5) < _SNAP] = 0.5
        return frac

    def support_mask(self, grid: CircleGrid) -> np.ndarray:
        """Nodes whose dual cell meets the arc (the closure at grid level)."""
        return self.cell_fraction(grid) > 0.0

    def overlap(self, other: "Arc") -> float:
        """Length of the intersection of two arcs."""
        total = 0.0
        for shift in (-TWO_PI, 0.0, TWO_PI):
            a = max(self.start, other.start + shift)
            b = min(self.stop, other.stop + shift)
            total += max(b - a, 0.0)
        return total

    def contains_arc(self, other: "Arc", tol: float = 1e-12) -> bool:
        return other.length - self.overlap(other) <= tol

    def mirror_index(self, grid: CircleGrid) -> np.ndarray:
        """Node permutation reflecting the circle about this arc's center.

        Requires the arc endpoints to sit on nodes (or half-nodes for the
        center); the reflection maps the arc onto itself.
        """
        c2 = (self.start + self.stop) / grid.dx
        k2 = int(round(c2))
        if abs(c2 - k2) > 1e-6:
            raise DomainError("arc center is not on a node or half-node of the grid")
        return grid.wrap(k2 - np.arange(grid.n_points))


@dataclass(frozen=True)
class Partition:
    """Disjoint player territories; whatever is left over is uninhabited."""

    arcs: tuple

    def __post_init__(self):
        arcs = tuple(a if isinstance(a, Arc) else Arc(*a) for a in self.arcs)
        object.__setattr__(self, "arcs", arcs)
        if not arcs:
            raise DomainError("a partition needs at least one arc")
        for j in range(len(arcs)):
            for k in range(j + 1, len(arcs)):
                ov = arcs[j].overlap(arcs[k])
                if ov > 1e-12:
                    raise DomainError(
                        f"arcs M_{j + 1} = [{arcs[j].start:.6g}, {arcs[j].stop:.6g}) and "
                        f"M_{k + 1} = [{arcs[k].start:.6g}, {arcs[k].stop:.6g}) overlap "
                        f"(length {ov:.3g})")

    def __len__(self):
        return len(self.arcs)

    @property
    def residual_length(self) -> float:
        """Measure of the uninhabited set M_0."""
        return max(TWO_PI - sum(a.length for a in self.arcs), 0.0)

    def owner(self, grid: CircleGrid) -> np.ndarray:
        """Player index (0-based) owning each node, -1 on M_0."""
        own = np.full(grid.n_points, -1, dtype=int)
        for j, arc in enumerate(self.arcs):
            own[arc.node_mask(grid)] = j
        return own

    def check_resolution(self, grid: CircleGrid) -> None:
        for j, arc in enumerate(self.arcs):
            count = int(arc.node_mask(grid).sum())
            if count < 2:
                raise DomainError(
                    f"arc M_{j + 1} holds {count} grid node(s) at n_points={grid.n_points}; need >= 2")

    def refines(self, coarse: "Partition") -> bool:
        """True when every arc of ``self`` lies inside some arc of ``coarse``."""
        return all(any(c.contains_arc(a) for c in coarse.arcs) for a in self.arcs)


def as_field(values, grid: CircleGrid, *, name: str = "field") -> np.ndarray:
    """Validate shape and finiteness; return a read-only float copy."""
    arr = np.array(values, dtype=float)
    if arr.ndim == 0:
        arr = np.full(grid.n_points, float(arr))
    if arr.shape != (grid.n_points,):
        raise DomainError(f"{name} has shape {arr.shape}, expected ({grid.n_points},)")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite values")
    arr.setflags(write=False)
    return arr


def _sample(value: Value, x: np.ndarray) -> np.ndarray:
    if callable(value):
        out = np.asarray(value(x), dtype=float)
        return np.broadcast_to(out, x.shape).astype(float)
    return np.full(x.shape, float(value))


def piecewise_field(segments: Sequence, default: float, grid: CircleGrid) -> np.ndarray:
    """Sample a field given as constant or callable pieces on disjoint arcs.

    ``segments`` holds ``(arc, value)`` pairs; ``arc`` is an :class:`Arc` or a
    ``(start, stop)`` pair and ``value`` a number or a callable of the node
    coordinates. Nodes outside every arc take ``default``.
    """
    arcs = [a if isinstance(a, Arc) else Arc(*a) for a, _ in segments]
    for j in range(len(arcs)):
        for k in range(j + 1, len(arcs)):
            if arcs[j].overlap(arcs[k]) > 1e-12:
                raise DomainError(f"piecewise segments {j} and {k} overlap")
    x = grid.nodes
    out = np.full(grid.n_points, float(default))
    for arc, (_, value) in zip(arcs, segments):
        mask = arc.node_mask(grid)
        out[mask] = _sample(value, x)[mask]
    return as_field(out, grid)


def extend_hat(w, arc: Arc, grid: CircleGrid, *, weighting: str = "node") -> np.ndarray:
    """Extend a field given on an arc by zero to the whole circle.

    With ``weighting="node"`` the result is ``w`` on the arc's nodes and exactly
    zero elsewhere. ``weighting="cell"`` multiplies ``w`` by the fraction of each
    node's dual cell inside the arc, which is what the elliptic solves use: it
    places the jump of the extension at the true endpoint instead of the
    nearest node and keeps the discrete solution second-order accurate.
    """
    w = as_field(w, grid, name="w")
    if weighting == "node":
        out = np.where(arc.node_mask(grid), w, 0.0)
    elif weighting == "cell":
        out = w * arc.cell_fraction(grid)
    else:
        raise ValueError(f"unknown weighting {weighting!r}")
    return as_field(out, grid, name="w_hat")


@dataclass(frozen=True)
class EnvironmentSpec:
    """Physical and abatement parameters shared by all players."""

    sigma: float
    v: np.ndarray
    delta: np.ndarray
    eta: float
    theta: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError(f"sigma must be > 0, got {self.sigma}")
        if not self.eta >= 0:
            raise DomainError(f"eta must be >= 0, got {self.eta}")
        if not 0.0 < self.theta < 1.0:
            raise DomainError(f"theta must lie in (0, 1), got {self.theta}")
        v = np.array(self.v, dtype=float)
        delta = np.array(self.delta, dtype=float)
        if v.shape != delta.shape or v.ndim != 1:
            raise DomainError("v and delta must be 1-D fields on the same grid")
        if np.any(delta < 0):
            raise DomainError("delta must be >= 0 everywhere")
        v.setflags(write=False)
        delta.setflags(write=False)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "delta", delta)

    @property
    def grid(self) -> CircleGrid:
        return CircleGrid(self.v.shape[0])

    @property
    def v_prime(self) -> np.ndarray:
        return self.grid.derivative(self.v)

    @property
    def has_advection(self) -> bool:
        return bool(np.any(self.v != 0.0))

    @property
    def decay_floor(self) -> float:
        """min over nodes of v'/2 + delta (the contraction rate of the dynamics)."""
        return float(np.min(0.5 * self.v_prime + self.delta))

    @property
    def rho_floor(self) -> float:
        """Discount rates must exceed this value for the resolvent to exist."""
        return max(-self.decay_floor, 0.0)


@dataclass(frozen=True)
class PlayerSpec:
    """One jurisdiction: its arc, preferences and local fields.

    ``w`` and ``A`` are full-length fields; only their values on the arc (and
    its grid-level closure) are used.
    """

    arc: Arc
    rho: float
    gamma: float
    w: np.ndarray
    A: np.ndarray
    index: int = 0
    name: str = field(default="")

    def __post_init__(self):
        if not isinstance(self.arc, Arc):
            object.__setattr__(self, "arc", Arc(*self.arc))
        if not self.rho > 0:
            raise DomainError(f"player {self.label}: rho must be > 0, got {self.rho}")
        if not self.gamma > 0 or self.gamma == 1.0:
            raise DomainError(f"player {self.label}: gamma must be in (0,1) or (1,inf), got {self.gamma}")
        w = np.array(self.w, dtype=float)
        A = np.array(self.A, dtype=float)
        if w.ndim != 1 or A.shape != w.shape:
            raise DomainError(f"player {self.label}: w and A must be 1-D fields on the same grid")
        grid = CircleGrid(w.shape[0])
        support = self.arc.support_mask(grid)
        if np.any(w[support] <= 0):
            raise DomainError(f"player {self.label}: w must be > 0 on the closed arc")
        if np.any(A[support] <= 1):
            raise DomainError(f"player {self.label}: A must be > 1 on the closed arc")
        w.setflags(write=False)
        A.setflags(write=False)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "A", A)

    @property
    def label(self) -> str:
        return self.name or str(self.index + 1)

    @property
    def grid(self) -> CircleGrid:
        return CircleGrid(self.w.shape[0])

    def check_discount(self, env: EnvironmentSpec) -> None:
        floor = env.rho_floor
        if not self.rho > floor:
            raise DomainError(
                f"discount condition: rho_{self.label} = {self.rho} too small; needs "
                f"rho > |min(v'/2 + delta, 0)| = {floor:.6g}")

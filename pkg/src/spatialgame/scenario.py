"""Scenario files: parsing, validation and construction of the numerical model.

A scenario is a YAML document::

    name: symmetric
    grid: {n_points: 512}
    environment:
      sigma: 0.5
      eta: 0.2
      theta: 0.4
      delta: 0.2                  # field
      v: 0.0                      # field
    players:
      - {name: west, arc: [0, pi], rho: 0.03, gamma: 0.5, w: 1.0, A: 1.6}
      - {name: east, arc: [pi, 2*pi], rho: 0.03, gamma: 0.5, w: 1.0, A: 1.6}
    initial_pollution: 0.0        # field
    run: {dt: 0.01, T: 60, n_samples: 61, series_terms: 64}
    checks: [border_effect]

A *field* is a number, an expression in ``x`` (e.g. ``"1 + 0.1*cos(x)"``),
or a mapping ``{default: <expr>, segments: [{arc: [a, b], value: <expr>}, ...]}``.
Arc endpoints and scalars may use ``pi``. The full schema is in docs/scenario_schema.md.
"""

from __future__ import annotations

import ast
import math
import operator
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .domain import (Arc, CircleGrid, DomainError, EnvironmentSpec, Partition, PlayerSpec,
                     TWO_PI, as_field)

__all__ = [
    "FieldSpec",
    "PlayerConfig",
    "RunControls",
    "Scenario",
    "ScenarioConfig",
    "ScenarioError",
    "Tolerances",
    "evaluate",
    "load_scenario",
    "parse_scenario",
]

KNOWN_CHECKS = ("border_effect", "size_effect", "advection_asymmetry")


class ScenarioError(ValueError):
    """One or more problems found while reading a scenario.

    ``issues`` holds ``(location, message)`` pairs, e.g.
    ``("players[1].gamma", "must differ from 1")``.
    """

    def __init__(self, issues, source: str = ""):
        self.issues = list(issues)
        self.source = source
        where = f" in {source}" if source else ""
        lines = [f"{loc}: {msg}" for loc, msg in self.issues]
        super().__init__(f"{len(self.issues)} scenario problem(s){where}:\n  " + "\n  ".join(lines))


# ---------------------------------------------------------------- expressions

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNARY = {ast.UAdd: operator.pos, ast.USub: operator.neg}
_FUNCS = {"sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp, "log": np.log,
          "sqrt": np.sqrt, "abs": np.abs, "tanh": np.tanh}
_CONSTS = {"pi": math.pi, "e": math.e}


def _eval(node, env):
    if isinstance(node, ast.Expression):
        return _eval(node.body, env)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
            and not isinstance(node.value, bool):
        return node.value
    if isinstance(node, ast.Name):
        if node.id in env:
            return env[node.id]
        if node.id in _CONSTS:
            return _CONSTS[node.id]
        raise ValueError(f"unknown name {node.id!r}")
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval(node.left, env), _eval(node.right, env))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
        return _UNARY[type(node.op)](_eval(node.operand, env))
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) \
            and node.func.id in _FUNCS and len(node.args) == 1 and not node.keywords:
        return _FUNCS[node.func.id](_eval(node.args[0], env))
    raise ValueError(f"unsupported expression element {ast.dump(node)[:40]}")


def evaluate(expr, x=None):
    """Evaluate a number or arithmetic expression (names: pi, e, and x if given)."""
    if isinstance(expr, bool):
        raise ValueError("expected a number, got a boolean")
    if isinstance(expr, (int, float)):
        return float(expr)
    if not isinstance(expr, str):
        raise ValueError(f"expected a number or expression, got {type(expr).__name__}")
    try:
        tree = ast.parse(expr.strip(), mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"cannot parse expression {expr!r}") from exc
    env = {} if x is None else {"x": x}
    out = _eval(tree, env)
    return out if x is not None else float(out)


def _uses_x(expr) -> bool:
    if not isinstance(expr, str):
        return False
    tree = ast.parse(expr.strip(), mode="eval")
    return any(isinstance(n, ast.Name) and n.id == "x" for n in ast.walk(tree))


# ---------------------------------------------------------------- fields


@dataclass(frozen=True)
class FieldSpec:
    """Piecewise field description, sampled lazily on a grid."""

    default: Any = 0.0
    segments: tuple = ()  # ((start, stop), value-expression)

    @classmethod
    def parse(cls, raw, loc: str) -> "FieldSpec":
        if isinstance(raw, dict):
            unknown = set(raw) - {"default", "segments"}
            if unknown:
                raise ValueError(f"unknown key(s) {sorted(unknown)} in field")
            segs = []
            for k, seg in enumerate(raw.get("segments", []) or []):
                if not isinstance(seg, dict) or "arc" not in seg or "value" not in seg:
                    raise ValueError(f"segment {k} needs 'arc' and 'value'")
                segs.append((_parse_arc(seg["arc"]), seg["value"]))
            spec = cls(raw.get("default", 0.0), tuple(segs))
        else:
            spec = cls(raw, ())
        spec._check_expressions()
        arcs = [Arc(*a) for a, _ in spec.segments]
        for j in range(len(arcs)):
            for k in range(j + 1, len(arcs)):
                if arcs[j].overlap(arcs[k]) > 1e-12:
                    raise ValueError(f"segments {j} and {k} overlap")
        return spec

    def _check_expressions(self):
        probe = np.linspace(0.0, TWO_PI, 5)
        for expr in [self.default] + [v for _, v in self.segments]:
            evaluate(expr, probe)

    def _value(self, expr, x):
        out = evaluate(expr, x)
        return np.broadcast_to(np.asarray(out, dtype=float), x.shape)

    def sample(self, grid: CircleGrid) -> np.ndarray:
        x = grid.nodes
        out = np.array(self._value(self.default, x))
        for arc, expr in self.segments:
            mask = Arc(*arc).node_mask(grid)
            out[mask] = self._value(expr, x)[mask]
        return as_field(out, grid)

    @property
    def is_constant(self) -> bool:
        if _uses_x(self.default):
            return False
        base = evaluate(self.default)
        return all(not _uses_x(v) and evaluate(v) == base for _, v in self.segments)

    def jumps(self, tol: float = 1e-9) -> list:
        """Locations where the field is discontinuous (segment edges, origin)."""
        out = []
        for arc, expr in self.segments:
            if Arc(*arc).is_full_circle:
                continue
            for edge, below in ((arc[0], False), (arc[1], True)):
                here = self._scalar(expr, edge)
                across = self._outside_value(edge, arc, below=not below)
                if abs(here - across) > tol * max(1.0, abs(here)):
                    out.append(float(np.mod(edge, TWO_PI)))
        covered = any(Arc(*a).offset(0.0) < Arc(*a).length for a, _ in self.segments)
        if _uses_x(self.default) and not covered:
            if abs(self._scalar(self.default, 0.0) - self._scalar(self.default, TWO_PI)) > tol:
                out.append(0.0)
        return sorted(set(round(e, 12) for e in out))

    def _outside_value(self, edge, own_arc, below):
        # value just across ``edge`` from ``own_arc``
        probe = edge - 1e-9 if below else edge + 1e-9
        for arc, expr in self.segments:
            if arc == own_arc:
                continue
            a = Arc(*arc)
            off = float(a.offset(probe))
            if off < a.length:
                return self._scalar(expr, edge)
        return self._scalar(self.default, edge)

    def _scalar(self, expr, x):
        if _uses_x(expr):
            return float(np.asarray(evaluate(expr, np.array([x])))[0])
        return evaluate(expr)

    def to_raw(self):
        if not self.segments:
            return self.default
        return {"default": self.default,
                "segments": [{"arc": list(a), "value": v} for a, v in self.segments]}


def _parse_arc(raw):
    if not isinstance(raw, (list, tuple)) or len(raw) != 2:
        raise ValueError(f"arc must be a [start, stop] pair, got {raw!r}")
    a, b = evaluate(raw[0]), evaluate(raw[1])
    Arc(a, b)  # validates length
    return (a, b)


# ---------------------------------------------------------------- config types


@dataclass(frozen=True)
class PlayerConfig:
    name: str
    arc: tuple
    rho: float
    gamma: float
    w: FieldSpec
    A: FieldSpec


@dataclass(frozen=True)
class Tolerances:
    alpha_residual: float = 1e-8
    steady_state_match: float = 1e-4
    ordering_slack: float = 1e-10
    series_gap: float = 1e-4
    mirror: float = 1e-8
    asymmetry_min: float = 1e-3


@dataclass(frozen=True)
class RunControls:
    dt: float = 0.01
    T: float = 60.0
    n_samples: int = 61
    series_terms: int = 64
    steady_state: bool = True
    tolerances: Tolerances = field(default_factory=Tolerances)


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    n_points: int
    sigma: float
    eta: float
    theta: float
    delta: FieldSpec
    v: FieldSpec
    players: tuple
    initial_pollution: FieldSpec
    run: RunControls = field(default_factory=RunControls)
    checks: tuple = ()
    description: str = ""
    source: str = ""

    def build(self, n_points: int | None = None) -> "Scenario":
        """Sample every field and construct the numerical model (validated)."""
        cfg = self if n_points is None else replace(self, n_points=int(n_points))
        issues = _semantic_issues(cfg)
        if issues:
            raise ScenarioError(issues, cfg.source)
        return _build(cfg)

    def with_value(self, parameter: str, value: float) -> "ScenarioConfig":
        """Copy with one scalar parameter replaced (used by sweeps).

        Names: ``sigma``, ``eta``, ``theta``, ``delta``, ``v`` (made constant),
        ``rho``/``gamma``/``w``/``A`` for every player, or ``<name>_<j>`` for
        player ``j`` (1-based), e.g. ``w_2``.
        """
        value = float(value)
        if parameter in ("sigma", "eta", "theta"):
            return replace(self, **{parameter: value})
        if parameter in ("delta", "v"):
            return replace(self, **{parameter: FieldSpec(value)})
        base, _, idx = parameter.rpartition("_")
        if not base or not idx.isdigit():
            base, idx = parameter, ""
        if base not in ("rho", "gamma", "w", "A"):
            raise KeyError(f"unknown sweep parameter {parameter!r}")
        targets = range(len(self.players)) if not idx else [int(idx) - 1]
        players = list(self.players)
        for j in targets:
            if not 0 <= j < len(players):
                raise KeyError(f"sweep parameter {parameter!r}: no player {j + 1}")
            new = value if base in ("rho", "gamma") else FieldSpec(value)
            players[j] = replace(players[j], **{base: new})
        return replace(self, players=tuple(players))

    def to_raw(self) -> dict:
        tol = asdict(self.run.tolerances)
        run = {k: v for k, v in asdict(self.run).items() if k != "tolerances"}
        run["tolerances"] = tol
        return {
            "name": self.name,
            "description": self.description,
            "grid": {"n_points": self.n_points},
            "environment": {"sigma": self.sigma, "eta": self.eta, "theta": self.theta,
                            "delta": self.delta.to_raw(), "v": self.v.to_raw()},
            "players": [{"name": p.name, "arc": list(p.arc), "rho": p.rho, "gamma": p.gamma,
                         "w": p.w.to_raw(), "A": p.A.to_raw()} for p in self.players],
            "initial_pollution": self.initial_pollution.to_raw(),
            "run": run,
            "checks": list(self.checks),
        }


@dataclass(frozen=True)
class Scenario:
    """Numerical model built from a config at a given resolution."""

    config: ScenarioConfig
    grid: CircleGrid
    env: EnvironmentSpec
    players: tuple
    p0: np.ndarray

    @property
    def partition(self) -> Partition:
        return Partition(tuple(p.arc for p in self.players))

    @property
    def constant_coefficients(self) -> bool:
        cfg = self.config
        return (cfg.delta.is_constant and cfg.v.is_constant
                and all(p.w.is_constant for p in cfg.players))


# ---------------------------------------------------------------- parsing


class _Collector:
    def __init__(self):
        self.issues = []

    def get(self, mapping, key, loc, kind=float, default=...):
        where = f"{loc}.{key}" if loc else key
        if not isinstance(mapping, dict) or key not in mapping:
            if default is ...:
                self.issues.append((where, "missing"))
                return None
            return default
        raw = mapping[key]
        try:
            if kind is float:
                return evaluate(raw)
            if kind is int:
                if isinstance(raw, bool) or not isinstance(raw, int):
                    raise ValueError(f"expected an integer, got {raw!r}")
                return raw
            if kind is FieldSpec:
                return FieldSpec.parse(raw, where)
            if kind == "arc":
                return _parse_arc(raw)
            return kind(raw)
        except (ValueError, TypeError, DomainError) as exc:
            self.issues.append((where, str(exc)))
            return None


_TOP_KEYS = {"name", "description", "grid", "environment", "players", "initial_pollution",
             "run", "checks"}


def parse_scenario(raw: dict, source: str = "") -> ScenarioConfig:
    """Turn a parsed YAML mapping into a validated :class:`ScenarioConfig`.

    All problems are collected and reported together.
    """
    col = _Collector()
    if not isinstance(raw, dict):
        raise ScenarioError([("<document>", "top level must be a mapping")], source)
    for key in sorted(set(raw) - _TOP_KEYS):
        col.issues.append((key, "unknown section"))

    grid = raw.get("grid", {})
    n_points = col.get(grid, "n_points", "grid", int)
    env = raw.get("environment")
    if not isinstance(env, dict):
        col.issues.append(("environment", "missing or not a mapping"))
        env = {}
    sigma = col.get(env, "sigma", "environment")
    eta = col.get(env, "eta", "environment")
    theta = col.get(env, "theta", "environment")
    delta = col.get(env, "delta", "environment", FieldSpec)
    v = col.get(env, "v", "environment", FieldSpec, default=FieldSpec(0.0))
    for key in sorted(set(env) - {"sigma", "eta", "theta", "delta", "v"}):
        col.issues.append((f"environment.{key}", "unknown key"))

    players = []
    raw_players = raw.get("players")
    if not isinstance(raw_players, list) or not raw_players:
        col.issues.append(("players", "must be a non-empty list"))
        raw_players = []
    for j, rp in enumerate(raw_players):
        loc = f"players[{j + 1}]"
        if not isinstance(rp, dict):
            col.issues.append((loc, "must be a mapping"))
            continue
        for key in sorted(set(rp) - {"name", "arc", "rho", "gamma", "w", "A"}):
            col.issues.append((f"{loc}.{key}", "unknown key"))
        players.append(PlayerConfig(
            name=str(rp.get("name", j + 1)),
            arc=col.get(rp, "arc", loc, "arc"),
            rho=col.get(rp, "rho", loc),
            gamma=col.get(rp, "gamma", loc),
            w=col.get(rp, "w", loc, FieldSpec),
            A=col.get(rp, "A", loc, FieldSpec),
        ))

    p0 = col.get(raw, "initial_pollution", "", FieldSpec, default=FieldSpec(0.0))

    run_raw = raw.get("run", {}) or {}
    tol_raw = run_raw.get("tolerances", {}) or {}
    tol_kwargs = {}
    for key in Tolerances.__dataclass_fields__:
        val = col.get(tol_raw, key, "run.tolerances", default=None)
        if val is not None:
            tol_kwargs[key] = val
    for key in sorted(set(tol_raw) - set(Tolerances.__dataclass_fields__)):
        col.issues.append((f"run.tolerances.{key}", "unknown key"))
    run_kwargs = {}
    for key, kind in (("dt", float), ("T", float), ("n_samples", int), ("series_terms", int),
                      ("steady_state", bool)):
        val = col.get(run_raw, key, "run", kind, default=None)
        if val is not None:
            run_kwargs[key] = val
    for key in sorted(set(run_raw) - {"dt", "T", "n_samples", "series_terms", "steady_state",
                                      "tolerances"}):
        col.issues.append((f"run.{key}", "unknown key"))

    checks = raw.get("checks", []) or []
    if not isinstance(checks, list):
        col.issues.append(("checks", "must be a list"))
        checks = []
    for c in checks:
        if c not in KNOWN_CHECKS:
            col.issues.append(("checks", f"unknown check {c!r} (known: {', '.join(KNOWN_CHECKS)})"))

    required = [n_points, sigma, eta, theta, delta, v, p0]
    required += [x for p in players for x in (p.arc, p.rho, p.gamma, p.w, p.A)]
    if any(x is None for x in required) or not players:
        raise ScenarioError(col.issues, source)

    cfg = ScenarioConfig(
        name=str(raw.get("name", Path(source).stem if source else "scenario")),
        n_points=n_points, sigma=sigma, eta=eta, theta=theta, delta=delta, v=v,
        players=tuple(players), initial_pollution=p0,
        run=RunControls(tolerances=Tolerances(**tol_kwargs), **run_kwargs),
        checks=tuple(checks), description=str(raw.get("description", "")), source=source,
    )
    issues = col.issues + _semantic_issues(cfg)
    if issues:
        raise ScenarioError(issues, source)
    return cfg


def load_scenario(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError([("<file>", f"cannot read: {exc.strerror or exc}")], str(path)) from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "<document>"
        raise ScenarioError([(where, f"YAML parse error: {getattr(exc, 'problem', exc)}")],
                            str(path)) from exc
    return parse_scenario(raw, str(path))


# ---------------------------------------------------------------- validation


def _semantic_issues(cfg: ScenarioConfig) -> list:
    issues = []
    try:
        grid = CircleGrid(cfg.n_points)
    except DomainError as exc:
        return [("grid.n_points", str(exc))]
    if not cfg.sigma > 0:
        issues.append(("environment.sigma", f"must be > 0, got {cfg.sigma}"))
    if not cfg.eta >= 0:
        issues.append(("environment.eta", f"must be >= 0, got {cfg.eta}"))
    if not 0 < cfg.theta < 1:
        issues.append(("environment.theta", f"must lie strictly inside (0, 1), got {cfg.theta}"))
    delta = v = None
    try:
        delta = cfg.delta.sample(grid)
        if np.any(delta < 0):
            issues.append(("environment.delta", "must be >= 0 at every node"))
    except (ValueError, DomainError) as exc:
        issues.append(("environment.delta", str(exc)))
    try:
        v = cfg.v.sample(grid)
        jumps = cfg.v.jumps()
        if jumps:
            issues.append(("environment.v", "advection must be continuously differentiable; "
                           f"jump(s) at x = {', '.join(f'{j:.6g}' for j in jumps)}"))
    except (ValueError, DomainError) as exc:
        issues.append(("environment.v", str(exc)))

    floor = None
    if delta is not None and v is not None:
        floor = float(np.min(0.5 * grid.derivative(v) + delta))
        if cfg.run.steady_state and not floor > 0:
            issues.append(("environment", "steady state requested but min(v'/2 + delta) = "
                           f"{floor:.6g} is not > 0"))

    arcs = []
    for j, p in enumerate(cfg.players):
        loc = f"players[{j + 1}]"
        arc = Arc(*p.arc)
        arcs.append((j, arc))
        count = int(arc.node_mask(grid).sum())
        if count < 2:
            issues.append((f"{loc}.arc", f"holds {count} node(s) at n_points={grid.n_points}; need >= 2"))
        if not p.rho > 0:
            issues.append((f"{loc}.rho", f"must be > 0, got {p.rho}"))
        elif floor is not None and not p.rho > max(-floor, 0.0):
            issues.append((f"{loc}.rho", f"discount condition: rho_{j + 1} = {p.rho} too small; "
                           f"needs rho > |min(v'/2 + delta, 0)| = {max(-floor, 0.0):.6g}"))
        if not p.gamma > 0 or p.gamma == 1:
            issues.append((f"{loc}.gamma", f"must lie in (0, 1) or (1, inf), got {p.gamma}"))
        support = arc.support_mask(grid)
        for key, bound, text in (("w", 0.0, "> 0"), ("A", 1.0, "> 1")):
            try:
                vals = getattr(p, key).sample(grid)[support]
                if np.any(vals <= bound):
                    issues.append((f"{loc}.{key}", f"must be {text} on the arc (min {vals.min():.6g})"))
            except (ValueError, DomainError) as exc:
                issues.append((f"{loc}.{key}", str(exc)))
    for a in range(len(arcs)):
        for b in range(a + 1, len(arcs)):
            (j, arc_j), (k, arc_k) = arcs[a], arcs[b]
            if arc_j.overlap(arc_k) > 1e-12:
                issues.append(("players", f"arcs of players[{j + 1}] [{arc_j.start:.6g}, "
                               f"{arc_j.stop:.6g}) and players[{k + 1}] [{arc_k.start:.6g}, "
                               f"{arc_k.stop:.6g}) overlap"))
    try:
        p0 = cfg.initial_pollution.sample(grid)
        if np.any(p0 < 0):
            issues.append(("initial_pollution", "must be >= 0"))
    except (ValueError, DomainError) as exc:
        issues.append(("initial_pollution", str(exc)))

    run = cfg.run
    if not run.dt > 0:
        issues.append(("run.dt", f"must be > 0, got {run.dt}"))
    if not run.T > 0:
        issues.append(("run.T", f"must be > 0, got {run.T}"))
    if run.n_samples < 2:
        issues.append(("run.n_samples", "must be >= 2"))
    if run.series_terms < 1:
        issues.append(("run.series_terms", "must be >= 1"))
    return issues


def _build(cfg: ScenarioConfig) -> Scenario:
    grid = CircleGrid(cfg.n_points)
    env = EnvironmentSpec(cfg.sigma, cfg.v.sample(grid), cfg.delta.sample(grid), cfg.eta, cfg.theta)
    players = tuple(
        PlayerSpec(Arc(*p.arc), p.rho, p.gamma, p.w.sample(grid), p.A.sample(grid),
                   index=j, name=p.name)
        for j, p in enumerate(cfg.players))
    return Scenario(cfg, grid, env, players, cfg.initial_pollution.sample(grid))

"""Scenario runs: solve, simulate, sweep and fragmentation comparisons.

Every run produces flat CSV files plus a JSON report whose checks carry an
explicit pass/fail. CSV numbers are written with ``repr`` so identical inputs
give byte-identical files.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .domain import DomainError
from .dynamics import convergence_report, simulate, steady_state
from .elliptic import alpha_profile, alpha_series, alpha_upper_bound, assemble_adjoint
from .equilibrium import (EquilibriumProfile, cooperative_equilibrium,
                          fragmentation_order_check, nash_equilibrium, sigma_limit_benchmark,
                          welfare, zero_diffusion_benchmark)
from .scenario import Scenario, ScenarioConfig, evaluate

__all__ = [
    "CheckResult",
    "RunReport",
    "advection_asymmetry",
    "border_effect",
    "run_fragment",
    "run_simulate",
    "run_solve",
    "run_sweep",
    "shared_parameters",
    "size_effect",
    "write_csv",
]


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float | None = None
    tol: float | None = None
    detail: str = ""

    def __post_init__(self):
        # numpy scalars would break JSON serialization
        self.passed = bool(self.passed)
        if self.value is not None:
            self.value = float(self.value)
        if self.tol is not None:
            self.tol = float(self.tol)


@dataclass
class RunReport:
    scenario: str
    n_points: int
    alpha: list = field(default_factory=list)  # per-player stats
    welfare_nash: dict = field(default_factory=dict)
    welfare_cooperative: dict = field(default_factory=dict)
    steady_state: dict = field(default_factory=dict)
    convergence: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunReport":
        data = dict(data)
        data["checks"] = [CheckResult(**c) for c in data.get("checks", [])]
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        return cls.from_dict(json.loads(text))

    def summary_lines(self) -> list:
        lines = [f"scenario {self.scenario} ({self.n_points} nodes)"]
        for c in self.checks:
            mark = "PASS" if c.passed else "FAIL"
            extra = ""
            if c.value is not None:
                extra = f" value={c.value:.3e}" + (f" tol={c.tol:.1e}" if c.tol is not None else "")
            lines.append(f"  [{mark}] {c.name}{extra}{(' ' + c.detail) if c.detail else ''}")
        return lines


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if not np.isfinite(v):
            raise ValueError("refusing to write a non-finite value")
        return repr(v)
    return str(v)


def write_csv(path, header: Sequence[str], rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


# ---------------------------------------------------------------- checks


def _arc_order(arc, grid):
    """Node indices of the arc, ordered counterclockwise from its start."""
    idx = np.flatnonzero(arc.node_mask(grid))
    return idx[np.argsort(arc.offset(grid.nodes[idx]), kind="stable")]


def border_effect(nash: EquilibriumProfile, coop: EquilibriumProfile, scn: Scenario,
                  rtol: float = 1e-12) -> list:
    """Investment dips to its minimum at each arc's midpoint and rises toward both borders."""
    grid = scn.grid
    results = []
    for p in scn.players:
        order = _arc_order(p.arc, grid)
        vals = nash.i[order]
        k = int(np.argmin(vals))
        off = p.arc.offset(grid.nodes[order[k]])
        at_mid = abs(off - 0.5 * p.arc.length) <= grid.dx * (1 + 1e-9)
        slack = rtol * np.abs(vals).max()
        down = np.all(np.diff(vals[: k + 1]) <= slack)
        up = np.all(np.diff(vals[k:]) >= -slack)
        results.append(CheckResult(
            f"border_effect[{p.label}]", bool(at_mid and down and up), float(off - 0.5 * p.arc.length),
            grid.dx, "min at midpoint, monotone toward borders"))
    inhabited = nash.owner >= 0
    gap = float(np.min(nash.i[inhabited] - coop.i[inhabited]))
    results.append(CheckResult("nash_above_cooperative", gap > 0, gap, 0.0,
                               "min over inhabited nodes of i_nash - i_coop"))
    return results


def size_effect(nash: EquilibriumProfile, scn: Scenario) -> CheckResult:
    lengths = [p.arc.length for p in scn.players]
    small, large = int(np.argmin(lengths)), int(np.argmax(lengths))
    i_small = nash.i[nash.owner == small].min()
    i_large = nash.i[nash.owner == large].max()
    return CheckResult("size_effect", bool(i_small > i_large), float(i_small - i_large), 0.0,
                       "min i on the smallest arc minus max i on the largest")


def asymmetry_index(values, arc, grid) -> float:
    support = arc.support_mask(grid)
    mirror = arc.mirror_index(grid)
    return float(np.max(np.abs(values[support] - values[mirror[support]])))


def signed_asymmetry(values, arc, grid) -> float:
    """(int over the first half of the arc - int over the second half) / int over the arc."""
    w = arc.cell_fraction(grid)
    off = arc.offset(grid.nodes)
    half = 0.5 * arc.length
    first = grid.integrate(np.where(off < half, values, 0.0), w)
    second = grid.integrate(np.where(off > half, values, 0.0), w)
    return float((first - second) / grid.integrate(values, w))


def advection_asymmetry(nash: EquilibriumProfile, scn: Scenario, tol) -> list:
    """Advection breaks the reflection symmetry; reversing it mirrors every profile.

    Pollutant is carried with velocity -v, so the upstream half of an arc has
    the larger alpha and the smaller investment: the signed index takes the
    sign of v.
    """
    grid = scn.grid
    results = []
    for s, p in zip(nash.players, scn.players):
        idx = asymmetry_index(s.i, p.arc, grid)
        results.append(CheckResult(f"asymmetry[{p.label}]", idx > tol.asymmetry_min, idx,
                                   tol.asymmetry_min, "max |i(x) - i(mirror x)| on the arc"))
        v_arc = float(np.mean(scn.env.v[p.arc.support_mask(grid)]))
        signed = signed_asymmetry(s.i, p.arc, grid)
        results.append(CheckResult(f"asymmetry_sign[{p.label}]", np.sign(signed) == np.sign(v_arc),
                                   signed, None, "signed half-arc index of i; sign must match v"))
    if not scn.config.v.is_constant:
        results.append(CheckResult("mirror_under_reversed_advection", True, None, None,
                                   "not applicable: advection is not constant"))
        return results
    env_rev = replace(scn.env, v=-scn.env.v)
    flipped = nash_equilibrium(scn.players, env_rev, grid)
    worst = 0.0
    for s, t, p in zip(nash.players, flipped.players, scn.players):
        support = p.arc.support_mask(grid)
        mirror = p.arc.mirror_index(grid)
        for name in ("alpha", "i", "b", "n", "y", "c"):
            a = getattr(s, name)
            b = getattr(t, name)
            worst = max(worst, float(np.max(np.abs(b[support] - a[mirror[support]]))))
    results.append(CheckResult("mirror_under_reversed_advection", worst <= tol.mirror, worst,
                               tol.mirror, "profiles with -v equal mirrored profiles with v"))
    return results


# ---------------------------------------------------------------- solve


def _player_columns(nash: EquilibriumProfile, scn: Scenario):
    header, cols = [], []
    for s, p in zip(nash.players, scn.players):
        for name in ("alpha", "i", "b", "n", "y", "c"):
            header.append(f"{name}_{p.label}")
            cols.append(getattr(s, name))
    return header, cols


def run_solve(scn: Scenario, out_dir=None, *, check: bool = True,
              extra_checks: bool = True) -> tuple[RunReport, dict]:
    """Nash, cooperative and zero-diffusion profiles, welfare and steady states.

    Returns the report and a dict of computed objects (profiles, p_inf, ...).
    """
    cfg = scn.config
    tol = cfg.run.tolerances
    grid, env = scn.grid, scn.env
    report = RunReport(cfg.name, grid.n_points)
    t0 = time.perf_counter()

    op = assemble_adjoint(env, grid)
    alphas = [alpha_profile(p, env, grid=grid, op=op) for p in scn.players]
    report.timings["alpha"] = time.perf_counter() - t0
    series_ok = scn.constant_coefficients
    for p, a in zip(scn.players, alphas):
        stats = {"player": p.label, "min": a.min, "max": a.max, "residual": a.residual,
                 "upper_bound": alpha_upper_bound(p)}
        if series_ok:
            stats["series_gap"] = float(np.max(np.abs(
                a.values - alpha_series(p, env, cfg.run.series_terms, grid))))
        report.alpha.append(stats)

    t1 = time.perf_counter()
    nash = nash_equilibrium(scn.players, env, grid)
    zero = zero_diffusion_benchmark(scn.players, env, grid)
    try:
        coop = cooperative_equilibrium(scn.players, env, grid)
    except DomainError as exc:
        coop = None
        report.welfare_cooperative = {"unsupported": str(exc)}
    report.timings["equilibria"] = time.perf_counter() - t1

    wn = welfare(nash, scn.p0, scn.players, env)
    report.welfare_nash = {"labels": list(wn.labels), "q": wn.q.tolist(),
                           "alpha_inner": wn.alpha_inner.tolist(), "value": wn.value.tolist()}
    if coop is not None:
        wc = welfare(coop, scn.p0, scn.players, env)
        report.welfare_cooperative = {"q": float(wc.q[0]), "alpha_inner": float(wc.alpha_inner[0]),
                                      "value": float(wc.value[0])}

    p_inf = p_inf_coop = None
    if cfg.run.steady_state:
        t2 = time.perf_counter()
        p_inf, res = steady_state(nash.n, env, grid)
        report.steady_state = {"min": float(p_inf.min()), "max": float(p_inf.max()),
                               "mean": float(p_inf.mean()), "residual": res,
                               "mass_decay": grid.integrate(env.delta * p_inf),
                               "mass_emitted": grid.integrate(nash.n)}
        if coop is not None:
            p_inf_coop, _ = steady_state(coop.n, env, grid)
        report.timings["steady_state"] = time.perf_counter() - t2

    computed = {"nash": nash, "cooperative": coop, "zero_diffusion": zero, "alphas": alphas,
                "p_inf": p_inf, "p_inf_cooperative": p_inf_coop}

    if check:
        report.checks.extend(_general_checks(scn, report, nash, coop, p_inf))
        if extra_checks:
            if "border_effect" in cfg.checks and coop is not None:
                report.checks.extend(border_effect(nash, coop, scn))
            if "size_effect" in cfg.checks:
                report.checks.append(size_effect(nash, scn))
            if "advection_asymmetry" in cfg.checks:
                report.checks.extend(advection_asymmetry(nash, scn, tol))

    if out_dir is not None:
        out_dir = Path(out_dir)
        header, cols = _player_columns(nash, scn)
        header = ["x"] + header
        cols = [grid.nodes] + cols
        if p_inf is not None:
            header.append("p_inf")
            cols.append(p_inf)
        if coop is not None:
            for name in ("alpha", "i", "b", "n", "y", "c"):
                header.append(f"{name}_coop")
                cols.append(getattr(coop, name))
            if p_inf_coop is not None:
                header.append("p_inf_coop")
                cols.append(p_inf_coop)
        header.append("i_zero_diffusion")
        cols.append(zero.i)
        path = write_csv(out_dir / "profiles.csv", header, zip(*cols))
        report.outputs.append(str(path))
    return report, computed


def _general_checks(scn, report, nash, coop, p_inf) -> list:
    tol = scn.config.run.tolerances
    grid, env = scn.grid, scn.env
    out = []
    worst = max(a["residual"] for a in report.alpha)
    out.append(CheckResult("alpha_residual", worst <= tol.alpha_residual, worst, tol.alpha_residual))
    bounds_ok = all(0 < a["min"] and a["max"] <= a["upper_bound"] + 1e-8 for a in report.alpha)
    out.append(CheckResult("alpha_bounds", bounds_ok, None, None, "0 < alpha <= max(w)/rho"))
    if "series_gap" in report.alpha[0]:
        gap = max(a["series_gap"] for a in report.alpha)
        out.append(CheckResult("alpha_series_agreement", gap <= tol.series_gap, gap, tol.series_gap))
    c_min = float(min(s.c[s.support].min() for s in nash.players))
    out.append(CheckResult("consumption_nonnegative", c_min >= 0, c_min, 0.0))
    if p_inf is not None:
        scale = max(float(np.abs(nash.n).max()), 1.0)
        res = report.steady_state["residual"]
        out.append(CheckResult("steady_state_residual", res <= 1e-10 * scale, res, 1e-10 * scale))
        if scn.config.v.is_constant:
            diff = abs(report.steady_state["mass_decay"] - report.steady_state["mass_emitted"])
            out.append(CheckResult("steady_state_mass_balance", diff <= 1e-10, diff, 1e-10))
    if coop is not None and scn.constant_coefficients:
        inhabited = nash.owner >= 0
        gap = float(np.min(nash.n[inhabited] - coop.n[inhabited]))
        out.append(CheckResult("nash_emits_more_than_cooperative", gap >= -1e-12, gap, 0.0))
    finite = all(np.all(np.isfinite(getattr(nash, k))) for k in ("i", "b", "n", "y", "c"))
    out.append(CheckResult("finite_outputs", bool(finite)))
    return out


def run_simulate(scn: Scenario, out_dir=None, *, check: bool = True,
                 T: float | None = None, dt: float | None = None) -> tuple[RunReport, dict]:
    """Solve, then integrate the pollution dynamics under the Nash emissions."""
    report, computed = run_solve(scn, out_dir, check=check)
    run = scn.config.run
    T = run.T if T is None else T
    dt = run.dt if dt is None else dt
    nash = computed["nash"]
    t0 = time.perf_counter()
    traj = simulate(scn.p0, nash.n, scn.env, scn.grid, T=T, dt=dt, n_samples=run.n_samples,
                    p_inf=computed["p_inf"])
    report.timings["simulate"] = time.perf_counter() - t0
    computed["trajectory"] = traj
    tol = run.tolerances
    if traj.p_inf is not None:
        conv = convergence_report(traj, tol=tol.steady_state_match)
        report.convergence = {"rate": conv.rate, "final_gap": conv.final_gap,
                              "decay_floor": scn.env.decay_floor}
        if check:
            report.checks.append(CheckResult("simulation_reaches_steady_state", conv.passed,
                                             conv.final_gap, tol.steady_state_match))
    if check and np.all(scn.p0 >= 0) and np.all(nash.n >= 0):
        low = float(traj.states.min())
        out_tol = 1e-12 * max(1.0, float(traj.states.max()))
        report.checks.append(CheckResult("pollution_nonnegative", low >= -out_tol, low, out_tol))
    if out_dir is not None:
        out_dir = Path(out_dir)
        x = scn.grid.nodes
        rows = ((t, xk, pk) for t, p in zip(traj.times, traj.states) for xk, pk in zip(x, p))
        report.outputs.append(str(write_csv(out_dir / "trajectory.csv", ["t", "x", "p"], rows)))
        header = ["t", "mass"] + (["gap"] if traj.gap is not None else [])
        cols = [traj.times, traj.mass] + ([traj.gap] if traj.gap is not None else [])
        report.outputs.append(str(write_csv(out_dir / "summary.csv", header, zip(*cols))))
    return report, computed


# ---------------------------------------------------------------- sweep


def _midpoint_nodes(scn):
    out = []
    for p in scn.players:
        c = p.arc.center
        d = np.abs(np.angle(np.exp(1j * (scn.grid.nodes - c))))
        d[~p.arc.node_mask(scn.grid)] = np.inf
        out.append(int(np.argmin(d)))
    return out


def run_sweep(cfg: ScenarioConfig, parameter: str, values: Sequence[float], out_path=None,
              n_points: int | None = None) -> tuple[list, list]:
    """One solve per parameter value; long-format rows plus monotonicity checks.

    Rows are ``(param_value, regime, x, variable, value)``. Each value also
    carries the zero-diffusion benchmark rows and, without advection, the
    infinite-diffusion limit rows.
    """
    values = [float(v) for v in values]
    if not values:
        raise ValueError("sweep needs at least one value")
    rows = []
    mids = []
    limits = []
    for val in values:
        scn = cfg.with_value(parameter, val).build(n_points)
        _, computed = run_solve(scn, check=False)
        x = scn.grid.nodes
        regimes = [("nash", computed["nash"]), ("zero_diffusion", computed["zero_diffusion"])]
        if computed["cooperative"] is not None:
            regimes.append(("cooperative", computed["cooperative"]))
        limit = None
        if not scn.env.has_advection:
            limit = sigma_limit_benchmark(scn.players, scn.env, scn.grid)
            regimes.append(("sigma_limit", limit))
        for regime, prof in regimes:
            for name in ("alpha", "i", "b", "n", "y", "c"):
                arr = getattr(prof, name)
                rows.extend((val, regime, xk, name, vk) for xk, vk in zip(x, arr))
        if computed["p_inf"] is not None:
            rows.extend((val, "nash", xk, "p_inf", vk) for xk, vk in zip(x, computed["p_inf"]))
        idx = _midpoint_nodes(scn)
        mids.append(computed["nash"].i[idx])
        limits.append((computed["zero_diffusion"].i[idx], None if limit is None else limit.i[idx]))

    checks = []
    if parameter == "sigma":
        order = np.argsort(values)
        m = np.array(mids)[order]
        inc = bool(np.all(np.diff(m, axis=0) > 0)) if len(values) > 1 else True
        checks.append(CheckResult("midpoint_investment_increases_with_sigma", inc,
                                  float(np.min(np.diff(m, axis=0))) if len(values) > 1 else None))
        lo = np.array([l[0] for l in limits])
        if all(l[1] is not None for l in limits):
            hi = np.array([l[1] for l in limits])
            ok = bool(np.all(m > lo[order]) and np.all(m < hi[order]))
            checks.append(CheckResult("midpoint_investment_between_limits", ok))
    if out_path is not None:
        write_csv(out_path, ["param_value", "regime", "x", "variable", "value"], rows)
    return rows, checks


# ---------------------------------------------------------------- fragmentation


def shared_parameters(configs: Sequence[ScenarioConfig]) -> dict:
    """Common scalar parameters of homogeneous scenarios, or raise DomainError."""
    vals = {}
    for cfg in configs:
        for key, spec in (("delta", cfg.delta), ("v", cfg.v)):
            if not spec.is_constant:
                raise DomainError(f"{cfg.name}: {key} must be homogeneous in space")
        for p in cfg.players:
            for key, spec in (("w", p.w), ("A", p.A)):
                if not spec.is_constant:
                    raise DomainError(f"{cfg.name}: player {p.name} {key} must be homogeneous")
        items = {"n_points": cfg.n_points, "sigma": cfg.sigma, "eta": cfg.eta, "theta": cfg.theta,
                 "delta": cfg.delta.to_raw(), "v": cfg.v.to_raw(),
                 "initial_pollution": cfg.initial_pollution.to_raw()}
        for p in cfg.players:
            items_p = {"rho": p.rho, "gamma": p.gamma, "w": p.w.to_raw(), "A": p.A.to_raw()}
            for k, v in items_p.items():
                vals.setdefault(k, set()).add(repr(v))
        for k, v in items.items():
            vals.setdefault(k, set()).add(repr(v))
    bad = sorted(k for k, v in vals.items() if len(v) > 1)
    if bad:
        raise DomainError(f"configurations must share every parameter; differing: {', '.join(bad)}")
    first = configs[0]
    p = first.players[0]
    return {"rho": p.rho, "gamma": p.gamma, "w": evaluate(p.w.default), "A": evaluate(p.A.default)}


def run_fragment(fine: ScenarioConfig, coarse: ScenarioConfig, T: float | None = None,
                 out_path=None, n_points: int | None = None, dt: float | None = None):
    """Pollution ordering between a fragmented and a coarser configuration."""
    params = shared_parameters([fine, coarse])
    scn_f = fine.build(n_points)
    scn_c = coarse.build(n_points)
    run = fine.run
    rep = fragmentation_order_check(
        scn_f.partition, scn_c.partition, env=scn_f.env, p0=scn_f.p0, grid=scn_f.grid,
        T=run.T if T is None else T, dt=run.dt if dt is None else dt, n_samples=run.n_samples,
        tol=run.tolerances.ordering_slack, **params)
    if out_path is not None:
        write_csv(out_path, ["t", "min_gap"], zip(rep.times, rep.min_gap))
    return rep

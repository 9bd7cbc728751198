"""Scenario definitions, parameter validation and the pipelines behind the CLI.

Every scenario writes into its own output directory:

* ``report.json``  deterministic, schema-versioned summary with pass/fail checks;
* ``series.csv``   time series or convergence table (columns in docs/formats.md);
* ``snapshot_*.json`` field snapshots where the scenario produces fields.
"""
from __future__ import annotations

import csv
import io as _io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import algebra, flow, fuzzy, nahm, solutions, susy
from .bracket import jacobi_residual
from .io import SnapshotError, dumps_report, read_snapshot, snapshot_dict
from .surface import (SPHERE, TORUS, FieldConfiguration, SurfaceField, SurfaceGrid,
                      random_band_limited, real_harmonic_basis, sphere_harmonics_l1)

EXIT_OK, EXIT_TOLERANCE, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
KINDS = ("verify-algebra", "flow", "nahm", "solutions", "susy", "convergence")


class ConfigError(ValueError):
    """Invalid scenario parameters (exit status 2)."""


class NumericalAbort(RuntimeError):
    """Non-finite values or a tripped blow-up guard (exit status 3)."""


# --------------------------------------------------------------- parameters

def _parse_bool(s):
    if isinstance(s, bool):
        return s
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def parse_grid(s) -> tuple[int, int]:
    if isinstance(s, (tuple, list)):
        n1, n2 = s
    else:
        parts = str(s).lower().split("x")
        if len(parts) == 1:
            parts = parts * 2
        if len(parts) != 2:
            raise ValueError(f"grid must look like N1xN2, got {s!r}")
        n1, n2 = (int(p) for p in parts)
    if n1 < 4 or n2 < 4:
        raise ValueError("grid sizes must be at least 4")
    return int(n1), int(n2)


def _int_list(s):
    if isinstance(s, (list, tuple)):
        return [int(x) for x in s]
    return [int(x) for x in str(s).split(",") if x.strip()]


def _float_list(s):
    if isinstance(s, (list, tuple)):
        return [float(x) for x in s]
    return [float(x) for x in str(s).split(",") if x.strip()]


def _choice(*options):
    def conv(s):
        v = str(s).strip()
        if v not in options:
            raise ValueError(f"expected one of {options}, got {v!r}")
        return v
    return conv


def _json_obj(s):
    if isinstance(s, dict):
        return s
    s = str(s).strip()
    if not s:
        return {}
    obj = json.loads(s)
    if not isinstance(obj, dict):
        raise ValueError("expected a JSON object")
    return obj


# name -> (converter, default)
SCHEMAS: dict[str, dict] = {
    "verify-algebra": {
        "seed": (int, 0),
    },
    "flow": {
        "seed": (int, 0),
        "dim": (_choice("3", "7"), "3"),
        "topology": (_choice(SPHERE, TORUS), SPHERE),
        "grid": (parse_grid, "32x32"),
        "dt": (float, 1e-3),
        "steps": (int, 400),
        "preset": (_choice("collapse", "random", "toda", "string", "zero"), "collapse"),
        "r0": (float, 1.0),
        "amplitude": (float, 0.2),
        "lmax": (int, 2),
        "every": (int, 25),
        "snapshot_every": (int, 0),
        "g2_check": (_parse_bool, True),
        "filter_cut": (int, 0),
        "guard": (float, flow.BLOWUP_THRESHOLD),
        "tol_residual": (float, 1e-9),
        "tol_drift": (float, 1e-6),
        "tol_closed_form": (float, 1e-6),
        "tol_g2": (float, 1e-8),
    },
    "nahm": {
        "seed": (int, 0),
        "mode": (_choice("matrix", "diagonal"), "diagonal"),
        "init": (str, ""),
        "c": (float, 0.5),
        "dt": (float, 1e-3),
        "steps": (int, 1000),
        "every": (int, 50),
        "guard": (float, flow.BLOWUP_THRESHOLD),
        "tol_closed_form": (float, 1e-8),
    },
    "solutions": {
        "seed": (int, 0),
        "name": (_choice("string-7d", "toda-sphere", "collapse-3d"), "collapse-3d"),
        "params": (_json_obj, ""),
        "grid": (parse_grid, "32x32"),
        "time": (float, 0.2),
        "tol": (float, 1e-9),
    },
    "susy": {
        "seed": (int, 0),
        "state": (str, ""),
        "preset": (_choice("collapse", "random7", "noise"), "collapse"),
        "grid": (parse_grid, "32x32"),
        "tol": (float, susy.DEFAULT_TOL),
        "convention": (_choice(*susy.CONVENTIONS), "i"),
        "expected": (int, -1),
    },
    "convergence": {
        "seed": (int, 0),
        "fuzzy_sizes": (_int_list, "4,8,16,32"),
        "grids": (_int_list, "16,32,64"),
        "dts": (_float_list, "0.05,0.025,0.0125"),
        "horizon": (float, 0.8),
        "ratio_target": (float, 16.0),
        "ratio_band": (float, 3.0),
    },
}


@dataclass(frozen=True)
class Scenario:
    kind: str
    params: dict
    out: Path

    @classmethod
    def build(cls, kind: str, raw: dict, out) -> "Scenario":
        """Validate raw string/typed values against the kind's schema."""
        if kind not in SCHEMAS:
            raise ConfigError(f"unknown scenario kind {kind!r}; choose from {KINDS}")
        schema = SCHEMAS[kind]
        unknown = sorted(set(raw) - set(schema))
        if unknown:
            raise ConfigError(f"unknown parameter(s) for {kind}: {', '.join(unknown)}")
        params = {}
        for name, (conv, default) in schema.items():
            value = raw.get(name, default)
            try:
                params[name] = conv(value)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{kind}.{name}: {exc}") from None
        _check_semantics(kind, params)
        return cls(kind, params, Path(out))


def _check_semantics(kind: str, p: dict) -> None:
    def need(cond, msg):
        if not cond:
            raise ConfigError(f"{kind}: {msg}")

    if kind == "flow":
        need(p["dt"] > 0, "dt must be positive")
        need(p["steps"] >= 0, "steps must be >= 0")
        need(p["every"] >= 1, "every must be >= 1")
        need(p["filter_cut"] >= 0, "filter_cut must be >= 0 (0 disables the filter)")
        if p["preset"] in ("collapse", "toda"):
            need(p["topology"] == SPHERE, f"preset {p['preset']} needs the sphere")
        if p["preset"] == "toda":
            need(p["dim"] == "3", "preset toda is three-dimensional")
        if p["preset"] == "string":
            need(p["topology"] == TORUS and p["dim"] == "7", "preset string needs dim 7 on the torus")
        if p["topology"] == TORUS:
            need(all(n % 2 == 0 for n in p["grid"]), "torus grid sizes must be even")
    elif kind == "nahm":
        need(p["dt"] > 0 and p["steps"] >= 0 and p["every"] >= 1, "dt > 0, steps >= 0, every >= 1")
        if p["init"]:
            need(Path(p["init"]).is_file(), f"init file {p['init']} not found")
    elif kind == "susy":
        if p["state"]:
            need(Path(p["state"]).is_file(), f"state file {p['state']} not found")
    elif kind == "convergence":
        need(len(p["fuzzy_sizes"]) >= 2 and all(n >= 2 for n in p["fuzzy_sizes"]), "fuzzy_sizes needs >= 2 sizes >= 2")
        need(len(p["grids"]) >= 2 and all(n >= 8 and n % 2 == 0 for n in p["grids"]), "grids must be even and >= 8")
        need(len(p["dts"]) >= 2 and all(d > 0 for d in p["dts"]), "dts needs >= 2 positive steps")


# ------------------------------------------------------------------ results

@dataclass
class Outcome:
    results: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    series_header: list | None = None
    series: list = field(default_factory=list)
    snapshots: dict = field(default_factory=dict)    # file name -> snapshot dict
    aborted: str | None = None

    def check(self, name: str, value, tol=None, passed: bool | None = None, relation: str = "<"):
        if passed is None:
            passed = bool(np.isfinite(value) and value < tol)
        self.checks.append({"name": name, "value": value, "tol": tol,
                            "relation": relation, "passed": bool(passed)})

    @property
    def passed(self) -> bool:
        return self.aborted is None and all(c["passed"] for c in self.checks)


def _grid(p, topology=None) -> SurfaceGrid:
    n1, n2 = p["grid"]
    return SurfaceGrid(topology or p.get("topology", SPHERE), n1, n2)


# ------------------------------------------------------------ verify-algebra

def run_verify_algebra(p: dict) -> Outcome:
    out = Outcome()
    rep = algebra.verify_identity_suite()
    out.results["identities"] = rep.to_dict()
    for c in rep.checks:
        out.check(f"identity:{c.name}", c.violations, passed=c.passed, relation="violations == 0")
    beta = algebra.build_beta_matrices().beta
    cl = algebra.clifford_residual(beta)
    prod = algebra.beta_product(beta)
    out.check("clifford_relations", cl, passed=cl == 0, relation="== 0")
    dev = int(np.abs(prod + np.eye(8, dtype=np.int64)).max())
    out.check("beta_product_minus_identity", dev, passed=dev == 0, relation="== 0")
    dim = len(algebra.g2_algebra_basis())
    out.check("g2_dimension", dim, passed=dim == 14, relation="== 14")
    out.results["identities_passed"] = f"{sum(c.passed for c in rep.checks)}/{len(rep.checks)}"
    return out


# ------------------------------------------------------------------- flow

DEFAULT_STRING = solutions.StringSolutionSpec(
    a=(1, 0, 0, 0, 0, 0, 0), b=(0, 0, 1, 0, 0, 0, 0),
    profiles=({1: 0.3}, {1: 0.2}, {2: 0.1}))


def flow_initial(p: dict, rng: np.random.Generator):
    """(initial configuration, closed-form evaluator or None) for a flow preset."""
    d = int(p["dim"])
    grid = _grid(p)
    preset = p["preset"]
    if preset == "collapse":
        cfg = solutions.collapsing_sphere_eval(p["r0"], 0.0, grid)
        exact = lambda t: solutions.collapsing_sphere_eval(p["r0"], t, grid)
    elif preset == "toda":
        spec = solutions.TodaSolutionSpec()
        cfg = solutions.toda_eval(spec, grid, 0.0)
        exact = lambda t: solutions.toda_eval(spec, grid, t)
    elif preset == "string":
        cfg = solutions.string_solution_eval(DEFAULT_STRING, grid, 0.0)
        exact = lambda t: solutions.string_solution_eval(DEFAULT_STRING, grid, t)
    elif preset == "random":
        cfg = FieldConfiguration(grid, random_band_limited(grid, d, rng, p["lmax"], p["amplitude"]))
        exact = None
    else:
        cfg = FieldConfiguration.zeros(grid, d)
        exact = lambda t: FieldConfiguration.zeros(grid, d)
    if cfg.d < d:
        cfg = cfg.embed(d)
        if exact is not None:
            inner = exact
            exact = lambda t: inner(t).embed(d)
    return cfg, exact


FLOW_COLUMNS = ["t", "step", "max_abs", "gauss", "eom", "conservation7",
                "drift_1", "drift_2", "drift_3", "closed_form_error"]


def run_flow(p: dict, rng: np.random.Generator) -> Outcome:
    out = Outcome(series_header=FLOW_COLUMNS)
    cfg0, exact = flow_initial(p, rng)
    d = cfg0.d
    pair = flow.make_null_pair(d, seed=int(rng.integers(2 ** 31)))
    state0 = flow.FlowState(cfg0, dt=p["dt"])
    q0 = None
    if cfg0.winding is None:
        q0 = [flow.conserved_charge(cfg0, pair, n) for n in (1, 2, 3)]
    worst = {"gauss": 0.0, "eom": 0.0, "conservation7": 0.0, "drift": [0.0, 0.0, 0.0],
             "closed_form_error": 0.0}

    def closed_err(s):
        if exact is None:
            return float("nan")
        ref = exact(s.t).values
        scale = max(1.0, float(np.abs(ref).max()))
        return float(np.abs(s.cfg.values - ref).max() / scale)

    def record(s):
        rep = flow.diagnose(s, pair, reference_charges=q0)
        drift = list(rep.charge_drift) or [float("nan")] * 3
        c7 = rep.conservation7 if rep.conservation7 is not None else float("nan")
        ce = closed_err(s)
        worst["gauss"] = max(worst["gauss"], rep.gauss)
        worst["eom"] = max(worst["eom"], rep.eom)
        if rep.conservation7 is not None:
            worst["conservation7"] = max(worst["conservation7"], c7)
        if rep.charge_drift:
            worst["drift"] = [max(a, b) for a, b in zip(worst["drift"], drift)]
        if exact is not None:
            worst["closed_form_error"] = max(worst["closed_form_error"], ce)
        out.series.append([s.t, s.step, s.cfg.max_abs(), rep.gauss, rep.eom, c7, *drift, ce])
        if p["snapshot_every"] and s.step % p["snapshot_every"] == 0:
            out.snapshots[f"snapshot_{s.step:06d}.json"] = snapshot_dict(s.cfg, s.t)

    record(state0)

    def observer(s):
        if s.step % p["every"] == 0:
            record(s)

    cut = p["filter_cut"] or None
    final = flow.evolve(state0, p["steps"], guard=p["guard"], observer=observer, filter_cut=cut)
    if final.step % p["every"] != 0 or final.halted:
        record(final)
    out.snapshots["snapshot_final.json"] = snapshot_dict(final.cfg, final.t)
    if final.halted:
        out.aborted = f"blow-up guard tripped after step {final.step} (t = {final.t:.6g})"

    tol = p["tol_residual"]
    out.results.update({
        "dim": d, "preset": p["preset"], "final_t": final.t, "final_step": final.step,
        "halted": final.halted, "max_residuals": worst,
        "null_pair": {"u": [[z.real, z.imag] for z in pair.u], "v": [[z.real, z.imag] for z in pair.v]},
    })
    if q0 is not None:
        out.results["initial_charges"] = [[z.real, z.imag] for z in q0]
    out.check("gauss", worst["gauss"], tol)
    out.check("eom", worst["eom"], tol)
    if d == 7:
        out.check("conservation7", worst["conservation7"], tol)
    if d == 3 and q0 is not None:
        out.check("charge_drift", max(worst["drift"]), p["tol_drift"])
    if exact is not None:
        out.check("closed_form_error", worst["closed_form_error"], p["tol_closed_form"])
    if d == 7 and p["g2_check"] and not final.halted:
        r = algebra.random_g2_element(rng)
        rotated = flow.evolve(flow.FlowState(cfg0.rotated(r), dt=p["dt"]), final.step,
                              guard=p["guard"], filter_cut=cut)
        dev = float(np.abs(rotated.cfg.values - final.cfg.rotated(r).values).max())
        out.results["g2_deviation"] = dev
        out.check("g2_covariance", dev, p["tol_g2"])
    return out


# ------------------------------------------------------------------- nahm

def _load_nahm_init(p: dict):
    if p["init"]:
        try:
            y = np.asarray(json.loads(Path(p["init"]).read_text()), dtype=float)
        except (OSError, ValueError, TypeError) as exc:
            raise ConfigError(f"nahm.init: {exc}") from None
        if y.shape == (7,) and p["mode"] == "matrix":
            y = np.diag(y)
        if y.shape == (7, 7) and p["mode"] == "diagonal":
            if np.any(y != np.diag(np.diag(y))):
                raise ConfigError("nahm.init: diagonal mode needs a diagonal matrix or a 7-vector")
            y = np.diag(y)
        expected = (7, 7) if p["mode"] == "matrix" else (7,)
        if y.shape != expected:
            raise ConfigError(f"nahm.init: expected shape {expected}, got {y.shape}")
        return y
    y = np.full(7, p["c"])
    return np.diag(y) if p["mode"] == "matrix" else y


def run_nahm(p: dict, y0: np.ndarray) -> Outcome:
    matrix = y0.ndim == 2
    cols = ["t", "step", "max_abs", "off_diagonal"] + [f"r{i + 1}" for i in range(7)] + ["closed_form_rel_error"]
    out = Outcome(series_header=cols)
    diag0 = np.diag(y0) if matrix else y0
    diagonal_start = not matrix or nahm.off_diagonal_norm(y0) == 0
    equal = diagonal_start and np.all(diag0 == diag0[0])
    worst = {"off_diagonal": 0.0, "closed_form_rel_error": 0.0}

    def record(s):
        y = s.y
        r = np.diag(y) if matrix else y
        off = nahm.off_diagonal_norm(y) if matrix else 0.0
        err = float("nan")
        if equal:
            ref = nahm.equal_component_solution(diag0[0], s.t) if diag0[0] * s.t < 1 else np.inf
            err = float(np.abs(r / ref - 1).max()) if ref != 0 else float(np.abs(r).max())
            worst["closed_form_rel_error"] = max(worst["closed_form_rel_error"], err)
        worst["off_diagonal"] = max(worst["off_diagonal"], off)
        out.series.append([s.t, s.step, float(np.abs(y).max()), off, *r, err])

    s0 = nahm.OdeState(y0, dt=p["dt"])
    record(s0)
    final = nahm.ode_evolve(s0, p["steps"], guard=p["guard"],
                            observer=lambda s: record(s) if s.step % p["every"] == 0 else None)
    if final.step % p["every"] != 0 or final.halted:
        record(final)
    if final.halted:
        out.aborted = f"blow-up guard tripped after step {final.step} (t = {final.t:.6g})"
    yf = final.y
    zf = yf if matrix else np.diag(yf)
    out.results.update({
        "mode": "matrix" if matrix else "diagonal",
        "final_t": final.t, "final_step": final.step, "halted": final.halted,
        "final": yf.tolist(),
        "ansatz_residual": nahm.ansatz_residual(zf, nahm.z_rhs(zf)),
        "max_off_diagonal": worst["off_diagonal"],
    })
    if diagonal_start and matrix:
        out.check("diagonal_preserved", worst["off_diagonal"], passed=worst["off_diagonal"] == 0, relation="== 0")
    if equal:
        out.check("closed_form", worst["closed_form_rel_error"], p["tol_closed_form"])
    return out


# -------------------------------------------------------------- solutions

def _solution(p: dict):
    name, prm, t = p["name"], dict(p["params"]), p["time"]
    try:
        if name == "collapse-3d":
            r0 = float(prm.pop("r0", 1.0))
            _no_extra(prm)
            grid = _grid(p, SPHERE)
            return (solutions.collapsing_sphere_eval(r0, t, grid),
                    solutions.collapsing_sphere_velocity(r0, t, grid), {})
        if name == "toda-sphere":
            spec = solutions.TodaSolutionSpec(float(prm.pop("kappa", 1.0)), float(prm.pop("t0", 1.0)),
                                              str(prm.pop("variant", solutions.HYPERBOLIC)))
            _no_extra(prm)
            grid = _grid(p, SPHERE)
            return (solutions.toda_eval(spec, grid, t), solutions.toda_velocity(spec, grid, t),
                    {"toda_residual": solutions.toda_residual(spec, grid, t)})
        spec = DEFAULT_STRING
        if prm:
            profiles = tuple({int(k): complex(*v) if isinstance(v, list) else complex(v)
                              for k, v in prof.items()} for prof in prm.pop("profiles", [{}, {}, {}]))
            spec = solutions.StringSolutionSpec(tuple(prm.pop("a", DEFAULT_STRING.a)),
                                                tuple(prm.pop("b", DEFAULT_STRING.b)),
                                                profiles, float(prm.pop("axial", 0.0)))
            _no_extra(prm)
        grid = _grid(p, TORUS)
        cfg = solutions.string_solution_eval(spec, grid, t)
        vel = solutions.string_solution_velocity(spec, grid, t)
        return cfg, vel, {"reduction_residual": solutions.string_reduction_residual(cfg, vel)}
    except (TypeError, ValueError, AttributeError) as exc:
        raise ConfigError(f"solutions.params: {exc}") from None


def _no_extra(prm):
    if prm:
        raise ValueError(f"unknown solution parameter(s): {sorted(prm)}")


def run_solutions(p: dict, built) -> Outcome:
    cfg, vel, extra = built
    out = Outcome()
    res = solutions.solution_residual(cfg, vel)
    out.results.update({"name": p["name"], "time": p["time"], "selfduality_residual": res, **extra})
    out.check("selfduality", res, p["tol"])
    for k, v in extra.items():
        out.check(k, v, p["tol"])
    out.snapshots["snapshot.json"] = snapshot_dict(cfg, p["time"], vel)
    return out


# ------------------------------------------------------------------- susy

def susy_snapshot(p: dict, rng: np.random.Generator):
    if p["state"]:
        cfg, t, vel = read_snapshot(p["state"])
        return cfg, vel
    grid = _grid(p, SPHERE)
    if p["preset"] == "collapse":
        return solutions.collapsing_sphere_eval(1.0, 0.3, grid), None
    cfg = FieldConfiguration(grid, random_band_limited(grid, 7, rng, 2, 0.3))
    if p["preset"] == "random7":
        return cfg, None
    return cfg, random_band_limited(grid, 7, rng, 2, 0.3)


def run_susy(p: dict, snap) -> Outcome:
    cfg, vel = snap
    out = Outcome()
    op = susy.build_susy_operator(cfg, vel, p["convention"])
    expected = None if p["expected"] < 0 else p["expected"]
    rep = susy.count_preserved_susy(op, p["tol"], expected)
    out.results.update(rep.to_dict())
    out.results["paper_spinor_residual"] = susy.paper_spinor_residual(op)
    if expected is not None:
        out.check("kernel_dim", rep.kernel_dim, passed=rep.matches, relation=f"== {expected}")
    return out


# ------------------------------------------------------------ convergence

CONVERGENCE_COLUMNS = ["study", "parameter", "value", "ratio"]


def _l2_test_fields(grid: SurfaceGrid, rng: np.random.Generator):
    basis = real_harmonic_basis(grid, 2)
    return [SurfaceField(grid, np.tensordot(rng.normal(size=len(basis)), basis, axes=1)) for _ in range(2)]


def _jacobi_fields(grid: SurfaceGrid):
    """Smooth fields that are not band-limited, so the residual reflects resolution."""
    if grid.topology == SPHERE:
        z, ph = grid.mesh
        s = np.sqrt(1 - z * z)
        vals = [1 / (1.3 - s * np.cos(ph)), 1 / (1.3 - z), 1 / (1.3 + s * np.sin(ph))]
    else:
        s1, s2 = grid.mesh
        vals = [np.exp(np.sin(s1)), np.cos(s1 + np.sin(s2)), 1 / (2 + np.cos(s2 - s1))]
    return [SurfaceField(grid, v) for v in vals]


def run_convergence(p: dict, rng: np.random.Generator) -> Outcome:
    out = Outcome(series_header=CONVERGENCE_COLUMNS)

    # fuzzy-sphere bracket deviation on l <= 2 fields
    g = SurfaceGrid.sphere(16)
    f, h = _l2_test_fields(g, rng)
    fuzzy_dev = [fuzzy.bracket_deviation(f, h, n) for n in p["fuzzy_sizes"]]
    # the l = 1 sector is exact at every N
    f1 = [SurfaceField(g, v) for v in sphere_harmonics_l1(g)]
    l1_dev = max(fuzzy.bracket_deviation(f1[0], f1[1], n) for n in p["fuzzy_sizes"])
    _rows(out, "fuzzy_bracket", p["fuzzy_sizes"], fuzzy_dev)

    # RK4 error on the collapsing sphere under dt halving
    r0, horizon = 1.0, p["horizon"]
    gs = SurfaceGrid.sphere(8)
    errs = []
    for dt in p["dts"]:
        steps = int(round(horizon / dt))
        s = flow.evolve(flow.FlowState(solutions.collapsing_sphere_eval(r0, 0.0, gs), dt=dt), steps)
        if s.halted:
            raise NumericalAbort(f"collapse reference blew up at dt={dt}")
        errs.append(abs(solutions.sphere_radius(s.cfg) / solutions.collapse_radius(r0, s.t) - 1))
    _rows(out, "rk4_error", p["dts"], errs)

    # spectral bracket: Jacobi residual under grid refinement, both topologies
    grid_res = {}
    for topo in (SPHERE, TORUS):
        vals = [jacobi_residual(*_jacobi_fields(SurfaceGrid(topo, n, n))) for n in p["grids"]]
        grid_res[topo] = vals
        _rows(out, f"jacobi_{topo}", p["grids"], vals)

    first_ratio = errs[0] / errs[1]
    out.results.update({"fuzzy_deviation": fuzzy_dev, "l1_deviation_max": l1_dev,
                        "rk4_errors": errs, "rk4_ratios": [a / b for a, b in zip(errs, errs[1:])],
                        "jacobi_residuals": grid_res})
    out.check("fuzzy_strictly_decreasing", fuzzy_dev[-1],
              passed=all(a > b for a, b in zip(fuzzy_dev, fuzzy_dev[1:])), relation="decreasing")
    out.check("fuzzy_l1_exact", l1_dev, 1e-10)
    out.check("rk4_order_ratio", abs(first_ratio - p["ratio_target"]), p["ratio_band"], relation="|ratio-16| <")
    for topo, vals in grid_res.items():
        out.check(f"jacobi_{topo}_monotone", vals[-1],
                  passed=all(a > b for a, b in zip(vals, vals[1:])), relation="decreasing")
    return out


def _rows(out: Outcome, study: str, params, values):
    prev = None
    for x, v in zip(params, values):
        out.series.append([study, x, v, float("nan") if prev is None else prev / v])
        prev = v


# ---------------------------------------------------------------- dispatch

def prepare(sc: Scenario):
    """Everything that can fail as a configuration problem, before any output."""
    rng = np.random.default_rng(sc.params["seed"])
    p = sc.params
    if sc.kind == "nahm":
        return rng, _load_nahm_init(p)
    if sc.kind == "solutions":
        return rng, _solution(p)
    if sc.kind == "susy":
        try:
            return rng, susy_snapshot(p, rng)
        except SnapshotError as exc:
            raise ConfigError(f"susy.state: {exc}") from None
    return rng, None


def execute(sc: Scenario, rng, prepared) -> Outcome:
    p = sc.params
    if sc.kind == "verify-algebra":
        return run_verify_algebra(p)
    if sc.kind == "flow":
        return run_flow(p, rng)
    if sc.kind == "nahm":
        return run_nahm(p, prepared)
    if sc.kind == "solutions":
        return run_solutions(p, prepared)
    if sc.kind == "susy":
        return run_susy(p, prepared)
    return run_convergence(p, rng)


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.10e}"
    return str(v)


def write_artifacts(sc: Scenario, outcome: Outcome) -> None:
    sc.out.mkdir(parents=True, exist_ok=True)
    status = "ok" if outcome.passed else ("numerical-abort" if outcome.aborted else "tolerance-failure")
    params = {k: (list(v) if isinstance(v, tuple) else v) for k, v in sc.params.items()}
    report = {
        "schema": 1,
        "kind": sc.kind,
        "seed": sc.params["seed"],
        "params": params,
        "status": status,
        "passed": outcome.passed,
        "abort_reason": outcome.aborted,
        "checks": outcome.checks,
        "results": outcome.results,
    }
    (sc.out / "report.json").write_text(dumps_report(report))
    if outcome.series_header is not None:
        buf = _io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(outcome.series_header)
        for row in outcome.series:
            w.writerow([_fmt(v) for v in row])
        (sc.out / "series.csv").write_text(buf.getvalue())
    for name, snap in outcome.snapshots.items():
        (sc.out / name).write_text(json.dumps(snap))


def run(sc: Scenario) -> int:
    """Run a validated scenario; returns the process exit status."""
    try:
        rng, prepared = prepare(sc)
    except ConfigError:
        raise
    try:
        outcome = execute(sc, rng, prepared)
    except (NumericalAbort, FloatingPointError, np.linalg.LinAlgError, flow.BlowUpError) as exc:
        outcome = Outcome(aborted=str(exc))
    write_artifacts(sc, outcome)
    if outcome.aborted:
        return EXIT_NUMERIC
    return EXIT_OK if outcome.passed else EXIT_TOLERANCE

"""First-order self-dual membrane flows in Euclidean time and their diagnostics.

    dX_i/dt = 1/2 C_ijk {X_j, X_k},   C = epsilon (d = 3) or psi (d = 7)
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .algebra import build_structure_constants, cross_constants
from .bracket import _pair_brackets_from, cross_brackets, pair_brackets
from .surface import FieldConfiguration

BLOWUP_THRESHOLD = 1e6


class BlowUpError(RuntimeError):
    pass


def _check_dim(d: int) -> None:
    if d not in (3, 7):
        raise ValueError(f"self-dual flows exist for d = 3 or 7 only, got d={d}")


def rhs_from_brackets(brackets: np.ndarray) -> np.ndarray:
    d = brackets.shape[0]
    _check_dim(d)
    c = cross_constants(d)
    return 0.5 * np.einsum("ijk,jk...->i...", c, brackets)


def selfdual_rhs(cfg: FieldConfiguration) -> FieldConfiguration:
    """Time derivative of each coordinate; winding parts enter through exact
    constant derivatives, so the result is always periodic."""
    _check_dim(cfg.d)
    return FieldConfiguration(cfg.grid, rhs_from_brackets(pair_brackets(cfg)))


def selfduality_residual(cfg: FieldConfiguration, xdot) -> float:
    """max |X_dot - rhs(X)| for a supplied time derivative."""
    xdot = xdot.values if isinstance(xdot, FieldConfiguration) else np.asarray(xdot)
    return float(np.abs(xdot - selfdual_rhs(cfg).values).max())


# ------------------------------------------------------------------ states

@dataclass(frozen=True)
class FlowState:
    cfg: FieldConfiguration
    t: float = 0.0
    step: int = 0
    dt: float = 1e-3
    halted: bool = False

    def __post_init__(self):
        _check_dim(self.cfg.d)

    @property
    def d(self) -> int:
        return self.cfg.d


def _rk4_step(cfg: FieldConfiguration, dt: float) -> FieldConfiguration:
    grid, winding = cfg.grid, cfg.winding

    def f(values):
        return selfdual_rhs(FieldConfiguration(grid, values, winding)).values

    x = cfg.values
    k1 = f(x)
    k2 = f(x + 0.5 * dt * k1)
    k3 = f(x + 0.5 * dt * k2)
    k4 = f(x + dt * k3)
    return cfg.with_values(x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4))


def evolve(state: FlowState, steps: int, guard: float = BLOWUP_THRESHOLD,
           observer=None, filter_cut: int | None = None) -> FlowState:
    """Classical RK4 for ``steps`` steps.

    Stops early, returning the last finite state with ``halted=True``, as soon
    as max |X| would exceed ``guard``.  ``observer(state)`` is called after
    every accepted step.

    The Euclidean flow is elliptic: a mode of degree l grows roughly like
    exp(l |X| t), so rounding noise in the top resolved modes eventually
    swamps the solution.  ``filter_cut`` discards degrees above the cut after
    every step; it is off by default.
    """
    if state.dt <= 0:
        raise ValueError("dt must be positive")
    cur = state
    for _ in range(steps):
        if cur.halted:
            break
        nxt = _rk4_step(cur.cfg, cur.dt)
        if filter_cut is not None:
            nxt = nxt.with_values(nxt.grid.lowpass(nxt.values, filter_cut))
        peak = nxt.max_abs()
        if not np.isfinite(peak) or peak > guard:
            return replace(cur, halted=True)
        cur = FlowState(nxt, cur.t + cur.dt, cur.step + 1, cur.dt)
        if observer is not None:
            observer(cur)
    return cur


def trajectory(state: FlowState, steps: int, every: int = 1,
               guard: float = BLOWUP_THRESHOLD) -> list[FlowState]:
    """Evolve and keep every ``every``-th state (initial state included)."""
    kept = [state]

    def keep(s):
        if s.step % every == 0:
            kept.append(s)

    final = evolve(state, steps, guard=guard, observer=keep)
    if final.halted or kept[-1].step != final.step:
        kept.append(final)
    return kept


# ------------------------------------------------------------- diagnostics

def _as_values(x):
    return x.values if isinstance(x, FieldConfiguration) else np.asarray(x)


def gauss_residual(state, rhs=None) -> float:
    """max |sum_i {X_i, X_dot_i}|; X_dot defaults to the self-dual rhs."""
    cfg = state.cfg if isinstance(state, FlowState) else state
    xdot = selfdual_rhs(cfg) if rhs is None else rhs
    if not isinstance(xdot, FieldConfiguration):
        xdot = FieldConfiguration(cfg.grid, _as_values(xdot))
    b = cross_brackets(cfg, xdot)
    return float(np.abs(np.einsum("ii...->...", b)).max())


def second_derivative(cfg: FieldConfiguration, xdot=None) -> np.ndarray:
    """X_ddot = 1/2 C_ijk ({X_dot_j, X_k} + {X_j, X_dot_k}) along the flow."""
    c = cross_constants(cfg.d)
    xdot = selfdual_rhs(cfg) if xdot is None else xdot
    if not isinstance(xdot, FieldConfiguration):
        xdot = FieldConfiguration(cfg.grid, _as_values(xdot))
    b = cross_brackets(xdot, cfg)          # {Xdot_j, X_k}
    sym = b - np.swapaxes(b, 0, 1)         # {Xdot_j, X_k} + {X_j, Xdot_k}
    return 0.5 * np.einsum("ijk,jk...->i...", c, sym)


def euclidean_force(cfg: FieldConfiguration) -> np.ndarray:
    """sum_k {X_k, {X_i, X_k}}."""
    grid = cfg.grid
    br = pair_brackets(cfg)                 # {X_i, X_k}
    d1, d2 = cfg.derivatives()
    b1, b2 = grid.derivatives(br)
    out = np.zeros_like(cfg.values, dtype=np.result_type(br, d1))
    for i in range(cfg.d):
        for k in range(cfg.d):
            if i == k:
                continue
            out[i] += (grid.dealiased_product(d2[k], b1[i, k])
                       - grid.dealiased_product(b2[i, k], d1[k]))
    return out


def eom_residual(state, xdot=None) -> float:
    """max |X_ddot_i - {X_k, {X_i, X_k}}| with X_ddot from the chain rule."""
    cfg = state.cfg if isinstance(state, FlowState) else state
    return float(np.abs(second_derivative(cfg, xdot) - euclidean_force(cfg)).max())


def energy_densities(cfg: FieldConfiguration) -> tuple[float, float]:
    """(int sum_i X_dot_i^2, int 1/2 sum_ij {X_i, X_j}^2) on a self-dual slice."""
    br = pair_brackets(cfg)
    xdot = rhs_from_brackets(br)
    kinetic = cfg.grid.integrate(np.sum(xdot ** 2, axis=0))
    potential = cfg.grid.integrate(0.5 * np.sum(br ** 2, axis=(0, 1)))
    return float(np.real(kinetic)), float(np.real(potential))


# -------------------------------------------------------- null vector pairs

@dataclass(frozen=True)
class NullVectorPair:
    u: np.ndarray
    v: np.ndarray

    def constraint_residuals(self) -> dict[str, float]:
        u, v = self.u, self.v
        c = cross_constants(len(u))
        cross = np.einsum("ijk,j,k->i", c, u, v)
        return {
            "u.u": float(abs(u @ u)),
            "v.v+1": float(abs(v @ v + 1)),
            "u.v": float(abs(u @ v)),
            "u-uxv": float(np.abs(u - cross).max()),
        }


class DegenerateSeedError(ValueError):
    """The seed vectors were (nearly) linearly dependent; retry with another seed."""


def make_null_pair(d: int, seed=None, e=None, n=None) -> NullVectorPair:
    """Complex u = e + i (n x e), v = -i n with e, n orthonormal and real.

    Satisfies u.u = 0, v.v = -1, u.v = 0 and u = u x v in both 3 and 7
    dimensions.  ``seed=None`` with no vectors gives the canonical pair
    u = (1, i, 0, ...), v = (0, 0, -i, ...).
    """
    _check_dim(d)
    c = np.asarray(cross_constants(d), dtype=float)
    if e is None and n is None and seed is None:
        e = np.eye(d)[0]
        n = np.eye(d)[2]
    elif e is None or n is None:
        rng = np.random.default_rng(seed)
        e = rng.normal(size=d) if e is None else np.asarray(e, dtype=float)
        n = rng.normal(size=d) if n is None else np.asarray(n, dtype=float)
    e = np.asarray(e, dtype=float)
    n = np.asarray(n, dtype=float)
    n_norm = np.linalg.norm(n)
    if n_norm < 1e-8:
        raise DegenerateSeedError("axis vector is zero")
    n = n / n_norm
    e = e - (e @ n) * n
    e_norm = np.linalg.norm(e)
    if e_norm < 1e-8:
        raise DegenerateSeedError("seed vectors are parallel")
    e = e / e_norm
    e2 = np.einsum("ijk,j,k->i", c, n, e)
    return NullVectorPair(u=e + 1j * e2, v=-1j * n)


def scalar_constraints_only_pair(d: int, seed) -> NullVectorPair:
    """A pair meeting u.u = 0, v.v = -1, u.v = 0 but not u = u x v (d = 7)."""
    _check_dim(d)
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.normal(size=(d, 3)))
    e, e2, w = q.T
    return NullVectorPair(u=e + 1j * e2, v=1j * w)


def conserved_charge(state, pair: NullVectorPair, n: int) -> complex:
    """I_n = int (u . X)^n over the surface."""
    if n < 1:
        raise ValueError("charge index n must be >= 1")
    cfg = state.cfg if isinstance(state, FlowState) else state
    if cfg.winding is not None:
        raise ValueError("charges need periodic coordinates")
    ux = np.einsum("i,i...->...", pair.u, cfg.values)
    return complex(cfg.grid.integrate(ux ** n))


def seven_dim_conservation_residual(state, pair: NullVectorPair) -> float:
    """max |d(u.X)/dt - {u.X, v.X} - 1/2 phi_jklm u_j v_k {X_l, X_m}|."""
    cfg = state.cfg if isinstance(state, FlowState) else state
    if cfg.d != 7:
        raise ValueError("the phi-corrected relation lives in 7 dimensions")
    phi = build_structure_constants().phi
    br = pair_brackets(cfg)
    lhs = np.einsum("i,i...->...", pair.u, rhs_from_brackets(br))
    uv = np.einsum("j,k,jk...->...", pair.u, pair.v, br)
    curv = 0.5 * np.einsum("jklm,j,k,lm...->...", phi, pair.u, pair.v, br)
    return float(np.abs(lhs - uv - curv).max())


def lax_residual(state, pair: NullVectorPair) -> float:
    """max |d(u.X)/dt - {u.X, v.X}| (the 3-d Lax-type relation)."""
    cfg = state.cfg if isinstance(state, FlowState) else state
    br = pair_brackets(cfg)
    lhs = np.einsum("i,i...->...", pair.u, rhs_from_brackets(br))
    uv = np.einsum("j,k,jk...->...", pair.u, pair.v, br)
    return float(np.abs(lhs - uv).max())


# ------------------------------------------------------------------ report

@dataclass(frozen=True)
class DiagnosticsReport:
    t: float
    gauss: float
    eom: float
    selfduality: float | None = None
    charges: tuple = ()
    charge_drift: tuple = ()
    conservation7: float | None = None

    def to_dict(self) -> dict:
        out = {
            "t": self.t,
            "gauss": self.gauss,
            "eom": self.eom,
            "charges": [[c.real, c.imag] for c in self.charges],
            "charge_drift": list(self.charge_drift),
        }
        if self.selfduality is not None:
            out["selfduality"] = self.selfduality
        if self.conservation7 is not None:
            out["conservation7"] = self.conservation7
        return out

    def all_finite(self) -> bool:
        vals = [self.gauss, self.eom, *self.charge_drift]
        if self.selfduality is not None:
            vals.append(self.selfduality)
        vals += [abs(c) for c in self.charges]
        if self.conservation7 is not None:
            vals.append(self.conservation7)
        return bool(np.all(np.isfinite(vals)))


def diagnose(state: FlowState, pair: NullVectorPair | None = None,
             orders=(1, 2, 3), reference_charges=None,
             xdot=None) -> DiagnosticsReport:
    """Residuals and charges at one slice.

    ``xdot`` is an independently known time derivative (e.g. from a closed
    form); when given, its distance from the self-dual rhs is reported.
    """
    cfg = state.cfg
    charges, drift = (), ()
    if pair is not None and cfg.winding is None:
        charges = tuple(conserved_charge(cfg, pair, n) for n in orders)
        if reference_charges is not None:
            drift = tuple(abs(c - c0) / max(1.0, abs(c0))
                          for c, c0 in zip(charges, reference_charges))
    cons7 = None
    if pair is not None and cfg.d == 7:
        cons7 = seven_dim_conservation_residual(cfg, pair)
    return DiagnosticsReport(
        t=state.t,
        gauss=gauss_residual(cfg),
        eom=eom_residual(cfg),
        selfduality=None if xdot is None else selfduality_residual(cfg, xdot),
        charges=charges,
        charge_drift=drift,
        conservation7=cons7,
    )

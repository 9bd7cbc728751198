"""Time-factorized sector X_i(t, sigma) = Z_ij(t) f_j(sigma).

The 7x7 matrix ODE, its diagonal reduction (a 7-d Euler-type top) and the
spatial equation f_i = 1/2 psi_ijk {f_j, f_k}.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .algebra import build_structure_constants
from .bracket import pair_brackets
from .flow import BLOWUP_THRESHOLD
from .surface import FieldConfiguration


def _psi() -> np.ndarray:
    return build_structure_constants().psi.astype(float)


def z_rhs(z: np.ndarray) -> np.ndarray:
    """dZ_ij/dt = 1/6 psi_ikl psi_jmn Z_km Z_ln."""
    z = np.asarray(z, dtype=float)
    if z.shape != (7, 7):
        raise ValueError(f"Z must be 7x7, got {z.shape}")
    psi = _psi()
    return np.einsum("ikl,jmn,km,ln->ij", psi, psi, z, z) / 6.0


def diagonal_top_rhs(r: np.ndarray) -> np.ndarray:
    """dR_i/dt = 1/6 sum_kl psi_ikl^2 R_k R_l.

    Each index sits in three triples, so e.g. dR_1/dt = (R2 R3 + R5 R6 + R4 R7)/3.
    """
    r = np.asarray(r, dtype=float)
    if r.shape != (7,):
        raise ValueError(f"R must be a 7-vector, got {r.shape}")
    sq = _psi() ** 2
    return np.einsum("ikl,k,l->i", sq, r, r) / 6.0


def ansatz_residual(z: np.ndarray, zdot: np.ndarray) -> float:
    """max over (i, l, n) of |Zdot_im psi_mln - psi_ijk Z_jl Z_kn|."""
    psi = _psi()
    lhs = np.einsum("im,mln->iln", zdot, psi)
    rhs = np.einsum("ijk,jl,kn->iln", psi, z, z)
    return float(np.abs(lhs - rhs).max())


def f_equation_residual(f: FieldConfiguration) -> float:
    """max |f_i - 1/2 psi_ijk {f_j, f_k}|; a 3-component f is embedded first."""
    if f.d == 3:
        f = f.embed(7)
    if f.d != 7:
        raise ValueError(f"f must have 3 or 7 components, got {f.d}")
    br = pair_brackets(f)
    rhs = 0.5 * np.einsum("ijk,jk...->i...", _psi(), br)
    return float(np.abs(f.values - rhs).max())


def factorized_configuration(z: np.ndarray, f: FieldConfiguration) -> FieldConfiguration:
    """X_i = Z_ij f_j."""
    if f.d == 3:
        f = f.embed(7)
    return f.with_values(np.einsum("ij,j...->i...", z, f.values))


# ------------------------------------------------------------ integration

@dataclass(frozen=True)
class OdeState:
    """Z matrix (mode 'matrix') or top vector R (mode 'diagonal') at time t."""
    y: np.ndarray
    t: float = 0.0
    step: int = 0
    dt: float = 1e-3
    halted: bool = False

    @property
    def mode(self) -> str:
        return "matrix" if np.ndim(self.y) == 2 else "diagonal"


def _ode_rhs(y: np.ndarray) -> np.ndarray:
    return z_rhs(y) if y.ndim == 2 else diagonal_top_rhs(y)


def ode_evolve(state: OdeState, steps: int, guard: float = BLOWUP_THRESHOLD,
               observer=None) -> OdeState:
    """RK4 with the same blow-up semantics as the membrane flow."""
    if state.dt <= 0:
        raise ValueError("dt must be positive")
    cur = replace(state, y=np.asarray(state.y, dtype=float))
    h = cur.dt
    for _ in range(steps):
        if cur.halted:
            break
        y = cur.y
        k1 = _ode_rhs(y)
        k2 = _ode_rhs(y + 0.5 * h * k1)
        k3 = _ode_rhs(y + 0.5 * h * k2)
        k4 = _ode_rhs(y + h * k3)
        nxt = y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        peak = np.abs(nxt).max()
        if not np.isfinite(peak) or peak > guard:
            return replace(cur, halted=True)
        cur = OdeState(nxt, cur.t + h, cur.step + 1, h)
        if observer is not None:
            observer(cur)
    return cur


def equal_component_solution(c: float, t) -> np.ndarray:
    """Closed form r(t) = c / (1 - c t) of dr/dt = r^2."""
    t = np.asarray(t, dtype=float)
    if np.any(c * t >= 1):
        raise ValueError("time at or beyond the blow-up point 1/c")
    return c / (1.0 - c * t)


def off_diagonal_norm(z: np.ndarray) -> float:
    return float(np.abs(z - np.diag(np.diag(z))).max())

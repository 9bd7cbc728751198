"""Closed-form self-dual membranes and their residual checks.

* string-like 7-d solutions on the torus, independent of sigma2;
* the axisymmetric sphere solution whose profile obeys the continuous Toda equation;
* the collapsing round sphere of the 3-d system.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import build_structure_constants
from .flow import selfduality_residual
from .surface import SPHERE, TORUS, FieldConfiguration, SurfaceGrid, sphere_harmonics_l1


def _psi() -> np.ndarray:
    return build_structure_constants().psi.astype(float)


# ------------------------------------------------------------ string sector

def string_momentum(a, b) -> np.ndarray:
    """P_i = psi_ijk A_j B_k, orthogonal to A and to B."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.einsum("ijk,j,k->i", _psi(), a, b)


@dataclass(frozen=True)
class MSpectrum:
    m: np.ndarray               # M_ij = psi_ijk B_k
    planes: tuple               # three (p, q) pairs with M p = -|B| q, M q = |B| p
    kernel: np.ndarray          # B / |B|
    eigenvalues: np.ndarray     # numerical eigenvalues of M, sorted by imaginary part
    square_residual: float      # max |M^2 + B^2 I - B B^T|

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.m @ self.planes[0][0]))

    def plane_residual(self) -> float:
        """How far each span{p, q} is from being M-invariant with eigenvalues +-i|B|."""
        bn = self.norm
        worst = 0.0
        for p, q in self.planes:
            worst = max(worst, np.abs(self.m @ p + bn * q).max(), np.abs(self.m @ q - bn * p).max())
        return float(worst)

    def orthonormality_residual(self) -> float:
        basis = np.array([v for pq in self.planes for v in pq] + [self.kernel])
        return float(np.abs(basis @ basis.T - np.eye(7)).max())


def m_matrix(b) -> MSpectrum:
    """The rotation generator M_ij = psi_ijk B_k and its invariant planes.

    On the complement of B, M acts as |B| times a complex structure, so each
    unit p orthogonal to B pairs with q = -M p / |B|.  Planes are seeded from
    the coordinate axes in order, which gives the coordinate-aligned planes
    whenever B is itself an axis.
    """
    b = np.asarray(b, dtype=float)
    bn = np.linalg.norm(b)
    if bn == 0:
        raise ValueError("B must be nonzero")
    m = np.einsum("ijk,k->ij", _psi(), b)
    khat = b / bn
    span = [khat]
    planes = []
    for e in np.eye(7):
        if len(planes) == 3:
            break
        p = e - sum((e @ s) * s for s in span)
        if np.linalg.norm(p) < 1e-6:
            continue
        p = p / np.linalg.norm(p)
        q = -(m @ p) / bn
        planes.append((p, q))
        span += [p, q]
    ev = np.linalg.eigvals(m)
    ev = ev[np.argsort(ev.imag)]
    sq = float(np.abs(m @ m + bn ** 2 * np.eye(7) - np.outer(b, b)).max())
    return MSpectrum(m, tuple(planes), khat, ev, sq)


@dataclass(frozen=True)
class StringSolutionSpec:
    """Winding (A, B) and profile coefficients.

    ``profiles[n]`` maps a wavenumber k to the complex coefficient of
    exp(i k w) in F_n(w); n = 0, 1, 2 labels the three invariant planes of M.
    ``axial`` is the constant offset along B.
    """
    a: tuple
    b: tuple
    profiles: tuple = ({}, {}, {})
    axial: float = 0.0

    def __post_init__(self):
        b = np.asarray(self.b, dtype=float)
        if b.shape != (7,) or np.asarray(self.a).shape != (7,):
            raise ValueError("A and B must be 7-vectors")
        if not np.any(b):
            raise ValueError("B must be nonzero")
        if len(self.profiles) != 3:
            raise ValueError("need exactly three profile series")
        for prof in self.profiles:
            for k in prof:
                if int(k) != k:
                    raise ValueError("profile wavenumbers must be integers (periodic in sigma1)")


def _profile(coeffs: dict, w: np.ndarray, derivative: bool = False) -> np.ndarray:
    out = np.zeros_like(w, dtype=complex)
    for k, c in coeffs.items():
        k = int(k)
        term = complex(c) * np.exp(1j * k * w)
        out += (1j * k) * term if derivative else term
    return out


def _string_parts(spec: StringSolutionSpec, grid: SurfaceGrid, t: float, derivative: bool):
    if grid.topology != TORUS:
        raise ValueError("string solutions live on the torus")
    b = np.asarray(spec.b, dtype=float)
    bn = np.linalg.norm(b)
    ms = m_matrix(b)
    w = grid.sigma1 + 1j * bn * t
    vals = np.zeros((7,) + grid.shape)
    for (p, q), coeffs in zip(ms.planes, spec.profiles):
        wn = _profile(coeffs, w, derivative)
        if derivative:
            wn = 1j * bn * wn        # d/dt of F(sigma1 + i|B|t)
        vals += p[:, None, None] * wn.real + q[:, None, None] * wn.imag
    return vals, ms


def string_solution_eval(spec: StringSolutionSpec, grid: SurfaceGrid, t: float) -> FieldConfiguration:
    """X = sum_n (Re W_n p_n + Im W_n q_n) + c B/|B| + P t + A sigma1 + B sigma2,
    with W_n = F_n(sigma1 + i|B|t) and P_i = psi_ijk B_j A_k."""
    vals, ms = _string_parts(spec, grid, t, derivative=False)
    a = np.asarray(spec.a, dtype=float)
    b = np.asarray(spec.b, dtype=float)
    drift = string_momentum(b, a)
    vals = vals + (spec.axial * ms.kernel + drift * t)[:, None, None]
    return FieldConfiguration(grid, vals, (a, b))


def string_solution_velocity(spec: StringSolutionSpec, grid: SurfaceGrid, t: float) -> np.ndarray:
    vals, _ = _string_parts(spec, grid, t, derivative=True)
    drift = string_momentum(np.asarray(spec.b, float), np.asarray(spec.a, float))
    return vals + drift[:, None, None]


def string_reduction_residual(cfg: FieldConfiguration, xdot: np.ndarray) -> float:
    """max |X_dot_i - psi_ijk B_j dX_k/dsigma1| for a sigma2-independent torus field."""
    if cfg.winding is None:
        raise ValueError("the reduction needs the winding vector B")
    _, b = cfg.winding
    d1, _ = cfg.derivatives()
    rhs = np.einsum("ijk,j,k...->i...", _psi(), b, d1)
    return float(np.abs(np.asarray(xdot) - rhs).max())


# ------------------------------------------------------------ Toda sector

HYPERBOLIC = "hyperbolic"
TRIGONOMETRIC = "trigonometric"


@dataclass(frozen=True)
class TodaSolutionSpec:
    kappa: float = 1.0
    t0: float = 1.0
    variant: str = HYPERBOLIC

    def __post_init__(self):
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")
        if self.variant not in (HYPERBOLIC, TRIGONOMETRIC):
            raise ValueError(f"unknown variant {self.variant!r}")

    def coefficients(self, t: float) -> tuple[float, float]:
        """(a, b) with X = (a f1, a f2, b f3); they obey da/dt = a b, db/dt = a^2."""
        tau = self.kappa * (self.t0 - t)
        if self.variant == HYPERBOLIC:
            if tau <= 0:
                raise ValueError(f"t = {t} is not before the blow-up time t0 = {self.t0}")
            return self.kappa / np.sinh(tau), self.kappa / np.tanh(tau)
        if not 0 < tau < np.pi:
            raise ValueError(f"t = {t} outside the regular window ({self.t0 - np.pi / self.kappa}, {self.t0})")
        return self.kappa / np.sin(tau), self.kappa / np.tan(tau)


def _sphere_only(grid: SurfaceGrid) -> None:
    if grid.topology != SPHERE:
        raise ValueError("this solution lives on the sphere")


def toda_eval(spec: TodaSolutionSpec, grid: SurfaceGrid, t: float) -> FieldConfiguration:
    """X1 + i X2 = R e^{i sigma2}, X3 = z with R = a sin(theta), z = b cos(theta)."""
    _sphere_only(grid)
    a, b = spec.coefficients(t)
    f = sphere_harmonics_l1(grid)
    return FieldConfiguration(grid, np.array([a * f[0], a * f[1], b * f[2]]))


def toda_velocity(spec: TodaSolutionSpec, grid: SurfaceGrid, t: float) -> np.ndarray:
    _sphere_only(grid)
    a, b = spec.coefficients(t)
    f = sphere_harmonics_l1(grid)
    return np.array([a * b * f[0], a * b * f[1], a * a * f[2]])


# central-difference weights for the second derivative, 8th order
_D2_OFFSETS = np.arange(-4, 5)
_D2_WEIGHTS = np.array([-1 / 560, 8 / 315, -1 / 5, 8 / 5, -205 / 72, 8 / 5, -1 / 5, 8 / 315, -1 / 560])


def toda_profile(spec: TodaSolutionSpec, grid: SurfaceGrid, t: float) -> np.ndarray:
    """e^Psi = R^2 on the axisymmetric slice, a function of sigma1 only."""
    x = toda_eval(spec, grid, t).values
    return (x[0] ** 2 + x[1] ** 2)[:, 0]


def toda_residual(spec: TodaSolutionSpec, grid: SurfaceGrid, t: float, h: float = 1e-2) -> float:
    """max |d^2 Psi/dt^2 + d^2 e^Psi/dsigma1^2| with Psi = log R^2.

    The time derivative is an 8th-order finite difference of the generated
    profile; the sigma1 derivative is spectral.
    """
    _sphere_only(grid)
    logs = np.array([np.log(toda_profile(spec, grid, t + k * h)) for k in _D2_OFFSETS])
    psi_tt = np.tensordot(_D2_WEIGHTS, logs, axes=1) / h ** 2
    e_psi = np.broadcast_to(toda_profile(spec, grid, t)[:, None], grid.shape)
    d1, _ = grid.derivatives(e_psi)
    d11, _ = grid.derivatives(d1)
    return float(np.abs(psi_tt + d11[:, 0]).max())


# ------------------------------------------------------------ round sphere

def collapse_radius(r0: float, t):
    if r0 <= 0:
        raise ValueError("r0 must be positive")
    t = np.asarray(t, dtype=float)
    if np.any(r0 * t >= 1):
        raise ValueError(f"t beyond the blow-up time 1/r0 = {1 / r0}")
    return r0 / (1.0 - r0 * t)


def collapsing_sphere_eval(r0: float, t: float, grid: SurfaceGrid) -> FieldConfiguration:
    """X_i = r(t) f_i, r = r0 / (1 - r0 t)."""
    _sphere_only(grid)
    return FieldConfiguration(grid, float(collapse_radius(r0, t)) * sphere_harmonics_l1(grid))


def collapsing_sphere_velocity(r0: float, t: float, grid: SurfaceGrid) -> np.ndarray:
    _sphere_only(grid)
    return float(collapse_radius(r0, t)) ** 2 * sphere_harmonics_l1(grid)


def sphere_radius(cfg: FieldConfiguration) -> float:
    """Mean |X| over the surface, the radius of a round configuration."""
    r = np.sqrt(np.sum(np.abs(cfg.values) ** 2, axis=0))
    return float(cfg.grid.integrate(r) / cfg.grid.total_area())


def solution_residual(cfg: FieldConfiguration, xdot: np.ndarray) -> float:
    return selfduality_residual(cfg, xdot)

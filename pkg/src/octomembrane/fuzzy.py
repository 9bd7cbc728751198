"""Fuzzy-sphere regularization: functions on S^2 -> N x N Hermitian matrices.

A band-limited function is expanded in Y_lm and each harmonic is sent to the
spin-l tensor operator T_lm built from the spin s = (N-1)/2 generators.  The
map is fixed on the highest weight by (x1 + i x2)^l -> (J_+/s)^l and extended
to the other m by the adjoint lowering operator, so it intertwines rotations
and sends the unit-sphere coordinates f_i to J_i / s.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import factorial, pi, sqrt

import numpy as np

from .surface import SPHERE, SurfaceField

HERMITIAN_TOL = 1e-13


class BandLimitError(ValueError):
    def __init__(self, modes):
        self.modes = modes
        super().__init__(f"field not band-limited to l < N; truncated modes (l, m): {modes}")


@dataclass(frozen=True, eq=False)
class MatrixConfiguration:
    n: int
    mats: np.ndarray   # (d, N, N) complex

    def __post_init__(self):
        m = np.asarray(self.mats, dtype=complex)
        if m.ndim != 3 or m.shape[1:] != (self.n, self.n):
            raise ValueError(f"expected (d, {self.n}, {self.n}) matrices, got {m.shape}")
        herm = np.abs(m - np.conj(np.swapaxes(m, 1, 2))).max() if m.size else 0.0
        if herm > HERMITIAN_TOL * max(1.0, np.abs(m).max()):
            raise ValueError(f"matrices are not Hermitian (deviation {herm:.3e})")
        object.__setattr__(self, "mats", m)

    @property
    def d(self) -> int:
        return self.mats.shape[0]

    def traceless(self, tol: float = 1e-12) -> bool:
        return bool(np.all(np.abs(np.trace(self.mats, axis1=1, axis2=2)) < tol))


@lru_cache(maxsize=None)
def spin_matrices(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(J1, J2, J3) for spin s = (n-1)/2 in the |s, m> basis, m descending."""
    s = (n - 1) / 2
    m = s - np.arange(n)
    jp = np.zeros((n, n), dtype=complex)
    for k in range(1, n):
        # J_+ |s, m_k> = sqrt(s(s+1) - m_k(m_k+1)) |s, m_k + 1>
        jp[k - 1, k] = np.sqrt(s * (s + 1) - m[k] * (m[k] + 1))
    jm = jp.conj().T
    j1 = (jp + jm) / 2
    j2 = (jp - jm) / 2j
    j3 = np.diag(m).astype(complex)
    for a in (j1, j2, j3):
        a.setflags(write=False)
    return j1, j2, j3


def coordinate_matrices(n: int) -> np.ndarray:
    """x_hat_i = J_i / s, the images of the unit-sphere coordinates."""
    if n < 2:
        raise ValueError("need N >= 2")
    s = (n - 1) / 2
    return np.array(spin_matrices(n)) / s


@lru_cache(maxsize=None)
def _tensor_operators(n: int) -> dict[tuple[int, int], np.ndarray]:
    """Images T_lm of the Condon-Shortley harmonics Y_lm for l < N."""
    j1, j2, j3 = spin_matrices(n)
    s = (n - 1) / 2
    jp = j1 + 1j * j2
    jm = j1 - 1j * j2
    out = {}
    for l in range(n):
        # Y_ll = (-1)^l sqrt((2l+1)!/(4 pi)) / (2^l l!) (x1 + i x2)^l
        c = (-1) ** l * sqrt(factorial(2 * l + 1) / (4 * pi)) / (2 ** l * factorial(l))
        t = c * np.linalg.matrix_power(jp / s, l) if l else c * np.eye(n, dtype=complex)
        out[(l, l)] = t
        for m in range(l, -l, -1):
            t = (jm @ t - t @ jm) / sqrt((l + m) * (l - m + 1))
            out[(l, m - 1)] = t
    for v in out.values():
        v.setflags(write=False)
    return out


def tensor_operator(n: int, l: int, m: int) -> np.ndarray:
    if not (0 <= l < n and -l <= m <= l):
        raise ValueError(f"no tensor operator T_{l}{m} at N={n}")
    return _tensor_operators(n)[(l, m)]


def fuzzy_map(f: SurfaceField, n: int, tol: float = 1e-10) -> np.ndarray:
    """Matrix image of a band-limited sphere field (l < n)."""
    if f.grid.topology != SPHERE:
        raise ValueError("the fuzzy map is defined on the sphere only")
    coeffs = f.grid.analyze(f.values)
    scale = max(1.0, max(float(np.abs(c).max()) for c in coeffs.values()))
    out = np.zeros((n, n), dtype=complex)
    dropped = []
    for m, cm in coeffs.items():
        for idx, a in enumerate(cm):
            l = abs(m) + idx
            if l >= n:
                if abs(a) > tol * scale:
                    dropped.append((l, m))
                continue
            if a != 0:
                out += a * _tensor_operators(n)[(l, m)]
    if dropped:
        raise BandLimitError(sorted(dropped))
    if not np.iscomplexobj(f.values) or np.abs(f.values.imag).max() == 0:
        out = 0.5 * (out + out.conj().T)
    return out


def fuzzy_map_configuration(cfg, n: int) -> MatrixConfiguration:
    return MatrixConfiguration(n, np.array([fuzzy_map(c, n) for c in cfg.components]))


def matrix_bracket(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Finite-N bracket -i s [A, B] with s = (N - 1)/2."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix bracket needs equal square shapes, got {a.shape} and {b.shape}")
    s = (a.shape[0] - 1) / 2
    return -1j * s * (a @ b - b @ a)


def hs_norm(a: np.ndarray) -> float:
    """Hilbert-Schmidt norm scaled to match the L2 norm on the unit sphere."""
    n = a.shape[0]
    return float(np.sqrt(4 * pi / n * np.real(np.trace(a.conj().T @ a))))


def bracket_deviation(f: SurfaceField, g: SurfaceField, n: int) -> float:
    """|| map({f, g}) - bracket_N(map f, map g) ||, the finite-N error of the bracket."""
    from .bracket import poisson_bracket

    lhs = fuzzy_map(poisson_bracket(f, g), n)
    rhs = matrix_bracket(fuzzy_map(f, n), fuzzy_map(g, n))
    return hs_norm(lhs - rhs)

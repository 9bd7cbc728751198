"""Discretized membrane parameter surfaces and fields living on them.

Coordinates are ``(sigma1, sigma2)``.  On the sphere ``sigma1 = cos(theta)``
sampled at Gauss-Legendre nodes and ``sigma2 = phi`` sampled uniformly, so
the area element is ``d sigma1 d sigma2`` and the Poisson bracket is the
flat canonical one.  On the torus both angles are uniform on ``[0, 2 pi)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

SPHERE = "sphere"
TORUS = "torus"
TOPOLOGIES = (SPHERE, TORUS)


class GridMismatchError(ValueError):
    pass


def _legendre_values(lmax: int, m: int, z: np.ndarray) -> np.ndarray:
    s = np.sqrt(1.0 - z * z)
    nl = lmax - m + 1
    p = np.zeros((max(nl, 0), z.size))
    if nl <= 0:
        return p
    pmm = np.full_like(z, np.sqrt(0.5))
    for k in range(1, m + 1):
        pmm = -np.sqrt((2 * k + 1) / (2 * k)) * s * pmm
    p[0] = pmm
    if nl > 1:
        p[1] = np.sqrt(2 * m + 3) * z * pmm
    for idx in range(2, nl):
        l = m + idx
        a = np.sqrt((4 * l * l - 1) / (l * l - m * m))
        b = np.sqrt(((l - 1) ** 2 - m * m) / (4 * (l - 1) ** 2 - 1))
        p[idx] = a * (z * p[idx - 1] - b * p[idx - 2])
    return p


def normalized_legendre(lmax: int, m: int, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Normalized associated Legendre functions and their z-derivatives.

    Returns arrays of shape ``(lmax - m + 1, len(z))`` holding
    ``Pbar_l^m(z)`` for ``l = m..lmax`` with ``int_{-1}^{1} Pbar^2 dz = 1``
    and the Condon-Shortley phase.  ``z`` must avoid the poles.
    """
    z = np.asarray(z, dtype=float)
    s = np.sqrt(1.0 - z * z)
    p = _legendre_values(lmax, m, z)
    dp = np.zeros_like(p)
    # d/dz = -(1/sin theta) d/dtheta with the theta-derivative taken from the
    # Condon-Shortley m -/+ 1 ladder: one division by sin theta instead of sin^2 theta.
    lower = _legendre_values(lmax, m - 1, z) if m > 0 else None
    upper = _legendre_values(lmax, m + 1, z)
    for idx in range(len(p)):
        l = m + idx
        up = upper[idx - 1] if idx >= 1 else 0.0
        b = np.sqrt((l - m) * (l + m + 1))
        if m > 0:
            a = np.sqrt((l + m) * (l - m + 1))
            dtheta = 0.5 * (b * up - a * lower[idx + 1])
        else:
            dtheta = b * up
        dp[idx] = -dtheta / s
    return p, dp


@dataclass(frozen=True, eq=False)
class SurfaceGrid:
    topology: str
    n1: int
    n2: int

    def __post_init__(self):
        if self.topology not in TOPOLOGIES:
            raise ValueError(f"unknown topology {self.topology!r}")
        if self.n1 < 2 or self.n2 < 2:
            raise ValueError("grid needs at least 2 points per direction")
        if self.topology == TORUS and (self.n1 % 2 or self.n2 % 2):
            raise ValueError("torus grid sizes must be even")

    @classmethod
    def sphere(cls, n1: int, n2: int | None = None) -> "SurfaceGrid":
        return cls(SPHERE, n1, n1 if n2 is None else n2)

    @classmethod
    def torus(cls, n1: int, n2: int | None = None) -> "SurfaceGrid":
        return cls(TORUS, n1, n1 if n2 is None else n2)

    def __eq__(self, other):
        return (isinstance(other, SurfaceGrid) and self.topology == other.topology
                and self.n1 == other.n1 and self.n2 == other.n2)

    def __hash__(self):
        return hash((self.topology, self.n1, self.n2))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n1, self.n2)

    @cached_property
    def _gauss(self):
        return np.polynomial.legendre.leggauss(self.n1)

    @cached_property
    def nodes1(self) -> np.ndarray:
        if self.topology == SPHERE:
            return self._gauss[0]
        return 2 * np.pi * np.arange(self.n1) / self.n1

    @cached_property
    def nodes2(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.n2) / self.n2

    @cached_property
    def weights(self) -> np.ndarray:
        """Quadrature weights of shape (n1, n2)."""
        if self.topology == SPHERE:
            w1 = self._gauss[1]
        else:
            w1 = np.full(self.n1, 2 * np.pi / self.n1)
        return np.outer(w1, np.full(self.n2, 2 * np.pi / self.n2))

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.nodes1, self.nodes2, indexing="ij")

    @property
    def sigma1(self) -> np.ndarray:
        return self.mesh[0]

    @property
    def sigma2(self) -> np.ndarray:
        return self.mesh[1]

    # -- sphere helpers ----------------------------------------------------
    @property
    def lmax(self) -> int:
        return self.n1 - 1

    @property
    def mmax(self) -> int:
        """Largest |m| resolved by both the Legendre and Fourier directions."""
        return min(self.lmax, self.n2 // 2 - 1)

    @cached_property
    def mode_numbers(self) -> np.ndarray:
        return np.rint(np.fft.fftfreq(self.n2, d=1.0 / self.n2)).astype(int)

    @cached_property
    def legendre_tables(self) -> dict[int, tuple[np.ndarray, np.ndarray]]:
        z = self.nodes1
        return {m: normalized_legendre(self.lmax, m, z) for m in range(self.mmax + 1)}

    @cached_property
    def _sphere_operators(self):
        w = self._gauss[1]
        proj, diff = {}, {}
        for m, (p, dp) in self.legendre_tables.items():
            pw = p * w
            proj[m] = p.T @ pw
            diff[m] = dp.T @ pw
        return proj, diff

    # -- spectral transforms ------------------------------------------------
    def analyze(self, values: np.ndarray) -> dict[int, np.ndarray]:
        """Spherical-harmonic coefficients keyed by m, each of length lmax-|m|+1.

        Coefficients refer to Y_lm = Pbar_l^|m|(cos theta) e^{i m phi}/sqrt(2 pi)
        for m >= 0, and Y_l,-m = (-1)^m conj(Y_lm).
        """
        if self.topology != SPHERE:
            raise ValueError("spherical-harmonic analysis needs a sphere grid")
        values = np.asarray(values, dtype=complex)
        if values.shape != self.shape:
            raise GridMismatchError(f"field shape {values.shape} does not match grid {self.shape}")
        fhat = np.fft.fft(values, axis=-1)
        w = self._gauss[1]
        scale = 2 * np.pi / self.n2 / np.sqrt(2 * np.pi)
        out = {}
        for idx, m in enumerate(self.mode_numbers):
            am = abs(m)
            if am > self.mmax:
                continue
            p, _ = self.legendre_tables[am]
            coeff = ((p * w) @ fhat[:, idx]) * scale
            if m < 0:
                coeff = coeff * (-1) ** am
            out[int(m)] = coeff
        return out

    def derivatives(self, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Spectral (d/d sigma1, d/d sigma2) of periodic/band-limited data.

        ``values`` may carry leading batch axes; the last two axes are the grid.
        """
        values = np.asarray(values)
        if values.shape[-2:] != self.shape:
            raise GridMismatchError(f"field shape {values.shape[-2:]} does not match grid {self.shape}")
        real = not np.iscomplexobj(values)
        if self.topology == TORUS:
            d1, d2 = self._torus_derivatives(values)
        else:
            d1, d2 = self._sphere_derivatives(values)
        if real:
            return d1.real, d2.real
        return d1, d2

    def _torus_derivatives(self, values):
        fhat = np.fft.fft2(values, axes=(-2, -1))
        k1 = np.fft.fftfreq(self.n1, d=1.0 / self.n1)
        k2 = np.fft.fftfreq(self.n2, d=1.0 / self.n2)
        k1 = np.where(np.abs(k1) == self.n1 // 2, 0.0, k1)
        k2 = np.where(np.abs(k2) == self.n2 // 2, 0.0, k2)
        d1 = np.fft.ifft2(1j * k1[:, None] * fhat, axes=(-2, -1))
        d2 = np.fft.ifft2(1j * k2[None, :] * fhat, axes=(-2, -1))
        return d1, d2

    def _sphere_derivatives(self, values):
        fhat = np.fft.fft(values.astype(complex), axis=-1)
        d1hat = np.zeros_like(fhat)
        d2hat = np.zeros_like(fhat)
        proj, diff = self._sphere_operators
        for idx, m in enumerate(self.mode_numbers):
            am = abs(m)
            if am > self.mmax:
                continue
            col = fhat[..., :, idx]
            d1hat[..., :, idx] = col @ diff[am].T
            d2hat[..., :, idx] = 1j * m * (col @ proj[am].T)
        return np.fft.ifft(d1hat, axis=-1), np.fft.ifft(d2hat, axis=-1)

    def project(self, values: np.ndarray) -> np.ndarray:
        """Orthogonal projection onto the resolved band-limited space."""
        values = np.asarray(values)
        real = not np.iscomplexobj(values)
        if self.topology == TORUS:
            fhat = np.fft.fft2(values, axes=(-2, -1))
            k1 = np.abs(np.fft.fftfreq(self.n1, d=1.0 / self.n1))
            k2 = np.abs(np.fft.fftfreq(self.n2, d=1.0 / self.n2))
            mask = (k1[:, None] < self.n1 // 2) & (k2[None, :] < self.n2 // 2)
            out = np.fft.ifft2(fhat * mask, axes=(-2, -1))
        else:
            fhat = np.fft.fft(values.astype(complex), axis=-1)
            ohat = np.zeros_like(fhat)
            proj, _ = self._sphere_operators
            for idx, m in enumerate(self.mode_numbers):
                if abs(m) <= self.mmax:
                    ohat[..., :, idx] = fhat[..., :, idx] @ proj[abs(m)].T
            out = np.fft.ifft(ohat, axis=-1)
        return out.real if real else out

    def lowpass(self, values: np.ndarray, cut: int) -> np.ndarray:
        """Keep degrees l <= cut (sphere) or wavenumbers |k1|, |k2| <= cut (torus)."""
        values = np.asarray(values)
        real = not np.iscomplexobj(values)
        if self.topology == TORUS:
            fhat = np.fft.fft2(values, axes=(-2, -1))
            k1 = np.abs(np.fft.fftfreq(self.n1, d=1.0 / self.n1))
            k2 = np.abs(np.fft.fftfreq(self.n2, d=1.0 / self.n2))
            mask = (k1[:, None] <= cut) & (k2[None, :] <= cut)
            out = np.fft.ifft2(fhat * mask, axes=(-2, -1))
        else:
            w = self._gauss[1]
            fhat = np.fft.fft(values.astype(complex), axis=-1)
            ohat = np.zeros_like(fhat)
            for idx, m in enumerate(self.mode_numbers):
                am = abs(m)
                if am > min(cut, self.mmax):
                    continue
                p = self.legendre_tables[am][0][: cut - am + 1]
                ohat[..., :, idx] = fhat[..., :, idx] @ (p.T @ (p * w)).T
            out = np.fft.ifft(ohat, axis=-1)
        return out.real if real else out

    def dealiased_product(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Pointwise product; on the torus evaluated on a 3/2-padded grid."""
        if self.topology == SPHERE:
            return a * b
        return _padded_product(a, b, self.n1, self.n2)

    def integrate(self, values: np.ndarray):
        values = np.asarray(values)
        if values.shape[-2:] != self.shape:
            raise GridMismatchError(f"field shape {values.shape[-2:]} does not match grid {self.shape}")
        return np.sum(values * self.weights, axis=(-2, -1))

    def total_area(self) -> float:
        return float(self.weights.sum())


def _pad_spectrum(fhat, n1, n2, m1, m2):
    out = np.zeros(fhat.shape[:-2] + (m1, m2), dtype=complex)
    h1, h2 = n1 // 2, n2 // 2
    rows = np.r_[0:h1, m1 - h1 + 1:m1]
    src_rows = np.r_[0:h1, n1 - h1 + 1:n1]
    cols = np.r_[0:h2, m2 - h2 + 1:m2]
    src_cols = np.r_[0:h2, n2 - h2 + 1:n2]
    out[..., rows[:, None], cols[None, :]] = fhat[..., src_rows[:, None], src_cols[None, :]]
    return out


def _truncate_spectrum(ghat, n1, n2, m1, m2):
    out = np.zeros(ghat.shape[:-2] + (n1, n2), dtype=complex)
    h1, h2 = n1 // 2, n2 // 2
    rows = np.r_[0:h1, m1 - h1 + 1:m1]
    dst_rows = np.r_[0:h1, n1 - h1 + 1:n1]
    cols = np.r_[0:h2, m2 - h2 + 1:m2]
    dst_cols = np.r_[0:h2, n2 - h2 + 1:n2]
    out[..., dst_rows[:, None], dst_cols[None, :]] = ghat[..., rows[:, None], cols[None, :]]
    return out


def _padded_product(a, b, n1, n2):
    real = not (np.iscomplexobj(a) or np.iscomplexobj(b))
    m1, m2 = 3 * n1 // 2, 3 * n2 // 2
    fa = _pad_spectrum(np.fft.fft2(a, axes=(-2, -1)), n1, n2, m1, m2)
    fb = _pad_spectrum(np.fft.fft2(b, axes=(-2, -1)), n1, n2, m1, m2)
    scale = (m1 * m2) / (n1 * n2)
    pa = np.fft.ifft2(fa, axes=(-2, -1)) * scale
    pb = np.fft.ifft2(fb, axes=(-2, -1)) * scale
    ghat = np.fft.fft2(pa * pb, axes=(-2, -1)) / scale
    out = np.fft.ifft2(_truncate_spectrum(ghat, n1, n2, m1, m2), axes=(-2, -1))
    return out.real if real else out


# ------------------------------------------------------------------ fields

@dataclass(frozen=True, eq=False)
class SurfaceField:
    """Scalar field on a grid, optionally with an affine part on the torus.

    The represented function is ``values + slope[0]*sigma1 + slope[1]*sigma2``;
    the affine part is never sampled.
    """
    grid: SurfaceGrid
    values: np.ndarray
    slope: tuple = (0.0, 0.0)

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape != self.grid.shape:
            raise GridMismatchError(f"values of shape {v.shape} on a {self.grid.shape} grid")
        if self.grid.topology == SPHERE and any(s != 0 for s in self.slope):
            raise ValueError("affine (winding) parts only exist on the torus")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: SurfaceGrid, fn) -> "SurfaceField":
        return cls(grid, np.asarray(fn(grid.sigma1, grid.sigma2)))

    @classmethod
    def affine(cls, grid: SurfaceGrid, a: float, b: float, offset: float = 0.0) -> "SurfaceField":
        return cls(grid, np.full(grid.shape, offset, dtype=float), (a, b))

    def derivatives(self) -> tuple[np.ndarray, np.ndarray]:
        d1, d2 = self.grid.derivatives(self.values)
        return d1 + self.slope[0], d2 + self.slope[1]

    def __add__(self, other):
        _same_grid(self, other)
        return SurfaceField(self.grid, self.values + other.values,
                            (self.slope[0] + other.slope[0], self.slope[1] + other.slope[1]))

    def __sub__(self, other):
        return self + other * -1.0

    def __mul__(self, c):
        return SurfaceField(self.grid, self.values * c, (self.slope[0] * c, self.slope[1] * c))

    __rmul__ = __mul__

    def max_abs(self) -> float:
        return float(np.abs(self.values).max())


def _same_grid(*fields):
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise GridMismatchError(f"fields live on different grids: {g} vs {f.grid}")
    return g


@dataclass(frozen=True, eq=False)
class FieldConfiguration:
    """d membrane coordinates on one grid, stored as an array (d, n1, n2).

    ``winding = (A, B)`` adds the non-periodic part ``A_i sigma1 + B_i sigma2``
    to component i (torus only).
    """
    grid: SurfaceGrid
    values: np.ndarray
    winding: tuple | None = None

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 3 or v.shape[1:] != self.grid.shape:
            raise GridMismatchError(f"configuration of shape {v.shape} on a {self.grid.shape} grid")
        object.__setattr__(self, "values", v)
        if self.winding is not None:
            if self.grid.topology != TORUS:
                raise ValueError("winding parts are only allowed on the torus")
            a, b = (np.asarray(w, dtype=float) for w in self.winding)
            if a.shape != (self.d,) or b.shape != (self.d,):
                raise ValueError("winding vectors must have one entry per component")
            object.__setattr__(self, "winding", (a, b))

    @property
    def d(self) -> int:
        return self.values.shape[0]

    @property
    def components(self) -> list[SurfaceField]:
        a, b = self.winding_vectors()
        return [SurfaceField(self.grid, self.values[i], (float(a[i]), float(b[i])))
                for i in range(self.d)]

    @classmethod
    def from_components(cls, comps, winding=None) -> "FieldConfiguration":
        g = _same_grid(*comps)
        vals = np.array([c.values for c in comps])
        if winding is None and any(any(s != 0 for s in c.slope) for c in comps):
            winding = (np.array([c.slope[0] for c in comps]), np.array([c.slope[1] for c in comps]))
        return cls(g, vals, winding)

    @classmethod
    def zeros(cls, grid: SurfaceGrid, d: int) -> "FieldConfiguration":
        return cls(grid, np.zeros((d,) + grid.shape))

    def winding_vectors(self) -> tuple[np.ndarray, np.ndarray]:
        if self.winding is None:
            return np.zeros(self.d), np.zeros(self.d)
        return self.winding

    def derivatives(self) -> tuple[np.ndarray, np.ndarray]:
        d1, d2 = self.grid.derivatives(self.values)
        if self.winding is not None:
            a, b = self.winding
            d1 = d1 + a[:, None, None]
            d2 = d2 + b[:, None, None]
        return d1, d2

    def with_values(self, values) -> "FieldConfiguration":
        return FieldConfiguration(self.grid, values, self.winding)

    def rotated(self, r: np.ndarray) -> "FieldConfiguration":
        vals = np.einsum("ij,j...->i...", r, self.values)
        winding = None
        if self.winding is not None:
            winding = (r @ self.winding[0], r @ self.winding[1])
        return FieldConfiguration(self.grid, vals, winding)

    def embed(self, d: int) -> "FieldConfiguration":
        """Pad with zero components up to d (3-d data inside 7-d)."""
        if d < self.d:
            raise ValueError("cannot embed into fewer components")
        vals = np.zeros((d,) + self.grid.shape, dtype=self.values.dtype)
        vals[: self.d] = self.values
        winding = None
        if self.winding is not None:
            winding = tuple(np.concatenate([w, np.zeros(d - self.d)]) for w in self.winding)
        return FieldConfiguration(self.grid, vals, winding)

    def max_abs(self) -> float:
        return float(np.abs(self.values).max()) if self.values.size else 0.0

    def __add__(self, other: "FieldConfiguration") -> "FieldConfiguration":
        _same_grid(self, other)
        a1, b1 = self.winding_vectors()
        a2, b2 = other.winding_vectors()
        winding = None if (self.winding is None and other.winding is None) else (a1 + a2, b1 + b2)
        return FieldConfiguration(self.grid, self.values + other.values, winding)

    def scaled(self, c: float) -> "FieldConfiguration":
        winding = None if self.winding is None else (self.winding[0] * c, self.winding[1] * c)
        return FieldConfiguration(self.grid, self.values * c, winding)


def sphere_harmonics_l1(grid: SurfaceGrid) -> np.ndarray:
    """The embedding coordinates (f1, f2, f3) of the unit sphere, shape (3, n1, n2)."""
    if grid.topology != SPHERE:
        raise ValueError("l=1 harmonics need a sphere grid")
    z, ph = grid.mesh
    s = np.sqrt(1.0 - z * z)
    return np.array([s * np.cos(ph), s * np.sin(ph), z])


def real_harmonic_basis(grid: SurfaceGrid, lmax: int) -> np.ndarray:
    """Real orthonormal spherical harmonics up to degree lmax, shape (n, n1, n2)."""
    if grid.topology != SPHERE:
        raise ValueError("spherical harmonics need a sphere grid")
    z, ph = grid.mesh
    out = []
    for l in range(lmax + 1):
        for m in range(0, l + 1):
            p, _ = normalized_legendre(l, m, grid.nodes1)
            pl = p[-1][:, None]
            if m == 0:
                out.append(np.broadcast_to(pl / np.sqrt(2 * np.pi), grid.shape))
            else:
                out.append(pl * np.cos(m * ph) / np.sqrt(np.pi))
                out.append(pl * np.sin(m * ph) / np.sqrt(np.pi))
    return np.array(out)


def random_band_limited(grid: SurfaceGrid, d: int, rng: np.random.Generator,
                        lmax: int = 3, amplitude: float = 0.3) -> np.ndarray:
    """Random smooth real components, shape (d, n1, n2), with max |X| ~ amplitude."""
    if grid.topology == SPHERE:
        basis = real_harmonic_basis(grid, lmax)
        vals = np.einsum("ck,kab->cab", rng.normal(size=(d, len(basis))), basis)
    else:
        s1, s2 = grid.mesh
        vals = np.zeros((d,) + grid.shape)
        for k1 in range(-lmax, lmax + 1):
            for k2 in range(-lmax, lmax + 1):
                if abs(k1) + abs(k2) > lmax:
                    continue
                c = rng.normal(size=(d, 2))
                phase = k1 * s1 + k2 * s2
                vals += c[:, 0, None, None] * np.cos(phase) + c[:, 1, None, None] * np.sin(phase)
    peak = np.abs(vals).max()
    return vals * (amplitude / peak) if peak > 0 else vals

"""Poisson brackets and integrals on the membrane parameter surface.

    {f, g} = df/dsigma2 dg/dsigma1 - dg/dsigma2 df/dsigma1

With sigma1 = cos(theta), sigma2 = phi this is the canonical bracket of the
round sphere; the l = 1 embedding coordinates close into {f1, f2} = f3.
"""
from __future__ import annotations

import numpy as np

from .surface import FieldConfiguration, SurfaceField, _same_grid


def bracket_from_derivatives(grid, d1f, d2f, d1g, d2g):
    return grid.dealiased_product(d2f, d1g) - grid.dealiased_product(d2g, d1f)


def poisson_bracket(f: SurfaceField, g: SurfaceField) -> SurfaceField:
    grid = _same_grid(f, g)
    d1f, d2f = f.derivatives()
    d1g, d2g = g.derivatives()
    return SurfaceField(grid, bracket_from_derivatives(grid, d1f, d2f, d1g, d2g))


def pair_brackets(cfg: FieldConfiguration) -> np.ndarray:
    """All brackets {X_j, X_k} of a configuration, shape (d, d, n1, n2)."""
    d1, d2 = cfg.derivatives()
    return _pair_brackets_from(cfg.grid, d1, d2)


def _pair_brackets_from(grid, d1, d2):
    d = d1.shape[0]
    out = np.zeros((d, d) + grid.shape, dtype=np.result_type(d1, d2))
    for j in range(d):
        for k in range(j + 1, d):
            b = bracket_from_derivatives(grid, d1[j], d2[j], d1[k], d2[k])
            out[j, k] = b
            out[k, j] = -b
    return out


def cross_brackets(a: FieldConfiguration, b: FieldConfiguration) -> np.ndarray:
    """{A_j, B_k} for all j, k, shape (da, db, n1, n2)."""
    grid = _same_grid(a, b)
    a1, a2 = a.derivatives()
    b1, b2 = b.derivatives()
    out = np.zeros((a.d, b.d) + grid.shape, dtype=np.result_type(a1, b1))
    for j in range(a.d):
        for k in range(b.d):
            out[j, k] = bracket_from_derivatives(grid, a1[j], a2[j], b1[k], b2[k])
    return out


def surface_integral(f):
    """Quadrature of a SurfaceField (or raw grid array) over the whole surface."""
    if isinstance(f, SurfaceField):
        if any(s != 0 for s in f.slope):
            raise ValueError("cannot integrate a field with a non-periodic affine part")
        return f.grid.integrate(f.values)
    raise TypeError("surface_integral expects a SurfaceField")


def jacobi_residual(f: SurfaceField, g: SurfaceField, h: SurfaceField) -> float:
    _same_grid(f, g, h)
    total = (poisson_bracket(f, poisson_bracket(g, h)).values
             + poisson_bracket(g, poisson_bracket(h, f)).values
             + poisson_bracket(h, poisson_bracket(f, g)).values)
    return float(np.abs(total).max())

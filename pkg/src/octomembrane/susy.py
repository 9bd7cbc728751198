"""Counting supersymmetries preserved by a membrane snapshot.

For a constant 16-spinor epsilon the variation condition at every surface
point is

    ( gamma_n Xdot_n + 1/2 sum_{i != j} gamma_i gamma_j {X_i, X_j} ) epsilon = 0

with the 16x16 gammas built from the beta matrices and the Euclidean
velocity continued to Minkowski time, Xdot -> c * Xdot.  Stacking the
operator over all grid nodes gives a (16 n1 n2) x 16 matrix whose numerical
kernel counts the surviving supersymmetries.

The 16-spinor splits as epsilon = (1, -i s) (x) eta / sqrt(2), s = +-1.  The
s = +1 sector carries the 8-spinor problem with the upper-left 7x7 block and
the edge column; the s = -1 sector is its conjugate.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import build_beta_matrices
from .bracket import pair_brackets
from .flow import FlowState, selfdual_rhs
from .surface import FieldConfiguration

DEFAULT_TOL = 1e-8
CONVENTIONS = {"i": 1j, "-i": -1j, "1": 1.0}


def _convention_value(convention) -> complex:
    if isinstance(convention, str):
        try:
            return CONVENTIONS[convention]
        except KeyError:
            raise ValueError(f"unknown convention {convention!r}; use one of {sorted(CONVENTIONS)}") from None
    return complex(convention)


def _convention_label(c: complex) -> str:
    for k, v in CONVENTIONS.items():
        if complex(v) == c:
            return k
    return repr(c)


def sector_basis(sign: int) -> np.ndarray:
    """16x8 isometry onto the spinors (eta, -i*sign*eta)/sqrt(2)."""
    if sign not in (1, -1):
        raise ValueError("sector sign must be +1 or -1")
    eye = np.eye(8)
    return np.vstack([eye, -1j * sign * eye]) / np.sqrt(2)


def paper_spinor() -> np.ndarray:
    """The 8th unit 8-spinor lifted into the s = +1 sector."""
    eta = np.zeros(8)
    eta[7] = 1.0
    return sector_basis(1) @ eta


@dataclass(frozen=True, eq=False)
class SusyOperator:
    matrix: np.ndarray          # (16 * n1 * n2, 16) complex
    grid: object
    convention: complex
    node_weights: np.ndarray | None = None

    def sector(self, sign: int) -> np.ndarray:
        return self.matrix @ sector_basis(sign)

    def apply(self, spinor: np.ndarray) -> np.ndarray:
        return self.matrix @ spinor


def _as_cfg(state) -> FieldConfiguration:
    return state.cfg if isinstance(state, FlowState) else state


def build_susy_operator(state, xdot=None, convention="i") -> SusyOperator:
    """Stack the per-node 16x16 variation operator.

    ``xdot`` defaults to the self-dual rhs of the snapshot; pass an
    independent velocity to probe snapshots that are not self-dual.
    Three-component snapshots are embedded into 7 components.
    """
    cfg = _as_cfg(state)
    if cfg.d == 3:
        cfg = cfg.embed(7)
        if xdot is not None:
            xv = xdot.values if isinstance(xdot, FieldConfiguration) else np.asarray(xdot)
            pad = np.zeros((7,) + xv.shape[1:], dtype=xv.dtype)
            pad[:3] = xv
            xdot = pad
    if cfg.d != 7:
        raise ValueError(f"snapshot must have 3 or 7 components, got {cfg.d}")
    if xdot is None:
        xdot = selfdual_rhs(cfg).values
    xdot = xdot.values if isinstance(xdot, FieldConfiguration) else np.asarray(xdot)
    if xdot.shape != cfg.values.shape:
        raise ValueError(f"velocity shape {xdot.shape} does not match {cfg.values.shape}")
    c = _convention_value(convention)
    gam = build_beta_matrices().gamma7.astype(complex)          # (7, 16, 16)
    gg = np.einsum("iab,jbc->ijac", gam, gam)
    br = pair_brackets(cfg)
    kinetic = np.einsum("nab,n...->...ab", gam, c * xdot)
    potential = 0.5 * np.einsum("ijab,ij...->...ab", gg, br)
    per_node = (kinetic + potential).reshape(-1, 16, 16)
    return SusyOperator(per_node.reshape(-1, 16), cfg.grid, c)


@dataclass(frozen=True)
class SusyReport:
    singular_values: tuple
    kernel_dim: int
    sector_kernel_dims: tuple   # (s = +1, s = -1)
    tol: float
    convention: str
    threshold: float
    expected: int | None = None

    @property
    def matches(self) -> bool | None:
        return None if self.expected is None else self.kernel_dim == self.expected

    def to_dict(self) -> dict:
        out = {
            "singular_values": list(self.singular_values),
            "kernel_dim": self.kernel_dim,
            "sector_kernel_dims": list(self.sector_kernel_dims),
            "tol": self.tol,
            "threshold": self.threshold,
            "convention": self.convention,
        }
        if self.expected is not None:
            out["expected"] = self.expected
            out["matches"] = self.matches
        return out


def _kernel_dim(sv: np.ndarray, threshold: float) -> int:
    return int(np.sum(sv < threshold))


def count_preserved_susy(op: SusyOperator, tol: float = DEFAULT_TOL,
                         expected: int | None = None) -> SusyReport:
    """Kernel dimension: singular values below tol * max(1, largest)."""
    sv = np.linalg.svd(op.matrix, compute_uv=False)
    threshold = tol * max(1.0, float(sv[0]) if sv.size else 0.0)
    sectors = tuple(_kernel_dim(np.linalg.svd(op.sector(s), compute_uv=False), threshold)
                    for s in (1, -1))
    return SusyReport(
        singular_values=tuple(float(x) for x in sv),
        kernel_dim=_kernel_dim(sv, threshold),
        sector_kernel_dims=sectors,
        tol=tol,
        convention=_convention_label(op.convention),
        threshold=threshold,
        expected=expected,
    )


def paper_spinor_residual(op: SusyOperator) -> float:
    """max |O epsilon| for the distinguished spinor of the s = +1 sector."""
    return float(np.abs(op.apply(paper_spinor())).max())

"""Octonionic structure constants, G2 machinery and the 8x8 beta matrices.

Indices are 0-based internally; the octonionic imaginary unit ``o_i`` of the
usual 1..7 labelling lives at index ``i - 1``.  All identity checks run in
integer arithmetic.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import expm, null_space

# Oriented triples (1-based) of the multiplication table; psi = +1 on their
# cyclic orbits.
TRIPLES = ((1, 2, 3), (2, 4, 6), (4, 3, 5), (3, 6, 7), (6, 5, 1), (5, 7, 2), (7, 1, 4))

G2_TOL = 1e-10


class AlgebraError(RuntimeError):
    """Raised when a construction fails one of its defining checks."""


@dataclass(frozen=True)
class StructureConstants:
    psi: np.ndarray
    phi: np.ndarray

    @property
    def dim(self) -> int:
        return self.psi.shape[0]


def _levi_civita3() -> np.ndarray:
    eps = np.zeros((3, 3, 3), dtype=np.int64)
    for (i, j, k), s in _signed_perms((0, 1, 2)):
        eps[i, j, k] = s
    return eps


def _signed_perms(t):
    a, b, c = t
    return (((a, b, c), 1), ((b, c, a), 1), ((c, a, b), 1),
            ((b, a, c), -1), ((a, c, b), -1), ((c, b, a), -1))


def phi_from_psi(psi: np.ndarray) -> np.ndarray:
    """Dual four-index symbol defined through the psi.psi contraction identity."""
    d = np.eye(psi.shape[0], dtype=np.int64)
    return (np.einsum("ijk,lmk->ijlm", psi, psi)
            - np.einsum("il,jm->ijlm", d, d)
            + np.einsum("im,jl->ijlm", d, d))


def psi_from_triples(triples) -> np.ndarray:
    psi = np.zeros((7, 7, 7), dtype=np.int64)
    for t in triples:
        for (i, j, k), s in _signed_perms(tuple(x - 1 for x in t)):
            psi[i, j, k] = s
    return psi


@lru_cache(maxsize=None)
def _cached_constants() -> StructureConstants:
    psi = psi_from_triples(TRIPLES)
    psi.setflags(write=False)
    phi = phi_from_psi(psi)
    phi.setflags(write=False)
    return StructureConstants(psi=psi, phi=phi)


def build_structure_constants() -> StructureConstants:
    return _cached_constants()


def epsilon3() -> np.ndarray:
    eps = _levi_civita3()
    eps.setflags(write=False)
    return eps


def cross_constants(d: int) -> np.ndarray:
    """Totally antisymmetric cross-product constants for d = 3 or 7."""
    if d == 3:
        return epsilon3()
    if d == 7:
        return build_structure_constants().psi
    raise ValueError(f"cross product only exists in 3 and 7 dimensions, got d={d}")


# ---------------------------------------------------------------- octonions

@dataclass(frozen=True)
class Octonion:
    x0: float
    xi: np.ndarray = field(default_factory=lambda: np.zeros(7))

    @classmethod
    def unit(cls, i: int) -> "Octonion":
        """o_i for i in 0..7 (o_0 is the identity)."""
        if i == 0:
            return cls(1.0, np.zeros(7))
        v = np.zeros(7)
        v[i - 1] = 1.0
        return cls(0.0, v)

    @classmethod
    def from_array(cls, a) -> "Octonion":
        a = np.asarray(a, dtype=float)
        return cls(float(a[0]), a[1:].copy())

    def to_array(self) -> np.ndarray:
        return np.concatenate([[self.x0], self.xi])

    def conjugate(self) -> "Octonion":
        return Octonion(self.x0, -self.xi)

    def norm2(self) -> float:
        return float(self.x0 ** 2 + self.xi @ self.xi)

    def __add__(self, other: "Octonion") -> "Octonion":
        return Octonion(self.x0 + other.x0, self.xi + other.xi)

    def __sub__(self, other: "Octonion") -> "Octonion":
        return Octonion(self.x0 - other.x0, self.xi - other.xi)

    def __mul__(self, other):
        if isinstance(other, Octonion):
            return octonion_multiply(self, other)
        return Octonion(self.x0 * other, self.xi * other)

    __rmul__ = __mul__

    def allclose(self, other: "Octonion", atol: float = 1e-12) -> bool:
        return bool(np.allclose(self.to_array(), other.to_array(), atol=atol, rtol=0))


def octonion_multiply(a: Octonion, b: Octonion) -> Octonion:
    """Bilinear extension of o_i o_j = -delta_ij + psi_ijk o_k."""
    psi = build_structure_constants().psi
    x0 = a.x0 * b.x0 - a.xi @ b.xi
    xi = a.x0 * b.xi + b.x0 * a.xi + np.einsum("ijk,i,j->k", psi, a.xi, b.xi)
    return Octonion(float(x0), xi)


# ------------------------------------------------------------ X(u) tensors

def antisymmetrizer(d: int = 7) -> np.ndarray:
    """Delta^{ij}_{kl} = (delta^i_k delta^j_l - delta^i_l delta^j_k) / 2."""
    e = np.eye(d)
    return 0.5 * (np.einsum("ik,jl->ijkl", e, e) - np.einsum("il,jk->ijkl", e, e))


def x_tensor(u: float) -> np.ndarray:
    """X^{ij}_{kl}(u) = Delta^{ij}_{kl} + (u/4) phi_ijkl as a float array."""
    return antisymmetrizer(7) + (u / 4.0) * build_structure_constants().phi


def _x_tensor_times4(u4: int, phi: np.ndarray) -> np.ndarray:
    # 4 X(u) in integers: 2(dd - dd) + u phi; keeps the identity suite exact.
    e = np.eye(7, dtype=np.int64)
    two_delta = 2 * (np.einsum("ik,jl->ijkl", e, e) - np.einsum("il,jk->ijkl", e, e))
    return two_delta + u4 * phi


# ---------------------------------------------------------- identity suite

@dataclass(frozen=True)
class IdentityCheck:
    name: str
    passed: bool
    violations: int
    first_violation: tuple | None = None


@dataclass(frozen=True)
class IdentityReport:
    checks: tuple[IdentityCheck, ...]
    psi_square_sum: int

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "n_passed": sum(c.passed for c in self.checks),
            "n_checks": len(self.checks),
            "psi_square_sum": self.psi_square_sum,
            "checks": [
                {
                    "name": c.name,
                    "passed": c.passed,
                    "violations": c.violations,
                    "first_violation": None if c.first_violation is None
                    else [int(i) + 1 for i in c.first_violation],
                }
                for c in self.checks
            ],
        }


def _check(name: str, residual: np.ndarray) -> IdentityCheck:
    bad = np.argwhere(residual != 0)
    if len(bad) == 0:
        return IdentityCheck(name, True, 0)
    return IdentityCheck(name, False, int(len(bad)), tuple(int(i) for i in bad[0]))


def _antisymmetry_residual(t: np.ndarray) -> np.ndarray:
    # stack of (t + t with two adjacent slots swapped) for every adjacent pair
    r = t.ndim
    parts = []
    for a in range(r - 1):
        axes = list(range(r))
        axes[a], axes[a + 1] = axes[a + 1], axes[a]
        parts.append(t + t.transpose(axes))
    return np.stack(parts, axis=-1)


def verify_identity_suite(psi: np.ndarray | None = None,
                          phi: np.ndarray | None = None) -> IdentityReport:
    """Exhaustive integer check of the octonionic identities.

    ``phi`` defaults to the dual built from the true table.  Passing a
    perturbed ``psi`` without ``phi`` checks it against the reference dual,
    which is what exposes a corrupted table.
    """
    ref = build_structure_constants()
    psi = ref.psi if psi is None else np.asarray(psi, dtype=np.int64)
    phi = ref.phi if phi is None else np.asarray(phi, dtype=np.int64)
    e = np.eye(7, dtype=np.int64)

    contraction = (np.einsum("ijk,lmk->ijlm", psi, psi)
                   - np.einsum("il,jm->ijlm", e, e) + np.einsum("im,jl->ijlm", e, e) - phi)
    x_m1 = _x_tensor_times4(-1, phi)
    x_p2 = _x_tensor_times4(2, phi)
    psi_x = np.einsum("ijk,jklm->ilm", psi, x_m1)
    xx = np.einsum("ijmn,mnkl->ijkl", x_m1, x_p2)
    antisym_psi = _antisymmetry_residual(psi)
    antisym_phi = _antisymmetry_residual(phi)
    anti_check = _check("total_antisymmetry", antisym_psi)
    if anti_check.passed:
        anti_check = _check("total_antisymmetry", antisym_phi)

    checks = (
        _check("psi_psi_contraction", contraction),
        _check("psi_X(-1)=0", psi_x),
        _check("X(-1)X(2)=0", xx),
        anti_check,
    )
    return IdentityReport(checks=checks, psi_square_sum=int(np.sum(psi * psi)))


# ------------------------------------------------------------ beta matrices

@dataclass(frozen=True)
class BetaMatrices:
    beta: np.ndarray      # (7, 8, 8) integer
    gamma16: np.ndarray   # (10, 16, 16): gamma_1..gamma_7, gamma_8, gamma_9, and the 16x16 identity

    @property
    def gamma7(self) -> np.ndarray:
        return self.gamma16[:7]


def _assemble_beta(psi: np.ndarray) -> np.ndarray:
    beta = np.zeros((7, 8, 8), dtype=np.int64)
    for n in range(7):
        beta[n, :7, :7] = psi[:, n, :]
        beta[n, n, 7] = 1
        beta[n, 7, n] = -1
    return beta


def clifford_residual(beta: np.ndarray) -> int:
    eye = np.eye(beta.shape[1], dtype=np.int64)
    worst = 0
    for m, n in itertools.product(range(len(beta)), repeat=2):
        r = beta[m] @ beta[n] + beta[n] @ beta[m] + 2 * (m == n) * eye
        worst = max(worst, int(np.abs(r).max()))
    return worst


def beta_product(beta: np.ndarray) -> np.ndarray:
    out = np.eye(8, dtype=np.int64)
    for b in beta:
        out = out @ b
    return out


def build_beta_matrices() -> BetaMatrices:
    psi = build_structure_constants().psi
    beta = _assemble_beta(psi)
    if clifford_residual(beta) != 0:
        raise AlgebraError("beta matrices violate the Clifford relations")
    if not np.array_equal(beta_product(beta), -np.eye(8, dtype=np.int64)):
        raise AlgebraError("beta_1 ... beta_7 != -1")
    z = np.zeros((8, 8), dtype=np.int64)
    one = np.eye(8, dtype=np.int64)
    gammas = [np.block([[z, b], [-b, z]]) for b in beta]
    gammas.append(np.block([[z, one], [-one, z]]))
    gammas.append(np.block([[one, z], [z, -one]]))
    gammas.append(np.eye(16, dtype=np.int64))
    beta.setflags(write=False)
    g = np.array(gammas)
    g.setflags(write=False)
    return BetaMatrices(beta=beta, gamma16=g)


def beta_commutators(beta: np.ndarray) -> np.ndarray:
    """[beta_m, beta_n] as an integer array of shape (7, 7, 8, 8)."""
    return np.einsum("mij,njk->mnik", beta, beta) - np.einsum("nij,mjk->mnik", beta, beta)


# ----------------------------------------------------------------- G2 group

def g2_linear_constraint(psi: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Linearized invariance of psi restricted to antisymmetric matrices.

    Returns ``(C, basis21)`` where ``basis21`` has shape (21, 7, 7) and the
    columns of ``C`` are the images of the basis elements, flattened over
    the 343 index triples.
    """
    psi = build_structure_constants().psi if psi is None else psi
    basis21 = []
    for a, b in itertools.combinations(range(7), 2):
        m = np.zeros((7, 7))
        m[a, b], m[b, a] = 1.0, -1.0
        basis21.append(m)
    basis21 = np.array(basis21)
    cols = [_derivation_action(psi, m).ravel() for m in basis21]
    return np.array(cols).T, basis21


def _derivation_action(psi: np.ndarray, a: np.ndarray) -> np.ndarray:
    # psi_ljk A_li + psi_ilk A_lj + psi_ijl A_lk
    return (np.einsum("ljk,li->ijk", psi, a)
            + np.einsum("ilk,lj->ijk", psi, a)
            + np.einsum("ijl,lk->ijk", psi, a))


def derivation_residual(a: np.ndarray) -> float:
    psi = build_structure_constants().psi
    return float(np.abs(_derivation_action(psi, np.asarray(a, dtype=float))).max())


@lru_cache(maxsize=None)
def _g2_basis_cached() -> tuple[np.ndarray, ...]:
    c, basis21 = g2_linear_constraint()
    ns = null_space(c, rcond=1e-10)
    if ns.shape[1] != 14:
        raise AlgebraError(f"g2 null space has dimension {ns.shape[1]}, expected 14")
    mats = np.einsum("ka,kij->aij", ns, basis21)
    return tuple(m for m in mats)


def g2_algebra_basis() -> list[np.ndarray]:
    """Orthonormal (Frobenius/2) basis of the 14-dimensional Lie algebra g2."""
    return [m.copy() for m in _g2_basis_cached()]


def g2_residual(r: np.ndarray) -> float:
    """Deviation of ``r`` from being an automorphism of the cross product.

    Max over all indices of |r_lk psi_kij - psi_lmn r_mi r_nj|, i.e. of
    r(x * y) - (r x) * (r y), together with max |r r^T - 1|.
    """
    psi = build_structure_constants().psi
    r = np.asarray(r, dtype=float)
    lhs = np.einsum("lk,kij->lij", r, psi)
    rhs = np.einsum("lmn,mi,nj->lij", psi, r, r)
    orth = np.abs(r @ r.T - np.eye(7)).max()
    return float(max(np.abs(lhs - rhs).max(), orth))


def g2_membership(r: np.ndarray, tol: float = G2_TOL) -> bool:
    r = np.asarray(r)
    if r.shape != (7, 7):
        return False
    return g2_residual(r) < tol


def random_g2_element(rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    coeffs = rng.normal(scale=scale, size=14)
    a = np.einsum("a,aij->ij", coeffs, np.array(_g2_basis_cached()))
    return expm(a)


def apply_g2(r: np.ndarray, cfg):
    """Rotate the seven membrane coordinates: Y_i = r_ij X_j pointwise."""
    r = np.asarray(r, dtype=float)
    if cfg.d != 7 or r.shape != (7, 7):
        raise ValueError(f"G2 acts on 7 components, got d={cfg.d} and r of shape {r.shape}")
    return cfg.rotated(r)

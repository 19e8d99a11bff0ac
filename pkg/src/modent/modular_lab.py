"""Finite-dimensional standard subspaces and their modular theory.

Everything runs in realified coordinates: a vector ``v`` in ``C^d`` is stored
as ``(Re v, Im v)`` in ``R^(2d)``, so the real part of the inner product is
the Euclidean dot product and multiplication by ``i`` is the matrix
``complex_structure(d)``.  Real-linear subspaces are kept as orthonormal
column bases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import DiagnosticError, InputError
from .fourier_core import (
    complex_structure,
    complexify_matrix,
    realify_matrix,
)

RANK_TOL = 1e-10
FACTORIAL_TOL = 1e-10


def _orth(cols: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis of the column span (SVD rank cut relative to the top singular value)."""
    if cols.size == 0:
        return np.zeros((cols.shape[0], 0))
    u, s, _ = np.linalg.svd(cols, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros((cols.shape[0], 0))
    return u[:, s > tol * s[0]]


class RealSubspace:
    """Real-linear subspace of ``C^d`` given by an orthonormal realified basis."""

    def __init__(self, basis: np.ndarray, ambient_dim: int | None = None, orthonormalize: bool = True):
        basis = np.asarray(basis, dtype=float)
        if basis.ndim != 2 or basis.shape[0] % 2:
            raise InputError("realified basis must have an even number of rows")
        self.ambient_dim = basis.shape[0] // 2 if ambient_dim is None else ambient_dim
        self.basis = _orth(basis) if orthonormalize else basis

    @classmethod
    def from_complex_vectors(cls, vectors) -> "RealSubspace":
        """Real span of the given complex vectors (columns)."""
        v = np.atleast_2d(np.asarray(vectors, dtype=complex))
        return cls(np.vstack([v.real, v.imag]))

    @property
    def real_dim(self) -> int:
        return self.basis.shape[1]

    @property
    def projection(self) -> np.ndarray:
        return self.basis @ self.basis.T

    def times_i(self) -> "RealSubspace":
        return RealSubspace(complex_structure(self.ambient_dim) @ self.basis, orthonormalize=False)

    def symplectic_complement(self) -> "RealSubspace":
        """``H' = (iH)^perp`` for the real part of the inner product."""
        iH = complex_structure(self.ambient_dim) @ self.basis
        return RealSubspace(sla.null_space(iH.T, rcond=RANK_TOL), self.ambient_dim, orthonormalize=False)

    def orthogonal_complement(self) -> "RealSubspace":
        return RealSubspace(sla.null_space(self.basis.T, rcond=RANK_TOL), self.ambient_dim, orthonormalize=False)

    def intersect(self, other: "RealSubspace") -> "RealSubspace":
        # x in both iff x is orthogonal to both complements
        stacked = np.hstack([self.orthogonal_complement().basis, other.orthogonal_complement().basis])
        if stacked.shape[1] == 0:
            return RealSubspace(np.eye(2 * self.ambient_dim), self.ambient_dim, orthonormalize=False)
        return RealSubspace(sla.null_space(stacked.T, rcond=1e-8), self.ambient_dim, orthonormalize=False)

    def __add__(self, other: "RealSubspace") -> "RealSubspace":
        return RealSubspace(np.hstack([self.basis, other.basis]), self.ambient_dim)

    def apply(self, op: np.ndarray) -> "RealSubspace":
        return RealSubspace(op @ self.basis, self.ambient_dim)

    def distance(self, other: "RealSubspace") -> float:
        """Spectral-norm distance of the orthogonal projections."""
        return float(np.linalg.norm(self.projection - other.projection, 2))

    def contained_in(self, other: "RealSubspace", tol: float = 1e-10) -> bool:
        return bool(np.linalg.norm(self.basis - other.projection @ self.basis) <= tol * max(1, self.real_dim))

    def is_standard(self, tol: float = RANK_TOL) -> bool:
        """``H`` and ``iH`` together have real rank ``2d``."""
        if self.real_dim != self.ambient_dim:
            return False
        both = np.hstack([self.basis, complex_structure(self.ambient_dim) @ self.basis])
        s = np.linalg.svd(both, compute_uv=False)
        return bool(s[-1] > tol * s[0])


class StandardSubspace(RealSubspace):
    """Standard subspace of ``C^d``: ``H`` and ``iH`` span ``C^d`` with trivial intersection."""

    def __init__(self, basis: np.ndarray, ambient_dim: int | None = None, orthonormalize: bool = True):
        super().__init__(basis, ambient_dim, orthonormalize)
        if not self.is_standard():
            raise InputError("basis does not span a standard subspace (rank deficient together with i*basis)")

    @classmethod
    def real_points(cls, d: int) -> "StandardSubspace":
        """``R^d`` inside ``C^d``."""
        return cls(np.vstack([np.eye(d), np.zeros((d, d))]), orthonormalize=False)


def random_standard_subspace(rng: np.random.Generator, d: int, max_condition: float = 50.0) -> StandardSubspace:
    """Image of ``R^d`` under a random real-linear map of ``R^(2d)`` with condition number ``<= max_condition``."""
    for _ in range(100):
        U, _ = np.linalg.qr(rng.standard_normal((2 * d, 2 * d)))
        V, _ = np.linalg.qr(rng.standard_normal((2 * d, 2 * d)))
        s = rng.uniform(1.0, max_condition, size=2 * d)
        T = U @ np.diag(s) @ V.T
        try:
            return StandardSubspace(T[:, :d])
        except InputError:
            continue
    raise DiagnosticError("could not draw a standard subspace", stage="random_standard_subspace")


# -- Tomita operators -----------------------------------------------------------------------


@dataclass(frozen=True)
class ModularData:
    """Modular operator, conjugation and Tomita operator of a standard subspace.

    ``Delta`` is the complex ``d x d`` matrix; ``J`` and ``S`` are stored realified.
    """

    subspace: StandardSubspace
    Delta: np.ndarray
    spectrum: np.ndarray
    eigenvectors: np.ndarray
    J: np.ndarray
    S: np.ndarray

    @property
    def d(self) -> int:
        return self.Delta.shape[0]

    @property
    def factorial(self) -> bool:
        return bool(np.min(np.abs(self.spectrum - 1.0)) > FACTORIAL_TOL)

    def delta_power(self, p: float) -> np.ndarray:
        """Complex matrix ``Delta^p``."""
        V = self.eigenvectors
        return (V * self.spectrum ** p) @ V.conj().T

    def delta_function(self, f) -> np.ndarray:
        V = self.eigenvectors
        return (V * f(self.spectrum)) @ V.conj().T


def tomita_operators(H: StandardSubspace) -> ModularData:
    """``S(h + ik) = h - ik``, ``Delta = S^T S``, ``J = S Delta^(-1/2)``."""
    if not isinstance(H, StandardSubspace):
        H = StandardSubspace(H.basis)
    d = H.ambient_dim
    I = complex_structure(d)
    B = H.basis
    domain = np.hstack([B, I @ B])
    image = np.hstack([B, -(I @ B)])
    try:
        S = image @ np.linalg.inv(domain)
    except np.linalg.LinAlgError as exc:
        raise InputError("rank-deficient basis") from exc
    # polar decomposition S = J |S| with |S| = Delta^(1/2)
    J, root = sla.polar(S, side="right")
    Delta_R = root @ root
    if np.linalg.norm(Delta_R @ I - I @ Delta_R) > 1e-8 * np.linalg.norm(Delta_R):
        raise DiagnosticError("S^T S is not complex linear", stage="tomita_operators")
    Delta = complexify_matrix(Delta_R, tol=1e-8)
    Delta = 0.5 * (Delta + Delta.conj().T)
    w, V = np.linalg.eigh(Delta)
    if np.any(w <= 0):
        raise DiagnosticError("modular operator not positive definite", stage="tomita_operators")
    return ModularData(H, Delta, w, V, J, S)


def projection_via_modular(md: ModularData) -> np.ndarray:
    """Realified ``(Delta + 1)^-1 + J Delta^(1/2) (Delta + 1)^-1``."""
    a = realify_matrix(md.delta_function(lambda x: 1.0 / (x + 1.0)))
    b = realify_matrix(md.delta_function(lambda x: np.sqrt(x) / (x + 1.0)))
    return a + md.J @ b


def complement_projection_via_modular(md: ModularData) -> np.ndarray:
    """Realified ``Delta (Delta + 1)^-1 + J Delta^(1/2) (Delta + 1)^-1``, the projection onto ``H'``."""
    a = realify_matrix(md.delta_function(lambda x: x / (x + 1.0)))
    b = realify_matrix(md.delta_function(lambda x: np.sqrt(x) / (x + 1.0)))
    return a + md.J @ b


def gram_projection(H: RealSubspace) -> np.ndarray:
    """Real orthogonal projection from an independently orthonormalized basis."""
    Q, _ = np.linalg.qr(H.basis)
    return Q @ Q.T


def modular_identity_checks(md: ModularData) -> dict[str, float]:
    """Residuals of the structural identities of ``(Delta, J, S)``."""
    d = md.d
    I = complex_structure(d)
    D = realify_matrix(md.Delta)
    # S is an involution, so Delta^-1 = (S^T S)^-1 = S S^T
    Dinv = md.S @ md.S.T
    J = md.J
    w = np.sort(md.spectrum)
    return {
        "J_Delta_J": float(np.max(np.abs(J @ D @ J - Dinv)) / max(1.0, np.max(np.abs(Dinv)))),
        "J_involution": float(np.max(np.abs(J @ J - np.eye(2 * d)))),
        "J_orthogonal": float(np.max(np.abs(J.T @ J - np.eye(2 * d)))),
        "J_antilinear": float(np.max(np.abs(J @ I + I @ J))),
        "Delta_linear": float(np.max(np.abs(D @ I - I @ D))),
        "S_fixes_H": float(np.max(np.abs(md.S @ md.subspace.basis - md.subspace.basis))),
        # sp(Delta) = sp(Delta^-1), compared relative to ||Delta||
        "spectrum_inversion": float(np.max(np.abs(w - np.linalg.eigvalsh(complexify_matrix(Dinv, 1e-8)))) / w[-1]),
    }


@dataclass
class AngleReport:
    complement_formula: float
    restriction: float
    eigenvalue_map: float
    commutator_norm: float
    commutator_formula: float
    mu: np.ndarray
    lam: np.ndarray

    def max_error(self) -> float:
        return max(self.complement_formula, self.restriction, self.eigenvalue_map,
                   self.commutator_norm, self.commutator_formula)


def angle_operator_checks(md: ModularData, P_H: np.ndarray | None = None) -> AngleReport:
    """Compare ``P_H P_H'`` on ``H`` with ``A_H = 4 Delta / (Delta + 1)^2``.

    The commutator is checked in the form ``[P_H, i] = J i A_H^(1/2)``; the
    factor ``i`` comes from moving ``i`` through the antilinear ``J``.
    """
    if not md.factorial:
        raise InputError("subspace is not factorial (1 is an eigenvalue of Delta)")
    d = md.d
    I = complex_structure(d)
    P_H = projection_via_modular(md) if P_H is None else P_H
    # P_H' = 1 - P_{iH}, with P_{iH} = -i P_H i
    P_Hp = np.eye(2 * d) + I @ P_H @ I
    A = realify_matrix(md.delta_function(lambda x: 4.0 * x / (x + 1.0) ** 2))
    sqrtA = realify_matrix(md.delta_function(lambda x: 2.0 * np.sqrt(x) / (x + 1.0)))
    Bo = md.subspace.basis
    restricted = Bo.T @ P_H @ P_Hp @ P_H @ Bo
    mu = np.sort(np.linalg.eigvalsh(0.5 * (restricted + restricted.T)))
    expected = np.sort(4.0 * md.spectrum / (1.0 + md.spectrum) ** 2)
    comm = P_H @ I - I @ P_H
    trace_A = float(np.trace(md.delta_function(lambda x: 4.0 * x / (x + 1.0) ** 2)).real)
    return AngleReport(
        complement_formula=float(np.max(np.abs(P_Hp - complement_projection_via_modular(md)))),
        restriction=float(np.linalg.norm(P_H @ P_Hp @ Bo - A @ Bo, 2)),
        eigenvalue_map=float(np.max(np.abs(mu - expected))),
        commutator_norm=abs(float(np.sum(comm ** 2)) - 2.0 * trace_A),
        commutator_formula=float(np.max(np.abs(comm - md.J @ I @ sqrtA))),
        mu=mu,
        lam=np.sort(md.spectrum),
    )


# -- two-dimensional model ------------------------------------------------------------------


def conjugating_swap() -> np.ndarray:
    """Realified ``(a, b) -> (conj b, conj a)`` on ``C^2``."""
    swap = np.array([[0.0, 1.0], [1.0, 0.0]])
    return np.block([[swap, np.zeros((2, 2))], [np.zeros((2, 2)), -swap]])


def two_dim_model(lam: float) -> StandardSubspace:
    """``{xi + sqrt(lam) conj(xi)} in C + C`` with modular spectrum ``{lam, 1/lam}``.

    ``Delta = diag(lam, 1/lam)`` and ``J`` is the conjugating swap.
    """
    if not (0.0 < lam < 1.0):
        raise InputError("lam must lie in (0, 1)")
    r = math.sqrt(lam)
    return StandardSubspace.from_complex_vectors(np.array([[1.0, 1j], [r, -1j * r]]))


def symplectic_map(lam: float, scale: float | None = None):
    """``T xi = c (xi + sqrt(lam) conj(xi))`` as a function of a complex scalar.

    ``c = (1 - lam)^(-1/2)`` by default, the normalization that preserves
    ``Im (T xi, T eta)``.
    """
    c = (1.0 - lam) ** -0.5 if scale is None else scale
    r = math.sqrt(lam)

    def T(xi: complex) -> np.ndarray:
        return c * np.array([xi, r * np.conj(xi)])

    return T


# -- canonical intermediate subspace --------------------------------------------------------


@dataclass
class IntermediateResult:
    F: RealSubspace
    F_from_intersection: RealSubspace
    relative_commutant: StandardSubspace
    characterization_gap: float
    contains_K: bool
    inside_H: bool
    factorial: bool | None


def canonical_intermediate(K: RealSubspace, H: RealSubspace) -> IntermediateResult:
    """``F = K + J K`` with ``J`` the conjugation of ``K' & H``, checked against ``H & J H``."""
    if not K.contained_in(H):
        raise InputError("K is not contained in H")
    C = K.symplectic_complement().intersect(H)
    if not C.is_standard():
        raise InputError("relative commutant K' & H is not standard")
    C = StandardSubspace(C.basis, orthonormalize=False)
    J = tomita_operators(C).J
    F = K + K.apply(J)
    F2 = H.intersect(H.apply(J))
    factorial = None
    if F.is_standard():
        factorial = tomita_operators(StandardSubspace(F.basis, orthonormalize=False)).factorial
    return IntermediateResult(
        F=F,
        F_from_intersection=F2,
        relative_commutant=C,
        characterization_gap=F.distance(F2) if F.real_dim == F2.real_dim else float("inf"),
        contains_K=K.contained_in(F, 1e-8),
        inside_H=F.contained_in(H, 1e-8),
        factorial=factorial,
    )


def split_example(rng: np.random.Generator, d: int = 4, k: int = 2) -> tuple[RealSubspace, RealSubspace]:
    """Strict inclusion ``K < H`` whose relative commutant is a prescribed standard ``C``.

    ``C`` is random standard, ``K`` a random ``k``-dimensional subspace of ``C'``
    and ``H = K + C``.
    """
    C = random_standard_subspace(rng, d)
    Cp = C.symplectic_complement()
    K = RealSubspace(Cp.basis @ rng.standard_normal((Cp.real_dim, k)), d)
    return K, K + C


# -- verification battery -------------------------------------------------------------------


def verification_battery(seed: int = 0, samples: int = 200, max_dim: int = 5) -> list[dict]:
    rng = np.random.default_rng(seed)
    worst = {"gram": 0.0, "restriction": 0.0, "eigenvalue_map": 0.0, "commutator": 0.0,
             "idempotent": 0.0, "symmetric": 0.0, "identities": 0.0, "double_complement": 0.0}
    for _ in range(samples):
        d = int(rng.integers(1, max_dim + 1))
        H = random_standard_subspace(rng, d)
        md = tomita_operators(H)
        P = projection_via_modular(md)
        worst["gram"] = max(worst["gram"], float(np.max(np.abs(P - gram_projection(H)))))
        worst["idempotent"] = max(worst["idempotent"], float(np.max(np.abs(P @ P - P))))
        worst["symmetric"] = max(worst["symmetric"], float(np.max(np.abs(P - P.T))))
        ident = modular_identity_checks(md)
        worst["identities"] = max(worst["identities"], max(ident.values()))
        worst["double_complement"] = max(worst["double_complement"],
                                         H.symplectic_complement().symplectic_complement().distance(H))
        if md.factorial:
            rep = angle_operator_checks(md, P)
            worst["restriction"] = max(worst["restriction"], rep.restriction, rep.complement_formula)
            worst["eigenvalue_map"] = max(worst["eigenvalue_map"], rep.eigenvalue_map)
            worst["commutator"] = max(worst["commutator"], rep.commutator_norm, rep.commutator_formula)
    tol = {"gram": 1e-8, "restriction": 1e-8, "eigenvalue_map": 1e-10, "commutator": 1e-8,
           "idempotent": 1e-10, "symmetric": 1e-10, "identities": 1e-10, "double_complement": 1e-10}
    checks = [{"name": f"modular.{k}", "value": v, "tol": tol[k], "passed": bool(v <= tol[k])}
              for k, v in worst.items()]

    md = tomita_operators(two_dim_model(1.0 / 3.0))
    err = float(np.max(np.abs(np.sort(md.spectrum) - [1.0 / 3.0, 3.0])))
    checks.append({"name": "modular.two_dim_spectrum", "value": err, "tol": 1e-10, "passed": err <= 1e-10})
    K, H = split_example(rng)
    res = canonical_intermediate(K, H)
    ok = res.characterization_gap <= 1e-8 and res.contains_K and res.inside_H
    checks.append({"name": "modular.canonical_intermediate", "value": res.characterization_gap,
                   "tol": 1e-8, "passed": bool(ok)})
    return checks

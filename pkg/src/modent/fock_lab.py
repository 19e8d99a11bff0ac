"""Fermi and truncated Bose second quantization of finite positive matrices.

Only spectra are needed: ``Gamma(A)`` and ``Lambda(A)`` factorize over the
eigenmodes of ``A``, so the Fock-space density matrices are represented by
their eigenvalue lists.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError

DEFAULT_NMAX = 64
MAX_FERMI_DIM = 12
MAX_BOSE_DIM = 4


def _xlogx(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = x[pos] * np.log(x[pos])
    return out


def _spectrum(A) -> np.ndarray:
    A = np.asarray(A)
    if A.size == 0:
        return np.zeros(0)
    A = np.atleast_2d(A)
    if A.shape[0] != A.shape[1]:
        raise InputError("A must be square")
    if np.max(np.abs(A - A.conj().T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(A))):
        raise InputError("A must be self-adjoint")
    w = np.linalg.eigvalsh(A)
    if w.size and w[0] < -1e-12:
        raise InputError("A must be positive")
    return np.clip(w, 0.0, None)


def _check_bose(a: np.ndarray) -> None:
    if a.size and a[-1] > 1.0 - 1e-6:
        raise InputError("Bose second quantization needs spectrum below 1 - 1e-6")


@dataclass(frozen=True)
class FermiFock:
    """Occupation basis of ``Lambda(C^d)``: basis index ``b`` is the subset of set bits of ``b``."""

    one_particle_dim: int

    def __post_init__(self):
        if not (0 <= self.one_particle_dim <= MAX_FERMI_DIM):
            raise InputError(f"Fermi Fock space limited to d <= {MAX_FERMI_DIM}")

    @property
    def total_dim(self) -> int:
        return 2 ** self.one_particle_dim

    def subset(self, index: int) -> tuple[int, ...]:
        return tuple(k for k in range(self.one_particle_dim) if index >> k & 1)

    def index(self, subset) -> int:
        return sum(1 << k for k in subset)

    def diagonal(self, eigenvalues) -> np.ndarray:
        """Eigenvalues of ``Lambda(A)`` for ``A = diag(eigenvalues)``, in occupation order."""
        a = np.asarray(eigenvalues, dtype=float)
        out = np.ones(1)
        for ak in a:
            out = np.concatenate([out, out * ak])
        return out


def lambda_spectrum(A) -> np.ndarray:
    a = _spectrum(A)
    return FermiFock(a.size).diagonal(a)


def lambda_matrix(A) -> np.ndarray:
    """Dense ``Lambda(A)`` on the occupation basis, entries the minors ``det A[S, T]`` with ``|S| = |T|``."""
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    d = A.shape[0]
    fock = FermiFock(d)
    n = fock.total_dim
    out = np.zeros((n, n), dtype=complex)
    subsets = [fock.subset(b) for b in range(n)]
    for i, S in enumerate(subsets):
        for j, T in enumerate(subsets):
            if len(S) == len(T):
                out[i, j] = 1.0 if not S else np.linalg.det(A[np.ix_(S, T)])
    return out


def lambda_trace(A, method: str = "spectral") -> float:
    """``Tr Lambda(A)``: product over eigenvalues, or the sum of principal minors."""
    if method == "spectral":
        return float(np.prod(1.0 + _spectrum(A)))
    if method == "minors":
        A = np.atleast_2d(np.asarray(A))
        d = A.shape[0]
        total = 1.0
        for r in range(1, d + 1):
            for S in itertools.combinations(range(d), r):
                total += np.linalg.det(A[np.ix_(S, S)]).real
        return float(total)
    raise InputError(f"unknown method {method!r}")


@dataclass(frozen=True)
class BoseFockTruncated:
    one_particle_dim: int
    nmax: int = DEFAULT_NMAX

    def __post_init__(self):
        if not (0 <= self.one_particle_dim <= MAX_BOSE_DIM):
            raise InputError(f"truncated Bose Fock space limited to d <= {MAX_BOSE_DIM}")
        if self.nmax < 0:
            raise InputError("nmax must be nonnegative")

    @property
    def total_dim(self) -> int:
        return (self.nmax + 1) ** self.one_particle_dim

    def diagonal(self, eigenvalues) -> np.ndarray:
        """Eigenvalues ``prod_k a_k^(n_k)`` over all occupations ``n_k <= nmax``."""
        out = np.ones(1)
        powers = np.arange(self.nmax + 1)
        for ak in np.asarray(eigenvalues, dtype=float):
            out = np.outer(out, ak ** powers).ravel()
        return out


@dataclass(frozen=True)
class TruncatedTrace:
    value: float
    tail_bound: float


def gamma_trace(A, nmax: int = DEFAULT_NMAX) -> TruncatedTrace:
    """``prod_k sum_{n <= nmax} a_k^n`` with a bound on the omitted tail."""
    a = _spectrum(A)
    _check_bose(a)
    if a.size == 0:
        return TruncatedTrace(1.0, 0.0)
    # geometric partial sums, written to avoid cancellation for small a
    partial = np.array([np.sum(ak ** np.arange(nmax + 1)) for ak in a])
    norm = float(a[-1])
    tail = norm ** (nmax + 1) / (1.0 - norm)
    value = float(np.prod(partial))
    return TruncatedTrace(value, float(np.prod(partial + tail) - value))


def determinant_traces(A) -> tuple[float, float]:
    """``(det(1 - A)^-1, det(1 + A))``."""
    A = np.atleast_2d(np.asarray(A))
    eye = np.eye(A.shape[0])
    return float(1.0 / np.linalg.det(eye - A).real), float(np.linalg.det(eye + A).real)


# -- entropies ------------------------------------------------------------------------------


def gamma_entropy(A) -> float:
    """``-Tr(A (1 - A)^-1 log A) det(1 - A)^-1``, the entropy of the unnormalized ``Gamma(A)``."""
    a = _spectrum(A)
    _check_bose(a)
    return float(-np.sum(_xlogx(a) / (1.0 - a)) / np.prod(1.0 - a))


def lambda_entropy(A) -> float:
    """``-Tr(A (1 + A)^-1 log A) det(1 + A)``, the entropy of the unnormalized ``Lambda(A)``."""
    a = _spectrum(A)
    return float(-np.sum(_xlogx(a) / (1.0 + a)) * np.prod(1.0 + a))


def density_entropy(eigenvalues) -> float:
    """``-sum p log p`` over an explicit density-matrix spectrum (no normalization)."""
    return -float(np.sum(_xlogx(eigenvalues)))


def gamma_entropy_bruteforce(A, nmax: int = DEFAULT_NMAX) -> float:
    a = _spectrum(A)
    _check_bose(a)
    return density_entropy(BoseFockTruncated(a.size, nmax).diagonal(a))


def lambda_entropy_bruteforce(A, materialize: bool = False) -> float:
    if materialize:
        rho = lambda_matrix(A)
        return density_entropy(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)))
    return density_entropy(lambda_spectrum(A))


def normalized_entropy(unnormalized_entropy: float, trace: float) -> float:
    """``S(rho / t) = S(rho) / t + log t``."""
    return unnormalized_entropy / trace + math.log(trace)


def gamma_entropy_normalized(A) -> float:
    a = _spectrum(A)
    return normalized_entropy(gamma_entropy(np.diag(a)), float(1.0 / np.prod(1.0 - a)))


def lambda_entropy_normalized(A) -> float:
    a = _spectrum(A)
    return normalized_entropy(lambda_entropy(np.diag(a)), float(np.prod(1.0 + a)))


# -- probes ---------------------------------------------------------------------------------


def finiteness_equivalence_probe(lam, checkpoints=None) -> list[dict]:
    """Entropies of ``A``, ``Gamma(A)`` and ``Lambda(A)`` along growing truncations of ``lam``.

    ``S_A = -sum lam log lam``; the Fock entropies are the normalized ones.
    Each row carries the increment from the previous row and the ratios to ``S_A``.
    """
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0) or np.any(lam >= 1):
        raise InputError("probe needs lam in (0, 1)")
    checkpoints = range(1, lam.size + 1) if checkpoints is None else checkpoints
    p = lam / (1.0 + lam)
    nbar = lam / (1.0 - lam)
    sA = np.cumsum(-_xlogx(lam))
    sL = np.cumsum(-_xlogx(p) - _xlogx(1.0 - p))
    sG = np.cumsum(_xlogx(1.0 + nbar) - _xlogx(nbar))
    rows, prev = [], None
    for k in checkpoints:
        row = {"k": int(k), "S_A": float(sA[k - 1]), "S_gamma": float(sG[k - 1]), "S_lambda": float(sL[k - 1])}
        for key in ("S_A", "S_gamma", "S_lambda"):
            row["d_" + key] = row[key] - prev[key] if prev else row[key]
        row["ratio_gamma"] = row["S_gamma"] / row["S_A"]
        row["ratio_lambda"] = row["S_lambda"] / row["S_A"]
        rows.append(row)
        prev = row
    return rows


def two_dim_fock_check(lam: float, nmax: int = DEFAULT_NMAX) -> dict:
    """Vacuum density-matrix spectra and traces for the two-dimensional model at ``lam``."""
    if not (0.0 < lam < 1.0):
        raise InputError("lam must lie in (0, 1)")
    bose = BoseFockTruncated(1, nmax).diagonal([lam])
    fermi = FermiFock(1).diagonal([lam])
    trace = gamma_trace(np.array([[lam]]), nmax)
    s_bose = normalized_entropy(density_entropy(bose), float(bose.sum()))
    return {
        "bose_spectrum_prefix": [float(x) for x in bose[:6]],
        "bose_trace": trace.value,
        "bose_tail_bound": trace.tail_bound,
        "fermi_spectrum": [float(x) for x in fermi],
        "fermi_trace": float(fermi.sum()),
        "bose_entropy_normalized": s_bose,
        "fermi_entropy_normalized": normalized_entropy(density_entropy(fermi), float(fermi.sum())),
    }


def random_contraction(rng: np.random.Generator, d: int, upper: float = 0.95) -> np.ndarray:
    """Random Hermitian ``A`` with spectrum uniform in ``[0, upper)``."""
    U, _ = np.linalg.qr(rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)))
    return (U * rng.uniform(0.0, upper, size=d)) @ U.conj().T


def verification_battery(seed: int = 0, samples: int = 100) -> list[dict]:
    rng = np.random.default_rng(seed)
    fermi = logt = ent = 0.0
    bose_within = True
    for _ in range(samples):
        A = random_contraction(rng, int(rng.integers(1, 7)))
        det_b, det_f = determinant_traces(A)
        fermi = max(fermi, abs(lambda_trace(A) - det_f), abs(lambda_trace(A, "minors") - det_f))
        logt = max(logt, abs(math.log(lambda_trace(A)) - float(np.sum(np.log1p(_spectrum(A))))))
        ent = max(ent, abs(lambda_entropy(A) - lambda_entropy_bruteforce(A)))
        B = random_contraction(rng, int(rng.integers(1, 4)), upper=0.8)
        tr = gamma_trace(B)
        bose_within &= abs(tr.value - determinant_traces(B)[0]) <= tr.tail_bound + 1e-12 * tr.value
        # spectrum below 1/2 keeps the truncated brute force exact to rounding
        C = random_contraction(rng, int(rng.integers(1, 4)), upper=0.5)
        ent = max(ent, abs(gamma_entropy(C) - gamma_entropy_bruteforce(C)))
    half = gamma_trace(np.array([[0.5]]))
    two = two_dim_fock_check(1.0 / 3.0)
    checks = [
        ("fock.fermi_determinant", fermi, 1e-9),
        ("fock.log_trace", logt, 1e-9),
        ("fock.entropy_closed_vs_bruteforce", ent, 1e-8),
        ("fock.bose_half", abs(half.value - 2.0), 1e-12),
        ("fock.bose_tail_bound", 0.0 if bose_within else 1.0, 0.0),
        ("fock.two_dim_bose_trace", abs(two["bose_trace"] - 1.5), 1e-10),
        ("fock.two_dim_fermi_trace", abs(two["fermi_trace"] - 4.0 / 3.0), 1e-15),
        ("fock.bose_entropy_half", abs(two_dim_fock_check(0.5)["bose_entropy_normalized"] - 2 * math.log(2)), 1e-8),
    ]
    return [{"name": n, "value": float(v), "tol": t, "passed": bool(v <= t)} for n, v, t in checks]

"""Canonical intermediate projection, angle operator and entropies.

For the symmetric family at ``phi`` the canonical intermediate subspace has
projection ``P12 = M_g + M_h R``.  With the Hardy projection ``P`` the angle
operator is ``sigma = 4 [P12, P] (1 - P12) [P, P12]``; its eigenvalues ``mu``
give modular eigenvalues through ``mu = 4 lam / (1 + lam)^2``.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DiagnosticError, InputError
from .fourier_core import (
    CircleOperator,
    PSD_CLIP_TOL,
    ModeGrid,
    RealLinearOperator,
    Symbol,
    arc_indicator_coefficients,
    build_hardy_projection,
    build_multiplication,
    build_reflection,
    clip_unit_spectrum,
    hermitian_eigenvalues,
    realify_conjugate_matrix,
    realify_matrix,
)
from .mobius_geometry import (
    DEFAULT_FFT_SAMPLES,
    closed_form_g_coeffs,
    closed_form_h_coeffs,
    cross_ratio_to_phi,
    g_coefficients,
    h_coefficients,
)

log = logging.getLogger(__name__)

DEFECT_LIMIT = 0.05
LAMBDA_FLOOR = 1e-12
CSV_COLUMNS = (
    "phi", "N", "mu_count", "S_complex", "S_real", "S_fermi", "S_bose",
    "defect_idem", "defect_herm", "lower_bound",
)


@dataclass(frozen=True)
class CanonicalProjectionBundle:
    phi: float
    grid: ModeGrid
    P12: CircleOperator
    P: CircleOperator
    idempotency_defect: float
    hermiticity_defect: float
    g: Symbol = field(repr=False)
    h: Symbol = field(repr=False)


def _defect(a: np.ndarray, dim: int) -> float:
    return float(np.linalg.norm(a) / math.sqrt(dim))


def build_P12(phi: float, grid: ModeGrid, sample_count: int = DEFAULT_FFT_SAMPLES,
              coefficients: str = "fft") -> CanonicalProjectionBundle:
    """Finite section of ``M_g + M_h R``.

    ``coefficients="closed"`` uses the exact ``phi = pi/2`` coefficients instead
    of the DFT of the pointwise symbols.
    """
    band = 2 * grid.cutoff
    if coefficients == "fft":
        g = g_coefficients(phi, band, sample_count)
        h = h_coefficients(phi, band, sample_count)
    elif coefficients == "closed":
        if abs(phi - math.pi / 2) > 1e-15:
            raise InputError("closed-form coefficients exist only for phi = pi/2")
        g, h = closed_form_g_coeffs(band), closed_form_h_coeffs(band)
    else:
        raise InputError(f"unknown coefficient route {coefficients!r}")
    return projection_bundle(phi, grid, g, h)


def projection_bundle(phi: float, grid: ModeGrid, g: Symbol, h: Symbol) -> CanonicalProjectionBundle:
    R = build_reflection(grid)
    X = build_multiplication(g, grid).entries + build_multiplication(h, grid).entries @ R.entries
    d = grid.dim
    idem = _defect(X @ X - X, d)
    herm = _defect(X - X.conj().T, d)
    if grid.cutoff >= 256 and max(idem, herm) > DEFECT_LIMIT:
        raise DiagnosticError(
            f"projection defects idem={idem:.3g}, herm={herm:.3g} exceed {DEFECT_LIMIT}", stage="build_P12"
        )
    X = 0.5 * (X + X.conj().T)
    P12 = CircleOperator(grid, X, hermitian=True, projection_claimed=True)
    return CanonicalProjectionBundle(phi, grid, P12, build_hardy_projection(grid), idem, herm, g, h)


def containment_defect(bundle: CanonicalProjectionBundle, nmax_extra: int = 0) -> float:
    """``||P12 M_chi - M_chi||_F / sqrt(dim)`` for ``chi`` the indicator of ``I1``."""
    chi = arc_indicator_coefficients(0.0, bundle.phi, 2 * bundle.grid.cutoff + nmax_extra)
    M = build_multiplication(chi, bundle.grid).entries
    return _defect(bundle.P12.entries @ M - M, bundle.grid.dim)


def angle_operator(P12: np.ndarray, P: np.ndarray) -> np.ndarray:
    """``4 [P12, P] (1 - P12) [P, P12]``, symmetrised."""
    C = P12 @ P - P @ P12
    eye = np.eye(P12.shape[0])
    sigma = 4.0 * C @ (eye - P12) @ C.conj().T
    return 0.5 * (sigma + sigma.conj().T)


def build_sigma(bundle: CanonicalProjectionBundle) -> CircleOperator:
    sigma = angle_operator(bundle.P12.entries, bundle.P.entries)
    return CircleOperator(bundle.grid, sigma, hermitian=True)


def sigma_spectrum(sigma: CircleOperator) -> np.ndarray:
    """Descending eigenvalues of ``sigma`` clipped to ``[0, 1]``."""
    return clip_unit_spectrum(hermitian_eigenvalues(sigma), stage="build_sigma")


# -- entropies ------------------------------------------------------------------------


def _xlogx(x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x, dtype=float)
    pos = x > 0
    out[pos] = x[pos] * np.log(x[pos])
    return out


def subspace_entropy(mu, convention: str = "real") -> float:
    """``-sum mu log mu``; doubled under the real-linear convention."""
    if convention not in ("real", "complex"):
        raise InputError(f"convention must be 'real' or 'complex', got {convention!r}")
    mu = np.asarray(mu, dtype=float)
    if mu.size and (mu.min() < -PSD_CLIP_TOL or mu.max() > 1.0 + PSD_CLIP_TOL):
        raise InputError("angle-operator eigenvalues must lie in [0, 1]")
    mu = np.clip(mu, 0.0, 1.0)
    s = -float(np.sum(_xlogx(mu)))
    return 2.0 * s if convention == "real" else s


def angle_from_modular(lam):
    lam = np.asarray(lam, dtype=float)
    return 4.0 * lam / (1.0 + lam) ** 2


def modular_from_angle(mu):
    """Root in ``(0, 1]`` of ``mu = 4 lam / (1 + lam)^2``."""
    mu = np.asarray(mu, dtype=float)
    if np.any(mu <= 0) or np.any(mu > 1):
        raise InputError("modular_from_angle needs mu in (0, 1]")
    # cancellation-free form of ((2 - mu) - 2 sqrt(1 - mu)) / mu
    lam = mu / ((2.0 - mu) + 2.0 * np.sqrt(1.0 - mu))
    return lam if lam.ndim else float(lam)


def recover_modular_spectrum(mu, floor: float = LAMBDA_FLOOR) -> tuple[np.ndarray, int]:
    """One ``lam`` per complex ``mu`` eigenvalue; entries with ``lam < floor`` are dropped."""
    mu = np.asarray(mu, dtype=float)
    pos = mu[mu > 0]
    lam = modular_from_angle(pos) if pos.size else np.zeros(0)
    lam = np.atleast_1d(lam)
    keep = lam >= floor
    return lam[keep], int(mu.size - np.count_nonzero(keep))


def _check_lambda(lam, allow_one: bool) -> np.ndarray:
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    if np.any(lam <= 0) or np.any(lam > 1) or (not allow_one and np.any(lam >= 1)):
        raise InputError("modular eigenvalues must lie in (0, 1)")
    return lam


def fermi_entropy_normalized(lam) -> float:
    """Entropy of the normalised Fermi density matrix ``Lambda(lam) / Tr``."""
    lam = _check_lambda(lam, allow_one=True)
    p = lam / (1.0 + lam)
    return -float(np.sum(_xlogx(p) + _xlogx(1.0 - p)))


def bose_entropy_normalized(lam) -> float:
    """Entropy of the normalised Bose density matrix; modes with ``lam = 1`` diverge and are skipped."""
    lam = _check_lambda(lam, allow_one=True)
    divergent = lam >= 1.0 - 1e-15
    if np.any(divergent):
        log.warning("excluding %d divergent Bose mode(s) with lam = 1", int(np.count_nonzero(divergent)))
        lam = lam[~divergent]
    nbar = lam / (1.0 - lam)
    return float(np.sum(_xlogx(1.0 + nbar) - _xlogx(nbar)))


def trace_identities(lam) -> tuple[float, float]:
    """``(prod (1 - lam)^-1, prod (1 + lam))``."""
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    if lam.size == 0:
        return 1.0, 1.0
    if np.any(lam < 0) or np.any(lam >= 1):
        raise InputError("trace identities need lam in [0, 1)")
    return float(np.exp(-np.sum(np.log1p(-lam)))), float(np.exp(np.sum(np.log1p(lam))))


def entropy_lower_bound(phi: float) -> float:
    if not (0.0 < phi < math.pi):
        raise InputError("phi must lie in (0, pi)")
    return math.log(1.0 / math.cos(phi / 2.0)) / 6.0


# -- real fermion structure -----------------------------------------------------------


def _window_modes(grid: ModeGrid) -> np.ndarray:
    # largest window closed under n -> -n - 1
    return np.arange(-grid.cutoff, grid.cutoff)


def build_Q(grid: ModeGrid) -> RealLinearOperator:
    """Realified ``Q(z^n) = z^(-n-1)`` on the modes ``-N..N-1``."""
    modes = _window_modes(grid)
    d = modes.size
    A = np.zeros((d, d))
    A[(-modes - 1) + grid.cutoff, modes + grid.cutoff] = 1.0
    return RealLinearOperator(realify_conjugate_matrix(A), conjugate_linear_origin=True, grid=grid)


def window(op: CircleOperator) -> np.ndarray:
    """Drop mode ``+N``; Toeplitz and diagonal sections restrict exactly."""
    return op.entries[:-1, :-1]


def q_commutation_defect(bundle: CanonicalProjectionBundle, Q: RealLinearOperator | None = None) -> float:
    Q = build_Q(bundle.grid) if Q is None else Q
    X = realify_matrix(window(bundle.P12))
    return _defect(Q.entries @ X - X @ Q.entries, X.shape[0] // 2)


def q_eigenbases(Q: RealLinearOperator) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal real bases of the ``+1`` and ``-1`` eigenspaces of ``Q``."""
    w, v = np.linalg.eigh(Q.entries)
    if np.max(np.abs(np.abs(w) - 1.0)) > 1e-12:
        raise DiagnosticError("Q is not an involution", stage="build_Q")
    return v[:, w > 0], v[:, w < 0]


def eigenspace_entropy_split(sigma_window: np.ndarray, Q: RealLinearOperator) -> dict:
    """Entropies of the realified ``sigma`` compressed to the ``Q = +1`` and ``Q = -1`` eigenspaces."""
    S_R = realify_matrix(sigma_window)
    Vp, Vm = q_eigenbases(Q)
    plus = clip_unit_spectrum(hermitian_eigenvalues(Vp.T @ S_R @ Vp), stage="q_split")
    minus = clip_unit_spectrum(hermitian_eigenvalues(Vm.T @ S_R @ Vm), stage="q_split")
    cross = float(np.linalg.norm(Vp.T @ S_R @ Vm))
    full = clip_unit_spectrum(hermitian_eigenvalues(sigma_window), stage="q_split")
    return {
        "S_plus": -float(np.sum(_xlogx(plus))),
        "S_minus": -float(np.sum(_xlogx(minus))),
        "S_real_window": subspace_entropy(full, "real"),
        "cross_block_norm": cross,
    }


def real_fermion_check(bundle: CanonicalProjectionBundle) -> dict:
    Q = build_Q(bundle.grid)
    sigma_w = angle_operator(window(bundle.P12), window(bundle.P))
    out = eigenspace_entropy_split(sigma_w, Q)
    P_R = realify_matrix(window(bundle.P))
    out["qpq_defect"] = float(np.max(np.abs(Q.entries @ P_R @ Q.entries - (np.eye(P_R.shape[0]) - P_R))))
    out["q_squared_defect"] = float(np.max(np.abs(Q.entries @ Q.entries - np.eye(Q.entries.shape[0]))))
    out["q_commutation_defect"] = q_commutation_defect(bundle, Q)
    return out


# -- pipeline -------------------------------------------------------------------------


@dataclass
class SpectralSummary:
    phi: float
    cutoff: int
    sample_count: int
    mu: list
    lam: list
    dropped: int
    S_subspace_complex: float
    S_subspace_real: float
    S_fermi_normalized: float
    S_bose_normalized: float
    trace_fermi: float
    trace_bose: float
    type_I_finite: bool
    defect_idem: float
    defect_herm: float
    lower_bound: float
    interval: list | None = None

    @property
    def mu_count(self) -> int:
        return len(self.lam)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mu_count"] = self.mu_count
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    def csv_row(self) -> dict:
        return {
            "phi": self.phi, "N": self.cutoff, "mu_count": self.mu_count,
            "S_complex": self.S_subspace_complex, "S_real": self.S_subspace_real,
            "S_fermi": self.S_fermi_normalized, "S_bose": self.S_bose_normalized,
            "defect_idem": self.defect_idem, "defect_herm": self.defect_herm,
            "lower_bound": self.lower_bound,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerow({k: _fmt(v) for k, v in self.csv_row().items()})
        return buf.getvalue()


def _fmt(v):
    return repr(float(v)) if isinstance(v, (float, np.floating)) else v


def run_pipeline(phi: float | None = None, cutoff: int = 512, *, interval=None,
                 sample_count: int = DEFAULT_FFT_SAMPLES) -> SpectralSummary:
    """Symbols -> P12 -> sigma -> spectrum -> modular eigenvalues -> entropies.

    ``interval = (a, b, c, d)`` means inner ``(a, b)`` inside outer ``(c, d)``;
    it is reduced to the symmetric family through the cross ratio.
    """
    if (phi is None) == (interval is None):
        raise InputError("give exactly one of phi or interval")
    if interval is not None:
        a, b, c, d = (float(x) for x in interval)
        phi = cross_ratio_to_phi((a, b), (c, d))
        interval = [a, b, c, d]
    grid = ModeGrid(cutoff)
    bundle = build_P12(phi, grid, sample_count)
    mu = sigma_spectrum(build_sigma(bundle))
    lam, dropped = recover_modular_spectrum(mu)
    lam_open = lam[lam < 1.0]
    t_bose, t_fermi = trace_identities(lam_open)
    return SpectralSummary(
        phi=float(phi),
        cutoff=cutoff,
        sample_count=sample_count,
        mu=[float(x) for x in mu],
        lam=[float(x) for x in lam],
        dropped=dropped,
        S_subspace_complex=subspace_entropy(mu, "complex"),
        S_subspace_real=subspace_entropy(mu, "real"),
        S_fermi_normalized=fermi_entropy_normalized(lam) if lam.size else 0.0,
        S_bose_normalized=bose_entropy_normalized(lam) if lam.size else 0.0,
        trace_fermi=t_fermi,
        trace_bose=t_bose,
        type_I_finite=bool(np.isfinite(t_bose) and np.isfinite(t_fermi)),
        defect_idem=bundle.idempotency_defect,
        defect_herm=bundle.hermiticity_defect,
        lower_bound=entropy_lower_bound(phi),
        interval=interval,
    )

"""Truncated Fourier-mode calculus on L^2(S^1).

Operators are represented by their compressions to the modes ``-N..N`` of the
basis ``z**n``.  Matrix row/column ``i`` always carries mode ``i - N``.

Real-linear operators (needed for conjugate-linear maps) act on stacked
coordinates ``(Re v, Im v)``; a complex matrix ``A`` becomes
``[[Re A, -Im A], [Im A, Re A]]`` and the conjugate-linear map ``v -> A conj(v)``
becomes ``[[Re A, Im A], [Im A, -Re A]]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np
import scipy.linalg

from .errors import DiagnosticError, InputError

HERMITIAN_TOL = 1e-12
PSD_CLIP_TOL = 1e-8


@dataclass(frozen=True)
class ModeGrid:
    """Modes ``-cutoff..cutoff``; ``dim = 2*cutoff + 1``."""

    cutoff: int

    def __post_init__(self):
        if int(self.cutoff) != self.cutoff or self.cutoff < 1:
            raise InputError(f"cutoff must be a positive integer, got {self.cutoff!r}")

    @property
    def dim(self) -> int:
        return 2 * self.cutoff + 1

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.cutoff, self.cutoff + 1)

    def index(self, mode):
        """Matrix index of ``mode`` (vectorised)."""
        mode = np.asarray(mode)
        if np.any(np.abs(mode) > self.cutoff):
            raise InputError(f"mode outside grid of cutoff {self.cutoff}")
        return mode + self.cutoff


class Symbol:
    """Fourier coefficients ``f_n`` of a function on the circle.

    Coefficients are stored densely for ``|n| <= nmax``.  If ``support_bound``
    is given, every coefficient with ``|n| > support_bound`` is exactly zero,
    and queries beyond ``nmax`` are answered with zeros instead of raising.
    """

    def __init__(self, values, nmax: int, support_bound: int | None = None, label: str = ""):
        values = np.array(values, dtype=complex)
        if values.shape != (2 * nmax + 1,):
            raise InputError(f"expected {2 * nmax + 1} coefficients for nmax={nmax}, got {values.shape}")
        if support_bound is not None:
            if support_bound < 0:
                raise InputError("support_bound must be nonnegative")
            outside = np.abs(np.arange(-nmax, nmax + 1)) > support_bound
            values[outside] = 0.0
        values.setflags(write=False)
        self._values = values
        self.nmax = int(nmax)
        self.support_bound = support_bound
        self.label = label

    @classmethod
    def from_mapping(cls, coefficients: Mapping[int, complex], label: str = "", support_bound=None):
        """Finite mapping ``{n: f_n}``; all unlisted modes are zero."""
        if not coefficients:
            nmax = 0
        else:
            nmax = max(abs(int(n)) for n in coefficients)
        values = np.zeros(2 * nmax + 1, dtype=complex)
        for n, v in coefficients.items():
            values[int(n) + nmax] = v
        if support_bound is None:
            support_bound = nmax
        return cls(values, nmax, support_bound=support_bound, label=label)

    @classmethod
    def from_function(cls, func, nmax: int, label: str = "", support_bound=None):
        """Coefficients given by a vectorised function of the mode index."""
        n = np.arange(-nmax, nmax + 1)
        return cls(func(n), nmax, support_bound=support_bound, label=label)

    @property
    def values(self) -> np.ndarray:
        """Read-only coefficient array for modes ``-nmax..nmax``."""
        return self._values

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.nmax, self.nmax + 1)

    def coeff(self, n):
        n = np.asarray(n)
        inside = np.abs(n) <= self.nmax
        if not np.all(inside):
            if self.support_bound is None:
                raise InputError(
                    f"symbol {self.label!r} resolved only to |n| <= {self.nmax}; "
                    f"requested |n| = {int(np.max(np.abs(n)))}"
                )
        out = np.zeros(n.shape, dtype=complex)
        out[inside] = self._values[n[inside] + self.nmax]
        return out if out.ndim else complex(out)

    def band(self, nmax: int) -> np.ndarray:
        """Coefficients for modes ``-nmax..nmax`` (raises if unresolved)."""
        return self.coeff(np.arange(-nmax, nmax + 1))

    def evaluate(self, z) -> np.ndarray:
        """Truncated Fourier sum ``sum_n f_n z**n``."""
        z = np.asarray(z, dtype=complex)
        keep = np.flatnonzero(self._values)
        if keep.size == 0:
            return np.zeros(z.shape, dtype=complex)
        n = keep - self.nmax
        return (self._values[keep] * z[..., None] ** n).sum(axis=-1)

    def conjugate_reflected(self) -> "Symbol":
        """Symbol of ``conj(f)``: coefficients ``conj(f_{-n})``."""
        return Symbol(np.conj(self._values[::-1]), self.nmax, self.support_bound, label=f"conj({self.label})")

    def __repr__(self):
        return f"Symbol(label={self.label!r}, nmax={self.nmax}, support_bound={self.support_bound})"

    # -- line-oriented text format --------------------------------------------------

    def to_text(self) -> str:
        label = self.label.replace("\n", " ") or "unnamed"
        lines = [f"# symbol {label} nmax={self.nmax}"]
        for n, v in zip(self.modes, self._values):
            lines.append(f"{n} {float(v.real)!r} {float(v.imag)!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Symbol":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("# symbol "):
            raise InputError("missing '# symbol <label> nmax=<n>' header")
        head = lines[0][len("# symbol "):]
        label, sep, tail = head.rpartition(" nmax=")
        if not sep:
            raise InputError("header lacks nmax=")
        nmax = int(tail)
        values = np.zeros(2 * nmax + 1, dtype=complex)
        seen = set()
        for ln in lines[1:]:
            parts = ln.split()
            if len(parts) != 3:
                raise InputError(f"bad symbol line: {ln!r}")
            n = int(parts[0])
            if abs(n) > nmax:
                raise InputError(f"mode {n} exceeds declared nmax={nmax}")
            values[n + nmax] = complex(float(parts[1]), float(parts[2]))
            seen.add(n)
        if len(seen) != 2 * nmax + 1:
            raise InputError("symbol file does not list every mode in -nmax..nmax")
        return cls(values, nmax, support_bound=None, label="" if label == "unnamed" else label)

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path) -> "Symbol":
        return cls.from_text(Path(path).read_text())


@dataclass(frozen=True)
class CircleOperator:
    grid: ModeGrid
    entries: np.ndarray
    hermitian: bool = False
    projection_claimed: bool = False

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=complex)
        if entries.shape != (self.grid.dim, self.grid.dim):
            raise InputError(f"entries shape {entries.shape} does not match grid dim {self.grid.dim}")
        if self.hermitian:
            asym = np.max(np.abs(entries - entries.conj().T)) if entries.size else 0.0
            if asym > HERMITIAN_TOL:
                raise InputError(f"hermitian flag set but max|A - A*| = {asym:.3e}")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    def __matmul__(self, other: "CircleOperator") -> "CircleOperator":
        return CircleOperator(self.grid, self.entries @ other.entries)

    def adjoint(self) -> "CircleOperator":
        return CircleOperator(self.grid, self.entries.conj().T, hermitian=self.hermitian)


@dataclass(frozen=True)
class RealLinearOperator:
    """Real matrix acting on ``(Re v, Im v)``; ``grid`` is None outside the circle setting."""

    entries: np.ndarray
    conjugate_linear_origin: bool = False
    grid: ModeGrid | None = field(default=None, compare=False)

    @property
    def complex_dim(self) -> int:
        return self.entries.shape[0] // 2


# -- basic operators ----------------------------------------------------------------


def build_hardy_projection(grid: ModeGrid) -> CircleOperator:
    diag = (grid.modes >= 0).astype(complex)
    return CircleOperator(grid, np.diag(diag), hermitian=True, projection_claimed=True)


def build_reflection(grid: ModeGrid) -> CircleOperator:
    """``(Rf)(z) = f(-z)``: diagonal ``(-1)**n``."""
    signs = np.where(grid.modes % 2 == 0, 1.0, -1.0).astype(complex)
    return CircleOperator(grid, np.diag(signs), hermitian=True)


def toeplitz_section(coefficients: np.ndarray, cutoff: int) -> np.ndarray:
    """Matrix ``T[m, n] = c_{m-n}`` from ``c`` indexed by modes ``-2N..2N``."""
    c = np.asarray(coefficients, dtype=complex)
    if c.shape != (4 * cutoff + 1,):
        raise InputError("need coefficients for modes -2N..2N")
    mid = 2 * cutoff
    col = c[mid:]           # f_0, f_1, ..., f_2N
    row = c[mid::-1]        # f_0, f_-1, ..., f_-2N
    return scipy.linalg.toeplitz(col, row)


def build_multiplication(symbol: Symbol, grid: ModeGrid) -> CircleOperator:
    """Compression of ``M_f`` to the grid: entry ``(m, n) = f_{m-n}``."""
    band = symbol.band(2 * grid.cutoff)
    return CircleOperator(grid, toeplitz_section(band, grid.cutoff))


def arc_indicator_coefficients(arc_start: float, arc_end: float, nmax: int, label: str | None = None) -> Symbol:
    """Fourier coefficients of the indicator of the arc ``{e^{it} : arc_start < t < arc_end}``."""
    length = arc_end - arc_start
    if not (0.0 < length < 2 * math.pi):
        raise InputError(f"degenerate arc ({arc_start}, {arc_end})")
    n = np.arange(-nmax, nmax + 1)
    out = np.empty(n.shape, dtype=complex)
    nz = n != 0
    m = n[nz]
    out[nz] = 1j / (2 * math.pi * m) * (np.exp(-1j * m * arc_end) - np.exp(-1j * m * arc_start))
    out[~nz] = length / (2 * math.pi)
    return Symbol(out, nmax, label=label or f"chi({arc_start:.6g},{arc_end:.6g})")


# -- Schatten sums ------------------------------------------------------------------


def schatten_power_sum(singular_values, q: float) -> float:
    """``sum_i s_i**q``."""
    if not q > 0:
        raise InputError(f"q must be positive, got {q}")
    s = np.asarray(singular_values, dtype=float)
    if np.any(s < 0):
        raise InputError("singular values must be nonnegative")
    return float(np.sum(s[s > 0] ** q))


def schatten_qnorm(singular_values, q: float) -> float:
    return schatten_power_sum(singular_values, q) ** (1.0 / q)


# -- realification ------------------------------------------------------------------


def realify_matrix(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    return np.block([[a.real, -a.imag], [a.imag, a.real]])


def realify_conjugate_matrix(a: np.ndarray) -> np.ndarray:
    """Real matrix of ``v -> a @ conj(v)``."""
    a = np.asarray(a, dtype=complex)
    return np.block([[a.real, a.imag], [a.imag, -a.real]])


def complexify_matrix(r: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Inverse of :func:`realify_matrix`; raises if ``r`` is not complex-linear."""
    d = r.shape[0] // 2
    x, y = r[:d, :d], r[d:, :d]
    if max(np.max(np.abs(r[d:, d:] - x)), np.max(np.abs(r[:d, d:] + y))) > tol * max(1.0, np.max(np.abs(r))):
        raise InputError("real matrix does not commute with the complex structure")
    return x + 1j * y


def complex_structure(d: int) -> np.ndarray:
    """Realified multiplication by ``i``."""
    return realify_matrix(1j * np.eye(d))


def realify(op: CircleOperator) -> RealLinearOperator:
    return RealLinearOperator(realify_matrix(op.entries), conjugate_linear_origin=False, grid=op.grid)


def realify_conjugate_linear(matrix: np.ndarray, grid: ModeGrid | None = None) -> RealLinearOperator:
    """Realify the conjugate-linear map ``v -> matrix @ conj(v)``."""
    return RealLinearOperator(realify_conjugate_matrix(matrix), conjugate_linear_origin=True, grid=grid)


# -- spectra ------------------------------------------------------------------------


def _as_matrix(op) -> np.ndarray:
    if isinstance(op, CircleOperator):
        return op.entries
    if isinstance(op, RealLinearOperator):
        return op.entries
    return np.asarray(op)


def hermitian_eigenvalues(op, tol: float = 1e-10, check_residual: bool = False) -> np.ndarray:
    """Full spectrum of a Hermitian (or real symmetric) matrix, descending.

    LAPACK ``heevr`` via :func:`numpy.linalg.eigh`.  Input whose asymmetry
    exceeds ``tol * ||A||`` is rejected.
    """
    a = _as_matrix(op)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputError("square matrix required")
    scale = max(np.max(np.abs(a)), 1.0) if a.size else 1.0
    if a.size and np.max(np.abs(a - a.conj().T)) > tol * scale:
        raise InputError("matrix is not Hermitian within tolerance")
    if check_residual:
        w, v = np.linalg.eigh(a)
        norm_a = np.linalg.norm(a, 2) if a.size else 0.0
        resid = np.linalg.norm(a @ v - v * w, axis=0)
        if resid.size and np.max(resid) > 1e-10 * max(norm_a, 1e-300):
            raise DiagnosticError(f"eigen residual {np.max(resid):.3e} exceeds 1e-10*||A||", stage="eigensolve")
    else:
        w = np.linalg.eigvalsh(a)
    return w[::-1].copy()


def clip_unit_spectrum(values, tol: float = PSD_CLIP_TOL, upper: float | None = 1.0, stage: str = "spectrum") -> np.ndarray:
    """Clip values in ``[-tol, 0)`` to 0 (and ``(upper, upper+tol]`` to ``upper``).

    Anything further outside is a numerical failure, not noise.
    """
    v = np.asarray(values, dtype=float)
    if v.size and v.min() < -tol:
        raise DiagnosticError(f"eigenvalue {v.min():.3e} below -{tol:g}", stage=stage)
    if upper is not None and v.size and v.max() > upper + tol:
        raise DiagnosticError(f"eigenvalue {v.max():.6g} above {upper}+{tol:g}", stage=stage)
    return np.clip(v, 0.0, upper)


def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``; zeros are skipped."""
    x = np.asarray(x, dtype=float)
    y = np.abs(np.asarray(y))
    keep = y > 0
    if np.count_nonzero(keep) < 2:
        raise InputError("need at least two nonzero values to fit a power law")
    return float(np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)[0])

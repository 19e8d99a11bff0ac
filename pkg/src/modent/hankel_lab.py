"""Hankel sections of circle symbols and Schatten quasi-norm stability.

The Hankel section of ``f`` is ``H[k, m] = f_(k + m + 1)`` for ``k, m >= 0``;
it is the matrix of ``P M_f (1 - P)`` between the negative modes ``-1, -2, ...``
and the nonnegative modes.  Schatten membership for ``q < 1`` cannot be
certified on finite sections, so convergence of ``sum s_i^q`` in the section
size is used as the numerical proxy.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg as sla

from .errors import InputError
from .fourier_core import ModeGrid, Symbol, loglog_slope, schatten_power_sum

STABLE_PCT = 1.0
STABILITY_COLUMNS = ("M", "q", "sum_sq", "increment_pct", "verdict")


def power_law_symbol(alpha: float, nmax: int, label: str | None = None) -> Symbol:
    """``f_n = (1 + n)^-alpha`` for ``n >= 1`` and zero otherwise."""
    values = np.zeros(2 * nmax + 1)
    n = np.arange(1, nmax + 1)
    values[nmax + 1:] = (1.0 + n) ** -float(alpha)
    return Symbol(values, nmax, label=label or f"power_law_{alpha:g}")


@dataclass
class HankelMatrix:
    symbol: Symbol = field(repr=False)
    size: int
    entries: np.ndarray = field(repr=False)

    @cached_property
    def singular_values(self) -> np.ndarray:
        return np.linalg.svd(self.entries, compute_uv=False)

    def power_sum(self, q: float) -> float:
        return schatten_power_sum(self.singular_values, q)


def build_hankel(symbol: Symbol, M: int) -> HankelMatrix:
    """``M x M`` section with entries ``f_(k + m + 1)``."""
    if M < 1:
        raise InputError("Hankel size must be positive")
    coeffs = np.atleast_1d(symbol.coeff(np.arange(1, 2 * M)))
    return HankelMatrix(symbol, M, sla.hankel(coeffs[:M], coeffs[M - 1:]))


@dataclass
class XiNorms:
    n: np.ndarray
    norms: np.ndarray
    exponent: float | None


def xi_column_norms(symbol: Symbol, n_range: tuple[int, int], fit: bool = True) -> XiNorms:
    """``||xi_n|| = (sum_{k >= 0} |f_(k+n)|^2)^(1/2)``, tails cut at the symbol band."""
    lo, hi = n_range
    if lo < 0 or hi > symbol.nmax or lo > hi:
        raise InputError("n_range must lie inside the symbol band")
    tail = np.abs(symbol.values[symbol.nmax:]) ** 2
    # reverse cumulative sums give every tail at once
    sums = np.cumsum(tail[::-1])[::-1]
    n = np.arange(lo, hi + 1)
    norms = np.sqrt(sums[n])
    exponent = None
    if fit:
        pos = norms > 0
        exponent = loglog_slope(n[pos], norms[pos]) if np.count_nonzero(pos) >= 2 and lo > 0 else None
    return XiNorms(n, norms, exponent)


def xi_power_sums(symbol: Symbol, q: float, cutoffs) -> list[float]:
    """``sum_{1 <= n <= c} ||xi_n||^q`` for each cutoff ``c``."""
    xi = xi_column_norms(symbol, (1, max(cutoffs)), fit=False).norms
    partial = np.cumsum(xi ** q)
    return [float(partial[c - 1]) for c in cutoffs]


@dataclass
class StabilityReport:
    q: float
    rows: list[dict]

    @property
    def verdict(self) -> str:
        return self.rows[-1]["verdict"]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=STABILITY_COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in self.rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
        return buf.getvalue()


def stability_rows(sizes, sums, q: float) -> StabilityReport:
    rows, prev = [], None
    for M, s in zip(sizes, sums):
        inc = float("nan") if prev is None else 100.0 * abs(s - prev) / abs(prev)
        verdict = "n/a" if prev is None else ("stable" if inc < STABLE_PCT else "growing")
        rows.append({"M": int(M), "q": float(q), "sum_sq": float(s), "increment_pct": inc, "verdict": verdict})
        prev = s
    return StabilityReport(float(q), rows)


def schatten_stability(symbol: Symbol, q: float, sizes) -> StabilityReport:
    """``sum s_i^q`` of the Hankel sections for ascending ``sizes``."""
    if not (0 < q <= 1):
        raise InputError("q must lie in (0, 1]")
    sizes = list(sizes)
    if sizes != sorted(sizes) or len(sizes) < 2:
        raise InputError("sizes must be ascending with at least two entries")
    return stability_rows(sizes, [build_hankel(symbol, M).power_sum(q) for M in sizes], q)


def subadditivity_check(rng: np.random.Generator, pairs: int = 50, qs=(0.5, 0.75),
                        size: int = 12, max_rank: int = 6) -> dict:
    """Margin ``||T||_q^q + ||R||_q^q - ||T + R||_q^q`` on random finite-rank pairs (should be >= 0)."""
    worst = {q: math.inf for q in qs}

    def finite_rank():
        r = int(rng.integers(1, max_rank + 1))
        a = rng.standard_normal((size, r)) + 1j * rng.standard_normal((size, r))
        b = rng.standard_normal((r, size)) + 1j * rng.standard_normal((r, size))
        return a @ b

    for _ in range(pairs):
        T, R = finite_rank(), finite_rank()
        s = {k: np.linalg.svd(m, compute_uv=False) for k, m in (("T", T), ("R", R), ("S", T + R))}
        for q in qs:
            margin = schatten_power_sum(s["T"], q) + schatten_power_sum(s["R"], q) - schatten_power_sum(s["S"], q)
            worst[q] = min(worst[q], margin / schatten_power_sum(s["S"], q))
    return {"min_relative_margin": {str(q): float(v) for q, v in worst.items()},
            "holds": all(v >= -1e-12 for v in worst.values())}


def cross_section(bundle) -> np.ndarray:
    """``(1 - P) P12 P`` restricted to negative rows and nonnegative columns."""
    N = bundle.grid.cutoff
    return bundle.P12.entries[:N, N:]


def cross_section_sums(phi: float, cutoffs, q: float, sample_count: int | None = None) -> StabilityReport:
    """``sum s_i^q`` of ``(1 - P) P12 P`` for each grid cutoff."""
    from .canonical_subspace import build_P12
    from .mobius_geometry import DEFAULT_FFT_SAMPLES

    sums = []
    for N in cutoffs:
        b = build_P12(phi, ModeGrid(N), sample_count or DEFAULT_FFT_SAMPLES)
        sums.append(schatten_power_sum(np.linalg.svd(cross_section(b), compute_uv=False), q))
    return stability_rows(list(cutoffs), sums, q)


def singular_value_decay(symbol: Symbol, M: int, index_range: tuple[int, int]) -> float:
    """Log-log slope of the Hankel singular values ``s_j`` (1-based ``j``) over ``index_range``."""
    s = build_hankel(symbol, M).singular_values
    j = np.arange(index_range[0], index_range[1] + 1)
    return loglog_slope(j, s[j - 1])


def verification_battery(seed: int = 0) -> list[dict]:
    from .mobius_geometry import closed_form_h_coeffs

    rng = np.random.default_rng(seed)
    sub = subadditivity_check(rng)
    f = power_law_symbol(2.0, 65536)
    xi = xi_column_norms(f, (16, 512))
    stab = schatten_stability(f, 0.75, [512, 1024])
    h_slope = singular_value_decay(closed_form_h_coeffs(512), 256, (8, 256))
    checks = [
        ("hankel.subadditivity", min(sub["min_relative_margin"].values()), sub["holds"]),
        ("hankel.xi_exponent", xi.exponent, abs(xi.exponent + 1.5) <= 0.1),
        ("hankel.schatten_stability", stab.rows[-1]["increment_pct"], stab.verdict == "stable"),
        ("hankel.h_singular_decay", h_slope, h_slope <= -1.4),
    ]
    return [{"name": n, "value": float(v), "passed": bool(ok)} for n, v, ok in checks]

"""Interval geometry on the circle and the symbols of the canonical projection.

The symmetric family at angle ``phi`` consists of the arcs (angles mod 2*pi)

    I1 = (0, phi),  I2 = (phi - pi, 0),  -I1 = (pi, pi + phi),  -I2 = (phi, pi)

where ``-I`` is the antipodal image ``{-z : z in I}``.  The canonical
projection is ``P12 = M_g + M_h R`` with ``g``, ``h`` built from a square
root ``u`` of ``m1(z**2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .fourier_core import Symbol, arc_indicator_coefficients, loglog_slope

TWO_PI = 2.0 * math.pi
ENDPOINT_TOL = 1e-13
DEFAULT_FFT_SAMPLES = 2 ** 18


def _arc_position(z, start: float) -> np.ndarray:
    return np.mod(np.angle(z) - start, TWO_PI)


def arc_indicator(z, start: float, end: float) -> np.ndarray:
    """Indicator of the open arc ``start < arg z < end`` (mod 2*pi), as float."""
    t = _arc_position(z, start)
    return ((t > 0.0) & (t < end - start)).astype(float)


@dataclass(frozen=True)
class SymmetricIntervalFamily:
    phi: float

    def __post_init__(self):
        if not (0.0 < self.phi < math.pi):
            raise InputError(f"phi must lie in (0, pi), got {self.phi}")

    @property
    def arcs(self) -> dict[str, tuple[float, float]]:
        p = self.phi
        return {
            "I1": (0.0, p),
            "I2": (math.pi + p, TWO_PI),
            "-I1": (math.pi, math.pi + p),
            "-I2": (p, math.pi),
        }

    @property
    def endpoints(self) -> np.ndarray:
        return np.array([0.0, self.phi, math.pi, math.pi + self.phi])

    def indicator(self, name: str, z) -> np.ndarray:
        start, end = self.arcs[name]
        return arc_indicator(z, start, end)

    def inner_interval(self) -> tuple[float, float]:
        return (0.0, self.phi)

    def outer_interval(self) -> tuple[float, float]:
        """``I1 u I2 u -I2`` as the single arc ``(phi - pi, pi)``."""
        return (self.phi - math.pi, math.pi)

    def check_off_endpoints(self, z) -> None:
        theta = np.mod(np.angle(np.asarray(z)), TWO_PI)
        gaps = np.abs(theta[..., None] - self.endpoints)
        gaps = np.minimum(gaps, TWO_PI - gaps)
        if np.any(gaps < ENDPOINT_TOL):
            raise InputError("evaluation at an arc endpoint of the symmetric family")


# -- Moebius maps ---------------------------------------------------------------------


@dataclass(frozen=True)
class MobiusMap:
    """``z -> (a z + b) / (conj(b) z + conj(a))`` with ``|a|^2 - |b|^2 = 1``."""

    a: complex
    b: complex

    def __post_init__(self):
        det = abs(self.a) ** 2 - abs(self.b) ** 2
        if abs(det - 1.0) > 1e-9:
            raise InputError(f"|a|^2 - |b|^2 = {det}, expected 1")

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return (self.a * z + self.b) / (np.conj(self.b) * z + np.conj(self.a))

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [np.conj(self.b), np.conj(self.a)]])

    def compose(self, other: "MobiusMap") -> "MobiusMap":
        """``self o other``."""
        return MobiusMap.from_matrix(self.matrix @ other.matrix)

    def inverse(self) -> "MobiusMap":
        return MobiusMap(np.conj(self.a), -self.b)

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "MobiusMap":
        m = np.asarray(m, dtype=complex)
        m = m / np.sqrt(np.linalg.det(m))
        a, b = m[0, 0], m[0, 1]
        if abs(np.conj(a) - m[1, 1]) > 1e-8 * max(1.0, abs(a)):
            raise InputError("matrix does not preserve the unit disc")
        return cls(complex(a), complex(b))

    @classmethod
    def from_points(cls, src, dst) -> "MobiusMap":
        """Map sending three counterclockwise circle points ``src`` to ``dst``."""
        m = np.linalg.solve(_to_standard(dst), _to_standard(src))
        return cls.from_matrix(m)


def _to_standard(points) -> np.ndarray:
    # matrix of z -> (z - z1)(z2 - z3) / ((z - z3)(z2 - z1)), sending z1, z2, z3 to 0, 1, inf
    z1, z2, z3 = (complex(p) for p in points)
    return np.array([[z2 - z3, -z1 * (z2 - z3)], [z2 - z1, -z3 * (z2 - z1)]])


@dataclass(frozen=True)
class InvolutionM1:
    """The circle involution ``m1`` swapping ``(0, 2 phi)`` with its complement.

    ``m1(z) = (z (1 + w)/2 - w) / (z - (1 + w)/2)``, ``w = exp(2 i phi)``.
    """

    phi: float

    @property
    def w(self) -> complex:
        return complex(np.exp(2j * self.phi))

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        w = self.w
        half = (1 + w) / 2
        return (z * half - w) / (z - half)

    def factorized(self):
        """``m^-1 o F1 o m`` with ``m`` sending ``(1, e^{i phi}, e^{2 i phi})`` to ``(1, i, -1)``."""
        m = MobiusMap.from_points(
            [1.0, np.exp(1j * self.phi), np.exp(2j * self.phi)], [1.0, 1j, -1.0]
        )
        m_inv = m.inverse()
        return lambda z: m_inv(1.0 / m(z))


# -- doubling map ---------------------------------------------------------------------


def doubling_map_forward(phi1: Symbol, phi2: Symbol) -> Symbol:
    """Coefficients of ``psi(z) = phi1(z^2) + z phi2(z^2)``."""
    L = max(phi1.nmax, phi2.nmax)
    M = 2 * L + 1
    out = np.zeros(2 * M + 1, dtype=complex)
    n = np.arange(-L, L + 1)
    out[2 * n + M] = _padded(phi1, L)
    out[2 * n + 1 + M] = _padded(phi2, L)
    return Symbol(out, M, label=f"beta({phi1.label},{phi2.label})")


def _padded(symbol: Symbol, L: int) -> np.ndarray:
    out = np.zeros(2 * L + 1, dtype=complex)
    out[L - symbol.nmax: L + symbol.nmax + 1] = symbol.values
    return out


def doubling_map_inverse(psi: Symbol) -> tuple[Symbol, Symbol]:
    """Split ``psi`` into even-mode and odd-mode halves."""
    K = (psi.nmax - 1) // 2
    n = np.arange(-K, K + 1)
    even = psi.coeff(2 * n)
    odd = psi.coeff(2 * n + 1)
    return Symbol(even, K, label=f"even({psi.label})"), Symbol(odd, K, label=f"odd({psi.label})")


# -- the symbols g, h -----------------------------------------------------------------


def evaluate_u(z, phi: float, branch: int = 1) -> np.ndarray:
    """Principal square root of ``m1(z^2)``, times ``branch`` (+1 or -1)."""
    if branch not in (1, -1):
        raise InputError("branch must be +1 or -1")
    z = np.asarray(z, dtype=complex)
    u = np.sqrt(InvolutionM1(phi)(z * z))
    return branch * u / np.abs(u)


def symbol_g_pointwise(z, phi: float, branch: int = 1) -> np.ndarray:
    fam = SymmetricIntervalFamily(phi)
    z = np.asarray(z, dtype=complex)
    fam.check_off_endpoints(z)
    u = evaluate_u(z, phi, branch)
    on_u = fam.indicator("I1", u)
    on_minus_u = fam.indicator("I1", -u)
    return (
        (u + z) ** 2 / (4 * u * z) * on_u
        - (u - z) ** 2 / (4 * u * z) * on_minus_u
        + fam.indicator("I1", z)
    )


def symbol_h_pointwise(z, phi: float, branch: int = 1) -> np.ndarray:
    fam = SymmetricIntervalFamily(phi)
    z = np.asarray(z, dtype=complex)
    fam.check_off_endpoints(z)
    u = evaluate_u(z, phi, branch)
    return (z * z - u * u) / (4 * u * z) * (fam.indicator("I1", u) - fam.indicator("I1", -u))


def special_g_pointwise(z) -> np.ndarray:
    """``g`` at ``phi = pi/2`` in the explicit rational form."""
    fam = SymmetricIntervalFamily(math.pi / 2)
    z = np.asarray(z, dtype=complex)
    fam.check_off_endpoints(z)
    z2 = z * z
    return (
        (z2 + 1) ** 2 / (4 * z2) * fam.indicator("I2", z)
        - (z2 - 1) ** 2 / (4 * z2) * fam.indicator("-I2", z)
        + fam.indicator("I1", z)
    )


def special_h_pointwise(z) -> np.ndarray:
    fam = SymmetricIntervalFamily(math.pi / 2)
    z = np.asarray(z, dtype=complex)
    fam.check_off_endpoints(z)
    z2 = z * z
    return (z2 * z2 - 1) / (4 * z2) * (fam.indicator("I2", z) - fam.indicator("-I2", z))


def fft_sample_points(sample_count: int) -> np.ndarray:
    """Circle points at half-step offsets ``2 pi (j + 1/2) / M``."""
    theta = TWO_PI * (np.arange(sample_count) + 0.5) / sample_count
    return np.exp(1j * theta)


def symbol_coefficients_fft(func, nmax: int, sample_count: int = DEFAULT_FFT_SAMPLES, label: str = "") -> Symbol:
    """Fourier coefficients ``|n| <= nmax`` of a pointwise circle function by DFT."""
    if sample_count < 8 or sample_count & (sample_count - 1):
        raise InputError(f"sample_count must be a power of two, got {sample_count}")
    if sample_count < 8 * nmax:
        raise InputError(f"sample_count {sample_count} < 8 * nmax = {8 * nmax}")
    samples = np.asarray(func(fft_sample_points(sample_count)), dtype=complex)
    spectrum = np.fft.fft(samples) / sample_count
    n = np.arange(-nmax, nmax + 1)
    # undo the half-step offset of the sample grid
    coeffs = spectrum[n % sample_count] * np.exp(-1j * math.pi * n / sample_count)
    return Symbol(coeffs, nmax, label=label)


def g_coefficients(phi: float, nmax: int, sample_count: int = DEFAULT_FFT_SAMPLES) -> Symbol:
    return symbol_coefficients_fft(lambda z: symbol_g_pointwise(z, phi), nmax, sample_count, label=f"g(phi={phi!r})")


def h_coefficients(phi: float, nmax: int, sample_count: int = DEFAULT_FFT_SAMPLES) -> Symbol:
    return symbol_coefficients_fft(lambda z: symbol_h_pointwise(z, phi), nmax, sample_count, label=f"h(phi={phi!r})")


def closed_form_g_coeffs(nmax: int) -> Symbol:
    """Exact coefficients of ``g`` at ``phi = pi/2``.

    ``g_0 = 1/2``; other even modes vanish; odd ``n`` gives
    ``(i / 2 pi)(e^{-i pi n / 2} - 1) * (-4) / (n (n^2 - 4))``.
    """
    n = np.arange(-nmax, nmax + 1)
    out = np.zeros(n.shape, dtype=complex)
    odd = n % 2 != 0
    m = n[odd].astype(float)
    out[odd] = 1j / (2 * math.pi) * (np.exp(-1j * math.pi * m / 2) - 1) * (-4.0) / (m * (m * m - 4))
    out[n == 0] = 0.5
    return Symbol(out, nmax, label="g(phi=pi/2)")


def closed_form_h_coeffs(nmax: int) -> Symbol:
    """Exact coefficients of ``h`` at ``phi = pi/2``.

    ``h = (z^2 - z^-2)/4 * (chi_I2 - chi_-I2)`` is odd under ``z -> -z``, so
    ``h_n = (gamma_{2-n} - gamma_{-2-n}) / 2`` for odd ``n`` and 0 for even
    ``n``, with ``gamma`` the coefficients of the indicator of ``(0, pi/2)``.
    """
    gamma = arc_indicator_coefficients(0.0, math.pi / 2, nmax + 2)
    n = np.arange(-nmax, nmax + 1)
    parity = 0.25 * (1 - np.where(n % 2 == 0, 1.0, -1.0))
    out = parity * (gamma.coeff(2 - n) - gamma.coeff(-2 - n))
    return Symbol(out, nmax, label="h(phi=pi/2)")


def decay_exponent_fit(symbol: Symbol, fit_range: tuple[int, int]) -> float:
    """Slope of ``log|f_n|`` against ``log n`` over positive modes in ``fit_range``.

    When the even modes in range vanish, only the odd subsequence is fitted.
    """
    lo, hi = fit_range
    if lo < 1 or hi < lo:
        raise InputError(f"bad fit range {fit_range}")
    n = np.arange(lo, hi + 1)
    f = np.abs(symbol.coeff(n))
    scale = f.max() if f.size else 0.0
    if scale == 0.0:
        raise InputError("all coefficients in the fit range vanish")
    even = n % 2 == 0
    if np.all(f[even] <= 1e-12 * scale):
        n, f = n[~even], f[~even]
    return loglog_slope(n, f)


def sup_scaled_coefficients(symbol: Symbol, power: float, n_range: tuple[int, int]) -> float:
    """``max |f_n| * n**power`` over ``lo <= |n| <= hi``."""
    lo, hi = n_range
    n = np.arange(lo, hi + 1)
    vals = np.maximum(np.abs(symbol.coeff(n)), np.abs(symbol.coeff(-n)))
    return float(np.max(vals * n.astype(float) ** power))


# -- cross ratio reduction ------------------------------------------------------------


def circle_cross_ratio(c: float, a: float, b: float, d: float) -> float:
    """Real cross ratio of four circle angles in cyclic order ``c < a < b < d``.

    Equals ``cos^2(phi/2)`` on the symmetric configuration at ``phi``.
    """
    zc, za, zb, zd = np.exp(1j * np.array([c, a, b, d]))
    cr = (za - zc) * (zd - zb) / ((zb - zc) * (zd - za))
    if abs(cr.imag) > 1e-9 * max(1.0, abs(cr)):
        raise InputError("points are not concyclic in the expected order")
    return float(cr.real)


def _check_cyclic_order(inner, outer) -> None:
    a, b = inner
    c, d = outer
    rel = np.mod(np.array([a, b, d]) - c, TWO_PI)
    ra, rb, rd = rel
    if not (d - c < TWO_PI and b - a > 0):
        raise InputError("interval endpoints must be given as (start, end) with start < end")
    if not (0 < ra < rb < rd < TWO_PI) or abs(rd - (d - c)) > 1e-12 or abs((rb - ra) - (b - a)) > 1e-12:
        raise InputError("need outer.start < inner.start < inner.end < outer.end in cyclic order")
    gaps = [ra, rd - rb]
    if min(gaps) < 1e-12:
        raise InputError("inner interval touches the outer boundary")


def symmetric_cross_ratio(phi: float) -> float:
    fam = SymmetricIntervalFamily(phi)
    c, d = fam.outer_interval()
    a, b = fam.inner_interval()
    return circle_cross_ratio(c, a, b, d)


def cross_ratio_to_phi(inner: tuple[float, float], outer: tuple[float, float], tol: float = 1e-12) -> float:
    """Angle ``phi`` of the symmetric family Moebius-equivalent to ``inner`` in ``outer``.

    Bisection on the monotone map ``phi -> cross ratio``.
    """
    _check_cyclic_order(inner, outer)
    target = circle_cross_ratio(outer[0], inner[0], inner[1], outer[1])
    if not (0.0 < target < 1.0):
        raise InputError(f"cross ratio {target} outside (0, 1)")
    lo, hi = 0.0, math.pi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        # cross ratio decreases in phi
        if symmetric_cross_ratio(mid) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def map_to_symmetric(inner, outer) -> tuple[float, MobiusMap]:
    """``phi`` and a Moebius map sending ``outer.start, inner.start, inner.end`` to the symmetric family."""
    phi = cross_ratio_to_phi(inner, outer)
    src = np.exp(1j * np.array([outer[0], inner[0], inner[1]]))
    dst = np.exp(1j * np.array([phi - math.pi, 0.0, phi]))
    return phi, MobiusMap.from_points(src, dst)


# -- checks ---------------------------------------------------------------------------


def endpoint_jumps(func, phi: float, steps: int = 64, eps_range=(1e-2, 1e-9)) -> dict[float, float]:
    """``|f(e^{i(t+eps)}) - f(e^{i(t-eps)})|`` at the smallest ``eps`` for each arc endpoint ``t``."""
    eps = np.geomspace(eps_range[0], eps_range[1], steps)
    out = {}
    for t in SymmetricIntervalFamily(phi).endpoints:
        right = func(np.exp(1j * (t + eps)))
        left = func(np.exp(1j * (t - eps)))
        out[float(t)] = float(abs(right[-1] - left[-1]))
    return out


def verification_battery(seed: int = 0, sample_count: int = DEFAULT_FFT_SAMPLES) -> list[dict]:
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0, TWO_PI, 4096)
    z = np.exp(1j * theta)
    checks = []

    def add(name, value, tol):
        checks.append({"name": name, "value": float(value), "tol": tol, "passed": bool(value <= tol)})

    worst_inv = worst_fix = worst_u = worst_branch = 0.0
    for phi in (math.pi / 3, math.pi / 2, 2 * math.pi / 3):
        m1 = InvolutionM1(phi)
        worst_inv = max(worst_inv, float(np.max(np.abs(m1(m1(z)) - z))), float(np.max(np.abs(np.abs(m1(z)) - 1))))
        worst_fix = max(worst_fix, abs(m1(1.0) - 1.0), abs(m1(m1.w) - m1.w))
        u = evaluate_u(z, phi)
        worst_u = max(worst_u, float(np.max(np.abs(u * u - m1(z * z)))))
        worst_branch = max(worst_branch,
                           float(np.max(np.abs(symbol_g_pointwise(z, phi) - symbol_g_pointwise(z, phi, -1)))),
                           float(np.max(np.abs(symbol_h_pointwise(z, phi) - symbol_h_pointwise(z, phi, -1)))))
    add("geometry.m1_involution", worst_inv, 1e-12)
    add("geometry.m1_fixed_points", worst_fix, 1e-12)
    add("geometry.u_square", worst_u, 1e-12)
    add("geometry.branch_invariance", worst_branch, 1e-12)
    reduce_err = max(float(np.max(np.abs(symbol_g_pointwise(z, math.pi / 2) - special_g_pointwise(z)))),
                     float(np.max(np.abs(symbol_h_pointwise(z, math.pi / 2) - special_h_pointwise(z)))))
    add("geometry.special_case_reduction", reduce_err, 1e-12)
    jumps = max(max(endpoint_jumps(lambda w: symbol_g_pointwise(w, phi), phi).values())
                for phi in (math.pi / 3, math.pi / 2, 2 * math.pi / 3))
    add("geometry.g_continuity", jumps, 1e-6)

    g = g_coefficients(math.pi / 2, 512, sample_count)
    h = h_coefficients(math.pi / 2, 512, sample_count)
    n = np.arange(-256, 257)
    add("geometry.g_fft_vs_closed", float(np.max(np.abs(g.coeff(n) - closed_form_g_coeffs(256).coeff(n)))), 1e-10)
    add("geometry.h_fft_vs_closed", float(np.max(np.abs(h.coeff(n) - closed_form_h_coeffs(256).coeff(n)))), 1e-10)
    even = np.arange(-512, 513, 2)
    add("geometry.g_even_modes", float(np.max(np.abs(g.coeff(even[even != 0])))), 1e-12)
    add("geometry.g_decay_pi_2", decay_exponent_fit(closed_form_g_coeffs(511), (33, 511)), -2.9)
    add("geometry.g_decay_pi_3", decay_exponent_fit(g_coefficients(math.pi / 3, 511, sample_count), (33, 511)), -1.8)
    add("geometry.cross_ratio_round_trip",
        abs(cross_ratio_to_phi(*_family_intervals(math.pi / 3)) - math.pi / 3), 1e-10)
    return checks


def _family_intervals(phi: float):
    fam = SymmetricIntervalFamily(phi)
    return fam.inner_interval(), fam.outer_interval()

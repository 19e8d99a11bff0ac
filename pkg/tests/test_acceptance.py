"""Acceptance criteria 1-11, one test each, each printing a PASS/FAIL line."""

import json
import math
import time

import numpy as np
import pytest

from modent import canonical_subspace as cs
from modent import fock_lab as fl
from modent import hankel_lab as hl
from modent import mobius_geometry as mg
from modent import modular_lab as ml
from modent.cli import main
from modent.fourier_core import ModeGrid, complex_structure, realify_matrix, schatten_power_sum

HALF_PI = math.pi / 2


@pytest.fixture
def verdict(capsys):
    def report(number: int, title: str, checks: dict):
        ok = all(passed for passed, _ in checks.values())
        detail = "; ".join(f"{k}={v}" for k, (_, v) in checks.items())
        with capsys.disabled():
            print(f"\n[criterion {number:2d}] {'PASS' if ok else 'FAIL'}  {title}  ({detail})")
        failed = [k for k, (passed, _) in checks.items() if not passed]
        assert not failed, f"criterion {number} failed: {failed}"

    return report


def test_01_fermi_identity(verdict):
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        d = int(rng.integers(1, 7))
        A = fl.random_contraction(rng, d, upper=0.999)
        worst = max(worst, abs(fl.lambda_trace(A, "minors") - np.linalg.det(np.eye(d) + A).real))
    elapsed = time.perf_counter() - t0
    verdict(1, "Tr Lambda(A) = det(1 + A)", {
        "max_err": (worst <= 1e-9, f"{worst:.2e}"),
        "runtime_s": (elapsed < 5, f"{elapsed:.2f}"),
    })


def test_02_bose_identity(verdict):
    half = fl.gamma_trace(np.array([[0.5]]), 64)
    rng = np.random.default_rng(102)
    within = True
    for _ in range(100):
        A = fl.random_contraction(rng, int(rng.integers(1, 4)), upper=0.9)
        tr = fl.gamma_trace(A, 64)
        exact = 1.0 / np.linalg.det(np.eye(A.shape[0]) - A).real
        within &= abs(exact - tr.value) <= tr.tail_bound + 1e-12 * exact
    verdict(2, "Tr Gamma(A) = det(1 - A)^-1", {
        "diag_half_err": (abs(half.value - 2.0) <= 1e-12, f"{abs(half.value - 2.0):.2e}"),
        "ensemble_within_tail": (bool(within), bool(within)),
    })


def test_03_two_dim_fock(verdict):
    third = fl.two_dim_fock_check(1 / 3)
    half = fl.two_dim_fock_check(0.5)
    p = 2.0 ** -(np.arange(400) + 1)
    oracle = -float(np.sum(p * np.log(p)))
    err_half = abs(half["bose_entropy_normalized"] - 2 * math.log(2))
    verdict(3, "two-dimensional model spectra and traces", {
        "fermi_spectrum": (third["fermi_spectrum"] == [1.0, 1 / 3], third["fermi_spectrum"]),
        "fermi_trace": (third["fermi_trace"] == 1 + 1 / 3, third["fermi_trace"]),
        "bose_trace_err": (abs(third["bose_trace"] - 1.5) <= 1e-10, f"{abs(third['bose_trace'] - 1.5):.2e}"),
        "bose_entropy_err": (err_half <= 1e-8, f"{err_half:.2e}"),
        "bruteforce_oracle_err": (abs(oracle - 2 * math.log(2)) <= 1e-8, f"{abs(oracle - 2 * math.log(2)):.2e}"),
    })


@pytest.fixture(scope="module")
def ensemble():
    rng = np.random.default_rng(104)
    out = []
    t0 = time.perf_counter()
    for _ in range(200):
        H = ml.random_standard_subspace(rng, int(rng.integers(1, 6)), max_condition=50)
        md = ml.tomita_operators(H)
        out.append((H, md, ml.projection_via_modular(md)))
    return out, time.perf_counter() - t0


def test_04_modular_projection(verdict, ensemble):
    items, build_time = ensemble
    t0 = time.perf_counter()
    worst = max(float(np.max(np.abs(P - ml.gram_projection(H)))) for H, _, P in items)
    elapsed = build_time + time.perf_counter() - t0
    verdict(4, "modular formula for P_H vs Gram projection", {
        "max_err": (worst <= 1e-8, f"{worst:.2e}"),
        "runtime_s": (elapsed < 10, f"{elapsed:.2f}"),
    })


def test_05_angle_operator(verdict, ensemble):
    items, _ = ensemble
    restr = eig = comm = 0.0
    factorial = 0
    for H, md, P in items:
        if not md.factorial:
            continue
        factorial += 1
        d = md.d
        I = complex_structure(d)
        Pp = np.eye(2 * d) + I @ P @ I
        A = realify_matrix(md.delta_function(lambda x: 4 * x / (1 + x) ** 2))
        B = H.basis
        restr = max(restr, float(np.linalg.norm(P @ Pp @ B - A @ B, 2)))
        M = B.T @ P @ Pp @ P @ B
        mu = np.sort(np.linalg.eigvalsh(0.5 * (M + M.T)))
        eig = max(eig, float(np.max(np.abs(mu - np.sort(cs.angle_from_modular(md.spectrum))))))
        C = P @ I - I @ P
        comm = max(comm, abs(float(np.sum(C ** 2)) - 2 * float(np.trace(md.delta_function(lambda x: 4 * x / (1 + x) ** 2)).real)))
    verdict(5, "P_H P_H' = A_H on H and the commutator norm", {
        "factorial_samples": (factorial >= 50, factorial),
        "restriction_err": (restr <= 1e-8, f"{restr:.2e}"),
        "eigenvalue_map_err": (eig <= 1e-10, f"{eig:.2e}"),
        "commutator_err": (comm <= 1e-8, f"{comm:.2e}"),
    })


def test_06_symbol_coefficients(verdict):
    n = np.arange(-256, 257)
    g = mg.g_coefficients(HALF_PI, 512)
    h = mg.h_coefficients(HALF_PI, 512)
    gc, hc = mg.closed_form_g_coeffs(512), mg.closed_form_h_coeffs(512)
    g_err = float(np.max(np.abs(g.coeff(n) - gc.coeff(n))))
    h_err = float(np.max(np.abs(h.coeff(n) - hc.coeff(n))))
    even = np.array([k for k in range(-512, 513, 2) if k != 0])
    even_max = float(np.max(np.abs(g.coeff(even))))
    sup = mg.sup_scaled_coefficients(g, 3, (3, 512))
    fit = mg.decay_exponent_fit(g, (33, 511))
    verdict(6, "g, h coefficients at phi = pi/2", {
        "g_err": (g_err <= 1e-10, f"{g_err:.2e}"),
        "h_err": (h_err <= 1e-10, f"{h_err:.2e}"),
        "even_g_max": (even_max <= 1e-12, f"{even_max:.2e}"),
        "sup_g_n3": (bool(np.isfinite(sup)), f"{sup:.4f}"),
        "decay_fit": (fit <= -2.9, f"{fit:.3f}"),
    })


def test_07_projection_quality(verdict, bundles):
    checks = {}
    for label, phi in (("pi/3", math.pi / 3), ("pi/2", HALF_PI), ("2pi/3", 2 * math.pi / 3)):
        d = [bundles(phi, N).idempotency_defect for N in (128, 256, 512)]
        checks[f"idem_{label}"] = (d[0] > d[1] > d[2], "/".join(f"{x:.4f}" for x in d))
    herm = bundles(HALF_PI, 256).hermiticity_defect
    checks["herm_pi/2"] = (herm <= 1e-10, f"{herm:.1e}")
    z = np.exp(2j * math.pi * (np.arange(8192) + 0.5) / 8192)
    red = max(float(np.max(np.abs(mg.symbol_g_pointwise(z, HALF_PI) - mg.special_g_pointwise(z)))),
              float(np.max(np.abs(mg.symbol_h_pointwise(z, HALF_PI) - mg.special_h_pointwise(z)))))
    checks["reduction_err"] = (red <= 1e-12, f"{red:.1e}")
    verdict(7, "finite-section quality of P12", checks)


def test_08_entropy_pipeline(verdict, spectra):
    t0 = time.perf_counter()
    s512 = cs.run_pipeline(HALF_PI, 512)
    elapsed = time.perf_counter() - t0
    raw = cs.hermitian_eigenvalues(cs.build_sigma(cs.build_P12(HALF_PI, ModeGrid(512))))
    mu256 = spectra(HALF_PI, 256)
    s256 = cs.subspace_entropy(mu256)
    p256 = schatten_power_sum(mu256, 0.8)
    p512 = schatten_power_sum(np.asarray(s512.mu), 0.8)
    inc = abs(p512 - p256) / p256
    bound = math.log(2) / 12
    verdict(8, "entropy pipeline at phi = pi/2", {
        "spectrum_range": (raw.min() >= -1e-8 and raw.max() <= 1 + 1e-8, f"[{raw.min():.1e},{raw.max():.6f}]"),
        "dS_256_512": (abs(s512.S_subspace_real - s256) <= 0.01, f"{abs(s512.S_subspace_real - s256):.2e}"),
        "S_real": (s512.S_subspace_real >= bound, f"{s512.S_subspace_real:.6f}>={bound:.6f}"),
        "mu^0.8_increment": (inc <= 0.02, f"{100 * inc:.3f}%"),
        "runtime_s": (elapsed < 60, f"{elapsed:.1f}"),
    })


def test_09_real_structure(verdict, bundles, spectra):
    b = bundles(HALF_PI, 256)
    r = cs.real_fermion_check(b)
    S_real = cs.subspace_entropy(spectra(HALF_PI, 256))
    split = abs(r["S_plus"] - r["S_minus"])
    total = abs(r["S_plus"] + r["S_minus"] - S_real)
    verdict(9, "Q structure and entropy split", {
        "QPQ_defect": (r["qpq_defect"] == 0.0, r["qpq_defect"]),
        "Q_commutator": (r["q_commutation_defect"] <= b.idempotency_defect, f"{r['q_commutation_defect']:.1e}"),
        "S_plus-S_minus": (split <= 1e-6, f"{split:.1e}"),
        "S_plus+S_minus-S_real": (total <= 1e-6, f"{total:.1e}"),
    })


def test_10_hankel_machinery(verdict):
    sub = hl.subadditivity_check(np.random.default_rng(110), pairs=50, qs=(0.5, 0.75))
    f = hl.power_law_symbol(2.0, 1 << 16)
    xi = hl.xi_column_norms(f, (16, 512))
    stab = hl.schatten_stability(f, 0.75, [512, 1024])
    inc = stab.rows[-1]["increment_pct"]
    verdict(10, "Hankel quasi-norm machinery", {
        "subadditivity_margin": (sub["holds"], f"{min(sub['min_relative_margin'].values()):.3f}"),
        "xi_exponent": (abs(xi.exponent + 1.5) <= 0.1, f"{xi.exponent:.4f}"),
        "s^0.75_increment": (inc < 1.0, f"{inc:.3f}%"),
    })


def test_11_determinism(verdict, tmp_path):
    runs = {
        "sweep": (["sweep", "--phi", "1.0,2.0", "--modes", "64,128", "--fft-samples", "4096"], ["sweep.csv", "sweep.json"]),
        "entropy": (["entropy", "--interval", "0.2,1.0,-0.5,2.0", "--modes", "128", "--fft-samples", "4096"],
                    ["entropy.csv", "entropy.json"]),
        "verify": (["verify", "modular", "--seed", "7"], ["verify_modular.json"]),
    }
    checks = {}
    for name, (args, files) in runs.items():
        codes = [main([*args, "--out-dir", str(tmp_path / name / rep)]) for rep in ("a", "b")]
        same = all((tmp_path / name / "a" / f).read_bytes() == (tmp_path / name / "b" / f).read_bytes() for f in files)
        checks[name] = (codes == [0, 0] and same, "identical" if same else "differs")
    sha = json.loads((tmp_path / "verify" / "a" / "verify_modular.json").read_text())["header"]["config_sha256"]
    checks["header"] = (len(sha) == 64, sha[:12])
    verdict(11, "byte-identical repeated runs", checks)

import json
import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modent.canonical_subspace import (
    CSV_COLUMNS,
    DEFECT_LIMIT,
    angle_from_modular,
    angle_operator,
    bose_entropy_normalized,
    build_P12,
    build_Q,
    build_sigma,
    containment_defect,
    entropy_lower_bound,
    fermi_entropy_normalized,
    modular_from_angle,
    projection_bundle,
    real_fermion_check,
    recover_modular_spectrum,
    run_pipeline,
    sigma_spectrum,
    subspace_entropy,
    trace_identities,
    window,
)
from modent.errors import DiagnosticError, InputError
from modent.fock_lab import BoseFockTruncated, FermiFock, density_entropy, normalized_entropy
from modent.fourier_core import ModeGrid, Symbol, build_hardy_projection, realify_matrix, schatten_power_sum

HALF_PI = math.pi / 2


class TestSubspaceEntropy:
    def test_projection_spectrum(self):
        assert subspace_entropy([1, 1, 0]) == 0.0

    def test_half(self):
        assert subspace_entropy([0.5], "complex") == pytest.approx(0.5 * math.log(2), abs=1e-15)
        assert subspace_entropy([0.5], "real") == pytest.approx(math.log(2), abs=1e-15)

    def test_inverse_e(self):
        assert subspace_entropy([math.exp(-1)], "complex") == pytest.approx(math.exp(-1), abs=1e-15)

    @pytest.mark.parametrize("mu", [[1.1], [-0.01], [0.5, 2.0]])
    def test_out_of_range(self, mu):
        with pytest.raises(InputError):
            subspace_entropy(mu)

    def test_clip_tolerance(self):
        assert subspace_entropy([-1e-9, 1 + 1e-9]) == 0.0

    def test_bad_convention(self):
        with pytest.raises(InputError):
            subspace_entropy([0.5], "quaternion")


class TestModularFromAngle:
    def test_fixed_point(self):
        assert modular_from_angle(1.0) == 1.0

    def test_three_quarters(self):
        assert modular_from_angle(0.75) == pytest.approx(1 / 3, abs=1e-15)

    @pytest.mark.parametrize("lam", [0.9, 0.5, 1e-4])
    def test_round_trip(self, lam):
        assert abs(modular_from_angle(angle_from_modular(lam)) - lam) <= 1e-12

    @settings(max_examples=200)
    @given(st.floats(1e-10, 1.0, exclude_max=True))
    def test_round_trip_property(self, lam):
        # 1 - mu = ((1 - lam) / (1 + lam))^2, so rounding in mu is amplified by 1 / (1 - lam)
        tol = 1e-12 + 1e-15 / (1.0 - lam)
        assert abs(modular_from_angle(angle_from_modular(lam)) - lam) <= tol

    @given(st.floats(1e-12, 1.0))
    def test_root_in_unit_interval(self, mu):
        lam = modular_from_angle(mu)
        assert 0 < lam <= 1
        assert abs(angle_from_modular(lam) - mu) <= 1e-12

    def test_rejects_zero(self):
        with pytest.raises(InputError):
            modular_from_angle(0.0)

    def test_recover_drops_zero_and_floor(self):
        lam, dropped = recover_modular_spectrum([1.0, 0.75, 1e-14, 0.0])
        assert np.allclose(lam, [1.0, 1 / 3], atol=1e-15)
        assert dropped == 2


class TestNormalizedEntropies:
    def test_fermi_half(self):
        assert fermi_entropy_normalized([0.5]) == pytest.approx(math.log(3) - 2 / 3 * math.log(2), abs=1e-14)

    def test_fermi_half_via_shift(self):
        # unnormalized (1/2) ln 2 shifted by S(rho / t) = S(rho) / t + log t with t = 3/2
        assert fermi_entropy_normalized([0.5]) == pytest.approx(0.5 * math.log(2) / 1.5 + math.log(1.5), abs=1e-14)

    def test_bose_half(self):
        assert bose_entropy_normalized([0.5]) == pytest.approx(2 * math.log(2), abs=1e-14)

    def test_bose_half_geometric_oracle(self):
        p = 2.0 ** -(np.arange(200) + 1)
        assert abs(p.sum() - 1) <= 1e-15
        assert bose_entropy_normalized([0.5]) == pytest.approx(-np.sum(p * np.log(p)), abs=1e-13)

    def test_empty(self):
        assert fermi_entropy_normalized([]) == 0.0
        assert bose_entropy_normalized([]) == 0.0

    def test_bose_divergent_mode_excluded(self, caplog):
        with caplog.at_level(logging.WARNING, logger="modent.canonical_subspace"):
            value = bose_entropy_normalized([1.0, 0.5])
        assert value == pytest.approx(2 * math.log(2), abs=1e-14)
        assert "divergent" in caplog.text

    @pytest.mark.parametrize("lam", [[1.5], [0.0], [-0.2]])
    def test_rejects(self, lam):
        with pytest.raises(InputError):
            fermi_entropy_normalized(lam)
        with pytest.raises(InputError):
            bose_entropy_normalized(lam)

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.floats(0.01, 0.5), min_size=1, max_size=6))
    def test_fermi_against_fock_bruteforce(self, lam):
        spectrum = FermiFock(len(lam)).diagonal(lam)
        brute = normalized_entropy(density_entropy(spectrum), float(spectrum.sum()))
        assert abs(fermi_entropy_normalized(lam) - brute) <= 1e-8

    @settings(max_examples=20, deadline=None)
    @given(st.lists(st.floats(0.01, 0.5), min_size=1, max_size=3))
    def test_bose_against_fock_bruteforce(self, lam):
        spectrum = BoseFockTruncated(len(lam), 64).diagonal(lam)
        brute = normalized_entropy(density_entropy(spectrum), float(spectrum.sum()))
        assert abs(bose_entropy_normalized(lam) - brute) <= 1e-8


class TestTraceIdentities:
    def test_single(self):
        assert trace_identities([0.5]) == pytest.approx((2.0, 1.5), abs=1e-15)

    def test_empty(self):
        assert trace_identities([]) == (1.0, 1.0)

    def test_pair(self):
        assert trace_identities([0.5, 1 / 3]) == pytest.approx((3.0, 2.0), abs=1e-14)


class TestLowerBound:
    def test_half_pi(self):
        assert entropy_lower_bound(HALF_PI) == pytest.approx(math.log(2) / 12, abs=1e-15)
        assert entropy_lower_bound(HALF_PI) == pytest.approx(0.05776, abs=1e-5)

    def test_small_phi(self):
        assert entropy_lower_bound(1e-8) == pytest.approx(0.0, abs=1e-15)

    def test_two_thirds_pi(self):
        assert entropy_lower_bound(2 * math.pi / 3) == pytest.approx(math.log(2) / 6, abs=1e-15)

    @pytest.mark.parametrize("phi", [0.0, math.pi])
    def test_rejects(self, phi):
        with pytest.raises(InputError):
            entropy_lower_bound(phi)


class TestProjection:
    def test_hermiticity_half_pi(self, bundles):
        assert bundles(HALF_PI, 256).hermiticity_defect <= 1e-10

    @pytest.mark.parametrize("phi", [math.pi / 3, HALF_PI])
    def test_defects_decrease(self, bundles, phi):
        defects = [bundles(phi, N).idempotency_defect for N in (128, 256, 512)]
        assert defects[0] > defects[1] > defects[2]
        assert defects[-1] < DEFECT_LIMIT

    def test_containment(self, bundles):
        c = [containment_defect(bundles(HALF_PI, N)) for N in (128, 256, 512)]
        assert c[0] > c[1] > c[2]
        assert c[-1] < bundles(HALF_PI, 512).idempotency_defect

    def test_closed_route_matches_fft(self, bundles):
        closed = build_P12(HALF_PI, ModeGrid(64), coefficients="closed")
        fft = bundles(HALF_PI, 64)
        assert np.max(np.abs(closed.P12.entries - fft.P12.entries)) <= 1e-10

    def test_closed_route_rejects_other_phi(self):
        with pytest.raises(InputError):
            build_P12(1.0, ModeGrid(8), coefficients="closed")

    def test_defective_symbol_raises(self):
        grid = ModeGrid(256)
        g = Symbol.from_mapping({0: 0.3})
        h = Symbol.from_mapping({0: 0.0})
        with pytest.raises(DiagnosticError):
            projection_bundle(HALF_PI, grid, g, h)


class TestSigma:
    def test_hardy_replacement_vanishes(self):
        P = build_hardy_projection(ModeGrid(16)).entries
        assert np.max(np.abs(angle_operator(P, P))) == 0.0

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_commuting_projection_vanishes(self, seed):
        # diagonal projections commute with the diagonal Hardy projection
        grid = ModeGrid(12)
        rng = np.random.default_rng(seed)
        E = np.diag(rng.integers(0, 2, grid.dim).astype(float))
        assert np.max(np.abs(angle_operator(E, build_hardy_projection(grid).entries))) == 0.0

    def test_spectrum_range(self, bundles):
        from modent.fourier_core import hermitian_eigenvalues
        raw = hermitian_eigenvalues(build_sigma(bundles(HALF_PI, 512)))
        assert raw.min() >= -1e-8 and raw.max() <= 1 + 1e-8

    def test_negative_eigenvalue_raises(self):
        from modent.fourier_core import CircleOperator
        grid = ModeGrid(1)
        op = CircleOperator(grid, np.diag([-0.1, 0.2, 0.3]), hermitian=True)
        with pytest.raises(DiagnosticError):
            sigma_spectrum(op)

    def test_mu_lambda_consistency(self, spectra):
        mu = spectra(HALF_PI, 256)
        lam, _ = recover_modular_spectrum(mu)
        pos = mu[mu > 0][: lam.size]
        assert np.max(np.abs(angle_from_modular(lam) - pos)) <= 1e-10
        assert np.all((lam > 0) & (lam <= 1))

    def test_schatten_partial_sums_stable(self, spectra):
        s256 = schatten_power_sum(spectra(HALF_PI, 256), 0.8)
        s512 = schatten_power_sum(spectra(HALF_PI, 512), 0.8)
        assert abs(s512 - s256) / s256 < 0.02

    def test_entropy_convergence(self, spectra):
        assert abs(subspace_entropy(spectra(HALF_PI, 512)) - subspace_entropy(spectra(HALF_PI, 256))) <= 0.01


class TestQStructure:
    def test_involution_and_hardy_flip(self):
        grid = ModeGrid(16)
        Q = build_Q(grid).entries
        assert np.array_equal(Q @ Q, np.eye(Q.shape[0]))
        P = realify_matrix(window(build_hardy_projection(grid)))
        assert np.array_equal(Q @ P @ Q, np.eye(P.shape[0]) - P)

    def test_q_is_antilinear(self):
        from modent.fourier_core import complex_structure
        Q = build_Q(ModeGrid(4)).entries
        J = complex_structure(Q.shape[0] // 2)
        assert np.array_equal(Q @ J, -J @ Q)

    @pytest.mark.parametrize("phi", [math.pi / 3, HALF_PI])
    def test_commutes_with_P12(self, bundles, phi):
        assert real_fermion_check(bundles(phi, 256))["q_commutation_defect"] <= 1e-12

    def test_entropy_split(self, bundles, spectra):
        r = real_fermion_check(bundles(HALF_PI, 256))
        assert abs(r["S_plus"] - r["S_minus"]) <= 1e-6
        assert abs(r["S_plus"] + r["S_minus"] - r["S_real_window"]) <= 1e-6
        assert abs(r["S_plus"] + r["S_minus"] - subspace_entropy(spectra(HALF_PI, 256))) <= 1e-6
        assert r["cross_block_norm"] <= 1e-10


@pytest.fixture(scope="module")
def summary():
    return run_pipeline(HALF_PI, 512)


class TestPipeline:
    def test_lower_bound(self, summary):
        assert summary.S_subspace_real >= math.log(2) / 12
        assert summary.S_subspace_real == pytest.approx(2 * summary.S_subspace_complex, abs=1e-14)
        assert summary.lower_bound == pytest.approx(math.log(2) / 12)

    def test_fields(self, summary):
        assert summary.mu == sorted(summary.mu, reverse=True)
        assert all(0 <= m <= 1 for m in summary.mu)
        assert summary.type_I_finite
        for v in (summary.S_fermi_normalized, summary.S_bose_normalized):
            assert np.isfinite(v) and v >= 0

    def test_serialization(self, summary):
        d = json.loads(summary.to_json())
        assert d["mu_count"] == summary.mu_count
        assert d["S_subspace_real"] == summary.S_subspace_real
        lines = summary.to_csv().splitlines()
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert float(lines[1].split(",")[4]) == summary.S_subspace_real

    def test_monotone_sweep(self):
        s = [run_pipeline(phi, 512).S_subspace_real for phi in (math.pi / 4, HALF_PI, 3 * math.pi / 4)]
        assert s[0] < s[1] < s[2]

    def test_interval_route(self):
        direct = run_pipeline(HALF_PI, 32)
        # symmetric endpoints of the pi/2 family give back the same phi
        via = run_pipeline(cutoff=32, interval=(0.0, HALF_PI, -HALF_PI, math.pi))
        assert via.phi == pytest.approx(HALF_PI, abs=1e-10)
        assert via.S_subspace_real == pytest.approx(direct.S_subspace_real, abs=1e-8)
        assert via.interval == [0.0, HALF_PI, -HALF_PI, math.pi]

    def test_needs_exactly_one_input(self):
        with pytest.raises(InputError):
            run_pipeline(cutoff=8)
        with pytest.raises(InputError):
            run_pipeline(1.0, 8, interval=(0, 1, -1, 2))

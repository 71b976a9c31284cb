"""Skew operators, the dichotomy report, asymptotic symmetry."""

import math

import numpy as np
import pytest

from gdms import (
    ConfigError,
    FreeAbelianQuotient,
    Letter,
    LinearGdmsSpec,
    amenability_report,
    bowen_root,
    build_skew_operator,
    check_asymptotic_symmetry,
    pressure,
    skew_spectral_radius,
    spectral_data,
    transfer_matrix,
)
from gdms.skew import VERDICT_AMENABLE, VERDICT_NON_AMENABLE


def reference_dense_operator(spec, G, s, ball_obj):
    """Independent dense construction of the forward operator for tests."""
    n_letters = 2 * spec.d
    n = n_letters * len(ball_obj)
    m = np.zeros((n, n))
    for v in range(n_letters):
        img = Letter.from_code(v)
        for i, g in enumerate(ball_obj.elements):
            j = ball_obj.index.get(G.apply_letter(g, img), -1)
            if j < 0:
                continue
            for w in range(n_letters):
                if w == v ^ 1:
                    continue
                m[w * len(ball_obj) + j, v * len(ball_obj) + i] += (
                    spec.ratios[v] ** s
                )
    return m


class TestOperatorStructure:
    def test_z2_state_and_transition_counts(self, spec_third, z2):
        op = build_skew_operator(spec_third, z2, 1.0, 5)
        assert op.n_states == 8
        assert not op.truncated
        dense = op.dense()
        # forward operator: 3 outgoing transitions per state
        assert (np.count_nonzero(dense, axis=0) == 3).all()

    def test_d3_truncated_state_count(self, spec_fifth_d3, f2_of_f3):
        op = build_skew_operator(spec_fifth_d3, f2_of_f3, 1.0, 2)
        assert op.n_states == 6 * 17

    def test_matches_reference_dense(self, spec_mixed, z3):
        op = build_skew_operator(spec_mixed, z3, 0.9, 3)
        ref = reference_dense_operator(spec_mixed, z3, 0.9, op.ball)
        assert np.allclose(op.dense(), ref, atol=1e-14)

    def test_truncation_matches_reference(self, spec_third, zz):
        op = build_skew_operator(spec_third, zz, 1.0, 2)
        ref = reference_dense_operator(spec_third, zz, 1.0, op.ball)
        assert np.allclose(op.dense(), ref, atol=1e-14)


class TestSpectralRadius:
    def test_stochastic_case_is_one(self, spec_third, z2):
        op = build_skew_operator(spec_third, z2, 1.0, 1)
        assert skew_spectral_radius(op).value == pytest.approx(1.0, abs=1e-12)

    def test_trivial_group_equals_transfer_spectrum(self, spec_nonsym, trivial_group):
        s = 0.7
        op = build_skew_operator(spec_nonsym, trivial_group, s, 9)
        rho = skew_spectral_radius(op).value
        sd = spectral_data(transfer_matrix(spec_nonsym, s))
        assert rho == pytest.approx(sd.rho, abs=1e-11)

    def test_trivial_group_at_root(self, spec_mixed, trivial_group):
        op = build_skew_operator(
            spec_mixed, trivial_group, bowen_root(spec_mixed), 1
        )
        assert skew_spectral_radius(op).value == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("group_fixture", ["z2", "z3", "s3"])
    def test_finite_amenable_equality(self, spec_third, group_fixture, request):
        G = request.getfixturevalue(group_fixture)
        op = build_skew_operator(spec_third, G, 1.0, 1)
        assert abs(skew_spectral_radius(op).value - 1.0) <= 1e-10

    def test_ladder_monotone_and_bounded(self, spec_third, zz):
        s = 1.0
        bound = math.exp(pressure(spec_third, s))
        prev = 0.0
        for R in (2, 4, 6, 8):
            op = build_skew_operator(spec_third, zz, s, R)
            rho = skew_spectral_radius(op).value
            assert rho >= prev - 1e-10
            assert rho <= bound + 1e-10
            prev = rho

    def test_f2_quotient_gap(self, spec_fifth_d3, f2_of_f3):
        rhos = []
        for R in (2, 4, 6):
            op = build_skew_operator(spec_fifth_d3, f2_of_f3, 1.0, R)
            rhos.append(skew_spectral_radius(op, tol=1e-11).value)
        assert rhos[0] < rhos[1] < rhos[2]
        assert rhos[-1] < 1.0 - 0.01

    def test_off_root_bound_nonsymmetric(self, spec_nonsym, zz):
        s = 0.8
        bound = math.exp(pressure(spec_nonsym, s))
        op = build_skew_operator(spec_nonsym, zz, s, 5)
        assert skew_spectral_radius(op).value <= bound + 1e-10


class TestAmenabilityReport:
    def test_finite_quotient(self, spec_third, z3):
        rep = amenability_report(spec_third, z3, [1, 2, 3])
        assert rep.verdict == VERDICT_AMENABLE
        assert abs(max(rep.rho_skew) - 1.0) <= 1e-10
        assert rep.s_star == pytest.approx(1.0, abs=1e-10)

    def test_zz_amenable_with_extrapolation(self, spec_third, zz):
        rep = amenability_report(spec_third, zz, [4, 6, 8, 10, 12])
        assert rep.verdict == VERDICT_AMENABLE
        # raw ladder is still visibly below 1 at R=12 ...
        assert rep.gap <= 0.03
        # ... and the ladder is strictly increasing toward it
        assert all(b > a for a, b in zip(rep.rho_skew, rep.rho_skew[1:]))
        assert rep.rho_limit_estimate >= 0.995

    def test_f2_quotient_non_amenable(self, spec_fifth_d3, f2_of_f3):
        rep = amenability_report(spec_fifth_d3, f2_of_f3, [2, 4, 6, 8])
        assert rep.verdict == VERDICT_NON_AMENABLE
        assert rep.gap >= 0.01
        assert rep.kernel_pressure_estimate is not None
        assert rep.kernel_pressure_estimate <= math.log(max(rep.rho_skew)) + 0.05

    def test_requires_symmetric(self, spec_nonsym, z2):
        with pytest.raises(ConfigError, match="symmetric"):
            amenability_report(spec_nonsym, z2, [1, 2])

    def test_report_dict_keys(self, spec_third, z2):
        d = amenability_report(spec_third, z2, [1, 2]).as_dict()
        for key in ("s_star", "radii", "rho", "verdict", "gap",
                    "kernel_pressure_estimate"):
            assert key in d


class TestAsymptoticSymmetry:
    @pytest.mark.parametrize("group_fixture", ["z2", "s3", "zz", "f2_of_f3"])
    def test_symmetric_specs_exact(self, group_fixture, request):
        G = request.getfixturevalue(group_fixture)
        spec = (
            LinearGdmsSpec.equal_ratios(G.d, 1.0 / 3.0)
            if G.d == 2
            else LinearGdmsSpec.equal_ratios(G.d, 0.2)
        )
        rep = check_asymptotic_symmetry(spec, G, n_max=8, R=4)
        assert rep.symmetric_spec
        assert rep.max_rel_asymmetry <= 1e-12

    def test_identity_always_balanced(self, spec_nonsym, zz):
        # the identity element is its own inverse, so its sums always agree
        rep = check_asymptotic_symmetry(spec_nonsym, zz, n_max=6, R=0)
        assert rep.max_rel_asymmetry <= 1e-12

    def test_nonsymmetric_ratios_reported(self, spec_nonsym, zz):
        rep = check_asymptotic_symmetry(spec_nonsym, zz, n_max=8, R=4)
        assert not rep.symmetric_spec
        assert rep.max_rel_asymmetry > 1e-3
        assert rep.per_n_ratio_high[-1] > 1.0 > rep.per_n_ratio_low[-1]
        assert np.isfinite(rep.per_n_ratio_high).all()

    def test_radius_cannot_exceed_n_max(self, spec_third, zz):
        with pytest.raises(ConfigError):
            check_asymptotic_symmetry(spec_third, zz, n_max=4, R=6)

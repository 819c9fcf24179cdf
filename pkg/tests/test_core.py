"""Core primitives: entropy, rotated correlations, quality parameter, leakage."""
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rfiqkd import (
    CorrelationSet,
    binary_entropy,
    error_rate_from_expectation,
    quality_parameter,
    rotated_expectations,
    single_photon_eve_information,
    single_photon_key_rate,
    wrap_angle,
)


class TestBinaryEntropy:
    def test_maximum(self):
        assert binary_entropy(0.5) == 1.0

    def test_degenerate(self):
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0

    def test_direct_value(self):
        # frozen from a 50-digit mpmath evaluation of the formula
        assert binary_entropy(0.11) == pytest.approx(0.4999159581645280,
                                                     abs=1e-14)
        assert abs(binary_entropy(0.11) - 0.4999) < 1e-4

    def test_domain(self):
        with pytest.raises(ValueError):
            binary_entropy(-0.01)
        with pytest.raises(ValueError):
            binary_entropy(1.01)

    @given(st.floats(min_value=0.0, max_value=1.0))
    def test_symmetry(self, x):
        assert binary_entropy(x) == pytest.approx(binary_entropy(1.0 - x),
                                                  abs=1e-12)

    @given(st.floats(min_value=0.0, max_value=1.0))
    def test_range(self, x):
        assert 0.0 <= binary_entropy(x) <= 1.0


def _pauli():
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    return sx, sy, sz


def _density_matrix_correlations(beta, visibility):
    """Independent 2x2 oracle: Bob's X/Y operators rotated in the X/Y plane.

    For each Alice basis, average s * <B'> over her two eigenstates sent
    through a depolarizing channel of visibility V.
    """
    sx, sy, sz = _pauli()
    eye = np.eye(2, dtype=complex)
    bob = {
        "X": math.cos(beta) * sx + math.sin(beta) * sy,
        "Y": math.cos(beta) * sy - math.sin(beta) * sx,
        "Z": sz,
    }
    alice_ops = {"X": sx, "Y": sy, "Z": sz}

    def corr(a, b):
        total = 0.0
        vals, vecs = np.linalg.eigh(alice_ops[a])
        for s, vec in zip(vals, vecs.T):
            rho = (visibility * np.outer(vec, vec.conj())
                   + (1 - visibility) * eye / 2)
            total += 0.5 * s * np.trace(bob[b] @ rho).real
        return total

    return {key: corr(*key) for key in ("XX", "XY", "YX", "YY", "ZZ")}


class TestRotatedExpectations:
    def test_identity_frame(self):
        c = rotated_expectations(0.0, 1.0)
        assert (c.exp_xx, c.exp_xy, c.exp_yx, c.exp_yy, c.exp_zz) == (
            1.0, 0.0, 0.0, 1.0, 1.0)

    def test_quarter_rotation(self):
        c = rotated_expectations(math.pi / 2, 1.0)
        assert c.exp_xx == pytest.approx(0.0, abs=1e-15)
        assert c.exp_xy == pytest.approx(-1.0)
        assert c.exp_yx == pytest.approx(1.0)
        assert c.exp_yy == pytest.approx(0.0, abs=1e-15)
        assert c.exp_zz == 1.0

    def test_derived_value(self):
        c = rotated_expectations(0.3, 0.9)
        assert c.exp_xx == pytest.approx(0.8598028402130454, abs=1e-12)

    @pytest.mark.parametrize("beta", [0.0, 0.3, 1.1, 2.7, 4.5, 6.0])
    @pytest.mark.parametrize("visibility", [1.0, 0.9, 0.4])
    def test_against_density_matrix_oracle(self, beta, visibility):
        got = rotated_expectations(beta, visibility)
        want = _density_matrix_correlations(beta, visibility)
        assert got.exp_xx == pytest.approx(want["XX"], abs=1e-12)
        assert got.exp_xy == pytest.approx(want["XY"], abs=1e-12)
        assert got.exp_yx == pytest.approx(want["YX"], abs=1e-12)
        assert got.exp_yy == pytest.approx(want["YY"], abs=1e-12)
        assert got.exp_zz == pytest.approx(want["ZZ"], abs=1e-12)

    def test_angle_wrapping(self):
        a = rotated_expectations(0.4)
        b = rotated_expectations(0.4 + 4 * math.pi)
        assert a.exp_xx == pytest.approx(b.exp_xx, abs=1e-12)
        assert wrap_angle(-0.1) == pytest.approx(2 * math.pi - 0.1)

    def test_visibility_domain(self):
        with pytest.raises(ValueError):
            rotated_expectations(0.0, 1.5)


class TestQualityParameter:
    def test_beta_invariance_ideal(self):
        rng = np.random.default_rng(7)
        for beta in rng.uniform(0, 2 * math.pi, 1000):
            c = quality_parameter(rotated_expectations(beta, 1.0))
            assert abs(c - 2.0) < 1e-12

    def test_equals_two_v_squared(self):
        rng = np.random.default_rng(8)
        for beta, vis in zip(rng.uniform(0, 2 * math.pi, 300),
                             rng.uniform(0, 1, 300)):
            c = quality_parameter(rotated_expectations(beta, vis))
            assert abs(c - 2 * vis ** 2) < 1e-12

    def test_zero(self):
        c = CorrelationSet(0, 0, 0, 0, 0)
        assert quality_parameter(c) == 0.0

    def test_derived(self):
        c = quality_parameter(rotated_expectations(0.7, 0.95))
        assert c == pytest.approx(2 * 0.95 ** 2, abs=1e-12)

    def test_clamped_to_two(self):
        c = CorrelationSet(1.0, 1.0, 1.0, 1.0, 1.0)
        assert quality_parameter(c) == 2.0


class TestErrorRateFromExpectation:
    @pytest.mark.parametrize("e,expected", [(1.0, 0.0), (-1.0, 1.0),
                                            (0.968, 0.016)])
    def test_values(self, e, expected):
        assert error_rate_from_expectation(e) == pytest.approx(expected)

    def test_domain(self):
        with pytest.raises(ValueError):
            error_rate_from_expectation(1.2)


class TestEveInformation:
    def test_perfect_channel(self):
        assert single_photon_eve_information(0.0, 2.0) == 0.0

    def test_no_correlation(self):
        assert single_photon_eve_information(0.0, 0.0) == 1.0

    def test_derived_value(self):
        # frozen from a 50-digit mpmath evaluation before implementation
        assert single_photon_eve_information(0.05, 1.8) == pytest.approx(
            0.05785876845167763, abs=1e-12)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            single_photon_eve_information(1.0, 1.0)
        with pytest.raises(ValueError):
            single_photon_eve_information(0.1, 2.5)

    def test_monotone_nonincreasing_in_c(self):
        for e_zz in (0.0, 0.01, 0.05, 0.1, 0.2):
            values = [single_photon_eve_information(e_zz, c)
                      for c in np.linspace(0.0, 2.0, 81)]
            diffs = np.diff(values)
            assert (diffs <= 1e-12).all()

    def test_range(self):
        rng = np.random.default_rng(11)
        for e_zz, c in zip(rng.uniform(0, 0.95, 500), rng.uniform(0, 2, 500)):
            val = single_photon_eve_information(e_zz, c)
            assert 0.0 <= val <= 1.0


class TestSinglePhotonKeyRate:
    def test_nonnegative_below_threshold_at_full_quality(self):
        # with C at the maximum the rate stays positive through 15.9%
        for e_zz in np.linspace(0.0, 0.159, 60):
            assert single_photon_key_rate(e_zz, 2.0) >= 0.0

    def test_depolarizing_channel_threshold(self):
        # visibility-limited channel: C = 2(1-2e)^2; the rate crosses zero
        # at the six-state-like threshold near 12.6%
        def rate(e):
            return single_photon_key_rate(e, 2.0 * (1 - 2 * e) ** 2)

        assert rate(0.12) > 0.0
        assert rate(0.13) < 0.0

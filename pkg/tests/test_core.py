import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from randldp.core import (
    PrivacyBudget,
    ProbVec,
    binary_entropy,
    column_support,
    hadamard_matrix,
    inverse_binary_entropy,
    next_power_of_two,
    shannon_entropy,
)
from randldp.errors import DomainError

from oracle_values import H2_E_OVER_E_PLUS_1, ONE_OVER_E_PLUS_1, P_R_HALF

E = math.e


class TestBinaryEntropy:
    def test_symmetric_maximum(self):
        assert binary_entropy(0.5) == 1.0

    def test_degenerate(self):
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0

    def test_critical_value(self):
        assert binary_entropy(E / (E + 1)) == pytest.approx(H2_E_OVER_E_PLUS_1, abs=1e-14)

    @pytest.mark.parametrize("p", [-0.1, 1.5, float("nan")])
    def test_domain(self, p):
        with pytest.raises(DomainError):
            binary_entropy(p)

    def test_vectorized(self):
        out = binary_entropy(np.array([0.0, 0.5, 1.0]))
        np.testing.assert_array_equal(out, [0.0, 1.0, 0.0])


class TestInverseBinaryEntropy:
    def test_endpoints(self):
        assert inverse_binary_entropy(1.0) == 0.5
        assert inverse_binary_entropy(0.0) == 0.0

    def test_critical_round_trip(self):
        p = inverse_binary_entropy(H2_E_OVER_E_PLUS_1)
        assert p == pytest.approx(ONE_OVER_E_PLUS_1, abs=1e-12)

    def test_half_bit(self):
        assert inverse_binary_entropy(0.5) == pytest.approx(P_R_HALF, abs=1e-13)

    @pytest.mark.parametrize("R", [-1e-3, 1.0001])
    def test_domain(self, R):
        with pytest.raises(DomainError):
            inverse_binary_entropy(R)

    def test_round_trip_grid(self):
        for R in np.linspace(0.0, 1.0, 201):
            assert binary_entropy(inverse_binary_entropy(R)) == pytest.approx(R, abs=1e-9)

    @given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
    def test_monotone(self, a, b):
        lo, hi = min(a, b), max(a, b)
        assert inverse_binary_entropy(lo) <= inverse_binary_entropy(hi)

    @given(st.floats(0.0, 1.0))
    def test_range(self, R):
        assert 0.0 <= inverse_binary_entropy(R) <= 0.5


class TestShannonEntropy:
    def test_uniform(self):
        assert shannon_entropy([0.25] * 4) == 2.0

    def test_point_mass(self):
        assert shannon_entropy([0.0, 1.0, 0.0]) == 0.0

    def test_binary_matches_h2(self):
        p = ONE_OVER_E_PLUS_1
        assert shannon_entropy([1 - p, p]) == pytest.approx(binary_entropy(p), abs=1e-15)

    @settings(max_examples=200)
    @given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=12).filter(lambda v: sum(v) > 1e-3), st.randoms())
    def test_permutation_invariance_and_bound(self, w, rnd):
        p = np.array(w) / sum(w)
        perm = list(p)
        rnd.shuffle(perm)
        h = shannon_entropy(p)
        assert shannon_entropy(perm) == pytest.approx(h, abs=1e-12)
        assert -1e-12 <= h <= math.log2(len(p)) + 1e-9

    @given(st.integers(1, 64))
    def test_uniform_attains_log_k(self, k):
        assert shannon_entropy(np.full(k, 1.0 / k)) == pytest.approx(math.log2(k), abs=1e-9)

    def test_non_uniform_below_log_k(self):
        assert shannon_entropy([0.5, 0.3, 0.2]) < math.log2(3) - 1e-9


class TestProbVec:
    def test_renormalizes_small_drift(self):
        v = ProbVec([0.5, 0.5 + 5e-10])
        assert v.probs.sum() == pytest.approx(1.0, abs=1e-15)
        assert v.alphabet_size == 2

    def test_single_entry_rounding_above_one(self):
        # summed key masses can land one ulp above 1
        assert ProbVec([np.nextafter(1.0, 2.0)]).probs.tolist() == [1.0]

    def test_rejects_large_drift(self):
        with pytest.raises(DomainError):
            ProbVec([0.5, 0.6])

    @pytest.mark.parametrize("bad", [[], [-0.1, 1.1], [float("nan"), 1.0]])
    def test_rejects_invalid(self, bad):
        with pytest.raises(DomainError):
            ProbVec(bad)

    def test_immutable(self):
        v = ProbVec([1.0])
        with pytest.raises(ValueError):
            v.probs[0] = 0.5

    def test_budget_validation(self):
        assert PrivacyBudget(1.0, 0.5).epsilon == 1.0
        with pytest.raises(DomainError):
            PrivacyBudget(-1.0, 1.0)
        with pytest.raises(DomainError):
            PrivacyBudget(1.0, -1.0)


class TestHadamard:
    def test_order_one(self):
        np.testing.assert_array_equal(hadamard_matrix(1), [[1]])

    def test_order_four_rows(self):
        expected = [[1, 1, 1, 1], [1, -1, 1, -1], [1, 1, -1, -1], [1, -1, -1, 1]]
        np.testing.assert_array_equal(hadamard_matrix(4), expected)

    @pytest.mark.parametrize("K", [1, 2, 8, 64, 256])
    def test_orthogonal(self, K):
        H = hadamard_matrix(K)
        np.testing.assert_array_equal(H @ H.T, K * np.eye(K, dtype=np.int64))
        assert set(np.unique(H)) <= {-1, 1}
        assert np.all(H[0] == 1) and np.all(H[:, 0] == 1)

    @pytest.mark.parametrize("K", [0, 3, 6, 12])
    def test_rejects_non_power_of_two(self, K):
        with pytest.raises(DomainError):
            hadamard_matrix(K)

    def test_column_support_examples(self):
        assert column_support(4, 1) == {1, 2, 3, 4}
        assert column_support(4, 2) == {1, 3}
        assert column_support(4, 3) == {1, 2}
        assert column_support(4, 4) == {1, 4}

    def test_column_support_balance(self):
        assert all(len(column_support(8, j)) == 4 for j in range(2, 9))

    @pytest.mark.parametrize("j", [0, 5])
    def test_column_support_range(self, j):
        with pytest.raises(DomainError):
            column_support(4, j)

    def test_next_power_of_two(self):
        assert [next_power_of_two(k) for k in (1, 2, 3, 4, 5, 100, 128)] == [1, 2, 4, 4, 8, 128, 128]

import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from randldp.core import binary_entropy
from randldp.errors import DomainError, ShapeError, SizeError
from randldp.mechanisms import (
    KeyedMechanism,
    Mechanism,
    audit_privacy,
    audit_randomness,
    induce_mechanism,
    make_binary_hadamard,
    make_randomized_response,
    make_rappor,
    rappor_flip_probability,
    truth_probability,
)
from randldp.bounds import randomness_table

from oracle_values import H2_E_OVER_E_PLUS_1, P_R_HALF

E = math.e


def xor_k2(eps=1.0):
    e = math.exp(eps)
    return KeyedMechanism([e / (e + 1), 1 / (e + 1)], [[0, 1], [1, 0]])


class TestInduce:
    def test_xor_example(self):
        Q = induce_mechanism(xor_k2())
        np.testing.assert_allclose(Q.rows, [[E / (E + 1), 1 / (E + 1)], [1 / (E + 1), E / (E + 1)]], atol=1e-15)

    def test_constant_map(self):
        km = KeyedMechanism([0.2, 0.3, 0.5], [[0, 0, 0], [0, 0, 0]], output_size=3)
        np.testing.assert_array_equal(induce_mechanism(km).rows, [[1, 0, 0], [1, 0, 0]])

    def test_uniform_key_identity_map(self):
        km = KeyedMechanism([0.25] * 4, [[0, 1, 2, 3]] * 3)
        np.testing.assert_allclose(induce_mechanism(km).rows, np.full((3, 4), 0.25))

    @settings(max_examples=50)
    @given(st.integers(1, 5), st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**32 - 1))
    def test_rows_sum_to_one(self, k, l, m, seed):
        rng = np.random.default_rng(seed)
        w = rng.random(l) + 1e-3
        km = KeyedMechanism(w / w.sum(), rng.integers(0, m, size=(k, l)), output_size=m)
        np.testing.assert_allclose(induce_mechanism(km).rows.sum(axis=1), 1.0, atol=1e-12)

    def test_shape_errors(self):
        with pytest.raises(ShapeError):
            KeyedMechanism([0.5, 0.5], [[0, 1, 2]])
        with pytest.raises(ShapeError):
            Mechanism([1.0, 0.0])

    def test_json_round_trip(self):
        km = xor_k2()
        doc = json.loads(km.to_json())
        assert doc["k"] == 2 and doc["m"] == 2
        assert doc["map"] == [[1, 2], [2, 1]]
        back = KeyedMechanism.from_dict(doc)
        np.testing.assert_array_equal(back.table, km.table)
        np.testing.assert_array_equal(back.key_dist.probs, km.key_dist.probs)
        Q = induce_mechanism(km)
        np.testing.assert_array_equal(Mechanism.from_dict(json.loads(Q.to_json())).rows, Q.rows)


class TestAudits:
    def test_xor_privacy(self):
        assert audit_privacy(induce_mechanism(xor_k2())) == pytest.approx(1.0, abs=1e-9)

    def test_identity_is_not_private(self):
        assert audit_privacy(Mechanism(np.eye(3))) == math.inf

    def test_identical_rows(self):
        assert audit_privacy(Mechanism([[0.2, 0.8], [0.2, 0.8]])) == 0.0

    def test_zero_columns_skipped(self):
        assert audit_privacy(Mechanism([[0.5, 0.0, 0.5], [0.25, 0.0, 0.75]])) == pytest.approx(math.log(2))

    def test_randomness_examples(self):
        assert audit_randomness(Mechanism(np.eye(3))) == 0.0
        assert audit_randomness(induce_mechanism(xor_k2())) == pytest.approx(H2_E_OVER_E_PLUS_1, abs=1e-12)
        assert audit_randomness(Mechanism(np.full((2, 4), 0.25))) == 2.0


class TestRandomizedResponse:
    def test_zero_epsilon_uniform(self):
        Q = make_randomized_response(0.0, 4)
        np.testing.assert_allclose(Q.rows, 0.25)
        assert audit_randomness(Q) == pytest.approx(2.0)

    def test_binary_equals_xor(self):
        np.testing.assert_allclose(make_randomized_response(1.0, 2).rows, induce_mechanism(xor_k2()).rows, atol=1e-15)

    def test_randomness_matches_table(self):
        assert audit_randomness(make_randomized_response(1.0, 10)) == pytest.approx(randomness_table(1.0, 10)["RR"], abs=1e-9)

    @pytest.mark.parametrize("eps,k", list(itertools.product([0.1, 1.0, 5.0], [2, 5, 10])))
    def test_privacy_exact(self, eps, k):
        assert audit_privacy(make_randomized_response(eps, k)) == pytest.approx(eps, abs=1e-9)

    def test_small_k(self):
        with pytest.raises(DomainError):
            make_randomized_response(1.0, 1)


def rappor_reference(eps, k):
    """Output law built bit by bit, independent of the key factorization."""
    f = 1 / (math.exp(eps / 2) + 1)
    rows = np.zeros((k, 2**k))
    for x in range(k):
        for y in range(2**k):
            prob = 1.0
            for i in range(k):
                bit = (y >> i) & 1
                truth = 1 if i == x else 0
                prob *= f if bit != truth else 1 - f
            rows[x, y] = prob
    return rows


class TestRappor:
    def test_matches_bitwise_reference(self):
        np.testing.assert_allclose(induce_mechanism(make_rappor(1.0, 3)).rows, rappor_reference(1.0, 3), atol=1e-15)

    def test_privacy_k3(self):
        assert audit_privacy(induce_mechanism(make_rappor(1.0, 3))) <= 1.0 + 1e-6

    @pytest.mark.parametrize("k", [2, 4, 6])
    def test_privacy_is_exact(self, k):
        assert audit_privacy(induce_mechanism(make_rappor(2.0, k))) == pytest.approx(2.0, abs=1e-9)

    def test_zero_epsilon(self):
        km = make_rappor(0.0, 4)
        np.testing.assert_allclose(km.key_dist.probs, 1 / 16)
        assert audit_privacy(induce_mechanism(km)) == pytest.approx(0.0, abs=1e-12)

    def test_large_epsilon_near_one_hot(self):
        Q = induce_mechanism(make_rappor(50.0, 4)).rows
        for x in range(4):
            assert Q[x, 1 << x] > 1 - 1e-9

    def test_key_entropy(self):
        km = make_rappor(1.0, 5)
        assert km.key_entropy() == pytest.approx(5 * binary_entropy(rappor_flip_probability(1.0)), abs=1e-12)

    def test_key_entropy_differs_from_table_convention(self):
        # table entry uses H2(e^eps/(e^eps+1)), the per-bit flip is 1/(e^{eps/2}+1)
        km = make_rappor(1.0, 5)
        assert km.key_entropy() > randomness_table(1.0, 5)["RAPPOR"]

    def test_size_limit(self):
        with pytest.raises(SizeError):
            make_rappor(1.0, 17)


class TestBinaryHadamard:
    def test_high_randomness(self):
        Q = make_binary_hadamard(1.0, 1.0, [1], 2)
        assert Q.rows[0, 1] == pytest.approx(E / (E + 1), abs=1e-15)
        assert Q.rows[1, 1] == pytest.approx(1 / (E + 1), abs=1e-15)

    def test_low_randomness(self):
        Q = make_binary_hadamard(1.0, 0.5, [1, 3], 4)
        assert Q.rows[0, 1] == pytest.approx(P_R_HALF, abs=1e-12)
        assert Q.rows[1, 1] == pytest.approx(P_R_HALF / E, abs=1e-12)

    def test_zero_epsilon(self):
        Q = make_binary_hadamard(0.0, 0.3, [1], 2)
        np.testing.assert_array_equal(Q.rows[0], Q.rows[1])
        assert audit_privacy(Q) == 0.0

    def test_r_above_one_clamped(self):
        np.testing.assert_array_equal(
            make_binary_hadamard(0.0, 5.0, [1], 2).rows, make_binary_hadamard(0.0, 1.0, [1], 2).rows
        )

    @settings(max_examples=200)
    @given(st.floats(0.01, 8.0), st.floats(1e-6, 1.5))
    def test_budget_pair(self, eps, R):
        Q = make_binary_hadamard(eps, R, [1, 2], 4)
        assert audit_privacy(Q) == pytest.approx(eps, abs=1e-6)
        assert audit_randomness(Q) <= R + 1e-9

    def test_zero_budget_is_deterministic(self):
        Q = make_binary_hadamard(1.0, 0.0, [1], 2)
        assert audit_randomness(Q) == 0.0
        assert audit_privacy(Q) == 0.0

    @given(st.floats(0.01, 8.0), st.floats(0.0, 3.0))
    def test_critical_point_invariance(self, eps, extra):
        e = math.exp(eps)
        crit = binary_entropy(e / (e + 1))
        assert truth_probability(eps, crit + extra) == truth_probability(eps, crit)

    def test_subset_range(self):
        with pytest.raises(DomainError):
            make_binary_hadamard(1.0, 1.0, [0], 3)

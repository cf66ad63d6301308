import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from randldp.bounds import achievable_upper
from randldp.core import binary_entropy
from randldp.errors import ScheduleError
from randldp.mechanisms import audit_privacy
from randldp.multilevel import (
    _flip_probability,
    _marginalize,
    analyst_keys,
    analyst_view,
    level_channel,
    level_params,
    privatize_cascade,
    randomness_totals,
    run_cascade,
    sample_key_bits,
)
from randldp.simulation import build_distribution, estimate_hadamard, evaluate_loss, sample_inputs

from oracle_values import LEVEL_CHANNEL_EPS05, ONE_OVER_E_PLUS_1, PROPOSED_EPS_1_05, Q2_EPS_1_05, TRIVIAL_EPS_1_05

schedules = st.lists(st.floats(0.05, 6.0), min_size=1, max_size=5, unique=True).map(
    lambda v: sorted(v, reverse=True)
).filter(lambda v: all(a - b > 1e-3 for a, b in zip(v, v[1:])))


class TestLevelParams:
    def test_single_level(self):
        s = level_params([1.0])
        assert math.isclose(s.q[0], ONE_OVER_E_PLUS_1, rel_tol=1e-14)

    def test_two_levels(self):
        s = level_params([1.0, 0.5])
        assert math.isclose(s.q[1], Q2_EPS_1_05, rel_tol=1e-13)
        np.testing.assert_allclose(s.z, [1 / (math.e + 1), 1 / (math.exp(0.5) + 1)], rtol=1e-14)

    def test_close_levels_give_small_bias(self):
        assert level_params([1.0, 1.0 - 1e-9]).q[1] < 1e-9

    @pytest.mark.parametrize("eps", [[], [1.0, 1.0], [0.5, 1.0], [1.0, 0.0], [-1.0], [math.inf]])
    def test_bad_schedules(self, eps):
        with pytest.raises(ScheduleError):
            level_params(eps)

    @given(schedules)
    def test_invariants(self, eps):
        s = level_params(eps)
        assert all(0 < a < b < 0.5 for a, b in zip(s.z, s.z[1:]))
        assert all(0 < q < 0.5 for q in s.q)


class TestCascade:
    def test_all_zero_bits(self):
        assert privatize_cascade(True, [0, 0, 0]) == [1, 1, 1]
        assert privatize_cascade(False, [0, 0, 0]) == [0, 0, 0]

    @pytest.mark.parametrize("d", [1, 2, 3, 4, 5])
    def test_flip_propagates(self, d):
        for bits in itertools.product((0, 1), repeat=d):
            base = privatize_cascade(True, bits)
            for j in range(d):
                flipped = list(bits)
                flipped[j] ^= 1
                out = privatize_cascade(True, flipped)
                assert [a != b for a, b in zip(base, out)] == [m >= j for m in range(d)]

    @pytest.mark.parametrize("d", [1, 2, 3, 4, 5])
    def test_reconstruction_exhaustive(self, d):
        for in_set in (True, False):
            for bits in itertools.product((0, 1), repeat=d):
                ys = privatize_cascade(in_set, bits)
                keys = analyst_keys(np.array(bits))
                for j in range(d):
                    assert int(analyst_view(ys[-1], keys[j])) == ys[j]

    def test_last_key_is_zero(self):
        bits = np.random.default_rng(0).integers(0, 2, size=(50, 4))
        assert np.all(analyst_keys(bits)[:, -1] == 0)

    def test_two_level_law(self):
        s = level_params([1.0, 0.5])
        assert math.isclose(_marginalize(s.q, True), math.exp(0.5) / (math.exp(0.5) + 1), abs_tol=1e-12)


class TestLevelChannel:
    def test_first_level_is_base_channel(self):
        e = math.e
        Q = level_channel(level_params([1.0, 0.5]), 1)
        np.testing.assert_allclose(Q.rows, [[1 / (e + 1), e / (e + 1)], [e / (e + 1), 1 / (e + 1)]], atol=1e-15)

    def test_second_level_value(self):
        Q = level_channel(level_params([1.0, 0.5]), 2)
        assert math.isclose(Q.rows[0, 1], LEVEL_CHANNEL_EPS05, abs_tol=1e-14)
        assert math.isclose(Q.rows[1, 1], 1 - LEVEL_CHANNEL_EPS05, abs_tol=1e-14)

    @settings(max_examples=60, deadline=None)
    @given(schedules)
    def test_law_and_audit(self, eps):
        s = level_params(eps)
        for j, ej in enumerate(s.epsilons, start=1):
            Q = level_channel(s, j)
            assert math.isclose(Q.rows[0, 1], math.exp(ej) / (math.exp(ej) + 1), abs_tol=1e-12)
            assert math.isclose(Q.rows[1, 1], 1 / (math.exp(ej) + 1), abs_tol=1e-12)
            assert math.isclose(audit_privacy(Q), ej, abs_tol=1e-9)

    def test_recursion_matches_exhaustive(self):
        s = level_params([3.0 - 0.1 * j for j in range(12)])
        for j in range(1, 13):
            assert math.isclose(_flip_probability(s.q[:j]), _marginalize(s.q[:j], False), abs_tol=1e-14)

    def test_deep_schedule_uses_recursion(self):
        s = level_params([3.0 - 0.1 * j for j in range(25)])
        Q = level_channel(s, 25)
        assert math.isclose(Q.rows[1, 1], s.z[24], abs_tol=1e-12)

    def test_bad_level(self):
        with pytest.raises(ScheduleError):
            level_channel(level_params([1.0]), 2)


class TestRandomness:
    def test_single_level_equal(self):
        p, t = randomness_totals(level_params([1.3]))
        assert p == t

    def test_two_levels(self):
        p, t = randomness_totals(level_params([1.0, 0.5]))
        assert math.isclose(p, PROPOSED_EPS_1_05, rel_tol=1e-13)
        assert math.isclose(t, TRIVIAL_EPS_1_05, rel_tol=1e-13)

    @given(schedules.filter(lambda v: len(v) > 1))
    def test_strict_savings(self, eps):
        s = level_params(eps)
        for q, z in zip(s.q[1:], s.z[1:]):
            assert binary_entropy(q) < binary_entropy(z)
        p, t = randomness_totals(s)
        assert p < t

    def test_gap_grows_with_depth(self):
        gaps = []
        for d in range(1, 11):
            p, t = randomness_totals(level_params([2.0] + [2.0 - 0.1 * j for j in range(2, d + 1)]))
            gaps.append(t - p)
        assert all(b > a for a, b in zip(gaps, gaps[1:]))


class TestRunCascade:
    def test_key_bit_rates(self):
        s = level_params([1.0, 0.5, 0.2])
        bits = sample_key_bits(s, 200_000, 5)
        for j, q in enumerate(s.q):
            assert abs(bits[:, j].mean() - q) < 4 * math.sqrt(q * (1 - q) / 200_000)

    def test_views_match_virtual_outputs(self):
        s = level_params([2.0, 1.0, 0.5])
        xs = sample_inputs(build_distribution("geometric(0.8)", 16), 3000, 1)
        run = run_cascade(xs, 16, s, 1)
        for j in range(3):
            np.testing.assert_array_equal(analyst_view(run.published, run.keys[:, j]), run.virtual[:, j])
        np.testing.assert_array_equal(run.published, run.virtual[:, -1])

    def test_deterministic(self):
        s = level_params([1.0, 0.5])
        xs = np.zeros(100, dtype=int)
        a, b = run_cascade(xs, 4, s, 9), run_cascade(xs, 4, s, 9)
        np.testing.assert_array_equal(a.published, b.published)
        np.testing.assert_array_equal(a.keys, b.keys)

    def test_per_analyst_utility(self):
        k, n = 64, 10**5
        s = level_params([2.0, 1.0, 0.5])
        p = build_distribution("geometric(0.8)", k)
        xs = sample_inputs(p, n, 2)
        run = run_cascade(xs, k, s, 2)
        for j, eps in enumerate(s.epsilons):
            est = estimate_hadamard(analyst_view(run.published, run.keys[:, j]), run.groups, eps, 1.0, k)
            err = evaluate_loss("l2sq", est, p.probs)
            assert err < achievable_upper("l2sq", eps, 1.0, n, k).value

"""
Tests for becsim.channel module.
"""

import json
import unittest

import numpy as np

from becsim.channel import (
    ERASED,
    BroadcastMedium,
    ChannelParams,
    CsitScenario,
    StateTrace,
    derive_trial_seeds,
    feedback_view,
    sample_cache,
    sample_states,
    transmit,
)
from becsim.errors import ConfigurationError


def three_se(p: float, n: int) -> float:
    return 3 * np.sqrt(p * (1 - p) / n)


class TestChannelParams(unittest.TestCase):
    """Test cases for ChannelParams."""

    def test_rejects_out_of_range(self):
        """Test probabilities outside [0, 1] are configuration errors."""
        with self.assertRaises(ConfigurationError):
            ChannelParams(0.5, 0.5, 1.5, 0.5)
        with self.assertRaises(ConfigurationError):
            ChannelParams(-0.1, 0.5, 0.5, 0.5)

    def test_symmetric_and_swapped(self):
        """Test the symmetric constructor and receiver swap."""
        p = ChannelParams.symmetric(0.3, 0.7)
        self.assertTrue(p.is_symmetric)
        q = ChannelParams(0.1, 0.2, 0.3, 0.4).swapped()
        self.assertEqual(q, ChannelParams(0.2, 0.1, 0.4, 0.3))
        self.assertFalse(q.is_symmetric)


class TestSampling(unittest.TestCase):
    """Test cases for state and cache sampling."""

    def test_erasure_free_and_fully_erased(self):
        """Test delta = 0 gives all ones and delta = 1 all zeros."""
        trace = sample_states(ChannelParams(0.0, 1.0, 0.5, 0.5), 500, np.random.default_rng(0))
        self.assertTrue(np.all(trace.s1 == 1))
        self.assertTrue(np.all(trace.s2 == 0))

    def test_state_frequency(self):
        """Test the empirical reception rate matches 1 - delta."""
        n = 100_000
        trace = sample_states(ChannelParams(0.5, 0.2, 0.0, 0.0), n, np.random.default_rng(1))
        self.assertLess(abs(trace.s1.mean() - 0.5), three_se(0.5, n))
        self.assertLess(abs(trace.s2.mean() - 0.8), three_se(0.8, n))

    def test_states_are_deterministic(self):
        """Test the same seed gives the same trace."""
        p = ChannelParams.symmetric(0.4, 0.5)
        a = sample_states(p, 1000, np.random.default_rng(7))
        b = sample_states(p, 1000, np.random.default_rng(7))
        np.testing.assert_array_equal(a.s1, b.s1)
        np.testing.assert_array_equal(a.s2, b.s2)

    def test_negative_length(self):
        """Test a negative slot count is rejected."""
        with self.assertRaises(ValueError):
            sample_states(ChannelParams.symmetric(0.5, 0.5), -1, np.random.default_rng(0))

    def test_cache_extremes(self):
        """Test eps = 0 caches everything and eps = 1 nothing."""
        cache = sample_cache(ChannelParams(0.5, 0.5, 1.0, 0.0), 300, 200, np.random.default_rng(2))
        self.assertEqual(cache.m1, 300)
        self.assertEqual(cache.m2, 200)
        self.assertEqual(cache.e2.count(), 300)
        self.assertEqual(cache.e1.count(), 0)

    def test_cache_frequency(self):
        """Test the cached fraction matches 1 - eps."""
        n = 100_000
        cache = sample_cache(ChannelParams(0.5, 0.5, 0.5, 0.5), 10, n, np.random.default_rng(3))
        self.assertLess(abs(cache.e1.count() / n - 0.5), three_se(0.5, n))

    def test_trial_seeds_are_independent_streams(self):
        """Test per-trial streams differ from each other and across trials."""
        first = [g.integers(0, 2**32) for g in derive_trial_seeds(5, 0).generators()]
        again = [g.integers(0, 2**32) for g in derive_trial_seeds(5, 0).generators()]
        other = [g.integers(0, 2**32) for g in derive_trial_seeds(5, 1).generators()]
        self.assertEqual(first, again)
        self.assertEqual(len(set(first)), 4)
        self.assertNotEqual(first, other)
        with self.assertRaises(ConfigurationError):
            derive_trial_seeds(-1, 0)


class TestChannelLaw(unittest.TestCase):
    """Test cases for transmit and feedback views."""

    def test_transmit(self):
        """Test receptions follow Y_i = S_i X with erasure marks."""
        self.assertEqual(transmit(1, 1, 0), (1, ERASED))
        self.assertEqual(transmit(0, 1, 1), (0, 0))
        self.assertEqual(transmit(1, 0, 0), (ERASED, ERASED))

    def _trace(self) -> StateTrace:
        return StateTrace(np.array([1, 0, 1, 1, 0, 1]), np.array([0, 0, 1, 0, 1, 1]))

    def test_feedback_nn(self):
        """Test no CSIT exposes nothing."""
        view = feedback_view(CsitScenario.nn(), self._trace(), 5)
        self.assertIsNone(view.visible_s1)
        self.assertIsNone(view.visible_s2)
        with self.assertRaises(PermissionError):
            view.last(1)

    def test_feedback_dd(self):
        """Test delayed CSIT shows both prefixes up to t - 1."""
        view = feedback_view(CsitScenario.dd(), self._trace(), 5)
        self.assertEqual(view.visible_s1.tolist(), [1, 0, 1, 1])
        self.assertEqual(view.visible_s2.tolist(), [0, 0, 1, 0])
        self.assertEqual(view.last(2), 0)

    def test_feedback_dn(self):
        """Test one-sided CSIT shows only that receiver."""
        view = feedback_view(CsitScenario.dn(1), self._trace(), 5)
        self.assertEqual(len(view.visible_s1), 4)
        self.assertIsNone(view.visible_s2)
        with self.assertRaises(PermissionError):
            view.last(2)

    def test_feedback_is_read_only(self):
        """Test encoders cannot rewrite the past."""
        view = feedback_view(CsitScenario.dd(), self._trace(), 4)
        with self.assertRaises(ValueError):
            view.visible_s1[0] = 0

    def test_feedback_out_of_range(self):
        """Test slots outside the trace are rejected."""
        with self.assertRaises(IndexError):
            feedback_view(CsitScenario.dd(), self._trace(), 7)
        with self.assertRaises(IndexError):
            feedback_view(CsitScenario.dd(), self._trace(), 0)

    def test_dn_needs_receiver(self):
        """Test DN must name receiver 1 or 2."""
        with self.assertRaises(ConfigurationError):
            CsitScenario.dn(3)
        self.assertEqual(str(CsitScenario.dn(2)), "DN(2)")


class TestBroadcastMedium(unittest.TestCase):
    """Test cases for the slot driver."""

    def test_erasures_match_trace(self):
        """Test erasure marks sit exactly where the states are 0."""
        trace = StateTrace.lazy(ChannelParams(0.3, 0.6, 0.5, 0.5), np.random.default_rng(4))
        medium = BroadcastMedium(CsitScenario.nn(), trace)
        medium.begin_phase("only")
        medium.send_block(np.ones(5000, dtype=np.uint8))
        t = medium.transcript()
        np.testing.assert_array_equal(t.y1 == ERASED, t.s1 == 0)
        np.testing.assert_array_equal(t.y2 == ERASED, t.s2 == 0)
        self.assertTrue(np.all(t.y1[t.s1 == 1] == 1))

    def test_feedback_lags_one_slot(self):
        """Test the encoder sees slot t only after sending it."""
        trace = StateTrace(np.array([0, 1, 1]), np.array([1, 1, 0]))
        medium = BroadcastMedium(CsitScenario.dd(), trace)
        medium.begin_phase("p")
        with self.assertRaises(IndexError):
            medium.feedback().last(1)
        medium.send(1)
        self.assertEqual(medium.feedback().last(1), 0)
        medium.send(0)
        self.assertEqual(medium.feedback().last(1), 1)
        self.assertEqual(medium.feedback().visible_s2.tolist(), [1, 1])

    def test_fixed_trace_runs_out(self):
        """Test a fixed trace cannot be extended."""
        medium = BroadcastMedium(CsitScenario.nn(), StateTrace(np.array([1]), np.array([1])))
        medium.send(1)
        with self.assertRaises(IndexError):
            medium.send(0)

    def test_phases_and_json(self):
        """Test phase bookkeeping and the transcript JSON layout."""
        trace = StateTrace.lazy(ChannelParams.symmetric(0.5, 0.5), np.random.default_rng(5))
        medium = BroadcastMedium(CsitScenario.dd(), trace)
        medium.begin_phase("I")
        medium.send_block(np.array([1, 0, 1]))
        medium.begin_phase("II")
        medium.send(1)
        self.assertEqual(medium.end_phase(), 1)
        self.assertEqual(medium.phase_lengths(), {"I": 3, "II": 1})
        with self.assertRaises(RuntimeError):
            medium.end_phase()

        t = medium.transcript()
        self.assertEqual(t.span("II").start, 3)
        doc = json.loads(t.to_json({"rx1": {"I": 2}}))
        self.assertEqual(doc["total_slots"], 4)
        self.assertEqual(doc["x"], [1, 0, 1, 1])
        self.assertEqual([p["name"] for p in doc["phases"]], ["I", "II"])
        self.assertEqual(doc["ledger"], {"rx1": {"I": 2}})
        self.assertEqual(len(doc["s1"]), 4)

    def test_lazy_trace_is_reproducible(self):
        """Test growing a lazy trace in different steps gives the same states."""
        p = ChannelParams.symmetric(0.5, 0.5)
        a = StateTrace.lazy(p, np.random.default_rng(9))
        b = StateTrace.lazy(p, np.random.default_rng(9))
        a.ensure(10_000)
        b.ensure(10)
        b.ensure(10_000)
        np.testing.assert_array_equal(a.s1[:10_000], b.s1[:10_000])

    def test_trace_round_trip(self):
        """Test StateTrace serializes to slot arrays."""
        trace = StateTrace(np.array([1, 0]), np.array([0, 1]))
        self.assertEqual(StateTrace.from_dict(trace.to_dict()).s2.tolist(), [0, 1])


if __name__ == "__main__":
    unittest.main()

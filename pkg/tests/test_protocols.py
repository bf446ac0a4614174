"""
Tests for becsim.protocols package.
"""

import math
import os
import unittest

import numpy as np

from becsim.channel import (
    BroadcastMedium,
    CacheAssignment,
    ChannelParams,
    CsitScenario,
    StateTrace,
    derive_trial_seeds,
    sample_cache,
)
from becsim.errors import ConfigurationError
from becsim.gf2 import BitVector
from becsim.protocols import (
    PROTOCOLS,
    PhasePlan,
    PhaseSpec,
    ProtocolConfig,
    ProtocolResult,
    get_protocol,
    random_messages,
    run_nn_full_side_info,
    slack,
)
from becsim.protocols.base import (
    RANK_MARGIN,
    ArqRepeatStats,
    EquationLedger,
    feedback_margin,
    fountain_length,
)
from becsim.protocols.dd_blind_symmetric import plan_dd_blind_symmetric
from becsim.protocols.dn_case_b import expected_k, expected_k_minus_one_plus, plan_case_b
from becsim.protocols.dn_case_c import decodability_margin, plan_case_c
from becsim.protocols.nn_blind import plan_nn_blind_inner
from becsim.protocols.nn_semiblind import (
    SemiBlindNNEncoder,
    decode_rx1_pooled,
    plan_nn_semiblind,
    received_in,
)

SLACK = 3.0
SLOW = os.environ.get("BECSIM_SLOW") == "1"

# (protocol, params, base size m, slack coefficient)
DESK_CASES = [
    ("nn-semiblind", ChannelParams(1 / 3, 1 / 2, 2 / 3, 1 / 6), 400, SLACK),
    ("dd-blind-symmetric", ChannelParams.symmetric(0.5, 0.5), 300, SLACK),
    ("dd-blind-symmetric", ChannelParams.symmetric(0.3, 0.6), 300, SLACK),
    ("case-b", ChannelParams(0.5, 0.5, 0.0, 0.5), 400, SLACK),
    ("case-c", ChannelParams.symmetric(0.5, 0.5), 300, 4.0),
    ("nn-blind-symmetric", ChannelParams.symmetric(0.5, 0.5), 300, SLACK),
    ("nn-blind-inner", ChannelParams(0.25, 0.5, 0.0, 0.5), 150, SLACK),
]


def setup_trial(protocol, params, m, seed=0, trial=0, slack_coeff=SLACK, sizes=None):
    """Messages, caches, trace and coding stream of one trial, as the harness builds them."""
    m1, m2 = sizes if sizes is not None else get_protocol(protocol).sizes(params, m)
    rng_states, rng_cache, rng_coding, rng_messages = derive_trial_seeds(seed, trial).generators()
    cfg = ProtocolConfig(params, m1, m2, slack_coeff, m=m)
    msgs = random_messages(m1, m2, rng_messages)
    cache = sample_cache(params, m1, m2, rng_cache)
    trace = StateTrace.lazy(params, rng_states)
    return cfg, msgs, cache, trace, rng_coding


def run_trial(protocol, params, m, seed=0, trial=0, slack_coeff=SLACK, keep_transcript=False):
    cfg, msgs, cache, trace, rng = setup_trial(protocol, params, m, seed, trial, slack_coeff)
    result = get_protocol(protocol).runner(
        cfg, msgs, cache, trace, rng, keep_transcript=keep_transcript
    )
    return result, msgs, cache


def flip_mask(v: BitVector, rng: np.random.Generator) -> BitVector:
    """A different mask of the same length."""
    bits = v.to_bits()
    if bits.size:
        bits = bits ^ (rng.random(bits.size) < 0.5).astype(np.uint8)
        bits[0] ^= 1
    return BitVector.from_bits(bits)


class TestSizing(unittest.TestCase):
    """Test cases for slack and fountain lengths."""

    def test_slack(self):
        """Test slack is ceil(c * n^(2/3)) and zero for an empty target."""
        self.assertEqual(slack(0, 2.0), 0)
        self.assertEqual(slack(1000, 2.0), 200)
        self.assertEqual(slack(8, 1.0), 4)

    def test_fountain_length(self):
        """Test a fountain covers target/(1 - erasure) plus slack on the base size."""
        self.assertEqual(fountain_length(1000, 0.5, 2.0, 1000), 2200)
        self.assertEqual(fountain_length(100, 0.5, 2.0, 1000), 400)
        self.assertEqual(fountain_length(0, 0.5, 2.0, 1000), 0)
        with self.assertRaises(ConfigurationError):
            fountain_length(10, 1.0, 2.0, 10)

    def test_slack_sized_on_base_m(self):
        """Test every fixed phase adds slack(m) whatever its own target."""
        p = ChannelParams.symmetric(0.5, 0.5)
        cfg = ProtocolConfig(p, 800, 1000, 2.0, m=1000)
        self.assertEqual(cfg.slack_slots, 200)
        self.assertEqual(cfg.fountain_length(100, 0.5), 400)
        self.assertEqual(ProtocolConfig(p, 300, 1000, 2.0).base_m, 1000)

    def test_feedback_margin(self):
        """Test the feedback margin grows like sqrt(n) and vanishes for an empty goal."""
        self.assertEqual(feedback_margin(0, 3.0), 0)
        self.assertEqual(feedback_margin(100, 3.0), 30 + RANK_MARGIN)
        self.assertEqual(feedback_margin(10_000, 3.0), 300 + RANK_MARGIN)
        self.assertLess(feedback_margin(10_000, 3.0), slack(10_000, 3.0))

    def test_config_validation(self):
        """Test negative sizes and slack are rejected."""
        p = ChannelParams.symmetric(0.5, 0.5)
        with self.assertRaises(ConfigurationError):
            ProtocolConfig(p, -1, 10)
        with self.assertRaises(ConfigurationError):
            ProtocolConfig(p, 10, 10, slack_coeff=-1.0)
        with self.assertRaises(ConfigurationError):
            ProtocolConfig(p, 10, 10, m=-5)

    def test_registry(self):
        """Test all six protocols are registered and unknown ids are configuration errors."""
        self.assertEqual(
            sorted(PROTOCOLS),
            sorted(
                [
                    "nn-semiblind",
                    "dd-blind-symmetric",
                    "case-b",
                    "case-c",
                    "nn-blind-symmetric",
                    "nn-blind-inner",
                ]
            ),
        )
        with self.assertRaises(ConfigurationError):
            get_protocol("nn-magic")

    def test_sizes_follow_corner(self):
        """Test message sizes track the corner rate ratio."""
        p = ChannelParams(1 / 3, 1 / 2, 2 / 3, 1 / 6)
        m1, m2 = get_protocol("nn-semiblind").sizes(p, 1000)
        self.assertEqual((m1, m2), (800, 1000))
        inner = get_protocol("nn-blind-inner").sizes(ChannelParams(0.25, 0.5, 0, 0.5), 100)
        self.assertEqual(inner, (400, 100))
        case_b = get_protocol("case-b").sizes(ChannelParams(0.5, 0.5, 0, 0.5), 300)
        self.assertEqual(case_b, (300, 200))


class TestPhasePlans(unittest.TestCase):
    """Test cases for phase plans and regime checks."""

    def test_nn_plan_rejects_feedback_phases(self):
        """Test a scenario without feedback cannot stop a phase on feedback."""
        with self.assertRaises(ConfigurationError):
            PhasePlan(CsitScenario.nn(), (PhaseSpec("I", None, "until received"),))
        plan = PhasePlan(CsitScenario.dn(1), (PhaseSpec("I", None, "until received"),))
        self.assertIsNone(plan.nominal_total)

    def test_semiblind_plan(self):
        """Test the semi-blind plan has three fixed phases and needs delta2 >= delta1."""
        cfg = ProtocolConfig(ChannelParams(1 / 3, 1 / 2, 2 / 3, 1 / 6), 800, 1000)
        plan = plan_nn_semiblind(cfg, 700)
        self.assertEqual(plan.names, ["I-a", "I-b", "II"])
        phase_one = plan.phases[0].nominal + plan.phases[1].nominal
        self.assertGreaterEqual(phase_one, cfg.fountain_length(1000, 0.5))
        self.assertEqual(plan.phases[2].nominal, cfg.fountain_length(100, 1 / 3))
        with self.assertRaises(ConfigurationError):
            plan_nn_semiblind(ProtocolConfig(ChannelParams(0.5, 0.2, 0.5, 0.5), 10, 10), 5)

    def test_case_b_needs_full_rx1_cache(self):
        """Test eps1 != 0 is a configuration error for Case B."""
        with self.assertRaises(ConfigurationError):
            plan_case_b(ProtocolConfig(ChannelParams(0.5, 0.5, 0.2, 0.5), 100, 60), 50)
        with self.assertRaises(ConfigurationError):
            run_trial("case-b", ChannelParams(0.5, 0.5, 0.2, 0.5), 100)

    def test_case_b_tail_covers_deficit(self):
        """Test the tail covers Rx2's expected shortfall plus slack."""
        cfg = ProtocolConfig(ChannelParams(0.5, 0.5, 0.0, 0.5), 300, 200, m=300)
        # No cached a-bits: 300 * E[(K-1)+] = 100 pure equations, 100 short.
        self.assertEqual(plan_case_b(cfg, 0).phases[1].nominal, 200 + cfg.slack_slots)
        # Half cached: 150 * E[K] + 150 * E[(K-1)+] = 200, only slack remains.
        self.assertEqual(plan_case_b(cfg, 150).phases[1].nominal, slack(300, 2.0))

    def test_inner_plan_wraps_for_rx2(self):
        """Test Phase 1 carries every a-bit once plus wrapped slots for Rx2's slack."""
        cfg = ProtocolConfig(ChannelParams(0.25, 0.5, 0.0, 0.5), 400, 100, m=100)
        plan = plan_nn_blind_inner(cfg)
        self.assertEqual(plan.names, ["1", "2"])
        self.assertEqual(plan.phases[0].nominal, 400 + int(np.ceil(slack(100, 2.0) / 0.25)))
        self.assertEqual(plan.phases[1].nominal, cfg.fountain_length(100, 0.25))

    def test_tails_are_named_in_plans(self):
        """Test the phases added for receivers without a stopping rule say so."""
        case_b = ProtocolConfig(ChannelParams(0.5, 0.5, 0.0, 0.5), 300, 200)
        inner = ProtocolConfig(ChannelParams(0.25, 0.5, 0.0, 0.5), 400, 100)
        rules = [
            plan_case_b(case_b, 0).phases[1].rule,
            plan_nn_blind_inner(inner).phases[0].rule,
        ]
        cfg, _, cache, _, _ = setup_trial("case-c", ChannelParams.symmetric(0.5, 0.5), 100)
        rules.append(plan_case_c(cfg, cache).phases[-1].rule)
        for rule in rules:
            with self.subTest(rule=rule):
                self.assertIn("added tail", rule)
                self.assertIn("no stopping rule", rule)
                self.assertIn("slack(m)", rule)
        with self.assertRaises(ConfigurationError):
            plan_nn_blind_inner(ProtocolConfig(ChannelParams(0.25, 0.5, 0.1, 0.5), 400, 100))

    def test_dd_blind_needs_symmetry(self):
        """Test the delayed-CSIT blind scheme refuses asymmetric inputs."""
        with self.assertRaises(ConfigurationError):
            run_trial("dd-blind-symmetric", ChannelParams(0.5, 0.4, 0.5, 0.5), 50)

    def test_case_c_overload(self):
        """Test Case C refuses message sizes that overload Rx2."""
        p = ChannelParams.symmetric(0.5, 0.5)
        self.assertAlmostEqual(decodability_margin(ProtocolConfig(p, 300, 300)), 0.0, places=6)
        self.assertLess(decodability_margin(ProtocolConfig(p, 300, 400)), 0)
        cfg, msgs, cache, trace, rng = setup_trial("case-c", p, 300, sizes=(300, 400))
        with self.assertRaises(ConfigurationError):
            get_protocol("case-c").runner(cfg, msgs, cache, trace, rng)

    def test_ledger_accumulates(self):
        """Test equation counts add up per receiver and phase."""
        ledger = EquationLedger()
        ledger.record(1, "I", 3)
        ledger.record(1, "I", 2)
        ledger.record(2, "II", 4)
        self.assertEqual(ledger.to_dict(), {"rx1": {"I": 5}, "rx2": {"II": 4}})

    def test_result_checks_slot_sum(self):
        """Test a result whose slots differ from its phases is rejected."""
        plan = PhasePlan(CsitScenario.nn(), (PhaseSpec("joint", 3, "fixed"),))
        with self.assertRaises(ValueError):
            ProtocolResult(None, None, 4, {"joint": 3}, plan)


class TestFeedbackQuotas(unittest.TestCase):
    """Feedback-terminated phases of the delayed-CSIT scheme stop at their goals."""

    def test_quotas_met_exactly(self):
        """Test Phases II and III stop the slot their receiver holds eps*|X| combinations."""
        p = ChannelParams.symmetric(0.5, 0.5)
        for trial in range(3):
            with self.subTest(trial=trial):
                result, msgs, _ = run_trial("dd-blind-symmetric", p, 300, trial=trial)
                sets = result.diagnostics["sets"]
                equations = result.diagnostics["equations"]
                q1 = math.ceil(0.5 * sets["b_tilde"])
                q2 = math.ceil(0.5 * sets["a_tilde"])
                self.assertEqual(sets["quotas"], [q1, q2])
                self.assertEqual(equations["rx1"]["II"], q1)
                self.assertEqual(equations["rx2"]["III"], q2)
                margin = feedback_margin(0.5 * sets["b_tilde"], SLACK)
                self.assertEqual(sets["needs"][0], 300 + q1 + margin)
                self.assertTrue(result.matches(msgs))

    def test_rx1_guard_when_eps_exceeds_delta(self):
        """Test Rx1 gets its uncached share of the Rx1-only bits before Phase IV."""
        p = ChannelParams.symmetric(0.3, 0.9)
        result, msgs, _ = run_trial("dd-blind-symmetric", p, 300)
        sets = result.diagnostics["sets"]
        lacking = 0.9 * sets["rx1_only"]
        self.assertGreaterEqual(
            result.diagnostics["equations"]["rx1"]["II"],
            math.ceil(lacking) + feedback_margin(lacking, SLACK),
        )
        self.assertTrue(result.matches(msgs))
        self.assertIn("only b~", plan_dd_blind_symmetric(ProtocolConfig(p, 10, 10)).phases[1].rule)

    def test_rate_near_corner(self):
        """Test the mean rate sits within 5% of 3/8 at m = 2000 with a unit coefficient."""
        p = ChannelParams.symmetric(0.5, 0.5)
        rates = []
        for trial in range(4):
            result, _, _ = run_trial("dd-blind-symmetric", p, 2000, trial=trial, slack_coeff=1.0)
            rates.append(2000 / result.slots_used)
        self.assertGreaterEqual(np.mean(rates), 0.95 * 0.375)
        self.assertLessEqual(np.mean(rates), 0.375 * 1.01)


class TestDecoding(unittest.TestCase):
    """Every protocol recovers both messages at desk scale."""

    def test_each_protocol_decodes(self):
        """Test decoded messages equal the sent messages."""
        for protocol, params, m, coeff in DESK_CASES:
            for trial in range(2):
                with self.subTest(protocol=protocol, params=params.as_dict(), trial=trial):
                    result, msgs, _ = run_trial(protocol, params, m, trial=trial, slack_coeff=coeff)
                    self.assertTrue(result.success, result.diagnostics.get("failure"))
                    self.assertTrue(result.matches(msgs))
                    self.assertEqual(result.slots_used, sum(result.phase_lengths.values()))
                    self.assertEqual(list(result.phase_lengths), result.plan.names)

    def test_full_side_information(self):
        """Test eps = 0 sends one XORed fountain and both receivers decode."""
        p = ChannelParams.symmetric(0.3, 0.0)
        cfg, msgs, cache, trace, rng = setup_trial("nn-blind-symmetric", p, 300)
        result = run_nn_full_side_info(cfg, msgs, cache, trace, rng)
        self.assertTrue(result.matches(msgs))
        self.assertEqual(result.slots_used, cfg.fountain_length(300, 0.3))

    def test_blind_symmetric_switches_at_eps_zero(self):
        """Test the blind symmetric runner falls back to the full side-information scheme."""
        result, msgs, _ = run_trial("nn-blind-symmetric", ChannelParams.symmetric(0.3, 0.0), 200)
        self.assertTrue(result.matches(msgs))
        self.assertTrue(result.plan.phases[0].rule.startswith("fixed: max_i"))

    def test_erasure_free_rx1(self):
        """Test delta1 = 0 still runs the inner scheme with an empty Phase 2."""
        result, msgs, _ = run_trial("nn-blind-inner", ChannelParams(0.0, 0.5, 0.0, 0.5), 100)
        self.assertTrue(result.matches(msgs))
        self.assertEqual(result.phase_lengths["2"], 0)

    def test_case_c_without_caches(self):
        """Test eps1 = eps2 = 1 leaves Phase III empty and still decodes."""
        p = ChannelParams.symmetric(0.5, 1.0)
        result, msgs, cache = run_trial("case-c", p, 300, slack_coeff=4.0)
        self.assertEqual(cache.e2.count(), 0)
        self.assertEqual(result.phase_lengths["III"], 0)
        self.assertTrue(result.matches(msgs))

    def test_case_c_full_caches(self):
        """Test eps1 = eps2 = 0 leaves Phases I and II empty."""
        p = ChannelParams.symmetric(0.4, 0.0)
        result, msgs, _ = run_trial("case-c", p, 200, slack_coeff=4.0)
        self.assertEqual(result.phase_lengths["I"], 0)
        self.assertEqual(result.phase_lengths["II"], 0)
        self.assertTrue(result.matches(msgs))

    def test_semiblind_pooled_rx1(self):
        """Test Rx1's joint solve over all of Phase I recovers the a-bits Rx2 caches."""
        p = ChannelParams(1 / 3, 1 / 2, 2 / 3, 1 / 6)
        cfg, msgs, cache, trace, rng = setup_trial("nn-semiblind", p, 200)
        encoder = SemiBlindNNEncoder(cfg, msgs, cache.e2, rng)
        medium = BroadcastMedium(CsitScenario.nn(), trace)
        book = encoder.run(medium)
        transcript = medium.transcript()
        hit_a, y_a = received_in(transcript, 1, "I-a")
        hit_b, y_b = received_in(transcript, 1, "I-b")
        b_cache = msgs.b.to_bits() & cache.e1.to_bits()
        cached = decode_rx1_pooled(book, cfg, hit_a, y_a, hit_b, y_b, cache.e1, b_cache)
        np.testing.assert_array_equal(cached, msgs.a.to_bits()[book.cached_idx])


class TestBlindness(unittest.TestCase):
    """Encoders only react to the cache masks they are allowed to see."""

    def _transmitted(self, protocol, params, m, cache_edit):
        cfg, msgs, cache, trace, rng = setup_trial(protocol, params, m)
        cache = cache_edit(cache)
        result = get_protocol(protocol).runner(cfg, msgs, cache, trace, rng, keep_transcript=True)
        return result.transcript.x

    def test_blind_encoders_ignore_both_masks(self):
        """Test changing both caches leaves the blind transmissions unchanged."""
        edit_rng = np.random.default_rng(99)

        def both(cache):
            return CacheAssignment(flip_mask(cache.e1, edit_rng), flip_mask(cache.e2, edit_rng))

        for protocol, params, m in (
            ("dd-blind-symmetric", ChannelParams.symmetric(0.5, 0.5), 100),
            ("nn-blind-symmetric", ChannelParams.symmetric(0.5, 0.5), 100),
            ("nn-blind-inner", ChannelParams(0.25, 0.5, 0.0, 0.5), 50),
        ):
            with self.subTest(protocol=protocol):
                original = self._transmitted(protocol, params, m, lambda c: c)
                edited = self._transmitted(protocol, params, m, both)
                np.testing.assert_array_equal(original, edited)

    def test_semiblind_encoders_ignore_rx1_mask(self):
        """Test changing only Rx1's mask leaves the semi-blind transmissions unchanged."""
        edit_rng = np.random.default_rng(98)

        def rx1_only(cache):
            return CacheAssignment(flip_mask(cache.e1, edit_rng), cache.e2)

        for protocol, params, m in (
            ("nn-semiblind", ChannelParams(1 / 3, 1 / 2, 2 / 3, 1 / 6), 100),
            ("case-b", ChannelParams(0.5, 0.5, 0.0, 0.5), 100),
        ):
            with self.subTest(protocol=protocol):
                original = self._transmitted(protocol, params, m, lambda c: c)
                edited = self._transmitted(protocol, params, m, rx1_only)
                np.testing.assert_array_equal(original, edited)

    def test_wrong_mask_breaks_rx1(self):
        """Test Rx1 cannot decode Case B once it lacks part of b."""
        cfg, msgs, cache, trace, rng = setup_trial("case-b", ChannelParams(0.5, 0.5, 0.0, 0.5), 100)
        bits = cache.e1.to_bits()
        bits[0] = 0
        cache = CacheAssignment(BitVector.from_bits(bits), cache.e2)
        result = get_protocol("case-b").runner(cfg, msgs, cache, trace, rng)
        self.assertIsNone(result.decoded1)
        self.assertIn("rx1", result.diagnostics["failure"])


class TestReplay(unittest.TestCase):
    """Transcripts are pure functions of the seeds."""

    def test_transcript_replays(self):
        """Test the same seeds give the same transcript for every protocol."""
        for protocol, params, m, coeff in DESK_CASES[:2] + DESK_CASES[3:]:
            with self.subTest(protocol=protocol):
                a, _, _ = run_trial(protocol, params, m // 2, 0, 0, coeff, keep_transcript=True)
                b, _, _ = run_trial(protocol, params, m // 2, 0, 0, coeff, keep_transcript=True)
                self.assertEqual(a.transcript.to_json(), b.transcript.to_json())
                self.assertEqual(a.transcript.total_slots, a.slots_used)
                self.assertEqual(
                    [span.name for span in a.transcript.phases], list(a.phase_lengths)
                )

    def test_transcript_dropped_by_default(self):
        """Test results carry no transcript unless asked."""
        result, _, _ = run_trial("nn-blind-symmetric", ChannelParams.symmetric(0.5, 0.5), 50)
        self.assertIsNone(result.transcript)

    def test_seeds_change_the_run(self):
        """Test different trial indices draw different transmissions."""
        p = ChannelParams.symmetric(0.5, 0.5)
        a, _, _ = run_trial("nn-blind-symmetric", p, 50, trial=0, keep_transcript=True)
        b, _, _ = run_trial("nn-blind-symmetric", p, 50, trial=1, keep_transcript=True)
        self.assertNotEqual(a.transcript.x.tolist(), b.transcript.x.tolist())


class TestRepeatStatistics(unittest.TestCase):
    """ARQ repetition counts against their closed forms."""

    def test_expected_k_closed_forms(self):
        """Test E[K] and E[(K-1)+] at delta1 = delta2 = 0.5."""
        self.assertAlmostEqual(expected_k(0.5, 0.5), 1.0)
        self.assertAlmostEqual(expected_k_minus_one_plus(0.5, 0.5), 1 / 3)

    def test_expected_k_minus_one_plus_by_simulation(self):
        """Test the (K-1)+ formula against a direct repetition process."""
        rng = np.random.default_rng(5)
        d1, d2 = 0.3, 0.6
        repeats = rng.geometric(1.0 - d1, size=200_000)
        k = rng.binomial(repeats, 1.0 - d2)
        self.assertAlmostEqual(k.mean(), expected_k(d1, d2), delta=0.01)
        aligned = np.maximum(k - 1, 0).mean()
        self.assertAlmostEqual(aligned, expected_k_minus_one_plus(d1, d2), delta=0.01)

    def test_case_b_repeat_counts(self):
        """Test the ARQ phase of Case B matches E[K] and E[(K-1)+]."""
        p = ChannelParams(0.5, 0.5, 0.0, 0.5)
        result, _, cache = run_trial("case-b", p, 1000)
        self.assertTrue(result.success)
        held = cache.e2.to_bits().astype(bool)
        self.assertEqual(result.arq.repeats.size, 1000)
        self.assertEqual(int(result.arq.repeats.sum()), result.phase_lengths["ARQ"])
        self.assertAlmostEqual(result.arq.mean_k(held), expected_k(0.5, 0.5), delta=0.2)
        self.assertAlmostEqual(
            result.arq.mean_k_minus_one_plus(~held), expected_k_minus_one_plus(0.5, 0.5), delta=0.2
        )

    def test_case_c_phase_three_counts(self):
        """Test Phase III covers exactly the a-bits Rx2 caches."""
        p = ChannelParams.symmetric(0.5, 0.5)
        result, _, cache = run_trial("case-c", p, 300, slack_coeff=4.0)
        self.assertEqual(result.arq.repeats.size, cache.e2.count())
        self.assertEqual(int(result.arq.repeats.sum()), result.phase_lengths["III"])
        self.assertLessEqual(result.diagnostics["recycled"], result.phase_lengths["I"])
        self.assertGreaterEqual(result.phase_lengths["IV"], result.diagnostics["recycled"])
        self.assertGreater(result.diagnostics["virtual_bits"], 0)

    def test_repeat_stats_validation(self):
        """Test K_j cannot exceed L_j and L_j is at least one."""
        with self.assertRaises(ValueError):
            ArqRepeatStats(np.array([1, 2]), np.array([2, 0]))
        with self.assertRaises(ValueError):
            ArqRepeatStats(np.array([0]), np.array([0]))
        stats = ArqRepeatStats(np.array([1, 3, 2]), np.array([1, 2, 0]))
        self.assertAlmostEqual(stats.mean_k(), 1.0)
        self.assertAlmostEqual(stats.mean_k_minus_one_plus(np.array([False, True, True])), 0.5)


@unittest.skipUnless(SLOW, "acceptance-scale run; set BECSIM_SLOW=1")
class TestArqPhaseLengths(unittest.TestCase):
    """ARQ phase lengths at m = 10^4 against their closed forms."""

    M = 10_000

    def _mean_phase(self, protocol, params, phase, trials):
        lengths = []
        for trial in range(trials):
            result, _, _ = run_trial(protocol, params, self.M, trial=trial)
            lengths.append(result.phase_lengths[phase])
        return float(np.mean(lengths))

    def test_case_b_arq_length(self):
        """Test Case B's ARQ phase lasts m1/(1-delta1) within 2%."""
        p = ChannelParams(0.5, 0.5, 0.0, 0.5)
        m1, _ = get_protocol("case-b").sizes(p, self.M)
        expected = m1 / (1.0 - p.delta1)
        self.assertAlmostEqual(self._mean_phase("case-b", p, "ARQ", 3) / expected, 1.0, delta=0.02)

    def test_case_c_phase_three_length(self):
        """Test Case C's Phase III lasts (1-eps2)*m1/(1-delta1) within 2%."""
        p = ChannelParams.symmetric(0.5, 0.5)
        m1, _ = get_protocol("case-c").sizes(p, self.M)
        expected = (1.0 - p.eps2) * m1 / (1.0 - p.delta1)
        self.assertAlmostEqual(self._mean_phase("case-c", p, "III", 5) / expected, 1.0, delta=0.02)


if __name__ == "__main__":
    unittest.main()

"""
ARQ + fountain superposition with feedback from Rx1 only, for eps1 = 0.

Each slot carries a_j XOR g_t.b. The transmitter moves to a_{j+1} once the delayed
state of Rx1 shows the slot was received. Rx1 knows all of b and reads a_j off.
Rx2 gets one pure b-equation per reception of a cached a_j, and (K_j - 1)+ pure
equations from the K_j receptions of an uncached a_j by XORing consecutive pairs.

Rx2 has no stopping rule of its own, so a short tail of pure b-combinations
(sized from the expected equation count plus slack) follows the ARQ phase.
"""

import logging
from dataclasses import dataclass

import numpy as np

from ..channel import ERASED, BroadcastMedium, CacheAssignment, CsitScenario, StateTrace, Transcript
from ..errors import ConfigurationError
from ..gf2 import BitVector, pack_bits, random_words, row_parity, word_parity
from .base import (
    FEEDBACK_TERMINATED,
    ArqRepeatStats,
    EquationLedger,
    Messages,
    PhasePlan,
    PhaseSpec,
    ProtocolConfig,
    ProtocolResult,
    ceil_count,
    encode_rows,
    failure_reason,
    require_reachable,
    solve_subset,
)

logger = logging.getLogger(__name__)

SCENARIO = CsitScenario.dn(1)


def expected_k(delta1: float, delta2: float) -> float:
    """Mean receptions at Rx2 while one bit is repeated for Rx1."""
    return (1.0 - delta2) / (1.0 - delta1)


def expected_k_minus_one_plus(delta1: float, delta2: float) -> float:
    """Mean of (K - 1)+ for the same repetition process."""
    return (delta1 - delta2) / (1.0 - delta1) + (delta2 - delta1 * delta2) / (1.0 - delta1 * delta2)


def plan_case_b(cfg: ProtocolConfig, n_cached: int) -> PhasePlan:
    p = cfg.params
    if p.eps1 != 0:
        raise ConfigurationError(f"Case B needs eps1 = 0 (Rx1 caches all of b), got {p.eps1}")
    if cfg.m1:
        require_reachable(p.delta1, "ARQ towards Rx1")
    tail = 0
    if cfg.m2:
        require_reachable(p.delta2, "fountain towards Rx2")
        expected = 0.0
        if cfg.m1:
            expected = n_cached * expected_k(p.delta1, p.delta2) + (
                cfg.m1 - n_cached
            ) * expected_k_minus_one_plus(p.delta1, p.delta2)
        tail = ceil_count(max(0.0, cfg.m2 - expected) / (1.0 - p.delta2)) + cfg.slack_slots
    return PhasePlan(
        SCENARIO,
        (
            PhaseSpec("ARQ", FEEDBACK_TERMINATED, "advance a_j when Rx1's delayed state is 1"),
            PhaseSpec(
                "tail",
                tail,
                "added tail: Rx2 has no stopping rule; fixed deficit/(1-delta2) + slack(m)",
            ),
        ),
    )


@dataclass
class CaseBCodebook:
    a_index: np.ndarray
    g_arq: np.ndarray
    g_tail: np.ndarray


class CaseBEncoder:
    """Sees the messages, Rx2's cache mask and Rx1's past states."""

    def __init__(
        self, cfg: ProtocolConfig, msgs: Messages, e2: BitVector, rng: np.random.Generator
    ):
        if len(e2) != cfg.m1:
            raise ConfigurationError("Rx2 cache mask must cover Rx1's message")
        self.cfg = cfg
        self.msgs = msgs
        self.rng = rng
        self.plan = plan_case_b(cfg, e2.count())

    def run(self, medium: BroadcastMedium) -> CaseBCodebook:
        m1, m2 = self.cfg.m1, self.cfg.m2
        a_bits = self.msgs.a.to_bits()
        b_words = self.msgs.b.words
        a_index, g_rows = [], []

        medium.begin_phase("ARQ")
        j = 0
        while j < m1:
            g = random_words(1, m2, self.rng)[0]
            interference = int(word_parity(np.bitwise_xor.reduce(g & b_words))) if m2 else 0
            medium.send(int(a_bits[j]) ^ interference)
            a_index.append(j)
            g_rows.append(g)
            if medium.feedback().last(1):
                j += 1

        g_tail = random_words(self.plan.phases[1].nominal, m2, self.rng)
        medium.begin_phase("tail")
        medium.send_block(encode_rows(g_tail, b_words))
        medium.end_phase()

        g_arq = np.vstack(g_rows) if g_rows else np.zeros((0, g_tail.shape[1]), dtype=np.uint64)
        return CaseBCodebook(np.asarray(a_index, dtype=np.int64), g_arq, g_tail)


def arq_stats(transcript: Transcript, a_index: np.ndarray, m1: int) -> ArqRepeatStats:
    """L_j and K_j of every a-bit from the ARQ slots of a transcript."""
    span = transcript.span("ARQ")
    s2 = transcript.s2[span.start : span.stop].astype(np.int64)
    repeats = np.bincount(a_index, minlength=m1)
    receptions = np.bincount(a_index, weights=s2, minlength=m1).astype(np.int64)
    return ArqRepeatStats(repeats, receptions)


def pure_rows_from_arq(
    rows: np.ndarray, y: np.ndarray, a_index: np.ndarray, cached: np.ndarray, a_cache: np.ndarray
):
    """Pure b-equations from receptions that carry a_j XOR g.b.

    Cached a_j are stripped directly; uncached ones are cancelled by XORing
    consecutive receptions of the same a_j. Slots must be in time order.
    """
    cached = np.asarray(cached, dtype=bool)
    hit = np.flatnonzero(y != ERASED)
    j = a_index[hit]
    direct = hit[cached[j]]
    rows_direct = rows[direct]
    rhs_direct = y[direct].astype(np.uint8) ^ a_cache[a_index[direct]]

    aligned = hit[~cached[j]]
    same = np.flatnonzero(a_index[aligned][1:] == a_index[aligned][:-1])
    first, second = aligned[same], aligned[same + 1]
    rows_pair = rows[first] ^ rows[second]
    rhs_pair = y[first].astype(np.uint8) ^ y[second].astype(np.uint8)
    return (
        np.vstack([rows_direct, rows_pair]),
        np.concatenate([rhs_direct, rhs_pair]),
        int(direct.size),
        int(first.size),
    )


def run_dn_semiblind_case_b(
    cfg: ProtocolConfig,
    msgs: Messages,
    cache: CacheAssignment,
    trace: StateTrace,
    rng: np.random.Generator,
    keep_transcript: bool = False,
) -> ProtocolResult:
    encoder = CaseBEncoder(cfg, msgs, cache.e2, rng)
    medium = BroadcastMedium(SCENARIO, trace)
    book = encoder.run(medium)
    transcript = medium.transcript()
    arq = transcript.span("ARQ")
    tail = transcript.span("tail")
    ledger = EquationLedger()

    # Rx1: every b-bit is cached, so each received slot is a clean a_j.
    b_cache = msgs.b.to_bits() & cache.e1.to_bits()
    y1 = transcript.y1[arq.start : arq.stop]
    got1 = np.flatnonzero(y1 != ERASED)
    ledger.record(1, "ARQ", got1.size)
    decoded1 = None
    if cache.e1.count() == cfg.m2:
        a_hat = np.zeros(cfg.m1, dtype=np.uint8)
        seen = np.zeros(cfg.m1, dtype=bool)
        strip = row_parity(book.g_arq[got1] & pack_bits(b_cache))
        a_hat[book.a_index[got1]] = y1[got1].astype(np.uint8) ^ strip
        seen[book.a_index[got1]] = True
        if seen.all():
            decoded1 = BitVector.from_bits(a_hat)

    # Rx2: pure equations from the ARQ slots, then the tail.
    cached = cache.e2.to_bits()
    a_cache = msgs.a.to_bits() & cached
    rows, rhs, n_direct, n_pairs = pure_rows_from_arq(
        book.g_arq, transcript.y2[arq.start : arq.stop], book.a_index, cached, a_cache
    )
    y2_tail = transcript.y2[tail.start : tail.stop]
    got_tail = np.flatnonzero(y2_tail != ERASED)
    rows = np.vstack([rows, book.g_tail[got_tail]])
    rhs = np.concatenate([rhs, y2_tail[got_tail].astype(np.uint8)])
    ledger.record(2, "ARQ", n_direct + n_pairs)
    ledger.record(2, "tail", got_tail.size)
    solved = solve_subset(rows, rhs, cfg.m2, np.arange(cfg.m2))
    decoded2 = None if solved is None else BitVector.from_bits(solved)

    stats = arq_stats(transcript, book.a_index, cfg.m1)
    return ProtocolResult(
        decoded1=decoded1,
        decoded2=decoded2,
        slots_used=medium.slots_used,
        phase_lengths=medium.phase_lengths(),
        plan=encoder.plan,
        diagnostics={
            "equations": ledger.to_dict(),
            "rx2_direct": n_direct,
            "rx2_aligned": n_pairs,
            "failure": failure_reason(decoded1, decoded2),
        },
        arq=stats,
        transcript=transcript if keep_transcript else None,
    )

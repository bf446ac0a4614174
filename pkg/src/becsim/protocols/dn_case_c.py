"""
Four-phase scheme with feedback from Rx1 only and a non-blind transmitter.

  I    uncached a-bits (not held by Rx2), uncoded, once each. Those Rx1 misses are recycled.
  II   fixed-length fountain over the b-bits Rx1 does not cache. The combinations Rx1
       receives become virtual bits v.
  III  ARQ towards Rx1 over the a-bits Rx2 caches, each slot XORed with a random
       combination of z = (v, b-bits cached at Rx1).
  IV   the same ARQ over the recycled bits.
  tail pure combinations of z sized from the expected shortfall at Rx2 plus slack.

Rx1 knows all of z and reads every a-bit off. Rx2 solves z from standard-basis rows
(v it overheard), Phase III/IV rows and the tail, then recovers its uncached b-bits
from the Phase-II combinations.
"""

import logging
from dataclasses import dataclass
from typing import List

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
from .dn_case_b import expected_k, expected_k_minus_one_plus, pure_rows_from_arq

logger = logging.getLogger(__name__)

SCENARIO = CsitScenario.dn(1)
PHASES = ("I", "II", "III", "IV", "tail")


def decodability_margin(cfg: ProtocolConfig) -> float:
    """Expected equations Rx2 collects on z minus the unknowns in z, at nominal lengths.

    Negative means the message sizes overload Rx2.
    """
    p = cfg.params
    d1, d2 = p.delta1, p.delta2
    t1 = p.eps2 * cfg.m1
    t2 = p.eps1 * cfg.m2 / (1.0 - d1 * d2)
    unknowns = t2 * (1.0 - d1) + (1.0 - p.eps1) * cfg.m2
    collected = (
        t2 * (1.0 - d1) * (1.0 - d2)
        + (1.0 - p.eps2) * cfg.m1 * (1.0 - d2) / (1.0 - d1)
        + t1 * d1 * (1.0 - d2) * (1.0 / (1.0 - d1) - d2 / (1.0 - d1 * d2))
    )
    return collected - unknowns


def check_decodable(cfg: ProtocolConfig) -> None:
    margin = decodability_margin(cfg)
    if margin < -1e-9 * max(1.0, cfg.m1 + cfg.m2):
        raise ConfigurationError(
            f"Case C: Rx2 falls {-margin:.3f} equations short for m1={cfg.m1}, m2={cfg.m2}; "
            "shrink m2"
        )


def plan_case_c(cfg: ProtocolConfig, cache: CacheAssignment) -> PhasePlan:
    p = cfg.params
    if cache.m1 != cfg.m1 or cache.m2 != cfg.m2:
        raise ConfigurationError("cache masks must match the message lengths")
    require_reachable(p.delta1, "ARQ towards Rx1")
    if cfg.m2:
        require_reachable(p.delta2, "delivery to Rx2")
        check_decodable(cfg)
    n_uncached_a = cfg.m1 - cache.e2.count()
    n_uncached_b = cfg.m2 - cache.e1.count()
    return PhasePlan(
        SCENARIO,
        (
            PhaseSpec("I", n_uncached_a, "fixed: each a-bit Rx2 lacks, once"),
            PhaseSpec(
                "II",
                cfg.fountain_length(n_uncached_b, p.delta1 * p.delta2),
                "fixed: b-bits Rx1 lacks/(1-delta1*delta2) + slack(m)",
            ),
            PhaseSpec("III", FEEDBACK_TERMINATED, "ARQ to Rx1 over a-bits Rx2 caches"),
            PhaseSpec("IV", FEEDBACK_TERMINATED, "ARQ to Rx1 over Phase-I bits Rx1 missed"),
            PhaseSpec(
                "tail",
                FEEDBACK_TERMINATED,
                "added tail: Rx2 has no stopping rule; sized after Phase IV from fed-back counts"
                " as deficit/(1-delta2) + slack(m)",
            ),
        ),
    )


@dataclass
class CaseCCodebook:
    """Slot headers and the index sets both receivers learn from them."""

    abar_idx: np.ndarray
    recycled: np.ndarray
    f_2: np.ndarray
    v_slots: np.ndarray
    a_index: np.ndarray
    g_arq: np.ndarray
    n_iii: int
    g_tail: np.ndarray
    a2_idx: np.ndarray
    b1_idx: np.ndarray
    bbar_idx: np.ndarray

    @property
    def n_z(self) -> int:
        return int(self.v_slots.size + self.b1_idx.size)


class CaseCEncoder:
    """Sees the messages, both cache masks and Rx1's past states."""

    def __init__(
        self, cfg: ProtocolConfig, msgs: Messages, cache: CacheAssignment, rng: np.random.Generator
    ):
        self.plan = plan_case_c(cfg, cache)
        self.cfg = cfg
        self.msgs = msgs
        self.rng = rng
        e1 = cache.e1.to_bits().astype(bool)
        e2 = cache.e2.to_bits().astype(bool)
        self.a2_idx = np.flatnonzero(e2)
        self.abar_idx = np.flatnonzero(~e2)
        self.b1_idx = np.flatnonzero(e1)
        self.bbar_idx = np.flatnonzero(~e1)

    def tail_length(self, n_v: int, n_recycled: int) -> int:
        p = self.cfg.params
        n_z = n_v + self.b1_idx.size
        if n_z == 0:
            return 0
        k = expected_k(p.delta1, p.delta2)
        k_aligned = expected_k_minus_one_plus(p.delta1, p.delta2)
        expected = (
            n_v * (1.0 - p.delta2)
            + self.a2_idx.size * k
            + n_recycled * ((1.0 - p.delta2) * k + p.delta2 * k_aligned)
        )
        return ceil_count(max(0.0, n_z - expected) / (1.0 - p.delta2)) + self.cfg.slack_slots

    def _arq(self, medium, phase, indices, a_bits, z_words, n_z, a_index, g_rows) -> None:
        medium.begin_phase(phase)
        for j in indices:
            while True:
                g = random_words(1, n_z, self.rng)[0]
                medium.send(int(a_bits[j]) ^ int(word_parity(np.bitwise_xor.reduce(g & z_words))))
                a_index.append(j)
                g_rows.append(g)
                if medium.feedback().last(1):
                    break

    def run(self, medium: BroadcastMedium) -> CaseCCodebook:
        a_bits = self.msgs.a.to_bits()
        b_bits = self.msgs.b.to_bits()

        medium.begin_phase("I")
        medium.send_block(a_bits[self.abar_idx])
        seen1 = medium.feedback().visible_s1
        recycled = self.abar_idx[seen1[: self.abar_idx.size] == 0]

        bbar_words = pack_bits(b_bits[self.bbar_idx])
        f_2 = random_words(self.plan.phases[1].nominal, self.bbar_idx.size, self.rng)
        start = medium.slots_used
        medium.begin_phase("II")
        medium.send_block(encode_rows(f_2, bbar_words))
        seen1 = medium.feedback().visible_s1
        v_slots = np.flatnonzero(seen1[start : start + f_2.shape[0]])

        z_bits = np.concatenate([encode_rows(f_2[v_slots], bbar_words), b_bits[self.b1_idx]])
        n_z = int(z_bits.size)
        z_words = pack_bits(z_bits)
        a_index: List[int] = []
        g_rows: List[np.ndarray] = []
        self._arq(medium, "III", self.a2_idx, a_bits, z_words, n_z, a_index, g_rows)
        n_iii = len(a_index)
        self._arq(medium, "IV", recycled, a_bits, z_words, n_z, a_index, g_rows)

        g_tail = random_words(self.tail_length(v_slots.size, recycled.size), n_z, self.rng)
        medium.begin_phase("tail")
        medium.send_block(encode_rows(g_tail, z_words))
        medium.end_phase()
        logger.debug(
            "case-c: %d recycled, %d virtual bits, %d tail slots",
            recycled.size,
            v_slots.size,
            g_tail.shape[0],
        )

        g_arq = np.vstack(g_rows) if g_rows else np.zeros((0, g_tail.shape[1]), dtype=np.uint64)
        return CaseCCodebook(
            abar_idx=self.abar_idx,
            recycled=recycled,
            f_2=f_2,
            v_slots=v_slots,
            a_index=np.asarray(a_index, dtype=np.int64),
            g_arq=g_arq,
            n_iii=n_iii,
            g_tail=g_tail,
            a2_idx=self.a2_idx,
            b1_idx=self.b1_idx,
            bbar_idx=self.bbar_idx,
        )


def _phase(transcript: Transcript, receiver: int, name: str) -> np.ndarray:
    span = transcript.span(name)
    return transcript.receptions(receiver)[span.start : span.stop]


def decode_rx1(transcript, book: CaseCCodebook, cfg, b_cache: np.ndarray, ledger: EquationLedger):
    """z from its own Phase-II receptions and cache, then every a-bit by stripping z."""
    y_i = _phase(transcript, 1, "I")
    y_ii = _phase(transcript, 1, "II")
    span_iii, span_iv = transcript.span("III"), transcript.span("IV")
    y_arq = transcript.y1[span_iii.start : span_iv.stop]
    got_i = np.flatnonzero(y_i != ERASED)
    got_ii = np.flatnonzero(y_ii != ERASED)
    got_arq = np.flatnonzero(y_arq != ERASED)
    ledger.record(1, "I", got_i.size)
    ledger.record(1, "II", got_ii.size)
    ledger.record(1, "III", np.count_nonzero(got_arq < book.n_iii))
    ledger.record(1, "IV", np.count_nonzero(got_arq >= book.n_iii))

    z_words = pack_bits(np.concatenate([y_ii[got_ii].astype(np.uint8), b_cache[book.b1_idx]]))
    a_hat = np.zeros(cfg.m1, dtype=np.uint8)
    seen = np.zeros(cfg.m1, dtype=bool)
    a_hat[book.abar_idx[got_i]] = y_i[got_i].astype(np.uint8)
    seen[book.abar_idx[got_i]] = True
    j = book.a_index[got_arq]
    a_hat[j] = y_arq[got_arq].astype(np.uint8) ^ row_parity(book.g_arq[got_arq] & z_words)
    seen[j] = True
    return BitVector.from_bits(a_hat) if seen.all() else None


def decode_rx2(transcript, book: CaseCCodebook, cfg, e2: np.ndarray, a_cache: np.ndarray, ledger):
    """Solve z, then the b-bits Rx1 lacks from Phase II, then merge the rest of z."""
    n_v, n_z = book.v_slots.size, book.n_z

    y_i = _phase(transcript, 2, "I")
    heard = np.zeros(cfg.m1, dtype=bool)
    heard_vals = np.zeros(cfg.m1, dtype=np.uint8)
    got_i = np.flatnonzero(y_i != ERASED)
    heard[book.abar_idx[got_i]] = True
    heard_vals[book.abar_idx[got_i]] = y_i[got_i].astype(np.uint8)

    y_ii = _phase(transcript, 2, "II")
    both = np.flatnonzero(y_ii[book.v_slots] != ERASED)
    unit = np.zeros((both.size, n_z), dtype=np.uint8)
    unit[np.arange(both.size), both] = 1

    known = e2.astype(bool) | heard
    known_vals = (a_cache & e2) | heard_vals
    span_iii, span_iv = transcript.span("III"), transcript.span("IV")
    arq_rows, arq_rhs, n_direct, n_pairs = pure_rows_from_arq(
        book.g_arq, transcript.y2[span_iii.start : span_iv.stop], book.a_index, known, known_vals
    )
    y_tail = _phase(transcript, 2, "tail")
    got_tail = np.flatnonzero(y_tail != ERASED)

    got_ii = np.flatnonzero(y_ii != ERASED)
    ledger.record(2, "I", got_i.size)
    ledger.record(2, "II", got_ii.size)
    ledger.record(2, "III+IV", n_direct + n_pairs)
    ledger.record(2, "tail", got_tail.size)

    rows = np.vstack([pack_bits(unit), arq_rows, book.g_tail[got_tail]])
    rhs = np.concatenate(
        [y_ii[book.v_slots[both]].astype(np.uint8), arq_rhs, y_tail[got_tail].astype(np.uint8)]
    )
    z_hat = solve_subset(rows, rhs, n_z, np.arange(n_z))
    if z_hat is None:
        return None

    rhs_ii = np.zeros(y_ii.shape[0], dtype=np.uint8)
    rhs_ii[book.v_slots] = z_hat[:n_v]
    rhs_ii[got_ii] = y_ii[got_ii].astype(np.uint8)
    usable = np.union1d(book.v_slots, got_ii)
    n_bbar = book.bbar_idx.size
    bbar = solve_subset(book.f_2[usable], rhs_ii[usable], n_bbar, np.arange(n_bbar))
    if bbar is None:
        return None
    b_hat = np.zeros(cfg.m2, dtype=np.uint8)
    b_hat[book.bbar_idx] = bbar
    b_hat[book.b1_idx] = z_hat[n_v:]
    return BitVector.from_bits(b_hat)


def phase_three_stats(book: CaseCCodebook, transcript: Transcript, m1: int) -> ArqRepeatStats:
    """L_j and K_j over the bits Phase III delivers."""
    span = transcript.span("III")
    a_index = book.a_index[: book.n_iii]
    s2 = transcript.s2[span.start : span.stop].astype(np.int64)
    repeats = np.bincount(a_index, minlength=m1)[book.a2_idx]
    receptions = np.bincount(a_index, weights=s2, minlength=m1).astype(np.int64)[book.a2_idx]
    return ArqRepeatStats(repeats, receptions)


def run_dn_nonblind_case_c(
    cfg: ProtocolConfig,
    msgs: Messages,
    cache: CacheAssignment,
    trace: StateTrace,
    rng: np.random.Generator,
    keep_transcript: bool = False,
) -> ProtocolResult:
    encoder = CaseCEncoder(cfg, msgs, cache, rng)
    medium = BroadcastMedium(SCENARIO, trace)
    book = encoder.run(medium)
    transcript = medium.transcript()

    ledger = EquationLedger()
    e2 = cache.e2.to_bits()
    b_cache = msgs.b.to_bits() & cache.e1.to_bits()
    a_cache = msgs.a.to_bits() & e2
    decoded1 = decode_rx1(transcript, book, cfg, b_cache, ledger)
    decoded2 = decode_rx2(transcript, book, cfg, e2, a_cache, ledger)
    return ProtocolResult(
        decoded1=decoded1,
        decoded2=decoded2,
        slots_used=medium.slots_used,
        phase_lengths=medium.phase_lengths(),
        plan=encoder.plan,
        diagnostics={
            "equations": ledger.to_dict(),
            "recycled": int(book.recycled.size),
            "virtual_bits": int(book.v_slots.size),
            "failure": failure_reason(decoded1, decoded2),
        },
        arq=phase_three_stats(book, transcript, cfg.m1),
        transcript=transcript if keep_transcript else None,
    )

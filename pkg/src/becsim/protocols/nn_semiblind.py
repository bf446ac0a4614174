"""
Two-phase scheme without CSIT where the transmitter knows only Rx2's cache mask.

Phase I, segment a: random combinations of b (resolves Rx1's uncached b-bits).
Phase I, segment b: combinations of the a-bits Rx2 caches XOR fresh combinations of b.
Phase II: combinations of the a-bits Rx2 does not cache.

Rx2 strips its cached a-bits and sees a single-user fountain of b through all of
Phase I. Rx1 decodes b first, strips it from segment b, then reads Phase II; when
segment a alone falls short it solves b and the cached a-bits jointly over all of
Phase I.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..channel import ERASED, BroadcastMedium, CacheAssignment, CsitScenario, StateTrace, Transcript
from ..errors import ConfigurationError
from ..gf2 import BitVector, n_words, pack_bits, random_words, row_parity
from .base import (
    EquationLedger,
    JointSpace,
    Messages,
    PhasePlan,
    PhaseSpec,
    ProtocolConfig,
    ProtocolResult,
    decode_with_cache,
    encode_rows,
    failure_reason,
    joint_decode,
    solve_subset,
)

logger = logging.getLogger(__name__)

SCENARIO = CsitScenario.nn()


def plan_nn_semiblind(cfg: ProtocolConfig, n_cached: int) -> PhasePlan:
    """Phase lengths given how many of Rx1's bits Rx2 caches."""
    p = cfg.params
    if p.delta2 < p.delta1:
        raise ConfigurationError(
            "semi-blind scheme serves the weaker receiver as Rx2; "
            f"need delta2 >= delta1, got {p.as_dict()}"
        )
    n_uncached = cfg.m1 - n_cached
    t_a = cfg.fountain_length(p.eps1 * cfg.m2, p.delta1)
    phase_one = max(
        cfg.fountain_length(cfg.m2, p.delta2),
        t_a + cfg.fountain_length(n_cached, p.delta1),
    )
    t2 = cfg.fountain_length(n_uncached, p.delta1)
    return PhasePlan(
        SCENARIO,
        (
            PhaseSpec("I-a", t_a, "fixed: eps1*m2/(1-delta1) + slack(m)"),
            PhaseSpec("I-b", phase_one - t_a, "fixed: Phase I totals m2/(1-delta2) + slack(m)"),
            PhaseSpec("II", t2, "fixed: uncached a-bits/(1-delta1) + slack(m)"),
        ),
    )


@dataclass
class SemiBlindCodebook:
    """Coefficient headers of every slot, as the receivers read them."""

    cached_idx: np.ndarray
    uncached_idx: np.ndarray
    g_a: np.ndarray
    h_b: np.ndarray
    g_b: np.ndarray
    f_2: np.ndarray


class SemiBlindNNEncoder:
    """Sees the messages and Rx2's cache mask; no states, no Rx1 mask."""

    def __init__(
        self, cfg: ProtocolConfig, msgs: Messages, e2: BitVector, rng: np.random.Generator
    ):
        if len(e2) != cfg.m1:
            raise ConfigurationError("Rx2 cache mask must cover Rx1's message")
        self.cfg = cfg
        self.msgs = msgs
        self.rng = rng
        cached = e2.to_bits().astype(bool)
        self.cached_idx = np.flatnonzero(cached)
        self.uncached_idx = np.flatnonzero(~cached)
        self.plan = plan_nn_semiblind(cfg, self.cached_idx.size)

    def run(self, medium: BroadcastMedium) -> SemiBlindCodebook:
        lengths = [phase.nominal for phase in self.plan.phases]
        a_bits = self.msgs.a.to_bits()
        b_words = self.msgs.b.words
        a_cached = pack_bits(a_bits[self.cached_idx])
        a_uncached = pack_bits(a_bits[self.uncached_idx])

        g_a = random_words(lengths[0], self.cfg.m2, self.rng)
        medium.begin_phase("I-a")
        medium.send_block(encode_rows(g_a, b_words))

        h_b = random_words(lengths[1], self.cached_idx.size, self.rng)
        g_b = random_words(lengths[1], self.cfg.m2, self.rng)
        medium.begin_phase("I-b")
        medium.send_block(encode_rows(h_b, a_cached) ^ encode_rows(g_b, b_words))

        f_2 = random_words(lengths[2], self.uncached_idx.size, self.rng)
        medium.begin_phase("II")
        medium.send_block(encode_rows(f_2, a_uncached))
        medium.end_phase()
        return SemiBlindCodebook(self.cached_idx, self.uncached_idx, g_a, h_b, g_b, f_2)


def received_in(transcript: Transcript, receiver: int, phase: str):
    span = transcript.span(phase)
    y = transcript.receptions(receiver)[span.start : span.stop]
    hit = np.flatnonzero(y != ERASED)
    return hit, y[hit].astype(np.uint8)


def decode_rx1_pooled(
    book: SemiBlindCodebook,
    cfg: ProtocolConfig,
    hit_a: np.ndarray,
    y_a: np.ndarray,
    hit_b: np.ndarray,
    y_b: np.ndarray,
    e1: BitVector,
    b_cache: np.ndarray,
) -> Optional[np.ndarray]:
    """Cached a-bits from one joint solve over (cached a || b) using all of Phase I."""
    k = book.cached_idx.size
    space = JointSpace(k, cfg.m2)
    no_a = np.zeros((hit_a.size, n_words(k)), dtype=np.uint64)
    rows = np.vstack(
        [space.join(no_a, book.g_a[hit_a]), space.join(book.h_b[hit_b], book.g_b[hit_b])]
    )
    rhs = np.concatenate([y_a, y_b])
    mask = space.mask(space.b_cols(np.flatnonzero(e1.to_bits())))
    values = pack_bits(np.concatenate([np.zeros(k, dtype=np.uint8), b_cache])) & mask
    solved = joint_decode(space, rows, rhs, mask, values, space.a_cols())
    return None if solved is None else solved.to_bits()


def decode_rx1(
    transcript: Transcript,
    book: SemiBlindCodebook,
    cfg: ProtocolConfig,
    e1: BitVector,
    b_cache: np.ndarray,
    ledger: EquationLedger,
):
    """b from segment a and the cache, then the cached a-bits, then the rest."""
    hit_a, y_a = received_in(transcript, 1, "I-a")
    hit_b, y_b = received_in(transcript, 1, "I-b")
    hit_2, y_2 = received_in(transcript, 1, "II")
    ledger.record(1, "I-a", hit_a.size)
    ledger.record(1, "I-b", hit_b.size)
    ledger.record(1, "II", hit_2.size)

    k, k_bar = book.cached_idx.size, book.uncached_idx.size
    cached_part = None
    b_hat = decode_with_cache(book.g_a[hit_a], y_a, cfg.m2, e1.to_bits(), b_cache)
    if b_hat is not None:
        rhs_b = y_b ^ row_parity(book.g_b[hit_b] & pack_bits(b_hat))
        cached_part = solve_subset(book.h_b[hit_b], rhs_b, k, np.arange(k))
    if cached_part is None:
        logger.debug("nn-semiblind: Rx1 pools both segments of Phase I")
        cached_part = decode_rx1_pooled(book, cfg, hit_a, y_a, hit_b, y_b, e1, b_cache)
    uncached_part = solve_subset(book.f_2[hit_2], y_2, k_bar, np.arange(k_bar))
    if cached_part is None or uncached_part is None:
        return None
    a_hat = np.zeros(cfg.m1, dtype=np.uint8)
    a_hat[book.cached_idx] = cached_part
    a_hat[book.uncached_idx] = uncached_part
    return BitVector.from_bits(a_hat)


def decode_rx2(
    transcript: Transcript,
    book: SemiBlindCodebook,
    cfg: ProtocolConfig,
    a_cache: np.ndarray,
    ledger: EquationLedger,
):
    """Strip the cached a-bits from segment b and solve one fountain of b."""
    hit_a, y_a = received_in(transcript, 2, "I-a")
    hit_b, y_b = received_in(transcript, 2, "I-b")
    ledger.record(2, "I-a", hit_a.size)
    ledger.record(2, "I-b", hit_b.size)
    ledger.record(2, "II", 0)
    known = pack_bits(a_cache[book.cached_idx])
    rows = np.vstack([book.g_a[hit_a], book.g_b[hit_b]])
    rhs = np.concatenate([y_a, y_b ^ row_parity(book.h_b[hit_b] & known)])
    solved = solve_subset(rows, rhs, cfg.m2, np.arange(cfg.m2))
    return None if solved is None else BitVector.from_bits(solved)


def run_nn_semiblind(
    cfg: ProtocolConfig,
    msgs: Messages,
    cache: CacheAssignment,
    trace: StateTrace,
    rng: np.random.Generator,
    keep_transcript: bool = False,
) -> ProtocolResult:
    encoder = SemiBlindNNEncoder(cfg, msgs, cache.e2, rng)
    logger.debug("nn-semiblind plan: %s", [(p.name, p.nominal) for p in encoder.plan.phases])
    medium = BroadcastMedium(SCENARIO, trace)
    book = encoder.run(medium)
    transcript = medium.transcript()

    ledger = EquationLedger()
    # Each receiver reads its own cache content, nothing else.
    b_cache = msgs.b.to_bits() & cache.e1.to_bits()
    a_cache = msgs.a.to_bits() & cache.e2.to_bits()
    decoded1 = decode_rx1(transcript, book, cfg, cache.e1, b_cache, ledger)
    decoded2 = decode_rx2(transcript, book, cfg, a_cache, ledger)
    return ProtocolResult(
        decoded1=decoded1,
        decoded2=decoded2,
        slots_used=medium.slots_used,
        phase_lengths=medium.phase_lengths(),
        plan=encoder.plan,
        diagnostics={"equations": ledger.to_dict(), "failure": failure_reason(decoded1, decoded2)},
        transcript=transcript if keep_transcript else None,
    )

"""
Blind schemes without CSIT: the transmitter knows eps but neither cache mask.

- run_nn_blind_symmetric: one fountain over the concatenated (a || b); each receiver
  strips what it caches and solves the joint system.
- run_nn_full_side_info: eps = 0, XOR of one fountain per message; each receiver
  strips the other message completely.
- run_nn_blind_inner: eps1 = 0. Phase 1 pairs every a-bit with a fresh combination
  of b, Phase 2 is a fountain over a covering what Rx1 missed in Phase 1.
"""

import logging

import numpy as np

from ..channel import ERASED, BroadcastMedium, CacheAssignment, CsitScenario, StateTrace
from ..errors import ConfigurationError
from ..gf2 import BitVector, pack_bits, random_words, row_parity
from .base import (
    EquationLedger,
    JointSpace,
    Messages,
    PhasePlan,
    PhaseSpec,
    ProtocolConfig,
    ProtocolResult,
    ceil_count,
    decode_with_cache,
    encode_rows,
    failure_reason,
    joint_decode,
    require_reachable,
    solve_subset,
)
from .dn_case_b import pure_rows_from_arq

logger = logging.getLogger(__name__)

SCENARIO = CsitScenario.nn()


def plan_nn_blind_symmetric(cfg: ProtocolConfig) -> PhasePlan:
    p = cfg.params
    if not p.is_symmetric or cfg.m1 != cfg.m2:
        raise ConfigurationError(
            f"symmetric blind scheme needs equal deltas, eps and message sizes, got {p.as_dict()}, "
            f"m1={cfg.m1}, m2={cfg.m2}"
        )
    if p.eps1 == 0:
        raise ConfigurationError("eps = 0 is the full side-information case; use nn_full_side_info")
    target = (1.0 + p.eps1) * cfg.m1
    return PhasePlan(
        SCENARIO,
        (
            PhaseSpec(
                "joint",
                cfg.fountain_length(target, p.delta1),
                "fixed: (1+eps)m/(1-delta) + slack(m)",
            ),
        ),
    )


def plan_nn_full_side_info(cfg: ProtocolConfig) -> PhasePlan:
    p = cfg.params
    if p.eps1 != 0 or p.eps2 != 0:
        raise ConfigurationError(f"full side-information needs eps1 = eps2 = 0, got {p.as_dict()}")
    length = max(cfg.fountain_length(cfg.m1, p.delta1), cfg.fountain_length(cfg.m2, p.delta2))
    return PhasePlan(
        SCENARIO, (PhaseSpec("joint", length, "fixed: max_i m_i/(1-delta_i) + slack(m)"),)
    )


def _run_joint_fountain(
    cfg: ProtocolConfig,
    plan: PhasePlan,
    msgs: Messages,
    cache: CacheAssignment,
    trace: StateTrace,
    rng: np.random.Generator,
    keep_transcript: bool,
) -> ProtocolResult:
    space = JointSpace(cfg.m1, cfg.m2)
    rows = random_words(plan.phases[0].nominal, space.nbits, rng)
    medium = BroadcastMedium(SCENARIO, trace)
    medium.begin_phase("joint")
    medium.send_block(encode_rows(rows, space.pack(msgs)))
    transcript = medium.transcript()

    ledger = EquationLedger()
    decoded = {}
    for receiver, own_cache, wanted in (
        (1, cache.e1, space.a_cols()),
        (2, cache.e2, space.b_cols()),
    ):
        y = transcript.receptions(receiver)
        hit = np.flatnonzero(y != ERASED)
        ledger.record(receiver, "joint", hit.size)
        mask, values = space.known_at(receiver, msgs, own_cache)
        decoded[receiver] = joint_decode(
            space, rows[hit], y[hit].astype(np.uint8), mask, values, wanted
        )

    return ProtocolResult(
        decoded1=decoded[1],
        decoded2=decoded[2],
        slots_used=medium.slots_used,
        phase_lengths=medium.phase_lengths(),
        plan=plan,
        diagnostics={
            "equations": ledger.to_dict(),
            "failure": failure_reason(decoded[1], decoded[2]),
        },
        transcript=transcript if keep_transcript else None,
    )


def run_nn_full_side_info(
    cfg: ProtocolConfig,
    msgs: Messages,
    cache: CacheAssignment,
    trace: StateTrace,
    rng: np.random.Generator,
    keep_transcript: bool = False,
) -> ProtocolResult:
    plan = plan_nn_full_side_info(cfg)
    return _run_joint_fountain(cfg, plan, msgs, cache, trace, rng, keep_transcript)


def run_nn_blind_symmetric(
    cfg: ProtocolConfig,
    msgs: Messages,
    cache: CacheAssignment,
    trace: StateTrace,
    rng: np.random.Generator,
    keep_transcript: bool = False,
) -> ProtocolResult:
    """Joint fountain of (1+eps)m equations; eps = 0 switches to separate fountains."""
    if cfg.params.is_symmetric and cfg.params.eps1 == 0:
        logger.info("eps = 0: switching to the full side-information scheme")
        return run_nn_full_side_info(cfg, msgs, cache, trace, rng, keep_transcript)
    plan = plan_nn_blind_symmetric(cfg)
    return _run_joint_fountain(cfg, plan, msgs, cache, trace, rng, keep_transcript)


def check_inner_regime(cfg: ProtocolConfig) -> None:
    p = cfg.params
    if p.delta2 < p.delta1 or p.eps1 != 0:
        raise ConfigurationError(
            f"blind inner scheme needs delta2 >= delta1 and eps1 = 0, got {p.as_dict()}"
        )
    require_reachable(p.delta1, "blind inner scheme")
    if cfg.m1 == 0:
        raise ConfigurationError("blind inner scheme needs m1 >= 1")
    if cfg.m2 and (1.0 - p.eps2) * (1.0 - p.delta2) == 0:
        raise ConfigurationError("Rx2 caches nothing or never receives; size m2 = 0")


def plan_nn_blind_inner(cfg: ProtocolConfig) -> PhasePlan:
    check_inner_regime(cfg)
    p = cfg.params
    extra = 0
    if cfg.m2:
        # Rx2 keeps only a (1-eps2)(1-delta2) share of the wrapped slots.
        extra = ceil_count(cfg.slack_slots / ((1.0 - p.eps2) * (1.0 - p.delta2)))
    t1 = cfg.m1 + extra
    t2 = cfg.fountain_length(p.delta1 * cfg.m1, p.delta1)
    return PhasePlan(
        SCENARIO,
        (
            PhaseSpec(
                "1",
                t1,
                f"fixed: one slot per a-bit plus an added tail of {extra} wrapped slots, since"
                " Rx2 has no stopping rule; slack(m)/((1-eps2)(1-delta2))",
            ),
            PhaseSpec("2", t2, "fixed: delta1*m1/(1-delta1) + slack(m)"),
        ),
    )


def run_nn_blind_inner(
    cfg: ProtocolConfig,
    msgs: Messages,
    cache: CacheAssignment,
    trace: StateTrace,
    rng: np.random.Generator,
    keep_transcript: bool = False,
) -> ProtocolResult:
    plan = plan_nn_blind_inner(cfg)
    t1, t2 = (phase.nominal for phase in plan.phases)
    m1, m2 = cfg.m1, cfg.m2
    a_bits = msgs.a.to_bits()
    b_words = msgs.b.words

    a_index = np.arange(t1, dtype=np.int64) % m1
    g_1 = random_words(t1, m2, rng)
    f_2 = random_words(t2, m1, rng)
    medium = BroadcastMedium(SCENARIO, trace)
    medium.begin_phase("1")
    medium.send_block(a_bits[a_index] ^ encode_rows(g_1, b_words))
    medium.begin_phase("2")
    medium.send_block(encode_rows(f_2, msgs.a.words))
    transcript = medium.transcript()
    one, two = transcript.span("1"), transcript.span("2")
    ledger = EquationLedger()

    # Rx1 caches all of b: Phase 1 hands it uncoded a-bits, Phase 2 the rest.
    b_cache = msgs.b.to_bits() & cache.e1.to_bits()
    y1_one = transcript.y1[one.start : one.stop]
    y1_two = transcript.y1[two.start : two.stop]
    got1 = np.flatnonzero(y1_one != ERASED)
    got2 = np.flatnonzero(y1_two != ERASED)
    ledger.record(1, "1", got1.size)
    ledger.record(1, "2", got2.size)
    decoded1 = None
    if cache.e1.count() == m2:
        known = np.zeros(m1, dtype=np.uint8)
        values = np.zeros(m1, dtype=np.uint8)
        j = a_index[got1]
        known[j] = 1
        values[j] = y1_one[got1].astype(np.uint8) ^ row_parity(g_1[got1] & pack_bits(b_cache))
        a_hat = decode_with_cache(f_2[got2], y1_two[got2].astype(np.uint8), m1, known, values)
        decoded1 = None if a_hat is None else BitVector.from_bits(a_hat)

    # Rx2 reads only Phase 1: slots whose a-bit it caches, plus aligned repeats.
    cached = cache.e2.to_bits()
    a_cache = a_bits & cached
    rows, rhs, n_direct, n_pairs = pure_rows_from_arq(
        g_1, transcript.y2[one.start : one.stop], a_index, cached, a_cache
    )
    ledger.record(2, "1", n_direct + n_pairs)
    solved = solve_subset(rows, rhs, m2, np.arange(m2))
    decoded2 = None if solved is None else BitVector.from_bits(solved)

    return ProtocolResult(
        decoded1=decoded1,
        decoded2=decoded2,
        slots_used=medium.slots_used,
        phase_lengths=medium.phase_lengths(),
        plan=plan,
        diagnostics={
            "equations": ledger.to_dict(),
            "wrapped_slots": t1 - m1,
            "failure": failure_reason(decoded1, decoded2),
        },
        transcript=transcript if keep_transcript else None,
    )


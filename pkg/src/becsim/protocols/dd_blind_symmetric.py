"""
Four-phase opportunistic scheme for the symmetric channel with delayed CSIT from
both receivers and a blind transmitter (it knows eps, not the cache masks).

Phase I:   c_j = a_j XOR b_j, repeated until at least one receiver gets it.
           Rx1 receptions form b~ (b-bits Rx1 holds in a mixture), Rx2 receptions form a~.
Phase II:  combinations of b~ until Rx1 holds its quota.
Phase III: combinations of a~ until Rx2 holds its quota.
Phase IV:  eps <= delta: combinations of a~ XOR combinations of b~;
           eps >  delta: combinations of a~ only.

Phases II and III stop the slot their receiver holds exactly its quota. Goals that
depend only on what was overheard are tracked exactly through feedback: Phase IV
stops once both receivers hold full rank on the bits Phase I never gave them and
m + eps*|X| equations in total. The encoder cannot see how many bits of X a receiver
caches, so that total carries feedback_margin(eps*|X|), which grows like sqrt(m).
"""

import logging
from typing import Dict, List

import numpy as np

from ..channel import ERASED, BroadcastMedium, CacheAssignment, CsitScenario, StateTrace
from ..errors import ConfigurationError
from ..gf2 import Eliminator, random_words, set_bit, word_parity
from .base import (
    FEEDBACK_TERMINATED,
    EquationLedger,
    JointSpace,
    Messages,
    PhasePlan,
    PhaseSpec,
    ProtocolConfig,
    ProtocolResult,
    ceil_count,
    failure_reason,
    joint_decode,
    require_reachable,
)

logger = logging.getLogger(__name__)

SCENARIO = CsitScenario.dd()
PHASES = ("I", "II", "III", "IV")


def check_symmetric(cfg: ProtocolConfig) -> None:
    p = cfg.params
    if not p.is_symmetric:
        raise ConfigurationError(f"symmetric scheme needs equal deltas and eps, got {p.as_dict()}")
    if cfg.m1 != cfg.m2:
        raise ConfigurationError(f"symmetric scheme needs m1 = m2, got {cfg.m1}, {cfg.m2}")


def plan_dd_blind_symmetric(cfg: ProtocolConfig) -> PhasePlan:
    check_symmetric(cfg)
    delta, eps = cfg.params.delta1, cfg.params.eps1
    require_reachable(delta, "delayed-CSIT scheme")
    if eps <= delta:
        quota = "eps"
        last = "a~ XOR b~ combinations"
        second = "Rx1 holds eps*|b~| combinations"
    else:
        quota = "delta"
        last = "a~ combinations only"
        second = (
            "Rx1 holds max(delta*|b~|, eps*|only b~| + margin) combinations"
            " and Rx2 has full rank on only b~"
        )
    return PhasePlan(
        SCENARIO,
        (
            PhaseSpec("I", FEEDBACK_TERMINATED, "repeat c_j until either receiver gets it"),
            PhaseSpec("II", FEEDBACK_TERMINATED, second),
            PhaseSpec("III", FEEDBACK_TERMINATED, f"Rx2 holds {quota}*|a~| combinations"),
            PhaseSpec(
                "IV",
                FEEDBACK_TERMINATED,
                f"{last} until both have full rank and m + eps*|X| + margin equations",
            ),
        ),
    )


class BlindSymmetricDDEncoder:
    """Sees the messages, eps and both receivers' past states; no cache masks."""

    def __init__(self, cfg: ProtocolConfig, msgs: Messages, rng: np.random.Generator):
        self.plan = plan_dd_blind_symmetric(cfg)
        self.cfg = cfg
        self.m = cfg.m1
        self.delta = cfg.params.delta1
        self.eps = cfg.params.eps1
        self.rng = rng
        self.space = JointSpace(self.m, self.m)
        self.msg_words = self.space.pack(msgs)
        self.rows: List[np.ndarray] = []
        self.received: Dict[int, Dict[str, int]] = {1: {}, 2: {}}

    def _send(self, medium: BroadcastMedium, row: np.ndarray) -> None:
        self.rows.append(row)
        medium.send(int(word_parity(np.bitwise_xor.reduce(row & self.msg_words))))

    def _count(self, receiver: int, phase: str) -> int:
        return self.received[receiver].get(phase, 0)

    def run(self, medium: BroadcastMedium) -> Dict[str, int]:
        space, m = self.space, self.m
        tilde_a: List[int] = []
        tilde_b: List[int] = []

        medium.begin_phase("I")
        for j in range(m):
            row = np.zeros(space.words, dtype=np.uint64)
            set_bit(row, j)
            set_bit(row, m + j)
            while True:
                self._send(medium, row)
                view = medium.feedback()
                s1, s2 = view.last(1), view.last(2)
                if s1 or s2:
                    if s1:
                        tilde_b.append(j)
                    if s2:
                        tilde_a.append(j)
                    break
        self.received[1]["I"] = len(tilde_b)
        self.received[2]["I"] = len(tilde_a)

        only_a = sorted(set(tilde_a) - set(tilde_b))
        only_b = sorted(set(tilde_b) - set(tilde_a))
        support_a = space.mask(space.a_cols(tilde_a))
        support_b = space.mask(space.b_cols(tilde_b))
        # Bits each receiver can only learn from later phases.
        own1 = space.mask(space.a_cols(only_a))
        own2 = space.mask(space.b_cols(only_b))
        tracker1 = Eliminator(space.nbits)
        tracker2 = Eliminator(space.nbits)

        def account(row: np.ndarray, phase: str, view) -> None:
            if view.last(1):
                self.received[1][phase] = self._count(1, phase) + 1
                tracker1.add(row & own1)
            if view.last(2):
                self.received[2][phase] = self._count(2, phase) + 1
                tracker2.add(row & own2)

        def phase_loop(phase: str, support: np.ndarray, done) -> None:
            medium.begin_phase(phase)
            while not done():
                row = random_words(1, space.nbits, self.rng)[0] & support
                self._send(medium, row)
                account(row, phase, medium.feedback())

        frac = min(self.eps, self.delta)
        scenario_two = self.eps > self.delta
        q1 = ceil_count(frac * len(tilde_b))
        q2 = ceil_count(frac * len(tilde_a))
        if scenario_two:
            # Phase IV carries no b~, so Rx1's uncached share of only_b must arrive now.
            lacking1 = self.eps * len(only_b)
            q1 = max(q1, ceil_count(lacking1) + self.cfg.feedback_margin(lacking1))

        phase_loop(
            "II",
            support_b,
            lambda: self._count(1, "II") >= q1
            and (not scenario_two or tracker2.rank >= len(only_b)),
        )
        phase_loop("III", support_a, lambda: self._count(2, "III") >= q2)

        uncached1, uncached2 = self.eps * len(tilde_b), self.eps * len(tilde_a)
        need1 = m + ceil_count(uncached1) + self.cfg.feedback_margin(uncached1)
        need2 = m + ceil_count(uncached2) + self.cfg.feedback_margin(uncached2)

        def complete() -> bool:
            total1 = sum(self.received[1].values())
            total2 = sum(self.received[2].values())
            return (
                tracker1.rank >= len(only_a)
                and tracker2.rank >= len(only_b)
                and total1 >= need1
                and total2 >= need2
            )

        phase_loop("IV", support_a if scenario_two else support_a | support_b, complete)
        medium.end_phase()
        return {
            "scenario": 2 if scenario_two else 1,
            "a_tilde": len(tilde_a),
            "b_tilde": len(tilde_b),
            "rx1_only": len(only_b),
            "rx2_only": len(only_a),
            "quotas": [q1, q2],
            "needs": [need1, need2],
        }


def run_dd_blind_symmetric(
    cfg: ProtocolConfig,
    msgs: Messages,
    cache: CacheAssignment,
    trace: StateTrace,
    rng: np.random.Generator,
    keep_transcript: bool = False,
) -> ProtocolResult:
    encoder = BlindSymmetricDDEncoder(cfg, msgs, rng)
    medium = BroadcastMedium(SCENARIO, trace)
    sets = encoder.run(medium)
    transcript = medium.transcript()
    logger.debug("dd-blind-symmetric phases %s, sets %s", medium.phase_lengths(), sets)

    space = encoder.space
    rows = (
        np.vstack(encoder.rows)
        if encoder.rows
        else np.zeros((0, space.words), dtype=np.uint64)
    )
    ledger = EquationLedger()
    for receiver in (1, 2):
        for phase in PHASES:
            ledger.record(receiver, phase, encoder.received[receiver].get(phase, 0))

    decoded = {}
    for receiver, own_cache, wanted in (
        (1, cache.e1, space.a_cols()),
        (2, cache.e2, space.b_cols()),
    ):
        y = transcript.receptions(receiver)
        hit = np.flatnonzero(y != ERASED)
        mask, values = space.known_at(receiver, msgs, own_cache)
        decoded[receiver] = joint_decode(
            space, rows[hit], y[hit].astype(np.uint8), mask, values, wanted
        )

    return ProtocolResult(
        decoded1=decoded[1],
        decoded2=decoded[2],
        slots_used=medium.slots_used,
        phase_lengths=medium.phase_lengths(),
        plan=encoder.plan,
        diagnostics={
            "equations": ledger.to_dict(),
            "sets": sets,
            "failure": failure_reason(decoded[1], decoded[2]),
        },
        transcript=transcript if keep_transcript else None,
    )

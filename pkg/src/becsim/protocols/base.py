"""
Shared plumbing for the achievability protocols.

Every protocol is a slot loop between one encoder and two decoders. Encoders only
ever get the inputs their blindness level and CSIT scenario allow; decoders read
the transcript plus their own receiver's cache.
"""

import logging
import math
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..channel import ChannelParams, CsitKind, CsitScenario, Transcript
from ..errors import ConfigurationError
from ..gf2 import (
    BitVector,
    Eliminator,
    n_words,
    pack_bits,
    random_vector,
    row_parity,
    strip_known,
    unpack_bits,
)

logger = logging.getLogger(__name__)

FEEDBACK_TERMINATED = None
JOIN_CHUNK = 1024


@dataclass(frozen=True)
class Messages:
    """a goes to Rx1, b goes to Rx2."""

    a: BitVector
    b: BitVector

    @property
    def m1(self) -> int:
        return len(self.a)

    @property
    def m2(self) -> int:
        return len(self.b)


def random_messages(m1: int, m2: int, rng: np.random.Generator) -> Messages:
    return Messages(random_vector(m1, rng), random_vector(m2, rng))


@dataclass(frozen=True)
class ProtocolConfig:
    """
    Message sizes and the slack coefficient for one run.

    ``m`` is the base size the run was configured with; every fixed-length phase adds
    ``slack(m)`` slots. It defaults to the larger message.
    """

    params: ChannelParams
    m1: int
    m2: int
    slack_coeff: float = 2.0
    m: Optional[int] = None

    def __post_init__(self):
        if self.m1 < 0 or self.m2 < 0:
            raise ConfigurationError(f"message lengths must be >= 0, got {self.m1}, {self.m2}")
        if self.m is not None and self.m < 0:
            raise ConfigurationError(f"base size must be >= 0, got {self.m}")
        if self.slack_coeff < 0:
            raise ConfigurationError(f"slack coefficient must be >= 0, got {self.slack_coeff}")

    @property
    def base_m(self) -> int:
        return self.m if self.m is not None else max(self.m1, self.m2)

    @property
    def slack_slots(self) -> int:
        return slack(self.base_m, self.slack_coeff)

    def fountain_length(self, target: float, erasure: float) -> int:
        return fountain_length(target, erasure, self.slack_coeff, self.base_m)

    def feedback_margin(self, expected: float) -> int:
        return feedback_margin(expected, self.slack_coeff)


def slack(n: float, coeff: float) -> int:
    """Extra slots ceil(c * n^(2/3)) that absorb rank deficits; 0 for n <= 0."""
    if n <= 0:
        return 0
    return int(math.ceil(coeff * n ** (2.0 / 3.0) - 1e-9))


RANK_MARGIN = 8


def feedback_margin(expected: float, coeff: float) -> int:
    """
    Receptions past an expected count that feedback cannot reveal.

    A blind encoder sees who received a slot but not how many of those bits the
    receiver already caches, so a goal like eps * |X| is only known in expectation.
    ceil(c * sqrt(n)) covers the binomial spread; RANK_MARGIN covers rank deficits.
    """
    if expected <= 0:
        return 0
    return int(math.ceil(coeff * math.sqrt(expected) - 1e-9)) + RANK_MARGIN


def ceil_count(x: float) -> int:
    """Ceiling that ignores floating noise just above an integer."""
    return int(math.ceil(x - 1e-9)) if x > 0 else 0


def fountain_length(target: float, erasure: float, coeff: float, m: int) -> int:
    """Slots for a fixed-length random-combination stream: target/(1-erasure) + slack(m)."""
    if target <= 0:
        return 0
    require_reachable(erasure, "fountain phase")
    return ceil_count(target / (1.0 - erasure)) + slack(m, coeff)


def require_reachable(delta: float, what: str) -> None:
    if delta >= 1.0:
        raise ConfigurationError(f"{what} needs an erasure probability below 1, got {delta}")


@dataclass(frozen=True)
class PhaseSpec:
    name: str
    nominal: Optional[int]
    rule: str

    @property
    def feedback_terminated(self) -> bool:
        return self.nominal is FEEDBACK_TERMINATED


@dataclass(frozen=True)
class PhasePlan:
    scenario: CsitScenario
    phases: Tuple[PhaseSpec, ...]

    def __post_init__(self):
        if self.scenario.kind is CsitKind.NN:
            for phase in self.phases:
                if phase.feedback_terminated:
                    raise ConfigurationError(
                        f"phase {phase.name} stops on feedback but the scenario has none"
                    )

    @property
    def names(self) -> List[str]:
        return [p.name for p in self.phases]

    @property
    def nominal_total(self) -> Optional[int]:
        """Sum of fixed lengths; None when any phase is feedback-terminated."""
        if any(p.feedback_terminated for p in self.phases):
            return None
        return sum(p.nominal for p in self.phases)


@dataclass
class ArqRepeatStats:
    """Per-bit repetitions L_j of an ARQ phase and the receptions K_j at the other receiver."""

    repeats: np.ndarray
    receptions: np.ndarray

    def __post_init__(self):
        self.repeats = np.asarray(self.repeats, dtype=np.int64)
        self.receptions = np.asarray(self.receptions, dtype=np.int64)
        if self.repeats.shape != self.receptions.shape:
            raise ValueError("repeat and reception counts must align")
        if np.any(self.repeats < 1) or np.any(self.receptions > self.repeats):
            raise ValueError("need L_j >= 1 and K_j <= L_j")

    def mean_k(self, mask: Optional[np.ndarray] = None) -> float:
        k = self.receptions if mask is None else self.receptions[np.asarray(mask, dtype=bool)]
        return float(k.mean()) if k.size else math.nan

    def mean_k_minus_one_plus(self, mask: Optional[np.ndarray] = None) -> float:
        k = self.receptions if mask is None else self.receptions[np.asarray(mask, dtype=bool)]
        return float(np.maximum(k - 1, 0).mean()) if k.size else math.nan


class EquationLedger:
    """Equations collected per receiver and phase."""

    def __init__(self):
        self._counts: Dict[str, "OrderedDict[str, int]"] = {
            "rx1": OrderedDict(),
            "rx2": OrderedDict(),
        }

    def record(self, receiver: int, phase: str, count: int) -> None:
        bucket = self._counts[f"rx{receiver}"]
        bucket[phase] = bucket.get(phase, 0) + int(count)

    def to_dict(self) -> Dict[str, Dict[str, int]]:
        return {rx: dict(counts) for rx, counts in self._counts.items()}


@dataclass
class ProtocolResult:
    decoded1: Optional[BitVector]
    decoded2: Optional[BitVector]
    slots_used: int
    phase_lengths: Dict[str, int]
    plan: PhasePlan
    diagnostics: Dict = field(default_factory=dict)
    arq: Optional[ArqRepeatStats] = None
    transcript: Optional[Transcript] = None

    def __post_init__(self):
        if self.slots_used != sum(self.phase_lengths.values()):
            raise ValueError("slots_used must equal the sum of phase lengths")

    @property
    def success(self) -> bool:
        return self.decoded1 is not None and self.decoded2 is not None

    def matches(self, msgs: Messages) -> bool:
        return self.decoded1 == msgs.a and self.decoded2 == msgs.b


def failure_reason(decoded1: Optional[BitVector], decoded2: Optional[BitVector]) -> Optional[str]:
    failed = [f"rx{i}" for i, d in ((1, decoded1), (2, decoded2)) if d is None]
    return "rank deficit at " + ", ".join(failed) if failed else None


class JointSpace:
    """Coordinates of the concatenated vector (a || b): a at 0..m1-1, b at m1..m1+m2-1."""

    def __init__(self, m1: int, m2: int):
        self.m1 = m1
        self.m2 = m2
        self.nbits = m1 + m2
        self.words = n_words(self.nbits)

    def a_cols(self, indices=None) -> np.ndarray:
        return np.arange(self.m1) if indices is None else np.asarray(indices, dtype=np.int64)

    def b_cols(self, indices=None) -> np.ndarray:
        idx = np.arange(self.m2) if indices is None else np.asarray(indices, dtype=np.int64)
        return idx + self.m1

    def mask(self, cols) -> np.ndarray:
        bits = np.zeros(self.nbits, dtype=np.uint8)
        bits[np.asarray(cols, dtype=np.int64)] = 1
        return pack_bits(bits)

    def pack(self, msgs: Messages) -> np.ndarray:
        return pack_bits(np.concatenate([msgs.a.to_bits(), msgs.b.to_bits()]))

    def join(self, a_rows: np.ndarray, b_rows: np.ndarray) -> np.ndarray:
        """Rows over (a || b) from separately packed a- and b-coefficients."""
        out = np.zeros((a_rows.shape[0], self.words), dtype=np.uint64)
        for start in range(0, a_rows.shape[0], JOIN_CHUNK):
            stop = start + JOIN_CHUNK
            a_bits = unpack_bits(a_rows[start:stop], self.m1)
            b_bits = unpack_bits(b_rows[start:stop], self.m2)
            bits = np.concatenate([a_bits, b_bits], axis=-1)
            out[start:stop] = pack_bits(bits)
        return out

    def known_at(
        self, receiver: int, msgs: Messages, cached: BitVector
    ) -> Tuple[np.ndarray, np.ndarray]:
        """(mask, values) of the other receiver's bits this receiver caches."""
        if receiver == 1:
            cols = self.b_cols(np.flatnonzero(cached.to_bits()))
        else:
            cols = self.a_cols(np.flatnonzero(cached.to_bits()))
        mask = self.mask(cols)
        return mask, self.pack(msgs) & mask


def encode_rows(rows: np.ndarray, message_words: np.ndarray) -> np.ndarray:
    """Transmitted bits for a block of coefficient rows."""
    return row_parity(rows & message_words)


def solve_subset(rows: np.ndarray, rhs: np.ndarray, ncols: int, wanted) -> Optional[np.ndarray]:
    """Eliminate a block of equations and read off the wanted unknowns."""
    eliminator = Eliminator(ncols)
    eliminator.add_rows(rows, rhs)
    return eliminator.solve_for(wanted)


def decode_with_cache(
    rows: np.ndarray, rhs: np.ndarray, nbits: int, cached: np.ndarray, cached_values: np.ndarray
) -> Optional[np.ndarray]:
    """Solve for the uncached bits of one message, then fill in the cached ones.

    cached is a 0/1 array over the nbits positions; cached_values holds the true bits
    at those positions (the cache content) and anything elsewhere.
    """
    cached = np.asarray(cached, dtype=np.uint8)
    mask = pack_bits(cached)
    values = pack_bits(np.asarray(cached_values, dtype=np.uint8) & cached)
    if rows.shape[0]:
        rows, rhs = strip_known(rows, rhs, mask, values)
    unknown = np.flatnonzero(cached == 0)
    solved = solve_subset(rows, rhs, nbits, unknown)
    if solved is None:
        return None
    bits = np.asarray(cached_values, dtype=np.uint8) & cached
    bits[unknown] = solved
    return bits


def joint_decode(
    space: JointSpace,
    rows: np.ndarray,
    rhs: np.ndarray,
    known_mask: np.ndarray,
    known_values: np.ndarray,
    wanted,
) -> Optional[BitVector]:
    """Strip cached bits, eliminate over the joint space and extract one message."""
    if rows.shape[0]:
        rows, rhs = strip_known(rows, rhs, known_mask, known_values)
    bits = solve_subset(rows, rhs, space.nbits, wanted)
    return None if bits is None else BitVector.from_bits(bits)

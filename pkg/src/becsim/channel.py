"""
Two-user broadcast erasure channel with random receiver caches.

- ChannelParams: erasure probabilities (delta1, delta2) and cache-miss probabilities (eps1, eps2)
- sample_states / sample_cache: the state and cache processes, from independent streams
- CsitScenario + feedback_view: what the transmitter may see, with unit delay
- BroadcastMedium: slot driver that applies the channel law and records a Transcript

Slots are numbered from 1 in feedback views: the view at slot t holds states 1..t-1.
"""

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import ConfigurationError
from .gf2 import BitVector

logger = logging.getLogger(__name__)

ERASED = -1
"""Reception mark for an erased slot; receivers know their own state."""

TRACE_CHUNK = 4096


@dataclass(frozen=True)
class ChannelParams:
    """Erasure and cache-miss probabilities of the two receivers."""

    delta1: float
    delta2: float
    eps1: float
    eps2: float

    def __post_init__(self):
        for name in ("delta1", "delta2", "eps1", "eps2"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not 0.0 <= float(value) <= 1.0:
                raise ConfigurationError(f"{name} must lie in [0, 1], got {value!r}")

    @classmethod
    def symmetric(cls, delta: float, eps: float) -> "ChannelParams":
        return cls(delta, delta, eps, eps)

    @property
    def is_symmetric(self) -> bool:
        return self.delta1 == self.delta2 and self.eps1 == self.eps2

    def swapped(self) -> "ChannelParams":
        """Same channel with the receiver labels exchanged."""
        return ChannelParams(self.delta2, self.delta1, self.eps2, self.eps1)

    def as_dict(self) -> Dict[str, float]:
        return {"delta1": self.delta1, "delta2": self.delta2, "eps1": self.eps1, "eps2": self.eps2}


class _StateSource:
    """Refills a trace from its own random stream."""

    def __init__(self, params: ChannelParams, rng: np.random.Generator):
        self.params = params
        self.rng = rng


@dataclass
class StateTrace:
    """Per-slot channel states; 1 = received, 0 = erased."""

    s1: np.ndarray
    s2: np.ndarray
    source: Optional[_StateSource] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.s1 = np.asarray(self.s1, dtype=np.uint8)
        self.s2 = np.asarray(self.s2, dtype=np.uint8)
        if self.s1.shape != self.s2.shape or self.s1.ndim != 1:
            raise ValueError("s1 and s2 must be 1-D sequences of equal length")
        if np.any(self.s1 > 1) or np.any(self.s2 > 1):
            raise ValueError("channel states must be 0 or 1")

    @classmethod
    def lazy(cls, params: ChannelParams, rng: np.random.Generator) -> "StateTrace":
        """Empty trace that samples further slots on demand."""
        empty = np.zeros(0, dtype=np.uint8)
        return cls(empty, empty.copy(), _StateSource(params, rng))

    def __len__(self) -> int:
        return int(self.s1.shape[0])

    def ensure(self, n: int) -> None:
        """Make sure slots 1..n exist."""
        if n <= len(self):
            return
        if self.source is None:
            raise IndexError(f"trace has {len(self)} slots, {n} needed")
        while len(self) < n:
            more = sample_states(self.source.params, TRACE_CHUNK, self.source.rng)
            self.s1 = np.concatenate([self.s1, more.s1])
            self.s2 = np.concatenate([self.s2, more.s2])

    def to_dict(self) -> Dict[str, List[int]]:
        return {"s1": self.s1.tolist(), "s2": self.s2.tolist()}

    @classmethod
    def from_dict(cls, data: Dict[str, List[int]]) -> "StateTrace":
        return cls(np.asarray(data["s1"]), np.asarray(data["s2"]))


@dataclass(frozen=True)
class CacheAssignment:
    """e1 marks Rx2's bits cached at Rx1; e2 marks Rx1's bits cached at Rx2."""

    e1: BitVector
    e2: BitVector

    @property
    def m1(self) -> int:
        return len(self.e2)

    @property
    def m2(self) -> int:
        return len(self.e1)

    def to_dict(self) -> Dict[str, List[int]]:
        return {"e1": self.e1.to_bits().tolist(), "e2": self.e2.to_bits().tolist()}


class CsitKind(Enum):
    """Feedback available at the transmitter."""

    NN = "NN"
    DN = "DN"
    DD = "DD"


@dataclass(frozen=True)
class CsitScenario:
    kind: CsitKind
    receiver: Optional[int] = None

    def __post_init__(self):
        if self.kind is CsitKind.DN:
            if self.receiver not in (1, 2):
                raise ConfigurationError(f"DN feedback needs receiver 1 or 2, got {self.receiver}")
        elif self.receiver is not None:
            raise ConfigurationError(f"{self.kind.value} carries no receiver id")

    @classmethod
    def nn(cls) -> "CsitScenario":
        return cls(CsitKind.NN)

    @classmethod
    def dn(cls, receiver: int) -> "CsitScenario":
        return cls(CsitKind.DN, receiver)

    @classmethod
    def dd(cls) -> "CsitScenario":
        return cls(CsitKind.DD)

    def sees(self, receiver: int) -> bool:
        if self.kind is CsitKind.DD:
            return True
        return self.kind is CsitKind.DN and self.receiver == receiver

    def __str__(self) -> str:
        if self.kind is CsitKind.DN:
            return f"DN({self.receiver})"
        return self.kind.value


@dataclass(frozen=True)
class FeedbackView:
    """States of slots 1..time-1 that the scenario exposes; None where hidden."""

    time: int
    visible_s1: Optional[np.ndarray]
    visible_s2: Optional[np.ndarray]

    def last(self, receiver: int) -> int:
        """State of slot time-1 at the given receiver."""
        prefix = self.visible_s1 if receiver == 1 else self.visible_s2
        if prefix is None:
            raise PermissionError(f"feedback from Rx{receiver} is not available")
        if prefix.shape[0] == 0:
            raise IndexError("no slot has been sent yet")
        return int(prefix[-1])


def sample_states(params: ChannelParams, n: int, rng: np.random.Generator) -> StateTrace:
    """i.i.d. states, s_i ~ Ber(1 - delta_i), independent across users."""
    if n < 0:
        raise ValueError(f"slot count must be >= 0, got {n}")
    s1 = (rng.random(n) >= params.delta1).astype(np.uint8)
    s2 = (rng.random(n) >= params.delta2).astype(np.uint8)
    return StateTrace(s1, s2)


def sample_cache(
    params: ChannelParams, m1: int, m2: int, rng: np.random.Generator
) -> CacheAssignment:
    """Each interfering bit is cached independently with probability 1 - eps."""
    if m1 < 0 or m2 < 0:
        raise ValueError(f"message lengths must be >= 0, got {m1}, {m2}")
    e1 = (rng.random(m2) >= params.eps1).astype(np.uint8)
    e2 = (rng.random(m1) >= params.eps2).astype(np.uint8)
    return CacheAssignment(BitVector.from_bits(e1), BitVector.from_bits(e2))


def transmit(x: int, s1: int, s2: int) -> Tuple[int, int]:
    """Channel law Y_i = S_i X with erasures marked."""
    return (x if s1 else ERASED, x if s2 else ERASED)


def feedback_view(scenario: CsitScenario, trace: StateTrace, t: int) -> FeedbackView:
    if not 1 <= t <= len(trace):
        raise IndexError(f"slot {t} outside trace of {len(trace)} slots")
    s1 = trace.s1[: t - 1] if scenario.sees(1) else None
    s2 = trace.s2[: t - 1] if scenario.sees(2) else None
    for prefix in (s1, s2):
        if prefix is not None:
            prefix.flags.writeable = False
    return FeedbackView(time=t, visible_s1=s1, visible_s2=s2)


@dataclass(frozen=True)
class PhaseSpan:
    name: str
    start: int
    stop: int

    @property
    def length(self) -> int:
        return self.stop - self.start


@dataclass
class Transcript:
    """What went over the air: symbol, states and receptions per slot."""

    x: np.ndarray
    s1: np.ndarray
    s2: np.ndarray
    phases: List[PhaseSpan]

    def __post_init__(self):
        self.y1 = np.where(self.s1 == 1, self.x, ERASED).astype(np.int8)
        self.y2 = np.where(self.s2 == 1, self.x, ERASED).astype(np.int8)

    @property
    def total_slots(self) -> int:
        return int(self.x.shape[0])

    def receptions(self, receiver: int) -> np.ndarray:
        return self.y1 if receiver == 1 else self.y2

    def span(self, name: str) -> PhaseSpan:
        for phase in self.phases:
            if phase.name == name:
                return phase
        raise KeyError(name)

    def to_dict(self, ledger: Optional[Dict] = None) -> Dict:
        return {
            "total_slots": self.total_slots,
            "phases": [{"name": p.name, "start": p.start, "stop": p.stop} for p in self.phases],
            "x": self.x.tolist(),
            "s1": self.s1.tolist(),
            "s2": self.s2.tolist(),
            "ledger": ledger or {},
        }

    def to_json(self, ledger: Optional[Dict] = None) -> str:
        return json.dumps(self.to_dict(ledger), sort_keys=True)


class BroadcastMedium:
    """Slot driver between one encoder and the channel.

    send() returns nothing: the encoder learns states only through feedback(),
    which lags by one slot and hides what the scenario hides.
    """

    def __init__(self, scenario: CsitScenario, trace: StateTrace):
        self.scenario = scenario
        self.trace = trace
        self._x: List[int] = []
        self._phases: List[PhaseSpan] = []
        self._open: Optional[Tuple[str, int]] = None

    @property
    def slots_used(self) -> int:
        return len(self._x)

    def begin_phase(self, name: str) -> None:
        if self._open is not None:
            self.end_phase()
        self._open = (name, self.slots_used)

    def end_phase(self) -> int:
        if self._open is None:
            raise RuntimeError("no phase is open")
        name, start = self._open
        span = PhaseSpan(name, start, self.slots_used)
        self._phases.append(span)
        self._open = None
        logger.debug("phase %s: %d slots", name, span.length)
        return span.length

    def send(self, x: int) -> None:
        self.trace.ensure(self.slots_used + 1)
        self._x.append(int(x) & 1)

    def send_block(self, xs: np.ndarray) -> None:
        xs = np.asarray(xs, dtype=np.uint8)
        self.trace.ensure(self.slots_used + xs.shape[0])
        self._x.extend(int(v) & 1 for v in xs)

    def feedback(self) -> FeedbackView:
        """View for the next slot to be sent."""
        t = self.slots_used + 1
        self.trace.ensure(t)
        return feedback_view(self.scenario, self.trace, t)

    def phase_lengths(self) -> Dict[str, int]:
        return {p.name: p.length for p in self._phases}

    def transcript(self) -> Transcript:
        if self._open is not None:
            self.end_phase()
        n = self.slots_used
        return Transcript(
            x=np.asarray(self._x, dtype=np.uint8),
            s1=self.trace.s1[:n].copy(),
            s2=self.trace.s2[:n].copy(),
            phases=list(self._phases),
        )


@dataclass(frozen=True)
class TrialSeeds:
    """Independent streams of one trial."""

    states: np.random.SeedSequence
    cache: np.random.SeedSequence
    coding: np.random.SeedSequence
    messages: np.random.SeedSequence

    def generators(self) -> Tuple[np.random.Generator, ...]:
        return tuple(
            np.random.default_rng(s) for s in (self.states, self.cache, self.coding, self.messages)
        )


def derive_trial_seeds(master_seed: int, trial: int) -> TrialSeeds:
    """Split one master seed into the per-trial streams."""
    if master_seed < 0 or trial < 0:
        raise ConfigurationError("seeds and trial indices must be nonnegative")
    states, cache, coding, messages = np.random.SeedSequence([master_seed, trial]).spawn(4)
    return TrialSeeds(states, cache, coding, messages)

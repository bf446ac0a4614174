"""
Per-trial outcomes, their aggregate, and the corner-point comparison.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..channel import ChannelParams
from ..errors import ConfigurationError
from ..regions import RatePair

CI_MIN_TRIALS = 30
Z_95 = 1.959963984540054


@dataclass(frozen=True)
class TrialOutcome:
    """What one trial contributes to the statistics."""

    trial: int
    success: bool
    slots: int
    m1: int
    m2: int
    phase_lengths: Dict[str, int]
    failure: Optional[str] = None
    k_direct: Tuple[int, int] = (0, 0)
    k_aligned: Tuple[int, int] = (0, 0)

    @property
    def rates(self) -> Tuple[float, float]:
        if self.slots == 0:
            return 0.0, 0.0
        return self.m1 / self.slots, self.m2 / self.slots


@dataclass
class SimStats:
    """Empirical rates and failures of a batch of trials.

    Rates are per-trial m_i / slots averaged over the successful trials.
    k_mean is E[K] over bits Rx2 holds; k_aligned_mean is E[(K-1)+] over the rest.
    """

    protocol: str
    params: ChannelParams
    m1: int
    m2: int
    trials: int
    successes: int
    failure_prob: float
    mean_rate: RatePair
    stderr: Tuple[float, float]
    mean_slots: float
    mean_phase_lengths: Dict[str, float] = field(default_factory=dict)
    ci95: Optional[Tuple[Tuple[float, float], Tuple[float, float]]] = None
    k_mean: Optional[float] = None
    k_aligned_mean: Optional[float] = None
    failures: Dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.failure_prob <= 1.0:
            raise ValueError(f"failure probability {self.failure_prob} outside [0, 1]")

    @classmethod
    def from_outcomes(
        cls, protocol: str, params: ChannelParams, outcomes: List[TrialOutcome]
    ) -> "SimStats":
        if not outcomes:
            raise ValueError("no trial outcomes to aggregate")
        ok = [o for o in outcomes if o.success]
        rates = np.array([o.rates for o in ok], dtype=float).reshape(-1, 2)
        n = len(ok)
        mean = rates.mean(axis=0) if n else np.zeros(2)
        if n > 1:
            se = rates.std(axis=0, ddof=1) / math.sqrt(n)
        else:
            se = np.zeros(2)
        ci = None
        if n >= CI_MIN_TRIALS:
            ci = tuple(
                (float(mean[i] - Z_95 * se[i]), float(mean[i] + Z_95 * se[i])) for i in range(2)
            )

        phases: Dict[str, float] = {}
        for o in outcomes:
            for name, length in o.phase_lengths.items():
                phases[name] = phases.get(name, 0.0) + length
        phases = {name: total / len(outcomes) for name, total in phases.items()}

        failures: Dict[str, int] = {}
        for o in outcomes:
            if not o.success:
                reason = o.failure or "unknown"
                failures[reason] = failures.get(reason, 0) + 1

        def pooled(pairs) -> Optional[float]:
            total = sum(p[0] for p in pairs)
            count = sum(p[1] for p in pairs)
            return total / count if count else None

        first = outcomes[0]
        return cls(
            protocol=protocol,
            params=params,
            m1=first.m1,
            m2=first.m2,
            trials=len(outcomes),
            successes=n,
            failure_prob=(len(outcomes) - n) / len(outcomes),
            mean_rate=RatePair(max(float(mean[0]), 0.0), max(float(mean[1]), 0.0)),
            stderr=(float(se[0]), float(se[1])),
            mean_slots=float(np.mean([o.slots for o in outcomes])),
            mean_phase_lengths=phases,
            ci95=ci,
            k_mean=pooled([o.k_direct for o in outcomes]),
            k_aligned_mean=pooled([o.k_aligned for o in outcomes]),
            failures=failures,
        )

    def to_dict(self) -> Dict:
        return {
            "protocol": self.protocol,
            "params": self.params.as_dict(),
            "m1": self.m1,
            "m2": self.m2,
            "trials": self.trials,
            "successes": self.successes,
            "failure_prob": self.failure_prob,
            "rate1": self.mean_rate.r1,
            "rate2": self.mean_rate.r2,
            "stderr1": self.stderr[0],
            "stderr2": self.stderr[1],
            "ci95": [list(c) for c in self.ci95] if self.ci95 else None,
            "mean_slots": self.mean_slots,
            "mean_phase_lengths": dict(self.mean_phase_lengths),
            "k_mean": self.k_mean,
            "k_aligned_mean": self.k_aligned_mean,
            "failures": dict(self.failures),
        }


@dataclass
class ComparisonReport:
    passed: bool
    corner: RatePair
    mean_rate: RatePair
    rel_errors: Tuple[Optional[float], Optional[float]]
    failure_prob: float
    rel_tol: float
    failure_ceiling: float
    reasons: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict:
        return {
            "passed": self.passed,
            "corner": [self.corner.r1, self.corner.r2],
            "mean_rate": [self.mean_rate.r1, self.mean_rate.r2],
            "rel_errors": list(self.rel_errors),
            "failure_prob": self.failure_prob,
            "rel_tol": self.rel_tol,
            "failure_ceiling": self.failure_ceiling,
            "reasons": list(self.reasons),
        }


def compare_to_corner(
    stats: SimStats, corner: RatePair, rel_tol: float, failure_ceiling: float = 0.01
) -> ComparisonReport:
    """Pass iff each positive corner rate is within rel_tol and failures stay under the ceiling."""
    if rel_tol <= 0:
        raise ConfigurationError(f"relative tolerance must be > 0, got {rel_tol}")
    reasons: List[str] = []
    errors: List[Optional[float]] = []
    pairs = ((stats.mean_rate.r1, corner.r1), (stats.mean_rate.r2, corner.r2))
    for i, (got, want) in enumerate(pairs, 1):
        if want <= 0:
            errors.append(None)
            continue
        err = abs(got - want) / want
        errors.append(err)
        if abs(got - want) > rel_tol * want:
            reasons.append(f"R{i} = {got:.6f} is {err:.2%} off {want:.6f}")
    if stats.failure_prob >= failure_ceiling:
        reasons.append(f"failure probability {stats.failure_prob:.3f} >= ceiling {failure_ceiling}")
    return ComparisonReport(
        passed=not reasons,
        corner=corner,
        mean_rate=stats.mean_rate,
        rel_errors=(errors[0], errors[1]),
        failure_prob=stats.failure_prob,
        rel_tol=rel_tol,
        failure_ceiling=failure_ceiling,
        reasons=reasons,
    )

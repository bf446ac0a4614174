"""
Monte Carlo harness: single trials, trial batches, parameter sweeps.

Every trial is a pure function of (protocol, params, sizes, slack, master seed,
trial index), so batches can run on any pool backend and still aggregate to the
same numbers.
"""

import dataclasses
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..channel import CacheAssignment, ChannelParams, StateTrace, derive_trial_seeds, sample_cache
from ..errors import ConfigurationError, DecodeMismatchError
from ..pool import TrialPool
from ..protocols import Messages, ProtocolConfig, ProtocolResult, get_protocol, random_messages
from ..regions import RatePair
from .stats import ComparisonReport, SimStats, TrialOutcome, compare_to_corner

logger = logging.getLogger(__name__)

CONTAINMENT_TOL = 0.01


@dataclass(frozen=True)
class SimConfig:
    protocol: str
    params: ChannelParams
    m: int
    slack_coeff: float = 2.0
    trials: int = 1
    seed: int = 0
    corner: Optional[RatePair] = None
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigurationError(f"trials must be >= 1, got {self.trials}")
        if self.m < 1:
            raise ConfigurationError(f"m must be >= 1, got {self.m}")
        if self.seed < 0:
            raise ConfigurationError(f"seed must be >= 0, got {self.seed}")
        get_protocol(self.protocol)

    def sizes(self) -> Tuple[int, int]:
        """(m1, m2) for the protocol's corner at base size m."""
        return get_protocol(self.protocol).sizes(self.params, self.m)

    def target_corner(self) -> RatePair:
        if self.corner is not None:
            return self.corner
        return get_protocol(self.protocol).corner(self.params)


@dataclass(frozen=True)
class TrialTask:
    """Picklable description of one trial."""

    protocol: str
    params: ChannelParams
    m1: int
    m2: int
    slack_coeff: float
    seed: int
    trial: int
    m: Optional[int] = None


def execute_trial(
    task: TrialTask, keep_transcript: bool = False
) -> Tuple[ProtocolResult, Tuple[Messages, CacheAssignment]]:
    """Run one trial from its seeds; returns the result and the messages sent."""
    entry = get_protocol(task.protocol)
    seeds = derive_trial_seeds(task.seed, task.trial)
    rng_states, rng_cache, rng_coding, rng_messages = seeds.generators()
    trace = StateTrace.lazy(task.params, rng_states)
    cache = sample_cache(task.params, task.m1, task.m2, rng_cache)
    msgs = random_messages(task.m1, task.m2, rng_messages)
    cfg = ProtocolConfig(task.params, task.m1, task.m2, task.slack_coeff, m=task.m)
    result = entry.runner(cfg, msgs, cache, trace, rng_coding, keep_transcript=keep_transcript)
    if result.success and not result.matches(msgs):
        raise DecodeMismatchError(
            f"{task.protocol} trial {task.trial} reported success with wrong bits "
            f"({task.params.as_dict()})"
        )
    return result, (msgs, cache)


def run_single_trial(task: TrialTask) -> TrialOutcome:
    result, (_, cache) = execute_trial(task)
    k_direct = k_aligned = (0, 0)
    if result.arq is not None:
        k = result.arq.receptions
        if k.size == task.m1:
            held = cache.e2.to_bits().astype(bool)
        else:
            held = np.ones(k.size, dtype=bool)
        k_direct = (int(k[held].sum()), int(held.sum()))
        k_aligned = (int(np.maximum(k[~held] - 1, 0).sum()), int((~held).sum()))
    return TrialOutcome(
        trial=task.trial,
        success=result.success,
        slots=result.slots_used,
        m1=task.m1,
        m2=task.m2,
        phase_lengths=dict(result.phase_lengths),
        failure=result.diagnostics.get("failure"),
        k_direct=k_direct,
        k_aligned=k_aligned,
    )


def trial_tasks(cfg: SimConfig) -> List[TrialTask]:
    m1, m2 = cfg.sizes()
    return [
        TrialTask(cfg.protocol, cfg.params, m1, m2, cfg.slack_coeff, cfg.seed, trial, cfg.m)
        for trial in range(cfg.trials)
    ]


def run_trials(cfg: SimConfig, pool: Optional[TrialPool] = None) -> SimStats:
    """Run cfg.trials independent trials and aggregate them in trial order."""
    tasks = trial_tasks(cfg)
    logger.debug(
        "%s: %d trials at m1=%d, m2=%d", cfg.protocol, cfg.trials, tasks[0].m1, tasks[0].m2
    )
    if pool is None:
        with TrialPool(cfg.workers) as own:
            outcomes = own.map(run_single_trial, tasks)
    else:
        outcomes = pool.map(run_single_trial, tasks)
    return SimStats.from_outcomes(cfg.protocol, cfg.params, outcomes)


def transcript_json(cfg: SimConfig, trial: int = 0) -> str:
    """Transcript of one trial of cfg, replayed from its seeds, with the equation ledger."""
    m1, m2 = cfg.sizes()
    task = TrialTask(cfg.protocol, cfg.params, m1, m2, cfg.slack_coeff, cfg.seed, trial, cfg.m)
    result, _ = execute_trial(task, keep_transcript=True)
    return result.transcript.to_json(result.diagnostics.get("equations"))


@dataclass
class SweepRow:
    params: ChannelParams
    stats: Optional[SimStats] = None
    corner: Optional[RatePair] = None
    report: Optional[ComparisonReport] = None
    contained: Optional[bool] = None
    error: Optional[str] = None

    @property
    def status(self) -> str:
        if self.error is not None:
            return "configuration-error"
        return "pass" if self.report is not None and self.report.passed else "fail"

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_dict(self) -> Dict:
        row = {"status": self.status, "error": self.error, **self.params.as_dict()}
        row["corner_r1"] = self.corner.r1 if self.corner else None
        row["corner_r2"] = self.corner.r2 if self.corner else None
        row["contained"] = self.contained
        if self.stats is not None:
            s = self.stats
            row.update(
                m1=s.m1,
                m2=s.m2,
                trials=s.trials,
                failure_prob=s.failure_prob,
                rate1=s.mean_rate.r1,
                rate2=s.mean_rate.r2,
                stderr1=s.stderr[0],
                stderr2=s.stderr[1],
            )
        return row


def sweep(
    grid: Sequence[ChannelParams],
    protocol: str,
    m: int,
    trials: int,
    seed: int = 0,
    slack_coeff: float = 2.0,
    workers: int = 1,
    rel_tol: float = 0.03,
    failure_ceiling: float = 0.01,
) -> List[SweepRow]:
    """One row per grid point, in grid order; configuration errors stay in their row."""
    if not grid:
        raise ConfigurationError("sweep grid is empty")
    entry = get_protocol(protocol)
    rows: List[SweepRow] = []
    with TrialPool(workers) as pool:
        for i, params in enumerate(grid):
            row = SweepRow(params)
            try:
                cfg = SimConfig(protocol, params, m, slack_coeff, trials, seed, workers=workers)
                row.corner = entry.corner(params)
                row.stats = run_trials(cfg, pool)
                row.report = compare_to_corner(row.stats, row.corner, rel_tol, failure_ceiling)
                if row.stats.successes:
                    outer = entry.outer(params)
                    row.contained = outer.contains(row.stats.mean_rate, CONTAINMENT_TOL)
            except ConfigurationError as exc:
                logger.warning("sweep row %d %s: %s", i, params.as_dict(), exc)
                row.error = str(exc)
            rows.append(row)
            logger.info("sweep row %d/%d: %s", i + 1, len(grid), row.status)
    return rows


def random_grid(protocol: str, n: int, rng: np.random.Generator) -> List[ChannelParams]:
    """n parameter points inside the protocol's regime."""
    if n < 1:
        raise ConfigurationError(f"need at least one grid point, got {n}")
    sample = get_protocol(protocol).sample
    return [sample(rng) for _ in range(n)]


def vary_grid(base: ChannelParams, key: str, values: Sequence[float]) -> List[ChannelParams]:
    """Copies of base with one field set to each value; 'delta' and 'eps' set both receivers."""
    fields = {"delta": ("delta1", "delta2"), "eps": ("eps1", "eps2")}.get(key, (key,))
    known = {f.name for f in dataclasses.fields(ChannelParams)}
    if any(name not in known for name in fields):
        choices = ", ".join(["delta", "eps"] + sorted(known))
        raise ConfigurationError(f"cannot vary {key!r}; choose from {choices}")
    return [dataclasses.replace(base, **{name: float(v) for name in fields}) for v in values]

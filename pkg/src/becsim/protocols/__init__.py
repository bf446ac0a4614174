"""
Achievability protocols and the registry the simulator and CLI dispatch through.

Every runner has the signature

    run(cfg, msgs, cache, trace, rng, keep_transcript=False) -> ProtocolResult

and hands its encoder only the cache view its blindness level allows.
"""

import math
from dataclasses import dataclass
from typing import Callable, Dict, Tuple

import numpy as np

from ..channel import ChannelParams, CsitScenario
from ..errors import ConfigurationError
from ..regions import (
    RatePair,
    RateRegion,
    corner_case_b,
    corner_case_c,
    corner_dd_symmetric,
    corner_nn_blind_inner,
    corner_nn_blind_symmetric,
    corner_nn_nonblind,
    inner_eta,
    region_dd_outer,
    region_nn_nonblind,
    semiblind_eta,
)
from .base import (
    ArqRepeatStats,
    Messages,
    PhasePlan,
    PhaseSpec,
    ProtocolConfig,
    ProtocolResult,
    feedback_margin,
    fountain_length,
    random_messages,
    slack,
)
from .dd_blind_symmetric import run_dd_blind_symmetric
from .dn_case_b import run_dn_semiblind_case_b
from .dn_case_c import decodability_margin, run_dn_nonblind_case_c
from .nn_blind import run_nn_blind_inner, run_nn_blind_symmetric, run_nn_full_side_info
from .nn_semiblind import run_nn_semiblind

Runner = Callable[..., ProtocolResult]


@dataclass(frozen=True)
class ProtocolEntry:
    """What the harness needs to know about one protocol."""

    name: str
    runner: Runner
    scenario: CsitScenario
    corner: Callable[[ChannelParams], RatePair]
    outer: Callable[[ChannelParams], RateRegion]
    sizes: Callable[[ChannelParams, int], Tuple[int, int]]
    sample: Callable[[np.random.Generator], ChannelParams]
    summary: str


def _by_eta(eta: float, m: int) -> Tuple[int, int]:
    """m2 = m and m1 = ceil(eta*m); (m, 0) when Rx2's corner rate is zero."""
    if math.isinf(eta):
        return m, 0
    return int(math.ceil(eta * m - 1e-9)), m


def _by_corner(corner: RatePair, m: int) -> Tuple[int, int]:
    """m1 = m and m2 = floor(m*R2/R1)."""
    if corner.r1 <= 0:
        raise ConfigurationError("corner gives Rx1 rate 0; nothing to size against")
    return m, int(math.floor(m * corner.r2 / corner.r1 + 1e-9))


def _symmetric_sizes(p: ChannelParams, m: int) -> Tuple[int, int]:
    return m, m


def _u(rng: np.random.Generator, lo: float, hi: float) -> float:
    return round(float(rng.uniform(lo, hi)), 3)


def _ordered_deltas(rng: np.random.Generator) -> Tuple[float, float]:
    d = sorted((_u(rng, 0.0, 0.9), _u(rng, 0.0, 0.9)))
    return d[0], d[1]


def _sample_semiblind(rng: np.random.Generator) -> ChannelParams:
    d1, d2 = _ordered_deltas(rng)
    return ChannelParams(d1, d2, _u(rng, 0.0, 1.0), _u(rng, 0.0, 1.0))


def _sample_dd_symmetric(rng: np.random.Generator) -> ChannelParams:
    return ChannelParams.symmetric(_u(rng, 0.0, 0.9), _u(rng, 0.0, 1.0))


def _sample_case_b(rng: np.random.Generator) -> ChannelParams:
    return ChannelParams(_u(rng, 0.0, 0.9), _u(rng, 0.0, 0.9), 0.0, _u(rng, 0.0, 1.0))


def _sample_case_c(rng: np.random.Generator) -> ChannelParams:
    """Draws until the corner sizing passes Rx2's decodability check."""
    for _ in range(1000):
        d1, d2 = _u(rng, 0.0, 0.9), _u(rng, 0.0, 0.9)
        p = ChannelParams(d1, d2, _u(rng, 0.0, 1.0), _u(rng, 0.0, 1.0))
        m1, m2 = _by_corner(corner_case_c(p), 1000)
        if decodability_margin(ProtocolConfig(p, m1, m2)) >= -1e-9 * (m1 + m2):
            return p
    raise ConfigurationError("no decodable Case C parameters found")


def _sample_nn_blind_symmetric(rng: np.random.Generator) -> ChannelParams:
    return ChannelParams.symmetric(_u(rng, 0.0, 0.9), _u(rng, 0.05, 1.0))


def _sample_inner(rng: np.random.Generator) -> ChannelParams:
    d1, d2 = _ordered_deltas(rng)
    return ChannelParams(d1, d2, 0.0, _u(rng, 0.0, 0.95))


PROTOCOLS: Dict[str, ProtocolEntry] = {
    "nn-semiblind": ProtocolEntry(
        name="nn-semiblind",
        runner=run_nn_semiblind,
        scenario=CsitScenario.nn(),
        corner=corner_nn_nonblind,
        outer=region_nn_nonblind,
        sizes=lambda p, m: _by_eta(semiblind_eta(p), m),
        sample=_sample_semiblind,
        summary="no CSIT, transmitter knows Rx2's cache mask",
    ),
    "dd-blind-symmetric": ProtocolEntry(
        name="dd-blind-symmetric",
        runner=run_dd_blind_symmetric,
        scenario=CsitScenario.dd(),
        corner=corner_dd_symmetric,
        outer=region_dd_outer,
        sizes=_symmetric_sizes,
        sample=_sample_dd_symmetric,
        summary="delayed CSIT from both receivers, blind, symmetric",
    ),
    "case-b": ProtocolEntry(
        name="case-b",
        runner=run_dn_semiblind_case_b,
        scenario=CsitScenario.dn(1),
        corner=corner_case_b,
        outer=region_dd_outer,
        sizes=lambda p, m: _by_corner(corner_case_b(p), m),
        sample=_sample_case_b,
        summary="delayed CSIT from Rx1, eps1 = 0, transmitter knows Rx2's cache mask",
    ),
    "case-c": ProtocolEntry(
        name="case-c",
        runner=run_dn_nonblind_case_c,
        scenario=CsitScenario.dn(1),
        corner=corner_case_c,
        outer=region_dd_outer,
        sizes=lambda p, m: _by_corner(corner_case_c(p), m),
        sample=_sample_case_c,
        summary="delayed CSIT from Rx1, non-blind transmitter",
    ),
    "nn-blind-symmetric": ProtocolEntry(
        name="nn-blind-symmetric",
        runner=run_nn_blind_symmetric,
        scenario=CsitScenario.nn(),
        corner=corner_nn_blind_symmetric,
        outer=region_nn_nonblind,
        sizes=_symmetric_sizes,
        sample=_sample_nn_blind_symmetric,
        summary="no CSIT, blind, symmetric joint fountain",
    ),
    "nn-blind-inner": ProtocolEntry(
        name="nn-blind-inner",
        runner=run_nn_blind_inner,
        scenario=CsitScenario.nn(),
        corner=corner_nn_blind_inner,
        outer=region_nn_nonblind,
        sizes=lambda p, m: _by_eta(inner_eta(p), m),
        sample=_sample_inner,
        summary="no CSIT, blind, eps1 = 0 two-phase inner scheme",
    ),
}


def get_protocol(name: str) -> ProtocolEntry:
    try:
        return PROTOCOLS[name]
    except KeyError:
        known = ", ".join(sorted(PROTOCOLS))
        raise ConfigurationError(f"unknown protocol {name!r}; choose one of {known}") from None


__all__ = [
    "PROTOCOLS",
    "ProtocolEntry",
    "get_protocol",
    "ArqRepeatStats",
    "Messages",
    "PhasePlan",
    "PhaseSpec",
    "ProtocolConfig",
    "ProtocolResult",
    "feedback_margin",
    "fountain_length",
    "random_messages",
    "slack",
    "run_nn_semiblind",
    "run_dd_blind_symmetric",
    "run_dn_semiblind_case_b",
    "run_dn_nonblind_case_c",
    "run_nn_blind_symmetric",
    "run_nn_full_side_info",
    "run_nn_blind_inner",
]

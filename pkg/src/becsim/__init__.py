"""
becsim: two-user broadcast erasure channel with random receiver caches.

- GF(2) linear algebra on bit-packed words
- Channel, cache placement and CSIT feedback models
- Capacity, outer and inner rate regions with vertex enumeration
- Six achievability protocols (no, delayed and one-sided delayed CSIT)
- Monte Carlo harness with a process/thread trial pool
- Figure data and a command-line front end
"""

__version__ = "0.1.0"
__license__ = "MIT"

from .channel import (
    BroadcastMedium,
    CacheAssignment,
    ChannelParams,
    CsitKind,
    CsitScenario,
    StateTrace,
    Transcript,
    feedback_view,
    sample_cache,
    sample_states,
    transmit,
)
from .errors import ConfigurationError, DecodeMismatchError, RegimeError
from .gf2 import BitMatrix, BitVector, Eliminator, rank, solve
from .pool import TrialPool
from .protocols import PROTOCOLS, ProtocolConfig, ProtocolResult, get_protocol
from .regions import (
    HalfPlane,
    RatePair,
    RateRegion,
    contains,
    region_dd_outer,
    region_nn_blind_inner,
    region_nn_nonblind,
    vertices,
)
from .sim import SimConfig, SimStats, compare_to_corner, run_trials, sweep

__all__ = [
    "BitMatrix",
    "BitVector",
    "Eliminator",
    "rank",
    "solve",
    "BroadcastMedium",
    "CacheAssignment",
    "ChannelParams",
    "CsitKind",
    "CsitScenario",
    "StateTrace",
    "Transcript",
    "feedback_view",
    "sample_cache",
    "sample_states",
    "transmit",
    "HalfPlane",
    "RatePair",
    "RateRegion",
    "contains",
    "region_dd_outer",
    "region_nn_blind_inner",
    "region_nn_nonblind",
    "vertices",
    "PROTOCOLS",
    "ProtocolConfig",
    "ProtocolResult",
    "get_protocol",
    "SimConfig",
    "SimStats",
    "compare_to_corner",
    "run_trials",
    "sweep",
    "TrialPool",
    "ConfigurationError",
    "DecodeMismatchError",
    "RegimeError",
]

"""
Capacity, outer and inner rate regions as half-plane intersections.

Regions:
  region_nn_nonblind     - no CSIT, non-blind (also semi-blind) transmitter
  region_dd_outer        - delayed CSIT outer bound
  region_nn_blind_inner  - achievable region of the blind two-phase scheme
  region_no_side_info    - benchmark without caches

Tolerances: 1e-12 for algebraic identities and vertex deduplication, 1e-9 for
geometric membership.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

from .channel import ChannelParams
from .errors import RegimeError

logger = logging.getLogger(__name__)

ALGEBRAIC_TOL = 1e-12
GEOMETRIC_TOL = 1e-9


@dataclass(frozen=True)
class HalfPlane:
    """c1*R1 + c2*R2 <= bound."""

    c1: float
    c2: float
    bound: float

    def __post_init__(self):
        if self.bound < 0:
            raise ValueError(f"half-plane bound must be >= 0, got {self.bound}")

    def value(self, r1: float, r2: float) -> float:
        return self.c1 * r1 + self.c2 * r2

    def contains(self, r1: float, r2: float, tol: float = GEOMETRIC_TOL) -> bool:
        return self.value(r1, r2) <= self.bound + tol

    def describe(self) -> str:
        return f"{self.c1:.6g}*R1 + {self.c2:.6g}*R2 <= {self.bound:.6g}"


@dataclass(frozen=True)
class RatePair:
    r1: float
    r2: float

    def __post_init__(self):
        if self.r1 < 0 or self.r2 < 0:
            raise ValueError(f"rates must be nonnegative, got ({self.r1}, {self.r2})")

    @property
    def sum_rate(self) -> float:
        return self.r1 + self.r2

    def scaled(self, factor: float) -> "RatePair":
        return RatePair(self.r1 * factor, self.r2 * factor)

    def swapped(self) -> "RatePair":
        return RatePair(self.r2, self.r1)

    def as_tuple(self) -> Tuple[float, float]:
        return (self.r1, self.r2)


@dataclass(frozen=True)
class RateRegion:
    """Intersection of half-planes with R1 >= 0, R2 >= 0 implied."""

    halfplanes: Tuple[HalfPlane, ...]
    label: str = "outer"
    name: str = field(default="", compare=False)

    def vertices(self) -> List[RatePair]:
        return vertices(self)

    def contains(self, pt: RatePair, tol: float = GEOMETRIC_TOL) -> bool:
        return contains(self, pt, tol)

    def constraint_lines(self) -> List[str]:
        return [hp.describe() for hp in self.halfplanes]


def _clean(x: float) -> float:
    return 0.0 if abs(x) < ALGEBRAIC_TOL else x


def _ratio(num: float, den: float) -> float:
    """num/den with x/0 read as +inf and 0/0 as 0."""
    if den == 0:
        return 0.0 if num == 0 else math.inf
    return num / den


def vertices(region: RateRegion) -> List[RatePair]:
    """Counterclockwise vertices starting at the origin."""
    lines = list(region.halfplanes) + [HalfPlane(-1.0, 0.0, 0.0), HalfPlane(0.0, -1.0, 0.0)]
    points: List[Tuple[float, float]] = []
    for i in range(len(lines)):
        for j in range(i + 1, len(lines)):
            a, b = lines[i], lines[j]
            det = a.c1 * b.c2 - a.c2 * b.c1
            if abs(det) < 1e-15:
                continue
            r1 = _clean((a.bound * b.c2 - a.c2 * b.bound) / det)
            r2 = _clean((a.c1 * b.bound - a.bound * b.c1) / det)
            if r1 < -GEOMETRIC_TOL or r2 < -GEOMETRIC_TOL:
                continue
            if not all(hp.contains(r1, r2) for hp in region.halfplanes):
                continue
            r1, r2 = max(r1, 0.0), max(r2, 0.0)
            if any(
                abs(r1 - p1) <= ALGEBRAIC_TOL and abs(r2 - p2) <= ALGEBRAIC_TOL for p1, p2 in points
            ):
                continue
            points.append((r1, r2))
    if not points:
        raise ValueError(f"region {region.name or region.label} is empty or unbounded")
    cx = sum(p[0] for p in points) / len(points)
    cy = sum(p[1] for p in points) / len(points)
    points.sort(key=lambda p: math.atan2(p[1] - cy, p[0] - cx))
    start = min(range(len(points)), key=lambda k: points[k])
    ordered = points[start:] + points[:start]
    return [RatePair(r1, r2) for r1, r2 in ordered]


def contains(region: RateRegion, pt: RatePair, tol: float = GEOMETRIC_TOL) -> bool:
    if tol < 0:
        raise ValueError("tolerance must be >= 0")
    if pt.r1 < -tol or pt.r2 < -tol:
        return False
    return all(hp.contains(pt.r1, pt.r2, tol) for hp in region.halfplanes)


def sum_rate_optimum(region: RateRegion) -> RatePair:
    """Vertex with the largest R1 + R2; ties go to the larger R1."""
    return max(vertices(region), key=lambda v: (round(v.sum_rate, 12), v.r1))


def beta_no(p: ChannelParams, i: int) -> float:
    """Interference weight of receiver i without CSIT."""
    d_i, d_o, eps_o = (p.delta1, p.delta2, p.eps2) if i == 1 else (p.delta2, p.delta1, p.eps1)
    return eps_o * min(_ratio(1.0 - d_o, 1.0 - d_i), 1.0)


def beta_delayed(p: ChannelParams, i: int) -> float:
    """Interference weight of receiver i with delayed CSIT."""
    d_o, eps_o = (p.delta2, p.eps2) if i == 1 else (p.delta1, p.eps1)
    return eps_o * _ratio(1.0 - d_o, 1.0 - p.delta1 * p.delta2)


def region_nn_nonblind(p: ChannelParams) -> RateRegion:
    return RateRegion(
        (
            HalfPlane(beta_no(p, 1), 1.0, 1.0 - p.delta2),
            HalfPlane(1.0, beta_no(p, 2), 1.0 - p.delta1),
        ),
        label="capacity",
        name="nn-nonblind",
    )


def region_dd_outer(p: ChannelParams) -> RateRegion:
    return RateRegion(
        (
            HalfPlane(1.0, 0.0, 1.0 - p.delta1),
            HalfPlane(0.0, 1.0, 1.0 - p.delta2),
            HalfPlane(beta_delayed(p, 1), 1.0, 1.0 - p.delta2),
            HalfPlane(1.0, beta_delayed(p, 2), 1.0 - p.delta1),
        ),
        label="outer",
        name="dd-outer",
    )


def _require_inner_regime(p: ChannelParams) -> None:
    if p.delta2 < p.delta1 or p.eps1 != 0:
        raise RegimeError(
            f"blind inner scheme needs delta2 >= delta1 and eps1 = 0, got {p.as_dict()}"
        )
    if p.delta1 >= 1.0:
        raise RegimeError("blind inner scheme needs delta1 < 1")


def region_nn_blind_inner(p: ChannelParams) -> RateRegion:
    _require_inner_regime(p)
    coeff = (p.eps2 + p.delta1 * (1.0 - p.eps2)) * (1.0 - p.delta2) / (1.0 - p.delta1)
    return RateRegion(
        (HalfPlane(coeff, 1.0, 1.0 - p.delta2), HalfPlane(1.0, 0.0, 1.0 - p.delta1)),
        label="achieved",
        name="nn-blind-inner",
    )


def region_no_side_info(p: ChannelParams) -> RateRegion:
    region = region_nn_nonblind(ChannelParams(p.delta1, p.delta2, 1.0, 1.0))
    return RateRegion(region.halfplanes, label="capacity", name="no-side-info")


def corner_case_b(p: ChannelParams) -> RatePair:
    """Corner reached with Rx1 feedback and full side-information at Rx1."""
    if p.eps1 != 0:
        raise RegimeError(f"Case B corner needs eps1 = 0, got {p.eps1}")
    if p.delta1 * p.delta2 >= 1.0:
        return RatePair(0.0, 0.0)
    r2 = (1.0 - p.delta2) * (1.0 - p.eps2 * (1.0 - p.delta1) / (1.0 - p.delta1 * p.delta2))
    return RatePair(1.0 - p.delta1, _clean(r2))


def semiblind_eta(p: ChannelParams) -> float:
    """m1/m2 at the semi-blind corner; inf when Rx2's rate is zero."""
    return _ratio((1.0 - p.delta1) - p.eps1 * (1.0 - p.delta2), (1.0 - p.eps2) * (1.0 - p.delta2))


def corner_nn_nonblind(p: ChannelParams) -> RatePair:
    """Corner where both no-CSIT constraints are active (weaker receiver is Rx2)."""
    if p.delta2 < p.delta1:
        raise RegimeError("corner formula assumes delta2 >= delta1")
    if p.delta1 >= 1.0:
        return RatePair(0.0, 0.0)
    denom = 1.0 - p.eps1 * p.eps2 * (1.0 - p.delta2) / (1.0 - p.delta1)
    r1 = ((1.0 - p.delta1) - p.eps1 * (1.0 - p.delta2)) / denom
    r2 = (1.0 - p.eps2) * (1.0 - p.delta2) / denom
    return RatePair(_clean(r1), _clean(r2))


def _require_symmetric(p: ChannelParams) -> Tuple[float, float]:
    if not p.is_symmetric:
        raise RegimeError(
            f"symmetric scheme needs delta1 = delta2 and eps1 = eps2, got {p.as_dict()}"
        )
    return p.delta1, p.eps1


def corner_dd_symmetric(p: ChannelParams) -> RatePair:
    delta, eps = _require_symmetric(p)
    r = (1.0 - delta * delta) / (1.0 + delta + eps)
    return RatePair(r, r)


def corner_nn_blind_symmetric(p: ChannelParams) -> RatePair:
    delta, eps = _require_symmetric(p)
    r = (1.0 - delta) / (1.0 + eps)
    return RatePair(r, r)


def inner_eta(p: ChannelParams) -> float:
    """m1/m2 of the blind inner scheme; inf when Rx2 caches nothing."""
    return _ratio(1.0, (1.0 - p.eps2) * (1.0 - p.delta2))


def corner_nn_blind_inner(p: ChannelParams) -> RatePair:
    _require_inner_regime(p)
    return RatePair(1.0 - p.delta1, _clean((1.0 - p.eps2) * (1.0 - p.delta1) * (1.0 - p.delta2)))


def corner_case_c(p: ChannelParams) -> RatePair:
    """Sum-rate optimum of the delayed-CSIT outer bound."""
    return sum_rate_optimum(region_dd_outer(p))


def reflect(pts: Sequence[RatePair]) -> List[RatePair]:
    return [pt.swapped() for pt in pts]

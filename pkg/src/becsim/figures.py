"""
Region polylines behind the capacity-region figures.

Each figure is a fixed list of curves; each curve becomes one CSV file
fig{id}_{curve}.csv with header "label,r1,r2" and one row per vertex,
counterclockwise from the origin. Numbers are written with ten decimals so the
files are byte-stable across platforms.
"""

import dataclasses
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

from .channel import ChannelParams
from .errors import ConfigurationError
from .regions import (
    RateRegion,
    region_dd_outer,
    region_nn_blind_inner,
    region_nn_nonblind,
    region_no_side_info,
)
from .sim.export import write_text

logger = logging.getLogger(__name__)

SCENARIOS: Dict[str, Callable[[ChannelParams], RateRegion]] = {
    "nn-nonblind": region_nn_nonblind,
    "dd-outer": region_dd_outer,
    "nn-blind-inner": region_nn_blind_inner,
    "no-side-info": region_no_side_info,
}

FIG5_DEFAULT = ChannelParams(0.25, 0.5, 0.0, 0.5)


@dataclass(frozen=True)
class Curve:
    name: str
    scenario: str
    params: ChannelParams

    def region(self) -> RateRegion:
        return region_for(self.scenario, self.params)


def region_for(scenario: str, params: ChannelParams) -> RateRegion:
    try:
        build = SCENARIOS[scenario]
    except KeyError:
        known = ", ".join(sorted(SCENARIOS))
        raise ConfigurationError(f"unknown scenario {scenario!r}; choose one of {known}") from None
    return build(params)


def _fig2() -> List[Curve]:
    return [
        Curve(f"eps{eps:g}", "dd-outer", ChannelParams.symmetric(0.5, eps))
        for eps in (0.0, 0.5, 1.0)
    ]


def _fig3a() -> List[Curve]:
    d1, d2 = 0.5, 0.75
    return [
        Curve("no-side-info", "no-side-info", ChannelParams(d1, d2, 1.0, 1.0)),
        Curve("rx1-full", "nn-nonblind", ChannelParams(d1, d2, 0.0, 1.0)),
        Curve("rx2-full", "nn-nonblind", ChannelParams(d1, d2, 1.0, 0.0)),
        Curve("both-full", "nn-nonblind", ChannelParams(d1, d2, 0.0, 0.0)),
    ]


def _fig3b() -> List[Curve]:
    d1, d2 = 0.5, 0.75
    curves = [Curve("no-side-info", "no-side-info", ChannelParams(d1, d2, 1.0, 1.0))]
    for eps1 in (1.0, 0.5, 0.0):
        curves.append(Curve(f"eps1-{eps1:g}", "nn-nonblind", ChannelParams(d1, d2, eps1, 0.5)))
    return curves


def _fig4a() -> List[Curve]:
    return [Curve("nn-nonblind", "nn-nonblind", ChannelParams(1 / 3, 1 / 2, 2 / 3, 1 / 6))]


def _fig4b() -> List[Curve]:
    return [
        Curve("no-side-info", "no-side-info", ChannelParams.symmetric(0.5, 1.0)),
        Curve("eps0.5", "nn-nonblind", ChannelParams.symmetric(0.5, 0.5)),
    ]


def _fig5(params: Optional[ChannelParams] = None) -> List[Curve]:
    p = params or FIG5_DEFAULT
    return [Curve("outer", "nn-nonblind", p), Curve("inner", "nn-blind-inner", p)]


FIGURES: Dict[str, Callable[..., List[Curve]]] = {
    "2": _fig2,
    "3a": _fig3a,
    "3b": _fig3b,
    "4a": _fig4a,
    "4b": _fig4b,
    "5": _fig5,
}


def figure_curves(fig_id: str, overrides: Optional[Dict[str, float]] = None) -> List[Curve]:
    """Curves of one figure; overrides replace Figure 5's channel parameters."""
    if fig_id not in FIGURES:
        raise ConfigurationError(f"unknown figure {fig_id!r}; choose one of {', '.join(FIGURES)}")
    if fig_id == "5":
        params = dataclasses.replace(FIG5_DEFAULT, **(overrides or {}))
        return _fig5(params)
    if overrides:
        logger.warning("figure %s has fixed parameters; ignoring %s", fig_id, sorted(overrides))
    return FIGURES[fig_id]()


def format_rate(x: float) -> str:
    text = "%.10f" % x
    if text.startswith("-") and float(text) == 0.0:
        text = text[1:]
    return text


def region_csv(region: RateRegion, label: str) -> str:
    lines = ["label,r1,r2"]
    for v in region.vertices():
        lines.append(f"{label},{format_rate(v.r1)},{format_rate(v.r2)}")
    return "\n".join(lines) + "\n"


def figure_files(
    fig_id: str, overrides: Optional[Dict[str, float]] = None
) -> List[Tuple[str, str]]:
    """(file name, CSV text) per curve, in curve order."""
    return [
        (f"fig{fig_id}_{curve.name}.csv", region_csv(curve.region(), curve.name))
        for curve in figure_curves(fig_id, overrides)
    ]


def write_figure(
    fig_id: str, out_dir: Path, overrides: Optional[Dict[str, float]] = None
) -> List[Path]:
    files = figure_files(fig_id, overrides)
    return [write_text(Path(out_dir) / name, text) for name, text in files]

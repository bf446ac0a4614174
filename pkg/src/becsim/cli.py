"""
becsim CLI: rate regions, protocol simulations, sweeps and figure data.

Commands:
  becsim region    - Vertices and constraints of one rate region
  becsim simulate  - Monte Carlo run of one protocol against its corner point
  becsim sweep     - The same over a parameter grid
  becsim figure    - Region polylines behind one figure

Exit codes: 0 pass, 1 configuration error, 2 corner comparison failed.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from .channel import ChannelParams
from .config import KEYS, default_out_dir, resolve_settings
from .errors import ConfigurationError
from .figures import region_csv, region_for, write_figure
from .pool import TrialPool
from .protocols import PROTOCOLS, get_protocol
from .sim import (
    SimConfig,
    compare_to_corner,
    random_grid,
    run_trials,
    stats_to_json,
    sweep,
    sweep_to_csv,
    sweep_to_json,
    transcript_json,
    vary_grid,
    write_text,
)
from .sim.runner import CONTAINMENT_TOL

logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_CONFIG = 1
EXIT_FAIL = 2

PARAM_KEYS = ("delta1", "delta2", "eps1", "eps2")
SIM_ECHO = ("protocol",) + PARAM_KEYS + (
    "m",
    "trials",
    "seed",
    "slack",
    "tol",
    "failure_ceiling",
)


class BecsimCLI:
    """Command-line interface for the broadcast erasure channel simulator."""

    def __init__(self):
        self.parser = self._create_parser()

    def _create_parser(self) -> argparse.ArgumentParser:
        """Create argument parser."""
        parser = argparse.ArgumentParser(
            prog="becsim",
            description="becsim: broadcast erasure channel with receiver caches",
            formatter_class=argparse.RawDescriptionHelpFormatter,
            epilog="""
Examples:
  becsim region --scenario dd-outer --delta1 .5 --delta2 .5 --eps1 .5 --eps2 .5
  becsim simulate --protocol case-b --eps1 0 --m 20000 --trials 50
  becsim sweep --protocol dd-blind-symmetric --vary eps=0,0.25,0.5
  becsim figure --figure 3b --out figures/
            """,
        )

        common = argparse.ArgumentParser(add_help=False)
        common.add_argument("--config", help="key = value file mirroring the flags")
        common.add_argument("--verbose", "-v", action="store_true", help="Debug logging")
        for key in PARAM_KEYS:
            common.add_argument(f"--{key}", type=float, help=f"{key} in [0, 1]")
        common.add_argument("--out", help="Output file (directory for figure)")

        run = argparse.ArgumentParser(add_help=False)
        run.add_argument("--protocol", choices=sorted(PROTOCOLS), help="Protocol id")
        run.add_argument("--m", type=int, help="Base message size in bits (default: 2000)")
        run.add_argument("--trials", type=int, help="Independent trials (default: 20)")
        run.add_argument("--seed", type=int, help="Master seed (default: 0)")
        run.add_argument("--slack", type=float, help="Slack coefficient c (default: 2)")
        run.add_argument("--workers", type=int, help="Trial workers (default: 1)")
        run.add_argument("--tol", type=float, help="Relative corner tolerance (default: 0.03)")
        run.add_argument(
            "--failure-ceiling", type=float, help="Decode failure ceiling (default: 0.01)"
        )

        subparsers = parser.add_subparsers(dest="command", help="Command to run")

        # REGION command
        region_parser = subparsers.add_parser(
            "region", parents=[common], help="Emit the vertices of one rate region"
        )
        region_parser.add_argument(
            "--scenario", help="nn-nonblind, dd-outer, nn-blind-inner or no-side-info"
        )

        # SIMULATE command
        sim_parser = subparsers.add_parser(
            "simulate", parents=[common, run], help="Simulate one protocol against its corner"
        )
        sim_parser.add_argument("--transcript", help="Write the first trial's transcript JSON")

        # SWEEP command
        sweep_parser = subparsers.add_parser(
            "sweep", parents=[common, run], help="Simulate over a parameter grid"
        )
        grid = sweep_parser.add_mutually_exclusive_group()
        grid.add_argument("--vary", help="key=v1,v2,... ('delta' and 'eps' set both receivers)")
        grid.add_argument("--random-points", type=int, help="Random points in the regime")

        # FIGURE command
        figure_parser = subparsers.add_parser(
            "figure", parents=[common], help="Write the region CSVs of one figure"
        )
        figure_parser.add_argument("--figure", required=True, help="2, 3a, 3b, 4a, 4b or 5")

        return parser

    def run(self, args: Optional[List[str]] = None) -> int:
        """Run CLI with arguments."""
        parsed = self.parser.parse_args(args)

        if not parsed.command:
            self.parser.print_help()
            return EXIT_PASS

        logging.basicConfig(
            level=logging.DEBUG if parsed.verbose else logging.WARNING,
            format="%(levelname)s %(name)s: %(message)s",
        )

        flags = {key: getattr(parsed, key, None) for key in KEYS}
        try:
            if parsed.command == "figure":
                # only explicit parameters override a figure's own
                overrides = resolve_settings(flags, parsed.config, defaults={})
                return self.figure(overrides)
            settings = resolve_settings(flags, parsed.config)
            if parsed.command == "region":
                return self.region(settings)
            elif parsed.command == "simulate":
                return self.simulate(settings, parsed.verbose)
            elif parsed.command == "sweep":
                return self.sweep(settings)
        except ConfigurationError as e:
            print(f"❌ Error: {e}", file=sys.stderr)
            return EXIT_CONFIG
        except OSError as e:
            print(f"❌ Error: {e}", file=sys.stderr)
            return EXIT_CONFIG
        return EXIT_PASS

    @staticmethod
    def _params(settings: Dict[str, Any]) -> ChannelParams:
        return ChannelParams(*(float(settings[key]) for key in PARAM_KEYS))

    @staticmethod
    def _out(settings: Dict[str, Any], default_name: str) -> Path:
        if settings.get("out"):
            return Path(settings["out"])
        return default_out_dir() / default_name

    @staticmethod
    def _protocol(settings: Dict[str, Any]) -> str:
        protocol = settings.get("protocol")
        if not protocol:
            raise ConfigurationError("no protocol given (--protocol or 'protocol =' in --config)")
        get_protocol(protocol)
        return protocol

    def region(self, settings: Dict[str, Any]) -> int:
        """Write one region's vertices and print its constraints."""
        params = self._params(settings)
        scenario = settings["scenario"]
        region = region_for(scenario, params)
        text = region_csv(region, scenario)
        path = write_text(self._out(settings, f"region_{scenario}.csv"), text)

        print(f"\n📐 Region {scenario} ({region.label})")
        print("=" * 70)
        for line in region.constraint_lines():
            print(f"  {line}")
        print("  R1 >= 0, R2 >= 0")
        print("\n📊 Vertices:")
        for v in region.vertices():
            print(f"  ({v.r1:.6f}, {v.r2:.6f})")
        print(f"\n✅ Wrote {path}")
        return EXIT_PASS

    def _sim_config(self, settings: Dict[str, Any], params: ChannelParams) -> SimConfig:
        return SimConfig(
            protocol=self._protocol(settings),
            params=params,
            m=int(settings["m"]),
            slack_coeff=float(settings["slack"]),
            trials=int(settings["trials"]),
            seed=int(settings["seed"]),
            workers=int(settings["workers"]),
        )

    def simulate(self, settings: Dict[str, Any], verbose: bool = False) -> int:
        """Run trials, compare against the corner and write the stats JSON."""
        cfg = self._sim_config(settings, self._params(settings))
        corner = cfg.target_corner()
        m1, m2 = cfg.sizes()
        print(f"\n🎲 Simulating {cfg.protocol}: {cfg.trials} trials, m1={m1}, m2={m2}")
        print("=" * 70)

        with TrialPool(cfg.workers) as pool:
            stats = run_trials(cfg, pool)
        if verbose:
            pool.print_status()

        report = compare_to_corner(stats, corner, settings["tol"], settings["failure_ceiling"])
        outer = get_protocol(cfg.protocol).outer(cfg.params)
        contained = stats.successes > 0 and outer.contains(stats.mean_rate, CONTAINMENT_TOL)
        metadata = {
            "command": "simulate",
            "settings": {key: settings.get(key) for key in SIM_ECHO},
            "contained_in_outer": contained,
        }
        path = write_text(
            self._out(settings, f"simulate_{cfg.protocol}.json"),
            stats_to_json(stats, report=report, metadata=metadata),
        )

        print(f"📊 Rates: ({stats.mean_rate.r1:.6f}, {stats.mean_rate.r2:.6f})")
        print(f"  Corner: ({corner.r1:.6f}, {corner.r2:.6f})")
        print(f"  Failures: {stats.trials - stats.successes}/{stats.trials}")
        if stats.k_mean is not None:
            print(f"  E[K] (cached): {stats.k_mean:.4f}")
        if stats.k_aligned_mean is not None:
            print(f"  E[(K-1)+] (uncached): {stats.k_aligned_mean:.4f}")
        for name, length in stats.mean_phase_lengths.items():
            print(f"  Phase {name}: {length:.1f} slots")

        if settings.get("transcript"):
            tpath = write_text(settings["transcript"], transcript_json(cfg))
            print(f"  Transcript: {tpath}")

        print(f"\n  Stats: {path}")
        print("=" * 70)
        if report.passed:
            print("✅ Within tolerance of the corner point")
            return EXIT_PASS
        for reason in report.reasons:
            print(f"❌ {reason}")
        return EXIT_FAIL

    def _grid(self, settings: Dict[str, Any], protocol: str) -> List[ChannelParams]:
        if settings.get("random_points") is not None:
            rng = np.random.default_rng(int(settings["seed"]))
            return random_grid(protocol, int(settings["random_points"]), rng)
        base = self._params(settings)
        if not settings.get("vary"):
            return [base]
        key, sep, values = settings["vary"].partition("=")
        if not sep or not values:
            raise ConfigurationError(f"--vary expects key=v1,v2,..., got {settings['vary']!r}")
        try:
            points = [float(v) for v in values.split(",")]
        except ValueError:
            raise ConfigurationError(f"--vary values must be numbers: {values!r}") from None
        return vary_grid(base, key.strip(), points)

    def sweep(self, settings: Dict[str, Any]) -> int:
        """Simulate every grid point and write the sweep table."""
        protocol = self._protocol(settings)
        grid = self._grid(settings, protocol)
        print(f"\n🧭 Sweeping {protocol} over {len(grid)} points")
        print("=" * 70)

        rows = sweep(
            grid,
            protocol,
            m=int(settings["m"]),
            trials=int(settings["trials"]),
            seed=int(settings["seed"]),
            slack_coeff=float(settings["slack"]),
            workers=int(settings["workers"]),
            rel_tol=float(settings["tol"]),
            failure_ceiling=float(settings["failure_ceiling"]),
        )

        out = self._out(settings, f"sweep_{protocol}.csv")
        metadata = {"command": "sweep", "settings": {key: settings.get(key) for key in SIM_ECHO}}
        if out.suffix == ".json":
            write_text(out, sweep_to_json(rows, metadata=metadata))
        else:
            write_text(out, sweep_to_csv(rows))

        failed = 0
        for row in rows:
            p = row.params
            point = f"d=({p.delta1:g}, {p.delta2:g}) e=({p.eps1:g}, {p.eps2:g})"
            if row.error is not None:
                print(f"  ⚠️ {point}: {row.error}")
            elif row.passed and row.contained is not False:
                r = row.stats.mean_rate
                print(f"  ✅ {point}: ({r.r1:.4f}, {r.r2:.4f})")
            else:
                failed += 1
                reasons = row.report.reasons if row.report else []
                if row.contained is False:
                    reasons = reasons + ["outside the outer region"]
                print(f"  ❌ {point}: {'; '.join(reasons)}")

        print("\n" + "=" * 70)
        print(f"📊 {len(rows)} rows, {failed} failed, written to {out}")
        return EXIT_FAIL if failed else EXIT_PASS

    def figure(self, overrides: Dict[str, Any]) -> int:
        """Write the CSV bundle of one figure."""
        fig_id = str(overrides.pop("figure"))
        out_dir = Path(overrides.pop("out", None) or default_out_dir())
        params = {key: float(overrides[key]) for key in PARAM_KEYS if key in overrides}
        paths = write_figure(fig_id, out_dir, params)
        print(f"\n📈 Figure {fig_id}")
        for path in paths:
            print(f"  ✅ {path}")
        return EXIT_PASS


def main(args: Optional[List[str]] = None) -> int:
    """Main entry point."""
    cli = BecsimCLI()
    return cli.run(args)


if __name__ == "__main__":
    sys.exit(main())

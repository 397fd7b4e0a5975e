"""command-line interface for the softabs sampler."""

import argparse
import asyncio
from pathlib import Path
from typing import Any, Awaitable, Callable, Dict, List, Optional, Sequence

import numpy as np
from rich.console import Console
from rich.table import Table

from ..metrics import build_metric
from ..targets import build_target
from .config import LOG_LEVELS, Config, MetricFamilyName, RunOptions, load_flat_config
from .errors import SamplerError
from .integrate import HamiltonianSystem, integrate_trajectory
from .log import setup_logging
from .output import (
    BenchmarkRow,
    benchmark_row,
    build_summary,
    write_benchmark,
    write_samples_csv,
    write_summary_json,
    write_trajectory_csv,
)
from .sampler import ChainOutput, run_chain


EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_CHAIN_FAILURE = 3

# argparse destinations that steer the cli itself rather than a run
CLI_ONLY_KEYS = {"command", "config", "log_level", "preset", "run_file", "workers"}

# desk-scale versions of the funnel benchmark protocols. Adapted runs fix L by
# hand from the step sizes these targets are known to settle on (L * eps ~ 25).
PRESETS: Dict[str, List[Dict[str, Any]]] = {
    "table1": [
        {"label": "EMHMC (hand-tuned)", "metric": "euclidean", "epsilon": 0.005,
         "warmup": 1000, "samples": 20000},
        {"label": "RMHMC SoftAbs", "metric": "softabs", "alpha": 1e6, "adapt": True,
         "target_accept": 0.95, "steps": 120, "warmup": 1000, "samples": 1000},
    ],
    "table2": [
        {"label": "SoftAbs", "metric": "softabs", "alpha": 1e6, "adapt": True,
         "target_accept": 0.95, "steps": 120, "warmup": 1000, "samples": 1000},
        {"label": "Diag SoftAbs", "metric": "diag_softabs", "alpha": 1e6, "adapt": True,
         "target_accept": 0.8, "steps": 51, "warmup": 1000, "samples": 1000},
    ],
    "adaptive_emhmc": [
        {"label": "EMHMC (adapted)", "metric": "euclidean", "adapt": True,
         "target_accept": 0.65, "warmup": 1000, "samples": 10000},
    ],
    "outer_product": [
        {"label": "Outer SoftAbs", "metric": "outer_softabs", "alpha": 1.0, "adapt": True,
         "target_accept": 0.8, "warmup": 500, "samples": 200},
        {"label": "Diag Outer SoftAbs", "metric": "diag_outer_softabs", "alpha": 1.0, "adapt": True,
         "target_accept": 0.8, "warmup": 1000, "samples": 1000},
    ],
}

# flags that only place or name the output, so they mean something without any runs
OUTPUT_KEYS = {"out_dir", "prefix"}


def _add_run_options(parser: argparse.ArgumentParser) -> None:
    """Options shared by every subcommand; unset flags stay out of the namespace."""
    S = argparse.SUPPRESS
    parser.add_argument("--config", type=Path, default=S, help="flat key=value file with run options")
    parser.add_argument("--label", default=S, help="row label in tables")
    parser.add_argument("--target", default=S, help="target name (funnel, gaussian)")
    parser.add_argument("--n", type=int, default=S, help="funnel x count or gaussian dimension")
    parser.add_argument(
        "--metric", choices=[m.value for m in MetricFamilyName], default=S, help="metric family"
    )
    parser.add_argument("--alpha", type=float, default=S, help="softabs regularization")
    parser.add_argument("--epsilon", type=float, default=S, help="fixed step size")
    parser.add_argument("--adapt", action="store_true", default=S, help="adapt the step size in warm-up")
    parser.add_argument("--target-accept", type=float, default=S, help="dual-averaging target rate")
    parser.add_argument("--steps", type=int, default=S, help="leapfrog steps per trajectory")
    parser.add_argument("--warmup", type=int, default=S, help="warm-up transitions")
    parser.add_argument("--samples", type=int, default=S, help="recorded transitions")
    parser.add_argument("--seed", type=int, default=S, help="64-bit rng seed")
    parser.add_argument("--fp-threshold", type=float, default=S, help="fixed-point tolerance")
    parser.add_argument("--fp-max-iters", type=int, default=S, help="fixed-point iteration cap")
    parser.add_argument(
        "--method", choices=["auto", "leapfrog", "generalized"], default=S, help="integrator"
    )
    parser.add_argument("--mass", default=S, help="comma-separated euclidean mass diagonal")
    parser.add_argument("--out-dir", type=Path, default=S, help="output directory")
    parser.add_argument("--prefix", default=S, help="output file prefix")
    parser.add_argument("--log-level", choices=LOG_LEVELS, type=str.upper, default=S)


def build_parser() -> argparse.ArgumentParser:
    """build the argument parser with its three subcommands."""
    parser = argparse.ArgumentParser(
        prog="softabs-hmc",
        description="riemannian manifold hmc with the softabs metric",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sample = sub.add_parser("sample", help="run one chain and write samples plus a summary")
    _add_run_options(sample)

    trajectory = sub.add_parser("trajectory", help="integrate one trajectory and dump it")
    _add_run_options(trajectory)
    trajectory.add_argument("--init", default=argparse.SUPPRESS, help="comma-separated start position")
    trajectory.add_argument("--momentum", default=argparse.SUPPRESS, help="comma-separated start momentum")

    benchmark = sub.add_parser("benchmark", help="run several chains and tabulate them")
    _add_run_options(benchmark)
    benchmark.add_argument("--preset", choices=sorted(PRESETS), action="append", default=[])
    benchmark.add_argument(
        "--run-file", type=Path, action="append", default=[], help="flat config file, one per run"
    )
    benchmark.add_argument("--workers", type=int, default=None, help="chains run concurrently")

    return parser


def resolve_run_options(command: str, args: argparse.Namespace) -> RunOptions:
    """merge defaults, an optional --config file and explicit flags, in that order."""
    values: Dict[str, Any] = {}
    config_path = getattr(args, "config", None)
    if config_path is not None:
        values.update(load_flat_config(config_path))
    values.update(_explicit_flags(args))
    values["command"] = command
    return RunOptions(**values)


def _explicit_flags(args: argparse.Namespace) -> Dict[str, Any]:
    return {key: value for key, value in vars(args).items() if key not in CLI_ONLY_KEYS}


def benchmark_runs(args: argparse.Namespace) -> List[RunOptions]:
    """expand presets and --run-file files, applying explicit flags to every run."""
    overrides = _explicit_flags(args)
    shared: Dict[str, Any] = {}
    config_path = getattr(args, "config", None)
    if config_path is not None:
        shared.update(load_flat_config(config_path))

    entries: List[Dict[str, Any]] = []
    for name in args.preset:
        entries.extend(dict(entry) for entry in PRESETS[name])
    for path in args.run_file:
        entries.append(load_flat_config(path))

    if not entries and (config_path is not None or set(overrides) - OUTPUT_KEYS):
        raise ValueError("benchmark run options need --preset or --run-file to apply to")

    return [
        RunOptions(**{**shared, **entry, **overrides, "command": "benchmark"})
        for entry in entries
    ]


class ExperimentCLI:
    """runs experiments and reports them on the console."""

    def __init__(self, config: Config, console: Optional[Console] = None):
        self.config = config
        self.console = console or Console()
        self.commands: Dict[str, Callable[[argparse.Namespace], Awaitable[int]]] = {
            "sample": self._sample,
            "trajectory": self._trajectory,
            "benchmark": self._benchmark,
        }

    def _out_path(self, run: RunOptions, suffix: str, prefix: Optional[str] = None) -> Path:
        out_dir = run.out_dir or self.config.output_dir
        return Path(out_dir) / f"{prefix or run.default_prefix()}_{suffix}"

    def _print_error(self, error: str) -> None:
        """print error message."""
        self.console.print(f"[red]error:[/red] {error}")

    def _print_files(self, *paths: Path) -> None:
        for path in paths:
            self.console.print(f"[dim]wrote {path}[/dim]")

    def _print_chain(self, run: RunOptions, output: ChainOutput, ess: Dict[str, Optional[float]]) -> None:
        """print a one-chain summary table."""
        table = Table(title=f"chain: {run.display_name()}")
        table.add_column("quantity", style="bright_white", no_wrap=True)
        table.add_column("value", style="white")

        table.add_row("epsilon", f"{output.epsilon:.4g}")
        table.add_row("steps", str(output.n_steps))
        table.add_row("accept rate", f"{output.accept_rate:.3f}")
        table.add_row("divergences", f"{output.n_divergent} (warm-up {output.n_warmup_divergent})")
        table.add_row("time (s)", f"{output.elapsed:.2f}")
        for name, value in ess.items():
            table.add_row(f"ess {name}", "-" if value is None else f"{value:.1f}")

        self.console.print(table)

    def _print_benchmark(self, rows: Sequence[BenchmarkRow]) -> None:
        """print the benchmark comparison table."""
        table = Table(title="benchmark")
        table.add_column("algorithm", style="bright_white", no_wrap=True)
        table.add_column("epsilon")
        table.add_column("accept rate")
        table.add_column("ess")
        table.add_column("ess / sample")
        table.add_column("ess / time (1/s)")
        table.add_column("status", style="yellow")

        def fmt(value: Optional[float], pattern: str) -> str:
            return "-" if value is None else format(value, pattern)

        for row in rows:
            table.add_row(
                row.label,
                f"{row.epsilon:.3g}",
                f"{row.accept_rate:.3f}",
                fmt(row.ess, ".1f"),
                fmt(row.ess_per_sample, ".3f"),
                fmt(row.ess_per_second, ".2f"),
                row.failure or "ok",
            )

        self.console.print(table)

    async def cmd_sample(self, run: RunOptions) -> int:
        """run one chain, write the samples csv and the json summary."""
        chain_config = run.to_chain_config()
        with self.console.status("[bright_white]sampling...[/bright_white]"):
            output = await asyncio.to_thread(run_chain, chain_config)

        model = build_target(chain_config.target)
        summary = build_summary(
            output,
            model,
            metric=run.metric.value,
            alpha=run.alpha,
            seed=run.seed,
            config=run.model_dump(mode="json"),
        )
        samples_path = write_samples_csv(self._out_path(run, "samples.csv"), output)
        summary_path = write_summary_json(self._out_path(run, "summary.json"), summary)

        self._print_chain(run, output, summary.ess)
        self._print_files(samples_path, summary_path)

        if not output.ok:
            self._print_error(output.failure)
            return EXIT_CHAIN_FAILURE
        return EXIT_OK

    async def cmd_trajectory(self, run: RunOptions) -> int:
        """integrate a single trajectory and write step,q,p,H rows."""
        chain_config = run.to_chain_config()
        model = build_target(chain_config.target)
        system = HamiltonianSystem(model, build_metric(chain_config.metric))
        rng = np.random.Generator(np.random.PCG64(run.seed))

        if run.init is not None:
            q0 = model.check_position(run.init)
        else:
            low, high = chain_config.init_range
            q0 = rng.uniform(low, high, size=model.dim)

        try:
            cache = system.refresh(q0)
            p0 = (
                np.asarray(run.momentum, dtype=float)
                if run.momentum is not None
                else system.metric.sample_momentum(cache, rng)
            )
            start = system.state(q0, p0, cache)
        except SamplerError as e:
            self._print_error(f"unusable starting point: {e}")
            return EXIT_CHAIN_FAILURE

        result = await asyncio.to_thread(
            integrate_trajectory, system, start, chain_config.integrator, None, None, True
        )
        path = write_trajectory_csv(self._out_path(run, "trajectory.csv"), result.log)
        self._print_files(path)

        if result.diverged:
            self._print_error(f"trajectory diverged at {result.error}")
            return EXIT_CHAIN_FAILURE

        energies = [point.energy for point in result.log]
        self.console.print(
            f"[bright_white]{len(result.log) - 1} steps, H drift "
            f"{max(energies) - min(energies):.3g}[/bright_white]"
        )
        return EXIT_OK

    async def cmd_benchmark(
        self,
        runs: Sequence[RunOptions],
        workers: int = 1,
        prefix: str = "benchmark",
        out_dir: Optional[Path] = None,
    ) -> int:
        """run every entry, at most ``workers`` at a time, and tabulate them in the order given."""
        semaphore = asyncio.Semaphore(max(1, workers))

        async def run_one(run: RunOptions) -> BenchmarkRow:
            chain_config = run.to_chain_config()
            async with semaphore:
                output = await asyncio.to_thread(run_chain, chain_config)
            model = build_target(chain_config.target)
            return benchmark_row(run.display_name(), output, model, run.metric.value, run.alpha)

        with self.console.status(f"[bright_white]running {len(runs)} chains...[/bright_white]"):
            rows = await asyncio.gather(*(run_one(run) for run in runs))

        out_dir = out_dir or self.config.output_dir
        csv_path, json_path = write_benchmark(
            Path(out_dir) / f"{prefix}.csv", Path(out_dir) / f"{prefix}.json", rows
        )
        self._print_benchmark(rows)
        self._print_files(csv_path, json_path)
        return EXIT_OK

    async def _sample(self, args: argparse.Namespace) -> int:
        return await self.cmd_sample(resolve_run_options("sample", args))

    async def _trajectory(self, args: argparse.Namespace) -> int:
        return await self.cmd_trajectory(resolve_run_options("trajectory", args))

    async def _benchmark(self, args: argparse.Namespace) -> int:
        runs = benchmark_runs(args)
        workers = args.workers if args.workers is not None else self.config.workers
        if workers <= 0:
            raise ValueError("--workers must be positive")
        prefix = getattr(args, "prefix", None) or "_".join(args.preset) or "benchmark"
        return await self.cmd_benchmark(
            runs, workers=workers, prefix=prefix, out_dir=getattr(args, "out_dir", None)
        )

    async def run(self, args: argparse.Namespace) -> int:
        """dispatch a parsed command line."""
        return await self.commands[args.command](args)


async def main(argv: Optional[Sequence[str]] = None) -> int:
    """main entry point for the cli; returns the process exit code."""
    args = build_parser().parse_args(argv)
    console = Console()

    try:
        config = Config.from_env()
        if getattr(args, "log_level", None):
            config.log_level = args.log_level
        config.validate()
        setup_logging(config.log_level)

        cli = ExperimentCLI(config, console)
        return await cli.run(args)

    except ValueError as e:
        console.print(f"[red]configuration error:[/red] {str(e)}")
        console.print("[yellow]please check the flags, the --config file or environment variables.[/yellow]")
        return EXIT_CONFIG_ERROR
    except SamplerError as e:
        console.print(f"[red]chain failure:[/red] {str(e)}")
        return EXIT_CHAIN_FAILURE

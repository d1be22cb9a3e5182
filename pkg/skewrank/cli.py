"""Command-line driver: aggregate, rank, analyze, synth-recovery and synth-irt."""

import argparse
import json
import logging
import os
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import pandas as pd

from .aggregation import AggregationMethod
from .config import Config, setup_logging, validate_config
from .errors import (
    ConfigurationError,
    DomainError,
    EmptySampleSetError,
    RatingsParseError,
    SkewRankError,
)
from .experiments import IRTSpec, irt_sweep, recovery_sweep
from .pipeline import ModelCode, RankAggregationPipeline
from .solver import SolverConfig
from .utils import formats

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_DOMAIN = 4
EXIT_NOT_CONVERGED = 5

METHOD_CODES = [method.code for method in AggregationMethod]
DATA_COMMANDS = ("aggregate", "rank", "analyze")


@dataclass
class RunConfig:
    """Everything one command needs, built from parsed arguments."""

    command: str
    model: ModelCode = field(default_factory=ModelCode)
    solver: SolverConfig = field(default_factory=SolverConfig)
    seed: int = Config.DEFAULT_SEED
    input: Optional[str] = None
    output_dir: Optional[str] = None
    pairwise_dir: Optional[str] = None
    delimiter: str = Config.DELIMITER
    compare_rank: Optional[int] = None
    strict_convergence: bool = False

    def __post_init__(self) -> None:
        if self.command in DATA_COMMANDS and not (self.input or self.pairwise_dir):
            raise ConfigurationError(f"'{self.command}' needs --input")
        if self.command == "aggregate" and not self.output_dir:
            raise ConfigurationError("'aggregate' needs --output-dir")
        if self.compare_rank is not None and (self.compare_rank < 2 or self.compare_rank % 2):
            raise ConfigurationError(f"--compare-rank must be even and >= 2, got {self.compare_rank}")

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        model = ModelCode(
            getattr(args, "method", "am"),
            getattr(args, "min_user_ratings", 0),
            getattr(args, "min_support", 0),
        )
        solver = SolverConfig.from_config(
            rank=getattr(args, "rank", None),
            step_length=getattr(args, "eta", None),
            tolerance=getattr(args, "tol", None),
            max_iterations=getattr(args, "max_iters", None),
        )
        return cls(
            command=args.command,
            model=model,
            solver=solver,
            seed=args.seed,
            input="demo" if getattr(args, "demo", False) else getattr(args, "input", None),
            output_dir=getattr(args, "output_dir", None),
            pairwise_dir=getattr(args, "pairwise", None),
            delimiter=args.delimiter or Config.DELIMITER,
            compare_rank=getattr(args, "compare_rank", None),
            strict_convergence=getattr(args, "strict_convergence", False),
        )


def _float_list(text: str) -> List[float]:
    return [float(part) for part in text.replace(",", " ").split()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--verbose", action="store_true", help="Log at DEBUG level.")
    common.add_argument("--delimiter", default=None, help="Field separator for delimited files.")
    common.add_argument("--seed", type=int, default=Config.DEFAULT_SEED)

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--method", choices=METHOD_CODES, default="am", help="Pairwise aggregation rule.")
    model.add_argument("--min-user-ratings", type=int, default=0, help="Drop voters with fewer ratings.")

    support = argparse.ArgumentParser(add_help=False)
    support.add_argument("--min-support", type=int, default=0, help="Minimum co-raters per pairwise entry.")

    solver = argparse.ArgumentParser(add_help=False)
    solver.add_argument("--rank", type=int, default=Config.DEFAULT_RANK, help="Target rank (even).")
    solver.add_argument("--eta", type=float, default=Config.DEFAULT_STEP_LENGTH, help="SVP step length.")
    solver.add_argument("--tol", type=float, default=Config.DEFAULT_TOLERANCE, help="Relative residual tolerance.")
    solver.add_argument("--max-iters", type=int, default=Config.DEFAULT_MAX_ITERATIONS)

    trials = argparse.ArgumentParser(add_help=False)
    trials.add_argument("--trials", type=int, default=Config.DEFAULT_TRIALS)
    trials.add_argument("--workers", type=int, default=1, help="Parallel trial workers.")
    trials.add_argument("--output-dir", default=None, help="Write trial and summary tables here.")
    trials.add_argument("--progress", action="store_true", help="Show a progress bar.")

    parser = argparse.ArgumentParser(
        prog="skewrank", description="Rank items from ratings by skew-symmetric matrix completion."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("aggregate", parents=[common, model], help="Build the pairwise comparison matrix.")
    p.add_argument("--input", required=True, help="Ratings file: voter_id, item_id, rating.")
    p.add_argument("--output-dir", required=True)

    p = sub.add_parser("rank", parents=[common, model, support, solver], help="Aggregate, complete and rank.")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--input", help="Ratings file: voter_id, item_id, rating.")
    source.add_argument("--pairwise", help="Output directory of a previous 'aggregate' run.")
    source.add_argument("--demo", action="store_true", help="Use the built-in demo ratings.")
    p.add_argument("--output-dir", default=None)
    p.add_argument("--compare-rank", type=int, default=None, help="Also report the residual at this rank.")
    p.add_argument("--strict-convergence", action="store_true", help="Exit with code 5 if SVP does not converge.")
    p.add_argument("--top", type=int, default=20, help="Number of ranked items to print.")

    p = sub.add_parser("analyze", parents=[common], help="Recompute diagnostics of a rank output.")
    p.add_argument("--input", required=True, help="Output directory of a previous 'rank' run.")
    p.add_argument("--beta", type=float, default=Config.DEFAULT_BETA)

    p = sub.add_parser("synth-recovery", parents=[common, solver, trials], help="Score recovery study.")
    p.add_argument("--n", type=int, default=100)
    p.add_argument(
        "--multipliers", type=_float_list, default=[1, 2, 3, 4, 5, 6, 7],
        help="Sample counts as multiples of n ln n, e.g. '1 2 3'.",
    )
    p.add_argument("--noise-eps", type=float, default=0.0)
    p.add_argument("--score-model", choices=["uniform_random", "uniform_spaced"], default=None)

    p = sub.add_parser("synth-irt", parents=[common, model, support, solver, trials], help="Item-response study.")
    p.add_argument("--users", type=int, default=1000)
    p.add_argument("--items", type=int, default=100)
    p.add_argument("--ratings-per-user", type=_float_list, default=[5.0])
    p.add_argument("--noise-eps", type=_float_list, default=[0.0, 0.25, 0.5, 0.75, 1.0])
    return parser


def _print_ranking(frame: pd.DataFrame, top: int) -> None:
    print(frame.head(top).to_string(index=False))
    if len(frame) > top:
        print(f"... {len(frame) - top} more items")


def run_aggregate(config: RunConfig, args: argparse.Namespace) -> int:
    pipeline = RankAggregationPipeline(config.model, config.solver, config.delimiter, config.seed)
    ratings = pipeline.prepare(pipeline.load_ratings(config.input))
    pairwise = pipeline.aggregate(ratings)
    pipeline.export_aggregate(pairwise, ratings.item_ids, config.output_dir, ratings.num_voters)
    print(f"{config.model.label}: {pairwise.num_pairs} item pairs over {pairwise.num_items} items")
    return EXIT_OK


def run_rank(config: RunConfig, args: argparse.Namespace) -> int:
    pipeline = RankAggregationPipeline(config.model, config.solver, config.delimiter, config.seed)
    if config.pairwise_dir:
        stored = formats.read_metadata(formats.output_paths(config.pairwise_dir)["metadata"])
        pipeline.model = ModelCode(stored["method"], stored["min_user_ratings"], config.model.min_support)
        pairwise, item_ids = pipeline.load_pairwise(config.pairwise_dir)
        result = pipeline.rank_pairwise(
            pairwise, item_ids, config.compare_rank, num_voters=stored.get("num_voters")
        )
    else:
        result = pipeline.rank(pipeline.load_ratings(config.input), config.compare_rank)

    if config.output_dir:
        pipeline.export_ranking(result, config.output_dir)

    _print_ranking(result.ranking.to_frame(), args.top)
    print(f"model: {result.model.label}")
    print(f"solver residual: {result.solver_residual:.6g} (iterations {result.solver.iterations})")
    print(f"score residual:  {result.score_residual.value:.6g}")
    for k, residual in sorted(result.rank_comparison.items()):
        print(f"rank {k} residual: {residual:.6g}")
    if result.coherence:
        print(f"coherence nu: {result.coherence.nu:.4g}")

    if not result.solver.converged and config.strict_convergence:
        logger.error("SVP did not converge")
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def run_analyze(config: RunConfig, args: argparse.Namespace) -> int:
    report = RankAggregationPipeline.analyze(config.input, beta=args.beta)
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK


def _write_tables(output_dir: Optional[str], prefix: str, summary, trials, delimiter: str) -> None:
    if not output_dir:
        return
    os.makedirs(output_dir, exist_ok=True)
    formats.write_table(summary, os.path.join(output_dir, f"{prefix}_summary.csv"), delimiter)
    formats.write_table(trials, os.path.join(output_dir, f"{prefix}_trials.csv"), delimiter)


def run_synth_recovery(config: RunConfig, args: argparse.Namespace) -> int:
    summary, trials = recovery_sweep(
        args.n,
        args.multipliers,
        noise_eps=args.noise_eps,
        score_model=args.score_model,
        seed=config.seed,
        trials=args.trials,
        solver_config=config.solver,
        workers=args.workers,
        progress=args.progress,
    )
    _write_tables(config.output_dir, "recovery", summary, trials, config.delimiter)
    print(summary.to_string(index=False))
    return EXIT_OK


def run_synth_irt(config: RunConfig, args: argparse.Namespace) -> int:
    base = IRTSpec(
        num_users=args.users,
        num_items=args.items,
        avg_ratings_per_user=max(args.ratings_per_user),
        seed=config.seed,
        trials=args.trials,
        method=config.model.method.code,
        min_support=config.model.min_support,
        rank=config.solver.rank,
    )
    summary, trials = irt_sweep(
        base,
        args.noise_eps,
        args.ratings_per_user,
        solver_config=config.solver,
        workers=args.workers,
        progress=args.progress,
    )
    _write_tables(config.output_dir, "irt", summary, trials, config.delimiter)
    print(summary.to_string(index=False))
    return EXIT_OK


COMMANDS: Dict[str, Callable[[RunConfig, argparse.Namespace], int]] = {
    "aggregate": run_aggregate,
    "rank": run_rank,
    "analyze": run_analyze,
    "synth-recovery": run_synth_recovery,
    "synth-irt": run_synth_irt,
}


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run one command and return its exit code.

    Exit codes: 0 success, 2 usage, 3 unreadable or malformed input,
    4 domain, configuration or empty-constraint errors, 5 non-convergence
    under --strict-convergence.
    """
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose)

    try:
        validate_config()
        config = RunConfig.from_args(args)
        return COMMANDS[args.command](config, args)
    except RatingsParseError as e:
        logger.error(f"Could not read input: {e}")
        return EXIT_PARSE
    except KeyError as e:
        logger.error(f"Stored metadata is missing the field {e}")
        return EXIT_PARSE
    except (DomainError, ConfigurationError, EmptySampleSetError) as e:
        logger.error(str(e))
        return EXIT_DOMAIN
    except SkewRankError as e:
        logger.error(f"skewrank error: {e}")
        return 1
    except OSError as e:
        logger.error(f"Could not read input: {e}")
        return EXIT_PARSE

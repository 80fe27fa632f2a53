"""
Command line entry point.

    orgdesign run --dbs 12 --algo hga --seed 3 --out run.json
    orgdesign experiment --config experiment_config.json --out-dir results/
    orgdesign enumerate --dbs 6 --max-depth 3 --count-only
    orgdesign stats --reports a.json b.json
    orgdesign encode --tree tree.json
    orgdesign decode --genome "2 2 3 1 2 3" --max-depth 3
"""

import argparse
import json
import logging
import sys
import time
import traceback
from pathlib import Path
from typing import List, Optional

from .engine import Algorithm, ConfigError, GAConfig, evaluate_genome, run
from .genome import (
    GenomeError,
    OrganizationTree,
    decode,
    encode,
    format_genome,
    parse_genome,
    simplify,
)
from .harness import (
    DEFAULT_ENUMERATION_BUDGET,
    HarnessError,
    ReportFormatError,
    SpaceTooLarge,
    best_by_height,
    brute_force_best,
    count_canonical,
    enumerate_canonical_genomes,
    enumerate_genomes,
    load_experiment_config,
    recompute_report,
    run_experiment,
)
from .metrics import MetricsError
from .report_generator import REPORT_FORMATS, NumpyEncoder, ReportGenerator, read_report, write_report
from .utility_models import EnvironmentParams, InfeasibleOrganization, InformationRetrievalModel, ModelError
from .validation import (
    validate_environment,
    validate_experiment_config,
    validate_run_args,
    verify_prerequisites,
)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
LOG_DATE_FORMAT = '%Y-%m-%d %H:%M:%S'

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2
EXIT_IO = 3
EXIT_INTERRUPTED = 130

DEFAULT_CONFIG_PATH = Path(__file__).parent / "experiment_config.json"

logger = logging.getLogger("OrgDesign.CLI")


class UsageError(Exception):
    """Raised for invalid command-line input detected after parsing."""
    pass


class ArgumentParser(argparse.ArgumentParser):
    """argparse parser that exits with the usage code 1 instead of 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def configure_logging(level: str = "INFO", log_file: Optional[str] = None) -> None:
    formatter = logging.Formatter(LOG_FORMAT, LOG_DATE_FORMAT)
    root_logger = logging.getLogger()
    for handler in list(root_logger.handlers):
        root_logger.removeHandler(handler)

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(formatter)
    root_logger.addHandler(console_handler)

    if log_file:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(log_file)
        file_handler.setFormatter(formatter)
        root_logger.addHandler(file_handler)

    root_logger.setLevel(getattr(logging, level))


def _load_json(path: str):
    with open(path, "r", encoding="utf-8") as f:
        try:
            return json.load(f)
        except json.JSONDecodeError as e:
            raise UsageError(f"{path} is not valid JSON: {e}")


def _check(status: dict, what: str) -> None:
    for warning in status.get("warnings", []):
        logger.warning(f"{what}: {warning}")
    if status["status"] == "error":
        for error in status["errors"]:
            logger.error(f"{what}: {error}")
        raise UsageError(f"Invalid {what}: {status['message']}")


def _load_environment(path: Optional[str]) -> EnvironmentParams:
    raw = _load_json(path) if path else {}
    _check(validate_environment(raw), "environment")
    return EnvironmentParams.from_dict(raw)


def cmd_run(args: argparse.Namespace) -> int:
    _check(
        validate_run_args(args.dbs, args.max_depth, args.pop, args.evals, args.mutation_rate, args.rts_window),
        "run parameters",
    )
    env = _load_environment(args.env)
    cfg = GAConfig(
        leaf_count=args.dbs,
        max_depth=args.max_depth,
        algorithm=args.algo,
        population_size=args.pop,
        max_evaluations=args.evals,
        mutation_rate=args.mutation_rate,
        rts_window=args.rts_window,
        seed=args.seed,
    )
    model = InformationRetrievalModel(env)

    start_time = time.time()
    result = run(cfg, model)
    logger.info(f"Run completed in {time.time() - start_time:.2f}s")

    print(f"best_fitness {result.best_fitness:.6f}")
    print(f"best_genome {format_genome(result.best_genome)}")
    print(f"canonical_genome {format_genome(result.best_canonical_genome)}")
    print(f"evaluations {result.evaluations_used}")

    if args.out:
        payload = {"config": cfg.to_dict(), "env": env.to_dict(), "result": result.to_dict()}
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", encoding="utf-8") as f:
            json.dump(payload, f, indent=2, sort_keys=True, cls=NumpyEncoder)
        logger.info(f"Run result written to {out}")

    if result.best_fitness <= 0:
        logger.error("No feasible organization found: every evaluated organization saturates some agent")
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_experiment(args: argparse.Namespace) -> int:
    config_path = args.config or str(DEFAULT_CONFIG_PATH)
    raw = _load_json(config_path)
    _check(validate_experiment_config(raw), "experiment configuration")
    config = load_experiment_config(config_path)
    if args.workers is not None:
        config.workers = args.workers
    if args.runs is not None:
        config.runs_per_case = args.runs

    start_time = time.time()
    report = run_experiment(config)
    logger.info(f"Experiment completed in {time.time() - start_time:.2f}s")

    paths = ReportGenerator(args.out_dir).generate(report, formats=args.formats, plots=not args.no_plots)
    for name, path in sorted(paths.items()):
        print(f"{name} {path}")
    if report.failures:
        logger.warning(f"{len(report.failures)} run(s) failed; see the report's failures list")
    return EXIT_OK


def cmd_enumerate(args: argparse.Namespace) -> int:
    if args.best or args.by_height:
        model = InformationRetrievalModel(_load_environment(args.env))
        if args.by_height:
            for height, result in best_by_height(args.dbs, args.max_depth, model, args.budget).items():
                print(f"height {height} utility {result.utility:.6f} candidates {result.candidates} "
                      f"genome {format_genome(result.genome)}")
        if args.best:
            genome, utility = brute_force_best(args.dbs, args.max_depth, model, args.budget)
            print(f"best utility {utility:.6f} genome {format_genome(genome)}")
        return EXIT_OK

    if args.count_only:
        total = sum(1 for _ in enumerate_genomes(args.dbs, args.max_depth, args.budget))
        print(f"genomes {total}")
        print(f"canonical {count_canonical(args.dbs, args.max_depth, args.budget)}")
        return EXIT_OK

    stream = enumerate_canonical_genomes if args.canonical else enumerate_genomes
    for genome in stream(args.dbs, args.max_depth, args.budget):
        print(format_genome(genome))
    return EXIT_OK


def cmd_stats(args: argparse.Namespace) -> int:
    reports = [read_report(path) for path in args.reports]
    merged = recompute_report(reports)
    sys.stdout.write(write_report(merged, "csv", args.out))
    for comparison in merged.comparisons:
        result = comparison.result
        print(f"# wilcoxon {comparison.first} {comparison.second} "
              f"W={result.statistic:g} n={result.n_effective} p={result.p_two_sided:.10g}")
    return EXIT_OK


def cmd_encode(args: argparse.Namespace) -> int:
    tree = OrganizationTree.from_dict(_load_json(args.tree))
    genome = encode(tree, args.max_depth)
    if args.simplify:
        genome = simplify(genome)
    print(format_genome(genome))
    return EXIT_OK


def cmd_decode(args: argparse.Namespace) -> int:
    genome = parse_genome(args.genome, args.max_depth)
    if args.simplify:
        genome = simplify(genome)
    tree = decode(genome)
    payload = tree.to_dict()
    if args.evaluate:
        payload["utility"] = evaluate_genome(genome, InformationRetrievalModel(_load_environment(args.env)))
    print(json.dumps(payload, indent=2, sort_keys=True, cls=NumpyEncoder))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = ArgumentParser(prog="orgdesign", description="Evolve hierarchical multi-agent organizations")
    parser.add_argument('--log-level', type=str, choices=['DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'],
                        default='INFO', help='Set the logging level')
    parser.add_argument('--log-file', type=str, default=None, help='Also write log records to this file')
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    p = subparsers.add_parser("run", help="Run one optimization")
    p.add_argument("--dbs", type=int, required=True, help="Number of databases N")
    p.add_argument("--max-depth", type=int, default=4, help="Maximum hierarchy depth M")
    p.add_argument("--algo", type=str.lower, choices=[a.value for a in Algorithm], default="hga")
    p.add_argument("--pop", type=int, default=50, help="Population size")
    p.add_argument("--evals", type=int, default=2000, help="Candidate-evaluation budget")
    p.add_argument("--mutation-rate", type=float, default=0.1)
    p.add_argument("--rts-window", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--env", type=str, default=None, help="JSON file with environment parameters")
    p.add_argument("--out", type=str, default=None, help="Write the run result as JSON")
    p.set_defaults(handler=cmd_run)

    p = subparsers.add_parser("experiment", help="Run a batch experiment and write reports")
    p.add_argument("--config", type=str, default=None, help="Experiment JSON (defaults to the packaged schedule)")
    p.add_argument("--out-dir", type=str, required=True)
    p.add_argument("--workers", type=int, default=None, help="Worker processes for independent runs")
    p.add_argument("--runs", type=int, default=None, help="Override runs_per_case")
    p.add_argument("--formats", nargs="+", choices=list(REPORT_FORMATS), default=list(REPORT_FORMATS))
    p.add_argument("--no-plots", action="store_true", help="Skip convergence plots")
    p.set_defaults(handler=cmd_experiment)

    p = subparsers.add_parser("enumerate", help="Enumerate the genome space")
    p.add_argument("--dbs", type=int, required=True)
    p.add_argument("--max-depth", type=int, required=True)
    p.add_argument("--count-only", action="store_true", help="Print genome and canonical genome counts")
    p.add_argument("--canonical", action="store_true", help="Only list simplified genomes")
    p.add_argument("--best", action="store_true", help="Print the brute-force optimum")
    p.add_argument("--by-height", action="store_true", help="Print the best organization of every height")
    p.add_argument("--env", type=str, default=None, help="JSON file with environment parameters")
    p.add_argument("--budget", type=int, default=DEFAULT_ENUMERATION_BUDGET, help="Largest space to enumerate")
    p.set_defaults(handler=cmd_enumerate)

    p = subparsers.add_parser("stats", help="Recompute statistics from JSON reports")
    p.add_argument("--reports", nargs="+", required=True)
    p.add_argument("--out", type=str, default=None, help="Also write the CSV table to this file")
    p.set_defaults(handler=cmd_stats)

    p = subparsers.add_parser("encode", help="Encode a tree JSON file as a genome")
    p.add_argument("--tree", type=str, required=True)
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--simplify", action="store_true")
    p.set_defaults(handler=cmd_encode)

    p = subparsers.add_parser("decode", help="Decode a genome into a tree JSON document")
    p.add_argument("--genome", type=str, required=True, help='Digits separated by spaces, e.g. "2 2 3 1 2 3"')
    p.add_argument("--max-depth", type=int, required=True)
    p.add_argument("--simplify", action="store_true")
    p.add_argument("--evaluate", action="store_true", help="Include the utility under the default model")
    p.add_argument("--env", type=str, default=None)
    p.set_defaults(handler=cmd_decode)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Parse arguments, dispatch to the subcommand and map failures to exit codes.

    Returns:
        0 success, 1 usage or configuration error, 2 infeasible organization or
        enumeration space too large, 3 I/O error, 130 interrupted
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_OK

    configure_logging(args.log_level, args.log_file)

    prerequisites = verify_prerequisites()
    if prerequisites["status"] == "error":
        logger.error(f"Prerequisite check failed: {prerequisites['message']}")
        return EXIT_USAGE
    if prerequisites["missing_optional"]:
        logger.warning(f"Missing optional packages: {', '.join(prerequisites['missing_optional'])}")

    try:
        return args.handler(args)
    except KeyboardInterrupt:
        logger.warning("Interrupted by user")
        return EXIT_INTERRUPTED
    except (SpaceTooLarge, InfeasibleOrganization) as e:
        logger.error(str(e))
        return EXIT_INFEASIBLE
    except ReportFormatError as e:
        logger.error(str(e))
        return EXIT_USAGE
    except OSError as e:
        logger.error(f"I/O error: {e}")
        return EXIT_IO
    except (UsageError, ConfigError, GenomeError, ModelError, MetricsError, HarnessError, ValueError) as e:
        logger.error(str(e))
        return EXIT_USAGE
    except Exception as e:
        logger.critical(f"Unhandled exception: {str(e)}")
        logger.critical(traceback.format_exc())
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

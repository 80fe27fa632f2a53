"""
Experiment harness and brute-force oracles.

The oracles enumerate the genome space (or just its canonical part) to find
the true optimum for small instances. The experiment runner executes every
(case, algorithm, run) cell with an independently derived seed, anchors PRE
to the best known fitness per case and compares algorithms with the exact
signed-rank test.
"""

import hashlib
import json
import logging
import pickle
import traceback
from concurrent.futures import Future, ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations, product
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple, Union

from .engine import Algorithm, ConfigError, GAConfig, RunResult, run
from .genome import Genome, decode
from .metrics import (
    DEFAULT_RELATIVE_TOLERANCE,
    WilcoxonResult,
    summarize_case,
    wilcoxon_signed_rank,
)
from .utility_models.base_model import as_utility_model
from .utility_models.ir_model import EnvironmentParams, InformationRetrievalModel

logger = logging.getLogger("OrgDesign.Harness")

DEFAULT_ENUMERATION_BUDGET = 2 ** 26


class HarnessError(Exception):
    """Base class for harness errors."""
    pass


class SpaceTooLarge(HarnessError):
    """Raised when M^(N-1) exceeds the enumeration budget."""

    def __init__(self, size: int, budget: int):
        self.size = size
        self.budget = budget
        super().__init__(f"Genome space of {size:,} exceeds the enumeration budget of {budget:,}")


class ReportFormatError(HarnessError):
    """Raised for unknown report formats or unreadable report files."""
    pass


@dataclass(frozen=True)
class CaseSpec:
    leaf_count: int
    population_size: int
    max_evaluations: int

    def to_dict(self) -> Dict[str, int]:
        return {
            "dbs": self.leaf_count,
            "population_size": self.population_size,
            "max_evaluations": self.max_evaluations,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CaseSpec":
        return cls(
            leaf_count=int(data.get("dbs", data.get("leaf_count"))),
            population_size=int(data["population_size"]),
            max_evaluations=int(data["max_evaluations"]),
        )


# Population sizes and evaluation budgets per database count.
BENCHMARK_CASES: Tuple[CaseSpec, ...] = (
    CaseSpec(12, 50, 2_000),
    CaseSpec(14, 100, 5_000),
    CaseSpec(16, 200, 10_000),
    CaseSpec(18, 500, 50_000),
    CaseSpec(20, 500, 50_000),
    CaseSpec(22, 500, 50_000),
    CaseSpec(24, 500, 100_000),
    CaseSpec(26, 500, 100_000),
    CaseSpec(28, 500, 100_000),
    CaseSpec(30, 1_000, 200_000),
)


@dataclass
class ExperimentConfig:
    """
    Batch experiment configuration.

    Attributes:
        cases: Test cases (database count, population size, evaluation budget)
        algorithms: Operator suites to compare
        runs_per_case: Independent runs per case and algorithm
        max_depth: Maximum hierarchy depth M
        mutation_rate: Per-digit mutation probability
        rts_window: RTS window size
        base_seed: Seed from which every run's seed is derived
        env: Environment of the default utility model
        workers: Worker processes for independent runs (1 = sequential)
        success_tolerance: Relative tolerance for counting a run as a success
        enumeration_budget: Largest genome space the oracle will scan
        oracle: Whether to anchor fBest to the enumeration optimum when feasible
    """
    cases: List[CaseSpec] = field(default_factory=lambda: list(BENCHMARK_CASES))
    algorithms: List[Algorithm] = field(default_factory=lambda: list(Algorithm))
    runs_per_case: int = 10
    max_depth: int = 4
    mutation_rate: float = 0.1
    rts_window: int = 5
    base_seed: int = 0
    env: EnvironmentParams = field(default_factory=EnvironmentParams)
    workers: int = 1
    success_tolerance: float = DEFAULT_RELATIVE_TOLERANCE
    enumeration_budget: int = DEFAULT_ENUMERATION_BUDGET
    oracle: bool = True

    def __post_init__(self):
        self.algorithms = [Algorithm.from_name(name) for name in self.algorithms]
        if not self.cases:
            raise ConfigError("Experiment needs at least one case")
        if not self.algorithms:
            raise ConfigError("Experiment needs at least one algorithm")
        if len(set(self.algorithms)) != len(self.algorithms):
            raise ConfigError("Algorithms must not repeat")
        if self.runs_per_case < 1:
            raise ConfigError(f"runs_per_case must be >= 1, got {self.runs_per_case}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.success_tolerance < 0:
            raise ConfigError(f"success_tolerance must be >= 0, got {self.success_tolerance}")

    def ga_config(self, case: CaseSpec, algorithm: Algorithm, run_index: int) -> GAConfig:
        return GAConfig(
            leaf_count=case.leaf_count,
            max_depth=self.max_depth,
            algorithm=algorithm,
            population_size=case.population_size,
            max_evaluations=case.max_evaluations,
            mutation_rate=self.mutation_rate,
            rts_window=self.rts_window,
            seed=derive_seed(self.base_seed, case.leaf_count, algorithm, run_index),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "cases": [case.to_dict() for case in self.cases],
            "algorithms": [algorithm.value for algorithm in self.algorithms],
            "runs_per_case": self.runs_per_case,
            "max_depth": self.max_depth,
            "mutation_rate": self.mutation_rate,
            "rts_window": self.rts_window,
            "base_seed": self.base_seed,
            "env": self.env.to_dict(),
            "workers": self.workers,
            "success_tolerance": self.success_tolerance,
            "enumeration_budget": self.enumeration_budget,
            "oracle": self.oracle,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        defaults = cls()
        cases = data.get("cases")
        return cls(
            cases=[CaseSpec.from_dict(case) for case in cases] if cases is not None else defaults.cases,
            algorithms=data.get("algorithms", defaults.algorithms),
            runs_per_case=int(data.get("runs_per_case", defaults.runs_per_case)),
            max_depth=int(data.get("max_depth", defaults.max_depth)),
            mutation_rate=float(data.get("mutation_rate", defaults.mutation_rate)),
            rts_window=int(data.get("rts_window", defaults.rts_window)),
            base_seed=int(data.get("base_seed", defaults.base_seed)),
            env=EnvironmentParams.from_dict(data.get("env")),
            workers=int(data.get("workers", defaults.workers)),
            success_tolerance=float(data.get("success_tolerance", defaults.success_tolerance)),
            enumeration_budget=int(data.get("enumeration_budget", defaults.enumeration_budget)),
            oracle=bool(data.get("oracle", defaults.oracle)),
        )


def load_experiment_config(path: Union[str, Path]) -> ExperimentConfig:
    """Read an experiment configuration from a JSON file."""
    with open(path, "r") as f:
        return ExperimentConfig.from_dict(json.load(f))


def derive_seed(base_seed: int, leaf_count: int, algorithm: Algorithm, run_index: int) -> int:
    """Stable per-run seed: base seed XOR a SHA-256 digest of the run coordinates."""
    key = f"{leaf_count}|{Algorithm.from_name(algorithm).value}|{run_index}".encode("utf-8")
    digest = int.from_bytes(hashlib.sha256(key).digest()[:8], "big")
    return (base_seed ^ digest) & (2 ** 63 - 1)


def _check_space(leaf_count: int, max_depth: int, budget: int) -> int:
    if leaf_count < 2 or max_depth < 1:
        raise HarnessError(f"Need N >= 2 and M >= 1, got N={leaf_count}, M={max_depth}")
    size = max_depth ** (leaf_count - 1)
    if size > budget:
        raise SpaceTooLarge(size, budget)
    return size


def enumerate_genomes(leaf_count: int, max_depth: int,
                      budget: int = DEFAULT_ENUMERATION_BUDGET) -> Iterator[Genome]:
    """
    Every genome for (N, M) exactly once, in lexicographic order.

    Raises:
        SpaceTooLarge: If M^(N-1) exceeds ``budget`` (raised before iterating)
    """
    _check_space(leaf_count, max_depth, budget)
    return (
        Genome(digits=digits, max_depth=max_depth)
        for digits in product(range(1, max_depth + 1), repeat=leaf_count - 1)
    )


def _canonical_runs(length: int, level: int, max_depth: int) -> Iterator[Tuple[int, ...]]:
    # Sequences with digits >= level whose maximal runs above `level` each
    # contain level+1 and are themselves canonical one level down.
    if length == 0:
        yield ()
        return
    if level == max_depth:
        yield (level,) * length
        return
    for head_length in range(length + 1):
        if head_length == 0:
            heads = [()]
        else:
            heads = [
                run for run in _canonical_runs(head_length, level + 1, max_depth)
                if level + 1 in run
            ]
        if head_length == length:
            yield from heads
            continue
        for head in heads:
            for tail in _canonical_runs(length - head_length - 1, level, max_depth):
                yield head + (level,) + tail


def enumerate_canonical_genomes(leaf_count: int, max_depth: int,
                                budget: int = DEFAULT_ENUMERATION_BUDGET) -> Iterator[Genome]:
    """
    Every fixed point of simplify for (N, M).

    These are exactly the distinct results of simplifying all M^(N-1)
    genomes, generated without visiting the rest of the space.

    Raises:
        SpaceTooLarge: If M^(N-1) exceeds ``budget``
    """
    _check_space(leaf_count, max_depth, budget)
    return (
        Genome(digits=digits, max_depth=max_depth)
        for digits in _canonical_runs(leaf_count - 1, 1, max_depth)
    )


def count_canonical(leaf_count: int, max_depth: int, budget: int = DEFAULT_ENUMERATION_BUDGET) -> int:
    """Size of the effective search space (distinct simplified genomes)."""
    return sum(1 for _ in enumerate_canonical_genomes(leaf_count, max_depth, budget))


@dataclass(frozen=True)
class OracleResult:
    genome: Optional[Genome]
    utility: float
    candidates: int


def _scan_canonical(leaf_count: int, max_depth: int, evaluator: Any,
                    budget: int) -> Dict[int, OracleResult]:
    model = as_utility_model(evaluator)
    best: Dict[int, Tuple[float, Genome]] = {}
    counts: Dict[int, int] = {}
    for genome in enumerate_canonical_genomes(leaf_count, max_depth, budget):
        tree = decode(genome)
        height = tree.depth
        utility = model.evaluate(tree)
        counts[height] = counts.get(height, 0) + 1
        if (
            height not in best
            or utility > best[height][0]
            or (utility == best[height][0] and genome.digits < best[height][1].digits)
        ):
            best[height] = (utility, genome)
    return {
        height: OracleResult(genome=best[height][1], utility=best[height][0], candidates=counts[height])
        for height in sorted(best)
    }


def best_by_height(leaf_count: int, max_depth: int, evaluator: Any,
                   budget: int = DEFAULT_ENUMERATION_BUDGET) -> Dict[int, OracleResult]:
    """
    Best canonical organization for every hierarchy height.

    Returns:
        Mapping height -> (best genome, its utility, number of canonical candidates of that height)
    """
    return _scan_canonical(leaf_count, max_depth, evaluator, budget)


def _overall_best(per_height: Dict[int, OracleResult]) -> OracleResult:
    winner = None
    for result in per_height.values():
        if (
            winner is None
            or result.utility > winner.utility
            or (result.utility == winner.utility and result.genome.digits < winner.genome.digits)
        ):
            winner = result
    total = sum(result.candidates for result in per_height.values())
    return OracleResult(genome=winner.genome, utility=winner.utility, candidates=total)


def brute_force_best(leaf_count: int, max_depth: int, evaluator: Any,
                     budget: int = DEFAULT_ENUMERATION_BUDGET) -> Tuple[Genome, float]:
    """
    Exhaustive optimum over all canonical genomes.

    Each canonical genome is evaluated once; among equal utilities the
    lexicographically smallest genome wins.

    Raises:
        SpaceTooLarge: If M^(N-1) exceeds ``budget``
    """
    best = _overall_best(_scan_canonical(leaf_count, max_depth, evaluator, budget))
    return best.genome, best.utility


@dataclass
class RunFailure:
    leaf_count: int
    algorithm: str
    run: int
    error_type: str
    message: str

    def to_dict(self) -> Dict[str, Any]:
        return {
            "leaf_count": self.leaf_count,
            "algorithm": self.algorithm,
            "run": self.run,
            "error_type": self.error_type,
            "message": self.message,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunFailure":
        return cls(**data)


@dataclass
class CellResult:
    """All runs of one algorithm on one case, with their APRE and SR."""
    leaf_count: int
    algorithm: str
    runs: List[RunResult] = field(default_factory=list)
    apre: Optional[float] = None
    sr: Optional[float] = None

    @property
    def per_run_best(self) -> List[float]:
        return [result.best_fitness for result in self.runs]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "leaf_count": self.leaf_count,
            "algorithm": self.algorithm,
            "apre_percent": self.apre,
            "sr": self.sr,
            "runs": [result.to_dict() for result in self.runs],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CellResult":
        return cls(
            leaf_count=int(data["leaf_count"]),
            algorithm=data["algorithm"],
            runs=[RunResult.from_dict(item) for item in data["runs"]],
            apre=data.get("apre_percent"),
            sr=data.get("sr"),
        )


@dataclass
class CaseSummary:
    """
    Best known fitness for one case and where it came from.

    ``canonical_genomes`` counts simplified genomes; it is not comparable to
    pruned organization counts of other design methods.
    """
    leaf_count: int
    population_size: int
    max_evaluations: int
    f_best: Optional[float]
    f_best_observed: Optional[float]
    f_best_oracle: Optional[float]
    f_best_source: str
    total_genomes: int
    canonical_genomes: Optional[int]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "leaf_count": self.leaf_count,
            "population_size": self.population_size,
            "max_evaluations": self.max_evaluations,
            "f_best": self.f_best,
            "f_best_observed": self.f_best_observed,
            "f_best_oracle": self.f_best_oracle,
            "f_best_source": self.f_best_source,
            "total_genomes": self.total_genomes,
            "canonical_genomes": self.canonical_genomes,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CaseSummary":
        return cls(**data)


@dataclass
class PairwiseComparison:
    first: str
    second: str
    result: WilcoxonResult

    def to_dict(self) -> Dict[str, Any]:
        return {"first": self.first, "second": self.second, **self.result.to_dict()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PairwiseComparison":
        return cls(first=data["first"], second=data["second"], result=WilcoxonResult.from_dict(data))


@dataclass
class ExperimentReport:
    config: Dict[str, Any]
    cases: List[CaseSummary] = field(default_factory=list)
    cells: List[CellResult] = field(default_factory=list)
    comparisons: List[PairwiseComparison] = field(default_factory=list)
    failures: List[RunFailure] = field(default_factory=list)

    def cell(self, leaf_count: int, algorithm: Union[str, Algorithm]) -> CellResult:
        name = Algorithm.from_name(algorithm).value
        for cell in self.cells:
            if cell.leaf_count == leaf_count and cell.algorithm == name:
                return cell
        raise KeyError(f"No cell for N={leaf_count}, algorithm {name}")

    def case(self, leaf_count: int) -> CaseSummary:
        for summary in self.cases:
            if summary.leaf_count == leaf_count:
                return summary
        raise KeyError(f"No case for N={leaf_count}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config": self.config,
            "cases": [summary.to_dict() for summary in self.cases],
            "cells": [cell.to_dict() for cell in self.cells],
            "wilcoxon": [comparison.to_dict() for comparison in self.comparisons],
            "failures": [failure.to_dict() for failure in self.failures],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentReport":
        return cls(
            config=data["config"],
            cases=[CaseSummary.from_dict(item) for item in data["cases"]],
            cells=[CellResult.from_dict(item) for item in data["cells"]],
            comparisons=[PairwiseComparison.from_dict(item) for item in data["wilcoxon"]],
            failures=[RunFailure.from_dict(item) for item in data.get("failures", [])],
        )


def _execute_run(task: Tuple[GAConfig, Any, int]) -> Tuple[str, Any]:
    cfg, evaluator, run_index = task
    context = f"[{cfg.algorithm.label} N={cfg.leaf_count} run {run_index}]"
    try:
        return "ok", run(cfg, evaluator)
    except Exception as e:
        logger.error(f"{context} Run failed: {e}")
        logger.debug(traceback.format_exc())
        return "error", (type(e).__name__, str(e))


def _is_picklable(obj: Any) -> bool:
    try:
        pickle.dumps(obj)
    except Exception:
        return False
    return True


def _collect(future: Future) -> Tuple[str, Any]:
    # Worker crashes and result transfer errors surface here, not in _execute_run.
    try:
        return future.result()
    except Exception as e:
        logger.error(f"Worker process failed: {type(e).__name__}: {e}")
        return "error", (type(e).__name__, str(e))


def _oracle_for_case(config: ExperimentConfig, case: CaseSpec, evaluator: Any) -> Optional[OracleResult]:
    if not config.oracle:
        return None
    try:
        result = _overall_best(_scan_canonical(case.leaf_count, config.max_depth, evaluator, config.enumeration_budget))
    except SpaceTooLarge as e:
        logger.info(f"[N={case.leaf_count}] Skipping enumeration oracle: {e}")
        return None
    logger.info(
        f"[N={case.leaf_count}] Enumeration optimum {result.utility:.4f} for [{result.genome}] "
        f"over {result.candidates:,} canonical genomes"
    )
    return result


def assemble_report(
    config: ExperimentConfig,
    runs: Dict[Tuple[int, str], List[RunResult]],
    oracles: Dict[int, Optional[OracleResult]],
    failures: Sequence[RunFailure] = (),
) -> ExperimentReport:
    """
    Derive fBest, APRE, SR and pairwise signed-rank tests from raw run results.

    Args:
        config: Experiment configuration (cases and algorithm order)
        runs: Run results keyed by (database count, algorithm name)
        oracles: Enumeration optimum per database count, None when unavailable
        failures: Runs that raised instead of finishing

    Returns:
        The assembled report
    """
    names = [algorithm.value for algorithm in config.algorithms]
    cases: List[CaseSummary] = []
    cells: List[CellResult] = []
    for case in config.cases:
        observed = [
            result.best_fitness
            for name in names
            for result in runs.get((case.leaf_count, name), [])
        ]
        f_observed = max(observed) if observed else None
        oracle = oracles.get(case.leaf_count)
        f_oracle = oracle.utility if oracle is not None else None
        candidates = [value for value in (f_observed, f_oracle) if value is not None]
        f_best = max(candidates) if candidates else None
        if f_oracle is not None and f_best == f_oracle:
            source = "enumeration"
        elif f_observed is not None:
            source = "observed"
        else:
            source = "none"
        cases.append(
            CaseSummary(
                leaf_count=case.leaf_count,
                population_size=case.population_size,
                max_evaluations=case.max_evaluations,
                f_best=f_best,
                f_best_observed=f_observed,
                f_best_oracle=f_oracle,
                f_best_source=source,
                total_genomes=config.max_depth ** (case.leaf_count - 1),
                canonical_genomes=oracle.candidates if oracle is not None else None,
            )
        )

        for name in names:
            cell = CellResult(leaf_count=case.leaf_count, algorithm=name,
                              runs=list(runs.get((case.leaf_count, name), [])))
            if cell.runs and f_best is not None and f_best > 0:
                cell.apre, cell.sr = summarize_case(cell.per_run_best, f_best, config.success_tolerance)
            elif cell.runs:
                logger.warning(f"[N={case.leaf_count}] Best known fitness is not positive; APRE/SR undefined")
            cells.append(cell)

    comparisons = []
    for first, second in combinations(names, 2):
        x, y = [], []
        for case in config.cases:
            a = next(c for c in cells if c.leaf_count == case.leaf_count and c.algorithm == first)
            b = next(c for c in cells if c.leaf_count == case.leaf_count and c.algorithm == second)
            if a.apre is not None and b.apre is not None:
                x.append(a.apre)
                y.append(b.apre)
        comparisons.append(PairwiseComparison(first=first, second=second, result=wilcoxon_signed_rank(x, y)))

    return ExperimentReport(
        config=config.to_dict(),
        cases=cases,
        cells=cells,
        comparisons=comparisons,
        failures=list(failures),
    )


def run_experiment(config: ExperimentConfig, evaluator: Any = None) -> ExperimentReport:
    """
    Execute every (case, algorithm, run) cell and build the report.

    Args:
        config: Experiment configuration
        evaluator: Utility model; defaults to the information-retrieval model
            for ``config.env``

    Returns:
        The experiment report; failed runs are listed in ``failures``
    """
    evaluator = as_utility_model(evaluator if evaluator is not None else InformationRetrievalModel(config.env))
    tasks = [
        (config.ga_config(case, algorithm, run_index), evaluator, run_index)
        for case in config.cases
        for algorithm in config.algorithms
        for run_index in range(config.runs_per_case)
    ]
    logger.info(
        f"Starting experiment: {len(config.cases)} cases x {len(config.algorithms)} algorithms x "
        f"{config.runs_per_case} runs ({len(tasks)} runs, {config.workers} worker(s))"
    )

    workers = config.workers
    if workers > 1 and not _is_picklable(evaluator):
        logger.warning(
            f"Evaluator {type(evaluator).__name__} cannot be sent to worker processes; running sequentially"
        )
        workers = 1

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            futures = [executor.submit(_execute_run, task) for task in tasks]
            outcomes = [_collect(future) for future in futures]
    else:
        outcomes = [_execute_run(task) for task in tasks]

    runs: Dict[Tuple[int, str], List[RunResult]] = {}
    failures: List[RunFailure] = []
    for (cfg, _, run_index), (status, payload) in zip(tasks, outcomes):
        key = (cfg.leaf_count, cfg.algorithm.value)
        runs.setdefault(key, [])
        if status == "ok":
            runs[key].append(payload)
        else:
            error_type, message = payload
            failures.append(RunFailure(cfg.leaf_count, cfg.algorithm.value, run_index, error_type, message))

    oracles = {case.leaf_count: _oracle_for_case(config, case, evaluator) for case in config.cases}
    report = assemble_report(config, runs, oracles, failures)
    logger.info(f"Experiment finished with {len(failures)} failed run(s)")
    return report


def recompute_report(reports: Sequence[ExperimentReport]) -> ExperimentReport:
    """
    Recompute statistics from the stored per-run data of one or more reports.

    Runs of matching (case, algorithm) cells are pooled; the configuration of
    the first report supplies the case list and algorithm order, extended by
    any cases or algorithms only the later reports contain.
    """
    if not reports:
        raise HarnessError("No reports to recompute")
    config = ExperimentConfig.from_dict(reports[0].config)
    for report in reports[1:]:
        extra = ExperimentConfig.from_dict(report.config)
        known_cases = {case.leaf_count for case in config.cases}
        config.cases.extend(case for case in extra.cases if case.leaf_count not in known_cases)
        config.algorithms.extend(a for a in extra.algorithms if a not in config.algorithms)

    runs: Dict[Tuple[int, str], List[RunResult]] = {}
    oracles: Dict[int, Optional[OracleResult]] = {}
    failures: List[RunFailure] = []
    for report in reports:
        for cell in report.cells:
            runs.setdefault((cell.leaf_count, cell.algorithm), []).extend(cell.runs)
        for summary in report.cases:
            if summary.f_best_oracle is None:
                oracles.setdefault(summary.leaf_count, None)
                continue
            current = oracles.get(summary.leaf_count)
            if current is None or summary.f_best_oracle > current.utility:
                # Only the utility and candidate count survive serialization.
                oracles[summary.leaf_count] = OracleResult(
                    genome=None,
                    utility=summary.f_best_oracle,
                    candidates=summary.canonical_genomes or 0,
                )
        failures.extend(report.failures)
    return assemble_report(config, runs, oracles, failures)

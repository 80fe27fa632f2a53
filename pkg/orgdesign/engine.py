"""
Steady-state genetic algorithm over organization genomes.

Each step draws two parents uniformly, produces two offspring with the
configured operator suite, evaluates them on their simplified genomes and
offers each to the population through restricted tournament replacement.
The run stops when the candidate-evaluation budget is spent; the initial
population counts against it.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from .genome import Genome, decode, genome_distance, random_genome, simplify
from .operators import (
    bitwise_mutation,
    hierarchical_crossover,
    one_point_crossover,
    small_perturbation_mutation,
    two_point_crossover,
)
from .utility_models.base_model import BaseUtilityModel, as_utility_model

logger = logging.getLogger("OrgDesign.Engine")


class ConfigError(ValueError):
    """Raised for inconsistent algorithm configuration."""
    pass


class WindowTooLarge(ValueError):
    """Raised when the RTS window does not fit the population."""
    pass


class Algorithm(str, Enum):
    HGA = "hga"
    SGA1 = "sga1"
    SGA2 = "sga2"

    @classmethod
    def from_name(cls, name: Any) -> "Algorithm":
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).lower())
        except ValueError:
            raise ConfigError(f"Unknown algorithm {name!r}; expected one of hga, sga1, sga2")

    @property
    def label(self) -> str:
        return self.name


Crossover = Callable[[Genome, Genome, Any], Tuple[Genome, Genome]]
Mutation = Callable[[Genome, float, Any], Genome]

OPERATOR_SUITES: Dict[Algorithm, Tuple[Crossover, Mutation]] = {
    Algorithm.HGA: (hierarchical_crossover, small_perturbation_mutation),
    Algorithm.SGA1: (one_point_crossover, bitwise_mutation),
    Algorithm.SGA2: (two_point_crossover, bitwise_mutation),
}


@dataclass
class GAConfig:
    """
    Configuration of a single optimization run.

    Attributes:
        leaf_count: Number of databases N
        max_depth: Maximum hierarchy depth M
        algorithm: Operator suite (HGA, SGA1 or SGA2)
        population_size: Number of individuals
        max_evaluations: Candidate-evaluation budget, initial population included
        mutation_rate: Per-digit mutation probability
        rts_window: Window size w of restricted tournament replacement
        seed: Seed of the run's random generator
    """
    leaf_count: int
    max_depth: int
    algorithm: Algorithm = Algorithm.HGA
    population_size: int = 50
    max_evaluations: int = 2000
    mutation_rate: float = 0.1
    rts_window: int = 5
    seed: int = 0

    def __post_init__(self):
        self.algorithm = Algorithm.from_name(self.algorithm)
        if self.leaf_count < 2:
            raise ConfigError(f"Need at least 2 databases, got {self.leaf_count}")
        if self.max_depth < 1:
            raise ConfigError(f"max_depth must be at least 1, got {self.max_depth}")
        if self.population_size < 2:
            raise ConfigError(f"Population size must be >= 2, got {self.population_size}")
        if self.max_evaluations < self.population_size:
            raise ConfigError(
                f"Evaluation budget ({self.max_evaluations}) must cover the initial population ({self.population_size})"
            )
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ConfigError(f"Mutation rate must be between 0 and 1, got {self.mutation_rate}")
        if not 1 <= self.rts_window <= self.population_size:
            raise ConfigError(
                f"RTS window must be between 1 and the population size ({self.population_size}), got {self.rts_window}"
            )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "leaf_count": self.leaf_count,
            "max_depth": self.max_depth,
            "algorithm": self.algorithm.value,
            "population_size": self.population_size,
            "max_evaluations": self.max_evaluations,
            "mutation_rate": self.mutation_rate,
            "rts_window": self.rts_window,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class Individual:
    genome: Genome
    fitness: float


@dataclass
class RunResult:
    """
    Outcome of one run.

    Attributes:
        best_genome: Best genome ever evaluated (as held in the population)
        best_fitness: Its utility
        evaluations_used: Candidate evaluations consumed
        trajectory: (evaluation index, best-so-far fitness) at every improvement
        seed: Seed the run was started with
    """
    best_genome: Genome
    best_fitness: float
    evaluations_used: int
    trajectory: List[Tuple[int, float]] = field(default_factory=list)
    seed: int = 0

    @property
    def best_canonical_genome(self) -> Genome:
        return simplify(self.best_genome)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "best_genome": self.best_genome.to_dict(),
            "best_canonical_genome": self.best_canonical_genome.to_dict(),
            "best_fitness": self.best_fitness,
            "evaluations_used": self.evaluations_used,
            "trajectory": [[index, value] for index, value in self.trajectory],
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunResult":
        return cls(
            best_genome=Genome.from_dict(data["best_genome"]),
            best_fitness=float(data["best_fitness"]),
            evaluations_used=int(data["evaluations_used"]),
            trajectory=[(int(index), float(value)) for index, value in data["trajectory"]],
            seed=int(data["seed"]),
        )


def evaluate_genome(genome: Genome, evaluator: Any) -> float:
    """Utility of the organization a genome stands for (its simplified decoding)."""
    return as_utility_model(evaluator).evaluate(decode(simplify(genome)))


class EvaluationTracker:
    """
    Budgeted access to the evaluator.

    Counts every call, remembers the best individual ever seen and records
    the best-so-far trajectory.
    """
    def __init__(self, evaluator: Any, budget: int):
        self.evaluator: BaseUtilityModel = as_utility_model(evaluator)
        self.budget = budget
        self.used = 0
        self.best: Optional[Individual] = None
        self.trajectory: List[Tuple[int, float]] = []

    @property
    def remaining(self) -> int:
        return self.budget - self.used

    def evaluate(self, genome: Genome) -> Individual:
        if self.used >= self.budget:
            raise ConfigError(f"Evaluation budget of {self.budget} exhausted")
        fitness = evaluate_genome(genome, self.evaluator)
        self.used += 1
        individual = Individual(genome=genome, fitness=fitness)
        if self.best is None or fitness > self.best.fitness:
            self.best = individual
            self.trajectory.append((self.used, fitness))
        return individual


def init_population(cfg: GAConfig, evaluator: Any, rng: Any = None) -> List[Individual]:
    """
    Create and evaluate ``cfg.population_size`` random individuals.

    Args:
        cfg: Run configuration
        evaluator: Utility model, callable, or an EvaluationTracker to charge
        rng: numpy Generator or seed; defaults to ``cfg.seed``

    Returns:
        The evaluated initial population
    """
    rng = np.random.default_rng(cfg.seed if rng is None else rng)
    tracker = evaluator if isinstance(evaluator, EvaluationTracker) else EvaluationTracker(evaluator, cfg.max_evaluations)
    return [
        tracker.evaluate(random_genome(cfg.leaf_count, cfg.max_depth, rng))
        for _ in range(cfg.population_size)
    ]


def rts_replace(population: List[Individual], offspring: Individual, window: int, rng: Any) -> List[Individual]:
    """
    Restricted tournament replacement, applied in place.

    ``window`` members are sampled without replacement; the one closest to the
    offspring in Hamming distance (earliest sample on ties) is replaced only
    if the offspring is strictly fitter.

    Returns:
        The same population list

    Raises:
        WindowTooLarge: If the window is not within 1..len(population)
    """
    if not 1 <= window <= len(population):
        raise WindowTooLarge(f"Window {window} does not fit a population of {len(population)}")
    rng = np.random.default_rng(rng)
    sampled = rng.choice(len(population), size=window, replace=False)
    distances = [genome_distance(population[i].genome, offspring.genome) for i in sampled]
    victim = int(sampled[int(np.argmin(distances))])
    if offspring.fitness > population[victim].fitness:
        population[victim] = offspring
    return population


def _crossover(cfg: GAConfig, p1: Genome, p2: Genome, rng: np.random.Generator) -> Tuple[Genome, Genome]:
    crossover, _ = OPERATOR_SUITES[cfg.algorithm]
    # Positional crossovers have no cut point on a single digit.
    if cfg.algorithm is not Algorithm.HGA and len(p1) < 2:
        return p1, p2
    return crossover(p1, p2, rng)


def run(cfg: GAConfig, evaluator: Any, rng: Any = None) -> RunResult:
    """
    Run the genetic algorithm until the evaluation budget is spent.

    Args:
        cfg: Run configuration
        evaluator: Utility model or callable over organizations
        rng: numpy Generator or seed; defaults to ``cfg.seed``

    Returns:
        Best individual ever evaluated, with its trajectory
    """
    rng = np.random.default_rng(cfg.seed if rng is None else rng)
    context = f"[{cfg.algorithm.label} N={cfg.leaf_count} seed={cfg.seed}]"
    logger.info(
        f"{context} Starting run: population {cfg.population_size}, budget {cfg.max_evaluations}, "
        f"mutation rate {cfg.mutation_rate}, window {cfg.rts_window}"
    )

    tracker = EvaluationTracker(evaluator, cfg.max_evaluations)
    population = init_population(cfg, tracker, rng)
    _, mutate = OPERATOR_SUITES[cfg.algorithm]

    generation = 0
    while tracker.remaining > 0:
        generation += 1
        first, second = rng.choice(len(population), size=2, replace=False)
        offspring = _crossover(cfg, population[first].genome, population[second].genome, rng)
        for child in offspring:
            if tracker.remaining == 0:
                break
            child = mutate(child, cfg.mutation_rate, rng)
            rts_replace(population, tracker.evaluate(child), cfg.rts_window, rng)
        logger.debug(f"{context} Generation {generation}: best {tracker.best.fitness:.4f} after {tracker.used} evaluations")

    logger.info(
        f"{context} Finished after {tracker.used} evaluations: best {tracker.best.fitness:.4f} "
        f"for genome [{tracker.best.genome}]"
    )
    return RunResult(
        best_genome=tracker.best.genome,
        best_fitness=tracker.best.fitness,
        evaluations_used=tracker.used,
        trajectory=list(tracker.trajectory),
        seed=cfg.seed,
    )

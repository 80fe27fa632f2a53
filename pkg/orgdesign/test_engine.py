import numpy as np
import pytest

from orgdesign.engine import (
    Algorithm,
    ConfigError,
    EvaluationTracker,
    GAConfig,
    Individual,
    RunResult,
    WindowTooLarge,
    evaluate_genome,
    init_population,
    rts_replace,
    run,
)
from orgdesign.genome import Genome, random_genome, simplify
from orgdesign.harness import brute_force_best
from orgdesign.utility_models import InformationRetrievalModel


class CountingModel:
    """Default evaluator that remembers how often it was asked."""

    def __init__(self):
        self.model = InformationRetrievalModel()
        self.calls = 0

    def __call__(self, tree):
        self.calls += 1
        return self.model.evaluate(tree)


def config(**overrides):
    settings = dict(leaf_count=8, max_depth=4, population_size=20, max_evaluations=200, seed=3)
    settings.update(overrides)
    return GAConfig(**settings)


class TestGAConfig:
    def test_algorithm_from_name(self):
        assert config(algorithm="SGA2").algorithm is Algorithm.SGA2
        assert Algorithm.from_name("hga").label == "HGA"

    @pytest.mark.parametrize("overrides", [
        {"leaf_count": 1},
        {"max_depth": 0},
        {"population_size": 1},
        {"max_evaluations": 19},
        {"mutation_rate": 1.5},
        {"rts_window": 0},
        {"rts_window": 21},
        {"algorithm": "sga3"},
    ])
    def test_rejects_inconsistent_settings(self, overrides):
        with pytest.raises(ConfigError):
            config(**overrides)

    def test_to_dict(self):
        data = config(algorithm=Algorithm.SGA1).to_dict()
        assert data["algorithm"] == "sga1"
        assert data["rts_window"] == 5


class TestInitPopulation:
    def test_charges_one_evaluation_per_individual(self):
        cfg = config(leaf_count=12, population_size=50, max_evaluations=2000)
        tracker = EvaluationTracker(InformationRetrievalModel(), cfg.max_evaluations)
        population = init_population(cfg, tracker)
        assert len(population) == 50
        assert tracker.used == 50
        assert all(len(ind.genome) == 11 for ind in population)

    def test_seeded_determinism(self):
        cfg = config()
        assert init_population(cfg, InformationRetrievalModel()) == init_population(cfg, InformationRetrievalModel())

    def test_single_genome_space(self):
        cfg = config(leaf_count=2, max_depth=1, population_size=5, max_evaluations=5, rts_window=5)
        population = init_population(cfg, InformationRetrievalModel())
        assert {ind.genome.digits for ind in population} == {(1,)}

    def test_fitness_is_taken_on_simplified_genome(self):
        model = InformationRetrievalModel()
        for ind in init_population(config(), model):
            assert ind.fitness == evaluate_genome(simplify(ind.genome), model)


class TestEvaluationTracker:
    def test_budget_is_enforced(self):
        tracker = EvaluationTracker(InformationRetrievalModel(), 1)
        tracker.evaluate(Genome((2,), 2))
        with pytest.raises(ConfigError):
            tracker.evaluate(Genome((2,), 2))

    def test_trajectory_records_improvements_only(self):
        tracker = EvaluationTracker(InformationRetrievalModel(), 10)
        for digits in [(2, 2, 2), (2, 1, 2), (2, 2, 2), (2, 2, 3)]:
            tracker.evaluate(Genome(digits, 3))
        values = [value for _, value in tracker.trajectory]
        assert values == sorted(values)
        assert len(set(values)) == len(values)
        assert tracker.best.fitness == values[-1]


def population_of(digit_rows, fitness):
    return [Individual(genome=Genome(tuple(row), 3), fitness=f) for row, f in zip(digit_rows, fitness)]


class TestRtsReplace:
    ROWS = [(1, 1, 1), (2, 2, 2), (3, 3, 3), (1, 2, 3), (3, 2, 1)]

    def test_weaker_offspring_leaves_population_unchanged(self):
        population = population_of(self.ROWS, [10.0] * 5)
        before = list(population)
        rts_replace(population, Individual(Genome((2, 2, 2), 3), 5.0), 5, 0)
        assert population == before

    def test_equal_fitness_does_not_replace(self):
        population = population_of(self.ROWS, [10.0] * 5)
        before = list(population)
        rts_replace(population, Individual(Genome((2, 2, 2), 3), 10.0), 5, 0)
        assert population == before

    def test_full_window_replaces_the_identical_genome(self):
        population = population_of(self.ROWS, [10.0] * 5)
        offspring = Individual(Genome((3, 3, 3), 3), 20.0)
        for seed in range(10):
            replaced = rts_replace(list(population), offspring, 5, seed)
            assert replaced[2] == offspring
            assert replaced[:2] + replaced[3:] == population[:2] + population[3:]

    @pytest.mark.parametrize("window", [0, 6])
    def test_window_must_fit(self, window):
        with pytest.raises(WindowTooLarge):
            rts_replace(population_of(self.ROWS, [1.0] * 5), Individual(Genome((1, 1, 1), 3), 2.0), window, 0)

    def test_best_fitness_never_decreases(self):
        rng = np.random.default_rng(5)
        population = [Individual(random_genome(8, 4, rng), float(rng.random())) for _ in range(20)]
        best = max(ind.fitness for ind in population)
        for _ in range(10_000):
            offspring = Individual(random_genome(8, 4, rng), float(rng.random()))
            rts_replace(population, offspring, 5, rng)
            current = max(ind.fitness for ind in population)
            assert current >= best
            best = current
        assert len(population) == 20


class TestRun:
    def test_budget_of_one_population_returns_best_initial(self):
        cfg = config(population_size=30, max_evaluations=30)
        model = InformationRetrievalModel()
        initial = init_population(cfg, model)
        result = run(cfg, model)
        assert result.best_fitness == max(ind.fitness for ind in initial)
        assert result.best_genome == next(ind.genome for ind in initial if ind.fitness == result.best_fitness)
        assert result.evaluations_used == 30

    @pytest.mark.parametrize("algorithm", list(Algorithm))
    def test_single_genome_space(self, algorithm):
        cfg = config(leaf_count=2, max_depth=1, population_size=5, max_evaluations=20, algorithm=algorithm)
        result = run(cfg, InformationRetrievalModel())
        assert result.best_genome.digits == (1,)
        assert result.best_fitness == pytest.approx(575.46, abs=0.01)

    @pytest.mark.parametrize("algorithm", list(Algorithm))
    def test_seeded_determinism(self, algorithm):
        cfg = config(algorithm=algorithm)
        assert run(cfg, InformationRetrievalModel()) == run(cfg, InformationRetrievalModel())

    @pytest.mark.parametrize("algorithm", list(Algorithm))
    @pytest.mark.parametrize("budget", [200, 201])
    def test_every_evaluation_is_accounted_for(self, algorithm, budget):
        counter = CountingModel()
        result = run(config(algorithm=algorithm, max_evaluations=budget), counter)
        assert result.evaluations_used == budget
        assert counter.calls == budget

    def test_trajectory_is_monotone(self):
        result = run(config(leaf_count=12, max_evaluations=1000), InformationRetrievalModel())
        indices = [index for index, _ in result.trajectory]
        values = [value for _, value in result.trajectory]
        assert indices == sorted(indices) and indices[0] >= 1
        assert all(a < b for a, b in zip(values, values[1:]))
        assert values[-1] == result.best_fitness
        assert indices[-1] <= result.evaluations_used

    def test_result_dict_round_trip(self):
        result = run(config(), InformationRetrievalModel())
        data = result.to_dict()
        assert data["best_genome"]["max_depth"] == 4
        assert data["best_canonical_genome"] == simplify(result.best_genome).to_dict()
        assert RunResult.from_dict(data) == result


@pytest.mark.slow
def test_hierarchical_search_finds_twelve_database_optimum():
    model = InformationRetrievalModel()
    _, optimum = brute_force_best(12, 4, model)
    hits = 0
    for seed in range(10):
        cfg = GAConfig(leaf_count=12, max_depth=4, algorithm=Algorithm.HGA,
                       population_size=50, max_evaluations=2000, seed=seed)
        result = run(cfg, model)
        assert result.best_fitness <= optimum + 1e-9
        hits += result.best_fitness >= optimum - 1e-9 * optimum
    assert hits >= 6

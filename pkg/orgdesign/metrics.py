"""
Evaluation statistics for comparing optimizers.

PRE measures how far a run's best fitness falls short of the best known
fitness, APRE averages it over runs and SR counts the runs that reached the
best known value. Algorithms are compared with an exact two-sided Wilcoxon
signed-rank test over paired samples.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Sequence, Tuple

import numpy as np
from scipy.stats import rankdata

logger = logging.getLogger("OrgDesign.Metrics")

# Exact null distribution is enumerated up to this many non-zero differences.
MAX_EXACT_SAMPLES = 25
DEFAULT_RELATIVE_TOLERANCE = 1e-9


class MetricsError(ValueError):
    """Base class for statistics errors."""
    pass


class NonPositiveBest(MetricsError):
    pass


class FitnessExceedsBest(MetricsError):
    pass


class EmptyInput(MetricsError):
    pass


class SampleLengthMismatch(MetricsError):
    pass


class SampleTooLarge(MetricsError):
    pass


@dataclass(frozen=True)
class WilcoxonResult:
    """
    Outcome of a signed-rank test.

    Attributes:
        statistic: Smaller of the positive and negative rank sums
        n_effective: Number of non-zero differences
        p_two_sided: Exact two-sided p-value
    """
    statistic: float
    n_effective: int
    p_two_sided: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "statistic": self.statistic,
            "n_effective": self.n_effective,
            "p_two_sided": self.p_two_sided,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "WilcoxonResult":
        return cls(
            statistic=float(data["statistic"]),
            n_effective=int(data["n_effective"]),
            p_two_sided=float(data["p_two_sided"]),
        )


def pre(fitness: float, best: float) -> float:
    """
    Percentage relative error of ``fitness`` against the best known fitness.

    Raises:
        NonPositiveBest: If best <= 0
        FitnessExceedsBest: If fitness > best
    """
    if best <= 0:
        raise NonPositiveBest(f"Best known fitness must be positive, got {best}")
    if fitness > best:
        raise FitnessExceedsBest(f"Fitness {fitness} exceeds best known fitness {best}")
    return (best - fitness) / best * 100.0


def apre(values: Sequence[float]) -> float:
    """Mean of PRE values over runs."""
    if len(values) == 0:
        raise EmptyInput("APRE needs at least one PRE value")
    return float(np.mean(values))


def success_rate(per_run_best: Sequence[float], best: float, tol: float = 0.0) -> float:
    """Fraction of runs whose best fitness is within ``tol`` of ``best``."""
    if len(per_run_best) == 0:
        raise EmptyInput("Success rate needs at least one run")
    if tol < 0:
        raise MetricsError(f"Tolerance must be non-negative, got {tol}")
    hits = np.asarray(best, dtype=float) - np.asarray(per_run_best, dtype=float) <= tol
    return float(np.mean(hits))


def summarize_case(per_run_best: Sequence[float], best: float,
                   relative_tolerance: float = DEFAULT_RELATIVE_TOLERANCE) -> Tuple[float, float]:
    """
    APRE and SR of one algorithm on one test case.

    Args:
        per_run_best: Best fitness of every run
        best: Best known fitness for the case
        relative_tolerance: Success tolerance as a fraction of ``best``

    Returns:
        Tuple of (APRE in percent, SR)
    """
    apre_value = apre([pre(value, best) for value in per_run_best])
    sr_value = success_rate(per_run_best, best, relative_tolerance * abs(best))
    return apre_value, sr_value


def _rank_sum_counts(doubled_ranks: np.ndarray) -> np.ndarray:
    # counts[s] = number of sign assignments whose positive rank sum (doubled) equals s
    counts = np.zeros(int(doubled_ranks.sum()) + 1, dtype=np.float64)
    counts[0] = 1.0
    for rank in doubled_ranks:
        shifted = np.zeros_like(counts)
        shifted[rank:] = counts[:counts.size - rank]
        counts = counts + shifted
    return counts


def wilcoxon_signed_rank(x: Sequence[float], y: Sequence[float]) -> WilcoxonResult:
    """
    Exact two-sided Wilcoxon signed-rank test of paired samples.

    Zero differences are dropped and tied magnitudes get average ranks. The
    null distribution of the positive rank sum is counted over all 2^n sign
    assignments of the observed ranks; the p-value is twice the lower tail
    at the observed statistic, capped at 1.

    Args:
        x: First sample
        y: Second sample, paired with x

    Returns:
        WilcoxonResult; p is 1 when every difference is zero

    Raises:
        SampleLengthMismatch: If x and y differ in length
        SampleTooLarge: If more than MAX_EXACT_SAMPLES differences are non-zero
    """
    if len(x) != len(y):
        raise SampleLengthMismatch(f"Paired samples differ in length: {len(x)} vs {len(y)}")
    differences = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    differences = differences[differences != 0]
    n = int(differences.size)
    if n == 0:
        return WilcoxonResult(statistic=0.0, n_effective=0, p_two_sided=1.0)
    if n > MAX_EXACT_SAMPLES:
        raise SampleTooLarge(f"Exact test supports at most {MAX_EXACT_SAMPLES} non-zero differences, got {n}")

    ranks = rankdata(np.abs(differences))
    w_plus = float(ranks[differences > 0].sum())
    w_minus = float(ranks[differences < 0].sum())
    statistic = min(w_plus, w_minus)

    # Average ranks are multiples of 1/2, so doubling makes them integral.
    doubled = np.rint(ranks * 2).astype(np.int64)
    counts = _rank_sum_counts(doubled)
    observed = int(round(statistic * 2))
    tail = counts[:observed + 1].sum() / 2.0 ** n
    p_value = min(1.0, 2.0 * tail)
    logger.debug(f"Signed-rank test: n={n}, W+={w_plus}, W-={w_minus}, p={p_value:.6g}")
    return WilcoxonResult(statistic=statistic, n_effective=n, p_two_sided=float(p_value))

"""
Variation operators on the genome representation.

Hierarchical crossover exchanges the digit segments of whole sub-organizations
between two parents and then migrates digits until both offspring are back to
N-1 digits. Small-perturbation mutation moves single digits by one level. The
one-point / two-point crossovers and bit-wise mutation are the conventional
baselines.
"""

import logging
from dataclasses import dataclass
from typing import Any, List, Optional, Tuple

import numpy as np

from .genome import Genome, GenomeError, LengthMismatch, random_genome, segments_above

logger = logging.getLogger("OrgDesign.Operators")


class SpanMismatch(GenomeError):
    """Raised when a crossover node does not describe a sub-organization of the genome."""
    pass


class GenomeTooShort(GenomeError):
    """Raised when a genome is too short for the requested cut points."""
    pass


@dataclass(frozen=True)
class CrossoverNode:
    """
    Internal node usable as a crossover point.

    Attributes:
        level: Level S of the node
        leaf_span: First and last database below the node (1-based, inclusive)
        digit_span: First and last inner digit (1-based, inclusive)
    """
    level: int
    leaf_span: Tuple[int, int]
    digit_span: Tuple[int, int]

    @property
    def digit_slice(self) -> slice:
        return slice(self.digit_span[0] - 1, self.digit_span[1])


@dataclass(frozen=True)
class SegmentSplit:
    left: Tuple[int, ...]
    center: Tuple[int, ...]
    right: Tuple[int, ...]


def _check_compatible(p1: Genome, p2: Genome) -> None:
    if len(p1) != len(p2) or p1.max_depth != p2.max_depth:
        raise LengthMismatch(
            f"Parents differ: length {len(p1)}/M={p1.max_depth} vs {len(p2)}/M={p2.max_depth}"
        )


def list_crossover_nodes(genome: Genome, max_level: int) -> List[CrossoverNode]:
    """
    List the internal nodes on levels 1..max_level, ordered by (level, leftmost leaf).

    Only nodes spanning at least two databases are listed; a node on level S
    spans exactly a maximal run of digits above S.

    Args:
        genome: Genome to inspect
        max_level: Deepest level to include

    Returns:
        Crossover nodes (possibly empty)
    """
    nodes = []
    for level in range(1, max_level + 1):
        for start, stop in segments_above(genome.digits, level):
            nodes.append(
                CrossoverNode(
                    level=level,
                    leaf_span=(start + 1, stop + 1),
                    digit_span=(start + 1, stop),
                )
            )
    return nodes


def extract_segments(genome: Genome, node: CrossoverNode) -> SegmentSplit:
    """
    Split the digits into the part left of, below, and right of ``node``.

    Raises:
        SpanMismatch: If the span is out of range or is not a maximal run of
            digits above the node's level
    """
    digits = genome.digits
    first, last = node.digit_span
    if first < 1 or last > len(digits) or first > last:
        raise SpanMismatch(f"Digit span {node.digit_span} outside genome of length {len(digits)}")
    center = digits[first - 1:last]
    if min(center) <= node.level:
        raise SpanMismatch(f"Digit span {node.digit_span} contains a separator for level {node.level}")
    if first > 1 and digits[first - 2] > node.level:
        raise SpanMismatch(f"Digit span {node.digit_span} does not start at a level-{node.level} boundary")
    if last < len(digits) and digits[last] > node.level:
        raise SpanMismatch(f"Digit span {node.digit_span} does not end at a level-{node.level} boundary")
    return SegmentSplit(left=digits[:first - 1], center=center, right=digits[last:])


def exchange_segments(
    p1: Genome, p2: Genome, cp1: CrossoverNode, cp2: CrossoverNode
) -> Tuple[List[int], List[int]]:
    """Swap the sub-organization segments below cp1 and cp2; lengths may change."""
    s1 = extract_segments(p1, cp1)
    s2 = extract_segments(p2, cp2)
    o1 = list(s1.left + s2.center + s1.right)
    o2 = list(s2.left + s1.center + s2.right)
    return o1, o2


def repair_lengths(o1: List[int], o2: List[int], length: int, rng: Any) -> Tuple[List[int], List[int]]:
    """
    Move digits from the longer offspring into the shorter until both have ``length`` digits.

    Each move takes a uniformly chosen digit and inserts it at a uniformly
    chosen slot, both ends included.
    """
    rng = np.random.default_rng(rng)
    o1, o2 = list(o1), list(o2)
    if len(o1) + len(o2) != 2 * length:
        raise SpanMismatch(f"Offspring lengths {len(o1)} + {len(o2)} cannot be balanced to {length}")
    longer, shorter = (o1, o2) if len(o1) > length else (o2, o1)
    while len(longer) > length:
        take = int(rng.integers(len(longer)))
        slot = int(rng.integers(len(shorter) + 1))
        shorter.insert(slot, longer.pop(take))
    return o1, o2


def _random_full_depth(genome: Genome, rng: np.random.Generator) -> Genome:
    fresh = random_genome(genome.leaf_count, genome.max_depth, rng)
    digits = list(fresh.digits)
    digits[int(rng.integers(len(digits)))] = genome.max_depth
    return Genome(digits=tuple(digits), max_depth=genome.max_depth)


def hierarchical_crossover(p1: Genome, p2: Genome, rng: Any) -> Tuple[Genome, Genome]:
    """
    Hierarchical crossover with repair.

    The deeper parent goes first (ties keep the input order). A crossover
    node cp1 is drawn from its internal nodes on levels 1..T-1, T being its
    largest digit; cp2 is drawn from the second parent's internal nodes on
    level min(S, max(p2)-1), S being the level of cp1. The segments below
    the two nodes are exchanged and the lengths repaired by digit migration.
    When either parent is flat (largest digit 1) two random genomes of full
    depth are returned instead.

    Args:
        p1: First parent
        p2: Second parent
        rng: numpy Generator or seed

    Returns:
        Two offspring of the parents' length

    Raises:
        LengthMismatch: If the parents are incompatible
    """
    _check_compatible(p1, p2)
    rng = np.random.default_rng(rng)
    if p1.max_digit < p2.max_digit:
        p1, p2 = p2, p1

    top = p1.max_digit
    if top == 1 or p2.max_digit == 1:
        logger.debug("Flat parent, regenerating both offspring at full depth")
        return _random_full_depth(p1, rng), _random_full_depth(p2, rng)

    first_nodes = list_crossover_nodes(p1, top - 1)
    cp1 = first_nodes[int(rng.integers(len(first_nodes)))]
    target = min(cp1.level, p2.max_digit - 1)
    second_nodes = [node for node in list_crossover_nodes(p2, target) if node.level == target]
    cp2 = second_nodes[int(rng.integers(len(second_nodes)))]

    o1, o2 = exchange_segments(p1, p2, cp1, cp2)
    o1, o2 = repair_lengths(o1, o2, len(p1), rng)
    return (
        Genome(digits=tuple(o1), max_depth=p1.max_depth),
        Genome(digits=tuple(o2), max_depth=p1.max_depth),
    )


def one_point_crossover(
    p1: Genome, p2: Genome, rng: Any, cut: Optional[int] = None
) -> Tuple[Genome, Genome]:
    """
    Exchange the suffixes after a cut position drawn from 1..N-2.

    Args:
        p1: First parent
        p2: Second parent
        rng: numpy Generator or seed
        cut: Number of leading digits kept from each parent; drawn when None

    Raises:
        LengthMismatch: If the parents are incompatible
        GenomeTooShort: If the genomes have fewer than two digits
    """
    _check_compatible(p1, p2)
    length = len(p1)
    if length < 2:
        raise GenomeTooShort(f"One-point crossover needs at least 2 digits, got {length}")
    if cut is None:
        cut = int(np.random.default_rng(rng).integers(1, length))
    elif not 1 <= cut < length:
        raise GenomeTooShort(f"Cut {cut} outside 1..{length - 1}")
    o1 = p1.digits[:cut] + p2.digits[cut:]
    o2 = p2.digits[:cut] + p1.digits[cut:]
    return Genome(o1, p1.max_depth), Genome(o2, p1.max_depth)


def two_point_crossover(
    p1: Genome, p2: Genome, rng: Any, cuts: Optional[Tuple[int, int]] = None
) -> Tuple[Genome, Genome]:
    """
    Exchange the digits between two distinct positions (1-based, inclusive).

    Raises:
        LengthMismatch: If the parents are incompatible
        GenomeTooShort: If the genomes have fewer than two digits
    """
    _check_compatible(p1, p2)
    length = len(p1)
    if length < 2:
        raise GenomeTooShort(f"Two-point crossover needs at least 2 digits, got {length}")
    if cuts is None:
        picked = np.random.default_rng(rng).choice(length, size=2, replace=False) + 1
        first, last = sorted(int(p) for p in picked)
    else:
        first, last = cuts
        if not 1 <= first < last <= length:
            raise GenomeTooShort(f"Cut points {cuts} must satisfy 1 <= a < b <= {length}")
    lo, hi = first - 1, last
    o1 = p1.digits[:lo] + p2.digits[lo:hi] + p1.digits[hi:]
    o2 = p2.digits[:lo] + p1.digits[lo:hi] + p2.digits[hi:]
    return Genome(o1, p1.max_depth), Genome(o2, p1.max_depth)


def bitwise_mutation(genome: Genome, rate: float, rng: Any) -> Genome:
    """
    Replace each digit, with probability ``rate``, by a different uniformly chosen level.

    With a depth bound of 1 there is no alternative value and the genome is
    returned unchanged.
    """
    top = genome.max_depth
    if top < 2:
        return genome
    rng = np.random.default_rng(rng)
    digits = genome.to_array()
    mask = rng.random(digits.size) < rate
    # Draw from the M-1 other values by skipping over the current one.
    alternative = rng.integers(1, top, size=digits.size)
    alternative = alternative + (alternative >= digits)
    mutated = np.where(mask, alternative, digits)
    return Genome(digits=tuple(int(d) for d in mutated), max_depth=top)


def small_perturbation_mutation(genome: Genome, rate: float, rng: Any) -> Genome:
    """
    Move each digit, with probability ``rate``, one level up or down.

    Moves that leave [1, M] are undone, so a digit never changes by more
    than one and a depth bound of 1 leaves every genome untouched.
    """
    top = genome.max_depth
    rng = np.random.default_rng(rng)
    digits = genome.to_array()
    mask = rng.random(digits.size) < rate
    step = np.where(rng.random(digits.size) > 0.5, 1, -1)
    perturbed = digits + mask * step
    perturbed[perturbed == 0] = 1
    perturbed[perturbed == top + 1] = top
    return Genome(digits=tuple(int(d) for d in perturbed), max_depth=top)

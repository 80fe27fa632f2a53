"""
Genome codec for hierarchical organizations.

An organization is a forest of trees whose roots are mediators, whose leaves
are databases and whose remaining internal nodes are aggregators. With N
databases the organization is encoded as N-1 integers: digit i is the level
at which the root-to-leaf paths of databases i and i+1 first diverge (1 when
they sit in different trees). This module converts between the two forms,
validates them, and provides the canonical simplification used before every
fitness evaluation.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

logger = logging.getLogger("OrgDesign.Genome")


class GenomeError(ValueError):
    """Base class for genome and tree codec errors."""
    pass


class EmptyGenome(GenomeError):
    """Raised when a genome has no digits (fewer than two databases)."""
    pass


class DigitOutOfRange(GenomeError):
    """Raised when a digit falls outside [1, max_depth]."""

    def __init__(self, index: int, value: int, max_depth: int):
        self.index = index
        self.value = value
        self.max_depth = max_depth
        super().__init__(
            f"Digit at index {index} has value {value}, expected 1..{max_depth}"
        )


class IndexOutOfRange(GenomeError):
    """Raised when a leaf index is outside 1..N."""
    pass


class LengthMismatch(GenomeError):
    """Raised when two genomes that must be compatible differ in length or depth bound."""
    pass


class MalformedTree(GenomeError):
    """Raised when an organization tree violates the structural rules."""
    pass


class Role(str, Enum):
    MEDIATOR = "mediator"
    AGGREGATOR = "aggregator"
    DATABASE = "database"


@dataclass(frozen=True)
class Genome:
    """
    Array representation of an organization.

    Attributes:
        digits: Separation levels between adjacent databases (length N-1)
        max_depth: Upper bound M on every digit
    """
    digits: Tuple[int, ...]
    max_depth: int

    @property
    def leaf_count(self) -> int:
        return len(self.digits) + 1

    @property
    def max_digit(self) -> int:
        return max(self.digits)

    def __len__(self) -> int:
        return len(self.digits)

    def __iter__(self) -> Iterator[int]:
        return iter(self.digits)

    def __str__(self) -> str:
        return format_genome(self)

    def to_array(self) -> np.ndarray:
        return np.asarray(self.digits, dtype=np.int64)

    def to_dict(self) -> Dict[str, Any]:
        return {"digits": list(self.digits), "max_depth": self.max_depth}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Genome":
        return validate(data["digits"], data["max_depth"])


@dataclass(frozen=True)
class Node:
    """A single agent in the organization."""
    role: Role
    level: int
    children: Tuple["Node", ...] = ()

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @property
    def leaf_count(self) -> int:
        if self.is_leaf:
            return 1
        return sum(child.leaf_count for child in self.children)

    def iter_nodes(self) -> Iterator["Node"]:
        yield self
        for child in self.children:
            yield from child.iter_nodes()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "role": self.role.value,
            "children": [child.to_dict() for child in self.children],
        }


@dataclass(frozen=True)
class OrganizationTree:
    """
    Forest of mediator-rooted trees.

    The depth bound is carried along so that encode can rebuild the original
    genome; it does not take part in equality.
    """
    roots: Tuple[Node, ...]
    max_depth: Optional[int] = field(default=None, compare=False)

    @property
    def leaf_count(self) -> int:
        return sum(root.leaf_count for root in self.roots)

    @property
    def depth(self) -> int:
        return max(node.level for node in self.iter_nodes())

    def iter_nodes(self) -> Iterator[Node]:
        for root in self.roots:
            yield from root.iter_nodes()

    def iter_leaves(self) -> Iterator[Node]:
        return (node for node in self.iter_nodes() if node.is_leaf)

    def count_by_role(self) -> Dict[str, int]:
        counts = {role.value: 0 for role in Role}
        for node in self.iter_nodes():
            counts[node.role.value] += 1
        return counts

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"roots": [root.to_dict() for root in self.roots]}
        if self.max_depth is not None:
            data["max_depth"] = self.max_depth
        return data

    @classmethod
    def from_dict(cls, data: Union[Dict[str, Any], List[Any]]) -> "OrganizationTree":
        """
        Build a tree from nested ``{role, children}`` objects.

        Levels are taken from the nesting depth. A bare list is read as the
        list of roots.

        Raises:
            MalformedTree: If a role is unknown or an entry is not an object
        """
        if isinstance(data, list):
            raw_roots, max_depth = data, None
        elif isinstance(data, dict) and "roots" in data:
            raw_roots, max_depth = data["roots"], data.get("max_depth")
        else:
            raise MalformedTree("Tree JSON must be a list of roots or an object with 'roots'")
        roots = tuple(_node_from_dict(raw, 1) for raw in raw_roots)
        return cls(roots=roots, max_depth=max_depth)


def _node_from_dict(raw: Any, level: int) -> Node:
    if not isinstance(raw, dict):
        raise MalformedTree(f"Expected an object at level {level}, got {type(raw).__name__}")
    try:
        role = Role(raw.get("role", ""))
    except ValueError:
        raise MalformedTree(f"Unknown role {raw.get('role')!r} at level {level}")
    children = tuple(_node_from_dict(child, level + 1) for child in raw.get("children", []))
    return Node(role=role, level=level, children=children)


def validate(digits: Iterable[int], max_depth: int) -> Genome:
    """
    Check a digit sequence against the depth bound and wrap it as a Genome.

    Args:
        digits: Separation levels, one per adjacent database pair
        max_depth: Maximum hierarchy depth M

    Returns:
        The validated Genome

    Raises:
        EmptyGenome: If there are no digits
        DigitOutOfRange: If a digit is outside [1, max_depth]; index is 1-based
    """
    values = tuple(int(d) for d in digits)
    if max_depth < 1:
        raise GenomeError(f"max_depth must be at least 1, got {max_depth}")
    if not values:
        raise EmptyGenome("A genome needs at least one digit (two databases)")
    for index, value in enumerate(values, start=1):
        if value < 1 or value > max_depth:
            raise DigitOutOfRange(index, value, max_depth)
    return Genome(digits=values, max_depth=int(max_depth))


def parse_genome(text: str, max_depth: int) -> Genome:
    """Parse the textual format ``"2 2 3 1 2 3"``."""
    try:
        values = [int(token) for token in text.split()]
    except ValueError:
        raise GenomeError(f"Genome text must be space separated integers: {text!r}")
    return validate(values, max_depth)


def format_genome(genome: Genome) -> str:
    return " ".join(str(d) for d in genome.digits)


def segments_above(digits: Sequence[int], level: int) -> Iterator[Tuple[int, int]]:
    """
    Yield the maximal runs of digits strictly greater than ``level``.

    Runs are half-open ``(start, stop)`` index pairs, left to right. A run at
    level k spans the inner digits of one internal node on level k.
    """
    start = None
    for pos, value in enumerate(digits):
        if value > level:
            if start is None:
                start = pos
        elif start is not None:
            yield start, pos
            start = None
    if start is not None:
        yield start, len(digits)


def _build_internal(digits: Sequence[int], first: int, last: int, level: int, role: Role) -> Node:
    # Databases first..last (0-based, inclusive); inner digits are all > level.
    child_level = level + 1
    children = []
    seg_start = first
    for pos in range(first, last):
        if digits[pos] == child_level:
            children.append(_build_child(digits, seg_start, pos, child_level))
            seg_start = pos + 1
    children.append(_build_child(digits, seg_start, last, child_level))
    return Node(role=role, level=level, children=tuple(children))


def _build_child(digits: Sequence[int], first: int, last: int, level: int) -> Node:
    if first == last:
        return Node(role=Role.DATABASE, level=level)
    return _build_internal(digits, first, last, level, Role.AGGREGATOR)


def decode(genome: Genome) -> OrganizationTree:
    """
    Build the canonical organization for a genome.

    The digits equal to 1 split the databases into trees. Inside a node on
    level k the digits equal to k+1 split its databases into children; an
    empty segment becomes a database, anything longer an aggregator. A tree
    holding a single database is a mediator with one database child.

    Args:
        genome: A validated genome

    Returns:
        The organization tree
    """
    digits = genome.digits
    roots = []
    first = 0
    for pos, value in enumerate(digits):
        if value == 1:
            roots.append(_build_internal(digits, first, pos, 1, Role.MEDIATOR))
            first = pos + 1
    roots.append(_build_internal(digits, first, len(digits), 1, Role.MEDIATOR))
    return OrganizationTree(roots=tuple(roots), max_depth=genome.max_depth)


def _check_node(node: Node, level: int, is_root: bool) -> None:
    if node.level != level:
        raise MalformedTree(f"Node declares level {node.level} but sits on level {level}")
    if is_root:
        if node.role is not Role.MEDIATOR:
            raise MalformedTree(f"Root nodes must be mediators, found {node.role.value}")
        if node.is_leaf:
            raise MalformedTree("A mediator needs at least one subordinate")
    elif node.is_leaf and node.role is not Role.DATABASE:
        raise MalformedTree(f"Leaf on level {level} must be a database, found {node.role.value}")
    elif not node.is_leaf and node.role is not Role.AGGREGATOR:
        raise MalformedTree(f"Internal node on level {level} must be an aggregator, found {node.role.value}")
    for child in node.children:
        _check_node(child, level + 1, False)


def _leaf_paths(tree: OrganizationTree) -> List[Tuple[int, ...]]:
    paths: List[Tuple[int, ...]] = []

    def walk(node: Node, path: Tuple[int, ...]) -> None:
        if node.is_leaf:
            paths.append(path)
            return
        for index, child in enumerate(node.children):
            walk(child, path + (index,))

    for index, root in enumerate(tree.roots):
        walk(root, (index,))
    return paths


def encode(tree: OrganizationTree, max_depth: Optional[int] = None) -> Genome:
    """
    Encode an organization as a genome.

    Args:
        tree: A well formed organization
        max_depth: Depth bound for the genome; defaults to the tree's own
            bound, or the largest separation level when the tree has none

    Returns:
        Genome whose digit i is the level where databases i and i+1 separate

    Raises:
        MalformedTree: If the tree breaks the role/level rules, has fewer
            than two databases, or separates deeper than the bound
    """
    if not tree.roots:
        raise MalformedTree("An organization needs at least one mediator")
    for root in tree.roots:
        _check_node(root, 1, True)

    paths = _leaf_paths(tree)
    if len(paths) < 2:
        raise MalformedTree(f"An organization needs at least two databases, found {len(paths)}")

    digits = []
    for left, right in zip(paths, paths[1:]):
        depth = 0
        while left[depth] == right[depth]:
            depth += 1
        digits.append(depth + 1)

    bound = max_depth if max_depth is not None else tree.max_depth
    if bound is None:
        bound = max(digits)
    if max(digits) > bound:
        raise MalformedTree(f"Tree separates on level {max(digits)}, deeper than max depth {bound}")
    return Genome(digits=tuple(digits), max_depth=int(bound))


def leaf_level(genome: Genome, index: int) -> int:
    """
    Level of database ``index`` (1-based) read straight from the digits.

    The virtual digits before the first and after the last database are 1,
    so a database that is the only subordinate of its mediator reports 1;
    in the decoded tree it hangs one level below that mediator.

    Raises:
        IndexOutOfRange: If index is not in 1..N
    """
    n = genome.leaf_count
    if index < 1 or index > n:
        raise IndexOutOfRange(f"Leaf index {index} outside 1..{n}")
    left = genome.digits[index - 2] if index > 1 else 1
    right = genome.digits[index - 1] if index < n else 1
    return max(left, right)


def simplify(genome: Genome) -> Genome:
    """
    Remove single-subordinate aggregator chains on the genome side.

    Stage k (k = 1..M-1) looks at every maximal segment of digits above k;
    when the smallest digit m of a segment exceeds k+1, every m in that
    segment becomes k+1. The result is idempotent and never raises a digit.
    """
    digits = list(genome.digits)
    for level in range(1, genome.max_depth):
        for start, stop in segments_above(digits, level):
            smallest = min(digits[start:stop])
            if smallest > level + 1:
                for pos in range(start, stop):
                    if digits[pos] == smallest:
                        digits[pos] = level + 1
    return Genome(digits=tuple(digits), max_depth=genome.max_depth)


def _collapse(node: Node, level: int) -> Node:
    if node.is_leaf:
        return Node(role=Role.DATABASE, level=level)
    children = list(node.children)
    # A lone internal child adds a hop without merging anything.
    while len(children) == 1 and not children[0].is_leaf:
        children = list(children[0].children)
    collapsed = []
    for child in children:
        while not child.is_leaf and len(child.children) == 1:
            child = child.children[0]
        collapsed.append(_collapse(child, level + 1))
    return Node(role=node.role, level=level, children=tuple(collapsed))


def remove_single_child_chains(tree: OrganizationTree) -> OrganizationTree:
    """
    Tree-side simplification: splice out every aggregator with one subordinate.

    Children of a removed node move up one level. A mediator keeps a lone
    database child, since the database cannot act as a mediator itself.
    """
    roots = tuple(_collapse(root, 1) for root in tree.roots)
    return OrganizationTree(roots=roots, max_depth=tree.max_depth)


def genome_distance(a: Genome, b: Genome) -> int:
    """
    Hamming distance between two genomes.

    Raises:
        LengthMismatch: If the genomes differ in length or depth bound
    """
    if len(a) != len(b) or a.max_depth != b.max_depth:
        raise LengthMismatch(
            f"Cannot compare genomes of length {len(a)}/M={a.max_depth} and {len(b)}/M={b.max_depth}"
        )
    return int(np.count_nonzero(a.to_array() != b.to_array()))


def random_genome(leaf_count: int, max_depth: int, rng: Any = None) -> Genome:
    """
    Draw every digit independently and uniformly from [1, max_depth].

    Args:
        leaf_count: Number of databases N (at least 2)
        max_depth: Depth bound M (at least 1)
        rng: numpy Generator or seed

    Returns:
        A random genome
    """
    if leaf_count < 2:
        raise EmptyGenome(f"Need at least two databases, got {leaf_count}")
    if max_depth < 1:
        raise GenomeError(f"max_depth must be at least 1, got {max_depth}")
    rng = np.random.default_rng(rng)
    values = rng.integers(1, max_depth + 1, size=leaf_count - 1)
    return Genome(digits=tuple(int(v) for v in values), max_depth=max_depth)

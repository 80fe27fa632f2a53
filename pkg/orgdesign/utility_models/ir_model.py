"""
Default utility model: a hierarchical information-retrieval system.

Every query is broadcast to all mediators and travels down to every database,
so recall is complete and utility is driven by response time. Each agent is
treated as an M/M/1 station receiving the full query stream: a database
serves at the process rate, an internal agent merging c result sets serves at
response_rate / c. Every parent-child hop costs a round trip of message
latency.
"""

import logging
import math
from dataclasses import asdict, dataclass
from functools import lru_cache
from typing import Any, Dict, Optional

from ..genome import Node, OrganizationTree
from .base_model import BaseUtilityModel, InfeasibleOrganization, ValidationError

logger = logging.getLogger("UtilityModels")


@dataclass(frozen=True)
class EnvironmentParams:
    """
    Environment of the information-retrieval system.

    Attributes:
        message_latency: One-way message latency in seconds
        process_service_rate: Database query processing rate (per second)
        response_service_rate: Result merging rate of mediators/aggregators (per second)
        query_rate: Query arrival rate (per second)
        utility_ceiling: Utility of an instantaneous response
    """
    message_latency: float = 0.020
    process_service_rate: float = 10.0
    response_service_rate: float = 20.0
    query_rate: float = 3.0
    utility_ceiling: float = 1000.0

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not value > 0:
                raise ValidationError(f"Environment parameter {name} must be positive, got {value}")

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> "EnvironmentParams":
        """Read the JSON form; latency is given in milliseconds there."""
        data = data or {}
        defaults = cls()
        return cls(
            message_latency=float(data.get("message_latency_ms", defaults.message_latency * 1000.0)) / 1000.0,
            process_service_rate=float(data.get("process_service_rate", defaults.process_service_rate)),
            response_service_rate=float(data.get("response_service_rate", defaults.response_service_rate)),
            query_rate=float(data.get("query_rate", defaults.query_rate)),
            utility_ceiling=float(data.get("utility_ceiling", defaults.utility_ceiling)),
        )

    def to_dict(self) -> Dict[str, float]:
        return {
            "message_latency_ms": self.message_latency * 1000.0,
            "process_service_rate": self.process_service_rate,
            "response_service_rate": self.response_service_rate,
            "query_rate": self.query_rate,
            "utility_ceiling": self.utility_ceiling,
        }


def recall(tree: OrganizationTree, env: EnvironmentParams) -> float:
    """
    Fraction of relevant data returned.

    Search and query sets cover every mediator, so every database sees every
    query and recall is complete.
    """
    return 1.0


def _sojourn(label: str, service_rate: float, env: EnvironmentParams) -> float:
    if env.query_rate >= service_rate:
        raise InfeasibleOrganization(label, env.query_rate, service_rate)
    return 1.0 / (service_rate - env.query_rate)


def _subtree_time(node: Node, env: EnvironmentParams) -> float:
    if node.is_leaf:
        return _sojourn(f"database on level {node.level}", env.process_service_rate, env)
    fan_out = len(node.children)
    merge = _sojourn(
        f"{node.role.value} on level {node.level} with {fan_out} subordinates",
        env.response_service_rate / fan_out,
        env,
    )
    slowest = max(_subtree_time(child, env) for child in node.children)
    return 2.0 * env.message_latency + slowest + merge


def response_time(tree: OrganizationTree, env: EnvironmentParams) -> float:
    """
    Expected query response time in seconds.

    A subtree answers after the round trip to its slowest child plus its own
    merge sojourn. With several mediators the responsible one additionally
    waits for the slowest peer and merges all mediator results.

    Raises:
        InfeasibleOrganization: If any agent's arrival rate reaches its service rate
    """
    times = [_subtree_time(root, env) for root in tree.roots]
    mediators = len(times)
    if mediators == 1:
        return times[0]
    merge = _sojourn(
        f"responsible mediator merging {mediators} mediators",
        env.response_service_rate / mediators,
        env,
    )
    return 2.0 * env.message_latency + max(times) + merge


def min_response_time(leaf_count: int, max_depth: int, env: EnvironmentParams) -> float:
    """
    Smallest response time any organization of leaf_count databases reaches.

    Dynamic programme over (databases, level): a node's time is the hop plus
    its merge sojourn plus the best achievable maximum over its children, so
    no tree is ever built. Internal agents sit on levels 1..max_depth-1.

    Returns:
        Seconds, or math.inf when every organization saturates some agent
    """
    if leaf_count < 1 or max_depth < 1:
        raise ValidationError(f"Need at least one database and depth 1, got {leaf_count} and {max_depth}")
    hop = 2.0 * env.message_latency

    def sojourn(service_rate: float) -> float:
        return 1.0 / (service_rate - env.query_rate) if service_rate > env.query_rate else math.inf

    database = sojourn(env.process_service_rate)
    fan_outs = [c for c in range(2, leaf_count + 1) if sojourn(env.response_service_rate / c) < math.inf]

    @lru_cache(maxsize=None)
    def subtree(n: int, level: int) -> float:
        if n == 1:
            return database if level > 1 else hop + sojourn(env.response_service_rate) + database
        if level >= max_depth:
            return math.inf
        return min(
            (hop + sojourn(env.response_service_rate / c) + spread(n, c, level + 1) for c in fan_outs if c <= n),
            default=math.inf,
        )

    @lru_cache(maxsize=None)
    def spread(n: int, parts: int, level: int) -> float:
        # Best achievable slowest child when n databases go to `parts` subtrees.
        if parts == 1:
            return subtree(n, level)
        return min(max(subtree(k, level), spread(n - k, parts - 1, level)) for k in range(1, n - parts + 2))

    best = subtree(leaf_count, 1)
    for mediators in fan_outs:
        best = min(best, hop + sojourn(env.response_service_rate / mediators) + spread(leaf_count, mediators, 1))
    return best


def evaluate(tree: OrganizationTree, env: EnvironmentParams) -> float:
    """
    Utility of an organization: recall times the ceiling less the response time in milliseconds.

    Infeasible organizations score 0.
    """
    try:
        seconds = response_time(tree, env)
    except InfeasibleOrganization as e:
        logger.debug(f"Infeasible organization scored 0: {e}")
        return 0.0
    return recall(tree, env) * max(0.0, env.utility_ceiling - seconds * 1000.0)


class InformationRetrievalModel(BaseUtilityModel):
    """
    Queueing-based utility of a hierarchical information-retrieval organization.
    """
    def __init__(self, env: Optional[EnvironmentParams] = None):
        super().__init__(
            name="InformationRetrieval",
            description="M/M/1 response-time utility with complete recall",
        )
        self.env = env or EnvironmentParams()

    def _evaluate_implementation(self, tree: OrganizationTree) -> float:
        return evaluate(tree, self.env)

    def get_info(self) -> Dict[str, Any]:
        info = super().get_info()
        info["environment"] = self.env.to_dict()
        return info

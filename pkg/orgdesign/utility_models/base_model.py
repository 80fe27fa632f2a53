import logging
import time
from typing import Any, Callable, Dict

from ..genome import OrganizationTree


class ModelError(Exception):
    """Custom exception for utility-model errors."""
    pass


class ValidationError(ModelError):
    """Raised when an evaluator receives something that is not an organization."""
    pass


class InfeasibleOrganization(ModelError):
    """
    Raised when some agent's queue is saturated.

    Attributes:
        node: Human-readable description of the saturated agent
    """

    def __init__(self, node: str, arrival_rate: float, service_rate: float):
        self.node = node
        self.arrival_rate = arrival_rate
        self.service_rate = service_rate
        super().__init__(
            f"{node} saturated: arrival rate {arrival_rate:g}/s >= effective service rate {service_rate:g}/s"
        )


class BaseUtilityModel:
    """
    Base class for organization evaluators.

    Every evaluator maps a valid organization to a non-negative utility,
    deterministically. Subclasses implement ``_evaluate_implementation``;
    ``evaluate`` wraps it with input validation, call counting and timing.
    """
    def __init__(self, name: str, description: str):
        """
        Initialize the utility model.

        Args:
            name: Name of the model
            description: Description of what the model measures
        """
        self.name = name
        self.description = description
        self.logger = logging.getLogger(f"UtilityModels.{name}")
        self.evaluation_count = 0
        self.last_execution_time = 0.0

    def evaluate(self, tree: OrganizationTree) -> float:
        """
        Evaluate an organization.

        Args:
            tree: Organization to evaluate

        Returns:
            Utility value (>= 0)

        Raises:
            ValidationError: If the input is not a usable organization
        """
        start_time = time.perf_counter()
        self._validate_inputs(tree)
        utility = float(self._evaluate_implementation(tree))
        if utility < 0:
            raise ModelError(f"{self.name} produced negative utility {utility}")
        self.evaluation_count += 1
        self.last_execution_time = time.perf_counter() - start_time
        return utility

    def __call__(self, tree: OrganizationTree) -> float:
        return self.evaluate(tree)

    def _evaluate_implementation(self, tree: OrganizationTree) -> float:
        raise NotImplementedError("Subclasses must implement _evaluate_implementation method")

    def _validate_inputs(self, tree: OrganizationTree) -> None:
        if tree is None:
            raise ValidationError("No organization provided")
        if not isinstance(tree, OrganizationTree):
            raise ValidationError(f"Expected an OrganizationTree, got {type(tree).__name__}")
        if not tree.roots:
            raise ValidationError("Organization has no mediators")

    def reset_counter(self) -> None:
        self.evaluation_count = 0
        self.last_execution_time = 0.0

    def get_version(self) -> str:
        return "1.0.0"

    def get_info(self) -> Dict[str, Any]:
        """
        Get information about the model.

        Returns:
            Dictionary with model information, call count and the duration
            of the most recent evaluation in seconds
        """
        return {
            "name": self.name,
            "description": self.description,
            "version": self.get_version(),
            "evaluation_count": self.evaluation_count,
            "last_execution_time": self.last_execution_time,
        }


class CallableUtilityModel(BaseUtilityModel):
    """Adapter that lets a plain function serve as an evaluator."""

    def __init__(self, func: Callable[[OrganizationTree], float], name: str = "custom"):
        super().__init__(name=name, description=getattr(func, "__doc__", None) or "User supplied utility")
        self.func = func

    def _evaluate_implementation(self, tree: OrganizationTree) -> float:
        return self.func(tree)


def as_utility_model(evaluator: Any) -> BaseUtilityModel:
    """Return ``evaluator`` unchanged if it already follows the contract, else wrap it."""
    if isinstance(evaluator, BaseUtilityModel):
        return evaluator
    if callable(evaluator):
        return CallableUtilityModel(evaluator, name=getattr(evaluator, "__name__", "custom"))
    raise ValidationError(f"Evaluator must be a BaseUtilityModel or callable, got {type(evaluator).__name__}")

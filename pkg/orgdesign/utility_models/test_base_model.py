import pytest

from orgdesign.genome import Genome, OrganizationTree, decode
from orgdesign.utility_models import (
    BaseUtilityModel,
    CallableUtilityModel,
    ModelError,
    ValidationError,
    as_utility_model,
)


def leaf_total(tree):
    """Number of databases."""
    return float(tree.leaf_count)


class NegativeModel(BaseUtilityModel):
    def __init__(self):
        super().__init__(name="Negative", description="always below zero")

    def _evaluate_implementation(self, tree):
        return -1.0


def test_callable_is_wrapped():
    model = as_utility_model(leaf_total)
    assert isinstance(model, CallableUtilityModel)
    assert model.name == "leaf_total"
    assert model.description == "Number of databases."
    assert model(decode(Genome((2, 1, 2), 2))) == 4.0
    assert model.evaluation_count == 1


def test_model_passes_through_unchanged():
    model = CallableUtilityModel(leaf_total)
    assert as_utility_model(model) is model


def test_non_callable_rejected():
    with pytest.raises(ValidationError):
        as_utility_model(42)


def test_negative_utility_rejected():
    with pytest.raises(ModelError):
        NegativeModel().evaluate(decode(Genome((2,), 2)))


@pytest.mark.parametrize("bad", [None, "2 2", OrganizationTree(roots=())])
def test_invalid_input(bad):
    with pytest.raises(ValidationError):
        CallableUtilityModel(leaf_total).evaluate(bad)


def test_base_model_is_abstract():
    with pytest.raises(NotImplementedError):
        BaseUtilityModel("base", "no implementation").evaluate(decode(Genome((2,), 2)))


def test_info():
    info = CallableUtilityModel(leaf_total, name="leaves").get_info()
    assert info == {
        "name": "leaves",
        "description": "Number of databases.",
        "version": "1.0.0",
        "evaluation_count": 0,
        "last_execution_time": 0.0,
    }


def test_info_reports_last_evaluation():
    model = CallableUtilityModel(leaf_total)
    model(decode(Genome((2, 1, 2), 2)))
    info = model.get_info()
    assert info["evaluation_count"] == 1
    assert 0.0 <= info["last_execution_time"] == model.last_execution_time
    model.reset_counter()
    assert model.get_info()["last_execution_time"] == 0.0

# This file makes the utility_models directory a Python package
from .base_model import (
    BaseUtilityModel,
    CallableUtilityModel,
    InfeasibleOrganization,
    ModelError,
    ValidationError,
    as_utility_model,
)
from .ir_model import (
    EnvironmentParams,
    InformationRetrievalModel,
    evaluate,
    min_response_time,
    recall,
    response_time,
)

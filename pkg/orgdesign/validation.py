"""
Validation module for organization-design experiments.

This module checks raw configuration dictionaries (as read from JSON files or
assembled from command-line arguments) before any typed configuration is
built, so problems are reported together instead of one exception at a time.
"""

import logging
import math
from typing import Any, Dict, List, Optional

from .engine import Algorithm
from .utility_models import EnvironmentParams, min_response_time

logger = logging.getLogger("OrgDesign.Validation")

ENVIRONMENT_KEYS = [
    "message_latency_ms",
    "process_service_rate",
    "response_service_rate",
    "query_rate",
    "utility_ceiling",
]
EXPERIMENT_KEYS = {
    "cases", "algorithms", "runs_per_case", "max_depth", "mutation_rate", "rts_window",
    "base_seed", "env", "workers", "success_tolerance", "enumeration_budget", "oracle",
}
# Deeper hierarchies than this make enumeration hopeless long before any case runs.
MAX_REASONABLE_DEPTH = 16


def _status(errors: List[str], warnings: List[str], ok_message: str) -> Dict[str, Any]:
    if errors:
        status = "error"
        message = f"{len(errors)} error(s): {errors[0]}"
    elif warnings:
        status = "warning"
        message = f"{len(warnings)} warning(s): {warnings[0]}"
    else:
        status = "success"
        message = ok_message
    return {"status": status, "message": message, "errors": errors, "warnings": warnings}


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def validate_environment(env: Optional[Dict[str, Any]]) -> Dict[str, Any]:
    """
    Validate environment parameters of the information-retrieval model.

    Args:
        env: Dictionary with the JSON environment keys; missing keys take defaults

    Returns:
        Dictionary with status, message, errors, warnings and the largest
        fan-out an internal agent can sustain
    """
    env = env or {}
    errors = []
    warnings = []

    unknown = sorted(set(env) - set(ENVIRONMENT_KEYS))
    if unknown:
        warnings.append(f"Unknown environment keys ignored: {', '.join(unknown)}")

    for key in ENVIRONMENT_KEYS:
        if key in env and (not _is_number(env[key]) or env[key] <= 0):
            errors.append(f"{key} must be a positive number, got {env[key]!r}")

    max_fan_out = None
    if not errors:
        query_rate = env.get("query_rate", 3.0)
        process_rate = env.get("process_service_rate", 10.0)
        response_rate = env.get("response_service_rate", 20.0)
        if query_rate >= process_rate:
            errors.append(
                f"query_rate ({query_rate}) reaches process_service_rate ({process_rate}); "
                "every organization is infeasible"
            )
        # Merging c results is stable while query_rate < response_rate / c.
        max_fan_out = math.ceil(response_rate / query_rate) - 1
        if max_fan_out < 2:
            warnings.append(
                f"Internal agents sustain at most {max_fan_out} subordinate(s); "
                "only single-mediator chains are feasible"
            )

    result = _status(errors, warnings, "Environment parameters valid")
    result["max_fan_out"] = max_fan_out
    return result


def validate_run_args(leaf_count: Any, max_depth: Any, population_size: Any, max_evaluations: Any,
                      mutation_rate: Any, rts_window: Any) -> Dict[str, Any]:
    """
    Validate the parameters of a single run.

    Returns:
        Dictionary with status, message, errors and warnings
    """
    errors = []
    warnings = []

    def require_int(name, value, minimum):
        if not isinstance(value, int) or isinstance(value, bool):
            errors.append(f"{name} must be an integer, got {value!r}")
            return False
        if value < minimum:
            errors.append(f"{name} must be >= {minimum}, got {value}")
            return False
        return True

    require_int("dbs", leaf_count, 2)
    if require_int("max_depth", max_depth, 1) and max_depth > MAX_REASONABLE_DEPTH:
        warnings.append(f"max_depth {max_depth} is unusually large")
    population_ok = require_int("population_size", population_size, 2)
    evaluations_ok = require_int("max_evaluations", max_evaluations, 1)
    window_ok = require_int("rts_window", rts_window, 1)

    if population_ok and evaluations_ok and max_evaluations < population_size:
        errors.append(
            f"max_evaluations ({max_evaluations}) must cover the initial population ({population_size})"
        )
    if population_ok and window_ok and rts_window > population_size:
        errors.append(f"rts_window ({rts_window}) exceeds population_size ({population_size})")
    if not _is_number(mutation_rate) or not 0.0 <= mutation_rate <= 1.0:
        errors.append(f"mutation_rate must be in [0, 1], got {mutation_rate!r}")
    elif mutation_rate == 0.0:
        warnings.append("mutation_rate is 0; offspring only recombine their parents")

    return _status(errors, warnings, "Run parameters valid")


def validate_experiment_config(config: Dict[str, Any]) -> Dict[str, Any]:
    """
    Validate a raw experiment configuration dictionary.

    Args:
        config: Dictionary as read from an experiment JSON file

    Returns:
        Dictionary with status, message, errors, warnings and per-case results
    """
    if not isinstance(config, dict):
        return _status([f"Experiment configuration must be an object, got {type(config).__name__}"], [], "")

    errors = []
    warnings = []

    unknown = sorted(set(config) - EXPERIMENT_KEYS)
    if unknown:
        warnings.append(f"Unknown configuration keys ignored: {', '.join(unknown)}")

    algorithms = config.get("algorithms", [a.value for a in Algorithm])
    if not isinstance(algorithms, list) or not algorithms:
        errors.append("algorithms must be a non-empty list")
    else:
        names = [str(name).lower() for name in algorithms]
        bad = [name for name in names if name not in {a.value for a in Algorithm}]
        if bad:
            errors.append(f"Unknown algorithms: {', '.join(bad)}")
        if len(set(names)) != len(names):
            errors.append("algorithms must not repeat")

    runs = config.get("runs_per_case", 10)
    if not isinstance(runs, int) or isinstance(runs, bool) or runs < 1:
        errors.append(f"runs_per_case must be an integer >= 1, got {runs!r}")

    workers = config.get("workers", 1)
    if not isinstance(workers, int) or isinstance(workers, bool) or workers < 1:
        errors.append(f"workers must be an integer >= 1, got {workers!r}")

    tolerance = config.get("success_tolerance", 1e-9)
    if not _is_number(tolerance) or tolerance < 0:
        errors.append(f"success_tolerance must be a non-negative number, got {tolerance!r}")

    max_depth = config.get("max_depth", 4)
    budget = config.get("enumeration_budget", 2 ** 26)

    env_check = validate_environment(config.get("env"))
    errors.extend(f"env: {error}" for error in env_check["errors"])
    warnings.extend(f"env: {warning}" for warning in env_check["warnings"])
    env = EnvironmentParams.from_dict(config.get("env")) if env_check["status"] != "error" else None

    case_results = []
    cases = config.get("cases")
    if cases is not None and (not isinstance(cases, list) or not cases):
        errors.append("cases must be a non-empty list")
        cases = []
    for index, case in enumerate(cases or []):
        if not isinstance(case, dict):
            errors.append(f"cases[{index}] must be an object")
            continue
        leaf_count = case.get("dbs", case.get("leaf_count"))
        check = validate_run_args(
            leaf_count,
            max_depth,
            case.get("population_size"),
            case.get("max_evaluations"),
            config.get("mutation_rate", 0.1),
            config.get("rts_window", 5),
        )
        errors.extend(f"cases[{index}]: {error}" for error in check["errors"])
        warnings.extend(f"cases[{index}]: {warning}" for warning in check["warnings"])
        oracle = None
        fastest = None
        if check["status"] != "error":
            oracle = max_depth ** (leaf_count - 1) <= budget
            if env is not None:
                seconds = min_response_time(leaf_count, max_depth, env)
                fastest = round(seconds * 1000.0, 3) if math.isfinite(seconds) else None
                if fastest is None:
                    warnings.append(f"cases[{index}]: every organization of {leaf_count} databases saturates an agent")
                elif fastest >= env.utility_ceiling:
                    warnings.append(
                        f"cases[{index}]: best achievable response time {fastest} ms reaches "
                        f"utility_ceiling {env.utility_ceiling}; every organization scores 0"
                    )
        case_results.append({
            "index": index,
            "dbs": leaf_count,
            "status": check["status"],
            "oracle_feasible": oracle,
            "best_response_ms": fastest,
        })

    result = _status(errors, warnings, "Experiment configuration valid")
    result["cases"] = case_results
    if result["status"] == "error":
        logger.warning(result["message"])
    return result


def verify_prerequisites() -> Dict[str, Any]:
    """
    Verify that all required libraries and dependencies are available.

    Returns:
        Dictionary with verification results
    """
    required_packages = ["numpy", "scipy"]
    optional_packages = ["matplotlib", "jinja2"]

    versions = {}
    missing = []
    for package in required_packages:
        try:
            versions[package] = __import__(package).__version__
        except ImportError:
            missing.append(package)

    missing_optional = []
    for package in optional_packages:
        try:
            versions[package] = __import__(package).__version__
        except ImportError:
            missing_optional.append(package)

    if missing:
        status = "error"
        message = f"Missing required packages: {', '.join(missing)}"
    else:
        status = "success"
        message = "All required packages available"
        if missing_optional:
            message += f" (optional missing: {', '.join(missing_optional)})"

    return {
        "status": status,
        "message": message,
        "missing_required": missing,
        "missing_optional": missing_optional,
        "versions": versions,
    }

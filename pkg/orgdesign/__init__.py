# This file makes the orgdesign directory a Python package
from .engine import Algorithm, GAConfig, RunResult, evaluate_genome, run
from .genome import Genome, Node, OrganizationTree, Role, decode, encode, simplify
from .harness import ExperimentConfig, ExperimentReport, brute_force_best, run_experiment
from .utility_models import BaseUtilityModel, EnvironmentParams, InformationRetrievalModel

__version__ = "0.1.0"

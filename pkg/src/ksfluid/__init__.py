"""Structured-grid simulator for singular-sensitivity chemotaxis coupled to Stokes flow."""
from .analysis import AnalysisParams, validate
from .config import ModelConfig, format_config, load_config, parse_config
from .grid import GridSpec, MacVectorField, ScalarField
from .stepper import RunResult, StepControl, Status, run

__version__ = "0.1.0"

__all__ = [
    "AnalysisParams", "GridSpec", "MacVectorField", "ModelConfig", "RunResult", "ScalarField", "Status",
    "StepControl", "format_config", "load_config", "parse_config", "run", "validate",
]

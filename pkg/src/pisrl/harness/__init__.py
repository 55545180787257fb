from .config import ConfigError, ExperimentConfig, load_config, make_environment, parse_config
from .pipeline import PhaseError, RunMetrics, export_known_space, pareto_front, prepare, run_pipeline, sweep

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "PhaseError",
    "RunMetrics",
    "export_known_space",
    "load_config",
    "make_environment",
    "pareto_front",
    "parse_config",
    "prepare",
    "run_pipeline",
    "sweep",
]

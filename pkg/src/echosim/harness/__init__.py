from .runner import RunResult, run_scenario
from .scenario import AdversarySpec, ConfigError, ProverSpec, ScenarioConfig, load_scenario, parse_scenario
from .trace import emit_trace

__all__ = ["AdversarySpec", "ConfigError", "ProverSpec", "RunResult", "ScenarioConfig", "emit_trace",
           "load_scenario", "parse_scenario", "run_scenario"]

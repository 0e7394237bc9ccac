"""
Run configuration: one JSON file per run.

Example::

    {
      "model_class": "non-segmented",
      "params": {"K": 1, "lambda": [1.0], "gamma_u": 1.0, "gamma_d": 1.0,
                 "gamma_ui": [1.0], "gamma_di": [1.0], "m": [0.2]},
      "integrate": {"t_end": 200.0, "step": 0.001, "sample_every": 1.0},
      "output": {"prefix": "results/benchmark"}
    }

Blocks other than model_class and params are optional; their defaults live
on the settings dataclasses below.
"""

import json
import logging
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from src.cli.writers import write_json
from src.markets.models import get_model
from src.markets.params import MarketParams, ParameterError, validate
from src.markets.state import ModelClass, StateDistribution

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Exception raised for unreadable or malformed run configurations."""
    pass


@dataclass(frozen=True)
class IntegrateSettings:
    t_end: float = 200.0
    step: float = 1e-3
    sample_every: float = 1.0


@dataclass(frozen=True)
class SteadySettings:
    tol: Optional[float] = None
    method: str = 'bisect'
    eps: float = 1e-12
    grid: int = 9
    restarts: int = 32
    seed: int = 20240101
    convention: str = 'printed'


@dataclass(frozen=True)
class SimulateSettings:
    N: int = 1000
    seed: int = 1
    t_end: float = 50.0
    sample_every: float = 1.0
    compare: bool = True
    ode_step: float = 1e-2
    max_events: Optional[int] = None


@dataclass(frozen=True)
class VerifySettings:
    tol: float = 1e-6
    draws: int = 3
    relax_step: float = 1e-2
    t_max: float = 1e4
    N: int = 5000
    t_end: float = 20.0
    sup_threshold: float = 0.06
    sweep: List[float] = field(default_factory=lambda: [0.5, 1.0, 1.5, 1.75])
    seed: int = 7


@dataclass(frozen=True, eq=False)
class RunConfig:
    model_class: ModelClass
    params: MarketParams
    initial_state: Optional[Union[Dict[str, float], List[float]]] = None
    integrate: IntegrateSettings = field(default_factory=IntegrateSettings)
    steady: SteadySettings = field(default_factory=SteadySettings)
    simulate: SimulateSettings = field(default_factory=SimulateSettings)
    verify: VerifySettings = field(default_factory=VerifySettings)
    output_prefix: str = 'results/run'


_BLOCKS = {
    'integrate': IntegrateSettings,
    'steady': SteadySettings,
    'simulate': SimulateSettings,
    'verify': VerifySettings,
}
_TOP_LEVEL = {'model_class', 'params', 'initial_state', 'output'} | set(_BLOCKS)


def _settings_from_dict(name: str, settings_class, data: Optional[Dict[str, Any]]):
    if data is None:
        return settings_class()
    if not isinstance(data, dict):
        raise ConfigError(f"Block '{name}' must be an object")
    known = {f.name for f in fields(settings_class)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"Unknown keys in block '{name}': {sorted(unknown)}")
    return settings_class(**data)


def config_from_dict(data: Dict[str, Any]) -> RunConfig:
    """
    Build a RunConfig from parsed JSON.

    Args:
        data: Top-level configuration object

    Returns:
        RunConfig with validated parameters

    Raises:
        ConfigError: On structural problems (unknown blocks or keys, bad model class)
        ParameterError: If the parameter block violates its invariants
    """
    if not isinstance(data, dict):
        raise ConfigError("Configuration must be a JSON object")
    unknown = set(data) - _TOP_LEVEL
    if unknown:
        raise ConfigError(f"Unknown configuration blocks: {sorted(unknown)}")
    if 'model_class' not in data:
        raise ConfigError("Required field 'model_class' is missing")
    if not isinstance(data.get('params'), dict):
        raise ConfigError("Required block 'params' is missing")

    try:
        model_class = ModelClass.parse(data['model_class'])
    except ValueError as e:
        raise ConfigError(str(e)) from e
    model = get_model(model_class)
    params = validate(model.params_from_dict(data['params']))

    settings = {name: _settings_from_dict(name, cls, data.get(name)) for name, cls in _BLOCKS.items()}
    output = data.get('output') or {}
    return RunConfig(
        model_class=model_class,
        params=params,
        initial_state=data.get('initial_state'),
        output_prefix=str(output.get('prefix', RunConfig.output_prefix)),
        **settings,
    )


def config_to_dict(config: RunConfig) -> Dict[str, Any]:
    data: Dict[str, Any] = {
        'model_class': config.model_class.value,
        'params': get_model(config.model_class).params_to_dict(config.params),
    }
    if config.initial_state is not None:
        data['initial_state'] = config.initial_state
    for name in _BLOCKS:
        data[name] = asdict(getattr(config, name))
    data['output'] = {'prefix': config.output_prefix}
    return data


def load_config(path: Union[str, Path]) -> RunConfig:
    """Read and validate a JSON run configuration."""
    path = Path(path)
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except FileNotFoundError as e:
        raise ConfigError(f"Config file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"Invalid JSON in {path}: {e}") from e
    except TypeError as e:
        raise ConfigError(f"Invalid configuration in {path}: {e}") from e

    try:
        config = config_from_dict(data)
    except ParameterError:
        raise
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid configuration in {path}: {e}") from e
    logger.info(f"Loaded {config.model_class.value} configuration from {path}")
    return config


def save_config(config: RunConfig, path: Union[str, Path]) -> Path:
    return write_json(path, config_to_dict(config))


def apply_overrides(config: RunConfig, seed: Optional[int] = None, tol: Optional[float] = None,
                    eps: Optional[float] = None, grid: Optional[int] = None,
                    out: Optional[str] = None) -> RunConfig:
    """Return a copy of the config with command-line overrides applied.

    --seed sets the simulation and restart seeds, --tol the solver and
    verification tolerances.
    """
    steady, simulate, verify = config.steady, config.simulate, config.verify
    if seed is not None:
        simulate = replace(simulate, seed=seed)
        steady = replace(steady, seed=seed)
        verify = replace(verify, seed=seed)
    if tol is not None:
        steady = replace(steady, tol=tol)
        verify = replace(verify, tol=tol)
    if eps is not None:
        steady = replace(steady, eps=eps)
    if grid is not None:
        steady = replace(steady, grid=grid)
    return replace(config, steady=steady, simulate=simulate, verify=verify,
                   output_prefix=out if out is not None else config.output_prefix)


def initial_distribution(config: RunConfig) -> StateDistribution:
    """The configured initial state, or the model's default one."""
    model = get_model(config.model_class)
    raw = config.initial_state
    if raw is None:
        return model.default_initial_state(config.params)
    try:
        if isinstance(raw, dict):
            return StateDistribution.from_mapping(config.params, raw)
        return model.state(raw)
    except ValueError as e:
        raise ConfigError(f"Invalid initial_state: {e}") from e


def solver_options(config: RunConfig) -> Dict[str, Any]:
    """Keyword options of the class-specific solver taken from the steady block."""
    steady = config.steady
    if config.model_class is ModelClass.NON_SEGMENTED:
        return {'method': steady.method}
    if config.model_class is ModelClass.PARTIALLY_SEGMENTED:
        return {'grid': steady.grid, 'eps_volume': steady.eps}
    return {'restarts': steady.restarts, 'seed': steady.seed, 'grid': steady.grid,
            'eps_volume': steady.eps}

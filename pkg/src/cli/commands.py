"""
The four subcommands. Each takes a validated RunConfig, writes its result
files under the configured output prefix and returns a summary dict.
"""

import logging
from pathlib import Path
from typing import Any, Dict

import numpy as np

from src.cli.config import RunConfig, initial_distribution, solver_options
from src.cli.verification import run_verification
from src.cli.writers import (condition_p_to_dict, steady_report, write_comparison, write_json,
                             write_simulation, write_trajectory)
from src.markets.models import get_model
from src.markets.state import ModelClass
from src.ode.integrator import integrate
from src.simulation.particles import compare_to_meanfield, initial_population, simulate
from src.steady.dispatch import solve_steady
from src.steady.heterogeneous import check_condition_P
from src.steady.results import NoSteadyState

logger = logging.getLogger(__name__)


def _output_path(config: RunConfig, suffix: str) -> Path:
    return Path(f"{config.output_prefix}_{suffix}")


def cmd_integrate(config: RunConfig) -> Dict[str, Any]:
    """Integrate the mean-field ODE and write the sampled trajectory as CSV."""
    model = get_model(config.model_class)
    settings = config.integrate
    trajectory = integrate(model.drift_function(config.params), initial_distribution(config),
                           settings.t_end, step=settings.step, sample_every=settings.sample_every,
                           params=config.params)
    path = write_trajectory(_output_path(config, 'trajectory.csv'), trajectory,
                            model.column_names(config.params))
    final = trajectory.final_state.values
    return {
        'command': 'integrate',
        'samples': len(trajectory),
        't_end': settings.t_end,
        'residual_at_end': float(np.max(np.abs(model.rhs(config.params, final)))),
        'files': [str(path)],
    }


def cmd_steady(config: RunConfig) -> Dict[str, Any]:
    """
    Solve for the steady state and write a JSON report.

    A heterogeneous market without a steady state is a normal outcome: the
    report carries no_steady_state=true and its diagnostics.
    """
    settings = config.steady
    result = solve_steady(config.params, tol=settings.tol, **solver_options(config))
    report = steady_report(config.model_class, config.params, result)
    if config.model_class is ModelClass.HETEROGENEOUS:
        report['condition_p'] = condition_p_to_dict(
            check_condition_P(config.params, convention=settings.convention)
        )
    path = write_json(_output_path(config, 'steady.json'), report)

    summary: Dict[str, Any] = {'command': 'steady', 'files': [str(path)],
                               'no_steady_state': isinstance(result, NoSteadyState)}
    if not isinstance(result, NoSteadyState):
        summary.update({'method': result.method.value, 'residual': result.residual_inf_norm})
    return summary


def cmd_simulate(config: RunConfig) -> Dict[str, Any]:
    """Run the particle system; optionally compare it with the ODE on the same grid."""
    model = get_model(config.model_class)
    settings = config.simulate
    start = initial_distribution(config)
    population = initial_population(config.params, settings.N, start)
    result = simulate(config.model_class, config.params, settings.N, population, settings.t_end,
                      settings.sample_every, settings.seed, max_events=settings.max_events)
    columns = model.column_names(config.params)
    files = [str(write_simulation(_output_path(config, 'simulation.csv'), result, columns))]

    summary: Dict[str, Any] = {
        'command': 'simulate',
        'N': result.N,
        'seed': result.seed,
        'events': result.event_count,
        'truncated': result.truncated,
    }
    if settings.compare:
        ode = integrate(model.drift_function(config.params), start, settings.t_end,
                        step=settings.ode_step, sample_every=settings.sample_every,
                        params=config.params)
        comparison = compare_to_meanfield(result, ode)
        files.append(str(write_comparison(_output_path(config, 'comparison.csv'), comparison)))
        summary['sup_distance'] = comparison.sup_distance

    files.append(str(write_json(_output_path(config, 'simulation.json'),
                                {**summary, 'metadata': result.metadata})))
    summary['files'] = files
    return summary


def cmd_verify(config: RunConfig) -> Dict[str, Any]:
    """Run the verification suite; summary['passed'] is False when any check failed."""
    verification = run_verification(config)
    path = write_json(_output_path(config, 'verify.json'), verification.to_dict())
    return {'command': 'verify', 'passed': verification.passed, **verification.stats,
            'files': [str(path)]}


COMMANDS = {
    'integrate': cmd_integrate,
    'steady': cmd_steady,
    'simulate': cmd_simulate,
    'verify': cmd_verify,
}

"""
End-to-end verification suite.

Every check has a name, a pass flag and a short detail string; the suite
collects them into a summary with the same statistics shape the import
pipeline used to report (totals plus a list of failures).
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from src.cli.config import RunConfig, initial_distribution, solver_options
from src.markets.models import get_model
from src.markets.params import HeterogeneousParams, NonSegmentedParams, PartiallySegmentedParams
from src.markets.state import ModelClass, constraint_residuals
from src.ode.integrator import integrate, relax_to_steady
from src.simulation.particles import compare_to_meanfield, initial_population, simulate
from src.steady.dispatch import solve_steady
from src.steady.heterogeneous import (TYPE_MASS_FLOOR, check_condition_P, counterexample_state,
                                      existence_verdict, solve_heterogeneous)
from src.steady.nonsegmented import F, solve_nonsegmented
from src.steady.partially_segmented import fixed_point_map, gauss_seidel, solve_partially_segmented
from src.steady.results import NoSteadyState, SteadySolution
from src.subdivision.box import Box
from src.subdivision.engine import check_faces

logger = logging.getLogger(__name__)

CONSERVATION_LIMIT = 1e-9
KERNEL_LIMIT = 1e-12
RELAX_TOL = 1e-10
UNIQUENESS_STARTS = 16
UNIQUENESS_LIMIT = 1e-8
SWEEP_LIMIT = 1e-9


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ''
    value: Optional[float] = None


@dataclass
class VerificationSummary:
    model_class: str
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def stats(self) -> Dict[str, Any]:
        failed = [check.name for check in self.checks if not check.passed]
        return {
            'checks_run': len(self.checks),
            'checks_passed': len(self.checks) - len(failed),
            'checks_failed': len(failed),
            'failed': failed,
        }

    def to_dict(self) -> Dict[str, Any]:
        return {
            'model_class': self.model_class,
            'passed': self.passed,
            **self.stats,
            'checks': [
                {'name': c.name, 'passed': c.passed, 'detail': c.detail, 'value': c.value}
                for c in self.checks
            ],
        }


def random_nonsegmented_params(rng: np.random.Generator, K: Optional[int] = None) -> NonSegmentedParams:
    """Random valid draw: rates in [0.1, 10], total mass in [0.05, 0.9]."""
    K = K or int(rng.integers(1, 6))
    total = rng.uniform(0.05, 0.9)
    m = rng.dirichlet(np.ones(K)) * total
    return NonSegmentedParams(
        K=K,
        lam=rng.uniform(0.1, 10.0, K),
        gamma_u=rng.uniform(0.1, 10.0),
        gamma_d=rng.uniform(0.1, 10.0),
        gamma_ui=rng.uniform(0.1, 10.0, K),
        gamma_di=rng.uniform(0.1, 10.0, K),
        m=m,
    )


def random_partially_segmented_params(rng: np.random.Generator,
                                      K: Optional[int] = None) -> PartiallySegmentedParams:
    K = K or int(rng.integers(1, 6))
    total = rng.uniform(0.05, 0.9)
    m = rng.dirichlet(np.ones(K)) * total
    return PartiallySegmentedParams(
        K=K,
        lam=rng.uniform(0.1, 10.0, K),
        gamma_ui=rng.uniform(0.1, 10.0, K),
        gamma_di=rng.uniform(0.1, 10.0, K),
        gamma_tilde_ui=rng.uniform(0.1, 10.0, K),
        gamma_tilde_di=rng.uniform(0.1, 10.0, K),
        m=m,
    )


def counterexample_params(s: float) -> HeterogeneousParams:
    """The non-existence example: c = (0, 0, 1), d = (1, 0, 0), a = 1, b = 0."""
    return HeterogeneousParams(lam=1.0, a=1.0, b=0.0, c=[0.0, 0.0, 1.0], d=[1.0, 0.0, 0.0], s=s)


def _run(name: str, check: Callable[[], CheckResult]) -> CheckResult:
    try:
        result = check()
    except Exception as e:
        logger.error(f"Check {name} raised {type(e).__name__}: {e}")
        return CheckResult(name, False, f"{type(e).__name__}: {e}")
    level = logging.INFO if result.passed else logging.ERROR
    logger.log(level, f"Check {name}: {'passed' if result.passed else 'FAILED'} {result.detail}")
    return result


def agreement_distance(params, solution: SteadySolution, relax_step: float, t_max: float):
    """Distance between a solver state and the ODE relaxation from the default start."""
    model = get_model(solution.state.model_class)
    report = relax_to_steady(model.drift_function(params), model.default_initial_state(params),
                             tol=RELAX_TOL, t_max=t_max, step=relax_step)
    distance = float(np.max(np.abs(report.final_state.values - solution.state.values)))
    return distance, report


def _conservation_check(config: RunConfig) -> CheckResult:
    model = get_model(config.model_class)
    params = config.params
    trajectory = integrate(model.drift_function(params), initial_distribution(config), t_end=100.0,
                           step=config.verify.relax_step, sample_every=1.0, params=params)
    start = constraint_residuals(params, trajectory.values[0])
    drift = max(float(np.max(np.abs(constraint_residuals(params, row) - start)))
                for row in trajectory.values)
    return CheckResult('conservation', drift <= CONSERVATION_LIMIT,
                       f"max constraint drift {drift:.3e} over [0, 100]", drift)


def _kernel_check(config: RunConfig) -> CheckResult:
    model = get_model(config.model_class)
    state = initial_distribution(config)
    gap = float(np.max(np.abs(model.kernel(config.params, state).drift(state)
                              - model.rhs(config.params, state))))
    return CheckResult('kernel_consistency', gap <= KERNEL_LIMIT, f"kernel drift gap {gap:.3e}", gap)


def _solver_checks(config: RunConfig) -> List[CheckResult]:
    settings = config.verify
    params = config.params
    checks = []
    outcome: Dict[str, Any] = {}

    def steady() -> CheckResult:
        result = solve_steady(params, tol=config.steady.tol, **solver_options(config))
        outcome['result'] = result
        if isinstance(result, NoSteadyState):
            return CheckResult('steady_solver', True,
                               f"no steady state ({result.diagnostics.get('message', '')})")
        limit = max(10.0 * result.tolerance, CONSERVATION_LIMIT)
        return CheckResult('steady_solver', result.residual_inf_norm <= limit,
                           f"{result.method.value} residual {result.residual_inf_norm:.3e}",
                           result.residual_inf_norm)

    def agreement() -> CheckResult:
        result = outcome.get('result')
        if result is None:
            return CheckResult('cross_method_agreement', False, 'no solver result to compare')
        if isinstance(result, NoSteadyState):
            return CheckResult('cross_method_agreement', True, 'skipped: no steady state')
        distance, report = agreement_distance(params, result, settings.relax_step, settings.t_max)
        if config.model_class is ModelClass.HETEROGENEOUS:
            high_mass = float(np.sum(report.final_state.values[:3]))
            if not report.converged:
                return CheckResult('cross_method_agreement', True, 'skipped: relaxation did not converge')
            if min(high_mass, 1.0 - high_mass) <= TYPE_MASS_FLOOR:
                return CheckResult('cross_method_agreement', True,
                                   'skipped: relaxation reached a single-type state')
        passed = report.converged and distance <= settings.tol
        return CheckResult('cross_method_agreement', passed,
                           f"solver vs relaxation {distance:.3e} (tolerance {settings.tol:.1e})",
                           distance)

    checks.append(_run('steady_solver', steady))
    checks.append(_run('cross_method_agreement', agreement))
    return checks


def _nonsegmented_checks(config: RunConfig, rng: np.random.Generator) -> List[CheckResult]:
    settings = config.verify
    params = config.params

    def bracket() -> CheckResult:
        upper = params.free_mass
        grid = np.linspace(0.0, upper, 20)
        values = np.array([F(x, params) for x in grid])
        passed = values[0] > 0 and values[-1] < 0 and bool(np.all(np.diff(values) < 0))
        return CheckResult('F_bracket_monotone', passed,
                           f"F(0)={values[0]:.6g}, F(1-sum m)={values[-1]:.6g}")

    def draws() -> CheckResult:
        worst = 0.0
        for _ in range(settings.draws):
            draw = random_nonsegmented_params(rng)
            solution = solve_nonsegmented(draw)
            distance, report = agreement_distance(draw, solution, settings.relax_step, settings.t_max)
            if not report.converged:
                return CheckResult('random_draw_agreement', False, 'relaxation did not converge')
            worst = max(worst, distance)
        return CheckResult('random_draw_agreement', worst <= settings.tol,
                           f"worst distance {worst:.3e} over {settings.draws} draws", worst)

    return [_run('F_bracket_monotone', bracket), _run('random_draw_agreement', draws)]


def _partially_segmented_checks(config: RunConfig, rng: np.random.Generator) -> List[CheckResult]:
    params = config.params
    tol = config.steady.tol or 1e-12

    def faces() -> CheckResult:
        certificate = check_faces(lambda x: fixed_point_map(params, x), Box.unit(params.K),
                                  config.steady.grid)
        return CheckResult('face_certificate', certificate.certified,
                           f"orientation {certificate.orientation}")

    def uniqueness() -> CheckResult:
        zeros = []
        for _ in range(UNIQUENESS_STARTS):
            x, residual, _, converged = gauss_seidel(params, rng.uniform(0.0, 1.0, params.K), tol=tol)
            if not converged:
                return CheckResult('uniqueness_multistart', False, f"start stalled at {residual:.3e}")
            zeros.append(x)
        spread = float(np.max(np.abs(np.array(zeros) - zeros[0])))
        return CheckResult('uniqueness_multistart', spread <= UNIQUENESS_LIMIT,
                           f"spread {spread:.3e} over {UNIQUENESS_STARTS} starts", spread)

    def k1_equivalence() -> CheckResult:
        twin = NonSegmentedParams(K=1, lam=params.lam, gamma_u=float(params.gamma_tilde_ui[0]),
                                  gamma_d=float(params.gamma_tilde_di[0]), gamma_ui=params.gamma_ui,
                                  gamma_di=params.gamma_di, m=params.m)
        segmented = solve_partially_segmented(params, tol=tol)
        pooled = solve_nonsegmented(twin)
        gap = float(np.max(np.abs(segmented.state.values - pooled.state.values)))
        return CheckResult('k1_equivalence', gap <= 1e-9, f"gap to the non-segmented twin {gap:.3e}", gap)

    checks = [_run('face_certificate', faces), _run('uniqueness_multistart', uniqueness)]
    if params.K == 1:
        checks.append(_run('k1_equivalence', k1_equivalence))
    return checks


def _heterogeneous_checks(config: RunConfig) -> List[CheckResult]:
    params = config.params
    settings = config.verify

    def condition_p() -> CheckResult:
        report = check_condition_P(params, convention=config.steady.convention)
        return CheckResult('condition_P', True,
                           f"holds={report.holds} margins={[round(m, 12) for m in report.margins]}")

    def sweep() -> CheckResult:
        verdicts = {}
        for s in settings.sweep:
            verdict = existence_verdict(s)
            verdicts[s] = verdict
            result = solve_heterogeneous(counterexample_params(s), restarts=config.steady.restarts,
                                         seed=config.steady.seed)
            if verdict == 'yes':
                expected = counterexample_state(s)
                if not isinstance(result, SteadySolution):
                    return CheckResult('counterexample_sweep', False, f"s={s}: no steady state found")
                gap = float(np.max(np.abs(result.state.values - expected)))
                if gap > SWEEP_LIMIT:
                    return CheckResult('counterexample_sweep', False,
                                       f"s={s}: solver is {gap:.3e} from the closed form")
            elif not (isinstance(result, NoSteadyState) and result.conclusive):
                return CheckResult('counterexample_sweep', False, f"s={s}: expected no steady state")
        detail = ', '.join(f"{s:g}: {v}" for s, v in verdicts.items())
        return CheckResult('counterexample_sweep', True, detail)

    return [_run('condition_P', condition_p), _run('counterexample_sweep', sweep)]


def _lln_check(config: RunConfig) -> CheckResult:
    settings = config.verify
    model = get_model(config.model_class)
    params = config.params
    start = initial_distribution(config)
    population = initial_population(params, settings.N, start)
    sim = simulate(config.model_class, params, settings.N, population, settings.t_end, 1.0,
                   settings.seed)
    ode = integrate(model.drift_function(params), start, settings.t_end,
                    step=settings.relax_step, sample_every=1.0, params=params)
    comparison = compare_to_meanfield(sim, ode)
    return CheckResult('law_of_large_numbers', comparison.sup_distance <= settings.sup_threshold,
                       f"sup distance {comparison.sup_distance:.4f} at N={settings.N}",
                       comparison.sup_distance)


def run_verification(config: RunConfig) -> VerificationSummary:
    """
    Run every check that applies to the configured market class.

    Args:
        config: Run configuration (its verify block sets the scale)

    Returns:
        VerificationSummary; summary.passed is False when any check failed
    """
    rng = np.random.Generator(np.random.PCG64(config.verify.seed))
    summary = VerificationSummary(model_class=config.model_class.value)

    summary.checks.append(_run('conservation', lambda: _conservation_check(config)))
    summary.checks.append(_run('kernel_consistency', lambda: _kernel_check(config)))
    summary.checks.extend(_solver_checks(config))

    if config.model_class is ModelClass.NON_SEGMENTED:
        summary.checks.extend(_nonsegmented_checks(config, rng))
    elif config.model_class is ModelClass.PARTIALLY_SEGMENTED:
        summary.checks.extend(_partially_segmented_checks(config, rng))
    else:
        summary.checks.extend(_heterogeneous_checks(config))

    summary.checks.append(_run('law_of_large_numbers', lambda: _lln_check(config)))

    stats = summary.stats
    logger.info(f"Verification: {stats['checks_passed']}/{stats['checks_run']} checks passed")
    return summary

"""
Invariant suite of an assembled Bellman system.

Each check returns a CheckResult; run_checks runs the whole suite on one
discretization and adds the closed-form fixed point of the constant problem.
"""

import collections
import dataclasses
import logging
import math

from typing import List

import numpy as np

import ipdehjb.constants
import ipdehjb.helper
import ipdehjb.presets
import ipdehjb.scheme
import ipdehjb.solver
import ipdehjb.analysis
import ipdehjb.analysis.constants as anconst

logger = logging.getLogger(__name__)

# Randomized instances per check
RANDOM_PAIRS = 10

# Slack of the pointwise order and contraction checks
ORDER_SLACK = 1e-12
CONTRACTION_SLACK = 1e-10
RATIO_FLOOR = 1e-5                            # smallest update, relative to the solution scale, whose ratio is checked

# Time step and tolerance of the closed-form fixed point
FIXED_POINT_H = 0.1
FIXED_POINT_TOL = 1e-10

CheckResult = collections.namedtuple('CheckResult', ['name', 'passed', 'value', 'threshold', 'message'])
CheckResult.__doc__ = """ Outcome of one invariant check: the measured value against its threshold. """


def format_result(result: CheckResult) -> str:
    """ One line: name, PASS or FAIL, and the message. """
    verdict = 'PASS' if result.passed else 'FAIL'
    return f'{result.name} {verdict} {result.message}'


def fixed_point_check(tol: float = FIXED_POINT_TOL) -> CheckResult:
    """ The constant problem c = f = 1 solves to h / (1 - e^{-h}) at every vertex. """
    preset = ipdehjb.presets.get_preset(ipdehjb.presets.PRESET_CONSTANT)
    disc = ipdehjb.scheme.build_system(preset.spec, None, FIXED_POINT_H, preset.defaults['discretization.box'],
                                       cells=preset.defaults['discretization.cells'], threads=1)
    outcome = ipdehjb.solver.solve_policy_iteration(disc.system, tol=tol)
    expected = FIXED_POINT_H / (1.0 - math.exp(-FIXED_POINT_H))
    deviation = ipdehjb.helper.sup_norm(outcome.nodal_solution - expected)
    value = float(np.mean(outcome.nodal_solution))
    return CheckResult('fixed_point', deviation <= tol, deviation, tol,
                       f'value={value:.6f} closed_form={expected:.6f} deviation={deviation:.3e}')


def row_sum_check(system) -> CheckResult:
    defect = system.row_sum_defect()
    tol = ipdehjb.constants.ROW_SUM_TOLERANCE
    return CheckResult('row_sums', defect <= tol, defect, tol, f'max|row sum + exterior mass - 1|={defect:.3e}')


def nonnegativity_check(system) -> CheckResult:
    low = min(system.min_entry(), float(np.min(system.ext_mass_M)), float(np.min(system.ext_mass_P)))
    return CheckResult('nonnegativity', low >= 0, low, 0.0, f'min entry={low:.3e}')


def stencil_check(disc) -> CheckResult:
    """ Each foot point row of the diffusion stencil touches at most N + 1 vertices. """
    limit = disc.mesh.dim + 1
    worst = 0
    for v in disc.coeffs.spec.controls:
        for matrix, _, _ in ipdehjb.scheme.stencil_matrices(disc.coeffs, disc.mesh, disc.system.h, v):
            worst = max(worst, int(np.max(np.diff(matrix.indptr), initial=0)))
    return CheckResult('stencil_sparsity', worst <= limit, worst, limit, f'max nonzeros per row={worst}')


def _random_vectors(system, rng, scale):
    return scale * (2 * rng.random(system.n_vertices) - 1)


def _scale(system):
    return max(1.0, float(np.max(np.abs(system.f))) / max(system.c0, 1e-12))


def monotonicity_check(system, seed: int = 0, pairs: int = RANDOM_PAIRS) -> CheckResult:
    """ u <= w implies T u <= T w. """
    rng = np.random.default_rng(seed)
    scale = _scale(system)
    worst = 0.0
    for _ in range(pairs):
        u = _random_vectors(system, rng, scale)
        w = u + scale * rng.random(system.n_vertices)
        tu, _ = ipdehjb.solver.bellman_apply(system, u)
        tw, _ = ipdehjb.solver.bellman_apply(system, w)
        worst = max(worst, float(np.max(tu - tw, initial=0.0)))
    tol = ORDER_SLACK * scale
    return CheckResult('monotonicity', worst <= tol, worst, tol, f'max(Tu - Tw)={worst:.3e} over {pairs} pairs')


def contraction_check(system, tol: float, seed: int = 0, pairs: int = RANDOM_PAIRS) -> CheckResult:
    """ |T u - T w| <= q |u - w| on random pairs, and value iteration updates shrink by at most q. """
    q = system.contraction
    rng = np.random.default_rng(seed + 1)
    scale = _scale(system)
    worst = 0.0
    for _ in range(pairs):
        u, w = _random_vectors(system, rng, scale), _random_vectors(system, rng, scale)
        tu, _ = ipdehjb.solver.bellman_apply(system, u)
        tw, _ = ipdehjb.solver.bellman_apply(system, w)
        worst = max(worst, ipdehjb.helper.sup_norm(tu - tw) / ipdehjb.helper.sup_norm(u - w))
    updates = np.asarray(ipdehjb.solver.solve_value_iteration(system, tol=tol).updates)
    # Ratios of updates near roundoff carry no contraction information
    keep = updates[:-1] > RATIO_FLOOR * scale
    ratios = updates[1:][keep] / updates[:-1][keep]
    worst = max(worst, float(np.max(ratios, initial=0.0)))
    limit = q + CONTRACTION_SLACK
    return CheckResult('contraction', worst <= limit, worst, limit, f'max ratio={worst:.12f} q={q:.12f}')


def uniform_bound_check(system, outcome, tol: float) -> CheckResult:
    """ |u| <= max(h sup|f| / (1 - e^{-h c0}), sup|exterior|). """
    bound = system.h * float(np.max(np.abs(system.f))) / (1.0 - system.contraction)
    for value, mass in ((system.ext_M, system.ext_mass_M), (system.ext_P, system.ext_mass_P)):
        leaving = mass > 0
        bound = max(bound, float(np.max(np.abs(value[leaving] / mass[leaving]), initial=0.0)))
    size = ipdehjb.helper.sup_norm(outcome.nodal_solution)
    return CheckResult('uniform_bound', size <= bound + tol, size, bound, f'|u|={size:.6g} bound={bound:.6g}')


def comparison_check(system, tol: float, seed: int = 0, pairs: int = RANDOM_PAIRS,
                     method: str = ipdehjb.constants.METHOD_POLICY) -> CheckResult:
    """ f1 <= f2 implies u1 <= u2 for the solutions of the discrete systems. """
    rng = np.random.default_rng(seed + 2)
    base = ipdehjb.solver.solve(system, method=method, tol=tol).nodal_solution
    worst = -math.inf
    for _ in range(pairs):
        raised = dataclasses.replace(system, f=system.f + rng.random(system.f.shape))
        upper = ipdehjb.solver.solve(raised, method=method, tol=tol).nodal_solution
        worst = max(worst, float(np.max(base - upper)))
    limit = 2 * tol
    return CheckResult('comparison', worst <= limit, worst, limit, f'max(u1 - u2)={worst:.3e} over {pairs} pairs')


def cross_solver_check(system, tol: float) -> CheckResult:
    value = ipdehjb.solver.solve_value_iteration(system, tol=tol)
    policy = ipdehjb.solver.solve_policy_iteration(system, tol=tol)
    gap = ipdehjb.helper.sup_norm(value.nodal_solution - policy.nodal_solution)
    limit = 2 * tol
    return CheckResult('cross_solver', gap <= limit, gap, limit,
                       f'|u_value - u_policy|={gap:.3e} ({value.iterations} / {policy.iterations} iterations)')


def consistency_check(disc, threads=None) -> CheckResult:
    """ Consistency order of the semi-discrete operator on a sine test function. """
    spec = disc.coeffs.spec
    report = ipdehjb.analysis.consistency_study(spec, disc.coeffs, disc.measure,
                                                ipdehjb.analysis.sine_function(spec.dim), threads=threads)
    order = 'nofit' if report.fitted_order is None else f'{report.fitted_order:.4f}'
    return CheckResult('consistency', report.passed, report.fitted_order, anconst.CONSISTENCY_MIN_ORDER,
                       f'fitted_order={order}')


def run_checks(disc, tol: float = ipdehjb.constants.DEFAULT_SOLVER_TOL, threads=None, seed: int = 0,
               pairs: int = RANDOM_PAIRS) -> List[CheckResult]:
    """ Run the whole suite on one discretization.

        Arguments:
            disc: (Discretization) output of scheme.build_system.
            tol: (float) solver tolerance of the solve-based checks.
            seed: (int) seed of the random instances.
            pairs: (int) random instances per randomized check.
    """
    system = disc.system
    outcome = ipdehjb.solver.solve_policy_iteration(system, tol=tol)
    results = [fixed_point_check(),
               row_sum_check(system),
               nonnegativity_check(system),
               stencil_check(disc),
               monotonicity_check(system, seed=seed, pairs=pairs),
               contraction_check(system, tol, seed=seed, pairs=pairs),
               uniform_bound_check(system, outcome, tol),
               comparison_check(system, tol, seed=seed, pairs=pairs),
               cross_solver_check(system, tol),
               consistency_check(disc, threads=threads)]
    for result in results:
        log = logger.info if result.passed else logger.warning
        log('Check %s', format_result(result))
    return results

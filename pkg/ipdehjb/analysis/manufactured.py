"""
Manufactured solutions: problems whose source term is computed so that a chosen
smooth function solves the continuous equation exactly.

For a smooth u* and each control v let G_v = tr[a D2 u*] + b . Du* - c u* + (I or J) u*.
Setting f(x, v) = -G_v(x) + offset * [v != optimal] makes the designated control
attain the minimum everywhere with value 0, so u* is the solution and the
optimal policy is known.
"""

from __future__ import annotations

import dataclasses
import logging

from typing import Optional

import numpy as np

import ipdehjb.constants
import ipdehjb.errors
import ipdehjb.helper
import ipdehjb.levy
import ipdehjb.analysis.constants as anconst
import ipdehjb.analysis.oracle
import ipdehjb.analysis.parameters
from ipdehjb.analysis.oracle import SmoothFunction, as_smooth, continuous_generator, continuous_operator_oracle
from ipdehjb.constants import COUPLING_BOUNDED, COUPLING_CASE_I, COUPLING_CASE_II, COUPLING_FIRST_ORDER
from ipdehjb.levy import LevyModel
from ipdehjb.problem import ControlSet, ProblemSpec

logger = logging.getLogger(__name__)

# Names of the built-in manufactured cases
CASE_FIRST_ORDER_1D = 'first_order_1d'
CASE_GENERAL_1D = 'general_1d'
CASE_I_1D = 'case_i_1d'
CASE_II_1D = 'case_ii_1d'
BUILTIN_CASES = (CASE_FIRST_ORDER_1D, CASE_GENERAL_1D, CASE_I_1D, CASE_II_1D)


@dataclasses.dataclass(frozen=True)
class ManufacturedCase:
    """ A problem with a known exact solution.

        Arguments:
            u_star: (SmoothFunction) the exact solution.
            problem: (ProblemSpec) the problem, f included.
            model: (LevyModel) the untruncated jump density, None without jumps.
            oracle_tol: (float) accuracy the oracle residual was certified to.
            optimal: (int) index of the control that is optimal everywhere.
            name: (str) label used in reports.
            box: (tuple) (lo, hi) of the computational box.
            coupling_case: (str) the select_parameters case of the problem.
            residual: (float) largest oracle residual found by the construction gate.
            outer: (float) outer radius of the jump integrals behind f.
    """
    u_star: SmoothFunction
    problem: ProblemSpec
    model: Optional[LevyModel]
    oracle_tol: float
    optimal: int = 0
    name: str = 'manufactured'
    box: Optional[tuple] = None
    coupling_case: str = COUPLING_BOUNDED
    residual: float = 0.0
    outer: Optional[float] = None

    @property
    def alpha(self) -> float:
        return self.model.alpha if self.model is not None else 0.0

    @property
    def ell(self) -> float:
        return self.model.tail_rate if self.model is not None else 1.0

    @property
    def exterior_rule(self):
        """ u* itself: the exact value of mass leaving the mesh. """
        return lambda points: self.u_star(points)

    def solution(self, x) -> np.ndarray:
        return self.u_star(ipdehjb.helper.as_points(x, self.problem.dim))


def _control_index(controls, v):
    for i, w in enumerate(controls):
        if w is v or np.array_equal(w, v):
            return i
    raise ipdehjb.errors.InvalidParameterError(f'{v!r} is not one of the controls {controls!r}.')


def manufacture(u_star, spec: ProblemSpec, model: Optional[LevyModel] = None, optimal: int = 0,
                offset: float = 0.5, oracle_tol: float = anconst.ORACLE_TOL, box=None,
                outer: Optional[float] = None, seed: int = 0, name: Optional[str] = None,
                coupling_case: Optional[str] = None) -> ManufacturedCase:
    """ Compute f so that u_star solves the problem, then gate on the oracle residual.

        Arguments:
            u_star: (SmoothFunction or callable) the exact solution; callables get finite
                difference derivatives.
            spec: (ProblemSpec) the problem; its f is replaced.
            model: (LevyModel) the untruncated jump density, None without jumps.
            optimal: (int) index of the control made optimal everywhere.
            offset: (float) positive excess of the other controls' residuals.
            oracle_tol: (float) accuracy of the oracle; the residual gate is 10 times it.
            box: (tuple) (lo, hi) of the residual sample. Defaults to spec.box, then [-1, 1]^N.
            outer: (float) outer radius of the jump integrals.
            seed: (int) seed of the residual sample.
            name: (str) label used in reports. Defaults to the problem's name.
            coupling_case: (str) select_parameters case. Derived from the problem when omitted.
    """
    if not 0 <= optimal < spec.control_count:
        raise ipdehjb.errors.InvalidParameterError(
            f'Optimal control index {optimal} is outside 0..{spec.control_count - 1}.')
    if spec.control_count > 1 and not offset > 0:
        raise ipdehjb.errors.InvalidParameterError(f'Offset must be positive, received {offset}.')
    u_star = as_smooth(u_star, spec.dim)
    if spec.jump_shape is None:
        model = None
    if model is not None and outer is None:
        outer = anconst.OUTER_DECAY / model.tail_rate
    controls = spec.controls
    base = dataclasses.replace(spec, f=None)

    def f(x, v):
        points = ipdehjb.helper.as_points(x, spec.dim)
        generator = continuous_generator(base, model, v, u_star, points, outer)
        value = spec.evaluate('c', points, v) * u_star(points) - generator
        if _control_index(controls, v) != optimal:
            value = value + offset
        return value

    problem = dataclasses.replace(spec, f=f, name=name or spec.name)
    lo, hi = _sample_box(problem, box)
    points = lo + (hi - lo) * np.random.default_rng(seed).random((anconst.ORACLE_RESIDUAL_POINTS, spec.dim))
    values = np.vstack([continuous_operator_oracle(problem, points, v, u_star, model=model, outer=outer)
                        for v in controls])
    residual = float(np.max(np.abs(values.min(axis=0))))
    gate = anconst.ORACLE_RESIDUAL_FACTOR * oracle_tol
    if not residual <= gate:
        raise ipdehjb.errors.ManufacturedCaseError(
            f'Manufactured case {problem.name}: oracle residual {residual:.3e} exceeds {gate:.3e}.')
    if coupling_case is None:
        coupling_case = _default_coupling(problem, model)
    logger.info('Manufactured case %s: %d controls, optimal %d, residual %.3e.',
                problem.name, spec.control_count, optimal, residual)
    return ManufacturedCase(u_star=u_star, problem=problem, model=model, oracle_tol=oracle_tol,
                            optimal=optimal, name=problem.name, box=(lo, hi),
                            coupling_case=coupling_case, residual=residual, outer=outer)


def _sample_box(spec, box):
    box = box if box is not None else spec.box
    if box is None:
        box = (-1.0, 1.0)
    return (np.broadcast_to(np.asarray(box[0], dtype=float), (spec.dim,)).copy(),
            np.broadcast_to(np.asarray(box[1], dtype=float), (spec.dim,)).copy())


def _default_coupling(spec, model):
    sample = ipdehjb.helper.box_sample(*_sample_box(spec, None), 16, 0)
    diffusive = any(np.any(spec.evaluate('sigma', sample, v) != 0) for v in spec.controls)
    singular = model is not None and model.singular
    return ipdehjb.analysis.parameters.coupling_case(model.alpha if singular else 0.0, diffusive, singular)


####
# Built-in cases
####

def _bump():
    """ exp(-x^2) + 0.5 sin(x): smooth, bounded, not symmetric. """
    gauss = ipdehjb.analysis.oracle.gaussian_function(1)
    sine = ipdehjb.analysis.oracle.sine_function(1)
    return SmoothFunction(value=lambda x: gauss(x) + 0.5 * sine(x),
                          grad=lambda x: gauss.gradient(x) + 0.5 * sine.gradient(x),
                          hess=lambda x: gauss.hessian(x) + 0.5 * sine.hessian(x),
                          dim=1, name='bump')


def _first_order_1d(oracle_tol):
    model = ipdehjb.levy.builtin_model('merton', (1.0, 0.3, 0.0))
    spec = ProblemSpec(dim=1, controls=ControlSet((-0.5, 0.5)),
                       sigma=lambda x, v: 0.0, b=lambda x, v: v, c=lambda x, v: 1.0, f=None,
                       eta1=lambda x, v: 0.3, jump_shape=ipdehjb.levy.identity_shape(1),
                       box=((-1.5,), (1.5,)), name=CASE_FIRST_ORDER_1D)
    return manufacture(_bump(), spec, model, oracle_tol=oracle_tol, coupling_case=COUPLING_FIRST_ORDER)


def _general_1d(oracle_tol):
    model = ipdehjb.levy.builtin_model('merton', (1.0, 0.5, 0.0))
    spec = ProblemSpec(dim=1, controls=ControlSet((0.2, 0.4)),
                       sigma=lambda x, v: v, b=lambda x, v: -0.2 * np.tanh(x[:, :1]), c=lambda x, v: 1.0,
                       f=None, eta1=lambda x, v: 0.2, jump_shape=ipdehjb.levy.identity_shape(1),
                       box=((-2.0,), (2.0,)), name=CASE_GENERAL_1D)
    return manufacture(_bump(), spec, model, oracle_tol=oracle_tol, coupling_case=COUPLING_BOUNDED)


def _tempered_stable_1d(alpha, form, name, case, oracle_tol):
    model = ipdehjb.levy.builtin_model('tempered_stable', (alpha, 1.0, 1.0, 1.0, 1.0))
    spec = ProblemSpec(dim=1, controls=ControlSet((-0.3, 0.3)),
                       sigma=lambda x, v: 0.2, b=lambda x, v: v, c=lambda x, v: 1.0, f=None,
                       eta1=lambda x, v: 0.1, jump_shape=ipdehjb.levy.identity_shape(1), form=form,
                       box=((-2.0,), (2.0,)), name=name)
    return manufacture(_bump(), spec, model, oracle_tol=oracle_tol, coupling_case=case)


_BUILDERS = {
    CASE_FIRST_ORDER_1D: _first_order_1d,
    CASE_GENERAL_1D: _general_1d,
    CASE_I_1D: lambda tol: _tempered_stable_1d(0.5, ipdehjb.constants.FORM_F, CASE_I_1D, COUPLING_CASE_I, tol),
    CASE_II_1D: lambda tol: _tempered_stable_1d(1.5, ipdehjb.constants.FORM_J, CASE_II_1D, COUPLING_CASE_II, tol),
}


def builtin_case(name: str, oracle_tol: float = anconst.ORACLE_TOL) -> ManufacturedCase:
    """ Build one of the BUILTIN_CASES by name. """
    if name not in _BUILDERS:
        raise ipdehjb.errors.InvalidParameterError(
            f'Unknown manufactured case "{name}". Supported cases: {", ".join(BUILTIN_CASES)}.')
    return _BUILDERS[name](oracle_tol)

"""
Consistency, truncation, blow-up, convergence, continuous dependence and mesh
refinement studies.

A study computes one quantity per level (a time step, a truncation radius, a
perturbation size or a mesh size), fits the least-squares slope of its
logarithm against the logarithm of the level, and gates the slope against the
rate the analysis of the scheme predicts.
"""

from __future__ import annotations

import collections
import dataclasses
import logging
import math

from abc import ABC, abstractmethod
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
import scipy.optimize

import ipdehjb.base
import ipdehjb.constants
import ipdehjb.errors
import ipdehjb.helper
import ipdehjb.levy
import ipdehjb.scheme
import ipdehjb.solver
import ipdehjb.analysis.constants as anconst
from ipdehjb.analysis.oracle import as_smooth, continuous_generator, generator_oracle
from ipdehjb.analysis.parameters import select_parameters
from ipdehjb.analysis.studymanager import StudyManager
from ipdehjb.constants import COUPLING_BOUNDED, COUPLING_CASE_I, COUPLING_CASE_II, COUPLING_FIRST_ORDER

logger = logging.getLogger(__name__)

GRID_COLUMNS = ['h', 'k', 'dz', 'r', 'R']
LEVEL_COLUMNS = GRID_COLUMNS + ['error', 'iterations', 'seconds']

GATE_PASS = 'PASS'
GATE_FAIL = 'FAIL'
GATE_INFO = 'INFO'

# Minimum convergence order per coupling case; None marks an informational study
CONVERGENCE_THRESHOLDS = {
    COUPLING_FIRST_ORDER: anconst.FIRST_ORDER_MIN_ORDER,
    COUPLING_BOUNDED: anconst.GENERAL_MIN_ORDER,
    COUPLING_CASE_I: anconst.GENERAL_MIN_ORDER,
    COUPLING_CASE_II: None,
}


####
# Reports
####

@dataclasses.dataclass
class StudyReport:
    """ Levels, errors and the fitted order of one study.

        Arguments:
            name: (str) the study and its subject.
            levels: (DataFrame) one row per level with columns h, k, dz, r, R, error,
                iterations, seconds and any study-specific columns.
            abscissa: (str) the column the log-log slope is fitted against.
            fitted_order: (float) least-squares slope, None when no fit was made.
            threshold: (float) minimum order of the gate.
            target: (float) expected slope of a two-sided gate.
            tolerance: (float) half width of the two-sided gate.
            informational: (bool) reported without gating.
            exact: (bool) all errors at roundoff level; the fit is skipped and the study passes.
            gates: (dict) additional named checks that must all hold.
            details: (list) per-level diagnostics.
            extras: (dict) study-specific results (fitted constants, effective constants).
            quantity: (str) name of the recorded quantity.
    """
    name: str
    levels: pd.DataFrame
    abscissa: str = 'h'
    fitted_order: Optional[float] = None
    threshold: Optional[float] = None
    target: Optional[float] = None
    tolerance: Optional[float] = None
    informational: bool = False
    exact: bool = False
    gates: Dict[str, bool] = dataclasses.field(default_factory=dict)
    details: List[dict] = dataclasses.field(default_factory=list)
    extras: Dict = dataclasses.field(default_factory=dict)
    quantity: str = 'error'

    @property
    def grid(self) -> list:
        """ (h, k, dz, r, R) per level. """
        return list(self.levels[GRID_COLUMNS].itertuples(index=False, name=None))

    @property
    def errors(self) -> np.ndarray:
        return self.levels['error'].to_numpy(dtype=float)

    @property
    def passed(self) -> bool:
        if self.informational:
            return True
        if not all(self.gates.values()):
            return False
        if self.exact:
            return True
        if self.fitted_order is None:
            return False
        if self.threshold is not None and self.fitted_order < self.threshold:
            return False
        if self.target is not None and abs(self.fitted_order - self.target) > self.tolerance:
            return False
        return True

    @property
    def verdict(self) -> str:
        if self.informational:
            return GATE_INFO
        return GATE_PASS if self.passed else GATE_FAIL

    def threshold_label(self) -> str:
        if self.threshold is not None:
            return f'{self.threshold:g}'
        if self.target is not None:
            return f'{self.target - self.tolerance:g}..{self.target + self.tolerance:g}'
        return 'none'

    def summary_lines(self) -> List[str]:
        order = 'nofit' if self.fitted_order is None else f'{self.fitted_order:.6g}'
        return ['# fitted_order,threshold,pass', f'# {order},{self.threshold_label()},{self.verdict}']

    def to_csv(self, path, header=None, timings: bool = False):
        """ Write the levels as CSV, preceded by a comment header and followed by the summary lines.

            Arguments:
                path: (str) output file.
                header: (dict) resolved settings written as comment lines.
                timings: (bool) keep the measured seconds; otherwise the column is 0.
        """
        frame = self.levels.copy()
        if not timings:
            frame['seconds'] = 0.0
        with open(path, 'w', encoding='utf-8', newline='') as handle:
            if header:
                handle.write(ipdehjb.base.format_header(header))
            frame.to_csv(handle, index=False, na_rep='', float_format=ipdehjb.constants.FLOAT_FORMAT,
                         lineterminator='\n')
            handle.write('\n'.join(self.summary_lines()) + '\n')


def read_study_csv(path):
    """ Read a study CSV; returns (levels frame, summary dict with fitted_order, threshold and pass). """
    with open(path, 'r', encoding='utf-8') as handle:
        comments = [line[1:].strip() for line in handle if line.startswith('#')]
    frame = pd.read_csv(path, comment='#')
    keys, values = comments[-2].split(','), comments[-1].split(',')
    return frame, dict(zip(keys, values))


ConsistencyFunction = collections.namedtuple(
    'ConsistencyFunction', ['C1', 'C2', 'K_tilde', 'epsilon', 'lam', 'drift_moment'])
ConsistencyFunction.__doc__ = """ Fitted constants of the consistency error model

    E(h) = C1 h K (1/eps + 1/eps^2 + 1/eps^3) + C2 h lam ((1 + |m1|) K + K / eps)

with K the derivative bound of the test function, eps its smoothing scale, lam the
jump intensity and m1 the compensator first moment. Reported only.
"""


def fit_consistency_function(h_list, errors, K_tilde: float, lam: float, drift_moment: float = 0.0,
                             epsilon=1.0) -> ConsistencyFunction:
    """ Nonnegative least-squares fit of C1 and C2 in the consistency error model.

        Both terms are linear in h, so C1 and C2 separate only when epsilon varies
        across the levels; with a single epsilon the fit returns one nonnegative
        solution reproducing the errors.

        Arguments:
            h_list: (list of float) time steps.
            errors: (list of float) measured consistency errors per level.
            epsilon: (float or list of float) smoothing scale, per level or shared.
    """
    h = np.asarray(h_list, dtype=float)
    eps = np.broadcast_to(np.asarray(epsilon, dtype=float), h.shape)
    local = h * K_tilde * (1.0 / eps + eps ** -2 + eps ** -3)
    jump = h * lam * ((1.0 + abs(drift_moment)) * K_tilde + K_tilde / eps)
    coeffs, _ = scipy.optimize.nnls(np.column_stack([local, jump]), np.asarray(errors, dtype=float))
    epsilon = float(eps[0]) if np.all(eps == eps[0]) else tuple(float(e) for e in eps)
    return ConsistencyFunction(C1=float(coeffs[0]), C2=float(coeffs[1]), K_tilde=float(K_tilde),
                               epsilon=epsilon, lam=float(lam), drift_moment=float(drift_moment))


def _fit(abscissa, errors, floor):
    """ (fitted order, exact flag). """
    errors = np.asarray(errors, dtype=float)
    if len(errors) and np.all(np.abs(errors) <= floor):
        return None, True
    return ipdehjb.helper.fit_order(abscissa, errors, min_levels=anconst.MIN_FIT_LEVELS), False


def _frame(rows, extra_columns=()):
    columns = LEVEL_COLUMNS + [c for c in extra_columns if c not in LEVEL_COLUMNS]
    records = [{c: row.get(c, math.nan) for c in columns} for row in rows]
    frame = pd.DataFrame.from_records(records, columns=columns)
    frame['iterations'] = frame['iterations'].fillna(0).astype(np.int64)
    return frame


def _details(rows):
    return [{k: v for k, v in row.items() if k not in LEVEL_COLUMNS and not k.startswith('_')} for row in rows]


def _default_points(dim):
    axis = np.linspace(-0.7, 1.1, 4)
    return np.stack(np.meshgrid(*([axis] * dim), indexing='ij'), axis=-1).reshape(-1, dim)


def _interior(mesh, width):
    """ Vertices at distance >= width from the boundary of the mesh box. """
    lo, hi = mesh.box
    return np.all((mesh.vertices >= lo + width - 1e-12) & (mesh.vertices <= hi - width + 1e-12), axis=1)


def _local_reach(discretization):
    """ Largest drift and diffusion foot point displacement; jumps leaving the box are priced exactly. """
    system = discretization.system
    spec = discretization.coeffs.spec
    return ipdehjb.scheme.reach(spec, discretization.coeffs, None, system.h, discretization.mesh.vertices)


####
# Studies
####

class Study(ABC):
    """ A sequence of independent levels followed by a fit.

        Arguments:
            levels: (list of float) the level values, in the order they are reported.
            threads: (int) worker budget of the study.
    """
    _internal_counter = [0]
    name = 'study'
    level_name = 'h'
    quantity = 'error'

    def __init__(self, levels: Sequence[float], threads: Optional[int] = None):
        self.uniq_id = self._internal_counter[0]
        self._internal_counter[0] += 1

        self.levels = tuple(float(x) for x in levels)
        if not self.levels:
            raise ipdehjb.errors.InvalidParameterError(f'{self.name} needs at least one level.')
        self.threads = threads
        self._status = anconst.STATUS_STUDY_NEW
        self.report = None

    @property
    def status(self):
        return self._status

    @status.setter
    def status(self, s):
        if s not in anconst.STATUS_STUDY_OPTIONS:
            raise ValueError(f'Unsupported study status: {s}.')
        self._status = s

    def describe_level(self, level) -> str:
        return f'{self.level_name}={level:g}'

    def run(self, manager: Optional[StudyManager] = None) -> StudyReport:
        """ Compute every level and build the report. """
        if self.status == anconst.STATUS_STUDY_RUNNING:
            raise ValueError(f'Study {self.uniq_id} is already running.')
        manager = manager or StudyManager(threads=self.threads)
        self.status = anconst.STATUS_STUDY_RUNNING
        try:
            self.prepare(manager.level_threads)
            rows = manager.run_levels(self)
            self.report = self.summarize(rows)
        except Exception:
            self.status = anconst.STATUS_STUDY_FAILED
            raise
        self.status = anconst.STATUS_STUDY_COMPLETE
        logger.info('%s: fitted order %s, %s.', self.name,
                    'nofit' if self.report.fitted_order is None else f'{self.report.fitted_order:.4f}',
                    self.report.verdict)
        return self.report

    def prepare(self, threads):
        """ Level-independent work done once before the levels run. """
        pass

    @abstractmethod
    def run_level(self, level: float, threads: int) -> dict:
        pass

    @abstractmethod
    def summarize(self, rows: List[dict]) -> StudyReport:
        pass


class ConsistencyStudy(Study):
    """ Local truncation error of the semi-discrete operator against the generator it approximates. """
    name = 'consistency'

    def __init__(self, spec, coeffs, measure, phi, h_list=anconst.CONSISTENCY_H_LIST, points=None,
                 threads=None):
        super().__init__(h_list, threads=threads)
        self.spec = spec
        self.coeffs = coeffs
        self.measure = measure
        self.phi = as_smooth(phi, spec.dim)
        self.points = ipdehjb.helper.as_points(points if points is not None else _default_points(spec.dim),
                                               spec.dim)
        self._reference = None

    def prepare(self, threads):
        self._reference = [generator_oracle(self.spec, self.coeffs, self.measure, v, self.phi, self.points)
                           for v in self.spec.controls]

    def run_level(self, level, threads):
        error = 0.0
        for v, reference in zip(self.spec.controls, self._reference):
            approx = ipdehjb.scheme.semi_discrete_apply(self.spec, self.coeffs, self.measure, level, v,
                                                        self.phi, self.points)
            error = max(error, ipdehjb.helper.sup_norm(approx - reference))
        R = self.measure.R if self.measure is not None else math.nan
        r = self.measure.r if self.measure is not None else math.nan
        return {'h': level, 'r': r, 'R': R, 'error': error}

    def summarize(self, rows):
        frame = _frame(rows)
        order, exact = _fit(frame['h'], frame['error'], anconst.ROUNDOFF_FLOOR)
        report = StudyReport(name=f'{self.name}:{self.spec.name}:{self.phi.name}', levels=frame,
                             fitted_order=order, threshold=anconst.CONSISTENCY_MIN_ORDER, exact=exact,
                             details=_details(rows))
        if not exact:
            report.extras['consistency_function'] = fit_consistency_function(
                frame['h'], frame['error'], self._derivative_bound(), self._lam(), self._drift_moment())
        return report

    def _derivative_bound(self):
        return max(ipdehjb.helper.sup_norm(self.phi(self.points)),
                   ipdehjb.helper.sup_norm(self.phi.gradient(self.points)),
                   ipdehjb.helper.sup_norm(self.phi.hessian(self.points)))

    def _lam(self):
        return self.measure.mass if self.measure is not None and self.spec.jump_shape is not None else 0.0

    def _drift_moment(self):
        if self.measure is None or self.spec.jump_shape is None:
            return 0.0
        return float(np.linalg.norm(self.measure.compensator_first_moment(self.spec.jump_shape)))


class TruncationStudy(Study):
    """ Error of the truncated operator with its small-jump compensators against the full jump operator.

        With compensators the error scales like r^(3 - alpha); without them the
        small jumps are dropped and it scales like r^(2 - alpha).
    """
    name = 'truncation'
    level_name = 'r'

    def __init__(self, spec, model, phi, r_list=anconst.TRUNCATION_R_LIST,
                 R: float = ipdehjb.constants.DEFAULT_OUTER_RADIUS, points=None, compensated: bool = True,
                 threads=None):
        super().__init__(r_list, threads=threads)
        self.spec = spec
        self.model = model
        self.phi = as_smooth(phi, spec.dim)
        self.R = float(R)
        self.compensated = compensated
        if points is None:
            points = np.zeros((1, spec.dim))
            if not compensated:
                points[0, 0] = 0.5 * math.pi
        self.points = ipdehjb.helper.as_points(points, spec.dim)
        self._reference = None

    def prepare(self, threads):
        self._reference = [continuous_generator(self.spec, self.model, v, self.phi, self.points, outer=self.R)
                           for v in self.spec.controls]

    def run_level(self, level, threads):
        measure = ipdehjb.levy.truncate(self.model, level, self.R)
        coeffs = ipdehjb.scheme.compensate(self.spec, measure, small_jumps=self.compensated)
        error = 0.0
        for v, reference in zip(self.spec.controls, self._reference):
            approx = generator_oracle(self.spec, coeffs, measure, v, self.phi, self.points)
            error = max(error, ipdehjb.helper.sup_norm(approx - reference))
        return {'r': level, 'R': self.R, 'error': error, 'case': coeffs.case}

    def summarize(self, rows):
        frame = _frame(rows)
        order, exact = _fit(frame['r'], frame['error'], anconst.ORACLE_RESIDUAL_FACTOR * anconst.ORACLE_TOL)
        target = (3.0 if self.compensated else 2.0) - self.model.alpha
        variant = 'compensated' if self.compensated else 'uncompensated'
        return StudyReport(name=f'{self.name}:{variant}:{self.model.name}:{self.phi.name}', levels=frame,
                           abscissa='r', fitted_order=order, target=target,
                           tolerance=anconst.TRUNCATION_TOLERANCE, exact=exact, details=_details(rows))


class BlowupStudy(Study):
    """ Growth of the truncated measure's mass and small-jump drift, and decay of its third moment, as r -> 0.

        mass          lambda_{r,R} ~ r^(-alpha)
        drift         |int_{r<|z|<1} phi nu| ~ r^(1 - alpha)   (alpha in (1, 2))
        third_moment  int_{0<|z|<r} |phi|^3 nu ~ r^(3 - alpha)
    """
    name = 'blowup'
    level_name = 'r'

    def __init__(self, model, law: str = anconst.LAW_MASS, r_list=anconst.BLOWUP_R_LIST, shape=None,
                 R: float = 1.0, threads=None):
        super().__init__(r_list, threads=threads)
        if law not in anconst.LAWS:
            raise ipdehjb.errors.InvalidParameterError(
                f'Unknown blow-up law "{law}". Supported laws: {", ".join(anconst.LAWS)}.')
        if law == anconst.LAW_DRIFT and not 1 < model.alpha < 2:
            raise ipdehjb.errors.InvalidParameterError(
                f'The small-jump drift blows up only for alpha in (1, 2), received {model.alpha}.')
        self.model = model
        self.law = law
        self.shape = shape if shape is not None else ipdehjb.levy.identity_shape(model.dim)
        self.R = float(R)
        self.quantity = law

    def run_level(self, level, threads):
        if self.law == anconst.LAW_MASS:
            value = float(ipdehjb.levy.annulus_integral(self.model, level, self.R))
        elif self.law == anconst.LAW_DRIFT:
            value = float(np.linalg.norm(ipdehjb.levy.annulus_integral(self.model, level, 1.0,
                                                                       self.shape.evaluate)))
        else:
            def cube(z):
                return np.linalg.norm(self.shape.evaluate(z), axis=1) ** 3
            value = float(ipdehjb.levy.annulus_integral(self.model, 0.0, level, cube))
        return {'r': level, 'R': self.R if self.law == anconst.LAW_MASS else math.nan,
                'inverse_r': 1.0 / level, 'error': value}

    def summarize(self, rows):
        frame = _frame(rows, ['inverse_r'])
        alpha = self.model.alpha
        if self.law == anconst.LAW_THIRD_MOMENT:
            abscissa, target = 'r', 3.0 - alpha
        else:
            abscissa, target = 'inverse_r', alpha if self.law == anconst.LAW_MASS else alpha - 1.0
        order = ipdehjb.helper.fit_order(frame[abscissa], frame['error'], min_levels=anconst.MIN_FIT_LEVELS)
        return StudyReport(name=f'{self.name}:{self.law}:{self.model.name}', levels=frame, abscissa=abscissa,
                           fitted_order=order, target=target, tolerance=anconst.BLOWUP_TOLERANCE,
                           details=_details(rows), quantity=self.law)


class _ManufacturedStudy(Study):
    """ Shared solve-and-compare machinery of the studies on a manufactured case. """

    def __init__(self, case, levels, method=ipdehjb.constants.METHOD_POLICY,
                 tol=ipdehjb.constants.DEFAULT_SOLVER_TOL, threads=None):
        super().__init__(levels, threads=threads)
        self.case = case
        self.method = method
        self.tol = tol

    @property
    def box(self):
        return self.case.box if self.case.box is not None else self.case.problem.box

    def coupling(self, h):
        return select_parameters(h, self.case.alpha, self.case.ell, self.case.coupling_case)

    def discretize(self, spec, h, k, dz, r, R, threads, cells=None):
        return ipdehjb.scheme.build_system(spec, self.case.model, h, self.box, cells=cells, k=k, dz=dz, r=r,
                                           R=R, exterior_rule=self.case.exterior_rule, threads=threads)

    def solve(self, discretization):
        return ipdehjb.solver.solve(discretization.system, method=self.method, tol=self.tol)


class ConvergenceStudy(_ManufacturedStudy):
    """ Sup-norm error of the fully discrete solution against the manufactured solution as h -> 0.

        Arguments:
            case: (ManufacturedCase) the problem and its exact solution.
            h_list: (list of float) strictly decreasing time steps.
            coupling: (callable) h -> Coupling. Defaults to select_parameters for the case.
    """
    name = 'convergence'

    def __init__(self, case, h_list=None, coupling: Optional[Callable] = None, **kwargs):
        if h_list is None:
            h_list = (anconst.FIRST_ORDER_H_LIST if case.coupling_case == COUPLING_FIRST_ORDER
                      else anconst.GENERAL_H_LIST)
        super().__init__(case, h_list, **kwargs)
        if any(b >= a for a, b in zip(self.levels[:-1], self.levels[1:])):
            raise ipdehjb.errors.InvalidParameterError(f'Time steps must be strictly decreasing: {self.levels}.')
        self._coupling = coupling

    def coupling(self, h):
        return self._coupling(h) if self._coupling is not None else super().coupling(h)

    def run_level(self, level, threads):
        cp = self.coupling(level)
        disc = self.discretize(self.case.problem, level, cp.k, cp.dz, cp.r, cp.R, threads)
        outcome = self.solve(disc)
        mesh = disc.mesh
        width = _local_reach(disc)
        inner = _interior(mesh, width)
        wide = _interior(mesh, width + anconst.BOUNDARY_WIDENING_CELLS * mesh.k)
        if not np.any(wide):
            raise ipdehjb.errors.MeshTooSmallError(
                f'No vertex lies farther than {width + mesh.k:.4g} from the boundary of the box {mesh.box}.')
        exact = self.case.solution(mesh.vertices)
        deviation = np.abs(outcome.nodal_solution - exact)
        optimal = float(np.mean(outcome.policy[inner] == self.case.optimal))
        return {'h': level, 'k': cp.k, 'dz': cp.dz, 'r': cp.r if cp.r is not None else math.nan, 'R': cp.R,
                'error': float(np.max(deviation[inner])), 'error_wide': float(np.max(deviation[wide])),
                'iterations': outcome.iterations, 'n_vertices': mesh.n_vertices, 'lambda_Q': disc.system.lam,
                'optimal_fraction': optimal, 'converged': outcome.converged}

    def summarize(self, rows):
        frame = _frame(rows, ['error_wide'])
        order, exact = _fit(frame['h'], frame['error'], anconst.ROUNDOFF_FLOOR)
        changes = np.abs(frame['error_wide'] - frame['error']) / np.maximum(frame['error'], anconst.ROUNDOFF_FLOOR)
        threshold = CONVERGENCE_THRESHOLDS[self.case.coupling_case]
        return StudyReport(name=f'{self.name}:{self.case.name}', levels=frame, fitted_order=order,
                           threshold=threshold, informational=threshold is None, exact=exact,
                           gates={'boundary_layer': bool(np.all(changes < anconst.BOUNDARY_MAX_CHANGE))},
                           details=_details(rows))


def perturb(spec, s: float, fields=('f', 'c', 'b', 'sigma')):
    """ The problem with a constant shift s added to each of the given coefficient fields. """
    def shifted(func):
        return lambda x, v: np.asarray(func(x, v), dtype=float) + s
    return dataclasses.replace(spec, **{field: shifted(getattr(spec, field)) for field in fields})


class DependenceStudy(_ManufacturedStudy):
    """ Sup-norm distance between the discrete solutions of a problem and of its perturbations.

        All solves share the mesh, the quadrature and the exterior rule of the base problem.

        Arguments:
            case: (ManufacturedCase) the base problem.
            s_list: (list of float) perturbation sizes; 0 is allowed.
            h: (float) time step; the other parameters follow select_parameters.
            fields: (tuple) the perturbed coefficient fields.
    """
    name = 'dependence'
    level_name = 's'

    def __init__(self, case, s_list=anconst.DEPENDENCE_S_LIST, h: float = 2.0 ** -3,
                 fields=('f', 'c', 'b', 'sigma'), **kwargs):
        super().__init__(case, s_list, **kwargs)
        self.h = float(h)
        self.fields = tuple(fields)
        self._base = None
        self._cells = None

    def prepare(self, threads):
        cp = self.coupling(self.h)
        self._cells = ipdehjb.scheme.cells_for_size(self.box, self.case.problem.dim, cp.k)
        disc = self.discretize(self.case.problem, self.h, None, cp.dz, cp.r, cp.R, threads, cells=self._cells)
        self._base = (cp, self.solve(disc).nodal_solution)

    def run_level(self, level, threads):
        cp, base = self._base
        row = {'h': self.h, 'k': cp.k, 'dz': cp.dz, 'r': cp.r if cp.r is not None else math.nan, 'R': cp.R,
               's': level}
        if level == 0:
            row.update(error=0.0, iterations=0)
            return row
        spec = perturb(self.case.problem, level, self.fields)
        disc = self.discretize(spec, self.h, None, cp.dz, cp.r, cp.R, threads, cells=self._cells)
        outcome = self.solve(disc)
        row.update(error=ipdehjb.helper.sup_norm(outcome.nodal_solution - base), iterations=outcome.iterations)
        return row

    def summarize(self, rows):
        frame = _frame(rows, ['s'])
        positive = frame[frame['s'] > 0]
        order = ipdehjb.helper.fit_order(positive['s'], positive['error'], min_levels=anconst.MIN_FIT_LEVELS)
        report = StudyReport(name=f'{self.name}:{self.case.name}:{"+".join(self.fields)}', levels=frame,
                             abscissa='s', fitted_order=order, target=anconst.DEPENDENCE_TARGET,
                             tolerance=anconst.DEPENDENCE_TOLERANCE, details=_details(rows))
        if len(positive):
            smallest = positive.loc[positive['s'].idxmin()]
            report.extras['K_hat'] = float(smallest['error'] / smallest['s'])
        return report


class DiscretizationStudy(_ManufacturedStudy):
    """ Change of the fully discrete solution under mesh and quadrature refinement at a fixed h.

        Level i reports the sup-norm change between the solutions at k_i and k_{i+1},
        compared at the interior vertices of the coarser mesh.
    """
    name = 'discretization'
    level_name = 'k'

    def __init__(self, case, h: float = 2.0 ** -3, k_list=anconst.DISCRETIZATION_K_LIST, **kwargs):
        super().__init__(case, k_list, **kwargs)
        if any(b >= a for a, b in zip(self.levels[:-1], self.levels[1:])):
            raise ipdehjb.errors.InvalidParameterError(f'Mesh sizes must be strictly decreasing: {self.levels}.')
        self.h = float(h)

    def run_level(self, level, threads):
        cp = self.coupling(self.h)
        disc = self.discretize(self.case.problem, self.h, level, level, cp.r, cp.R, threads)
        outcome = self.solve(disc)
        return {'h': self.h, 'k': level, 'dz': level, 'r': cp.r if cp.r is not None else math.nan, 'R': cp.R,
                'iterations': outcome.iterations, 'n_vertices': disc.mesh.n_vertices,
                '_mesh': disc.mesh, '_solution': outcome.nodal_solution, '_width': _local_reach(disc)}

    def summarize(self, rows):
        for coarse, fine in zip(rows[:-1], rows[1:]):
            mesh = coarse['_mesh']
            inner = _interior(mesh, coarse['_width'])
            refined = fine['_mesh'].interpolate_many(fine['_solution'], mesh.vertices[inner])
            coarse['error'] = ipdehjb.helper.sup_norm(coarse['_solution'][inner] - refined)
        frame = _frame(rows)
        changes = frame.iloc[:-1]
        order, exact = _fit(changes['k'], changes['error'], anconst.ROUNDOFF_FLOOR)
        return StudyReport(name=f'{self.name}:{self.case.name}', levels=frame, abscissa='k', fitted_order=order,
                           threshold=anconst.DISCRETIZATION_MIN_ORDER, exact=exact, details=_details(rows),
                           quantity='change')

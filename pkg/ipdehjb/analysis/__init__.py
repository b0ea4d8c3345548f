""" analysis is a package that verifies the scheme empirically.

    It contains the continuous operator oracles, the manufactured solution
    factory, the parameter couplings of the convergence theory and the studies
    that measure consistency, truncation and convergence orders. Each study is
    built by a create_* factory and run level by level by a StudyManager; the
    *_study functions do both and return the StudyReport.
"""

import ipdehjb.constants
import ipdehjb.analysis.constants as anconst
import ipdehjb.analysis.study
from ipdehjb.analysis.manufactured import BUILTIN_CASES, ManufacturedCase, builtin_case, manufacture
from ipdehjb.analysis.oracle import (SmoothFunction, affine_function, constant_function, continuous_generator,
                                     continuous_operator_oracle, gaussian_function, generator_oracle,
                                     quadratic_function, sine_function)
from ipdehjb.analysis.parameters import Coupling, select_parameters
from ipdehjb.analysis.study import ConsistencyFunction, StudyReport, read_study_csv
from ipdehjb.analysis.studymanager import StudyManager


def _create_study(cls, *args, **kwargs):
    """ Private helper method that constructs study instances. """
    return cls(*args, **kwargs)


def create_consistency_study(spec, coeffs, measure, phi, h_list=anconst.CONSISTENCY_H_LIST, points=None,
                             threads=None):
    """ Create a ConsistencyStudy of the semi-discrete operator.

        Arguments:
            spec: (ProblemSpec) the problem.
            coeffs: (CompensatedCoefficients) output of scheme.compensate for the measure.
            measure: (TruncatedMeasure) the truncated measure, None without jumps.
            phi: (SmoothFunction or callable) the test function.
            h_list: (list of float) time steps; the jump intensity stays fixed across them.
            points: (array) sample points of shape (n, N). Defaults to a 4-per-axis grid of [-0.7, 1.1]^N.
    """
    return _create_study(ipdehjb.analysis.study.ConsistencyStudy, spec, coeffs, measure, phi, h_list=h_list,
                         points=points, threads=threads)


def create_truncation_study(spec, model, phi, r_list=anconst.TRUNCATION_R_LIST,
                            R=ipdehjb.constants.DEFAULT_OUTER_RADIUS, points=None, compensated=True,
                            threads=None):
    """ Create a TruncationStudy of the compensated (or plain) truncated operator.

        Arguments:
            model: (LevyModel) the untruncated density.
            r_list: (list of float) inner radii.
            R: (float) outer radius, shared by the truncated and the reference operator.
            compensated: (bool) replace the small jumps by a drift and a diffusion.
    """
    return _create_study(ipdehjb.analysis.study.TruncationStudy, spec, model, phi, r_list=r_list, R=R,
                         points=points, compensated=compensated, threads=threads)


def create_blowup_study(model, law=anconst.LAW_MASS, r_list=anconst.BLOWUP_R_LIST, shape=None, R=1.0,
                        threads=None):
    """ Create a BlowupStudy of one of the laws 'mass', 'drift' or 'third_moment'. """
    return _create_study(ipdehjb.analysis.study.BlowupStudy, model, law=law, r_list=r_list, shape=shape, R=R,
                         threads=threads)


def create_convergence_study(case, h_list=None, coupling=None, method=ipdehjb.constants.METHOD_POLICY,
                             tol=ipdehjb.constants.DEFAULT_SOLVER_TOL, threads=None):
    """ Create a ConvergenceStudy on a manufactured case.

        Arguments:
            case: (ManufacturedCase) the problem and its exact solution.
            h_list: (list of float) strictly decreasing time steps. Defaults by coupling case.
            coupling: (callable) h -> Coupling. Defaults to select_parameters.
            method: (str) 'value' or 'policy'.
            tol: (float) solver tolerance.
    """
    return _create_study(ipdehjb.analysis.study.ConvergenceStudy, case, h_list=h_list, coupling=coupling,
                         method=method, tol=tol, threads=threads)


def create_dependence_study(case, s_list=anconst.DEPENDENCE_S_LIST, h=2.0 ** -3, fields=('f', 'c', 'b', 'sigma'),
                            method=ipdehjb.constants.METHOD_POLICY, tol=ipdehjb.constants.DEFAULT_SOLVER_TOL,
                            threads=None):
    """ Create a DependenceStudy: constant shifts of size s added to the given coefficient fields. """
    return _create_study(ipdehjb.analysis.study.DependenceStudy, case, s_list=s_list, h=h, fields=fields,
                         method=method, tol=tol, threads=threads)


def create_discretization_study(case, h=2.0 ** -3, k_list=anconst.DISCRETIZATION_K_LIST,
                                method=ipdehjb.constants.METHOD_POLICY, tol=ipdehjb.constants.DEFAULT_SOLVER_TOL,
                                threads=None):
    """ Create a DiscretizationStudy: h fixed, k = dz refined along k_list. """
    return _create_study(ipdehjb.analysis.study.DiscretizationStudy, case, h=h, k_list=k_list, method=method,
                         tol=tol, threads=threads)


def consistency_study(spec, coeffs, measure, phi, h_list=anconst.CONSISTENCY_H_LIST, **kwargs) -> StudyReport:
    return create_consistency_study(spec, coeffs, measure, phi, h_list=h_list, **kwargs).run()


def truncation_study(spec, model, phi, r_list=anconst.TRUNCATION_R_LIST,
                     R=ipdehjb.constants.DEFAULT_OUTER_RADIUS, **kwargs) -> StudyReport:
    return create_truncation_study(spec, model, phi, r_list=r_list, R=R, **kwargs).run()


def blowup_study(model, law=anconst.LAW_MASS, r_list=anconst.BLOWUP_R_LIST, **kwargs) -> StudyReport:
    return create_blowup_study(model, law=law, r_list=r_list, **kwargs).run()


def convergence_study(case, h_list=None, coupling=None, **kwargs) -> StudyReport:
    return create_convergence_study(case, h_list=h_list, coupling=coupling, **kwargs).run()


def continuous_dependence_study(case, perturbation_size_list=anconst.DEPENDENCE_S_LIST, **kwargs) -> StudyReport:
    return create_dependence_study(case, s_list=perturbation_size_list, **kwargs).run()


def discretization_study(case, h=2.0 ** -3, k_list=anconst.DISCRETIZATION_K_LIST, **kwargs) -> StudyReport:
    return create_discretization_study(case, h=h, k_list=k_list, **kwargs).run()

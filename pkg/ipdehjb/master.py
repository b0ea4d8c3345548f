import logging
import os

import ipdehjb.base
import ipdehjb.checks
import ipdehjb.constants
import ipdehjb.errors
import ipdehjb.helper
import ipdehjb.levy
import ipdehjb.mesh
import ipdehjb.scheme
import ipdehjb.solver
import ipdehjb.analysis
import ipdehjb.analysis.constants as anconst
from ipdehjb.config import (STUDY_BLOWUP, STUDY_CONSISTENCY, STUDY_CONVERGENCE, STUDY_DEPENDENCE,
                            STUDY_DISCRETIZATION, STUDY_TRUNCATION)

logger = logging.getLogger(__name__)

# Time step of the dependence and mesh refinement studies unless discretization.h is given
FIXED_STUDY_H = 2.0 ** -3


class Master(object):
    """ Runs one command of a RunConfig and writes its artifact.

        Arguments:
            config: (RunConfig) the parsed configuration.
            out_dir: (str) output directory. Overrides output.dir.
            threads: (int) worker budget. Defaults to IPDE_HJB_THREADS, then the CPU count.
    """
    def __init__(self, config, out_dir=None, threads=None):
        super().__init__()
        self.config = config
        self.out_dir = out_dir or config.get('output.dir')
        self.threads = ipdehjb.helper.resolve_threads(threads)
        self.summary = []

    def run(self) -> int:
        """ Dispatch to the configured command; returns the exit status. """
        os.makedirs(self.out_dir, exist_ok=True)
        commands = {ipdehjb.constants.COMMAND_SOLVE: self.solve,
                    ipdehjb.constants.COMMAND_STUDY: self.study,
                    ipdehjb.constants.COMMAND_CHECK: self.check}
        return commands[self.config.command]()

    def _path(self, filename):
        return os.path.join(self.out_dir, filename)

    def _discretize(self, run):
        return ipdehjb.scheme.build_system(run.spec, run.model, run.h, run.box, cells=run.cells, k=run.k, dz=run.dz,
                                           r=run.r, R=run.R, threads=self.threads)

    ####
    # solve
    ####

    def solve(self) -> int:
        """ Solve the configured problem and write the solution dump. """
        run = self.config.resolve()
        disc = self._discretize(run)
        outcome = ipdehjb.solver.solve(disc.system, method=self.config.get('solver.method'),
                                       tol=self.config.get('solver.tol'), max_iter=self.config.get('solver.max_iter'))
        path = self._path(ipdehjb.constants.FILENAME_SOLUTION)
        ipdehjb.solver.write_solution(path, disc.system, outcome, run.items)

        values = outcome.nodal_solution
        self.summary = [
            f'problem={run.spec.name} vertices={disc.system.n_vertices} controls={disc.system.n_controls}',
            f'method={outcome.method} iterations={outcome.iterations} residual={outcome.residual:.3e} '
            f'converged={outcome.converged}',
            f'min={values.min():.6f} max={values.max():.6f} '
            f'lipschitz={ipdehjb.mesh.solution_lipschitz(disc.mesh, values):.4f}',
            f'solution={path}',
        ]
        logger.info('Solved %s: %d iterations, residual %.3e.', run.spec.name, outcome.iterations, outcome.residual)
        return ipdehjb.constants.EXIT_OK if outcome.converged else ipdehjb.constants.EXIT_GATE_FAILED

    ####
    # check
    ####

    def check(self) -> int:
        """ Run the invariant suite on the configured problem and write the pass/fail lines. """
        run = self.config.resolve()
        disc = self._discretize(run)
        results = ipdehjb.checks.run_checks(disc, tol=self.config.get('solver.tol'), threads=self.threads)
        lines = [ipdehjb.checks.format_result(result) for result in results]
        passed = all(result.passed for result in results)
        lines.append(f'overall {"PASS" if passed else "FAIL"}')

        path = self._path(ipdehjb.constants.FILENAME_CHECK)
        with open(path, 'w', encoding='utf-8', newline='') as handle:
            handle.write(ipdehjb.base.format_header(run.items))
            handle.write('\n'.join(lines) + '\n')
        self.summary = lines
        return ipdehjb.constants.EXIT_OK if passed else ipdehjb.constants.EXIT_GATE_FAILED

    ####
    # study
    ####

    def study(self) -> int:
        """ Run the configured study and write its CSV report. """
        kind = self.config.get('study.kind')
        builders = {STUDY_CONVERGENCE: self._convergence,
                    STUDY_DEPENDENCE: self._dependence,
                    STUDY_DISCRETIZATION: self._discretization,
                    STUDY_CONSISTENCY: self._consistency,
                    STUDY_TRUNCATION: self._truncation,
                    STUDY_BLOWUP: self._blowup}
        report, items = builders[kind]()

        items = [('command', self.config.command), ('study.kind', kind), ('study', report.name)] + items
        for key in ('solver.method', 'solver.tol'):
            items.append((key, self.config.get(key)))
        path = self._path(ipdehjb.constants.FILENAME_STUDY)
        report.to_csv(path, header=items, timings=self.config.get('output.timings'))
        order = 'nofit' if report.fitted_order is None else f'{report.fitted_order:.4f}'
        self.summary = [f'{report.name} fitted_order={order} threshold={report.threshold_label()} {report.verdict}',
                        f'report={path}']
        return ipdehjb.constants.EXIT_OK if report.passed else ipdehjb.constants.EXIT_GATE_FAILED

    def _case(self):
        return ipdehjb.analysis.builtin_case(self.config.study_case())

    def _solver_kwargs(self):
        return dict(method=self.config.get('solver.method'), tol=self.config.get('solver.tol'), threads=self.threads)

    def _fixed_h(self):
        return self.config.values.get('discretization.h', FIXED_STUDY_H)

    def _convergence(self):
        case = self._case()
        study = ipdehjb.analysis.create_convergence_study(case, h_list=self.config.get('study.h_list'),
                                                          **self._solver_kwargs())
        return study.run(), [('study.case', case.name), ('coupling', case.coupling_case),
                             ('study.h_list', study.levels)]

    def _dependence(self):
        case = self._case()
        s_list = self.config.get('study.s_list') or anconst.DEPENDENCE_S_LIST
        report = ipdehjb.analysis.continuous_dependence_study(case, s_list, h=self._fixed_h(),
                                                              **self._solver_kwargs())
        return report, [('study.case', case.name), ('discretization.h', self._fixed_h()), ('study.s_list', s_list),
                        ('K_hat', report.extras.get('K_hat', ''))]

    def _discretization(self):
        case = self._case()
        k_list = self.config.get('study.k_list') or anconst.DISCRETIZATION_K_LIST
        report = ipdehjb.analysis.discretization_study(case, h=self._fixed_h(), k_list=k_list,
                                                       **self._solver_kwargs())
        return report, [('study.case', case.name), ('discretization.h', self._fixed_h()), ('study.k_list', k_list)]

    def _consistency(self):
        run = self.config.resolve()
        measure = None
        if run.model is not None:
            r = run.r if run.r is not None else ipdehjb.constants.BOUNDED_INNER_RADIUS
            R = run.R if run.R is not None else ipdehjb.constants.DEFAULT_OUTER_RADIUS
            measure = ipdehjb.levy.truncate(run.model, r, R)
        coeffs = ipdehjb.scheme.compensate(run.spec, measure)
        h_list = self.config.get('study.h_list') or anconst.CONSISTENCY_H_LIST
        report = ipdehjb.analysis.consistency_study(run.spec, coeffs, measure,
                                                    ipdehjb.analysis.sine_function(run.spec.dim), h_list=h_list,
                                                    threads=self.threads)
        return report, run.items + [('study.h_list', h_list)]

    def _jump_problem(self):
        spec, model = self.config.problem()
        if model is None or spec.jump_shape is None:
            raise ipdehjb.errors.ConfigError('measure.name', f'is required for a {self.config.get("study.kind")} '
                                                             f'study; problem {spec.name} has no jumps')
        return spec, model

    def _truncation(self):
        spec, model = self._jump_problem()
        R = self.config.get('measure.R')
        R = R if isinstance(R, float) else ipdehjb.constants.DEFAULT_OUTER_RADIUS
        r_list = self.config.get('study.r_list') or anconst.TRUNCATION_R_LIST
        report = ipdehjb.analysis.truncation_study(spec, model, ipdehjb.analysis.sine_function(spec.dim),
                                                   r_list=r_list, R=R, threads=self.threads)
        return report, [('problem', spec.name), ('measure', model.name), ('measure.params', model.params),
                        ('measure.R', R), ('study.r_list', r_list)]

    def _blowup(self):
        spec, model = self._jump_problem()
        law = self.config.get('study.law')
        r_list = self.config.get('study.r_list') or anconst.BLOWUP_R_LIST
        report = ipdehjb.analysis.blowup_study(model, law=law, r_list=r_list, shape=spec.jump_shape,
                                               threads=self.threads)
        return report, [('problem', spec.name), ('measure', model.name), ('measure.params', model.params),
                        ('study.law', law), ('study.r_list', r_list)]


def run(config, out_dir=None, threads=None) -> int:
    """ Run a configuration; returns the exit status. Artifacts are written to the output directory. """
    return Master(config, out_dir=out_dir, threads=threads).run()

import math
import os
import shutil
import tempfile
import unittest

import numpy as np

import ipdehjb.constants
import ipdehjb.errors
import ipdehjb.levy
import ipdehjb.presets
import ipdehjb.problem
import ipdehjb.scheme
import ipdehjb.solver


class SolverTest(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        """ Perform any required set-up once, before any method is run.

            Builds the constant problem with a closed-form fixed point and a
            two-control problem with Merton jumps.
        """
        preset = ipdehjb.presets.get_preset(ipdehjb.presets.PRESET_CONSTANT)
        cls.constant = ipdehjb.scheme.build_system(preset.spec, None, 0.1, (-1.0, 1.0), cells=[4]).system

        tables = [{'sigma': [0.5], 'b': [1.0], 'c': [1.0], 'f': [1.0], 'eta1': [0.5]},
                  {'sigma': [0.25], 'b': [-1.0], 'c': [1.5], 'f': [1.5], 'f_linear': [0.5], 'eta1': [0.5]}]
        spec = ipdehjb.problem.affine_problem(1, tables, jump_shape=ipdehjb.levy.identity_shape(1), name='line')
        model = ipdehjb.levy.builtin_model('merton', (1.0, 0.5, 0.0))
        cls.jumps = ipdehjb.scheme.build_system(spec, model, 0.25, (-3.0, 3.0), cells=[24], dz=0.1, R=3.0).system

        # The greedy first policy (smallest f) is not the optimal one (smallest f / c)
        switching = ipdehjb.problem.affine_problem(1, [{'c': [0.1], 'f': [0.9]}, {'c': [2.0], 'f': [1.0]}])
        cls.switching = ipdehjb.scheme.build_system(switching, None, 0.5, (-1.0, 1.0), cells=[2]).system
        cls.tmp_dir = tempfile.mkdtemp()

    @classmethod
    def tearDownClass(cls):
        shutil.rmtree(cls.tmp_dir, ignore_errors=True)

    def test_constant_fixed_point(self):
        """ With c = f = 1 and no motion the solution is h / (1 - e^{-h}) everywhere. """
        print(f"\nRunning test method {self._testMethodName}\n")

        expected = 0.1 / (1.0 - math.exp(-0.1))
        for ctr, method in enumerate(ipdehjb.constants.METHODS):
            outcome = ipdehjb.solver.solve(self.constant, method=method, tol=1e-12)
            with self.subTest(i=ctr):
                self.assertTrue(outcome.converged)
                np.testing.assert_allclose(outcome.nodal_solution, expected, atol=1e-11)

    def test_value_matches_policy(self):
        """ Value and policy iteration agree within twice the tolerance. """
        print(f"\nRunning test method {self._testMethodName}\n")

        tol = 1e-9
        value = ipdehjb.solver.solve_value_iteration(self.jumps, tol=tol)
        policy = ipdehjb.solver.solve_policy_iteration(self.jumps, tol=tol)

        ctr = 0
        with self.subTest(i=ctr):
            self.assertLess(float(np.max(np.abs(value.nodal_solution - policy.nodal_solution))), 2 * tol)

        ctr += 1
        with self.subTest(i=ctr):
            self.assertLess(policy.iterations, value.iterations)

    def test_update_ratios(self):
        """ Successive value iteration updates shrink at least by the contraction factor. """
        print(f"\nRunning test method {self._testMethodName}\n")

        outcome = ipdehjb.solver.solve_value_iteration(self.jumps, tol=1e-6)
        updates = np.asarray(outcome.updates)
        keep = updates[:-1] > 1e-8
        ratios = updates[1:][keep] / updates[:-1][keep]
        self.assertLessEqual(float(np.max(ratios)), self.jumps.contraction + 1e-10)
        self.assertEqual(len(outcome.update_ratios()), len(updates) - 1)

    def test_iteration_caps(self):
        """ Value iteration returns a flagged iterate at its cap; policy iteration raises. """
        print(f"\nRunning test method {self._testMethodName}\n")

        ctr = 0
        with self.subTest(i=ctr):
            with self.assertLogs('ipdehjb.solver', level='WARNING'):
                outcome = ipdehjb.solver.solve_value_iteration(self.jumps, tol=1e-10, max_iter=3)
            self.assertFalse(outcome.converged)
            self.assertEqual(outcome.iterations, 3)

        ctr += 1
        with self.subTest(i=ctr):
            with self.assertRaises(ipdehjb.errors.MaxIterationsExceededError):
                ipdehjb.solver.solve_policy_iteration(self.switching, tol=1e-10, max_outer=1)

        ctr += 1
        with self.subTest(i=ctr):
            outcome = ipdehjb.solver.solve_policy_iteration(self.switching, tol=1e-10)
            np.testing.assert_array_equal(outcome.policy, np.ones(self.switching.n_vertices))

    def test_invalid_arguments(self):
        """ Check the vector size, the tolerance and the method name. """
        print(f"\nRunning test method {self._testMethodName}\n")

        ctr = 0
        with self.subTest(i=ctr):
            with self.assertRaises(ipdehjb.errors.SizeMismatchError):
                ipdehjb.solver.bellman_apply(self.constant, np.zeros(3))

        ctr += 1
        with self.subTest(i=ctr):
            with self.assertRaises(ipdehjb.errors.InvalidParameterError):
                ipdehjb.solver.solve_value_iteration(self.constant, tol=0.0)

        ctr += 1
        with self.subTest(i=ctr):
            with self.assertRaises(ipdehjb.errors.InvalidParameterError):
                ipdehjb.solver.solve(self.constant, method='newton')

    def test_write_read_solution(self):
        """ The solution dump carries the header and one line per vertex. """
        print(f"\nRunning test method {self._testMethodName}\n")

        outcome = ipdehjb.solver.solve(self.jumps, tol=1e-9)
        path = os.path.join(self.tmp_dir, ipdehjb.constants.FILENAME_SOLUTION)
        ipdehjb.solver.write_solution(path, self.jumps, outcome, {'problem': 'line', 'measure': 'merton'})
        frame, header = ipdehjb.solver.read_solution(path)

        ctr = 0
        with self.subTest(i=ctr):
            self.assertEqual(list(frame.columns), ['vertex_index', 'x0', 'value', 'policy_index'])
            self.assertEqual(len(frame), self.jumps.n_vertices)

        ctr += 1
        with self.subTest(i=ctr):
            np.testing.assert_array_equal(frame['value'].values, outcome.nodal_solution)
            np.testing.assert_array_equal(frame['policy_index'].values, outcome.policy)

        ctr += 1
        with self.subTest(i=ctr):
            self.assertEqual(header['problem'], 'line')
            self.assertEqual(header['h'], '0.25')
            self.assertEqual(header['converged'], 'True')
            self.assertEqual(int(header['iterations']), outcome.iterations)


if __name__ == '__main__':
    unittest.main()

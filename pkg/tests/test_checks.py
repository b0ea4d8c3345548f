import math
import unittest

import ipdehjb.checks
import ipdehjb.problem
import ipdehjb.scheme


class FixedPointTest(unittest.TestCase):
    def test_closed_form(self):
        """ The constant problem solves to h / (1 - e^{-h}). """
        print(f"\nRunning test method {self._testMethodName}\n")

        result = ipdehjb.checks.fixed_point_check()
        expected = ipdehjb.checks.FIXED_POINT_H / (1.0 - math.exp(-ipdehjb.checks.FIXED_POINT_H))

        ctr = 0
        with self.subTest(i=ctr):
            self.assertTrue(result.passed, msg=result.message)
            self.assertLessEqual(result.value, result.threshold)

        ctr += 1
        with self.subTest(i=ctr):
            self.assertIn(f'value={expected:.6f}', result.message)
            self.assertIn('value=1.050833', result.message)


class RunChecksTest(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        """ Perform any required set-up once, before any method is run. """
        spec = ipdehjb.problem.affine_problem(1, [{'sigma': [0.5], 'b': [1.0], 'c': [1.0], 'f': [1.0]}],
                                              name='line')
        cls.disc = ipdehjb.scheme.build_system(spec, None, 0.1, (-1.0, 1.0), cells=(16,), threads=1)

    def test_suite_passes(self):
        """ A well posed diffusion problem passes every invariant. """
        print(f"\nRunning test method {self._testMethodName}\n")

        results = ipdehjb.checks.run_checks(self.disc, tol=1e-9, threads=1, pairs=4)
        names = [result.name for result in results]

        ctr = 0
        with self.subTest(i=ctr):
            self.assertEqual(names, ['fixed_point', 'row_sums', 'nonnegativity', 'stencil_sparsity', 'monotonicity',
                                     'contraction', 'uniform_bound', 'comparison', 'cross_solver', 'consistency'])

        for result in results:
            ctr += 1
            with self.subTest(i=ctr):
                self.assertTrue(result.passed, msg=ipdehjb.checks.format_result(result))

    def test_stencil_limit(self):
        """ One dimensional diffusion rows touch at most two vertices. """
        print(f"\nRunning test method {self._testMethodName}\n")

        result = ipdehjb.checks.stencil_check(self.disc)
        self.assertEqual(result.threshold, 2)
        self.assertLessEqual(result.value, 2)

    def test_format_result(self):
        print(f"\nRunning test method {self._testMethodName}\n")

        ctr = 0
        with self.subTest(i=ctr):
            result = ipdehjb.checks.CheckResult('row_sums', False, 0.5, 1e-12, 'defect=5.000e-01')
            self.assertEqual(ipdehjb.checks.format_result(result), 'row_sums FAIL defect=5.000e-01')

        ctr += 1
        with self.subTest(i=ctr):
            result = ipdehjb.checks.CheckResult('monotonicity', True, 0.0, 0.0, 'ok')
            self.assertEqual(ipdehjb.checks.format_result(result), 'monotonicity PASS ok')


if __name__ == '__main__':
    unittest.main()

import unittest

import numpy as np

import ipdehjb.constants
import ipdehjb.errors
import ipdehjb.problem
import ipdehjb.analysis
import ipdehjb.analysis.constants as anconst


class ManufacturedTest(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        """ Perform any required set-up once, before any method is run.

            The built-in general case evaluates the jump oracle at every residual
            point, so it is built once.
        """
        cls.general = ipdehjb.analysis.builtin_case('general_1d')
        cls.line = ipdehjb.problem.affine_problem(1, [{'sigma': [0.3], 'b': [1.0], 'c': [1.0]},
                                                      {'sigma': [0.1], 'b': [-1.0], 'c': [2.0]}], name='line')

    def test_residual_gate(self):
        """ The exact solution satisfies the manufactured equation to the oracle accuracy. """
        print(f"\nRunning test method {self._testMethodName}\n")

        case = self.general
        ctr = 0
        with self.subTest(i=ctr):
            self.assertLessEqual(case.residual, anconst.ORACLE_RESIDUAL_FACTOR * case.oracle_tol)

        ctr += 1
        with self.subTest(i=ctr):
            self.assertEqual(case.coupling_case, ipdehjb.constants.COUPLING_BOUNDED)
            self.assertEqual(case.name, 'general_1d')

        x = np.linspace(-1.5, 1.5, 5).reshape(-1, 1)
        values = [ipdehjb.analysis.continuous_operator_oracle(case.problem, x, v, case.u_star, model=case.model,
                                                              outer=case.outer)
                  for v in case.problem.controls]
        ctr += 1
        with self.subTest(i=ctr):
            np.testing.assert_allclose(values[case.optimal], 0.0, atol=1e-7)

        ctr += 1
        with self.subTest(i=ctr):
            # The other control is worse by the offset
            np.testing.assert_allclose(values[1 - case.optimal], 0.5, atol=1e-7)

    def test_singular_cases(self):
        """ The tempered stable cases pass the residual gate against their symmetric densities. """
        print(f"\nRunning test method {self._testMethodName}\n")

        cases = [('case_i_1d', ipdehjb.constants.COUPLING_CASE_I, ipdehjb.constants.FORM_F),
                 ('case_ii_1d', ipdehjb.constants.COUPLING_CASE_II, ipdehjb.constants.FORM_J)]
        for ctr, (name, coupling, form) in enumerate(cases):
            case = ipdehjb.analysis.builtin_case(name)
            with self.subTest(i=ctr):
                self.assertLessEqual(case.residual, anconst.ORACLE_RESIDUAL_FACTOR * case.oracle_tol)
                self.assertEqual(case.coupling_case, coupling)
                self.assertEqual(case.problem.form, form)
                self.assertTrue(case.model.singular)

    def test_manufacture_without_jumps(self):
        """ For a constant solution the source is c u* on the optimal control. """
        print(f"\nRunning test method {self._testMethodName}\n")

        case = ipdehjb.analysis.manufacture(ipdehjb.analysis.constant_function(2.0), self.line, optimal=1)
        x = np.array([[0.0], [0.4]])

        ctr = 0
        with self.subTest(i=ctr):
            np.testing.assert_allclose(case.problem.evaluate('f', x, 1), [4.0, 4.0])

        ctr += 1
        with self.subTest(i=ctr):
            np.testing.assert_allclose(case.problem.evaluate('f', x, 0), [2.5, 2.5])

        ctr += 1
        with self.subTest(i=ctr):
            self.assertIsNone(case.model)
            np.testing.assert_allclose(case.solution(x), [2.0, 2.0])
            np.testing.assert_allclose(case.exterior_rule(x), [2.0, 2.0])

    def test_errors(self):
        """ Unknown cases, bad control indices and nonpositive offsets are rejected. """
        print(f"\nRunning test method {self._testMethodName}\n")

        ctr = 0
        with self.subTest(i=ctr):
            with self.assertRaises(ipdehjb.errors.InvalidParameterError):
                ipdehjb.analysis.builtin_case('heat_3d')

        ctr += 1
        with self.subTest(i=ctr):
            with self.assertRaises(ipdehjb.errors.InvalidParameterError):
                ipdehjb.analysis.manufacture(ipdehjb.analysis.sine_function(1), self.line, optimal=2)

        ctr += 1
        with self.subTest(i=ctr):
            with self.assertRaises(ipdehjb.errors.InvalidParameterError):
                ipdehjb.analysis.manufacture(ipdehjb.analysis.sine_function(1), self.line, offset=0.0)

    def test_plain_callable(self):
        """ A plain callable gets finite difference derivatives and still passes the gate. """
        print(f"\nRunning test method {self._testMethodName}\n")

        case = ipdehjb.analysis.manufacture(lambda x: np.sin(x[:, 0]), self.line)
        self.assertEqual(case.u_star.name, 'custom')
        self.assertLessEqual(case.residual, anconst.ORACLE_RESIDUAL_FACTOR * anconst.ORACLE_TOL)


if __name__ == '__main__':
    unittest.main()

import math
import unittest

import numpy as np

import ipdehjb.errors
import ipdehjb.levy
import ipdehjb.problem
import ipdehjb.scheme
import ipdehjb.analysis
import ipdehjb.analysis.oracle


def _jump_problem(eta, form='F'):
    return ipdehjb.problem.ProblemSpec(dim=1, controls=(0,), sigma=lambda x, v: 0.0, b=lambda x, v: 0.0,
                                       c=lambda x, v: 1.0, f=None, eta1=lambda x, v: eta,
                                       jump_shape=ipdehjb.levy.identity_shape(1), form=form)


class SmoothFunctionTest(unittest.TestCase):
    def test_finite_differences(self):
        """ Plain callables get central difference derivatives close to the analytic ones. """
        print(f"\nRunning test method {self._testMethodName}\n")

        plain = ipdehjb.analysis.oracle.as_smooth(lambda x: np.sin(x[:, 0]), 1)
        x = np.array([[0.3], [-1.2]])

        ctr = 0
        with self.subTest(i=ctr):
            np.testing.assert_allclose(plain.gradient(x)[:, 0], np.cos(x[:, 0]), atol=1e-8)

        ctr += 1
        with self.subTest(i=ctr):
            np.testing.assert_allclose(plain.hessian(x)[:, 0, 0], -np.sin(x[:, 0]), atol=1e-4)

        ctr += 1
        with self.subTest(i=ctr):
            sine = ipdehjb.analysis.sine_function(1)
            self.assertIs(ipdehjb.analysis.oracle.as_smooth(sine, 1), sine)

    def test_builtin_functions(self):
        """ Analytic derivatives of the built-in test functions. """
        print(f"\nRunning test method {self._testMethodName}\n")

        x = np.array([[0.5, -0.25]])

        ctr = 0
        with self.subTest(i=ctr):
            quadratic = ipdehjb.analysis.quadratic_function(2)
            np.testing.assert_allclose(quadratic(x), [0.3125])
            np.testing.assert_allclose(quadratic.hessian(x)[0], 2 * np.eye(2))

        ctr += 1
        with self.subTest(i=ctr):
            gauss = ipdehjb.analysis.gaussian_function(2)
            numeric = ipdehjb.analysis.oracle.as_smooth(lambda p: gauss(p), 2)
            np.testing.assert_allclose(gauss.gradient(x), numeric.gradient(x), atol=1e-8)
            np.testing.assert_allclose(gauss.hessian(x), numeric.hessian(x), atol=1e-4)

        ctr += 1
        with self.subTest(i=ctr):
            affine = ipdehjb.analysis.affine_function([2.0, -1.0], 0.5)
            np.testing.assert_allclose(affine(x), [1.75])
            np.testing.assert_allclose(ipdehjb.analysis.constant_function(3.0, 2)(x), [3.0])


class JumpOperatorTest(unittest.TestCase):
    def test_merton_quadratic(self):
        """ On x^2 the Merton jump operator is 2 x eta lam mu + eta^2 lam (delta^2 + mu^2). """
        print(f"\nRunning test method {self._testMethodName}\n")

        lam, delta, mu, eta = 1.0, 0.5, 0.2, 0.5
        model = ipdehjb.levy.builtin_model('merton', (lam, delta, mu))
        x = np.array([[0.0], [1.0], [-0.5]])
        values = ipdehjb.analysis.oracle.full_jump_operator(_jump_problem(eta), model, 0,
                                                            ipdehjb.analysis.quadratic_function(1), x)
        expected = 2 * x[:, 0] * eta * lam * mu + eta ** 2 * lam * (delta ** 2 + mu ** 2)
        np.testing.assert_allclose(values, expected, atol=1e-8)

    def test_stable_quadratic(self):
        """ On x^2 the compensated operator of a symmetric stable-like density is eta^2 * 2 Gamma(1/2). """
        print(f"\nRunning test method {self._testMethodName}\n")

        eta = 0.5
        model = ipdehjb.levy.builtin_model('tempered_stable', (1.5, 1.0, 1.0, 1.0, 1.0))
        x = np.array([[0.0], [0.7]])
        values = ipdehjb.analysis.oracle.full_jump_operator(_jump_problem(eta, form='J'), model, 0,
                                                            ipdehjb.analysis.quadratic_function(1), x)
        np.testing.assert_allclose(values, eta ** 2 * 2 * math.gamma(0.5), rtol=1e-6)

    def test_stable_quadratic_uncompensated(self):
        """ For alpha < 1 the first moment of a symmetric density cancels and x^2 gives eta^2 * 2 Gamma(3/2). """
        print(f"\nRunning test method {self._testMethodName}\n")

        eta = 0.5
        model = ipdehjb.levy.builtin_model('tempered_stable', (0.5, 1.0, 1.0, 1.0, 1.0))
        x = np.array([[0.0], [0.7], [-1.3]])
        values = ipdehjb.analysis.oracle.full_jump_operator(_jump_problem(eta), model, 0,
                                                            ipdehjb.analysis.quadratic_function(1), x)
        np.testing.assert_allclose(values, eta ** 2 * 2 * math.gamma(1.5), rtol=1e-6)

    def test_divergent_form(self):
        """ Without the compensator the operator diverges for alpha >= 1. """
        print(f"\nRunning test method {self._testMethodName}\n")

        model = ipdehjb.levy.builtin_model('tempered_stable', (1.5, 1.0, 1.0, 1.0, 1.0))
        with self.assertRaises(ipdehjb.errors.NonConvergentIntegralError):
            ipdehjb.analysis.oracle.full_jump_operator(_jump_problem(0.5), model, 0,
                                                       ipdehjb.analysis.sine_function(1), [[0.0]])


class OperatorOracleTest(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        """ Perform any required set-up once, before any method is run. """
        cls.spec = ipdehjb.problem.affine_problem(1, [{'sigma': [0.3], 'b': [1.0], 'c': [2.0], 'f': [1.0]}])

    def test_affine_value(self):
        """ On an affine function only the drift, the discount and the source remain. """
        print(f"\nRunning test method {self._testMethodName}\n")

        phi = ipdehjb.analysis.affine_function([3.0], 1.0)
        ctr = 0
        with self.subTest(i=ctr):
            self.assertAlmostEqual(ipdehjb.analysis.continuous_operator_oracle(self.spec, 0.5, 0, phi), -1.0)

        ctr += 1
        with self.subTest(i=ctr):
            values = ipdehjb.analysis.continuous_operator_oracle(self.spec, np.array([[0.0], [1.0]]), 0, phi)
            np.testing.assert_allclose(values, [2.0, -4.0])

    def test_generators_agree_without_jumps(self):
        """ Without jumps the scheme's generator is the continuous one. """
        print(f"\nRunning test method {self._testMethodName}\n")

        coeffs = ipdehjb.scheme.compensate(self.spec, None)
        phi = ipdehjb.analysis.sine_function(1)
        x = np.linspace(-1.0, 1.0, 7).reshape(-1, 1)
        np.testing.assert_allclose(ipdehjb.analysis.generator_oracle(self.spec, coeffs, None, 0, phi, x),
                                   ipdehjb.analysis.continuous_generator(self.spec, None, 0, phi, x),
                                   atol=1e-14)


if __name__ == '__main__':
    unittest.main()

import unittest

import numpy as np

import ipdehjb.errors
import ipdehjb.levy
import ipdehjb.problem


class ProblemSpecTest(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        """ Perform any required set-up once, before any method is run. """
        tables = [{'sigma': [0.5, 0.0], 'b': [1.0, -1.0], 'c': [1.0], 'f': [2.0], 'f_linear': [1.0, 0.0]},
                  {'sigma': [0.0, 0.2], 'b_linear': [1.0, 0.0, 0.0, 1.0], 'c': [2.0], 'f': [1.0]}]
        cls.planar = ipdehjb.problem.affine_problem(2, tables, noise_dim=1, name='planar')

    def test_control_set(self):
        """ Control sets are finite, nonempty and indexable. """
        print(f"\nRunning test method {self._testMethodName}\n")

        controls = ipdehjb.problem.ControlSet([0.1, 0.2, 0.3])
        with self.subTest(i=0):
            self.assertEqual(len(controls), 3)
            self.assertEqual(controls[1], 0.2)
        with self.subTest(i=1):
            with self.assertRaises(ipdehjb.errors.InvalidParameterError):
                ipdehjb.problem.ControlSet([])

    def test_evaluate_shapes(self):
        """ Coefficient values are broadcast to their full shapes. """
        print(f"\nRunning test method {self._testMethodName}\n")

        x = np.array([[0.0, 0.0], [1.0, 2.0], [-1.0, 0.5]])
        expected = {'sigma': (3, 2, 1), 'b': (3, 2), 'c': (3,), 'f': (3,), 'eta1': (3, 2, 2)}
        for ctr, (field, shape) in enumerate(expected.items()):
            with self.subTest(i=ctr):
                self.assertEqual(self.planar.evaluate(field, x, 0).shape, shape, msg=f"Wrong shape of {field}.")

        ctr = len(expected)
        with self.subTest(i=ctr):
            np.testing.assert_allclose(self.planar.evaluate('f', x, 0), [2.0, 3.0, 1.0])

        ctr += 1
        with self.subTest(i=ctr):
            np.testing.assert_allclose(self.planar.evaluate('b', x, 1), x)

        ctr += 1
        with self.subTest(i=ctr):
            self.assertEqual(self.planar.c0(x), 1.0)

    def test_invalid_spec(self):
        """ Unknown forms and jump shapes of the wrong dimension are rejected. """
        print(f"\nRunning test method {self._testMethodName}\n")

        ctr = 0
        with self.subTest(i=ctr):
            with self.assertRaises(ipdehjb.errors.InvalidParameterError):
                ipdehjb.problem.ProblemSpec(dim=1, controls=[0], sigma=0.0, b=0.0, c=1.0, f=1.0, form='X')

        ctr += 1
        with self.subTest(i=ctr):
            with self.assertRaises(ipdehjb.errors.SizeMismatchError):
                ipdehjb.problem.ProblemSpec(dim=2, controls=[0], sigma=0.0, b=0.0, c=1.0, f=1.0,
                                            jump_shape=ipdehjb.levy.identity_shape(1))

        ctr += 1
        with self.subTest(i=ctr):
            with self.assertRaises(ipdehjb.errors.SizeMismatchError):
                ipdehjb.problem.affine_problem(1, [{'sigma': [1.0, 2.0]}])

    def test_validate(self):
        """ validate passes a well posed problem and flags a nonpositive discount. """
        print(f"\nRunning test method {self._testMethodName}\n")

        ctr = 0
        report = ipdehjb.problem.validate(self.planar, 200)
        with self.subTest(i=ctr):
            self.assertTrue(report.passed['A2'] and report.passed['A3'])
            self.assertEqual(report.warnings, [])

        ctr += 1
        with self.subTest(i=ctr):
            # f = 2 + x_1 under control 0
            self.assertAlmostEqual(report.lipschitz['f'], 1.0, places=6)

        ctr += 1
        with self.subTest(i=ctr):
            spec = ipdehjb.problem.affine_problem(1, [{'c': [-0.1], 'f': [1.0]}], name='negative')
            with self.assertLogs('ipdehjb.problem', level='WARNING'):
                report = ipdehjb.problem.validate(spec, 50)
            self.assertFalse(report.passed['A3'])
            self.assertAlmostEqual(report.min_c, -0.1)

        ctr += 1
        with self.subTest(i=ctr):
            with self.assertRaises(ipdehjb.errors.InvalidParameterError):
                ipdehjb.problem.validate(self.planar, 0)


class CutoffTest(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        """ Perform any required set-up once, before any method is run. """
        cls.spec = ipdehjb.problem.affine_problem(1, [{'sigma': [1.0], 'b_linear': [1.0], 'c': [1.0], 'f': [3.0]},
                                                      {'sigma': [0.5], 'c': [2.0], 'f': [1.0]}])
        cls.cut = ipdehjb.problem.CutoffSpec(mu=1.0, transition_width=0.5)

    def test_xi(self):
        """ The cutoff is 1 inside 1/mu, 0 beyond the transition and 1/2 halfway. """
        print(f"\nRunning test method {self._testMethodName}\n")

        values = self.cut.xi(np.array([[0.0], [0.5], [1.0], [1.25], [1.5], [4.0]]))
        np.testing.assert_allclose(values, [1.0, 1.0, 1.0, 0.5, 0.0, 0.0], atol=1e-14)

        with self.assertRaises(ipdehjb.errors.InvalidParameterError):
            ipdehjb.problem.CutoffSpec(mu=0.0, transition_width=1.0)

    def test_apply_cutoff(self):
        """ The cutoff scales sigma and b, leaves c and f, and is idempotent. """
        print(f"\nRunning test method {self._testMethodName}\n")

        cut = ipdehjb.problem.apply_cutoff(self.spec, self.cut)
        x = np.array([[0.5], [1.25], [3.0]])

        ctr = 0
        with self.subTest(i=ctr):
            np.testing.assert_allclose(cut.evaluate('b', x, 0), [[0.5], [0.625], [0.0]])

        ctr += 1
        with self.subTest(i=ctr):
            np.testing.assert_allclose(cut.evaluate('sigma', x, 1)[:, 0, 0], [0.5, 0.25, 0.0])

        ctr += 1
        with self.subTest(i=ctr):
            np.testing.assert_allclose(cut.evaluate('f', x, 0), self.spec.evaluate('f', x, 0))

        ctr += 1
        with self.subTest(i=ctr):
            self.assertIs(ipdehjb.problem.apply_cutoff(cut, self.cut), cut)

        ctr += 1
        with self.subTest(i=ctr):
            other = ipdehjb.problem.CutoffSpec(mu=0.5, transition_width=1.0)
            recut = ipdehjb.problem.apply_cutoff(cut, other)
            self.assertIs(recut.uncut, self.spec, msg="A new cutoff must start from the uncut problem.")

    def test_exterior_value(self):
        """ Outside the cutoff support the solution is the smallest ratio f/c. """
        print(f"\nRunning test method {self._testMethodName}\n")

        ctr = 0
        with self.subTest(i=ctr):
            self.assertEqual(ipdehjb.problem.exterior_value(self.spec, 5.0), 0.5)

        ctr += 1
        with self.subTest(i=ctr):
            values = ipdehjb.problem.exterior_value(self.spec, np.array([[5.0], [-7.0]]))
            np.testing.assert_allclose(values, [0.5, 0.5])

        ctr += 1
        with self.subTest(i=ctr):
            rule = ipdehjb.problem.exterior_rule(self.spec)
            np.testing.assert_allclose(rule(np.array([[9.0]])), [0.5])


if __name__ == '__main__':
    unittest.main()

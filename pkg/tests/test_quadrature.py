import unittest

import numpy as np

import ipdehjb.errors
import ipdehjb.levy
import ipdehjb.quadrature


class AnnulusRuleTest(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        """ Perform any required set-up once, before any method is run. """
        merton = ipdehjb.levy.builtin_model('merton', (1.0, 0.5, 0.0))
        stable = ipdehjb.levy.builtin_model('tempered_stable', (0.5, 1.0, 1.0, 1.0, 1.0))
        planar = ipdehjb.levy.LevyModel(density=lambda z: np.exp(-np.sum(z * z, axis=1)), alpha=0.0,
                                        tail_rate=1.0, dim=2, singular=False)
        cls.merton = ipdehjb.levy.truncate(merton, 1e-12, 4.0)
        cls.stable = ipdehjb.levy.truncate(stable, 0.05, 2.0)
        cls.planar = ipdehjb.levy.truncate(planar, 0.2, 2.0)

    def test_nodes_inside_annulus(self):
        """ Every node lies strictly inside the annulus and every weight is positive. """
        print(f"\nRunning test method {self._testMethodName}\n")

        for ctr, measure in enumerate([self.merton, self.stable, self.planar]):
            rule = ipdehjb.quadrature.build_annulus_rule(measure, 0.05)
            radius = np.linalg.norm(rule.nodes, axis=1)
            with self.subTest(i=ctr):
                self.assertTrue(np.all(radius > measure.r) and np.all(radius < measure.R),
                                msg="A node lies outside the annulus.")
                self.assertTrue(np.all(rule.weights > 0), msg="A weight is not positive.")
                self.assertEqual(rule.nodes.shape, (rule.n_nodes, measure.model.dim))

    def test_total_weight(self):
        """ The normalization lambda_Q approaches the annulus mass as dz shrinks. """
        print(f"\nRunning test method {self._testMethodName}\n")

        ctr = 0
        for measure in (self.merton, self.stable):
            errors = []
            for dz in (0.1, 0.05, 0.025):
                rule = ipdehjb.quadrature.build_annulus_rule(measure, dz)
                errors.append(abs(rule.total_weight - measure.mass) / measure.mass)
            with self.subTest(i=ctr):
                self.assertLess(errors[-1], errors[0], msg="Refinement does not reduce the mass error.")
            ctr += 1
            with self.subTest(i=ctr):
                self.assertLess(errors[-1], 1e-2)
            ctr += 1

    def test_graded_spacing(self):
        """ Singular measures get a graded rule with more nodes near the inner radius. """
        print(f"\nRunning test method {self._testMethodName}\n")

        graded = ipdehjb.quadrature.build_annulus_rule(self.stable, 0.1)
        uniform = ipdehjb.quadrature.build_annulus_rule(self.stable, 0.1, graded=False)
        near = lambda rule: int(np.sum(np.abs(rule.nodes[:, 0]) < 0.2))
        self.assertGreater(near(graded), near(uniform))

    def test_integrate(self):
        """ integrate sums g against the weights for scalar and vector integrands. """
        print(f"\nRunning test method {self._testMethodName}\n")

        rule = ipdehjb.quadrature.build_annulus_rule(self.merton, 0.05)

        ctr = 0
        with self.subTest(i=ctr):
            self.assertAlmostEqual(ipdehjb.quadrature.integrate(rule, lambda z: 1.0), rule.total_weight)

        ctr += 1
        with self.subTest(i=ctr):
            # The symmetric first moment vanishes
            self.assertAlmostEqual(ipdehjb.quadrature.integrate(rule, lambda z: z[:, 0]), 0.0, places=12)

        ctr += 1
        with self.subTest(i=ctr):
            value = ipdehjb.quadrature.integrate(rule, lambda z: np.hstack([z, z * z]))
            self.assertEqual(value.shape, (2,))
            self.assertAlmostEqual(value[1], 0.25, places=2)

    def test_errors(self):
        """ Check the argument validation and the node budget. """
        print(f"\nRunning test method {self._testMethodName}\n")

        ctr = 0
        with self.subTest(i=ctr):
            with self.assertRaises(ipdehjb.errors.InvalidParameterError):
                ipdehjb.quadrature.build_annulus_rule(self.merton, 0.0)

        ctr += 1
        with self.subTest(i=ctr):
            with self.assertRaises(ipdehjb.errors.BudgetExceededError):
                ipdehjb.quadrature.build_annulus_rule(self.planar, 1e-3, max_nodes=1000)


if __name__ == '__main__':
    unittest.main()

import math
import unittest

import numpy as np
import scipy.integrate

import ipdehjb.errors
import ipdehjb.levy


class LevyModelTest(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        """ Perform any required set-up once, before any method is run.

            The models are cheap to build but share the envelope sampling, so they
            are constructed once for all test methods.
        """
        cls.merton = ipdehjb.levy.builtin_model('merton', (1.0, 0.5, 0.0))
        cls.stable = ipdehjb.levy.builtin_model('tempered_stable', (0.5, 1.0, 1.0, 1.0, 1.0))
        cls.kou = ipdehjb.levy.builtin_model('kou', (2.0, 0.4, 3.0, 2.0))

    def test_builtin_flags(self):
        """ Check the singularity flag, exponent and tail rate of the built-in families. """
        print(f"\nRunning test method {self._testMethodName}\n")

        ctr = 0
        with self.subTest(i=ctr):
            self.assertFalse(self.merton.singular, msg="Merton jumps have a bounded density.")

        ctr += 1
        with self.subTest(i=ctr):
            self.assertTrue(self.stable.singular, msg="Tempered stable jumps are singular at 0.")

        ctr += 1
        with self.subTest(i=ctr):
            self.assertEqual(self.stable.alpha, 0.5)

        ctr += 1
        with self.subTest(i=ctr):
            self.assertEqual(self.kou.tail_rate, 2.0, msg="Kou decays at the smaller of its two rates.")

        ctr += 1
        with self.subTest(i=ctr):
            cgmy = ipdehjb.levy.builtin_model('cgmy', (1.0, 1.0, 1.0, 0.5))
            self.assertEqual(cgmy.name, 'cgmy')
            self.assertEqual(cgmy.params, (1.0, 1.0, 1.0, 0.5))
            np.testing.assert_allclose(cgmy.evaluate([0.3, -0.7]), self.stable.evaluate([0.3, -0.7]))

    def test_invalid_models(self):
        """ Check that invalid parameters are rejected. """
        print(f"\nRunning test method {self._testMethodName}\n")

        ctr = 0
        with self.subTest(i=ctr):
            with self.assertRaises(ipdehjb.errors.InvalidParameterError):
                ipdehjb.levy.builtin_model('tempered_stable', (2.5, 1.0, 1.0, 1.0, 1.0))

        ctr += 1
        with self.subTest(i=ctr):
            with self.assertRaises(ipdehjb.errors.InvalidParameterError):
                ipdehjb.levy.builtin_model('merton', (1.0, 0.5))

        ctr += 1
        with self.subTest(i=ctr):
            with self.assertRaises(ipdehjb.errors.InvalidParameterError):
                ipdehjb.levy.builtin_model('unknown', ())

        ctr += 1
        with self.subTest(i=ctr):
            with self.assertRaises(ipdehjb.errors.InvalidParameterError):
                ipdehjb.levy.LevyModel(density=lambda z: -np.ones(len(z)), alpha=0.0, tail_rate=1.0)

        ctr += 1
        with self.subTest(i=ctr):
            with self.assertRaises(ipdehjb.errors.DimensionUnsupportedError):
                ipdehjb.levy.LevyModel(density=lambda z: np.ones(len(z)), alpha=0.0, tail_rate=1.0, dim=3)

        ctr += 1
        with self.subTest(i=ctr):
            # Positive scale on the untempered side
            with self.assertRaises(ipdehjb.errors.InvalidParameterError):
                ipdehjb.levy.builtin_model('tempered_stable', (0.5, 1.0, 1.0, 0.0, 1.0))

    def test_envelope_constants(self):
        """ The tempered stable density is bounded by |z|^-(1 + alpha) near 0 and by e^-|z| in the tail. """
        print(f"\nRunning test method {self._testMethodName}\n")

        small, tail = self.stable.envelope_constants()
        with self.subTest(i=0):
            self.assertAlmostEqual(small, 1.0, places=3)
        with self.subTest(i=1):
            self.assertLessEqual(tail, 1.0)

    def test_truncate(self):
        """ Check the validation of the truncation radii. """
        print(f"\nRunning test method {self._testMethodName}\n")

        ctr = 0
        with self.subTest(i=ctr):
            with self.assertRaises(ipdehjb.errors.DegenerateAnnulusError):
                ipdehjb.levy.truncate(self.merton, 2.0, 1.0)

        ctr += 1
        with self.subTest(i=ctr):
            with self.assertRaises(ipdehjb.errors.InvalidParameterError):
                ipdehjb.levy.truncate(self.merton, 0.0, 1.0)

        ctr += 1
        with self.subTest(i=ctr):
            with self.assertLogs('ipdehjb.levy', level='WARNING'):
                ipdehjb.levy.truncate(self.merton, 0.1, 0.5)


class AnnulusIntegralTest(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        """ Perform any required set-up once, before any method is run. """
        cls.merton = ipdehjb.levy.builtin_model('merton', (1.0, 0.5, 0.2))
        cls.stable = ipdehjb.levy.builtin_model('tempered_stable', (0.5, 1.0, 1.0, 1.0, 1.0))
        cls.skewed = ipdehjb.levy.builtin_model('tempered_stable', (0.5, 1.0, 2.0, 1.0, 1.0))
        cls.kou = ipdehjb.levy.builtin_model('kou', (2.0, 0.4, 3.0, 2.0))

    def test_total_mass(self):
        """ Bounded densities carry their intensity as total mass. """
        print(f"\nRunning test method {self._testMethodName}\n")

        ctr = 0
        with self.subTest(i=ctr):
            measure = ipdehjb.levy.truncate(self.merton, 1e-12, 20.0)
            self.assertAlmostEqual(measure.mass, 1.0, places=8)

        ctr += 1
        with self.subTest(i=ctr):
            measure = ipdehjb.levy.truncate(self.kou, 1e-12, 30.0)
            self.assertAlmostEqual(measure.mass, 2.0, places=8)

    def test_singular_mass(self):
        """ Compare the tempered stable annulus mass with scipy's adaptive quadrature. """
        print(f"\nRunning test method {self._testMethodName}\n")

        for ctr, (r, R) in enumerate([(0.1, 2.0), (0.01, 1.5), (0.5, 4.0)]):
            with self.subTest(i=ctr):
                expected, _ = scipy.integrate.quad(lambda z: 2 * math.exp(-z) * z ** -1.5, r, R, epsabs=1e-13)
                measure = ipdehjb.levy.truncate(self.stable, r, R)
                self.assertAlmostEqual(measure.mass / expected, 1.0, places=8,
                                       msg=f"Annulus mass on ({r}, {R}) is not accurate.")

    def test_inner_moments(self):
        """ Small-jump moments integrated from 0 match their closed forms. """
        print(f"\nRunning test method {self._testMethodName}\n")

        shape = ipdehjb.levy.identity_shape(1)
        r = 0.5

        ctr = 0
        with self.subTest(i=ctr):
            measure = ipdehjb.levy.truncate(self.stable, r, 2.0)
            expected, _ = scipy.integrate.quad(lambda z: 2 * math.sqrt(z) * math.exp(-z), 0.0, r, epsabs=1e-13)
            second = measure.inner_second_moment(shape)
            self.assertEqual(second.shape, (1, 1))
            self.assertAlmostEqual(second[0, 0], expected, places=9)

        ctr += 1
        with self.subTest(i=ctr):
            # Only the excess scale of the positive side survives: int_0^r z^-1/2 e^-z dz
            measure = ipdehjb.levy.truncate(self.skewed, r, 2.0)
            expected = math.sqrt(math.pi) * math.erf(math.sqrt(r))
            self.assertAlmostEqual(measure.inner_first_moment(shape)[0], expected, places=8)

        ctr += 1
        with self.subTest(i=ctr):
            measure = ipdehjb.levy.truncate(self.stable, 1.5, 3.0)
            np.testing.assert_array_equal(measure.compensator_first_moment(shape), np.zeros(1))

    def test_vector_integrand(self):
        """ Integrands may return vectors; the symmetric first moment vanishes. """
        print(f"\nRunning test method {self._testMethodName}\n")

        value = ipdehjb.levy.annulus_integral(self.stable, 0.1, 1.0, lambda z: np.hstack([z, z ** 2]))
        with self.subTest(i=0):
            self.assertEqual(np.shape(value), (2,))
        with self.subTest(i=1):
            self.assertAlmostEqual(value[0], 0.0, places=12)
        with self.subTest(i=2):
            self.assertGreater(value[1], 0.0)

    def test_symmetric_odd_integrand(self):
        """ Odd integrands vanish against a symmetric density, with or without an inner radius. """
        print(f"\nRunning test method {self._testMethodName}\n")

        stable_ii = ipdehjb.levy.builtin_model('tempered_stable', (1.5, 1.0, 1.0, 1.0, 1.0))
        first = ipdehjb.levy.identity_shape(1).evaluate
        ctr = 0
        with self.subTest(i=ctr):
            value = ipdehjb.levy.annulus_integral(self.stable, 0.0, 0.5, first)
            self.assertAlmostEqual(float(value[0]), 0.0, places=12)

        ctr += 1
        with self.subTest(i=ctr):
            value = ipdehjb.levy.annulus_integral(self.stable, 0.0, 3.0, lambda z: z[:, 0] ** 3)
            self.assertAlmostEqual(float(value), 0.0, places=12)

        ctr += 1
        with self.subTest(i=ctr):
            value = ipdehjb.levy.annulus_integral(stable_ii, 0.1, 1.0, first)
            self.assertAlmostEqual(float(value[0]), 0.0, places=12)

        ctr += 1
        with self.subTest(i=ctr):
            measure = ipdehjb.levy.truncate(stable_ii, 0.05, 2.0)
            np.testing.assert_allclose(measure.compensator_first_moment(ipdehjb.levy.identity_shape(1)),
                                       np.zeros(1), atol=1e-12)

    def test_divergent_integrand(self):
        """ An integrand that does not vanish at 0 cannot be integrated against a singular density. """
        print(f"\nRunning test method {self._testMethodName}\n")

        with self.assertRaises(ipdehjb.errors.NonConvergentIntegralError):
            ipdehjb.levy.annulus_integral(self.stable, 0.0, 1.0)

    def test_two_dimensional_mass(self):
        """ The planar shell rule integrates a Gaussian density exactly enough. """
        print(f"\nRunning test method {self._testMethodName}\n")

        model = ipdehjb.levy.LevyModel(density=lambda z: np.exp(-np.sum(z * z, axis=1)), alpha=0.0,
                                       tail_rate=1.0, dim=2, singular=False)
        value = ipdehjb.levy.annulus_integral(model, 0.5, 2.0)
        expected = math.pi * (math.exp(-0.25) - math.exp(-4.0))
        self.assertAlmostEqual(float(value), expected, places=8)


if __name__ == '__main__':
    unittest.main()

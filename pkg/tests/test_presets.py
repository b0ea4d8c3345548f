import unittest

import numpy as np

import ipdehjb.errors
import ipdehjb.presets
import ipdehjb.problem


class PresetsTest(unittest.TestCase):
    def test_all_presets(self):
        """ Every preset builds a problem that satisfies the discount assumption. """
        print(f"\nRunning test method {self._testMethodName}\n")

        for ctr, name in enumerate(ipdehjb.presets.PRESET_NAMES):
            preset = ipdehjb.presets.get_preset(name)
            with self.subTest(i=ctr):
                self.assertEqual(preset.name, name)
                self.assertEqual(preset.spec.name, name)
                self.assertIn('discretization.h', preset.defaults)
                report = ipdehjb.problem.validate(preset.spec, 64)
                self.assertTrue(report.passed['A3'], msg=f"Preset {name} has a nonpositive discount.")

    def test_jump_presets(self):
        """ Presets with a Levy model declare a jump shape into their state space. """
        print(f"\nRunning test method {self._testMethodName}\n")

        ctr = 0
        for name in ipdehjb.presets.PRESET_NAMES:
            preset = ipdehjb.presets.get_preset(name)
            if preset.model is None:
                continue
            with self.subTest(i=ctr):
                self.assertEqual(preset.spec.jump_shape.out_dim, preset.spec.dim)
                z = np.array([[0.3] * preset.spec.jump_shape.in_dim])
                self.assertEqual(preset.spec.jump_shape.evaluate(z).shape, (1, preset.spec.dim))
            ctr += 1
        self.assertEqual(ctr, len(ipdehjb.presets.PRESET_NAMES) - 1)

    def test_unknown_preset(self):
        print(f"\nRunning test method {self._testMethodName}\n")

        with self.assertRaises(ipdehjb.errors.InvalidParameterError):
            ipdehjb.presets.get_preset('heston')


if __name__ == '__main__':
    unittest.main()

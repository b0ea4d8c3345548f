import os
import shutil
import tempfile
import unittest

import numpy as np

import ipdehjb.errors
import ipdehjb.mesh


class BoxMeshTest(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        """ Perform any required set-up once, before any method is run. """
        cls.line = ipdehjb.mesh.build_box_mesh((-1.0, 1.0), [4])
        cls.plane = ipdehjb.mesh.build_box_mesh(([0.0, 0.0], [2.0, 3.0]), [2, 3])
        cls.cube = ipdehjb.mesh.build_box_mesh((0.0, 1.0), [2, 2, 2])
        cls.tmp_dir = tempfile.mkdtemp()

    @classmethod
    def tearDownClass(cls):
        shutil.rmtree(cls.tmp_dir, ignore_errors=True)

    def test_counts(self):
        """ A Kuhn mesh has prod(cells + 1) vertices and N! simplices per cell. """
        print(f"\nRunning test method {self._testMethodName}\n")

        expected = [(self.line, 5, 4), (self.plane, 12, 12), (self.cube, 27, 48)]
        for ctr, (mesh, nv, ns) in enumerate(expected):
            with self.subTest(i=ctr):
                self.assertEqual(mesh.n_vertices, nv)
                self.assertEqual(mesh.n_simplices, ns)

    def test_geometry(self):
        """ Mesh size is the longest simplex diameter. """
        print(f"\nRunning test method {self._testMethodName}\n")

        ctr = 0
        with self.subTest(i=ctr):
            self.assertAlmostEqual(self.line.k, 0.5)

        ctr += 1
        with self.subTest(i=ctr):
            self.assertAlmostEqual(self.plane.k, np.sqrt(2.0))

        ctr += 1
        with self.subTest(i=ctr):
            self.assertGreater(self.plane.rho, 0.0)

    def test_interpolate_affine(self):
        """ Piecewise-linear interpolation reproduces affine functions exactly. """
        print(f"\nRunning test method {self._testMethodName}\n")

        rng = np.random.default_rng(7)
        for ctr, mesh in enumerate([self.line, self.plane, self.cube]):
            lo, hi = mesh.box
            points = lo + (hi - lo) * rng.random((50, mesh.dim))
            slope = np.arange(1, mesh.dim + 1, dtype=float)
            nodal = 0.5 + mesh.vertices @ slope
            with self.subTest(i=ctr):
                np.testing.assert_allclose(mesh.interpolate_many(nodal, points), 0.5 + points @ slope,
                                           atol=1e-12)

        with self.subTest(i=3):
            nodal = self.plane.vertices[:, 0] - self.plane.vertices[:, 1]
            self.assertAlmostEqual(ipdehjb.mesh.interpolate(self.plane, nodal, [1.5, 0.25]), 1.25)

    def test_locate(self):
        """ Interior points get a containing simplex, outside points the exterior marker. """
        print(f"\nRunning test method {self._testMethodName}\n")

        ctr = 0
        with self.subTest(i=ctr):
            hit = ipdehjb.mesh.locate(self.plane, [0.3, 2.2])
            self.assertAlmostEqual(float(np.sum(hit.weights)), 1.0)
            self.assertTrue(np.all(hit.weights >= 0))
            corners = self.plane.vertices[hit.vertex_indices]
            np.testing.assert_allclose(hit.weights @ corners, [0.3, 2.2])

        ctr += 1
        with self.subTest(i=ctr):
            self.assertIs(ipdehjb.mesh.locate(self.plane, [2.5, 1.0]), ipdehjb.mesh.EXTERIOR)

        ctr += 1
        with self.subTest(i=ctr):
            # A vertex is located with a unit weight on itself
            hit = ipdehjb.mesh.locate(self.line, 0.5)
            self.assertAlmostEqual(float(np.max(hit.weights)), 1.0)

    def test_exterior_rule(self):
        """ Points outside the box take the exterior rule. """
        print(f"\nRunning test method {self._testMethodName}\n")

        mesh = self.line.with_exterior_rule(lambda points: np.full(len(points), 7.0))
        nodal = np.zeros(mesh.n_vertices)
        values = mesh.interpolate_many(nodal, np.array([[-2.0], [0.0], [1.5]]))
        np.testing.assert_allclose(values, [7.0, 0.0, 7.0])

        with self.assertRaises(ipdehjb.errors.SizeMismatchError):
            mesh.interpolate_many(np.zeros(3), np.array([[0.0]]))

    def test_solution_lipschitz(self):
        """ The edge difference quotient of an affine function is its steepest edge slope. """
        print(f"\nRunning test method {self._testMethodName}\n")

        ctr = 0
        with self.subTest(i=ctr):
            nodal = 3.0 * self.line.vertices[:, 0]
            self.assertAlmostEqual(ipdehjb.mesh.solution_lipschitz(self.line, nodal), 3.0)

        ctr += 1
        with self.subTest(i=ctr):
            self.assertEqual(ipdehjb.mesh.solution_lipschitz(self.plane, np.ones(self.plane.n_vertices)), 0.0)

    def test_write_read(self):
        """ A written mesh reads back with identical geometry and walking point location. """
        print(f"\nRunning test method {self._testMethodName}\n")

        path = os.path.join(self.tmp_dir, 'plane.mesh')
        ipdehjb.mesh.write_mesh(self.plane, path)
        mesh = ipdehjb.mesh.read_mesh(path)

        ctr = 0
        with self.subTest(i=ctr):
            np.testing.assert_array_equal(mesh.vertices, self.plane.vertices)
            np.testing.assert_array_equal(mesh.simplices, self.plane.simplices)

        ctr += 1
        with self.subTest(i=ctr):
            nodal = mesh.vertices[:, 0] + 2 * mesh.vertices[:, 1]
            points = np.array([[0.1, 0.1], [1.9, 2.9], [1.0, 1.5]])
            np.testing.assert_allclose(mesh.interpolate_many(nodal, points), points[:, 0] + 2 * points[:, 1],
                                       atol=1e-12)

        ctr += 1
        with self.subTest(i=ctr):
            bad = os.path.join(self.tmp_dir, 'bad.mesh')
            with open(bad, 'w', encoding='utf-8') as handle:
                handle.write('1 3 2\n0.0\n1.0\n')
            with self.assertRaises(ipdehjb.errors.IpdeHjbError):
                ipdehjb.mesh.read_mesh(bad)

    def test_invalid_meshes(self):
        """ Unsupported dimensions, empty grids and degenerate simplices are rejected. """
        print(f"\nRunning test method {self._testMethodName}\n")

        ctr = 0
        with self.subTest(i=ctr):
            with self.assertRaises(ipdehjb.errors.DimensionUnsupportedError):
                ipdehjb.mesh.build_box_mesh((0.0, 1.0), [1, 1, 1, 1])

        ctr += 1
        with self.subTest(i=ctr):
            with self.assertRaises(ipdehjb.errors.InvalidParameterError):
                ipdehjb.mesh.build_box_mesh((0.0, 1.0), [0])

        ctr += 1
        with self.subTest(i=ctr):
            with self.assertRaises(ipdehjb.errors.InvalidParameterError):
                ipdehjb.mesh.build_box_mesh((1.0, 0.0), [2])

        ctr += 1
        with self.subTest(i=ctr):
            with self.assertRaises(ipdehjb.errors.InvalidParameterError):
                ipdehjb.mesh.Triangulation([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], [[0, 1, 2]])


if __name__ == '__main__':
    unittest.main()

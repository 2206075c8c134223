import unittest

import numpy as np

from thetak.config import settings
from thetak.errors import QuadratureError
from thetak.quadrature import integrate_box, integrate_interval, integrate_simplex, sphere_average


class TestQuadrature(unittest.TestCase):
    def test_interval(self):
        self.assertAlmostEqual(integrate_interval(np.sin, 0.0, np.pi), 2.0, places=12)
        self.assertEqual(integrate_interval(np.sin, 1.0, 1.0), 0.0)

    def test_gaussian_tail_needs_panels(self):
        value = integrate_interval(lambda x: np.exp(-x * x), -12.0, 12.0, panels=4)
        self.assertAlmostEqual(value, np.sqrt(np.pi), places=11)

    def test_box(self):
        value = integrate_box(lambda x, y: x * y, (0.0, 0.0), (1.0, 2.0))
        self.assertAlmostEqual(value, 1.0, places=12)

    def test_simplex(self):
        self.assertAlmostEqual(integrate_simplex(lambda s0, s1: np.ones_like(s0 * s1)), 0.5, places=12)
        self.assertAlmostEqual(integrate_simplex(lambda s0, s1: s0 + 0 * s1), 1 / 6, places=12)

    def test_sphere_average(self):
        self.assertAlmostEqual(sphere_average(lambda x, y, z: z * z, 2.0), 4 / 3, places=10)
        self.assertAlmostEqual(sphere_average(lambda x, y, z: x * x + y * y + z * z, 2.0), 4.0, places=10)

    def test_interval_refines_near_an_endpoint_singularity(self):
        # sqrt has an unbounded derivative at 0; only the panels next to it keep splitting
        self.assertAlmostEqual(integrate_interval(np.sqrt, 0.0, 1.0), 2 / 3, places=11)
        self.assertAlmostEqual(integrate_interval(lambda x: 1j * np.sqrt(x), 0.0, 4.0, panels=3), 16j / 3, places=10)

    def test_axis_only_sphere_average(self):
        self.assertAlmostEqual(sphere_average(lambda x, y, z: z * z, 2.0, axis_only=True), 4 / 3, places=12)

    def test_node_cap(self):
        settings.QUADRATURE_NODE_CAP = 40
        with self.assertRaises(QuadratureError):
            integrate_interval(lambda x: np.sin(200 * x), 0.0, 10.0)


if __name__ == "__main__":
    unittest.main()

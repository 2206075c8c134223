"""End-to-end checks over the full windows: every model, every identity."""
import unittest
from fractions import Fraction

import numpy as np

from thetak.asymptotics import (
    build_expansion,
    em_halfline,
    exact_vs_expansion,
    fulllattice_target,
    twisted_halfline_target,
    twisted_sum,
)
from thetak.dist_calc import TestFunction, pair
from thetak.functoriality import finite_k_functoriality, mystery_check, pushforward_orbit_check, verify_restriction
from thetak.group_orbits import IrrepLabel, clebsch_gordan, kirillov_residual
from thetak.models import complex_line, load_model, multiplicity, with_defect
from thetak.polynomial import Polynomial

LADDER = (8, 16, 32, 64)
GRID = np.linspace(-1, 1, 41)


class TestExpansions(unittest.TestCase):
    def test_full_lattice(self):
        phi = TestFunction.gaussian([0], poly=Polynomial.univariate([1, 0, 1]))
        report = exact_vs_expansion(fulllattice_target(), phi, 3, LADDER)
        self.assertTrue(report.passed, report.summary())
        self.assertGreaterEqual(report.target, 4.5)

    def test_bernoulli_and_germ_routes(self):
        probes = [TestFunction.gaussian([Fraction(c, 6)], form=[[Fraction(s, 2)]])
                  for c, s in ((0, 2), (1, 1), (2, 3), (-3, 2), (5, 4), (1, 6))]
        for a in (0, 1):
            germ_route = build_expansion(complex_line(2, a), 5)
            bernoulli_route = em_halfline(a, 2, 5)
            for n in range(7):
                for index, phi in enumerate(probes):
                    with self.subTest(a=a, n=n, probe=index):
                        difference = pair(germ_route.coefficient(n, 1), phi) - pair(bernoulli_route.coefficient(n, 1), phi)
                        self.assertLessEqual(abs(difference), 1e-12)

    def test_complex_line(self):
        phi = TestFunction.gaussian([Fraction(1, 3)])
        for a in (0, 1):
            with self.subTest(a=a):
                report = exact_vs_expansion(load_model(f"complex-line(2,{a})"), phi, 3, LADDER)
                self.assertTrue(report.passed, report.summary())
                self.assertGreaterEqual(report.target, 4.5)

    def test_complex_space(self):
        phi = TestFunction.gaussian([Fraction(1, 3), Fraction(1, 3)])
        report = exact_vs_expansion(load_model("complex-space((2,0),(0,2); (0,0))"), phi, 2, LADDER)
        self.assertTrue(report.passed, report.summary())
        self.assertGreaterEqual(report.target, 3.5)


class TestSU2(unittest.TestCase):
    def test_kirillov(self):
        for lam in range(1, 11):
            with self.subTest(lam=lam):
                self.assertLessEqual(kirillov_residual(IrrepLabel.su2(lam), GRID), 1e-8)

    def test_flag_square_is_tensor_square(self):
        model = load_model("su2-flag-square")
        for k in range(1, 51):
            expected = {int(label) for label in clebsch_gordan(IrrepLabel.su2(k), IrrepLabel.su2(k))}
            found = {lam for lam in range(1, 2 * k + 2) if multiplicity(model, (lam,), k)}
            self.assertEqual(found, expected, f"k={k}")

    def test_orbit_count(self):
        model = load_model("su2-flag-square")
        for k in range(1, 101):
            result = mystery_check(model, k)
            self.assertEqual((result.dimension, result.volume), (k * k, k * k), f"k={k}")

    def test_restriction(self):
        model = load_model("su2-flag-square")
        self.assertTrue(verify_restriction(model, 50).passed)
        self.assertFalse(verify_restriction(with_defect(model, 3, 2), 50).passed)

    def test_pushforward(self):
        for lam in range(1, 11):
            with self.subTest(lam=lam):
                self.assertLessEqual(pushforward_orbit_check(IrrepLabel.su2(lam), GRID), 1e-8)
        model = load_model("su2-flag-square")
        phi = TestFunction.gaussian([Fraction(1, 3)])
        for k in range(1, 11):
            with self.subTest(k=k):
                self.assertLessEqual(finite_k_functoriality(model, k, phi), 1e-8)


class TestTwisted(unittest.TestCase):
    def test_alternating_sum(self):
        value = twisted_sum(load_model("t-star-s1"), "1/2", 64, TestFunction.gaussian([Fraction(1, 3)]))
        self.assertLessEqual(abs(value), 1e-8)

    def test_twisted_half_line(self):
        phi = TestFunction.gaussian([Fraction(1, 3)])
        for zeta in ("1/4", "1/3"):
            with self.subTest(zeta=zeta):
                report = exact_vs_expansion(twisted_halfline_target(zeta, 0, 2), phi, 3, LADDER)
                self.assertTrue(report.passed, report.summary())
                self.assertGreaterEqual(report.target, 3.5)


if __name__ == "__main__":
    unittest.main()

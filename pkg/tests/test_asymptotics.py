import math
import unittest
from fractions import Fraction

from thetak.dist_calc import Distribution, TestFunction, pair, truncated_pair
from thetak.errors import SpinConditionError, UnsupportedOrderError, UsageError
from thetak.models import complex_line, dh_pair, load_model, theta_pair
from thetak.polynomial import Polynomial
from thetak.asymptotics import (
    build_expansion,
    convolved_expansion,
    convolved_theta_pair,
    em_fulllattice,
    em_halfline,
    exact_vs_expansion,
    fit_decay,
    fulllattice_coefficients,
    fulllattice_target,
    halfline_target,
    rg_target,
    twisted_fulllattice_expansion,
    twisted_fulllattice_target,
    twisted_halfline_expansion,
    twisted_halfline_target,
    twisted_sum,
)

LADDER = (8, 16, 32, 64)


def phi_shifted():
    return TestFunction.gaussian([Fraction(1, 3)])


def basis_functions():
    """Six Gaussian-polynomial probes at different centres and widths."""
    x = Polynomial.univariate([0, 1])
    return [
        TestFunction.gaussian([0]),
        TestFunction.gaussian([Fraction(1, 3)]),
        TestFunction.gaussian([Fraction(-1, 2)], form=[[Fraction(1, 2)]]),
        TestFunction.gaussian([1], form=[[2]]),
        TestFunction.gaussian([Fraction(1, 4)], poly=Polynomial.univariate([1, 0, 1])),
        TestFunction.gaussian([Fraction(2, 3)], poly=x),
    ]


class TestEulerMaclaurin(unittest.TestCase):
    def test_fulllattice_table(self):
        self.assertEqual(fulllattice_coefficients(3),
                         [(0, Fraction(1, 2)), (1, Fraction(-1, 12)), (2, 0), (3, Fraction(1, 720))])

    def test_fulllattice_layers(self):
        S = em_fulllattice(3)
        self.assertEqual(S.leading, 1)
        self.assertAlmostEqual(pair(S.coefficient(1, 1), phi_shifted()), phi_shifted().at((0,)) / 2)
        self.assertTrue(S.is_layer_zero(3))
        phi = phi_shifted()
        self.assertAlmostEqual(pair(S.coefficient(2, 1), phi), -phi.derivative((1,)).at((0,)) / 12)

    def test_fulllattice_order_fit(self):
        # the volume term and phi(0)/2 alone leave an error of order k^-5 for an even probe
        phi = TestFunction.gaussian([0], poly=Polynomial.univariate([1, 0, 1]))
        report = exact_vs_expansion(fulllattice_target(), phi, 3, LADDER)
        self.assertTrue(report.passed, report.summary())
        self.assertEqual(report.target, 4.5)

    def test_fulllattice_order_fit_shifted_probe(self):
        report = exact_vs_expansion(fulllattice_target(), phi_shifted(), 3, LADDER)
        self.assertTrue(report.passed, report.summary())

    def test_halfline_layers(self):
        S = em_halfline(0, 2, 2)
        phi = phi_shifted()
        self.assertAlmostEqual(pair(S.coefficient(0, 1), phi), pair(Distribution.half_line(0, Fraction(1, 2)), phi))
        self.assertTrue(S.is_layer_zero(1))
        self.assertAlmostEqual(pair(S.coefficient(2, 1), phi), phi.derivative((1,)).at((0,)) / 12)

    def test_halfline_needs_even_step(self):
        with self.assertRaises(SpinConditionError):
            em_halfline(0, 3, 2)

    def test_halfline_order_fit(self):
        report = exact_vs_expansion(halfline_target(0, 2), phi_shifted(), 3, LADDER)
        self.assertTrue(report.passed, report.summary())


class TestBuildExpansion(unittest.TestCase):
    def test_integer_lattice_has_only_volume(self):
        S = build_expansion(load_model("t-star-s1"), 3)
        self.assertEqual(S.leading, 1)
        phi = phi_shifted()
        self.assertAlmostEqual(pair(S.coefficient(0, 1), phi), pair(Distribution.lebesgue(), phi))
        self.assertTrue(all(S.is_layer_zero(n) for n in range(1, S.truncation + 1)))

    def test_leading_layer_is_dh(self):
        for spec in ("complex-line(2, 1)", "complex-space((2,0),(0,2); (0,0))", "su2-orbit"):
            with self.subTest(model=spec):
                model = load_model(spec)
                S = build_expansion(model, 0 if model.group.is_abelian else -model.d)
                self.assertEqual(S.leading, model.d)
                phi = TestFunction.gaussian([Fraction(1, 3)] * model.dual_rank)
                self.assertAlmostEqual(pair(S.coefficient(0, 1), phi), pair(model.dh, phi))

    def test_complex_line_second_layer(self):
        S = build_expansion(load_model("complex-line(2, 0)"), 1)
        self.assertTrue(S.is_layer_zero(1))
        phi = phi_shifted()
        self.assertAlmostEqual(pair(S.coefficient(2, 1), phi), phi.derivative((1,)).at((0,)) / 12)

    def test_two_routes_agree(self):
        for a in (0, 1):
            model = complex_line(2, a)
            germ_route = build_expansion(model, 5)
            bernoulli_route = em_halfline(a, 2, 5)
            for n in range(7):
                for index, phi in enumerate(basis_functions()):
                    with self.subTest(a=a, n=n, phi=index):
                        self.assertLessEqual(abs(pair(germ_route.coefficient(n, 1), phi)
                                                 - pair(bernoulli_route.coefficient(n, 1), phi)), 1e-12)

    def test_unsupported_orders(self):
        with self.assertRaises(UnsupportedOrderError):
            build_expansion(load_model("complex-line(2, 0)"), 17)
        with self.assertRaises(UnsupportedOrderError):
            build_expansion(load_model("complex-line(2, 0)"), -2)
        with self.assertRaises(UnsupportedOrderError):
            build_expansion(load_model("su2-flag-square"), 0)
        build_expansion(load_model("su2-flag-square"), -2)


class TestOrderFit(unittest.TestCase):
    def test_integer_lattice_converges_exactly(self):
        report = exact_vs_expansion(load_model("t-star-s1"), TestFunction.gaussian([0]), 0, (8, 16, 32))
        self.assertTrue(report.passed)
        self.assertTrue(report.converged_exactly)
        self.assertIn("converged exactly", report.summary())
        self.assertTrue(all(e <= 1e-10 for e in report.errors))

    def test_su2_orbit_is_exact(self):
        report = exact_vs_expansion(load_model("su2-orbit"), TestFunction.gaussian([0, 0, Fraction(1, 2)]), 0,
                                    (2, 4, 8))
        self.assertTrue(report.converged_exactly)

    def test_complex_line(self):
        for a in (0, 1):
            with self.subTest(a=a):
                report = exact_vs_expansion(load_model(f"complex-line(2, {a})"), phi_shifted(), 3, LADDER)
                self.assertEqual(report.target, 4.5)
                self.assertTrue(report.passed, report.summary())
                self.assertEqual(len(report.certificates), len(LADDER))

    def test_complex_space(self):
        phi = TestFunction.gaussian([Fraction(1, 3), Fraction(1, 2)])
        report = exact_vs_expansion(load_model("complex-space((2,0),(0,2); (0,0))"), phi, 2, LADDER)
        self.assertEqual(report.target, 3.5)
        self.assertTrue(report.passed, report.summary())

    def test_flag_square_through_rg(self):
        report = exact_vs_expansion(rg_target(load_model("su2-flag-square")), phi_shifted(), -2, LADDER)
        self.assertEqual(report.target, -0.5)
        self.assertTrue(report.passed, report.summary())

    def test_leading_order_extrapolation(self):
        # k^-d Theta_k - DH(1) is O(k^-2) on the complex line, so k times it halves per doubling
        model = load_model("complex-line(2, 0)")
        phi = phi_shifted()
        dh = dh_pair(model, 0, phi)
        scaled = [k * abs(theta_pair(model, k, phi) / k ** model.d - dh) for k in (16, 32, 64, 128)]
        for coarse, fine in zip(scaled, scaled[1:]):
            self.assertAlmostEqual(fine / coarse, 0.5, delta=0.05)

    def test_ladder_validation(self):
        with self.assertRaises(UsageError):
            exact_vs_expansion(load_model("t-star-s1"), TestFunction.gaussian([0]), 0, (8, 16))
        with self.assertRaises(UsageError):
            exact_vs_expansion(load_model("t-star-s1"), TestFunction.gaussian([0]), 0, (8, 8, 16))

    def test_fit_decay(self):
        ladder = [8, 16, 32, 64]
        fit = fit_decay(ladder, [k ** -3.0 for k in ladder], 1.0)
        self.assertAlmostEqual(fit.slope, 3.0)
        self.assertFalse(fit.converged_exactly)
        self.assertTrue(fit_decay(ladder, [0.0] * 4, 1.0).converged_exactly)
        self.assertIsNone(fit_decay(ladder, [1e-3, 1e-4, 0.0, 0.0], 1.0).slope)


class TestTwisted(unittest.TestCase):
    def test_alternating_integer_sum_vanishes(self):
        value = twisted_sum(load_model("t-star-s1"), "1/2", 64, TestFunction.gaussian([0]))
        self.assertLessEqual(abs(value), 1e-8)

    def test_twisted_integer_sums_are_negligible(self):
        model = load_model("t-star-s1")
        k = 64
        for phi in (TestFunction.gaussian([0]), phi_shifted()):
            untwisted = abs(theta_pair(model, k, phi))
            for zeta in ("1/2", "1/3", "1/4", "2/5"):
                with self.subTest(zeta=zeta):
                    self.assertLess(abs(twisted_sum(model, zeta, k, phi)), k ** -8.0 * untwisted)

    def test_trivial_twist_is_theta(self):
        model = load_model("complex-line(2, 0)")
        phi = phi_shifted()
        self.assertAlmostEqual(twisted_sum(model, "0", 4, phi), theta_pair(model, 4, phi), places=12)

    def test_quarter_turn_on_complex_line(self):
        phi = TestFunction.gaussian([0], form=[[Fraction(1, 4)]])
        value = twisted_sum(load_model("complex-line(2, 0)"), "1/4", 1, phi)
        expected = 1j * sum((-1) ** j * math.exp(-((2 * j + 1) ** 2) / 4) for j in range(20))
        self.assertAlmostEqual(value, expected, places=12)

    def test_su2_models_are_rejected(self):
        with self.assertRaises(UsageError):
            twisted_sum(load_model("su2-orbit"), "1/2", 4, TestFunction.gaussian([0, 0, 0]))

    def test_halfline_layers(self):
        S = twisted_halfline_expansion("1/4", 0, 2, 1)
        phi = phi_shifted()
        # i^{w/2} S_0(-1) phi(0); the first-order layer vanishes with the half shift
        self.assertAlmostEqual(pair(S.coefficient(0, 5), phi), 0.5j * phi.at((0,)))
        self.assertTrue(S.is_layer_zero(1))

    def test_halfline_prefactor_period(self):
        S = twisted_halfline_expansion("1/4", 1, 2, 0)
        self.assertEqual(S.period, 4)
        phi = phi_shifted()
        values = [pair(S.coefficient(0, k), phi) for k in range(4)]
        self.assertAlmostEqual(values[1], 1j * values[0])

    def test_untwisted_halfline_is_rejected(self):
        with self.assertRaises(UsageError):
            twisted_halfline_expansion("1/2", 0, 2, 3)
        with self.assertRaises(UsageError):
            twisted_fulllattice_expansion("0", 3)

    def test_fulllattice_layers(self):
        S = twisted_fulllattice_expansion("1/2", 1)
        phi = phi_shifted()
        self.assertAlmostEqual(pair(S.coefficient(0, 3), phi), phi.at((0,)) / 2)
        self.assertAlmostEqual(pair(S.coefficient(1, 3), phi), -phi.derivative((1,)).at((0,)) / 4)

    def test_halfline_order_fit(self):
        for zeta in ("1/4", "1/3"):
            with self.subTest(zeta=zeta):
                report = exact_vs_expansion(twisted_halfline_target(zeta, 0, 2), phi_shifted(), 3, LADDER)
                self.assertTrue(report.passed, report.summary())
                self.assertGreaterEqual(report.target, 3.5)

    def test_fulllattice_order_fit(self):
        report = exact_vs_expansion(twisted_fulllattice_target("1/3"), phi_shifted(), 3, LADDER)
        self.assertTrue(report.passed, report.summary())


class TestConvolution(unittest.TestCase):
    def test_quotient_germ_cancels_complex_line_germ(self):
        model = load_model("complex-line(2, 0)")
        S = convolved_expansion(model, "jhalf_quotient_su2_t", 4)
        self.assertTrue(all(S.is_layer_zero(n) for n in range(1, 6)))
        phi = phi_shifted()
        for k in (4, 8):
            with self.subTest(k=k):
                exact = convolved_theta_pair(model, "jhalf_quotient_su2_t", k, phi)
                self.assertLessEqual(abs(exact - truncated_pair(S, phi, k, -4)), 1e-9)

    def test_su2_models_are_rejected(self):
        with self.assertRaises(UsageError):
            convolved_expansion(load_model("su2-orbit"), "one", 0)


if __name__ == "__main__":
    unittest.main()

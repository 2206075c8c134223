import math
import random
import unittest
from fractions import Fraction

import numpy as np
from scipy.special import erf

from thetak.dist_calc import (
    DeltaTerm,
    DensityTerm,
    Distribution,
    LaurentDistSeries,
    LinearMap,
    PlaneWave,
    SphereTerm,
    TestFunction,
    apply_diff_op,
    apply_operator,
    apply_symbol,
    convolve,
    differentiate,
    fourier_pair,
    pair,
    pushforward,
    rescale_k,
    series_pair,
    total_mass,
    truncated_pair,
)
from thetak.errors import InvalidTestFunctionError, OperatorOrderError, UnboundedSupportError
from thetak.exact_series import germ_taylor, to_diff_op
from thetak.polynomial import Polynomial

ERF1 = math.sqrt(math.pi) / 2 * erf(1.0)


class TestTestFunction(unittest.TestCase):
    def setUp(self):
        self.phi = TestFunction.gaussian([0])

    def test_values_and_derivatives(self):
        self.assertAlmostEqual(self.phi.at((0.5,)), math.exp(-0.25))
        self.assertAlmostEqual(self.phi.derivative((1,)).at((0.5,)), -math.exp(-0.25))
        self.assertAlmostEqual(self.phi.derivative((2,)).at((0,)), -2.0)

    def test_scaled(self):
        self.assertAlmostEqual(self.phi.scaled(2).at((1,)), self.phi.at((0.5,)))

    def test_vectorised_call(self):
        values = self.phi(np.array([[0.0], [1.0]]))
        np.testing.assert_allclose(values, [1.0, math.exp(-1.0)])

    def test_form_must_be_positive_definite(self):
        with self.assertRaises(InvalidTestFunctionError):
            TestFunction.gaussian([0, 0], form=[[1, 0], [0, -1]])

    def test_decay_ball(self):
        ball = self.phi.decay_ball(1e-12)
        self.assertEqual(ball.center, (0.0,))
        self.assertGreater(ball.radius, 5.0)
        self.assertLess(ball.radius, 6.5)

    def test_plane_wave_has_no_decay_ball(self):
        with self.assertRaises(UnboundedSupportError):
            PlaneWave((1.0,)).decay_ball(1e-12)


class TestPairing(unittest.TestCase):
    def setUp(self):
        self.phi = TestFunction.gaussian([0])

    def test_delta(self):
        self.assertAlmostEqual(pair(Distribution.delta(Fraction(1, 2)), self.phi), math.exp(-0.25))

    def test_delta_derivative_carries_sign(self):
        D = Distribution.delta(Fraction(1, 2), derivative=(1,))
        self.assertAlmostEqual(pair(D, self.phi), math.exp(-0.25))

    def test_deltas_merge(self):
        D = Distribution.delta(1) + Distribution.delta(1, Fraction(2))
        self.assertEqual(D.terms, (DeltaTerm((Fraction(1),), (0,), Fraction(3)),))
        self.assertTrue((D - D).is_zero())

    def test_interval_and_lines(self):
        self.assertAlmostEqual(pair(Distribution.interval(0, 1), self.phi), ERF1, places=11)
        self.assertAlmostEqual(pair(Distribution.half_line(0), self.phi), math.sqrt(math.pi) / 2, places=10)
        self.assertAlmostEqual(pair(Distribution.lebesgue(), self.phi), math.sqrt(math.pi), places=10)

    def test_box_in_two_dimensions(self):
        phi2 = TestFunction.gaussian([0, 0])
        self.assertAlmostEqual(pair(Distribution.box([0, 0], [1, 1]), phi2), ERF1 ** 2, places=11)

    def test_sphere(self):
        phi3 = TestFunction.gaussian([0, 0, 0])
        self.assertAlmostEqual(pair(Distribution.sphere(2, 3), phi3), 3 * math.exp(-4.0), places=11)

    def test_rank_mismatch(self):
        with self.assertRaises(ValueError):
            pair(Distribution.delta((0, 0)), self.phi)

    def test_fourier_pair(self):
        value = fourier_pair(Distribution.delta(Fraction(1, 2)), 1.0)
        self.assertAlmostEqual(value, complex(math.cos(0.5), math.sin(0.5)))
        # (1/2) int_{-1}^{1} e^{i t x} dx
        self.assertAlmostEqual(fourier_pair(Distribution.interval(-1, 1, weight=Fraction(1, 2)), 2.0),
                               math.sin(2.0) / 2.0)

    def test_fourier_pair_needs_compact_support(self):
        with self.assertRaises(UnboundedSupportError):
            fourier_pair(Distribution.lebesgue(), 1.0)


class TestMass(unittest.TestCase):
    def test_exact_masses(self):
        x = Polynomial.univariate([0, 1])
        self.assertEqual(total_mass(Distribution.interval(0, 2, x)), 2)
        self.assertEqual(total_mass(Distribution.simplex([0, 0], [[1, 0], [0, 1]])), Fraction(1, 2))
        self.assertEqual(total_mass(Distribution.sphere(2, 3)), 3)
        s2 = Polynomial.univariate([0, 0, 1])
        self.assertEqual(total_mass(Distribution.radial(0, 1, s2)), Fraction(1, 3))

    def test_dead_generator_is_integrated_out(self):
        D = Distribution.parametric([0], [[1], [0]], [0, 0], [1, 2])
        self.assertEqual(len(D), 1)
        self.assertIsInstance(D.terms[0], DensityTerm)
        self.assertEqual(D.terms[0].dimension, 1)
        self.assertEqual(total_mass(D), 2)

    def test_unbounded_mass(self):
        with self.assertRaises(UnboundedSupportError):
            total_mass(Distribution.half_line(0))


class TestOperations(unittest.TestCase):
    def setUp(self):
        self.phi = TestFunction.gaussian([Fraction(1, 3)])

    def test_rescale_is_pullback_of_test_function(self):
        D = Distribution.interval(0, 1) + Distribution.delta(Fraction(1, 2), derivative=(1,))
        for k in (2, 5):
            with self.subTest(k=k):
                self.assertAlmostEqual(pair(rescale_k(D, k), self.phi), pair(D, self.phi.scaled(k)), places=11)

    def test_pushforward_of_sphere_is_uniform(self):
        D = pushforward(Distribution.sphere(1, 1), LinearMap.axis())
        phi = TestFunction.gaussian([0])
        self.assertAlmostEqual(pair(D, phi), ERF1, places=11)

    def test_pushforward_keeps_mass(self):
        D = Distribution.radial(0, 1, Polynomial.univariate([0, 0, 1]))
        self.assertEqual(total_mass(pushforward(D, LinearMap.axis())), Fraction(1, 3))

    def test_pushforward_along_coordinate(self):
        D = Distribution.delta((1, 2))
        self.assertEqual(pushforward(D, LinearMap.coordinate(2, 1)), Distribution.delta(2))

    def test_convolution_translates(self):
        shifted = convolve(Distribution.delta(1), Distribution.interval(0, 1))
        self.assertAlmostEqual(pair(shifted, self.phi), pair(Distribution.interval(1, 2), self.phi), places=12)

    def test_convolution_of_unbounded_operands(self):
        with self.assertRaises(UnboundedSupportError):
            convolve(Distribution.lebesgue(), Distribution.half_line(0))

    def test_convolution_needs_a_compact_second_operand(self):
        with self.assertRaises(UnboundedSupportError):
            convolve(Distribution.interval(0, 1), Distribution.half_line(0))
        swapped = convolve(Distribution.half_line(0), Distribution.interval(0, 1))
        self.assertFalse(swapped.is_bounded())

    def test_interval_derivative_is_boundary_deltas(self):
        D = differentiate(Distribution.interval(0, 1), (1,))
        self.assertEqual(D, Distribution.delta(0) - Distribution.delta(1))

    def test_apply_symbol_applies_i(self):
        D = apply_symbol(Distribution.delta(0), Polynomial.univariate([0, 1]))
        # i d delta_0 paired with phi is -i phi'(0)
        expected = -1j * self.phi.derivative((1,)).at((0,))
        self.assertAlmostEqual(pair(D, self.phi), expected)

def random_operator(rng: random.Random, nvars: int, degree: int = 4, terms: int = 4) -> Polynomial:
    coeffs = {}
    for _ in range(terms):
        exps = [0] * nvars
        for _ in range(rng.randint(0, degree)):
            exps[rng.randrange(nvars)] += 1
        coeffs[tuple(exps)] = Fraction(rng.choice((-1, 1)) * rng.randint(1, 5), rng.randint(1, 4))
    return Polynomial.from_dict(nvars, coeffs)


def reflected(p: Polynomial) -> Polynomial:
    """p(-x)"""
    return Polynomial.from_dict(p.nvars, {e: c * (-1) ** sum(e) for e, c in p.items})


def term_kinds():
    """One distribution per term type, each with a test function of matching rank."""
    phi1 = TestFunction.gaussian([Fraction(1, 3)])
    phi2 = TestFunction.gaussian([Fraction(1, 3), Fraction(-1, 4)])
    phi3 = TestFunction.gaussian([Fraction(1, 3), 0, Fraction(1, 5)])
    return {
        "delta": (Distribution.delta(Fraction(1, 2), Fraction(3, 2)), phi1),
        "interval": (Distribution.interval(-1, 2, Polynomial.univariate([1, 0, 1])), phi1),
        "half-line": (Distribution.half_line(0), phi1),
        "box": (Distribution.box([0, 0], [1, 2], Polynomial.from_dict(2, {(1, 0): 1, (0, 1): 2})), phi2),
        "sphere": (Distribution.sphere(Fraction(3, 2), 2), phi3),
        "radial": (Distribution.radial(Fraction(1, 2), 1, Polynomial.univariate([0, 0, 1])), phi3),
    }


class TestCalculusIdentities(unittest.TestCase):
    def setUp(self):
        self.rng = random.Random(20240611)

    def assertClose(self, first, second, rel=1e-11):
        self.assertLessEqual(abs(first - second), rel * (1.0 + abs(second)))

    def test_operator_is_adjoint_to_its_reflection(self):
        for name, (D, phi) in term_kinds().items():
            for _ in range(3):
                p = random_operator(self.rng, D.rank)
                with self.subTest(kind=name, operator=repr(p)):
                    lhs = pair(apply_operator(D, p), phi)
                    rhs = pair(D, phi.apply_operator(reflected(p)))
                    self.assertClose(lhs, rhs)

    def test_pushforward_is_pairing_with_the_pullback(self):
        maps = {
            "delta": LinearMap.of([[2], [-1]]),
            "interval": LinearMap.of([[2], [-1]]),
            "box": LinearMap.of([[1, 1]]),
            "sphere": LinearMap.of([[0, 3, 4]]),
            "radial": LinearMap.axis(),
        }
        kinds = term_kinds()
        cases = [(name, kinds[name][0], r) for name, r in maps.items()]
        cases.append(("delta with derivative", Distribution.delta((1, 2), derivative=(1, 0)),
                      LinearMap.of([[1, 1], [2, -1]])))
        cases.append(("sphere with derivative", Distribution(3, (SphereTerm(Fraction(1), Fraction(1), (0, 1, 1)),)),
                      LinearMap.of([[0, 3, 4]])))
        for name, D, r in cases:
            phi = TestFunction.gaussian([Fraction(self.rng.randint(-3, 3), 4) for _ in range(r.target)])
            with self.subTest(kind=name):
                pulled = phi.pullback([0] * r.target, r.rows)
                self.assertClose(pair(pushforward(D, r), phi), pair(D, pulled))

    def test_rescaling_commutes_with_pushforward(self):
        kinds = term_kinds()
        phi = TestFunction.gaussian([Fraction(1, 5)])
        for name in ("sphere", "radial"):
            D = kinds[name][0]
            for r in (LinearMap.axis(), LinearMap.of([[0, 3, 4]])):
                for k in (2, 5, 8):
                    with self.subTest(kind=name, map=r.rows, k=k):
                        first = pair(pushforward(rescale_k(D, k), r), phi)
                        second = pair(rescale_k(pushforward(D, r), k), phi)
                        self.assertClose(first, second)

    def test_fourier_transform_of_a_convolution_is_the_product(self):
        x2 = Polynomial.univariate([0, 0, 1])
        cases = {
            "delta * delta": (Distribution.delta(Fraction(1, 3)), Distribution.delta(Fraction(-1, 2), 2)),
            "delta * interval": (Distribution.delta(Fraction(1, 3)),
                                 Distribution.interval(-1, 1, weight=Fraction(1, 2))),
            "interval * interval": (Distribution.interval(0, 1, x2),
                                    Distribution.interval(-1, 1, weight=Fraction(1, 2))),
            "box * delta": (Distribution.box([0, 0], [1, 2]), Distribution.delta((1, -1))),
            "sphere * delta": (Distribution.sphere(Fraction(3, 2), 2), Distribution.delta((0, 0, 0), 3)),
            "radial * delta": (Distribution.radial(Fraction(1, 2), 1, x2), Distribution.delta((0, 0, 0))),
        }
        for name, (D, B) in cases.items():
            for _ in range(3):
                X = tuple(self.rng.uniform(-3.0, 3.0) for _ in range(D.rank))
                with self.subTest(kind=name, X=X):
                    product = fourier_pair(D, X) * fourier_pair(B, X)
                    self.assertLessEqual(abs(fourier_pair(convolve(D, B), X) - product), 1e-10)



class TestLaurentSeries(unittest.TestCase):
    def setUp(self):
        self.phi = TestFunction.gaussian([0])

    def test_zero_layers_are_dropped(self):
        S = LaurentDistSeries.build(1, 1, {(0, 0): Distribution.delta(0), (1, 0): Distribution.zero(1)}, 3)
        self.assertTrue(S.is_layer_zero(1))
        self.assertEqual(S.first_nonzero_below(1), None)

    def test_periodic_coefficients(self):
        S = LaurentDistSeries.build(1, 0, {(0, 0): Distribution.delta(0), (0, 1): Distribution.delta(1)},
                                    0, period=2)
        self.assertEqual(S.coefficient(0, 4), Distribution.delta(0))
        self.assertEqual(S.coefficient(0, 7), Distribution.delta(1))

    def test_germ_operator_layers(self):
        op = to_diff_op(germ_taylor("x_over_sin(2)", 2))
        S = apply_diff_op(op, LaurentDistSeries.single(Distribution.delta(0), 1, 2), 2)
        self.assertTrue(S.is_layer_zero(1))
        self.assertEqual(S.first_nonzero_below(1), -1)
        # layer 2 is -(1/6) delta'', which pairs to -(1/6) phi''(0) = 1/3
        self.assertAlmostEqual(pair(S.coefficient(2, 5), self.phi), 1 / 3)
        k = 10
        self.assertAlmostEqual(series_pair(S, self.phi, 2, k), k + 1 / (3 * k))
        self.assertAlmostEqual(truncated_pair(S, self.phi, k, 0), k)
        self.assertEqual(truncated_pair(S, self.phi, k, 2), 0)

    def test_operator_order_is_checked(self):
        op = to_diff_op(germ_taylor("x_over_sin(2)", 2))
        with self.assertRaises(OperatorOrderError):
            apply_diff_op(op, LaurentDistSeries.single(Distribution.delta(0), 1, 4), 3)


if __name__ == "__main__":
    unittest.main()

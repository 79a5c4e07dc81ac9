import unittest

import numpy as np

from src.data_models import ActionSpec, Chart, CotangentPoint, Location, SpherePoint
from src.ellipticity import pole_symbol
from src.errors import (
    ActionMismatchError,
    InverseResidualError,
    NotInvertibleError,
    SupportExceededError,
    WindowTooSmallError,
)
from src.symbols import (
    CosphereFunction,
    CrossedSymbol,
    cp_adjoint,
    cp_inverse,
    cp_mul,
    e_component_form,
    inverse_residual,
    pullback,
    trajectory_matrix,
    unitarized_matrix,
)

GOLDEN = (np.sqrt(5) - 1) / 2


def random_function(rng, bandwidth, scale=1.0):
    coeffs = rng.normal(size=(2, 2 * bandwidth + 1)) + 1j * rng.normal(size=(2, 2 * bandwidth + 1))
    return CosphereFunction(scale * coeffs)


def random_symbol(rng, action, support=(-1, 0, 1), bandwidth=2):
    return CrossedSymbol(action, {g: random_function(rng, bandwidth) for g in support})


class TestCosphereFunction(unittest.TestCase):
    """测试余球面函数的傅里叶表示。"""

    def test_from_callables_recovers_coefficients(self):
        f = CosphereFunction.from_callables(lambda t: 1 + 0.5 * np.exp(2j * t), lambda t: np.cos(t))
        self.assertAlmostEqual(f.coefficient(0, 0), 1.0)
        self.assertAlmostEqual(f.coefficient(2, 0), 0.5)
        self.assertAlmostEqual(f.coefficient(1, 1), 0.5)
        self.assertAlmostEqual(f.coefficient(-1, 1), 0.5)
        self.assertEqual(f.bandwidth, 2)

    def test_product_matches_pointwise(self):
        """测试卷积乘积与逐点乘积一致。"""
        rng = np.random.default_rng(1)
        a, b = random_function(rng, 3), random_function(rng, 2)
        t = np.linspace(0, 2 * np.pi, 17)
        for c in (0, 1):
            np.testing.assert_allclose((a * b).evaluate(t, c), a.evaluate(t, c) * b.evaluate(t, c), atol=1e-12)

    def test_rotated_and_derivative(self):
        f = CosphereFunction.fourier_mode(3, 2.0, -1.0)
        np.testing.assert_allclose(f.rotated(0.4).evaluate(1.0, 0), 2.0 * np.exp(3j * 0.6))
        np.testing.assert_allclose(f.derivative().evaluate(1.0, 1), -3j * np.exp(3j))

    def test_reciprocal(self):
        f = CosphereFunction.from_components([0.2, 1.0, 0.3])
        t = np.linspace(0, 2 * np.pi, 11)
        np.testing.assert_allclose(f.reciprocal().evaluate(t, 0) * f.evaluate(t, 0), 1.0, atol=1e-12)

    def test_odd_length_required(self):
        with self.assertRaises(ValueError):
            CosphereFunction(np.zeros((2, 4)))


class TestCrossedProduct(unittest.TestCase):
    """测试交叉积代数的乘法、伴随与逆。"""

    def setUp(self):
        self.rng = np.random.default_rng(20240901)
        self.rotation = ActionSpec.rotation(GOLDEN)

    def test_associativity(self):
        """测试交叉积乘法满足结合律。"""
        for action in (self.rotation, ActionSpec.cyclic(3)):
            a, b, c = (random_symbol(self.rng, action) for _ in range(3))
            lhs = cp_mul(cp_mul(a, b), c)
            rhs = cp_mul(a, cp_mul(b, c))
            self.assertLess((lhs - rhs).norm(), 1e-11 * max(1.0, lhs.norm()))

    def test_leibniz_rule(self):
        """测试 d(ab) = (da) b + a (db)。"""
        a, b = random_symbol(self.rng, self.rotation), random_symbol(self.rng, self.rotation)
        lhs = cp_mul(a, b).derivative()
        rhs = cp_mul(a.derivative(), b) + cp_mul(a, b.derivative())
        self.assertLess((lhs - rhs).norm(), 1e-9 * max(1.0, lhs.norm()))

    def test_adjoint_is_antimultiplicative(self):
        a, b = random_symbol(self.rng, self.rotation), random_symbol(self.rng, self.rotation)
        lhs = cp_adjoint(cp_mul(a, b))
        rhs = cp_mul(cp_adjoint(b), cp_adjoint(a))
        self.assertLess((lhs - rhs).norm(), 1e-11 * max(1.0, lhs.norm()))
        self.assertLess((cp_adjoint(cp_adjoint(a)) - a).norm(), 1e-12)

    def test_pullback_composes(self):
        f = random_function(self.rng, 3)
        lhs = pullback(self.rotation, 2, pullback(self.rotation, 3, f))
        np.testing.assert_allclose(lhs.coefficients, pullback(self.rotation, 5, f).coefficients, atol=1e-12)

    def test_mismatched_actions(self):
        a = CrossedSymbol.identity(self.rotation)
        b = CrossedSymbol.identity(ActionSpec.cyclic(2))
        with self.assertRaises(ActionMismatchError):
            cp_mul(a, b)

    def test_inverse_of_shift_perturbation(self):
        """测试 1 + 0.5 T 的逆是几何级数, 且左右残差都很小。"""
        sym = CrossedSymbol(self.rotation, {0: CosphereFunction.constant(1.0), 1: CosphereFunction.constant(0.5)})
        inv = cp_inverse(sym)
        left, right = inverse_residual(sym, inv)
        self.assertLess(max(left, right), 1e-10)
        self.assertAlmostEqual(inv.term(0).coefficient(0, 0), 1.0, places=9)
        self.assertAlmostEqual(inv.term(3).coefficient(0, 1), -0.125, places=9)

    def test_inverse_residual_is_two_sided(self):
        """测试逆符号记录的左右残差都在容差的 10 倍以内, 且与重新计算的一致。"""
        sym = CrossedSymbol(
            self.rotation,
            {
                -1: CosphereFunction.constant(0.1, 0.05),
                0: CosphereFunction.constant(1.0) + CosphereFunction.fourier_mode(1, 0.1, -0.1),
                1: CosphereFunction.fourier_mode(-1, 0.3, 0.2),
            },
        )
        tol = 1e-10
        inv = cp_inverse(sym, tol=tol)
        left, right = inv.residual
        self.assertLessEqual(left, 10 * tol)
        self.assertLessEqual(right, 10 * tol)
        recomputed = inverse_residual(sym, inv)
        self.assertAlmostEqual(recomputed[0], left, delta=1e-15)
        self.assertAlmostEqual(recomputed[1], right, delta=1e-15)

    def test_inverse_cyclic(self):
        action = ActionSpec.cyclic(4)
        sym = CrossedSymbol(action, {0: CosphereFunction.constant(2.0), 1: CosphereFunction.fourier_mode(1, 0.5)})
        inv = cp_inverse(sym)
        self.assertLess(max(inverse_residual(sym, inv)), 1e-10)

    def test_inverse_fails_on_non_elliptic(self):
        """测试 1 + T 在交叉积中不可逆。"""
        sym = CrossedSymbol(self.rotation, {0: CosphereFunction.constant(1.0), 1: CosphereFunction.constant(1.0)})
        with self.assertRaises((NotInvertibleError, SupportExceededError)):
            cp_inverse(sym)

    def test_e_component_form_checks_residual(self):
        sym = CrossedSymbol.single(self.rotation, 0, CosphereFunction.fourier_mode(1))
        with self.assertRaises(InverseResidualError):
            e_component_form(sym, CrossedSymbol.identity(self.rotation))
        form = e_component_form(sym, cp_inverse(sym))
        self.assertAlmostEqual(form.coefficient(0, 0), 1j)


class TestTrajectoryMatrix(unittest.TestCase):
    """测试轨迹符号矩阵。"""

    def setUp(self):
        self.rng = np.random.default_rng(7)
        self.rotation = ActionSpec.rotation(GOLDEN)

    def test_isometric_symbol_independent_of_s(self):
        """测试等距作用下单位化的轨迹矩阵与 s 无关。"""
        sym = random_symbol(self.rng, self.rotation)
        p = CotangentPoint(0.9, (1.0,))
        reference = unitarized_matrix(trajectory_matrix(sym, p, 0.0, 16))
        for s in (0.5, 1.0):
            np.testing.assert_allclose(unitarized_matrix(trajectory_matrix(sym, p, s, 16)), reference, atol=1e-12)

    def test_product_restricts_to_trajectories(self):
        """测试乘积的轨迹矩阵在内部行上等于轨迹矩阵的乘积。"""
        a = random_symbol(self.rng, self.rotation, support=(-1, 0, 2))
        b = random_symbol(self.rng, self.rotation, support=(0, 1))
        p = CotangentPoint(2.3, (-1.0,))
        N = 12
        product = trajectory_matrix(cp_mul(a, b), p, 0.0, N).entries
        composed = trajectory_matrix(a, p, 0.0, N).entries @ trajectory_matrix(b, p, 0.0, N).entries
        r = a.radius
        size = 2 * N + 1
        np.testing.assert_allclose(product[r : size - r], composed[r : size - r], atol=1e-12)

    def test_window_too_small(self):
        sym = CrossedSymbol.single(self.rotation, 3, CosphereFunction.constant(1.0))
        with self.assertRaises(WindowTooSmallError):
            trajectory_matrix(sym, CotangentPoint(0.0, (1.0,)), 0.0, 2)

    def test_cyclic_trajectory_is_circulant_shape(self):
        action = ActionSpec.cyclic(3)
        sym = CrossedSymbol(action, {0: CosphereFunction.constant(1.0), 1: CosphereFunction.constant(0.25)})
        tm = trajectory_matrix(sym, CotangentPoint(0.4, (1.0,)), 0.0, 5)
        expected = np.eye(3) + 0.25 * np.roll(np.eye(3), 1, axis=1)
        np.testing.assert_allclose(tm.entries, expected)

    def test_pole_entries_follow_pole_radius(self):
        """测试两极处单位化轨迹矩阵沿第 h 条对角线恒等于 c_h r^h, r 为极点符号的半径。"""
        action = ActionSpec.dilation(0.5, 1)
        sym = CrossedSymbol(
            action,
            {
                -1: CosphereFunction.constant(0.25, 0.1),
                0: CosphereFunction.constant(1.0),
                1: CosphereFunction.fourier_mode(1, 0.5, 0.3),
            },
        )
        # (坐标卡, 极点, xi 的符号) -> 余球面分量; 无穷极点卡的方向与角度相反
        cases = [
            (Chart.ZERO, Location.POLE_ZERO, 1.0, 0),
            (Chart.ZERO, Location.POLE_ZERO, -1.0, 1),
            (Chart.INFINITY, Location.POLE_INFINITY, 1.0, 1),
            (Chart.INFINITY, Location.POLE_INFINITY, -1.0, 0),
        ]
        for s in (0.0, 0.7, -0.4):
            for chart, pole, sign, component in cases:
                p = CotangentPoint(SpherePoint.pole(chart), (sign,))
                matrix = unitarized_matrix(trajectory_matrix(sym, p, s, 6))
                symbol = pole_symbol(sym, s, pole)
                expected = np.zeros_like(matrix)
                for h, c in symbol.coefficients[component].items():
                    np.testing.assert_allclose(
                        np.diagonal(matrix, h), c * symbol.radius**h, rtol=1e-12, atol=1e-12
                    )
                    expected += np.diag(np.full(matrix.shape[0] - abs(h), c * symbol.radius**h), h)
                np.testing.assert_allclose(matrix, expected, atol=1e-12)

    def test_dilation_weights(self):
        """测试伸缩作用的输入输出权重来自不同的 Sobolev 阶。"""
        action = ActionSpec.dilation(0.5, 1)
        terms = {0: CosphereFunction.constant(1.0), 1: CosphereFunction.constant(0.5)}
        sym = CrossedSymbol(action, terms, order_m=1.0)
        p = CotangentPoint(SpherePoint.pole(Chart.ZERO), (1.0,))
        tm = trajectory_matrix(sym, p, 0.5, 4)
        # 0 极点: mu_s(g) = alpha^{g(1-2s)}
        np.testing.assert_allclose(tm.weight_in, np.ones(9), atol=1e-12)
        np.testing.assert_allclose(tm.weight_out, 0.5 ** (tm.window * 2.0), rtol=1e-12)


if __name__ == "__main__":
    unittest.main()

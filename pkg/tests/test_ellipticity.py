import unittest

import numpy as np

from src.data_models import ActionSpec, Location, Verdict
from src.ellipticity import (
    check_elliptic,
    check_elliptic_dilation,
    check_elliptic_isometric,
    elliptic_s_interval,
    matrix_symbol,
    pole_radius,
    pole_symbol,
    sweep_s,
)
from src.errors import NotCyclicError, UnsupportedActionError
from src.symbols import CosphereFunction, CrossedSymbol, cp_mul

GOLDEN = (np.sqrt(5) - 1) / 2


def random_function(rng):
    return CosphereFunction(rng.normal(size=(2, 5)) + 1j * rng.normal(size=(2, 5)))


def shift_symbol(action, c, order_m=0.0):
    """1 + c T_1."""
    return CrossedSymbol(action, {0: CosphereFunction.constant(1.0), 1: CosphereFunction.constant(c)}, order_m)


class TestIsometricEllipticity(unittest.TestCase):
    """测试等距作用下的椭圆性判定。"""

    def setUp(self):
        self.rotation = ActionSpec.rotation(GOLDEN)

    def test_identity_is_elliptic(self):
        report = check_elliptic(CrossedSymbol.identity(self.rotation))
        self.assertIs(report.verdict, Verdict.ELLIPTIC)
        self.assertEqual(report.method, "pointwise")

    def test_vanishing_function_symbol(self):
        """测试在圆周上有零点的函数符号不是椭圆的。"""
        sym = CrossedSymbol.single(self.rotation, 0, CosphereFunction.from_components([0.5, 1.0, 0.5]))
        report = check_elliptic(sym)
        self.assertIs(report.verdict, Verdict.NOT_ELLIPTIC)

    def test_small_shift_perturbation(self):
        """测试 1 + 0.5 T 通过轨迹截断判定为椭圆, 最小奇异值不低于 0.5。"""
        report = check_elliptic_isometric(shift_symbol(self.rotation, 0.5), N_list=(16, 32, 64), seed=3)
        self.assertIs(report.verdict, Verdict.ELLIPTIC)
        self.assertEqual(report.method, "trajectory-truncation")
        self.assertGreaterEqual(min(report.evidence["min_singular_values"]), 0.5 - 1e-12)

    def test_critical_shift_is_not_certified(self):
        """测试 1 + T 的截断最小奇异值趋于零, 不会被判为椭圆。"""
        report = check_elliptic_isometric(shift_symbol(self.rotation, 1.0), N_list=(16, 32, 64, 128), seed=3)
        self.assertIsNot(report.verdict, Verdict.ELLIPTIC)

    def test_seed_reproducible(self):
        sym = shift_symbol(self.rotation, 0.3)
        first = check_elliptic_isometric(sym, N_list=(8, 16), seed=11)
        second = check_elliptic_isometric(sym, N_list=(8, 16), seed=11)
        self.assertEqual(first.evidence, second.evidence)

    def test_scaling_invariance(self):
        """测试把符号乘以非零常数 c 不改变判定, 最小奇异值按 |c| 缩放。"""
        sym = shift_symbol(self.rotation, 0.5)
        reference = check_elliptic_isometric(sym, N_list=(16, 32, 64), seed=3)
        for c in (3.0, -0.25j, 2.0 - 1.0j):
            report = check_elliptic_isometric(sym.scaled(c), N_list=(16, 32, 64), seed=3)
            self.assertIs(report.verdict, reference.verdict)
            np.testing.assert_allclose(
                report.evidence["min_singular_values"],
                abs(c) * np.asarray(reference.evidence["min_singular_values"]),
                rtol=1e-10,
            )
        # 1 + e^{ix} 在 x = pi 处为零
        vanishing = CosphereFunction.fourier_mode(1, 1.0) + CosphereFunction.constant(1.0)
        for bad in (shift_symbol(ActionSpec.cyclic(2), 1.0), CrossedSymbol.single(self.rotation, 0, vanishing)):
            self.assertIs(check_elliptic(bad.scaled(4.0)).verdict, Verdict.NOT_ELLIPTIC)

    def test_empty_symbol(self):
        report = check_elliptic(CrossedSymbol(self.rotation, {}))
        self.assertIs(report.verdict, Verdict.NOT_ELLIPTIC)


class TestMatrixSymbol(unittest.TestCase):
    """测试有限循环群的矩阵符号。"""

    def test_multiplicative(self):
        """测试矩阵符号对交叉积乘法是乘性的。"""
        rng = np.random.default_rng(5)
        t = np.linspace(0, 2 * np.pi, 23)
        for k in (2, 4):
            action = ActionSpec.cyclic(k)
            a, b = (CrossedSymbol(action, {g: random_function(rng) for g in range(k)}) for _ in range(2))
            for c in (0, 1):
                lhs = matrix_symbol(cp_mul(a, b)).evaluate(t, c)
                rhs = matrix_symbol(a).evaluate(t, c) @ matrix_symbol(b).evaluate(t, c)
                np.testing.assert_allclose(lhs, rhs, atol=1e-12 * np.max(np.abs(rhs)))

    def test_cyclic_ellipticity(self):
        action = ActionSpec.cyclic(2)
        self.assertIs(check_elliptic(shift_symbol(action, 0.5)).verdict, Verdict.ELLIPTIC)
        # det [[1, 1], [1, 1]] = 0
        self.assertIs(check_elliptic(shift_symbol(action, 1.0)).verdict, Verdict.NOT_ELLIPTIC)

    def test_requires_cyclic(self):
        with self.assertRaises(NotCyclicError):
            matrix_symbol(CrossedSymbol.identity(ActionSpec.rotation(GOLDEN)))


class TestDilationEllipticity(unittest.TestCase):
    """测试伸缩作用下椭圆性的 s 区间。"""

    def setUp(self):
        self.action = ActionSpec.dilation(0.5, 1)
        self.sym = shift_symbol(self.action, 0.5)

    def test_pole_radius(self):
        self.assertAlmostEqual(pole_radius(0.5, 1, 0.0, Location.POLE_ZERO), np.sqrt(2))
        self.assertAlmostEqual(pole_radius(0.5, 1, 0.0, Location.POLE_INFINITY), 1 / np.sqrt(2))
        with self.assertRaises(ValueError):
            pole_radius(0.5, 1, 0.0, Location.INTERIOR)

    def test_pole_symbol_winding(self):
        """测试极点符号 1 + w/2 的零点 -2 与半径比较给出的环绕数。"""
        zero = pole_symbol(self.sym, -1.0, Location.POLE_ZERO)
        self.assertAlmostEqual(zero.radius, 2 ** 1.5)
        self.assertEqual(zero.winding(0), 1)
        self.assertEqual(pole_symbol(self.sym, 0.0, Location.POLE_ZERO).winding(0), 0)
        # s = -1/2 时零点恰好落在圆周上
        self.assertIsNone(pole_symbol(self.sym, -0.5, Location.POLE_ZERO).winding(0))

    def test_interval_endpoints(self):
        """测试 1 + T/2 (alpha = 1/2) 的椭圆区间为 (-0.5, 1.5)。"""
        report = elliptic_s_interval(self.sym, (-2.0, 2.0), grid=64, tol=1e-6)
        self.assertIs(report.verdict, Verdict.ELLIPTIC)
        self.assertTrue(report.heuristic)
        low, high = report.interval
        self.assertLess(abs(low + 0.5), 1e-6)
        self.assertLess(abs(high - 1.5), 1e-6)

    def test_no_interval(self):
        """测试 1 + T 的极点零点落在两个半径之间, 任何 s 都不满足极点条件。"""
        report = elliptic_s_interval(shift_symbol(self.action, 1.0), (-2.0, 2.0), grid=32)
        self.assertIs(report.verdict, Verdict.NOT_ELLIPTIC)

    def test_single_order(self):
        self.assertIs(check_elliptic_dilation(self.sym, 0.5).verdict, Verdict.ELLIPTIC)
        self.assertIs(check_elliptic_dilation(self.sym, 1.8).verdict, Verdict.NOT_ELLIPTIC)
        self.assertIs(check_elliptic(self.sym, -1.0).verdict, Verdict.NOT_ELLIPTIC)

    def test_higher_dimensional_sphere(self):
        """测试 S^2 上常系数 1 + T/2 的椭圆区间为 (0, 2)。"""
        sym = shift_symbol(ActionSpec.dilation(0.5, 2), 0.5)
        report = elliptic_s_interval(sym, (-2.0, 3.0), grid=40, tol=1e-6)
        self.assertIs(report.verdict, Verdict.ELLIPTIC)
        low, high = report.interval
        self.assertLess(abs(low - 0.0), 1e-6)
        self.assertLess(abs(high - 2.0), 1e-6)

    def test_scaling_invariance(self):
        """测试伸缩作用下椭圆区间与单点判定对常数倍不变。"""
        reference = elliptic_s_interval(self.sym, (-2.0, 2.0), grid=32, tol=1e-6)
        for c in (3.0, -0.5j):
            scaled = self.sym.scaled(c)
            report = elliptic_s_interval(scaled, (-2.0, 2.0), grid=32, tol=1e-6)
            self.assertIs(report.verdict, Verdict.ELLIPTIC)
            np.testing.assert_allclose(report.interval, reference.interval, atol=1e-12)
            for s, verdict in ((0.5, Verdict.ELLIPTIC), (1.8, Verdict.NOT_ELLIPTIC), (-1.0, Verdict.NOT_ELLIPTIC)):
                self.assertIs(check_elliptic(scaled, s).verdict, verdict)

    def test_lone_shift_has_empty_interval(self):
        """测试单独的平移 T: 两极条件处处成立, 但内部截断矩阵处处退化, 区间为空。"""
        sym = CrossedSymbol.single(self.action, 1, CosphereFunction.constant(1.0))
        self.assertEqual(pole_symbol(sym, 0.0, Location.POLE_ZERO).winding(0), 1)
        self.assertEqual(pole_symbol(sym, 0.0, Location.POLE_INFINITY).winding(0), 1)
        report = elliptic_s_interval(sym, (-2.0, 2.0), grid=16)
        self.assertIs(report.verdict, Verdict.NOT_ELLIPTIC)
        self.assertEqual(report.failing_threshold, "interior")
        self.assertIsNone(report.interval)

    def test_sweep_rows(self):
        rows = sweep_s(self.sym, [0.0, 1.0])
        self.assertEqual([row["s"] for row in rows], [0.0, 1.0])
        self.assertEqual(rows[0]["winding_zero"], [0, 0])
        self.assertGreater(rows[0]["interior_min_sv"], 0.0)

    def test_interval_requires_dilation(self):
        with self.assertRaises(UnsupportedActionError):
            elliptic_s_interval(CrossedSymbol.identity(ActionSpec.rotation(GOLDEN)))


if __name__ == "__main__":
    unittest.main()

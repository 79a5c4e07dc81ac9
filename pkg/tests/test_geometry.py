import unittest

import numpy as np

from src.data_models import ActionSpec, Chart, CotangentPoint, Location, SpherePoint, WeightSpec
from src.errors import UnsupportedActionError
from src.geometry import (
    angle_of,
    apply_action,
    codifferential,
    density_closed_form,
    density_mu,
    dilate_angle,
    dilate_angle_derivative,
    jacobian,
    locate,
    sphere_point_from_angle,
    to_chart,
)


class TestActions(unittest.TestCase):
    """测试群作用与坐标卡切换。"""

    def test_rotation_composes(self):
        """测试旋转作用满足 g1(g2(x)) = (g1 g2)(x)。"""
        action = ActionSpec.rotation((np.sqrt(5) - 1) / 2)
        x = 1.3
        lhs = apply_action(action, 2, apply_action(action, 3, x))
        rhs = apply_action(action, 5, x)
        self.assertAlmostEqual(lhs, rhs, places=12)

    def test_cyclic_wraps(self):
        """测试 Z/k 作用 k 次回到原点。"""
        action = ActionSpec.cyclic(4)
        self.assertAlmostEqual(apply_action(action, 4, 0.7), 0.7, places=12)

    def test_dilation_fixes_poles(self):
        """测试伸缩作用固定两个极点。"""
        action = ActionSpec.dilation(0.5, 2)
        for chart in (Chart.ZERO, Chart.INFINITY):
            pole = SpherePoint.pole(chart, 2)
            self.assertEqual(apply_action(action, 7, pole), pole)

    def test_dilation_switches_chart(self):
        """测试坐标范数超过 1 时切换到另一张坐标卡。"""
        action = ActionSpec.dilation(0.5, 1)
        # x = 1 在 alpha^{-1} 作用下变为 2, 应存为 x' = 1/2
        image = apply_action(action, -1, SpherePoint(Chart.ZERO, (1.0,)))
        self.assertIs(image.chart, Chart.INFINITY)
        self.assertAlmostEqual(image.coords[0], 0.5)
        np.testing.assert_allclose(to_chart(image, Chart.ZERO), [2.0])
        self.assertIs(locate(image), Location.INTERIOR)

    def test_angle_roundtrip_and_dilation(self):
        """测试角度参数化与伸缩在角度坐标下的写法一致。"""
        for t in (0.3, 2.0, 3.5, 5.9):
            self.assertAlmostEqual(angle_of(sphere_point_from_angle(t)), t, places=12)
        action = ActionSpec.dilation(0.5, 1)
        t = 1.1
        moved = apply_action(action, 2, sphere_point_from_angle(t))
        self.assertAlmostEqual(angle_of(moved), float(dilate_angle(0.5, 2, t)), places=12)

    def test_dilate_angle_derivative(self):
        """测试角度伸缩的导数与差商一致, 且在两极分别为 alpha^g 与 alpha^-g。"""
        t = np.linspace(0.1, 6.0, 7)
        h = 1e-6
        numeric = (dilate_angle(0.5, 1, t + h) - dilate_angle(0.5, 1, t - h)) / (2 * h)
        np.testing.assert_allclose(dilate_angle_derivative(0.5, 1, t), numeric, rtol=1e-6)
        self.assertAlmostEqual(float(dilate_angle_derivative(0.5, 1, 0.0)), 0.5)
        self.assertAlmostEqual(float(dilate_angle_derivative(0.5, 1, np.pi)), 2.0)

    def test_codifferential_normalizes(self):
        action = ActionSpec.dilation(1 / 3, 2)
        p = CotangentPoint(SpherePoint(Chart.ZERO, (0.4, 0.2)), (0.0, 1.0))
        moved = codifferential(action, 3, p)
        self.assertAlmostEqual(float(np.linalg.norm(moved.covector)), 1.0)


class TestSphereCocycle(unittest.TestCase):
    """测试 S^2 上伸缩作用的 Jacobian 链式法则与余切提升的复合。"""

    def setUp(self):
        self.action = ActionSpec.dilation(1 / 3, 2)
        self.points = [
            SpherePoint(Chart.ZERO, (0.4, 0.2)),
            SpherePoint(Chart.ZERO, (-0.7, 0.5)),
            SpherePoint(Chart.INFINITY, (0.1, -0.6)),
        ]
        self.pairs = [(1, 2), (-1, 3), (2, -3), (-2, -1)]

    def assertSamePoint(self, a, b):
        np.testing.assert_allclose(to_chart(a, Chart.ZERO), to_chart(b, Chart.ZERO), rtol=1e-12, atol=1e-12)

    def test_inverse_returns_point(self):
        """测试 g^{-1}(g(x)) = x, 包括跨坐标卡的情形。"""
        for x in self.points:
            for g in (1, -1, 2, -3):
                moved = apply_action(self.action, g, x)
                self.assertSamePoint(apply_action(self.action, -g, moved), x)

    def test_jacobian_cocycle(self):
        """测试 J(g1 g2, x) = J(g1, g2 x) J(g2, x)。"""
        for x in self.points:
            for g1, g2 in self.pairs:
                inner, middle = jacobian(self.action, g2, x)
                outer, target = jacobian(self.action, g1, middle)
                whole, whole_target = jacobian(self.action, g1 + g2, x)
                self.assertIs(whole_target.chart, target.chart)
                np.testing.assert_allclose(whole, outer @ inner, rtol=1e-10, atol=1e-12)

    def test_codifferential_composes(self):
        """测试余切提升满足 (g1 g2)^* = g1^* g2^*, 归一化与否都成立。"""
        for x in self.points:
            p = CotangentPoint(x, (0.6, -0.8))
            for g1, g2 in self.pairs:
                for normalize in (False, True):
                    step = codifferential(self.action, g2, p, normalize)
                    two_steps = codifferential(self.action, g1, step, normalize)
                    direct = codifferential(self.action, g1 + g2, p, normalize)
                    self.assertSamePoint(two_steps.x, direct.x)
                    np.testing.assert_allclose(two_steps.covector, direct.covector, rtol=1e-10, atol=1e-12)

    def test_codifferential_matches_finite_differences(self):
        """测试余切提升等于差商 Jacobian 的逆转置作用在余向量上。"""
        h = 1e-6
        xi = np.array([0.6, -0.8])
        for x in self.points:
            for g in (1, -1, 2):
                target = apply_action(self.action, g, x)
                columns = []
                for i in range(2):
                    offset = np.zeros(2)
                    offset[i] = h
                    images = [
                        to_chart(apply_action(self.action, g, SpherePoint(x.chart, tuple(x.vector + d))), target.chart)
                        for d in (offset, -offset)
                    ]
                    columns.append((images[0] - images[1]) / (2 * h))
                numeric = np.column_stack(columns)
                moved = codifferential(self.action, g, CotangentPoint(x, tuple(xi)), normalize=False)
                np.testing.assert_allclose(moved.covector, np.linalg.solve(numeric.T, xi), rtol=1e-6, atol=1e-8)


class TestDensity(unittest.TestCase):
    """测试轨迹密度与闭式表达式在极点和赤道上的一致性。"""

    def _cases(self):
        for alpha in (0.5, 1 / 3):
            for dim_m in (1, 2):
                for s in (0.0, 0.5, 1.0):
                    yield alpha, dim_m, s

    def test_density_at_poles(self):
        """测试两个极点处的密度等于 alpha^{+-g(m-2s)}。"""
        for alpha, dim_m, s in self._cases():
            action = ActionSpec.dilation(alpha, dim_m)
            xi = (1.0,) + (0.0,) * (dim_m - 1)
            for chart, location in ((Chart.ZERO, Location.POLE_ZERO), (Chart.INFINITY, Location.POLE_INFINITY)):
                w = WeightSpec(CotangentPoint(SpherePoint.pole(chart, dim_m), xi), s)
                for g in range(-6, 7):
                    expected = density_closed_form(w, alpha, dim_m, location, g)
                    self.assertLess(abs(density_mu(w, action, g) / expected - 1.0), 1e-8)

    def test_density_on_equator(self):
        """测试赤道 |x| = 1 上的密度等于 alpha^{|g|(m-2s)}。"""
        for alpha, dim_m, s in self._cases():
            action = ActionSpec.dilation(alpha, dim_m)
            point = SpherePoint(Chart.ZERO, (1.0,) + (0.0,) * (dim_m - 1))
            w = WeightSpec(CotangentPoint(point, (1.0,) + (0.0,) * (dim_m - 1)), s)
            for g in range(-6, 7):
                expected = density_closed_form(w, alpha, dim_m, Location.INTERIOR, g)
                self.assertLess(abs(density_mu(w, action, g) / expected - 1.0), 1e-8)

    def test_density_off_equator_is_equivalent(self):
        """测试赤道外密度与闭式表达式之比随 g 变化, 但夹在 1 与 |x|^{-2(m-2s)} 之间。"""
        for alpha, dim_m, s in self._cases():
            action = ActionSpec.dilation(alpha, dim_m)
            coords = (0.4,) if dim_m == 1 else (0.24, 0.32)
            xi = (1.0,) if dim_m == 1 else (0.6, -0.8)
            bound = 0.4 ** (-2 * (dim_m - 2 * s))
            low, high = min(1.0, bound), max(1.0, bound)
            for chart in (Chart.ZERO, Chart.INFINITY):
                w = WeightSpec(CotangentPoint(SpherePoint(chart, coords), xi), s)
                ratios = np.array(
                    [
                        density_mu(w, action, g) / density_closed_form(w, alpha, dim_m, Location.INTERIOR, g)
                        for g in range(-12, 13)
                    ]
                )
                self.assertTrue(np.all(ratios >= low * (1 - 1e-9)), (alpha, dim_m, s, chart))
                self.assertTrue(np.all(ratios <= high * (1 + 1e-9)), (alpha, dim_m, s, chart))
                if bound != 1.0:
                    self.assertGreater(ratios.max() / ratios.min(), 1.5)

    def test_rotation_density_is_trivial(self):
        action = ActionSpec.rotation(0.3, irrational=False)
        w = WeightSpec(CotangentPoint(0.5, (1.0,)), 0.7)
        self.assertEqual(density_mu(w, action, 5), 1.0)

    def test_density_rejects_torus_action(self):
        w = WeightSpec(CotangentPoint((0.0, 0.0), (1.0, 0.0)))
        with self.assertRaises(UnsupportedActionError):
            density_mu(w, ActionSpec.circle_on_torus(), 1)


if __name__ == "__main__":
    unittest.main()

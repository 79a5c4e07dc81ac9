"""Base manifolds, group actions, codifferentials and trajectory densities.

Circle points are angles in [0, 2*pi). The sphere S^m is covered by the two
stereographic charts x (around pole 0) and x' = x/|x|^2 (around pole
infinity); a point is stored in the chart where its coordinate norm is <= 1.
For m = 1 the sphere is also parametrized by the angle t with x = tan(t/2).
"""
import logging
from typing import Tuple

import numpy as np

from .data_models import (
    ActionKind,
    ActionSpec,
    Chart,
    CotangentPoint,
    Location,
    Point,
    SpherePoint,
    WeightSpec,
)
from .errors import ChartOverflowError, UnsupportedActionError

log = logging.getLogger(__name__)

TWO_PI = 2 * np.pi
# Largest |log scale| a chart coordinate survives in double precision.
_MAX_LOG_SCALE = 700.0


def _wrap_angle(t: float) -> float:
    return float(np.mod(t, TWO_PI))


def _log_scale(action: ActionSpec, g: int, chart: Chart) -> float:
    """log of the factor by which g scales the coordinate of ``chart``."""
    log_alpha = np.log(action.alpha)
    return g * log_alpha if chart is Chart.ZERO else -g * log_alpha


def _other(chart: Chart) -> Chart:
    return Chart.INFINITY if chart is Chart.ZERO else Chart.ZERO


def _dilate(action: ActionSpec, g: int, point: SpherePoint) -> SpherePoint:
    if point.is_pole:
        return point
    log_s = _log_scale(action, g, point.chart)
    if abs(log_s) > _MAX_LOG_SCALE:
        raise ChartOverflowError(f"dilation by alpha^{g} leaves the representable chart range")
    y = point.vector
    scaled = y * np.exp(log_s)
    norm = float(np.linalg.norm(scaled))
    if norm <= 1.0:
        return SpherePoint(point.chart, tuple(float(c) for c in scaled))
    # 切换到另一张坐标卡: x' = x / |x|^2
    switched = scaled / norm**2
    if not np.any(switched):
        raise ChartOverflowError(f"dilation by alpha^{g} collapses a regular point onto a pole")
    return SpherePoint(_other(point.chart), tuple(float(c) for c in switched))


def to_chart(point: SpherePoint, chart: Chart) -> np.ndarray:
    """Coordinates of ``point`` in ``chart`` (may exceed norm 1, inf at the opposite pole)."""
    y = point.vector
    if point.chart is chart:
        return y
    norm2 = float(y @ y)
    if norm2 == 0.0:
        return np.full_like(y, np.inf)
    return y / norm2


def locate(point: Point) -> Location:
    if isinstance(point, SpherePoint) and point.is_pole:
        return Location.POLE_ZERO if point.chart is Chart.ZERO else Location.POLE_INFINITY
    return Location.INTERIOR


def sphere_point_from_angle(t: float) -> SpherePoint:
    """Point of S^1 with angle t, where x = tan(t/2)."""
    t = float(np.mod(t + np.pi, TWO_PI) - np.pi)
    if abs(t) <= np.pi / 2:
        return SpherePoint(Chart.ZERO, (float(np.tan(t / 2)),))
    return SpherePoint(Chart.INFINITY, (float(1.0 / np.tan(t / 2)),))


def angle_of(point: SpherePoint) -> float:
    """Inverse of ``sphere_point_from_angle`` for m = 1."""
    c = point.coords[0]
    if point.chart is Chart.ZERO:
        return _wrap_angle(2 * np.arctan(c))
    return _wrap_angle(2 * np.arctan2(1.0, c))


def angle_orientation(chart: Chart) -> int:
    """Sign of d(chart coordinate)/dt on S^1: x = tan(t/2) increases, x' = cot(t/2) decreases."""
    return 1 if chart is Chart.ZERO else -1


def dilate_angle(alpha: float, g: int, t: np.ndarray) -> np.ndarray:
    """Dilation x -> alpha^g x of S^1 written in the angle coordinate (vectorized)."""
    half = np.mod(np.asarray(t, dtype=float) + np.pi, TWO_PI) - np.pi
    half = half / 2
    scale = float(alpha) ** g
    return np.mod(2 * np.arctan2(scale * np.sin(half), np.cos(half)), TWO_PI)


def dilate_angle_derivative(alpha: float, g: int, t: np.ndarray) -> np.ndarray:
    """d/dt of ``dilate_angle``."""
    half = np.asarray(t, dtype=float) / 2
    scale = float(alpha) ** g
    return scale / (np.cos(half) ** 2 + scale**2 * np.sin(half) ** 2)


def apply_action(action: ActionSpec, g, x: Point) -> Point:
    """Image g(x) of a point under the group element g."""
    if action.kind in (ActionKind.ROTATION, ActionKind.CYCLIC):
        turns = float(x) / TWO_PI + action.reduce(int(g)) * action.step_turns
        return TWO_PI * float(np.mod(turns, 1.0))
    if action.kind is ActionKind.TORUS_CIRCLE:
        x1, x2 = x  # type: ignore[misc]
        return (float(x1), _wrap_angle(x2 + float(g)))
    if not isinstance(x, SpherePoint):
        raise ValueError("dilation acts on SpherePoint values")
    return _dilate(action, int(g), x)


def jacobian(action: ActionSpec, g: int, x: SpherePoint) -> Tuple[np.ndarray, SpherePoint]:
    """Jacobian of the dilation g at x, in the chart pair (chart of x, chart of g(x))."""
    target = _dilate(action, g, x)
    log_s = _log_scale(action, g, x.chart)
    dim = len(x.coords)
    if target.chart is x.chart:
        return np.exp(log_s) * np.eye(dim), target
    # F(y) = s*y / |s*y|^2 = y / (s |y|^2)
    y = x.vector
    norm2 = float(y @ y)
    jac = np.exp(-log_s) * (norm2 * np.eye(dim) - 2 * np.outer(y, y)) / norm2**2
    return jac, target


def codifferential(action: ActionSpec, g, p: CotangentPoint, normalize: bool = True) -> CotangentPoint:
    """Apply dg^{-T} to the covector of p and move the base point to g(x)."""
    if action.kind is not ActionKind.DILATION:
        return CotangentPoint(apply_action(action, g, p.x), p.xi)
    jac, target = jacobian(action, int(g), p.x)
    xi = np.linalg.solve(jac.T, p.covector)
    if normalize:
        xi = xi / np.linalg.norm(xi)
    return CotangentPoint(target, tuple(float(c) for c in xi))


def log_density_mu(w: WeightSpec, action: ActionSpec, g: int) -> float:
    """log of the trajectory density; see ``density_mu``."""
    if action.kind is ActionKind.ROTATION:
        return 0.0
    if action.kind is not ActionKind.DILATION:
        raise UnsupportedActionError(f"density is defined for rotations and dilations, not {action.kind.name}")
    jac, _ = jacobian(action, int(g), w.point.x)
    xi = w.point.covector / np.linalg.norm(w.point.covector)
    _, log_det = np.linalg.slogdet(jac)
    cov = np.linalg.solve(jac.T, xi)
    return float(log_det + 2 * w.s * np.log(np.linalg.norm(cov)))


def density_mu(w: WeightSpec, action: ActionSpec, g: int) -> float:
    """Trajectory density |det J| * |J^{-T} xi|^{2s}.

    J is the Jacobian of g at the base point, taken in the chart pair fixed by
    the stored charts of x and g(x). At the poles and on the equator |x| = 1
    the value equals ``density_closed_form`` exactly. Elsewhere the ratio to
    the closed form depends on g but stays between 1 and |x|^{-2(m-2s)}, x being
    the stored coordinate, so the two densities are equivalent.
    """
    return float(np.exp(log_density_mu(w, action, g)))


def density_closed_form(w: WeightSpec, alpha: float, dim_m: int, location: Location, g: int) -> float:
    """Closed-form dilation density on S^m, by location of the base point."""
    exponent = dim_m - 2 * w.s
    if location is Location.INTERIOR:
        return float(alpha ** (abs(g) * exponent))
    if location is Location.POLE_ZERO:
        return float(alpha ** (g * exponent))
    return float(alpha ** (-g * exponent))

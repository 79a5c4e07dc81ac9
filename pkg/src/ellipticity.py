"""Ellipticity tests for G-operators.

Isometric actions are checked through truncated trajectory matrices, finite
cyclic actions through the pointwise determinant of the matrix symbol, and
dilations of S^m through the two pole conditions plus an interior truncation
heuristic.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import svdvals

from .constants import DRIFT_TOLERANCE, ELLIPTIC_FLOOR, ELLIPTIC_TRUNCATIONS
from .data_models import (
    ActionKind,
    Chart,
    CotangentPoint,
    EllipticityReport,
    Location,
    SpherePoint,
    Verdict,
)
from .errors import NotCyclicError, UnsupportedActionError
from .symbols import COMPONENTS, CosphereFunction, CrossedSymbol, trajectory_matrix, unitarized_matrix

log = logging.getLogger(__name__)

POINTWISE_GRID = 4096
INTERIOR_TRUNCATION = 64
INTERIOR_SAMPLES = 5
ROOT_TOLERANCE = 1e-12


def _min_singular_value(matrix: np.ndarray) -> float:
    return float(np.min(svdvals(matrix)))


def _is_e_supported(sym: CrossedSymbol) -> bool:
    return set(sym.terms) <= {0}


# --- isometric actions ----------------------------------------------------


def check_elliptic_isometric(
    sym: CrossedSymbol,
    x_samples: int = 4,
    N_list: Sequence[int] = ELLIPTIC_TRUNCATIONS,
    floor: float = ELLIPTIC_FLOOR,
    s: float = 0.0,
    seed: int = 0,
) -> EllipticityReport:
    """Invertibility of the crossed-product symbol of an isometric action.

    The result does not depend on s; the argument is accepted so callers can
    treat all actions alike.
    """
    action = sym.action
    if action.kind is ActionKind.CYCLIC:
        return _check_cyclic(sym, floor)
    if action.kind is not ActionKind.ROTATION:
        raise UnsupportedActionError(f"{action.kind.name} is not an isometric action of Z on the circle")

    if not sym.terms:
        return EllipticityReport(Verdict.NOT_ELLIPTIC, "pointwise", {"min_abs": 0.0})

    if _is_e_supported(sym):
        # 纯函数符号: 可逆当且仅当处处非零
        minima = [float(np.min(np.abs(sym.term(0).samples(POINTWISE_GRID)[c]))) for c in range(COMPONENTS)]
        evidence = {"min_abs": minima, "grid": POINTWISE_GRID}
        if min(minima) < floor:
            return EllipticityReport(Verdict.NOT_ELLIPTIC, "pointwise", evidence, failing_threshold="floor")
        return EllipticityReport(Verdict.ELLIPTIC, "pointwise", evidence)

    rng = np.random.default_rng(seed)
    xs = [0.0] + [float(v) for v in rng.uniform(0.0, 2 * np.pi, size=max(0, x_samples - 1))]
    minima = []
    for N in N_list:
        worst = np.inf
        for x in xs:
            for sign in (1.0, -1.0):
                tm = trajectory_matrix(sym, CotangentPoint(x, (sign,)), s, N)
                worst = min(worst, _min_singular_value(unitarized_matrix(tm)))
        log.info("trajectory truncation N=%d: min singular value %.6e", N, worst)
        minima.append(float(worst))

    evidence = {"N_list": list(N_list), "min_singular_values": minima, "x_samples": xs, "floor": floor}
    if minima[-1] < floor:
        return EllipticityReport(Verdict.INCONCLUSIVE, "trajectory-truncation", evidence, failing_threshold="floor")
    if len(minima) >= 2 and minima[-2] - minima[-1] > DRIFT_TOLERANCE * minima[-2]:
        log.warning("minimal singular value still drifting: %.3e -> %.3e", minima[-2], minima[-1])
        return EllipticityReport(Verdict.INCONCLUSIVE, "trajectory-truncation", evidence, failing_threshold="drift")
    return EllipticityReport(Verdict.ELLIPTIC, "trajectory-truncation", evidence)


# --- finite cyclic groups -------------------------------------------------


@dataclass
class MatrixSymbol:
    """Regular-representation symbol of a Z/k-operator.

    ``entries[i][j]`` is sigma(D_{(j-i) mod k}) pulled back along the i-th
    rotation, so that the finite system acts on the quotient circle.
    """
    k: int
    entries: List[List[CosphereFunction]]

    def evaluate(self, t: np.ndarray, component: int = 0) -> np.ndarray:
        """Matrices at the angles t, shape (len(t), k, k)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty((len(t), self.k, self.k), dtype=complex)
        for i in range(self.k):
            for j in range(self.k):
                out[:, i, j] = self.entries[i][j].evaluate(t, component)
        return out

    def determinant(self, t: np.ndarray, component: int = 0) -> np.ndarray:
        return np.linalg.det(self.evaluate(t, component))

    @property
    def bandwidth(self) -> int:
        return max(f.bandwidth for row in self.entries for f in row)


def matrix_symbol(sym: CrossedSymbol) -> MatrixSymbol:
    action = sym.action
    if action.kind is not ActionKind.CYCLIC:
        raise NotCyclicError(f"matrix symbols need a cyclic rotation action, got {action.kind.name}")
    k = action.k
    entries = [[sym.term((j - i) % k).rotated(i * action.step_angle) for j in range(k)] for i in range(k)]
    return MatrixSymbol(k, entries)


def _check_cyclic(sym: CrossedSymbol, floor: float) -> EllipticityReport:
    msym = matrix_symbol(sym)
    t = 2 * np.pi * np.arange(POINTWISE_GRID) / POINTWISE_GRID
    minima = [float(np.min(np.abs(msym.determinant(t, c)))) for c in range(COMPONENTS)]
    evidence = {"min_abs_det": minima, "grid": POINTWISE_GRID, "k": msym.k}
    if min(minima) < floor:
        return EllipticityReport(Verdict.NOT_ELLIPTIC, "matrix-symbol", evidence, failing_threshold="floor")
    return EllipticityReport(Verdict.ELLIPTIC, "matrix-symbol", evidence)


# --- dilations ------------------------------------------------------------


def pole_radius(alpha: float, dim_m: int, s: float, pole: Location) -> float:
    """Radius of the circle on which the pole symbol must not vanish."""
    if pole is Location.POLE_ZERO:
        return float(alpha ** (-dim_m / 2 + s))
    if pole is Location.POLE_INFINITY:
        return float(alpha ** (dim_m / 2 - s))
    raise ValueError("pole_radius is defined at the poles only")


@dataclass
class PoleSymbol:
    """Laurent polynomial p(xi, w) = sum_k sigma(D_k)(pole, xi) w^k and its radius."""
    pole: Location
    radius: float
    coefficients: List[Dict[int, complex]] = field(default_factory=list)

    def __call__(self, w, component: int = 0) -> np.ndarray:
        w = np.asarray(w, dtype=complex)
        total = np.zeros_like(w)
        for h, c in self.coefficients[component].items():
            total = total + c * w**h
        return total

    def min_on_circle(self, component: int = 0, nodes: int = 1024) -> float:
        w = self.radius * np.exp(2j * np.pi * np.arange(nodes) / nodes)
        return float(np.min(np.abs(self(w, component))))

    def winding(self, component: int = 0) -> Optional[int]:
        """Winding number of p around |w| = radius, None when p vanishes on the circle."""
        coeffs = {h: c for h, c in self.coefficients[component].items() if c != 0}
        if not coeffs:
            return None
        low, high = min(coeffs), max(coeffs)
        poly = [coeffs.get(h, 0.0) for h in range(high, low - 1, -1)]
        roots = np.abs(np.roots(poly)) if high > low else np.array([])
        if np.any(np.abs(roots - self.radius) <= ROOT_TOLERANCE * max(1.0, self.radius)):
            return None
        return low + int(np.count_nonzero(roots < self.radius))


def pole_symbol(sym: CrossedSymbol, s: float, pole: Location = Location.POLE_ZERO) -> PoleSymbol:
    action = sym.action
    if action.kind is not ActionKind.DILATION:
        raise UnsupportedActionError("pole symbols are defined for dilation actions")
    if pole is Location.INTERIOR:
        raise ValueError("pole must be POLE_ZERO or POLE_INFINITY")
    # 角度坐标下 0 极点在 t=0, 无穷极点在 t=pi
    t = 0.0 if pole is Location.POLE_ZERO else np.pi
    coefficients = []
    for c in range(COMPONENTS):
        if action.dim_m == 1:
            coefficients.append({h: complex(f.evaluate(t, c)) for h, f in sym.terms.items()})
        else:
            coefficients.append({h: f.coefficient(0, c) for h, f in sym.terms.items()})
    return PoleSymbol(pole, pole_radius(action.alpha, action.dim_m, s, pole), coefficients)


def _pole_state(sym: CrossedSymbol, s: float) -> Tuple[Tuple[Optional[int], Optional[int]], ...]:
    zero = pole_symbol(sym, s, Location.POLE_ZERO)
    infinity = pole_symbol(sym, s, Location.POLE_INFINITY)
    return tuple((zero.winding(c), infinity.winding(c)) for c in range(COMPONENTS))


def _poles_elliptic(state: Tuple[Tuple[Optional[int], Optional[int]], ...]) -> bool:
    return all(w0 is not None and w0 == winf for w0, winf in state)


def _interior_min_sv(sym: CrossedSymbol, s: float, N: int) -> float:
    dim_m = sym.action.dim_m
    point = SpherePoint(Chart.ZERO, (1.0,) + (0.0,) * (dim_m - 1))
    worst = np.inf
    for sign in (1.0, -1.0):
        xi = (sign,) + (0.0,) * (dim_m - 1)
        tm = trajectory_matrix(sym, CotangentPoint(point, xi), s, N)
        worst = min(worst, _min_singular_value(unitarized_matrix(tm)))
        if dim_m > 1:
            # 常系数时两个余切方向给出同一矩阵
            break
    return float(worst)


def _refine(sym: CrossedSymbol, lo: float, hi: float, tol: float) -> float:
    """Bisect the switch of the pole state between lo and hi."""
    left = _pole_state(sym, lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _pole_state(sym, mid) == left:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def elliptic_s_interval(
    sym: CrossedSymbol,
    s_range: Tuple[float, float] = (-2.0, 2.0),
    grid: int = 64,
    tol: float = 1e-6,
    floor: float = ELLIPTIC_FLOOR,
    interior_N: int = INTERIOR_TRUNCATION,
) -> EllipticityReport:
    """Open interval of Sobolev orders s on which a dilation G-operator is elliptic."""
    action = sym.action
    if action.kind is not ActionKind.DILATION:
        raise UnsupportedActionError("the s-interval is computed for dilation actions only")
    lo, hi = float(s_range[0]), float(s_range[1])
    if not hi > lo or grid < 2 or tol <= 0:
        raise ValueError("need s_range with lo < hi, grid >= 2 and tol > 0")

    step = (hi - lo) / grid
    centres = lo + step * (np.arange(grid) + 0.5)
    states = [_pole_state(sym, float(s)) for s in centres]
    good = [_poles_elliptic(state) for state in states]

    runs: List[Tuple[int, int]] = []
    start = None
    for i, ok in enumerate(good + [False]):
        if ok and start is None:
            start = i
        elif not ok and start is not None:
            runs.append((start, i - 1))
            start = None

    evidence: Dict[str, object] = {
        "s_range": [lo, hi],
        "grid": grid,
        "pole_states": [[float(s), [list(pair) for pair in state]] for s, state in zip(centres, states)],
    }
    if not runs:
        log.info("pole conditions fail on the whole s-range")
        return EllipticityReport(Verdict.NOT_ELLIPTIC, "pole-winding", evidence, failing_threshold="pole-condition")
    if len(runs) > 1:
        log.warning("pole conditions hold on %d disjoint s-ranges", len(runs))
        evidence["runs"] = [[float(centres[a]), float(centres[b])] for a, b in runs]
        return EllipticityReport(
            Verdict.INCONCLUSIVE, "pole-winding", evidence, heuristic=True, failing_threshold="interval"
        )

    first, last = runs[0]
    left = lo if first == 0 else _refine(sym, float(centres[first - 1]), float(centres[first]), tol)
    right = hi if last == grid - 1 else _refine(sym, float(centres[last]), float(centres[last + 1]), tol)

    picks = sorted(set(np.linspace(first, last, min(INTERIOR_SAMPLES, last - first + 1)).round().astype(int)))
    interior = [[float(centres[i]), _interior_min_sv(sym, float(centres[i]), interior_N)] for i in picks]
    evidence.update({"endpoints": [left, right], "interior_N": interior_N, "interior_min_sv": interior})
    failures = [s for s, sv in interior if sv < floor]
    if len(failures) == len(interior):
        log.info("interior truncation fails at every sampled s")
        return EllipticityReport(
            Verdict.NOT_ELLIPTIC, "pole-winding+interior", evidence, heuristic=True, failing_threshold="interior"
        )
    if failures:
        return EllipticityReport(
            Verdict.INCONCLUSIVE, "pole-winding+interior", evidence, heuristic=True, failing_threshold="interior"
        )
    log.info("elliptic s-interval (%.9f, %.9f)", left, right)
    return EllipticityReport(
        Verdict.ELLIPTIC, "pole-winding+interior", evidence, s=(left, right), interval=(left, right), heuristic=True
    )


def check_elliptic_dilation(
    sym: CrossedSymbol, s: float, floor: float = ELLIPTIC_FLOOR, interior_N: int = INTERIOR_TRUNCATION
) -> EllipticityReport:
    """Ellipticity of a dilation G-operator at one Sobolev order."""
    state = _pole_state(sym, s)
    evidence: Dict[str, object] = {"pole_state": [list(pair) for pair in state]}
    if not _poles_elliptic(state):
        return EllipticityReport(
            Verdict.NOT_ELLIPTIC, "pole-winding", evidence, s=s, failing_threshold="pole-condition"
        )
    sv = _interior_min_sv(sym, s, interior_N)
    evidence.update({"interior_N": interior_N, "interior_min_sv": sv})
    if sv < floor:
        return EllipticityReport(
            Verdict.INCONCLUSIVE, "pole-winding+interior", evidence, s=s, heuristic=True, failing_threshold="interior"
        )
    return EllipticityReport(Verdict.ELLIPTIC, "pole-winding+interior", evidence, s=s, heuristic=True)


def check_elliptic(sym: CrossedSymbol, s: float = 0.0, **kwargs) -> EllipticityReport:
    """Dispatch on the action kind."""
    if sym.action.kind is ActionKind.DILATION:
        return check_elliptic_dilation(sym, s, **{k: v for k, v in kwargs.items() if k in ("floor", "interior_N")})
    return check_elliptic_isometric(sym, s=s, **kwargs)


def sweep_s(sym: CrossedSymbol, s_values: Sequence[float], interior_N: int = INTERIOR_TRUNCATION) -> List[dict]:
    """Pole minima, windings and interior singular values over a grid of s."""
    rows = []
    for s in s_values:
        zero = pole_symbol(sym, float(s), Location.POLE_ZERO)
        infinity = pole_symbol(sym, float(s), Location.POLE_INFINITY)
        rows.append(
            {
                "s": float(s),
                "pole_zero_min": [zero.min_on_circle(c) for c in range(COMPONENTS)],
                "pole_infinity_min": [infinity.min_on_circle(c) for c in range(COMPONENTS)],
                "winding_zero": [zero.winding(c) for c in range(COMPONENTS)],
                "winding_infinity": [infinity.winding(c) for c in range(COMPONENTS)],
                "interior_min_sv": _interior_min_sv(sym, float(s), interior_N),
            }
        )
    return rows

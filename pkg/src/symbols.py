"""Crossed-product symbols C(S*M) x| G and their trajectory representations.

A ``CosphereFunction`` holds one periodic function per component of S*S^1
(index 0 is xi = +1, index 1 is xi = -1) as Fourier coefficients
c_k, k = -B..B. A ``CrossedSymbol`` is a finitely supported map from group
elements to cosphere functions with the twisted product

    (ab)(g) = sum_{kl = g} a(k) * (k^{-1})^* b(l),

where (k^{-1})^* f = f o k^{-1}.
"""
import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Iterable, List, Optional, Tuple

import numpy as np
from scipy.linalg import solve_banded

from .constants import INVERSE_MAX_SUPPORT, INVERSE_TOLERANCE, SYMBOL_GRID
from .data_models import ActionKind, ActionSpec, CotangentPoint, ManifoldKind, ManifoldSpec, SpherePoint, WeightSpec
from .errors import (
    ActionMismatchError,
    InverseResidualError,
    NotInvertibleError,
    SupportExceededError,
    UnsupportedActionError,
    WindowTooSmallError,
)
from .geometry import angle_of, angle_orientation, dilate_angle, log_density_mu

log = logging.getLogger(__name__)

COMPONENTS = 2


def _pad(coefficients: np.ndarray, bandwidth: int) -> np.ndarray:
    current = (coefficients.shape[1] - 1) // 2
    if current >= bandwidth:
        return coefficients
    extra = bandwidth - current
    return np.pad(coefficients, ((0, 0), (extra, extra)))


def _sample_count(bandwidth: int, minimum: int = 64) -> int:
    n = minimum
    while n < 4 * bandwidth + 2:
        n *= 2
    return n


@dataclass(frozen=True, eq=False)
class CosphereFunction:
    """Band-limited function on the two components of S*S^1."""
    coefficients: np.ndarray

    def __post_init__(self) -> None:
        coefficients = np.asarray(self.coefficients, dtype=complex)
        if coefficients.ndim != 2 or coefficients.shape[0] != COMPONENTS or coefficients.shape[1] % 2 == 0:
            raise ValueError("coefficients must have shape (2, 2B+1)")
        object.__setattr__(self, "coefficients", coefficients)

    # --- constructors -------------------------------------------------

    @classmethod
    def constant(cls, value: complex, minus: Optional[complex] = None) -> "CosphereFunction":
        minus = value if minus is None else minus
        return cls(np.array([[value], [minus]], dtype=complex))

    @classmethod
    def zero(cls) -> "CosphereFunction":
        return cls.constant(0.0)

    @classmethod
    def fourier_mode(cls, k: int, plus: complex = 1.0, minus: Optional[complex] = None) -> "CosphereFunction":
        """plus * e^{ikx} on xi = +1 and minus * e^{ikx} on xi = -1."""
        minus = plus if minus is None else minus
        coefficients = np.zeros((COMPONENTS, 2 * abs(k) + 1), dtype=complex)
        coefficients[0, abs(k) + k] = plus
        coefficients[1, abs(k) + k] = minus
        return cls(coefficients)

    @classmethod
    def from_components(cls, plus: Iterable[complex], minus: Optional[Iterable[complex]] = None) -> "CosphereFunction":
        """Build from centred coefficient lists [c_{-B}, ..., c_B] per component."""
        plus_arr = np.asarray(list(plus), dtype=complex)
        minus_arr = plus_arr if minus is None else np.asarray(list(minus), dtype=complex)
        bandwidth = max(len(plus_arr), len(minus_arr)) // 2
        rows = []
        for arr in (plus_arr, minus_arr):
            if len(arr) % 2 == 0:
                raise ValueError("coefficient lists must have odd length 2B+1")
            rows.append(_pad(arr[None, :], bandwidth)[0])
        return cls(np.vstack(rows))

    @classmethod
    def from_samples(cls, samples: np.ndarray, tol: float = 1e-15) -> "CosphereFunction":
        """Fourier coefficients of uniform samples t_j = 2 pi j / n (shape (2, n))."""
        samples = np.asarray(samples, dtype=complex)
        n = samples.shape[1]
        spectrum = np.fft.fft(samples, axis=1) / n
        bandwidth = n // 2
        coefficients = np.zeros((COMPONENTS, 2 * bandwidth + 1), dtype=complex)
        ks = np.arange(-bandwidth, bandwidth + 1)
        coefficients[:, :] = spectrum[:, ks % n]
        if n % 2 == 0:
            # Nyquist 模式平均分到 +-n/2
            coefficients[:, 0] *= 0.5
            coefficients[:, -1] *= 0.5
        return cls(coefficients).truncated(tol)

    @classmethod
    def from_callables(
        cls,
        plus: Callable[[np.ndarray], np.ndarray],
        minus: Optional[Callable[[np.ndarray], np.ndarray]] = None,
        grid_size: int = 256,
        tol: float = 1e-15,
    ) -> "CosphereFunction":
        t = ManifoldSpec(ManifoldKind.CIRCLE, grid_size).grid()
        minus = plus if minus is None else minus
        samples = np.vstack([np.broadcast_to(plus(t), t.shape), np.broadcast_to(minus(t), t.shape)])
        return cls.from_samples(samples, tol)

    # --- structure ----------------------------------------------------

    @property
    def bandwidth(self) -> int:
        return (self.coefficients.shape[1] - 1) // 2

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.bandwidth, self.bandwidth + 1)

    def coefficient(self, k: int, component: int = 0) -> complex:
        if abs(k) > self.bandwidth:
            return 0.0
        return complex(self.coefficients[component, k + self.bandwidth])

    def is_constant(self, tol: float = 1e-14) -> bool:
        mask = self.modes != 0
        return bool(np.all(np.abs(self.coefficients[:, mask]) <= tol))

    def truncated(self, tol: float = 1e-15) -> "CosphereFunction":
        """Drop outer modes whose coefficients are below tol relative to the largest one."""
        scale = float(np.max(np.abs(self.coefficients))) if self.coefficients.size else 0.0
        if scale == 0.0:
            return CosphereFunction.zero()
        significant = np.nonzero(np.max(np.abs(self.coefficients), axis=0) > tol * scale)[0]
        reach = int(np.max(np.abs(significant - self.bandwidth)))
        lo, hi = self.bandwidth - reach, self.bandwidth + reach + 1
        return CosphereFunction(self.coefficients[:, lo:hi].copy())

    # --- evaluation ---------------------------------------------------

    def samples(self, n: Optional[int] = None) -> np.ndarray:
        """Values at t_j = 2 pi j / n, shape (2, n)."""
        n = _sample_count(self.bandwidth) if n is None else n
        if n < 2 * self.bandwidth + 1:
            raise ValueError(f"{n} samples cannot resolve bandwidth {self.bandwidth}")
        spectrum = np.zeros((COMPONENTS, n), dtype=complex)
        spectrum[:, self.modes % n] = self.coefficients
        return np.fft.ifft(spectrum, axis=1) * n

    def evaluate(self, t, component: int = 0) -> np.ndarray:
        """Direct Fourier evaluation at arbitrary angles."""
        t = np.asarray(t, dtype=float)
        phases = np.exp(1j * np.multiply.outer(t, self.modes))
        return phases @ self.coefficients[component]

    def sup_norm(self, n: Optional[int] = None) -> float:
        return float(np.max(np.abs(self.samples(n))))

    def mean(self) -> np.ndarray:
        return self.coefficients[:, self.bandwidth].copy()

    # --- algebra ------------------------------------------------------

    def __add__(self, other: "CosphereFunction") -> "CosphereFunction":
        bandwidth = max(self.bandwidth, other.bandwidth)
        return CosphereFunction(_pad(self.coefficients, bandwidth) + _pad(other.coefficients, bandwidth))

    def __neg__(self) -> "CosphereFunction":
        return CosphereFunction(-self.coefficients)

    def __sub__(self, other: "CosphereFunction") -> "CosphereFunction":
        return self + (-other)

    def __mul__(self, other) -> "CosphereFunction":
        if not isinstance(other, CosphereFunction):
            return CosphereFunction(self.coefficients * complex(other))
        rows = [np.convolve(self.coefficients[c], other.coefficients[c]) for c in range(COMPONENTS)]
        return CosphereFunction(np.vstack(rows))

    __rmul__ = __mul__

    def conj(self) -> "CosphereFunction":
        """Complex conjugate function: c_k -> conj(c_{-k})."""
        return CosphereFunction(np.conj(self.coefficients[:, ::-1]))

    def derivative(self) -> "CosphereFunction":
        return CosphereFunction(self.coefficients * (1j * self.modes)[None, :])

    def rotated(self, angle: float) -> "CosphereFunction":
        """x -> f(x - angle)."""
        return CosphereFunction(self.coefficients * np.exp(-1j * self.modes * angle)[None, :])

    def reciprocal(self, grid_size: int = SYMBOL_GRID, tol: float = 1e-15) -> "CosphereFunction":
        n = max(grid_size, _sample_count(self.bandwidth))
        return CosphereFunction.from_samples(1.0 / self.samples(n), tol)


def pullback(action: ActionSpec, k: int, f: CosphereFunction, grid_size: int = SYMBOL_GRID) -> CosphereFunction:
    """(k^{-1})^* f = f o k^{-1} on the cosphere bundle."""
    k = action.reduce(k)
    if k == 0:
        return f
    if action.kind in (ActionKind.ROTATION, ActionKind.CYCLIC):
        return f.rotated(k * action.step_angle)
    if action.kind is ActionKind.DILATION:
        if action.dim_m != 1:
            if not f.is_constant():
                raise UnsupportedActionError("on S^m with m > 1 only constant coefficients are supported")
            return f
        # 伸缩保持圆周定向, 余切分量不变
        n = max(grid_size, _sample_count(f.bandwidth))
        t = ManifoldSpec(ManifoldKind.CIRCLE, n).grid()
        moved = dilate_angle(action.alpha, -k, t)
        samples = np.vstack([f.evaluate(moved, c) for c in range(COMPONENTS)])
        return CosphereFunction.from_samples(samples)
    raise UnsupportedActionError(f"no crossed-product symbols for {action.kind.name}")


@dataclass(eq=False)
class CrossedSymbol:
    """Finitely supported element of C(S*M) x| G."""
    action: ActionSpec
    terms: Dict[int, CosphereFunction] = field(default_factory=dict)
    order_m: float = 0.0
    residual: Optional[Tuple[float, float]] = None

    def __post_init__(self) -> None:
        merged: Dict[int, CosphereFunction] = {}
        for g, f in self.terms.items():
            key = self.action.reduce(int(g))
            merged[key] = merged[key] + f if key in merged else f
        self.terms = {g: f for g, f in sorted(merged.items()) if np.any(np.abs(f.coefficients) > 0.0)}

    @classmethod
    def identity(cls, action: ActionSpec, order_m: float = 0.0) -> "CrossedSymbol":
        return cls(action, {0: CosphereFunction.constant(1.0)}, order_m)

    @classmethod
    def single(cls, action: ActionSpec, g: int, f: CosphereFunction, order_m: float = 0.0) -> "CrossedSymbol":
        return cls(action, {g: f}, order_m)

    @property
    def support(self) -> List[int]:
        return list(self.terms)

    @property
    def radius(self) -> int:
        if not self.terms:
            return 0
        if self.action.kind is ActionKind.CYCLIC:
            return self.action.k - 1
        return max(abs(g) for g in self.terms)

    @property
    def bandwidth(self) -> int:
        return max((f.bandwidth for f in self.terms.values()), default=0)

    def term(self, g: int) -> CosphereFunction:
        return self.terms.get(self.action.reduce(g), CosphereFunction.zero())

    def is_identity(self, tol: float = 0.0) -> bool:
        return (self - CrossedSymbol.identity(self.action)).norm() <= tol

    def _combine(self, other: "CrossedSymbol", sign: float) -> "CrossedSymbol":
        if other.action != self.action:
            raise ActionMismatchError("symbols belong to different actions")
        terms = dict(self.terms)
        for g, f in other.terms.items():
            terms[g] = terms[g] + sign * f if g in terms else sign * f
        return CrossedSymbol(self.action, terms, self.order_m)

    def __add__(self, other: "CrossedSymbol") -> "CrossedSymbol":
        return self._combine(other, 1.0)

    def __sub__(self, other: "CrossedSymbol") -> "CrossedSymbol":
        return self._combine(other, -1.0)

    def scaled(self, c: complex) -> "CrossedSymbol":
        return CrossedSymbol(self.action, {g: f * c for g, f in self.terms.items()}, self.order_m)

    def norm(self) -> float:
        """Max over the support of the sup-norm over the cosphere samples."""
        return max((f.sup_norm() for f in self.terms.values()), default=0.0)

    def derivative(self) -> "CrossedSymbol":
        """Termwise d/dx, (d omega)(g) = d(omega(g))."""
        return CrossedSymbol(self.action, {g: f.derivative() for g, f in self.terms.items()}, self.order_m)

    def truncated(self, tol: float) -> "CrossedSymbol":
        return replace(self, terms={g: f.truncated(tol) for g, f in self.terms.items()})


def cp_mul(a: CrossedSymbol, b: CrossedSymbol, tol: float = 0.0) -> CrossedSymbol:
    """Twisted convolution product of two crossed-product elements."""
    if a.action != b.action:
        raise ActionMismatchError("cannot multiply symbols of different actions")
    action = a.action
    terms: Dict[int, CosphereFunction] = {}
    for k, fa in a.terms.items():
        for l, fb in b.terms.items():
            g = action.compose(k, l)
            product = fa * pullback(action, k, fb)
            terms[g] = terms[g] + product if g in terms else product
    if tol > 0.0:
        terms = {g: f.truncated(tol) for g, f in terms.items()}
    return CrossedSymbol(action, terms, a.order_m + b.order_m)


def cp_adjoint(a: CrossedSymbol) -> CrossedSymbol:
    """Symbol of the formal adjoint: a*(h) = (h^{-1})^* conj(a(h^{-1}))."""
    action = a.action
    terms = {action.inverse(g): pullback(action, action.inverse(g), f.conj()) for g, f in a.terms.items()}
    return CrossedSymbol(action, terms, a.order_m)


def inverse_residual(a: CrossedSymbol, b: CrossedSymbol) -> Tuple[float, float]:
    """(||ab - 1||, ||ba - 1||) in the max-of-sup-norms metric."""
    one = CrossedSymbol.identity(a.action, a.order_m + b.order_m)
    return (cp_mul(a, b) - one).norm(), (cp_mul(b, a) - one).norm()


# --- orbit sampling -------------------------------------------------------


def _orbit_angles(action: ActionSpec, base: np.ndarray, window: np.ndarray) -> np.ndarray:
    """Angles of g^{-1}(t) for g in ``window`` (rows) and t in ``base`` (columns)."""
    if action.kind in (ActionKind.ROTATION, ActionKind.CYCLIC):
        return np.mod(base[None, :] - np.outer(window, np.full_like(base, action.step_angle)), 2 * np.pi)
    if action.kind is ActionKind.DILATION:
        return np.vstack([dilate_angle(action.alpha, -int(g), base) for g in window])
    raise UnsupportedActionError(f"no trajectories for {action.kind.name}")


def _orbit_values(sym: CrossedSymbol, base: np.ndarray, component: int, window: np.ndarray) -> Dict[int, np.ndarray]:
    """sigma(D_h)(g^{-1}(x), d g^{-1}(xi)) for every h in the support, shape (len(window), len(base))."""
    action = sym.action
    if action.kind is ActionKind.DILATION and action.dim_m != 1:
        values = {}
        for h, f in sym.terms.items():
            if not f.is_constant():
                raise UnsupportedActionError("on S^m with m > 1 only constant coefficients are supported")
            values[h] = np.full((len(window), len(base)), f.coefficient(0, component), dtype=complex)
        return values
    angles = _orbit_angles(action, base, window)
    return {h: f.evaluate(angles, component) for h, f in sym.terms.items()}


def _inverse_on_window(a: CrossedSymbol, radius: int, grid_size: int) -> CrossedSymbol:
    """Read b(h)(t) off row 0 of the inverse trajectory operator at every grid point t."""
    action = a.action
    t = ManifoldSpec(ManifoldKind.CIRCLE, grid_size).grid()
    if action.kind is ActionKind.CYCLIC:
        window = action.group_window(0)
        offsets = list(window)
        samples = {h: np.zeros((COMPONENTS, grid_size), dtype=complex) for h in offsets}
        for c in range(COMPONENTS):
            values = _orbit_values(a, t, c, window)
            k = action.k
            mats = np.zeros((grid_size, k, k), dtype=complex)
            for h, v in values.items():
                for i in range(k):
                    mats[:, i, (i + h) % k] += v[i]
            rhs = np.zeros((grid_size, k, 1), dtype=complex)
            rhs[:, 0, 0] = 1.0
            rows = np.linalg.solve(np.transpose(mats, (0, 2, 1)), rhs)[:, :, 0]
            for h in offsets:
                samples[h][c] = rows[:, h]
        return CrossedSymbol(action, {h: CosphereFunction.from_samples(v) for h, v in samples.items()}, -a.order_m)

    solve_radius = 2 * radius
    window = action.group_window(solve_radius)
    lower = max(0, max(a.support))
    upper = max(0, -min(a.support))
    samples = {h: np.zeros((COMPONENTS, grid_size), dtype=complex) for h in range(-radius, radius + 1)}
    rhs = np.zeros(len(window), dtype=complex)
    rhs[solve_radius] = 1.0
    for c in range(COMPONENTS):
        values = _orbit_values(a, t, c, window)
        for j in range(grid_size):
            # A^T banded: (A^T)[g+h, g] = sigma_h(g^{-1} t)
            banded = np.zeros((lower + upper + 1, len(window)), dtype=complex)
            for h, v in values.items():
                banded[upper + h, :] = v[:, j]
            row = solve_banded((lower, upper), banded, rhs)
            for h in samples:
                samples[h][c, j] = row[solve_radius + h]
    terms = {h: CosphereFunction.from_samples(v) for h, v in samples.items()}
    return CrossedSymbol(action, terms, -a.order_m)


def cp_inverse(
    a: CrossedSymbol,
    tol: float = INVERSE_TOLERANCE,
    max_support: int = INVERSE_MAX_SUPPORT,
    grid_size: int = SYMBOL_GRID,
) -> CrossedSymbol:
    """Inverse in the crossed product, certified by left and right residuals.

    The inverse is solved on growing support windows (4 * radius + 16, then
    doubling up to ``max_support``) by inverting the banded trajectory
    operator over each sample point of a uniform grid.
    """
    if not a.terms:
        raise NotInvertibleError("zero symbol is not invertible")
    if a.is_identity():
        inv = CrossedSymbol.identity(a.action, -a.order_m)
        inv.residual = (0.0, 0.0)
        return inv
    grid_size = max(grid_size, _sample_count(a.bandwidth))
    ManifoldSpec(ManifoldKind.CIRCLE, grid_size)

    if a.action.kind is ActionKind.CYCLIC:
        candidate_radii = [a.action.k - 1]
    else:
        radius = 4 * a.radius + 16
        candidate_radii = []
        while True:
            candidate_radii.append(min(radius, max_support))
            if radius >= max_support:
                break
            radius *= 2

    best: Optional[CrossedSymbol] = None
    best_residual = np.inf
    history: List[float] = []
    for radius in candidate_radii:
        with np.errstate(all="ignore"):
            b = _inverse_on_window(a, radius, grid_size)
        b = b.truncated(1e-15)
        left, right = inverse_residual(a, b)
        worst = max(left, right)
        history.append(worst)
        log.info("inverse on support radius %d: residuals %.3e / %.3e", radius, left, right)
        if worst < best_residual:
            best, best_residual = b, worst
            best.residual = (left, right)
        if worst <= tol:
            return b

    if len(history) >= 2 and np.isfinite(history[-1]) and history[-1] < 0.5 * history[-2]:
        raise SupportExceededError(
            f"residual still decreasing at support radius {candidate_radii[-1]}", residual=best_residual
        )
    raise NotInvertibleError(f"residual floor {best_residual:.3e} above tolerance {tol:.1e}", residual=best_residual)


# --- trajectory symbols ---------------------------------------------------


@dataclass
class TrajectoryMatrix:
    """Truncated trajectory symbol at one cotangent point.

    ``entries[i, j]`` is the coefficient mapping w(window[j]) into row
    window[i]; weights are stored as logarithms of the densities.
    """
    base: WeightSpec
    trunc_N: int
    window: np.ndarray
    entries: np.ndarray
    log_weight_in: np.ndarray
    log_weight_out: np.ndarray

    @property
    def weight_in(self) -> np.ndarray:
        return np.exp(self.log_weight_in)

    @property
    def weight_out(self) -> np.ndarray:
        return np.exp(self.log_weight_out)


def _base_angle_and_component(action: ActionSpec, p: CotangentPoint) -> Tuple[float, int]:
    if action.kind is ActionKind.DILATION:
        if action.dim_m != 1:
            return 0.0, 0
        point: SpherePoint = p.x
        sign = p.sign * angle_orientation(point.chart)
        return angle_of(point), 0 if sign > 0 else 1
    return float(p.x), 0 if p.sign > 0 else 1


def trajectory_matrix(sym: CrossedSymbol, p: CotangentPoint, s: float, N: int) -> TrajectoryMatrix:
    """Matrix of (sigma w)(g) = sum_h sigma(D_h)(g^{-1} x0, dg^{-1} xi) w(g h) on a group window."""
    action = sym.action
    if action.kind is not ActionKind.CYCLIC and N < sym.radius:
        raise WindowTooSmallError(f"window radius {N} is smaller than the symbol support radius {sym.radius}")
    window = action.group_window(N)
    size = len(window)
    t0, component = _base_angle_and_component(action, p)
    values = _orbit_values(sym, np.array([t0]), component, window)
    entries = np.zeros((size, size), dtype=complex)
    rows = np.arange(size)
    for h, v in values.items():
        if action.kind is ActionKind.CYCLIC:
            entries[rows, (rows + h) % size] += v[:, 0]
        else:
            cols = rows + h
            inside = (cols >= 0) & (cols < size)
            entries[rows[inside], cols[inside]] += v[inside, 0]

    weight_spec = WeightSpec(p, s, sym.order_m)
    if action.is_isometric:
        log_in = np.zeros(size)
        log_out = np.zeros(size)
    else:
        log_in = np.array([log_density_mu(weight_spec, action, int(g)) for g in window])
        out_spec = WeightSpec(p, s - sym.order_m, sym.order_m)
        log_out = np.array([log_density_mu(out_spec, action, int(g)) for g in window])
    return TrajectoryMatrix(weight_spec, N, window, entries, log_in, log_out)


def unitarized_matrix(tm: TrajectoryMatrix) -> np.ndarray:
    """Conjugate by square roots of the densities: mu_out(g)^{1/2} A(g, g') mu_in(g')^{-1/2}."""
    scale = np.exp(0.5 * (tm.log_weight_out[:, None] - tm.log_weight_in[None, :]))
    return tm.entries * scale


def e_component_form(
    sym: CrossedSymbol, sym_inv: CrossedSymbol, tol: float = 1e-8
) -> CosphereFunction:
    """Coefficient at the identity of the noncommutative 1-form sigma^{-1} d sigma."""
    left, right = inverse_residual(sym, sym_inv)
    if max(left, right) > tol:
        raise InverseResidualError(
            f"inverse residual {max(left, right):.3e} exceeds {tol:.1e}", residual=max(left, right)
        )
    action = sym.action
    d_sym = sym.derivative()
    form = CosphereFunction.zero()
    for k, f_inv in sym_inv.terms.items():
        partner = d_sym.terms.get(action.inverse(k))
        if partner is None:
            continue
        form = form + f_inv * pullback(action, k, partner)
    return form

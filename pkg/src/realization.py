"""Truncated Fourier realizations of G-operators and the analytic index.

An operator D = sum_g D_g T_g acts on Fourier modes e^{inx}, n = -N..N. The
coefficient operators are quantized as

    D_g = M_{a+} P_+ Lambda^m + M_{a-} P_- Lambda^m,

and every matrix is returned in the Sobolev-orthonormal frame: rows scaled by
(1+n^2)^{(s-m)/2}, columns by (1+n^2)^{-s/2}.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

import numpy as np
from scipy.linalg import svdvals

from .constants import DEFAULT_TRUNCATIONS, STABLE_RUN, SV_GAP_RATIO, SV_THRESHOLD
from .data_models import ActionKind, ActionSpec, IndexEntry, IndexReport
from .errors import BandwidthError, QuadratureError, UnsupportedActionError
from .geometry import dilate_angle, dilate_angle_derivative
from .symbols import CosphereFunction, CrossedSymbol, cp_adjoint

log = logging.getLogger(__name__)

QUADRATURE_TOLERANCE = 1e-8
_COLUMN_CHUNK = 64
# Extra output modes kept around dilated columns.
_DILATION_MARGIN = 16


def _modes(radius: int) -> np.ndarray:
    return np.arange(-radius, radius + 1)


def _sobolev_weight(radius: int, exponent: float) -> np.ndarray:
    n = _modes(radius).astype(float)
    return (1.0 + n**2) ** (exponent / 2)


@dataclass
class OperatorTerm:
    """One summand D_g T_g; ``smoothing`` is a kernel on centred modes -K..K added to D_g."""
    g: int
    coefficient: CosphereFunction
    smoothing: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        if self.smoothing is not None:
            kernel = np.asarray(self.smoothing, dtype=complex)
            if kernel.ndim != 2 or kernel.shape[0] != kernel.shape[1] or kernel.shape[0] % 2 == 0:
                raise ValueError("smoothing kernel must be a square matrix of odd size 2K+1")
            self.smoothing = kernel

    @property
    def smoothing_radius(self) -> int:
        return 0 if self.smoothing is None else (self.smoothing.shape[0] - 1) // 2


@dataclass
class GOperatorSpec:
    action: ActionSpec
    terms: List[OperatorTerm] = field(default_factory=list)
    order_m: float = 0.0
    s: float = 0.0
    zero_mode_component: int = 0

    def __post_init__(self) -> None:
        if self.zero_mode_component not in (0, 1):
            raise ValueError("zero_mode_component must be 0 (xi=+1) or 1 (xi=-1)")

    @classmethod
    def from_symbol(cls, sym: CrossedSymbol, s: float = 0.0, zero_mode_component: int = 0) -> "GOperatorSpec":
        terms = [OperatorTerm(g, f) for g, f in sym.terms.items()]
        return cls(sym.action, terms, sym.order_m, s, zero_mode_component)

    @classmethod
    def identity(cls, action: ActionSpec, s: float = 0.0) -> "GOperatorSpec":
        return cls.from_symbol(CrossedSymbol.identity(action), s)

    def symbol(self) -> CrossedSymbol:
        terms = {}
        for term in self.terms:
            g = self.action.reduce(term.g)
            terms[g] = terms[g] + term.coefficient if g in terms else term.coefficient
        return CrossedSymbol(self.action, terms, self.order_m)

    @property
    def bandwidth(self) -> int:
        return max((max(t.coefficient.bandwidth, t.smoothing_radius) for t in self.terms), default=0)

    def with_smoothing(self, kernel: np.ndarray) -> "GOperatorSpec":
        """Add a smoothing operator acting without shift."""
        return replace(self, terms=self.terms + [OperatorTerm(0, CosphereFunction.zero(), kernel)])

    def adjoint(self) -> "GOperatorSpec":
        """Formal adjoint sum_g T_{-g} D_g^* written again as sum_h D'_h T_h.

        For dilations the positive density factor of T_g^* is dropped; it does
        not change ellipticity or the index.
        """
        adj_sym = cp_adjoint(self.symbol())
        terms = [OperatorTerm(g, f) for g, f in adj_sym.terms.items()]
        for term in self.terms:
            if term.smoothing is None:
                continue
            kernel = term.smoothing.conj().T
            if term.g != 0:
                if not self.action.is_isometric:
                    raise ValueError("adjoints of shifted smoothing parts need an isometric action")
                # T_{-g} K^* = (T_{-g} K^* T_g) T_{-g}
                phase = np.exp(-1j * _modes(term.smoothing_radius) * self.action.step_angle * term.g)
                kernel = (kernel * phase[None, :]) / phase[:, None]
            terms.append(OperatorTerm(self.action.inverse(term.g), CosphereFunction.zero(), kernel))
        # 伴随把 H^{s-m} 映到 H^{-s}
        return GOperatorSpec(self.action, terms, self.order_m, self.order_m - self.s, self.zero_mode_component)


@dataclass
class TruncatedRealization:
    """Matrix of an operator between Sobolev-orthonormal mode windows -N..N."""
    trunc_N: int
    matrix: np.ndarray
    sobolev_s: float
    order_m: float = 0.0


# --- raw mode matrices ----------------------------------------------------


def _coefficient_modes(
    c: CosphereFunction, order_m: float, rows: int, cols: int, zero_mode_component: int
) -> np.ndarray:
    """Raw matrix of M_{a+} P_+ Lambda^m + M_{a-} P_- Lambda^m from mode window ``cols`` to ``rows``."""
    n = _modes(cols)
    plus = n > 0
    if zero_mode_component == 0:
        plus = n >= 0
    weight = (1.0 + n.astype(float) ** 2) ** (order_m / 2)
    out = np.zeros((2 * rows + 1, 2 * cols + 1), dtype=complex)
    col_idx = np.arange(2 * cols + 1)
    for k in c.modes:
        target = n + k
        inside = np.abs(target) <= rows
        values = np.where(plus, c.coefficient(int(k), 0), c.coefficient(int(k), 1)) * weight
        out[target[inside] + rows, col_idx[inside]] += values[inside]
    return out


def _embed_kernel(kernel: np.ndarray, rows: int, cols: int) -> np.ndarray:
    radius = (kernel.shape[0] - 1) // 2
    out = np.zeros((2 * rows + 1, 2 * cols + 1), dtype=complex)
    r, c = min(radius, rows), min(radius, cols)
    block = kernel[radius - r : radius + r + 1, radius - c : radius + c + 1]
    out[rows - r : rows + r + 1, cols - c : cols + c + 1] = block
    return out


def _quadrature_nodes(alpha: float, g: int, rows: int, cols: int) -> int:
    reach = max(rows, cols * math.ceil(alpha ** (-abs(g))))
    return 1 << int(math.ceil(math.log2(4 * (2 * reach + 1))))


def _dilation_shift_modes(action: ActionSpec, g: int, rows: int, cols: int, unitarized: bool) -> np.ndarray:
    """T[m, n] = (1/2pi) int e^{-imt} w(t) e^{in psi(t)} dt with psi = g^{-1} in the angle coordinate."""
    q = _quadrature_nodes(action.alpha, g, rows, cols)
    t = 2 * np.pi * np.arange(q) / q
    psi = dilate_angle(action.alpha, -g, t)
    weight = np.sqrt(dilate_angle_derivative(action.alpha, -g, t)) if unitarized else np.ones_like(t)
    n = _modes(cols)
    m_idx = _modes(rows) % q
    tail = np.abs(np.fft.fftfreq(q, 1.0 / q)) >= 3 * q // 8
    out = np.empty((2 * rows + 1, 2 * cols + 1), dtype=complex)
    residual = 0.0
    for start in range(0, len(n), _COLUMN_CHUNK):
        block = n[start : start + _COLUMN_CHUNK]
        samples = weight[:, None] * np.exp(1j * np.outer(psi, block))
        spectrum = np.fft.fft(samples, axis=0) / q
        residual = max(residual, float(np.max(np.abs(spectrum[tail]))))
        out[:, start : start + len(block)] = spectrum[m_idx]
    if residual > QUADRATURE_TOLERANCE:
        raise QuadratureError(f"quadrature with {q} nodes leaves residual {residual:.3e}", residual=residual)
    log.debug("dilation shift g=%d on %d nodes, residual %.2e", g, q, residual)
    return out


def _identity_modes(rows: int, cols: int) -> np.ndarray:
    out = np.zeros((2 * rows + 1, 2 * cols + 1), dtype=complex)
    n = _modes(min(rows, cols))
    out[n + rows, n + cols] = 1.0
    return out


def _shift_modes(action: ActionSpec, g: int, rows: int, cols: int, unitarized: bool = False) -> np.ndarray:
    if action.kind in (ActionKind.ROTATION, ActionKind.CYCLIC):
        out = np.zeros((2 * rows + 1, 2 * cols + 1), dtype=complex)
        n = _modes(cols)
        inside = np.abs(n) <= rows
        phases = np.exp(-1j * n * action.reduce(g) * action.step_angle)
        out[n[inside] + rows, np.nonzero(inside)[0]] = phases[inside]
        return out
    if action.kind is ActionKind.DILATION:
        if action.dim_m != 1:
            raise UnsupportedActionError("operator realizations of dilations are implemented on S^1 only")
        if g == 0:
            return _identity_modes(rows, cols)
        return _dilation_shift_modes(action, g, rows, cols, unitarized)
    raise UnsupportedActionError(f"no Fourier realization for {action.kind.name}")


def _reach(spec: GOperatorSpec, N: int) -> int:
    """Output window radius that captures the image of modes -N..N."""
    band = spec.bandwidth
    if spec.action.kind is ActionKind.DILATION:
        shifts = max((abs(t.g) for t in spec.terms), default=0)
        return int(math.ceil(N * spec.action.alpha ** (-shifts))) + band + _DILATION_MARGIN
    return N + band


def _window_matrix(spec: GOperatorSpec, rows: int, cols: int) -> np.ndarray:
    """Sobolev-conjugated matrix of the operator from mode window ``cols`` into ``rows``."""
    action = spec.action
    raw = np.zeros((2 * rows + 1, 2 * cols + 1), dtype=complex)
    for term in spec.terms:
        mid = rows + max(term.coefficient.bandwidth, term.smoothing_radius)
        shift = _shift_modes(action, term.g, mid, cols)
        coefficient = _coefficient_modes(term.coefficient, spec.order_m, rows, mid, spec.zero_mode_component)
        if term.smoothing is not None:
            coefficient = coefficient + _embed_kernel(term.smoothing, rows, mid)
        raw += coefficient @ shift
    row_scale = _sobolev_weight(rows, spec.s - spec.order_m)
    col_scale = _sobolev_weight(cols, -spec.s)
    return raw * row_scale[:, None] * col_scale[None, :]


# --- public realizations --------------------------------------------------


def realize_coefficient(
    c: CosphereFunction, order_m: float, s: float, N: int, zero_mode_component: int = 0
) -> np.ndarray:
    if c.bandwidth > N:
        raise BandwidthError(f"coefficient bandwidth {c.bandwidth} exceeds truncation {N}")
    raw = _coefficient_modes(c, order_m, N, N, zero_mode_component)
    return raw * _sobolev_weight(N, s - order_m)[:, None] * _sobolev_weight(N, -s)[None, :]


def realize_shift(action: ActionSpec, g: int, s: float, N: int, unitarized: bool = False) -> np.ndarray:
    """Matrix of the shift T_g on modes -N..N.

    With ``unitarized`` the density-corrected shift T_{g,s} is returned; in the
    Sobolev-orthonormal frame it does not depend on s and is unitary (exactly
    for isometric actions, on interior modes for dilations).
    """
    raw = _shift_modes(action, g, N, N, unitarized)
    if unitarized:
        return raw
    return raw * _sobolev_weight(N, s)[:, None] * _sobolev_weight(N, -s)[None, :]


def realize_operator(spec: GOperatorSpec, N: int) -> TruncatedRealization:
    if spec.bandwidth > N:
        raise BandwidthError(f"operator bandwidth {spec.bandwidth} exceeds truncation {N}")
    return TruncatedRealization(N, _window_matrix(spec, N, N), spec.s, spec.order_m)


def compose_realizations(a: TruncatedRealization, b: TruncatedRealization) -> TruncatedRealization:
    """Square-window product a * b; a must act on the target space of b."""
    if a.trunc_N != b.trunc_N:
        raise ValueError("realizations have different truncations")
    if not math.isclose(a.sobolev_s, b.sobolev_s - b.order_m, abs_tol=1e-12):
        raise ValueError("Sobolev orders do not chain")
    return TruncatedRealization(a.trunc_N, a.matrix @ b.matrix, b.sobolev_s, a.order_m + b.order_m)


# --- analytic index -------------------------------------------------------


def index_entry(N: int, matrix: np.ndarray, adjoint: np.ndarray, sv_threshold: float) -> IndexEntry:
    sv_op = svdvals(matrix)
    sv_adj = svdvals(adjoint)
    scale = max(float(np.max(sv_op, initial=0.0)), float(np.max(sv_adj, initial=0.0)))
    threshold = sv_threshold * scale
    dim_ker = int(np.count_nonzero(sv_op < threshold))
    dim_coker = int(np.count_nonzero(sv_adj < threshold))
    values = np.concatenate([sv_op, sv_adj])
    below = values[values < threshold]
    above = values[values >= threshold]
    floor = float(np.max(below)) if below.size else threshold
    ceiling = float(np.min(above)) if above.size else threshold
    if floor > 0.0:
        gap = ceiling / floor
    else:
        # 阈值以下全为精确的 0
        gap = float("inf") if ceiling > 0.0 else 0.0
    entry = IndexEntry(N, dim_ker, dim_coker, dim_ker - dim_coker, gap, gap >= SV_GAP_RATIO)
    if not entry.reliable:
        log.warning("N=%d: singular-value gap %.2f below ratio %.0f", N, gap, SV_GAP_RATIO)
    log.info("N=%d: dim ker %d, dim coker %d, index %d", N, dim_ker, dim_coker, entry.index)
    return entry


def _spec_entry(spec: GOperatorSpec, N: int, sv_threshold: float) -> IndexEntry:
    if spec.bandwidth > N:
        raise BandwidthError(f"operator bandwidth {spec.bandwidth} exceeds truncation {N}")
    reach = _reach(spec, N)
    matrix = _window_matrix(spec, reach, N)
    adjoint = _window_matrix(spec, N, reach).conj().T
    return index_entry(N, matrix, adjoint, sv_threshold)


def _product_entry(a: GOperatorSpec, b: GOperatorSpec, N: int, sv_threshold: float) -> IndexEntry:
    inner = _reach(b, N)
    outer = _reach(a, inner)
    matrix = _window_matrix(a, outer, inner) @ _window_matrix(b, inner, N)
    middle = _reach(a, N)
    outer_adj = _reach(b, middle)
    adjoint = (_window_matrix(a, N, middle) @ _window_matrix(b, middle, outer_adj)).conj().T
    return index_entry(N, matrix, adjoint, sv_threshold)


def _run(entries, N_list: Sequence[int], threads: int) -> List[IndexEntry]:
    if threads <= 1:
        return [entries(N) for N in N_list]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(entries, N_list))


def analytic_index(
    spec: GOperatorSpec,
    N_list: Sequence[int] = DEFAULT_TRUNCATIONS,
    sv_threshold: float = SV_THRESHOLD,
    threads: int = 1,
) -> IndexReport:
    """dim ker - dim coker by singular-value counting on growing truncations.

    The operator is restricted to modes -N..N and mapped into a window large
    enough to hold its whole image; the cokernel is counted on the adjoint
    restricted the same way.
    """
    per_N = _run(lambda N: _spec_entry(spec, N, sv_threshold), N_list, threads)
    report = IndexReport(per_N=per_N, sv_threshold=sv_threshold)
    if report.stabilize(STABLE_RUN) is None:
        log.warning("index did not stabilize over N=%s", list(N_list))
    return report


def analytic_index_of_product(
    a: GOperatorSpec,
    b: GOperatorSpec,
    N_list: Sequence[int] = DEFAULT_TRUNCATIONS,
    sv_threshold: float = SV_THRESHOLD,
    threads: int = 1,
) -> IndexReport:
    """Analytic index of the composition a * b, with a acting on the target space of b."""
    if a.action != b.action:
        raise ValueError("operators belong to different actions")
    if not math.isclose(a.s, b.s - b.order_m, abs_tol=1e-12):
        raise ValueError("Sobolev orders do not chain")
    per_N = _run(lambda N: _product_entry(a, b, N, sv_threshold), N_list, threads)
    report = IndexReport(per_N=per_N, sv_threshold=sv_threshold)
    report.stabilize(STABLE_RUN)
    return report


"""Topological side of the index: winding numbers and the identity-component formula."""
import logging
import math
from typing import Optional, Sequence

import numpy as np

from .constants import (
    COMPONENT_SIGNS,
    DEFAULT_TRUNCATIONS,
    MIN_QUADRATURE_NODES,
    ORIENTATION_SIGN,
    SNAP_TOLERANCE,
    VANISHING_FLOOR,
)
from .data_models import ActionKind, ActionSpec, TopologicalIndexResult
from .ellipticity import matrix_symbol
from .errors import NotCyclicError, SnapError, UnsupportedActionError, VanishingSymbolError
from .realization import GOperatorSpec, analytic_index
from .symbols import COMPONENTS, CosphereFunction, CrossedSymbol, cp_inverse, e_component_form

log = logging.getLogger(__name__)


def _node_count(bandwidth: int, nodes: Optional[int]) -> int:
    if nodes is not None:
        if nodes < 2 * bandwidth + 1:
            raise ValueError(f"{nodes} nodes cannot resolve bandwidth {bandwidth}")
        return nodes
    return max(MIN_QUADRATURE_NODES, 8 * bandwidth)


def _snap(raw: complex) -> int:
    snapped = int(round(raw.real))
    error = abs(raw - snapped)
    if error >= SNAP_TOLERANCE:
        raise SnapError(f"integral {raw:.9g} is {error:.2e} away from an integer", residual=error)
    return snapped


def spectral_derivative(samples: np.ndarray) -> np.ndarray:
    """d/dt of uniform periodic samples (last axis), Nyquist mode dropped."""
    n = samples.shape[-1]
    k = np.fft.fftfreq(n, 1.0 / n)
    if n % 2 == 0:
        k[n // 2] = 0.0
    return np.fft.ifft(1j * k * np.fft.fft(samples, axis=-1), axis=-1)


def winding_from_samples(samples: np.ndarray) -> complex:
    """(1/2 pi i) of the contour integral of f^{-1} df from uniform samples, unsnapped."""
    samples = np.asarray(samples, dtype=complex)
    if np.min(np.abs(samples)) <= VANISHING_FLOOR:
        raise VanishingSymbolError("function vanishes on the sampling grid")
    return complex(np.mean(spectral_derivative(samples) / samples) / 1j)


def _component_winding(f: CosphereFunction, component: int, nodes: int) -> complex:
    values = f.samples(nodes)[component]
    if np.min(np.abs(values)) <= VANISHING_FLOOR:
        raise VanishingSymbolError(f"symbol vanishes on component {component}")
    derivative = f.derivative().samples(nodes)[component]
    return complex(np.mean(derivative / values) / 1j)


def winding_number(f: CosphereFunction, component: int = 0, nodes: Optional[int] = None) -> int:
    """Degree of one component of f around 0 (trapezoidal rule, exact derivative)."""
    return _snap(_component_winding(f, component, _node_count(f.bandwidth, nodes)))


def index_coefficient(n: int) -> complex:
    """(n-1)! / ((2 pi i)^n (2n-1)!)."""
    if n < 1:
        raise ValueError("n must be positive")
    return math.factorial(n - 1) / ((2j * np.pi) ** n * math.factorial(2 * n - 1))


def _signed_sum(per_component: Sequence[complex]) -> complex:
    return sum(sign * value for sign, value in zip(COMPONENT_SIGNS, per_component))


def _result(raw: complex, nodes: int, orientation_sign: int) -> TopologicalIndexResult:
    snapped = _snap(raw)
    return TopologicalIndexResult(raw, snapped, float(abs(raw - snapped)), orientation_sign, nodes)


def index_formula_Z(
    sym: CrossedSymbol,
    sym_inv: Optional[CrossedSymbol] = None,
    nodes: Optional[int] = None,
    orientation_sign: int = ORIENTATION_SIGN,
) -> TopologicalIndexResult:
    """Index of a Z-operator from the identity component of sigma^{-1} d sigma."""
    if sym.action.kind is not ActionKind.ROTATION:
        raise UnsupportedActionError("the identity-component formula needs a rotation action of Z")
    nodes = _node_count(sym.bandwidth, nodes)
    if sym_inv is None:
        sym_inv = cp_inverse(sym, grid_size=nodes)
    form = e_component_form(sym, sym_inv)
    # contour integral of the form over each component: 2 pi * mean
    per_component = [2 * np.pi * form.coefficient(0, c) for c in range(COMPONENTS)]
    raw = complex(orientation_sign * index_coefficient(1) * _signed_sum(per_component))
    log.info("identity-component integrals %s, raw index %.12g", per_component, raw.real)
    return _result(raw, nodes, orientation_sign)


def index_finite_free(
    sym: CrossedSymbol, nodes: Optional[int] = None, orientation_sign: int = ORIENTATION_SIGN
) -> TopologicalIndexResult:
    """Index of a Z/k-operator through the determinant of its matrix symbol.

    det M is 2 pi/k periodic, so its winding over the full circle is k times the
    winding on the quotient circle.
    """
    if sym.action.kind is not ActionKind.CYCLIC:
        raise NotCyclicError("index_finite_free needs a cyclic rotation action")
    msym = matrix_symbol(sym)
    k = msym.k
    nodes = _node_count(msym.bandwidth * k, nodes)
    t = 2 * np.pi * np.arange(nodes) / nodes
    derivative = [[f.derivative() for f in row] for row in msym.entries]
    per_component = []
    for c in range(COMPONENTS):
        mats = msym.evaluate(t, c)
        if np.min(np.abs(np.linalg.det(mats))) <= VANISHING_FLOOR:
            raise VanishingSymbolError(f"matrix symbol is singular on component {c}")
        dmats = np.empty_like(mats)
        for i in range(k):
            for j in range(k):
                dmats[:, i, j] = derivative[i][j].evaluate(t, c)
        # d log det M = tr(M^{-1} dM)
        integrand = np.trace(np.linalg.solve(mats, dmats), axis1=1, axis2=2)
        per_component.append(complex(np.mean(integrand) / 1j) / k)
    raw = complex(orientation_sign * _signed_sum(per_component))
    log.info("quotient determinant windings %s, raw index %.12g", per_component, raw.real)
    return _result(raw, nodes, orientation_sign)


def calibrate_orientation(N_list: Sequence[int] = DEFAULT_TRUNCATIONS) -> int:
    """Orientation sign that makes the topological route match the analytic one on e^{ix} P_+ + P_-."""
    action = ActionSpec.rotation((math.sqrt(5) - 1) / 2)
    sym = CrossedSymbol.single(action, 0, CosphereFunction.from_components([0, 0, 1], [0, 1, 0]))
    analytic = analytic_index(GOperatorSpec.from_symbol(sym), N_list).stabilized_index
    unsigned = index_formula_Z(sym, orientation_sign=1).snapped
    if analytic is None or unsigned == 0 or abs(analytic) != abs(unsigned):
        raise SnapError("calibration case did not produce matching nonzero indices")
    return 1 if analytic == unsigned else -1

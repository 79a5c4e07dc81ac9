"""Group-averaged operators for the circle acting on the torus along x2.

Functions on T^2 are represented by Fourier modes (n1, n2) with
|n1|, |n2| <= N, flattened as (n1 + N) * (2N + 1) + (n2 + N). Every operator
of the torus example is diagonal in this basis, so the matrices are sparse.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from .constants import STABLE_RUN, SV_THRESHOLD, UNIFORMIZE_TRUNCATIONS
from .data_models import IndexReport
from .errors import PreconditionError
from .realization import index_entry

log = logging.getLogger(__name__)

ModeMultiplier = Callable[[np.ndarray, np.ndarray], np.ndarray]
# symbol on transverse covectors (xi1, 0): (xi1, on_averaged_block) -> value
TransverseSymbol = Callable[[float, bool], complex]

TRANSVERSE_FLOOR = 1e-12


@dataclass
class AveragedOperatorSpec:
    """Delta + alpha * D1^2 * P on T^2, or a user-supplied diagonal mode multiplier."""
    alpha: float = 0.0
    multiplier: Optional[ModeMultiplier] = None
    transverse_symbol: Optional[TransverseSymbol] = None

    @property
    def is_torus_example(self) -> bool:
        return self.multiplier is None

    def modes(self, n1: np.ndarray, n2: np.ndarray) -> np.ndarray:
        if self.multiplier is not None:
            return np.asarray(self.multiplier(n1, n2), dtype=complex)
        return (n1**2 + n2**2 + self.alpha * n1**2 * (n2 == 0)).astype(complex)


@dataclass(frozen=True)
class TransverseCovector:
    x: Tuple[float, float]
    xi: Tuple[float, float]

    @property
    def is_transverse(self) -> bool:
        """Orthogonal to the orbit direction d/dx2."""
        return self.xi[1] == 0.0 and self.xi[0] != 0.0


@dataclass
class TransverseReport:
    transversally_elliptic: bool
    elliptic: bool
    values: Dict[str, complex] = field(default_factory=dict)
    offending: List[str] = field(default_factory=list)


@dataclass
class ModeTable:
    n1: np.ndarray
    n2: np.ndarray
    lam: np.ndarray
    normalized: np.ndarray


def mode_grid(N: int) -> Tuple[np.ndarray, np.ndarray]:
    """Flattened (n1, n2) for the square window |n1|, |n2| <= N."""
    n = np.arange(-N, N + 1)
    n1, n2 = np.meshgrid(n, n, indexing="ij")
    return n1.ravel(), n2.ravel()


def mode_index(n1: int, n2: int, N: int) -> int:
    return (n1 + N) * (2 * N + 1) + (n2 + N)


def averaging_projection(N: int) -> sp.csr_matrix:
    """Mean over the orbit: keeps the modes with n2 = 0."""
    _, n2 = mode_grid(N)
    return sp.diags((n2 == 0).astype(float), format="csr")


def laplacian(N: int) -> sp.csr_matrix:
    n1, n2 = mode_grid(N)
    return sp.diags((n1**2 + n2**2).astype(float), format="csr")


def second_derivative_x1(N: int) -> sp.csr_matrix:
    """-d^2/dx1^2 (nonnegative)."""
    n1, _ = mode_grid(N)
    return sp.diags((n1**2).astype(float), format="csr")


def orbit_shift(N: int, angle: float) -> sp.csr_matrix:
    """(T u)(x1, x2) = u(x1, x2 - angle)."""
    _, n2 = mode_grid(N)
    return sp.diags(np.exp(-1j * n2 * angle), format="csr")


def _pseudo_inverse_laplacian(N: int) -> sp.csr_matrix:
    n1, n2 = mode_grid(N)
    lam = (n1**2 + n2**2).astype(float)
    inv = np.divide(1.0, lam, out=np.zeros_like(lam), where=lam != 0)
    return sp.diags(inv, format="csr")


def assemble_from_projection(alpha: float, N: int) -> sp.csr_matrix:
    """Delta + alpha * D1^2 * P assembled from the sparse mode operators."""
    return (laplacian(N) + alpha * (second_derivative_x1(N) @ averaging_projection(N))).tocsr()


def torus_example_modes(alpha: float, N: int, spec: Optional[AveragedOperatorSpec] = None) -> ModeTable:
    """Mode multipliers of the example and of its regularization Delta^+ (Delta + alpha D1^2 P).

    Delta^+ is the Moore-Penrose inverse, so the regularized multiplier is 0 at (0, 0).
    """
    spec = spec or AveragedOperatorSpec(alpha)
    n1, n2 = mode_grid(N)
    lam = spec.modes(n1, n2)
    denom = (n1**2 + n2**2).astype(float)
    normalized = np.divide(lam, denom, out=np.zeros_like(lam), where=denom != 0)
    return ModeTable(n1, n2, lam, normalized)


def regularized_operator(spec: AveragedOperatorSpec, N: int) -> sp.csr_matrix:
    """Delta^+ (Delta + alpha D1^2 P) on the mode window."""
    if spec.is_torus_example:
        return (_pseudo_inverse_laplacian(N) @ assemble_from_projection(spec.alpha, N)).tocsr()
    return sp.diags(torus_example_modes(spec.alpha, N, spec).normalized, format="csr")


def transverse_elliptic_check(spec: AveragedOperatorSpec) -> TransverseReport:
    """Invertibility of the regularized symbol on covectors (xi1, 0) orthogonal to the orbits."""
    def example_symbol(xi1: float, averaged: bool) -> complex:
        return 1.0 + spec.alpha if averaged else 1.0

    symbol = example_symbol if spec.is_torus_example else spec.transverse_symbol
    if symbol is None:
        raise ValueError("custom mode multipliers need a transverse symbol")

    values: Dict[str, complex] = {}
    offending = []
    for averaged in (True, False):
        for xi1 in (1.0, -1.0):
            key = f"xi1={xi1:+.0f},{'averaged' if averaged else 'off-average'}"
            values[key] = complex(symbol(xi1, averaged))
            if abs(values[key]) < TRANSVERSE_FLOOR:
                offending.append(key)
    elliptic = spec.is_torus_example and spec.alpha == 0.0
    report = TransverseReport(not offending, elliptic, values, offending)
    log.info("transverse symbol values %s", values)
    return report


def fredholm_probe(spec: AveragedOperatorSpec, N_list: Sequence[int] = UNIFORMIZE_TRUNCATIONS) -> Dict[str, object]:
    """Kernel growth of the regularized torus realization; constant kernel means Fredholm."""
    kernels = []
    for N in N_list:
        diagonal = np.abs(torus_example_modes(spec.alpha, N, spec).normalized)
        kernels.append(int(np.count_nonzero(diagonal < SV_THRESHOLD * max(float(diagonal.max()), 1.0))))
    fredholm = len(set(kernels)) == 1
    if not fredholm:
        log.info("kernel grows with truncation: %s", kernels)
    return {"N_list": list(N_list), "dim_ker": kernels, "fredholm": fredholm}


def invariant_restriction_index(
    spec: AveragedOperatorSpec, N_list: Sequence[int] = UNIFORMIZE_TRUNCATIONS, sv_threshold: float = SV_THRESHOLD
) -> IndexReport:
    """Index of the regularized operator on the orbit-invariant modes n2 = 0."""
    check = transverse_elliptic_check(spec)
    if not check.transversally_elliptic:
        raise PreconditionError(f"not transversally elliptic at {', '.join(check.offending)}")
    per_N = []
    for N in N_list:
        table = torus_example_modes(spec.alpha, N, spec)
        block = np.diag(table.normalized[table.n2 == 0])
        per_N.append(index_entry(N, block, block.conj().T, sv_threshold))
    report = IndexReport(per_N=per_N, sv_threshold=sv_threshold)
    report.stabilize(STABLE_RUN)
    return report

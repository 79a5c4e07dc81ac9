"""Schwartz functions on the line as sections of a line bundle on the torus.

The map

    (Phi f)(phi, psi) = sum_n f(phi + theta n) e^{2 pi i n psi}

sends f to a function on [0, theta) x [0, 1) with
g(phi + theta, psi) = g(phi, psi) e^{-2 pi i psi}. Line samples live on
x_j = j h, |j| <= J, with h = theta / q so that the n-shift is a whole number
of grid steps.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum, auto
from typing import Callable, Dict

import numpy as np

from .errors import InsufficientDecayError

log = logging.getLogger(__name__)

LINE_RADIUS = 12.0
TARGET_STEP = 0.01
DECAY_TOLERANCE = 1e-10
SUM_CUTOFF = 1e-14


@dataclass(frozen=True)
class NCGrid:
    theta: float
    L: float
    h: float
    q: int
    J: int
    psi_size: int

    @classmethod
    def build(cls, theta: float, L: float = LINE_RADIUS) -> "NCGrid":
        if not 0.0 < theta <= 1.0:
            raise ValueError(f"theta must lie in (0, 1], got {theta}")
        q = int(math.ceil(theta / TARGET_STEP))
        h = theta / q
        J = int(math.ceil(L / h))
        n_max = J // q + 2
        psi_size = 1 << int(math.ceil(math.log2(2 * n_max + 1)))
        return cls(theta, L, h, q, J, psi_size)

    @property
    def x(self) -> np.ndarray:
        return self.h * np.arange(-self.J, self.J + 1)

    @property
    def phi(self) -> np.ndarray:
        return self.h * np.arange(self.q)

    @property
    def psi(self) -> np.ndarray:
        return np.arange(self.psi_size) / self.psi_size

    @property
    def n_max(self) -> int:
        return self.J // self.q + 2


@dataclass
class LineFunction:
    grid: NCGrid
    values: np.ndarray

    @classmethod
    def from_callable(cls, func: Callable[[np.ndarray], np.ndarray], theta: float, L: float = LINE_RADIUS):
        grid = NCGrid.build(theta, L)
        return cls(grid, np.asarray(func(grid.x), dtype=complex))

    @property
    def decay_certificate(self) -> float:
        outer = np.abs(self.grid.x) >= 0.9 * self.grid.L
        return float(np.max(np.abs(self.values[outer])))

    def require_decay(self) -> None:
        if self.decay_certificate >= DECAY_TOLERANCE:
            raise InsufficientDecayError(
                f"|f| reaches {self.decay_certificate:.2e} on the outer tenth of the grid",
                residual=self.decay_certificate,
            )


@dataclass
class TorusSection:
    """Values g(phi_j, psi_l) on [0, theta) x [0, 1)."""
    grid: NCGrid
    values: np.ndarray

    @property
    def theta(self) -> float:
        return self.grid.theta


class CorrespondenceOp(Enum):
    U = auto()
    V = auto()
    POSITION = auto()
    MOMENTUM = auto()


# --- the isomorphism ------------------------------------------------------


def _phi_sum(f: LineFunction, first_row: int, rows: int) -> np.ndarray:
    """Phi f at phi = (first_row + j) h, j < rows."""
    grid = f.grid
    n = np.arange(-grid.n_max, grid.n_max + 1)
    j = first_row + np.arange(rows)
    idx = j[:, None] + grid.q * n[None, :] + grid.J
    inside = (idx >= 0) & (idx <= 2 * grid.J)
    coeffs = np.where(inside, f.values[np.clip(idx, 0, 2 * grid.J)], 0.0)
    coeffs[np.abs(coeffs) < SUM_CUTOFF] = 0.0
    spectrum = np.zeros((rows, grid.psi_size), dtype=complex)
    spectrum[:, n % grid.psi_size] = coeffs
    return np.fft.ifft(spectrum, axis=1) * grid.psi_size


def schwartz_to_torus(f: LineFunction) -> TorusSection:
    f.require_decay()
    return TorusSection(f.grid, _phi_sum(f, 0, f.grid.q))


def torus_to_schwartz(g: TorusSection) -> LineFunction:
    """Inverse map: the n-th psi-Fourier coefficient of g(phi, .) is f(phi + theta n)."""
    grid = g.grid
    coeffs = np.fft.fft(g.values, axis=1) / grid.psi_size
    values = np.zeros(2 * grid.J + 1, dtype=complex)
    n = np.arange(-grid.n_max, grid.n_max + 1)
    for j in range(grid.q):
        idx = j + grid.q * n + grid.J
        inside = (idx >= 0) & (idx <= 2 * grid.J)
        values[idx[inside]] = coeffs[j, n[inside] % grid.psi_size]
    return LineFunction(grid, values)


def seam_residual(f: LineFunction) -> float:
    """max |g(phi + theta, psi) - g(phi, psi) e^{-2 pi i psi}| with the extension computed from f."""
    f.require_decay()
    grid = f.grid
    base = _phi_sum(f, 0, grid.q)
    shifted = _phi_sum(f, grid.q, grid.q)
    phase = np.exp(-2j * np.pi * grid.psi)
    return float(np.max(np.abs(shifted - base * phase[None, :])))


# --- operators on the line ------------------------------------------------


def _line_frequencies(grid: NCGrid) -> np.ndarray:
    size = 2 * grid.J + 1
    return 2 * np.pi * np.fft.fftfreq(size, grid.h)


def line_operator(op: CorrespondenceOp, f: LineFunction) -> LineFunction:
    grid = f.grid
    if op is CorrespondenceOp.V:
        values = np.exp(-2j * np.pi * grid.x / grid.theta) * f.values
    elif op is CorrespondenceOp.POSITION:
        values = grid.x * f.values
    elif op is CorrespondenceOp.MOMENTUM:
        values = -1j * np.fft.ifft(1j * _line_frequencies(grid) * np.fft.fft(f.values))
    else:
        # (U f)(x) = f(x + 1)
        values = np.fft.ifft(np.exp(1j * _line_frequencies(grid)) * np.fft.fft(f.values))
    return LineFunction(grid, values)


# --- operators on the torus -----------------------------------------------


def _periodic_helper(g: TorusSection) -> np.ndarray:
    """g e^{2 pi i psi phi / theta}, theta-periodic in phi."""
    grid = g.grid
    return g.values * np.exp(2j * np.pi * np.outer(grid.phi, grid.psi) / grid.theta)


def _phi_frequencies(grid: NCGrid) -> np.ndarray:
    k = np.fft.fftfreq(grid.q, 1.0 / grid.q)
    if grid.q % 2 == 0:
        k[grid.q // 2] = 0.0
    return 2 * np.pi * k / grid.theta


def torus_operator(op: CorrespondenceOp, g: TorusSection) -> TorusSection:
    grid = g.grid
    phi, psi = grid.phi, grid.psi
    if op is CorrespondenceOp.V:
        values = np.exp(-2j * np.pi * phi / grid.theta)[:, None] * g.values
    elif op is CorrespondenceOp.POSITION:
        n = np.fft.fftfreq(grid.psi_size, 1.0 / grid.psi_size)
        d_psi = np.fft.ifft(2j * np.pi * n[None, :] * np.fft.fft(g.values, axis=1), axis=1)
        values = -1j * grid.theta / (2 * np.pi) * d_psi + phi[:, None] * g.values
    else:
        periodic = _periodic_helper(g)
        omega = _phi_frequencies(grid)[:, None]
        spectrum = np.fft.fft(periodic, axis=0)
        if op is CorrespondenceOp.MOMENTUM:
            d_phi = np.fft.ifft(1j * omega * spectrum, axis=0)
            gauge = np.exp(-2j * np.pi * np.outer(phi, psi) / grid.theta)
            values = -1j * (d_phi - 2j * np.pi * psi[None, :] / grid.theta * periodic) * gauge
        else:
            # 在周期辅助函数上平移 1, 再乘回丛的相位
            moved = np.fft.ifft(np.exp(1j * omega) * spectrum, axis=0)
            values = moved * np.exp(-2j * np.pi * np.outer(phi + 1.0, psi) / grid.theta)
    return TorusSection(grid, values)


def verify_correspondence(op: CorrespondenceOp, f: LineFunction) -> float:
    """sup |Phi(op f) - op_torus(Phi f)|."""
    rhs = torus_operator(op, schwartz_to_torus(f))
    lhs = _phi_sum(line_operator(op, f), 0, f.grid.q)
    residual = float(np.max(np.abs(lhs - rhs.values)))
    log.info("%s correspondence residual %.3e", op.name, residual)
    return residual


def commutation_residual(f: LineFunction) -> float:
    """Torus U and V satisfy UV = e^{-2 pi i/theta} VU on Phi f, and UV agrees with Phi(UV f)."""
    g = schwartz_to_torus(f)
    phase = np.exp(-2j * np.pi / f.grid.theta)
    u_v = torus_operator(CorrespondenceOp.U, torus_operator(CorrespondenceOp.V, g))
    v_u = torus_operator(CorrespondenceOp.V, torus_operator(CorrespondenceOp.U, g))
    algebra = float(np.max(np.abs(u_v.values - phase * v_u.values)))
    line_uv = line_operator(CorrespondenceOp.U, line_operator(CorrespondenceOp.V, f))
    transport = float(np.max(np.abs(_phi_sum(line_uv, 0, f.grid.q) - u_v.values)))
    return max(algebra, transport)


def gaussian(x: np.ndarray) -> np.ndarray:
    return np.exp(-(x**2))


def x_gaussian(x: np.ndarray) -> np.ndarray:
    return x * np.exp(-(x**2))


def modulated_gaussian(x: np.ndarray) -> np.ndarray:
    return np.exp(-(x**2)) * np.exp(3j * x)


TEST_FUNCTIONS: Dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "gaussian": gaussian,
    "x_gaussian": x_gaussian,
    "modulated_gaussian": modulated_gaussian,
}


def correspondence_table(theta: float, L: float = LINE_RADIUS) -> Dict[str, Dict[str, float]]:
    """Residuals of every operator row and the seam check for each test function."""
    table: Dict[str, Dict[str, float]] = {}
    for name, func in TEST_FUNCTIONS.items():
        f = LineFunction.from_callable(func, theta, L)
        row = {op.name: verify_correspondence(op, f) for op in CorrespondenceOp}
        row["seam"] = seam_residual(f)
        row["commutation"] = commutation_residual(f)
        table[name] = row
    return table

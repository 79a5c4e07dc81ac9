from dataclasses import dataclass, field
from enum import Enum, auto
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np


class ManifoldKind(Enum):
    """Closed base manifolds supported by the toolkit."""
    CIRCLE = auto()
    SPHERE = auto()
    TORUS2 = auto()


@dataclass(frozen=True)
class ManifoldSpec:
    """A base manifold together with its uniform sampling density."""
    kind: ManifoldKind
    grid_size: int = 256
    dim_m: int = 1

    def __post_init__(self) -> None:
        if self.grid_size < 16 or self.grid_size % 2:
            raise ValueError(f"grid_size must be even and >= 16, got {self.grid_size}")
        if self.kind is ManifoldKind.SPHERE and self.dim_m < 1:
            raise ValueError("sphere dimension must be positive")

    @property
    def n(self) -> int:
        if self.kind is ManifoldKind.CIRCLE:
            return 1
        if self.kind is ManifoldKind.TORUS2:
            return 2
        return self.dim_m

    def grid(self) -> np.ndarray:
        """Uniform sample points (angles) of one circle coordinate."""
        return 2 * np.pi * np.arange(self.grid_size) / self.grid_size


class ActionKind(Enum):
    ROTATION = auto()
    DILATION = auto()
    CYCLIC = auto()
    TORUS_CIRCLE = auto()


@dataclass(frozen=True)
class ActionSpec:
    """One of the supported group actions.

    Rotation angles are stored in turns (multiples of 2*pi) in [0, 1).
    """
    kind: ActionKind
    theta_turns: float = 0.0
    irrational: bool = False
    alpha: float = 0.5
    dim_m: int = 1
    k: int = 2

    def __post_init__(self) -> None:
        if self.kind is ActionKind.ROTATION and not 0.0 < self.theta_turns < 1.0:
            raise ValueError(f"rotation angle must lie in (0, 1) turns, got {self.theta_turns}")
        if self.kind is ActionKind.DILATION:
            if not 0.0 < self.alpha < 1.0:
                raise ValueError(f"dilation factor must lie in (0, 1), got {self.alpha}")
            if self.dim_m < 1:
                raise ValueError("sphere dimension must be positive")
        if self.kind is ActionKind.CYCLIC and self.k < 2:
            raise ValueError(f"cyclic order must be >= 2, got {self.k}")

    @classmethod
    def rotation(cls, theta_turns: float, irrational: bool = True) -> "ActionSpec":
        return cls(ActionKind.ROTATION, theta_turns=theta_turns % 1.0, irrational=irrational)

    @classmethod
    def dilation(cls, alpha: float, dim_m: int = 1) -> "ActionSpec":
        return cls(ActionKind.DILATION, alpha=alpha, dim_m=dim_m)

    @classmethod
    def cyclic(cls, k: int) -> "ActionSpec":
        return cls(ActionKind.CYCLIC, k=k)

    @classmethod
    def circle_on_torus(cls) -> "ActionSpec":
        return cls(ActionKind.TORUS_CIRCLE)

    @property
    def is_isometric(self) -> bool:
        return self.kind is not ActionKind.DILATION

    @property
    def step_turns(self) -> float:
        """Rotation of the generator in turns (rotation and cyclic actions)."""
        if self.kind is ActionKind.CYCLIC:
            return 1.0 / self.k
        return self.theta_turns

    @property
    def step_angle(self) -> float:
        return 2 * np.pi * self.step_turns

    def manifold(self, grid_size: int = 256) -> ManifoldSpec:
        if self.kind is ActionKind.DILATION:
            return ManifoldSpec(ManifoldKind.SPHERE, grid_size, self.dim_m)
        if self.kind is ActionKind.TORUS_CIRCLE:
            return ManifoldSpec(ManifoldKind.TORUS2, grid_size, 2)
        return ManifoldSpec(ManifoldKind.CIRCLE, grid_size, 1)

    def reduce(self, g: int) -> int:
        return g % self.k if self.kind is ActionKind.CYCLIC else g

    def compose(self, g1: int, g2: int) -> int:
        return self.reduce(g1 + g2)

    def inverse(self, g: int) -> int:
        return self.reduce(-g)

    def group_window(self, radius: int) -> np.ndarray:
        """Group elements indexing a truncated trajectory."""
        if self.kind is ActionKind.CYCLIC:
            return np.arange(self.k)
        return np.arange(-radius, radius + 1)


class Chart(Enum):
    """Stereographic charts of S^m: x around pole 0, x' = x/|x|^2 around pole infinity."""
    ZERO = auto()
    INFINITY = auto()


class Location(Enum):
    INTERIOR = auto()
    POLE_ZERO = auto()
    POLE_INFINITY = auto()


@dataclass(frozen=True)
class SpherePoint:
    """A point of S^m stored in the chart where its coordinate norm is <= 1."""
    chart: Chart
    coords: Tuple[float, ...]

    @property
    def vector(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)

    @property
    def is_pole(self) -> bool:
        return not any(self.coords)

    @classmethod
    def pole(cls, chart: Chart, dim_m: int = 1) -> "SpherePoint":
        return cls(chart, (0.0,) * dim_m)


Point = Union[float, SpherePoint, Tuple[float, float]]


@dataclass(frozen=True)
class CotangentPoint:
    """A point of the cosphere bundle; ``xi`` is expressed in the chart of ``x``."""
    x: Any
    xi: Tuple[float, ...] = (1.0,)

    @property
    def covector(self) -> np.ndarray:
        return np.asarray(self.xi, dtype=float)

    @property
    def sign(self) -> int:
        return 1 if self.xi[0] >= 0 else -1


@dataclass(frozen=True)
class WeightSpec:
    """Data fixing the trajectory density: base covector, Sobolev order and operator order."""
    point: CotangentPoint
    s: float = 0.0
    order_m: float = 0.0


class Verdict(Enum):
    ELLIPTIC = auto()
    NOT_ELLIPTIC = auto()
    INCONCLUSIVE = auto()


@dataclass
class EllipticityReport:
    """Outcome of an ellipticity check with the evidence it rests on."""
    verdict: Verdict
    method: str
    evidence: Dict[str, Any] = field(default_factory=dict)
    s: Optional[Union[float, Tuple[float, float]]] = None
    interval: Optional[Tuple[float, float]] = None
    heuristic: bool = False
    failing_threshold: Optional[str] = None


@dataclass
class IndexEntry:
    """Kernel and cokernel counts at one truncation size."""
    N: int
    dim_ker: int
    dim_coker: int
    index: int
    sv_gap: float
    reliable: bool = True


@dataclass
class IndexReport:
    per_N: List[IndexEntry] = field(default_factory=list)
    stabilized_index: Optional[int] = None
    sv_threshold: float = 0.0
    topological_index: Optional[int] = None
    agree: Optional[bool] = None

    def stabilize(self, run: int) -> Optional[int]:
        """Set the stabilized index if the last ``run`` entries agree."""
        tail = [entry.index for entry in self.per_N[-run:]]
        if len(tail) >= run and len(set(tail)) == 1:
            self.stabilized_index = tail[0]
        else:
            self.stabilized_index = None
        return self.stabilized_index

    def compare(self, topological_index: Optional[int]) -> None:
        self.topological_index = topological_index
        if topological_index is None or self.stabilized_index is None:
            self.agree = None
        else:
            self.agree = topological_index == self.stabilized_index


@dataclass
class TopologicalIndexResult:
    raw: complex
    snapped: int
    snap_error: float
    orientation_sign: int
    quadrature_nodes: int

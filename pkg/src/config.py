"""Job files: JSON validated by pydantic models."""
import json
import math
from pathlib import Path
from typing import List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, ValidationError, model_validator

from .constants import UNIFORMIZE_TRUNCATIONS
from .data_models import ActionSpec
from .errors import ConfigError
from .expressions import compile_expression
from .realization import GOperatorSpec, OperatorTerm
from .symbols import CosphereFunction, CrossedSymbol

GOLDEN_TURNS = (math.sqrt(5) - 1) / 2

Coefficient = Tuple[float, float]


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ActionBlock(_Block):
    kind: Literal["rotation", "dilation", "cyclic"]
    theta_turns: float = GOLDEN_TURNS
    irrational: bool = True
    alpha: float = 0.5
    dim_m: PositiveInt = 1
    k: int = 2

    def to_action(self) -> ActionSpec:
        if self.kind == "rotation":
            return ActionSpec.rotation(self.theta_turns, self.irrational)
        if self.kind == "dilation":
            return ActionSpec.dilation(self.alpha, self.dim_m)
        return ActionSpec.cyclic(self.k)


class ComponentSymbol(_Block):
    """Either centred Fourier coefficients [[re, im], ...] (modes -B..B) or an expression in x."""
    coefficients: Optional[List[Coefficient]] = None
    expr: Optional[str] = None

    @model_validator(mode="after")
    def _one_form(self) -> "ComponentSymbol":
        if (self.coefficients is None) == (self.expr is None):
            raise ValueError("give exactly one of 'coefficients' or 'expr'")
        if self.coefficients is not None and len(self.coefficients) % 2 == 0:
            raise ValueError("coefficient list must have odd length 2B+1 (centred at mode 0)")
        if self.expr is not None:
            compile_expression(self.expr)
        return self

    def samples(self, t: np.ndarray) -> np.ndarray:
        if self.expr is not None:
            return compile_expression(self.expr)(t)
        coeffs = np.array([complex(re, im) for re, im in self.coefficients or []])
        modes = np.arange(len(coeffs)) - len(coeffs) // 2
        return np.exp(1j * np.outer(t, modes)) @ coeffs


class TermBlock(_Block):
    g: int = 0
    plus: ComponentSymbol
    minus: Optional[ComponentSymbol] = None

    def coefficient(self, grid_size: int) -> CosphereFunction:
        minus = self.minus or self.plus
        if self.plus.coefficients is not None and minus.coefficients is not None:
            plus_c = [complex(re, im) for re, im in self.plus.coefficients]
            minus_c = [complex(re, im) for re, im in minus.coefficients]
            return CosphereFunction.from_components(plus_c, minus_c).truncated()
        return CosphereFunction.from_callables(self.plus.samples, minus.samples, grid_size)


class NCTorusBlock(_Block):
    theta: float = Field(0.7, gt=0.0, le=1.0)
    L: PositiveFloat = 12.0


class UniformizeBlock(_Block):
    alpha: float = 0.5
    truncations: List[PositiveInt] = Field(default_factory=lambda: list(UNIFORMIZE_TRUNCATIONS))


class JobConfig(_Block):
    action: Optional[ActionBlock] = None
    terms: List[TermBlock] = Field(default_factory=list)
    order_m: float = 0.0
    s: float = 0.0
    s_range: Optional[Tuple[float, float]] = None
    s_grid: int = Field(64, ge=2)
    truncations: Optional[List[PositiveInt]] = None
    tolerance: Optional[PositiveFloat] = None
    seed: int = 0
    x_samples: PositiveInt = 4
    symbol_grid: int = Field(256, ge=16, multiple_of=2)
    zero_mode_component: Literal[0, 1] = 0
    output_format: Literal["json", "csv"] = "json"
    nctorus: Optional[NCTorusBlock] = None
    uniformize: Optional[UniformizeBlock] = None

    @model_validator(mode="after")
    def _ranges(self) -> "JobConfig":
        if self.s_range is not None and not self.s_range[0] < self.s_range[1]:
            raise ValueError("s_range must be [low, high] with low < high")
        if self.terms and self.action is None:
            raise ValueError("operator terms need an action block")
        return self


def _format_errors(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        where = ".".join(str(part) for part in err["loc"]) or "<root>"
        lines.append(f"field {where}: {err['msg']}")
    return "; ".join(lines)


def parse_job(text: str, source: str = "<config>") -> JobConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    try:
        return JobConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"{source}: {_format_errors(exc)}") from exc


def read_job_text(path: Union[str, Path]) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc


def load_job(path: Union[str, Path]) -> Tuple[JobConfig, str]:
    """Validated job and its raw text (hashed into reports)."""
    text = read_job_text(path)
    return parse_job(text, str(path)), text


def build_action(job: JobConfig) -> ActionSpec:
    if job.action is None:
        raise ConfigError("field action: required for this command")
    try:
        return job.action.to_action()
    except ValueError as exc:
        raise ConfigError(f"field action: {exc}") from exc


def build_symbol(job: JobConfig) -> CrossedSymbol:
    action = build_action(job)
    if not job.terms:
        raise ConfigError("field terms: at least one operator term is required")
    terms = {}
    for term in job.terms:
        f = term.coefficient(job.symbol_grid)
        g = action.reduce(term.g)
        terms[g] = terms[g] + f if g in terms else f
    return CrossedSymbol(action, terms, job.order_m)


def build_operator(job: JobConfig) -> GOperatorSpec:
    action = build_action(job)
    sym = build_symbol(job)
    terms = [OperatorTerm(g, f) for g, f in sym.terms.items()]
    return GOperatorSpec(action, terms, job.order_m, job.s, job.zero_mode_component)


def job_schema() -> dict:
    return JobConfig.model_json_schema()

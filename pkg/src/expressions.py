"""Symbol expressions from job files, e.g. ``"1 + 0.3*exp(i*x)"``.

Only the variable x, the constants i and pi and the functions sin, cos and exp
are accepted; the parsed expression is compiled to a numpy function with
sympy's lambdify.
"""
import re
from typing import Callable

import numpy as np
import sympy
from sympy.parsing.sympy_parser import convert_xor, parse_expr, standard_transformations

X = sympy.Symbol("x", real=True)
_FUNCTIONS = {"sin": sympy.sin, "cos": sympy.cos, "exp": sympy.exp}
_LOCALS = {"x": X, "i": sympy.I, "I": sympy.I, "pi": sympy.pi, **_FUNCTIONS}
_TOKEN = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
_ALLOWED_CHARS = re.compile(r"^[0-9A-Za-z_+\-*/^().\s]*$")


def parse_symbol_expression(text: str) -> sympy.Expr:
    if not text.strip():
        raise ValueError("empty expression")
    if not _ALLOWED_CHARS.match(text):
        raise ValueError(f"unexpected character in expression {text!r}")
    unknown = sorted(set(_TOKEN.findall(text)) - set(_LOCALS))
    if unknown:
        raise ValueError(f"unknown names {', '.join(unknown)} in expression {text!r}")
    try:
        expr = parse_expr(text, local_dict=dict(_LOCALS), transformations=standard_transformations + (convert_xor,))
    except (SyntaxError, TypeError, sympy.SympifyError) as exc:
        raise ValueError(f"cannot parse expression {text!r}: {exc}") from exc
    if not isinstance(expr, sympy.Expr) or expr.free_symbols - {X}:
        raise ValueError(f"expression {text!r} must depend on x only")
    return expr


def compile_expression(text: str) -> Callable[[np.ndarray], np.ndarray]:
    """numpy callable t -> value for an expression in x."""
    expr = parse_symbol_expression(text)
    func = sympy.lambdify(X, expr, "numpy")

    def evaluate(t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return np.broadcast_to(np.asarray(func(t), dtype=complex), t.shape)

    return evaluate

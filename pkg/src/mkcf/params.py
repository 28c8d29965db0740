"""Expansion-family parameters and high-precision number plumbing.

Every real in the package is an mpmath ``mpf`` carried at
``Params.precision_bits`` working precision (round to nearest), or an exact
``fractions.Fraction`` when callers want exact rational arithmetic.  Seeds
and the parameter k enter as expression strings ("0.7", "3/2", "sqrt(2)")
so that runs replay exactly across sessions.
"""

from __future__ import annotations

import ast
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

from mpmath import mp, mpf

Real = Union[mpf, Fraction, int]

_FUNCTIONS = {"sqrt": mp.sqrt, "ln": mp.ln, "log": mp.log, "exp": mp.exp}
_CONSTANTS = {"pi": lambda: +mp.pi, "e": lambda: +mp.e, "phi": lambda: +mp.phi}


class ExpressionError(ValueError):
    """Raised for expressions outside the supported arithmetic grammar."""


def _eval_node(node: ast.AST, source: str):
    if isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            raise ExpressionError(f"unsupported literal {node.value!r}")
        if isinstance(node.value, int):
            return mpf(node.value)
        # Re-parse float literals from source text so "1.1" is rounded once,
        # at working precision, not through a 53-bit Python float.
        text = ast.get_source_segment(source, node)
        return mpf(text if text is not None else repr(node.value))
    if isinstance(node, ast.BinOp):
        left = _eval_node(node.left, source)
        right = _eval_node(node.right, source)
        if isinstance(node.op, ast.Add):
            return left + right
        if isinstance(node.op, ast.Sub):
            return left - right
        if isinstance(node.op, ast.Mult):
            return left * right
        if isinstance(node.op, ast.Div):
            return left / right
        if isinstance(node.op, ast.Pow):
            return left ** right
        raise ExpressionError(f"unsupported operator {type(node.op).__name__}")
    if isinstance(node, ast.UnaryOp):
        value = _eval_node(node.operand, source)
        if isinstance(node.op, ast.USub):
            return -value
        if isinstance(node.op, ast.UAdd):
            return value
        raise ExpressionError(f"unsupported operator {type(node.op).__name__}")
    if isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCTIONS:
            raise ExpressionError("only sqrt/ln/log/exp calls are allowed")
        if len(node.args) != 1 or node.keywords:
            raise ExpressionError(f"{node.func.id} takes exactly one argument")
        return _FUNCTIONS[node.func.id](_eval_node(node.args[0], source))
    if isinstance(node, ast.Name):
        if node.id in _CONSTANTS:
            return _CONSTANTS[node.id]()
        raise ExpressionError(f"unknown name {node.id!r}")
    raise ExpressionError(f"unsupported syntax {type(node).__name__}")


def parse_real(expr: str, precision_bits: int) -> mpf:
    """Evaluate an arithmetic expression string at the given precision."""
    try:
        tree = ast.parse(expr.strip(), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {expr!r}: {exc}") from None
    with mp.workprec(precision_bits):
        return _eval_node(tree.body, expr.strip())


def real_to_expr(x: Real) -> str:
    """Exact, precision-portable expression string for a computed real.

    mpf values serialize as mantissa * 2**exponent so that re-parsing at any
    precision at least as large reproduces the value bit for bit.
    """
    if isinstance(x, int):
        return str(x)
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}" if x.denominator != 1 else str(x.numerator)
    sign, man, exp, _ = x._mpf_
    if man == 0:
        return "0"
    man = -man if sign else man
    if exp == 0:
        return str(man)
    if exp > 0:
        return f"{man}*2**{exp}"
    return f"{man}/2**{-exp}"


@dataclass(frozen=True)
class Params:
    """Family selector: orientation m, parameter k, and precision budget.

    k may be passed as an expression string; it is parsed once at
    ``precision_bits`` and kept alongside its source text.
    """

    m: int
    k: Real
    precision_bits: int = 256
    max_depth: int = 40
    k_expr: str = field(default="", compare=False)

    def __post_init__(self):
        if self.m not in (0, 1):
            raise ValueError(f"m must be 0 or 1, got {self.m}")
        if self.precision_bits < 64:
            raise ValueError(f"precision_bits must be >= 64, got {self.precision_bits}")
        if self.max_depth < 1:
            raise ValueError(f"max_depth must be >= 1, got {self.max_depth}")
        k = self.k
        if isinstance(k, str):
            expr = k
            k = parse_real(expr, self.precision_bits)
            object.__setattr__(self, "k", k)
            object.__setattr__(self, "k_expr", expr)
        elif not self.k_expr:
            object.__setattr__(self, "k_expr", real_to_expr(k) if not isinstance(k, float) else repr(k))
        if isinstance(self.k, float):
            object.__setattr__(self, "k", mpf(self.k))
        if not self.k >= 1:
            raise ValueError(f"k must be >= 1, got {self.k}")

    @property
    def zero_threshold(self) -> mpf:
        """Futures below this are taken as exact zero (finite expansion)."""
        return mpf(2) ** (-self.precision_bits + 8)

    @property
    def boundary_tolerance(self) -> mpf:
        """Distance to a cylinder boundary below which floor() is untrusted."""
        return mpf(2) ** (-self.precision_bits // 2)

    @property
    def bound_tolerance(self) -> mpf:
        """Slack used when checking inequalities against computed bounds."""
        return mpf(2) ** (-self.precision_bits // 4)

    def config_dict(self) -> dict:
        return {
            "m": self.m,
            "k": self.k_expr,
            "precision_bits": self.precision_bits,
            "max_depth": self.max_depth,
        }

"""Text specs for test functions: ``name[:arg1,arg2,...]``.

    poly:c0,c1,...   Σ c_i x^i
    abs:c            |x - c|
    sin:w / cos:w    sin(w x) / cos(w x)
    exp:w            exp(w x)
    sqrt             √x
    prod2:A;B        A(t) * B(s)
    sum2:A;B         A(t) + B(s)

Arguments are decimal reals.  Errors carry the byte offset of the offending
token.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from .functions import BivariateFunction, ScalarFunction

__all__ = ["FunctionSpec", "FunctionSpecError", "parse_function_spec", "build_function", "REGISTRY"]

_REAL = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?\Z")
_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

# name -> (min args, max args); None means unbounded
REGISTRY = {
    "poly": (1, None),
    "abs": (1, 1),
    "sin": (1, 1),
    "cos": (1, 1),
    "exp": (1, 1),
    "sqrt": (0, 0),
    "prod2": (2, 2),
    "sum2": (2, 2),
}
BIVARIATE = ("prod2", "sum2")


class FunctionSpecError(ValueError):
    def __init__(self, message: str, offset: int, text: str):
        super().__init__(f"{message} at byte {offset} in {text!r}")
        self.offset = offset
        self.text = text


@dataclass(frozen=True)
class FunctionSpec:
    name: str
    args: Tuple[float, ...] = ()
    parts: Tuple["FunctionSpec", ...] = ()
    text: str = ""

    @property
    def bivariate(self) -> bool:
        return self.name in BIVARIATE

    def build(self) -> Union[ScalarFunction, BivariateFunction]:
        return build_function(self)


def _byte_offset(text: str, char_index: int) -> int:
    return len(text[:char_index].encode("utf-8"))


def _parse(text: str, start: int, full: str, allow_bivariate: bool) -> FunctionSpec:
    name, sep, rest = text.partition(":")
    if not _NAME.match(name):
        raise FunctionSpecError(f"malformed function name {name!r}", _byte_offset(full, start), full)
    if name not in REGISTRY:
        raise FunctionSpecError(f"unknown function {name!r}", _byte_offset(full, start), full)
    lo, hi = REGISTRY[name]
    arg_start = start + len(name) + len(sep)
    if name in BIVARIATE:
        if not allow_bivariate:
            raise FunctionSpecError(f"{name} cannot be nested", _byte_offset(full, start), full)
        pieces = rest.split(";") if sep else []
        if len(pieces) != 2:
            raise FunctionSpecError(f"{name} takes 2 specs separated by ';', got {len(pieces)}",
                                    _byte_offset(full, arg_start), full)
        a = _parse(pieces[0], arg_start, full, False)
        b = _parse(pieces[1], arg_start + len(pieces[0]) + 1, full, False)
        return FunctionSpec(name, (), (a, b), text)
    tokens = rest.split(",") if sep else []
    n = len(tokens)
    if n < lo or (hi is not None and n > hi):
        want = f"{lo}" if lo == hi else f"at least {lo}"
        raise FunctionSpecError(f"{name} takes {want} argument(s), got {n}",
                                _byte_offset(full, arg_start), full)
    args = []
    pos = arg_start
    for tok in tokens:
        if not _REAL.match(tok.strip()) or tok != tok.strip():
            raise FunctionSpecError(f"malformed real {tok!r}", _byte_offset(full, pos), full)
        value = float(tok)
        if not math.isfinite(value):
            raise FunctionSpecError(f"non-finite real {tok!r}", _byte_offset(full, pos), full)
        args.append(value)
        pos += len(tok) + 1
    return FunctionSpec(name, tuple(args), (), text)


def parse_function_spec(text: str) -> FunctionSpec:
    if not isinstance(text, str) or not text:
        raise FunctionSpecError("empty function spec", 0, str(text))
    return _parse(text, 0, text, True)


def _poly(c):
    coef = np.asarray(c, dtype=float)
    dcoef = coef[1:] * np.arange(1, coef.size)

    def f(t):
        return np.polynomial.polynomial.polyval(t, coef) * np.ones_like(t)

    def df(t):
        return np.polynomial.polynomial.polyval(t, dcoef) * np.ones_like(t) if dcoef.size else np.zeros_like(t)

    return f, df


def _univariate(spec: FunctionSpec) -> ScalarFunction:
    name, a = spec.name, spec.args
    label = spec.text or name
    if name == "poly":
        f, df = _poly(a)
        sup = abs(a[0]) if len(a) == 1 else None
        return ScalarFunction(f, sup_bound=sup, derivative=df, label=label)
    if name == "abs":
        c = a[0]
        return ScalarFunction(lambda t: np.abs(t - c), derivative=lambda t: np.sign(t - c),
                              smooth=False, label=label)
    if name == "sin":
        w = a[0]
        return ScalarFunction(lambda t: np.sin(w * t), sup_bound=1.0,
                              derivative=lambda t: w * np.cos(w * t), label=label)
    if name == "cos":
        w = a[0]
        return ScalarFunction(lambda t: np.cos(w * t), sup_bound=1.0,
                              derivative=lambda t: -w * np.sin(w * t), label=label)
    if name == "exp":
        w = a[0]
        return ScalarFunction(lambda t: np.exp(w * t), derivative=lambda t: w * np.exp(w * t), label=label)
    if name == "sqrt":
        return ScalarFunction(np.sqrt, smooth=False, label=label)
    raise ValueError(f"{name} is not univariate")


def build_function(spec: FunctionSpec) -> Union[ScalarFunction, BivariateFunction]:
    if not spec.bivariate:
        return _univariate(spec)
    g, h = (_univariate(p) for p in spec.parts)
    make = BivariateFunction.product if spec.name == "prod2" else BivariateFunction.sum
    out = make(g, h)
    if spec.name == "prod2" and g.sup_bound is not None and h.sup_bound is not None:
        out = BivariateFunction(out.func, out.domain, out.factors, out.combine, out.partial_t,
                                out.partial_s, out.smooth, g.sup_bound * h.sup_bound, spec.text)
    else:
        out = BivariateFunction(out.func, out.domain, out.factors, out.combine, out.partial_t,
                                out.partial_s, out.smooth, None, spec.text)
    return out

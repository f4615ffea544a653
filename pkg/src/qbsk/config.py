"""Run-config parsing and validation for the command-line harness.

Every check reports the dotted path of the offending field.  All validation
happens before any computation starts.
"""

from __future__ import annotations

import itertools
import json
import math
import warnings
from typing import Any, List, Optional, Tuple

import numpy as np

from . import batteries
from .bivariate import BivariateParams, BivGridPolicy
from .funcspec import FunctionSpecError, parse_function_spec
from .moduli import THEOREMS_1D, THEOREMS_2D, GridPolicy
from .operators import OperatorParams, ParameterRangeWarning, uniform_grid
from .qcore import TruncationPolicy
from .summability import QSequence

__all__ = ["ConfigError", "load_config", "apply_overrides"]

PARAM_KEYS = ("n", "l", "alpha", "beta", "q")
FUNCTION_BATTERIES = {
    "standard": batteries.standard_functions,
    "lip": batteries.lip_functions,
    "full": batteries.full_function_battery,
    "bivariate": batteries.bivariate_functions,
}


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


_COMMON_KEYS = ("format", "out", "grid", "tol", "s_max", "functions", "f")
TOP_KEYS = {
    "moments": _COMMON_KEYS + ("params", "battery", "orders", "tolerance"),
    "converge": _COMMON_KEYS + ("params", "q_sequence", "assert"),
    "bounds": _COMMON_KEYS + ("params", "battery", "theorems", "bivariate_functions", "test_mode", "xi", "s",
                              "x_min", "moduli"),
    "stat": _COMMON_KEYS + ("params", "q_sequence", "e_index", "eps", "n_max", "matrix", "assert"),
    "bivariate": _COMMON_KEYS + ("mode", "px", "py", "battery", "n", "q_sequence", "assert", "tolerance"),
}


def check_top_keys(cfg: dict, command: str) -> None:
    for key in cfg:
        if key not in TOP_KEYS[command]:
            raise ConfigError(key, f"unknown field for '{command}'")


def load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except FileNotFoundError:
        raise ConfigError("config", f"file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config", "top level must be a JSON object")
    return cfg


def apply_overrides(cfg: dict, overrides: dict) -> dict:
    """Return a copy of ``cfg`` with command-line overrides folded in.

    Operator overrides (``n``, ``l``, ``alpha``, ``beta``, ``q``) go into the
    ``params`` object and replace a ``battery``.
    """
    cfg = json.loads(json.dumps(cfg))
    ops = {k: v for k, v in overrides.items() if k in PARAM_KEYS and v is not None}
    if ops:
        params = cfg.get("params")
        if params is None or not isinstance(params, dict):
            params = {}
        params.update(ops)
        cfg["params"] = params
        cfg.pop("battery", None)
        if "q" in ops:
            cfg.pop("q_sequence", None)
    if overrides.get("f") is not None:
        cfg["functions"] = [overrides["f"]]
        cfg.pop("f", None)
    if overrides.get("grid") is not None:
        cfg["grid"] = overrides["grid"]
    if overrides.get("tol") is not None:
        cfg["tol"] = overrides["tol"]
    if overrides.get("out") is not None:
        cfg["out"] = overrides["out"]
    if overrides.get("format") is not None:
        cfg["format"] = overrides["format"]
    return cfg


# scalar readers -----------------------------------------------------------

def _real(value: Any, path: str, *, positive: bool = False, nonneg: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a real number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(path, "must be finite")
    if positive and not value > 0:
        raise ConfigError(path, f"must be > 0, got {value}")
    if nonneg and value < 0:
        raise ConfigError(path, f"must be >= 0, got {value}")
    return value


def _int(value: Any, path: str, minimum: int = None) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or float(value) != int(value):
        raise ConfigError(path, f"expected an integer, got {value!r}")
    value = int(value)
    if minimum is not None and value < minimum:
        raise ConfigError(path, f"must be >= {minimum}, got {value}")
    return value


def _list(value: Any, path: str) -> list:
    return value if isinstance(value, list) else [value]


def _known_keys(obj: dict, allowed, path: str) -> None:
    for key in obj:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}", "unknown field")


# structured readers -------------------------------------------------------

def _make_params(values: dict, path: str) -> OperatorParams:
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ParameterRangeWarning)
            return OperatorParams(values["n"], values.get("l", 0), values.get("alpha", 0.0),
                                  values.get("beta", 0.0), values.get("q", 0.9))
    except ValueError as exc:
        msg = str(exc)
        field = msg.split(" ", 1)[0]
        if field in PARAM_KEYS and field in values:
            path = f"{path}.{field}"
        raise ConfigError(path, msg) from None


def param_grid(obj: Any, path: str, *, need_n: bool = True) -> List[dict]:
    """Cartesian product of a params object whose fields are scalars or lists."""
    if isinstance(obj, list):
        out = []
        for i, item in enumerate(obj):
            out.extend(param_grid(item, f"{path}[{i}]", need_n=need_n))
        return out
    if not isinstance(obj, dict):
        raise ConfigError(path, "expected an object or a list of objects")
    _known_keys(obj, PARAM_KEYS, path)
    if need_n and "n" not in obj:
        raise ConfigError(f"{path}.n", "required")
    columns = []
    for key in PARAM_KEYS:
        if key not in obj:
            continue
        vals = _list(obj[key], f"{path}.{key}")
        if not vals:
            raise ConfigError(f"{path}.{key}", "empty list")
        if key in ("n", "l"):
            vals = [_int(v, f"{path}.{key}", 1 if key == "n" else 0) for v in vals]
        else:
            vals = [_real(v, f"{path}.{key}") for v in vals]
        columns.append((key, vals))
    keys = [k for k, _ in columns]
    return [dict(zip(keys, combo)) for combo in itertools.product(*[v for _, v in columns])]


def operator_cases(cfg: dict, *, default_q: bool = True) -> List[Tuple[OperatorParams, Optional[int]]]:
    """Operator parameter cases and the battery seed they came from (None if not random)."""
    if "battery" in cfg:
        bat = cfg["battery"]
        if not isinstance(bat, dict):
            raise ConfigError("battery", "expected an object")
        _known_keys(bat, ("kind", "seed", "size", "n_max", "l_max", "q_min", "q_max"), "battery")
        kind = bat.get("kind", "random")
        if kind == "standard":
            return [(p, None) for p in batteries.standard_params()]
        if kind != "random":
            raise ConfigError("battery.kind", f"expected 'random' or 'standard', got {kind!r}")
        seed = _int(bat.get("seed", batteries.DEFAULT_SEED), "battery.seed", 0)
        size = _int(bat.get("size", 200), "battery.size", 0)
        n_max = _int(bat.get("n_max", 30), "battery.n_max", 1)
        l_max = _int(bat.get("l_max", 3), "battery.l_max", 0)
        q_lo = _real(bat.get("q_min", 0.3), "battery.q_min")
        q_hi = _real(bat.get("q_max", 0.99), "battery.q_max")
        if not 0 < q_lo <= q_hi < 1:
            raise ConfigError("battery", "need 0 < q_min <= q_max < 1")
        return [(p, seed) for p in batteries.random_params(size, seed, n_max, l_max, (q_lo, q_hi))]
    if "params" not in cfg:
        raise ConfigError("params", "required (or give a battery)")
    rows = param_grid(cfg["params"], "params")
    return [(_make_params(r, "params"), None) for r in rows]


def templates(cfg: dict, key: str = "params", *, need_n: bool = True) -> List[dict]:
    """Params objects without ``q`` whose ``n`` may be a list; used with a q-sequence."""
    if key not in cfg:
        raise ConfigError(key, "required")
    rows = param_grid(cfg[key], key, need_n=need_n)
    for r in rows:
        _make_params({"n": 1, **r, "q": 0.5}, key)
    return rows


def q_schedule(cfg: dict) -> Optional[QSequence]:
    if "q_sequence" not in cfg:
        return None
    obj = cfg["q_sequence"]
    if not isinstance(obj, dict):
        raise ConfigError("q_sequence", "expected an object")
    _known_keys(obj, ("kind", "a", "c"), "q_sequence")
    kind = obj.get("kind")
    if kind not in ("power_root", "harmonic", "constant"):
        raise ConfigError("q_sequence.kind", f"expected power_root, harmonic or constant, got {kind!r}")
    a = _real(obj["a"], "q_sequence.a") if "a" in obj else None
    c = _real(obj["c"], "q_sequence.c") if "c" in obj else None
    try:
        return QSequence(kind, a=a, c=c)
    except ValueError as exc:
        raise ConfigError("q_sequence", str(exc)) from None


def functions(cfg: dict, *, bivariate: Optional[bool] = None, default=None, key: str = "functions") -> list:
    if key == "functions" and key not in cfg and "f" in cfg:
        key = "f"
    raw = cfg.get(key, default)
    path = key
    if raw is None:
        raise ConfigError(key, "required")
    if isinstance(raw, str) and raw in FUNCTION_BATTERIES:
        out = FUNCTION_BATTERIES[raw]()
    else:
        out = []
        for i, text in enumerate(_list(raw, path)):
            where = f"{path}[{i}]" if isinstance(raw, list) else path
            if not isinstance(text, str):
                raise ConfigError(where, f"expected a function spec string, got {text!r}")
            if text in FUNCTION_BATTERIES:
                out.extend(FUNCTION_BATTERIES[text]())
                continue
            try:
                out.append(parse_function_spec(text).build())
            except FunctionSpecError as exc:
                raise ConfigError(where, str(exc)) from None
    if bivariate is not None:
        from .functions import BivariateFunction

        for i, f in enumerate(out):
            if isinstance(f, BivariateFunction) != bivariate:
                kind = "bivariate" if bivariate else "univariate"
                raise ConfigError(f"{path}[{i}]", f"expected a {kind} function, got {f.label!r}")
    return out


def x_grid(cfg: dict, default: int, key: str = "grid") -> np.ndarray:
    raw = cfg.get(key, default)
    if isinstance(raw, list):
        xs = np.array([_real(v, f"{key}[{i}]") for i, v in enumerate(raw)])
        if np.any((xs < 0) | (xs > 1)):
            raise ConfigError(key, "points must lie in [0, 1]")
        return xs
    return uniform_grid(_int(raw, key, 2))


def truncation(cfg: dict) -> TruncationPolicy:
    tol = _real(cfg.get("tol", 1e-12), "tol", positive=True)
    s_max = cfg.get("s_max")
    return TruncationPolicy(tol, None if s_max is None else _int(s_max, "s_max", 1))


def reals(cfg: dict, key: str, default, *, positive: bool = False) -> List[float]:
    return [_real(v, f"{key}[{i}]", positive=positive) for i, v in enumerate(_list(cfg.get(key, default), key))]


def ints(cfg: dict, key: str, default, minimum: int = None) -> List[int]:
    raw = cfg.get(key, default)
    if raw is None:
        raise ConfigError(key, "required")
    return [_int(v, f"{key}[{i}]", minimum) for i, v in enumerate(_list(raw, key))]


def grid_policy(cfg: dict, eval_points: int) -> GridPolicy:
    obj = cfg.get("moduli", {})
    if not isinstance(obj, dict):
        raise ConfigError("moduli", "expected an object")
    _known_keys(obj, ("sup_points", "refine", "pair_points"), "moduli")
    sup = _int(obj.get("sup_points", max(4096, 4 * eval_points)), "moduli.sup_points", 1)
    try:
        return GridPolicy(eval_points=eval_points, sup_points=sup,
                          refine=bool(obj.get("refine", True)),
                          pair_points=_int(obj.get("pair_points", 2 ** 11), "moduli.pair_points", 8),
                          max_points=max(2 ** 20, sup))
    except ValueError as exc:
        raise ConfigError("moduli", str(exc)) from None


def biv_grid_policy(cfg: dict, eval_points: int) -> BivGridPolicy:
    obj = cfg.get("moduli", {})
    if not isinstance(obj, dict):
        raise ConfigError("moduli", "expected an object")
    sup = _int(obj.get("sup_points", max(128, 4 * eval_points)), "moduli.sup_points", 1)
    try:
        return BivGridPolicy(eval_points=eval_points, sup_points=sup, refine=bool(obj.get("refine", True)),
                             max_points=max(512, sup),
                             pair_points=_int(obj.get("pair_points", 24), "moduli.pair_points", 2))
    except ValueError as exc:
        raise ConfigError("moduli", str(exc)) from None


def bivariate_cases(cfg: dict) -> List[Tuple[BivariateParams, Optional[int]]]:
    if "battery" in cfg:
        bat = cfg["battery"]
        if not isinstance(bat, dict):
            raise ConfigError("battery", "expected an object")
        kind = bat.get("kind", "random")
        if kind == "standard":
            return [(bp, None) for bp in batteries.bivariate_params()]
        if kind != "random":
            raise ConfigError("battery.kind", f"expected 'random' or 'standard', got {kind!r}")
        seed = _int(bat.get("seed", batteries.DEFAULT_SEED + 1), "battery.seed", 0)
        size = _int(bat.get("size", 50), "battery.size", 0)
        return [(bp, seed) for bp in batteries.random_bivariate_params(size, seed)]
    for key in ("px", "py"):
        if key not in cfg:
            raise ConfigError(key, "required (or give a battery)")
    xs = [_make_params(r, "px") for r in param_grid(cfg["px"], "px")]
    ys = [_make_params(r, "py") for r in param_grid(cfg["py"], "py")]
    return [(BivariateParams(a, b), None) for a in xs for b in ys]


def theorem_ids(cfg: dict) -> List[str]:
    raw = cfg.get("theorems")
    if raw is None:
        raise ConfigError("theorems", "required")
    ids = _list(raw, "theorems")
    for i, t in enumerate(ids):
        if t not in THEOREMS_1D + THEOREMS_2D:
            raise ConfigError(f"theorems[{i}]", f"unknown theorem id {t!r}")
    return ids


def output_format(cfg: dict) -> str:
    fmt = cfg.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError("format", f"expected 'csv' or 'json', got {fmt!r}")
    return fmt

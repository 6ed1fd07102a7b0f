"""Scenario configuration files (JSON) and their validation.

Schema, version 1::

    {
      "version": 1,
      "seed": 0,
      "domain": {"type": "interval", "length": "pi"}
              | {"type": "rectangle", "lengths": ["pi", "pi/2"], "ratios": ["4"]},
      "coefficient": {"kind": "constant", "value": 1}
                   | {"kind": "piecewise", "breakpoints": ["pi/2"], "values": [1, 4],
                      "form": "divergence"}
                   | {"kind": "smooth", "a": "(1 + x/pi)**2", "rho": "1", "q": "0",
                      "grid_size": 4000},
      "damping": {"viscous": [REGION, ...], "kelvin_voigt": [REGION, ...]},
      "analysis": {...},
      "output": {"directory": "out/name"}
    }

    REGION = {"lo": [1.0], "hi": [1.5], "value": 1.0, "taper": 0.0}

Numbers may be given as expression strings over ``pi``, ``e``, ``x`` and the
functions ``sqrt, exp, log, sin, cos, tan, arctan, abs``; rationals such as
``"3/2"`` stay exact where exactness matters. The ``analysis`` keys and
their defaults are listed in ``ANALYSIS_DEFAULTS``.
"""

from __future__ import annotations

import ast
import json
import math
import operator
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

import mpmath
import numpy as np

from .damping import DampingConfig, Region
from .errors import InvalidArgument
from .spectral import Coefficient1D, Domain1D, RectangleDomain

SCHEMA_VERSION = 1

ANALYSIS_DEFAULTS: dict[str, Any] = {
    "k_max": 200,                # interval spectra
    "lambda_cap": None,          # rectangle spectra
    "tuple_budget": 20_000_000,
    "dense_modes": 400,          # Gram truncation used for ||B|| and the resolvent
    "truncation": 100,           # resolvent finite section (eigenspaces); doubled for the check
    "omega_points": 200,
    "omega_k_top": None,         # default: truncation // 2
    "m_pred": None,              # default: from gamma0, gamma1
    "gamma0": None,
    "gamma1": None,
    "scenario": None,            # catalogue row for `predict`
    "epsilon": "1/10",           # Roth exponent and catalogue epsilon
    "xi": None,                  # overrides L1^2/L2^2 for the gap bounds
    "search_cap": 50,
    "witness_epsilons": ["1", "1/10", "1/100"],
    "modes": 128,
    "t_end": 10000.0,
    "dt": 0.01,
    "samples": 4000,
    "tail_fraction": 0.5,
    "initial_data": "smooth",
    "fit_window": 0.5,
}


class ConfigError(InvalidArgument):
    """A configuration field is missing or invalid."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


# ---------------------------------------------------------------------------
# expressions
# ---------------------------------------------------------------------------

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNOPS = {ast.USub: operator.neg, ast.UAdd: operator.pos}
_FUNCS = ("sqrt", "exp", "log", "sin", "cos", "tan", "arctan", "abs")


def _namespace(backend: str) -> dict:
    if backend == "mpmath":
        funcs = {name: getattr(mpmath, "atan" if name == "arctan" else ("fabs" if name == "abs" else name))
                 for name in _FUNCS}
        return {"pi": mpmath.pi, "e": mpmath.e, **funcs}
    funcs = {name: getattr(np, name) for name in _FUNCS}
    return {"pi": math.pi, "e": math.e, **funcs}


def compile_expression(text: str, variables: tuple[str, ...] = (), backend: str = "numpy") -> Callable:
    """Compile an arithmetic expression into a function of ``variables``."""
    try:
        tree = ast.parse(str(text), mode="eval")
    except SyntaxError as exc:
        raise InvalidArgument(f"cannot parse expression {text!r}") from exc
    ns = _namespace(backend)

    def ev(node, env):
        if isinstance(node, ast.Expression):
            return ev(node.body, env)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return mpmath.mpf(node.value) if backend == "mpmath" else node.value
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left, env), ev(node.right, env))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
            return _UNOPS[type(node.op)](ev(node.operand, env))
        if isinstance(node, ast.Name):
            if node.id in env:
                return env[node.id]
            if node.id in ns and node.id not in _FUNCS:
                return ns[node.id]
            raise InvalidArgument(f"unknown name {node.id!r} in {text!r}")
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS
                and len(node.args) == 1 and not node.keywords):
            return ns[node.func.id](ev(node.args[0], env))
        raise InvalidArgument(f"unsupported syntax in {text!r}")

    # validate eagerly
    probe = {v: 1.0 for v in variables}
    ev(tree, probe)

    def fn(*args):
        return ev(tree, dict(zip(variables, args)))

    return fn


def number(value, path: str = "value") -> float:
    if isinstance(value, bool):
        raise ConfigError(path, "expected a number")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(compile_expression(value)())
        except (InvalidArgument, ZeroDivisionError, OverflowError) as exc:
            raise ConfigError(path, str(exc)) from exc
    raise ConfigError(path, "expected a number or an expression string")


def rational(value, path: str = "value") -> Fraction | None:
    """An exact rational if ``value`` is an int or a ``p/q`` string, else None."""
    if isinstance(value, bool):
        raise ConfigError(path, "expected a number")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.replace(" ", ""))
        except (ValueError, ZeroDivisionError):
            return None
    return None


# ---------------------------------------------------------------------------
# configuration object
# ---------------------------------------------------------------------------


@dataclass
class ScenarioConfig:
    name: str
    seed: int
    domain: Domain1D | RectangleDomain
    coefficient: Coefficient1D
    form: str
    grid_size: int | None
    damping: DampingConfig | None
    analysis: dict
    output: Path
    raw: dict = field(default_factory=dict)

    @property
    def is_interval(self) -> bool:
        return isinstance(self.domain, Domain1D)


def _require(d: dict, key: str, path: str):
    if not isinstance(d, dict):
        raise ConfigError(path, "expected an object")
    if key not in d:
        raise ConfigError(f"{path}.{key}", "missing")
    return d[key]


def _parse_domain(d, path="domain"):
    kind = _require(d, "type", path)
    if kind == "interval":
        length = number(_require(d, "length", path), f"{path}.length")
        try:
            return Domain1D(length)
        except InvalidArgument as exc:
            raise ConfigError(f"{path}.length", str(exc)) from exc
    if kind == "rectangle":
        lengths = _require(d, "lengths", path)
        if not isinstance(lengths, list) or len(lengths) < 2:
            raise ConfigError(f"{path}.lengths", "need a list of at least two lengths")
        vals = tuple(number(v, f"{path}.lengths[{i}]") for i, v in enumerate(lengths))
        ratios = None
        if "ratios" in d:
            ratios = []
            for i, r in enumerate(d["ratios"]):
                f = rational(r, f"{path}.ratios[{i}]")
                if f is None:
                    raise ConfigError(f"{path}.ratios[{i}]", "expected an exact rational p/q")
                expect = (vals[0] / vals[i + 1]) ** 2
                if abs(float(f) - expect) > 1e-9 * expect:
                    raise ConfigError(f"{path}.ratios[{i}]", f"{f} does not match the lengths ({expect:.12g})")
                ratios.append(f)
        try:
            return RectangleDomain(vals, tuple(ratios) if ratios else None)
        except InvalidArgument as exc:
            raise ConfigError(f"{path}.lengths", str(exc)) from exc
    raise ConfigError(f"{path}.type", f"unknown domain type {kind!r}")


def _parse_coefficient(d, domain, path="coefficient"):
    if d is None:
        return Coefficient1D.constant(1.0), "divergence", None
    kind = _require(d, "kind", path)
    form = d.get("form", "divergence")
    if form not in ("divergence", "nondivergence"):
        raise ConfigError(f"{path}.form", f"unknown form {form!r}")
    grid = d.get("grid_size")
    try:
        if kind == "constant":
            coeff = Coefficient1D.constant(number(d.get("value", 1.0), f"{path}.value"))
        elif kind == "piecewise":
            bps = [number(v, f"{path}.breakpoints") for v in _require(d, "breakpoints", path)]
            vals = [number(v, f"{path}.values") for v in _require(d, "values", path)]
            coeff = Coefficient1D.piecewise(bps, vals)
        elif kind == "smooth":
            fns = {}
            for key in ("a", "rho", "q"):
                if key in d:
                    fns[key] = compile_expression(d[key], ("x",))
            coeff = Coefficient1D.smooth(fns.get("a"), fns.get("rho"), fns.get("q"))
            if grid is None:
                raise ConfigError(f"{path}.grid_size", "missing (required for smooth coefficients)")
        else:
            raise ConfigError(f"{path}.kind", f"unknown coefficient kind {kind!r}")
        if isinstance(domain, Domain1D):
            coeff.validate(domain)
        elif kind != "constant" or coeff.value != 1.0:
            raise ConfigError(path, "rectangles support only the Laplacian (constant 1)")
    except ConfigError:
        raise
    except InvalidArgument as exc:
        raise ConfigError(path, str(exc)) from exc
    return coeff, form, (int(grid) if grid is not None else None)


def _parse_regions(items, dim, path):
    if not isinstance(items, list):
        raise ConfigError(path, "expected a list of regions")
    out = []
    for i, r in enumerate(items):
        p = f"{path}[{i}]"
        lo = [number(v, f"{p}.lo") for v in _require(r, "lo", p)]
        hi = [number(v, f"{p}.hi") for v in _require(r, "hi", p)]
        if len(lo) != dim or len(hi) != dim:
            raise ConfigError(p, f"region bounds need {dim} coordinates")
        try:
            out.append(Region(tuple(lo), tuple(hi), number(r.get("value", 1.0), f"{p}.value"),
                              number(r.get("taper", 0.0), f"{p}.taper")))
        except InvalidArgument as exc:
            raise ConfigError(p, str(exc)) from exc
    return tuple(out)


def _parse_damping(d, domain, path="damping"):
    if d is None:
        return None
    dim = len(domain.lengths)
    b1 = _parse_regions(d.get("viscous", []), dim, f"{path}.viscous")
    b2 = _parse_regions(d.get("kelvin_voigt", []), dim, f"{path}.kelvin_voigt")
    try:
        cfg = DampingConfig(b1, b2)
        cfg.validate(domain.lengths)
    except InvalidArgument as exc:
        raise ConfigError(path, str(exc)) from exc
    return cfg


def _parse_analysis(d, path="analysis"):
    d = {} if d is None else d
    if not isinstance(d, dict):
        raise ConfigError(path, "expected an object")
    unknown = set(d) - set(ANALYSIS_DEFAULTS)
    if unknown:
        raise ConfigError(f"{path}.{sorted(unknown)[0]}", "unknown analysis key")
    out = dict(ANALYSIS_DEFAULTS)
    out.update(d)
    for key in ("k_max", "tuple_budget", "dense_modes", "truncation", "omega_points", "search_cap", "modes",
                "samples"):
        v = out[key]
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            raise ConfigError(f"{path}.{key}", "expected a positive integer")
    for key in ("t_end", "dt", "tail_fraction", "fit_window"):
        out[key] = number(out[key], f"{path}.{key}")
        if not out[key] > 0:
            raise ConfigError(f"{path}.{key}", "must be positive")
    if out["lambda_cap"] is not None:
        out["lambda_cap"] = number(out["lambda_cap"], f"{path}.lambda_cap")
    if out["m_pred"] is not None:
        out["m_pred"] = number(out["m_pred"], f"{path}.m_pred")
    for key in ("gamma0", "gamma1"):
        if out[key] is not None:
            f = rational(out[key], f"{path}.{key}")
            out[key] = f if f is not None else number(out[key], f"{path}.{key}")
    eps = rational(out["epsilon"], f"{path}.epsilon")
    out["epsilon"] = eps if eps is not None else number(out["epsilon"], f"{path}.epsilon")
    out["witness_epsilons"] = [number(v, f"{path}.witness_epsilons") for v in out["witness_epsilons"]]
    if out["initial_data"] not in ("smooth", "rough"):
        raise ConfigError(f"{path}.initial_data", "expected 'smooth' or 'rough'")
    if out["xi"] is not None:
        f = rational(out["xi"], f"{path}.xi")
        if f is None:
            compile_expression(out["xi"], backend="mpmath")
        elif f <= 0:
            raise ConfigError(f"{path}.xi", "must be positive")
    return out


def parse_config(raw: dict, base: Path | None = None, name: str = "scenario") -> ScenarioConfig:
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "expected a JSON object")
    version = _require(raw, "version", "<root>")
    if version != SCHEMA_VERSION:
        raise ConfigError("version", f"unsupported schema version {version!r}")
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError("seed", "expected a nonnegative integer")
    domain = _parse_domain(_require(raw, "domain", "<root>"))
    coeff, form, grid = _parse_coefficient(raw.get("coefficient"), domain)
    damping = _parse_damping(raw.get("damping"), domain)
    analysis = _parse_analysis(raw.get("analysis"))
    if isinstance(domain, RectangleDomain) and analysis["lambda_cap"] is None:
        raise ConfigError("analysis.lambda_cap", "required for rectangle domains")
    out = raw.get("output", {})
    directory = out.get("directory") if isinstance(out, dict) else None
    if not isinstance(directory, str) or not directory:
        raise ConfigError("output.directory", "missing")
    path = Path(directory)
    if not path.is_absolute() and base is not None:
        path = base / path
    return ScenarioConfig(raw.get("name", name), seed, domain, coeff, form, grid, damping, analysis, path, raw)


def load_config(path: str | Path, output: str | Path | None = None) -> ScenarioConfig:
    """Read and validate a JSON scenario file.

    Relative output directories resolve against the current directory;
    ``output`` overrides the configured directory.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"invalid JSON: {exc}") from exc
    if output is not None and isinstance(raw, dict):
        raw = dict(raw)
        raw["output"] = {"directory": str(output)}
    return parse_config(raw, Path.cwd(), path.stem)


def xi_value(cfg: ScenarioConfig):
    """``L_1^2 / L_2^2`` (or the configured override) as a Fraction or an mpmath thunk."""
    if cfg.analysis["xi"] is not None:
        f = rational(cfg.analysis["xi"])
        if f is not None:
            return f
        fn = compile_expression(cfg.analysis["xi"], backend="mpmath")
        return lambda: fn()
    if not isinstance(cfg.domain, RectangleDomain):
        return None
    r = cfg.domain.squared_ratios()[0]
    if r is not None:
        return r
    l1, l2 = cfg.raw["domain"]["lengths"][:2]
    f1 = compile_expression(str(l1), backend="mpmath")
    f2 = compile_expression(str(l2), backend="mpmath")
    return lambda: (f1() / f2()) ** 2

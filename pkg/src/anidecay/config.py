"""
Run configuration files.

Plain INI with four sections.  Every key, its type and its default:

======== ================== ======== ==========================================
section  key                type     default
======== ================== ======== ==========================================
grid     n_h                int      64
grid     n_v                int      32
grid     l_h                float    64*pi
grid     l_v                float    16*pi
time     dt                 float    0.01
time     t_end              float    50
time     cadence            float    0.1
time     viscosity_mode     str      anisotropic
time     snapshot_cadence   float    (none)
data     s                  float    0.5
data     s1                 float    4
data     c0                 float    0.05  (``none`` keeps the raw amplitude)
data     a_h                float    0
data     b_v                float    1
data     sigma              float    0.3
data     amplitude          float    1
data     seed               int      0
fit      t0                 float    5
fit      t1                 float    50
fit      tolerance          float    0.15
fit      gap_tolerance      float    0.25
fit      variant            str      primary
======== ================== ======== ==========================================

Floats accept arithmetic with ``pi`` (``64*pi``, ``pi/2``).  Overrides use
``section.key=value``.
"""

from __future__ import annotations

import ast
import configparser
import math
import operator

from .errors import ConfigError, EnvelopeError, ParameterGateError
from .initial_data import SpectralEnvelope
from .spectral import Grid3

KEYS = {
    "grid.n_h": (int, 64),
    "grid.n_v": (int, 32),
    "grid.l_h": (float, "64*pi"),
    "grid.l_v": (float, "16*pi"),
    "time.dt": (float, 0.01),
    "time.t_end": (float, 50.0),
    "time.cadence": (float, 0.1),
    "time.viscosity_mode": (str, "anisotropic"),
    "time.snapshot_cadence": (float, None),
    "data.s": (float, 0.5),
    "data.s1": (float, 4.0),
    "data.c0": (float, 0.05),
    "data.a_h": (float, 0.0),
    "data.b_v": (float, 1.0),
    "data.sigma": (float, 0.3),
    "data.amplitude": (float, 1.0),
    "data.seed": (int, 0),
    "fit.t0": (float, 5.0),
    "fit.t1": (float, 50.0),
    "fit.tolerance": (float, 0.15),
    "fit.gap_tolerance": (float, 0.25),
    "fit.variant": (str, "primary"),
}

_OPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
    ast.USub: operator.neg,
    ast.UAdd: operator.pos,
}


def _eval_number(text):
    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        raise ValueError(text)

    return ev(ast.parse(text.strip(), mode="eval"))


def _convert(key, kind, raw):
    if raw is None:
        return None
    if isinstance(raw, str) and raw.strip().lower() in ("none", ""):
        if KEYS[key][1] is None or key == "data.c0":
            return None
        raise ConfigError(f"{key}: a value is required")
    if kind is str:
        return str(raw).strip()
    if kind is int:
        try:
            text = str(raw).strip()
            value = int(text)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None
        return value
    try:
        value = _eval_number(str(raw)) if isinstance(raw, str) else float(raw)
    except (ValueError, SyntaxError, ZeroDivisionError, TypeError):
        raise ConfigError(f"{key}: expected a number (pi allowed), got {raw!r}") from None
    if not math.isfinite(value):
        raise ConfigError(f"{key}: value must be finite, got {raw!r}")
    return value


def _split_override(item):
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not of the form section.key=value")
    key, value = item.split("=", 1)
    return key.strip(), value.strip()


def load_settings(path=None, overrides=()):
    """Resolved ``{"section.key": value}`` with defaults filled in."""
    raw = {k: d for k, (_, d) in KEYS.items()}
    if path is not None:
        parser = configparser.ConfigParser(interpolation=None)
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file {path} does not exist") from None
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from None
        for section in parser.sections():
            for key, value in parser.items(section):
                full = f"{section}.{key}"
                if full not in KEYS:
                    raise ConfigError(f"{path}: unknown key {full!r}")
                raw[full] = value
    for item in overrides:
        key, value = _split_override(item)
        if key not in KEYS:
            raise ConfigError(f"override: unknown key {key!r}")
        raw[key] = value
    return {k: _convert(k, KEYS[k][0], v) for k, v in raw.items()}


def build_run_config(settings):
    """:class:`RunConfig` from resolved settings; validates the gate and envelope."""
    from .solver import RunConfig

    g = settings
    try:
        grid = Grid3(g["grid.n_h"], g["grid.n_v"], g["grid.l_h"], g["grid.l_v"])
        env = SpectralEnvelope(
            a_h=g["data.a_h"],
            b_v=g["data.b_v"],
            sigma=g["data.sigma"],
            amplitude=g["data.amplitude"],
            seed=g["data.seed"],
        )
        env.check_memberships(g["data.s"])
        cfg = RunConfig(
            grid=grid,
            dt=g["time.dt"],
            t_end=g["time.t_end"],
            viscosity_mode=g["time.viscosity_mode"],
            cadence=g["time.cadence"],
            envelope=env,
            s=g["data.s"],
            s1=g["data.s1"],
            c0=g["data.c0"],
            fit_window=(g["fit.t0"], g["fit.t1"]),
            seed=g["data.seed"],
            snapshot_cadence=g["time.snapshot_cadence"],
        )
    except (ConfigError, ParameterGateError, EnvelopeError):
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if g["fit.variant"] not in ("primary", "alternate"):
        raise ConfigError(f"fit.variant must be 'primary' or 'alternate', got {g['fit.variant']!r}")
    return cfg


def parse_config(path=None, overrides=()):
    return build_run_config(load_settings(path, overrides))

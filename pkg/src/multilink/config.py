"""JSON scenario configuration: parsing, validation, defaults.

The accepted document shape (defaults in parentheses; unknown keys are
rejected everywhere):

    {
      "scenario":   "inertial" | "manifold" | "speedup" | "fixed_points",
      "sign":       "plus" | "minus",          # manifold only, required there
      "vehicle":    {"m": [...], "I": [...], "a0": x, "a": [...], "c": [...],
                     "N": int (inferred)},
      "rotor":      {"kind": "sine", "amplitude": x, "period": x (1.0)},
      "initial":    {"v1": (1.0), "omega": (0.0), "phi": ([0...]),
                     "x": (0.0), "y": (0.0), "psi": (0.0)},
      "integrator": {"t_end": x, "method": ("adaptive-rk45") | "fixed-rk4",
                     "rtol": (1e-10), "atol": (1e-12), "h0": (1e-3),
                     "hmax": (inf), "sample_stride": (1)},
      "outputs":    {"directory": ("out"), "formats": (["csv","svg","report"])}
    }
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import PoseState, ReducedState
from .integrator import METHOD_RK4, METHOD_RK45, IntegratorOptions
from .model import (
    InvalidParameterError,
    RotorProfile,
    VehicleParams,
    sine_rotor,
)

SCENARIOS = ("inertial", "manifold", "speedup", "fixed_points")
FORMATS = ("csv", "svg", "report")


class ConfigError(ValueError):
    """Raised for malformed or invalid scenario configuration documents."""


@dataclass(frozen=True)
class OutputOptions:
    directory: str = "out"
    formats: tuple[str, ...] = FORMATS


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    vehicle: VehicleParams
    rotor: RotorProfile | None
    rotor_spec: dict | None
    initial: ReducedState
    pose: PoseState
    integrator: IntegratorOptions
    outputs: OutputOptions = field(default_factory=OutputOptions)
    sign: int | None = None  # +1 / -1 on manifold runs


def _check_keys(obj: dict, allowed, where: str):
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown} in {where}; "
                          f"allowed: {sorted(allowed)}")


def _number(obj, key, where, default=None, required=False):
    if key not in obj:
        if required:
            raise ConfigError(f"missing required field '{key}' in {where}")
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"field '{key}' in {where} must be a number")
    return float(v)


def _number_list(obj, key, where):
    if key not in obj:
        raise ConfigError(f"missing required field '{key}' in {where}")
    v = obj[key]
    if not isinstance(v, list) or any(
            isinstance(x, bool) or not isinstance(x, (int, float)) for x in v):
        raise ConfigError(f"field '{key}' in {where} must be a list of numbers")
    return [float(x) for x in v]


def _parse_vehicle(block) -> VehicleParams:
    if not isinstance(block, dict):
        raise ConfigError("'vehicle' must be an object")
    _check_keys(block, ("N", "m", "I", "a0", "a", "c"), "'vehicle'")
    masses = _number_list(block, "m", "'vehicle'")
    inertias = _number_list(block, "I", "'vehicle'")
    a = _number_list(block, "a", "'vehicle'")
    c = _number_list(block, "c", "'vehicle'")
    a0 = _number(block, "a0", "'vehicle'", required=True)
    n = len(masses) - 1
    if "N" in block:
        if not isinstance(block["N"], int) or isinstance(block["N"], bool):
            raise ConfigError("'vehicle.N' must be an integer")
        if block["N"] != n:
            raise ConfigError(
                f"'vehicle.N' = {block['N']} contradicts array lengths: "
                f"m has {len(masses)} entries (N+1), so N = {n}")
    try:
        return VehicleParams(masses=np.array(masses), inertias=np.array(inertias),
                             a0=a0, a=np.array(a), c=np.array(c))
    except InvalidParameterError as e:
        raise ConfigError(f"invalid 'vehicle' block: {e}") from e


def _parse_rotor(block) -> tuple[RotorProfile, dict]:
    if not isinstance(block, dict):
        raise ConfigError("'rotor' must be an object")
    _check_keys(block, ("kind", "amplitude", "period"), "'rotor'")
    kind = block.get("kind")
    if kind != "sine":
        raise ConfigError(f"unsupported rotor kind {kind!r}; only 'sine' "
                          f"(omit the rotor block for a resting rotor)")
    amplitude = _number(block, "amplitude", "'rotor'", required=True)
    period = _number(block, "period", "'rotor'", default=1.0)
    if period <= 0:
        raise ConfigError("'rotor.period' must be positive")
    return sine_rotor(amplitude, period), {"kind": "sine",
                                           "amplitude": amplitude,
                                           "period": period}


def _parse_initial(block, n: int) -> tuple[ReducedState, PoseState]:
    if not isinstance(block, dict):
        raise ConfigError("'initial' must be an object")
    _check_keys(block, ("v1", "omega", "phi", "x", "y", "psi"), "'initial'")
    v1 = _number(block, "v1", "'initial'", default=1.0)
    omega = _number(block, "omega", "'initial'", default=0.0)
    if "phi" in block:
        phi = _number_list(block, "phi", "'initial'")
        if len(phi) != n:
            raise ConfigError(f"'initial.phi' has {len(phi)} entries, "
                              f"expected N = {n}")
    else:
        phi = [0.0] * n
    pose = PoseState(_number(block, "x", "'initial'", default=0.0),
                     _number(block, "y", "'initial'", default=0.0),
                     _number(block, "psi", "'initial'", default=0.0))
    return ReducedState(v1, omega, np.array(phi)), pose


def _parse_integrator(block) -> IntegratorOptions:
    if not isinstance(block, dict):
        raise ConfigError("'integrator' must be an object")
    allowed = ("method", "rtol", "atol", "h0", "hmax", "t_end", "sample_stride")
    _check_keys(block, allowed, "'integrator'")
    method = block.get("method", METHOD_RK45)
    if method not in (METHOD_RK45, METHOD_RK4):
        raise ConfigError(f"'integrator.method' must be '{METHOD_RK45}' or "
                          f"'{METHOD_RK4}', got {method!r}")
    stride = block.get("sample_stride", 1)
    if not isinstance(stride, int) or isinstance(stride, bool) or stride < 1:
        raise ConfigError("'integrator.sample_stride' must be a positive integer")
    try:
        return IntegratorOptions(
            t_end=_number(block, "t_end", "'integrator'", required=True),
            method=method,
            rtol=_number(block, "rtol", "'integrator'", default=1e-10),
            atol=_number(block, "atol", "'integrator'", default=1e-12),
            h0=_number(block, "h0", "'integrator'", default=1e-3),
            hmax=_number(block, "hmax", "'integrator'", default=math.inf),
            sample_stride=stride,
        )
    except ValueError as e:
        raise ConfigError(f"invalid 'integrator' block: {e}") from e


def _parse_outputs(block) -> OutputOptions:
    if not isinstance(block, dict):
        raise ConfigError("'outputs' must be an object")
    _check_keys(block, ("directory", "formats"), "'outputs'")
    directory = block.get("directory", "out")
    if not isinstance(directory, str):
        raise ConfigError("'outputs.directory' must be a string")
    formats = block.get("formats", list(FORMATS))
    if (not isinstance(formats, list) or not formats
            or any(f not in FORMATS for f in formats)):
        raise ConfigError(f"'outputs.formats' must be a non-empty subset of "
                          f"{list(FORMATS)}")
    return OutputOptions(directory, tuple(dict.fromkeys(formats)))


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate a scenario document; all defaults applied."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"JSON syntax error at line {e.lineno}, "
                          f"column {e.colno}: {e.msg}") from e
    if not isinstance(doc, dict):
        raise ConfigError("top-level JSON value must be an object")
    _check_keys(doc, ("scenario", "sign", "vehicle", "rotor", "initial",
                      "integrator", "outputs"), "the top-level object")

    scenario = doc.get("scenario")
    if scenario not in SCENARIOS:
        raise ConfigError(f"'scenario' must be one of {list(SCENARIOS)}, "
                          f"got {scenario!r}")
    if "vehicle" not in doc:
        raise ConfigError("missing required field 'vehicle'")
    vehicle = _parse_vehicle(doc["vehicle"])
    if "integrator" not in doc:
        raise ConfigError("missing required field 'integrator'")
    integrator = _parse_integrator(doc["integrator"])

    rotor = rotor_spec = None
    if "rotor" in doc:
        rotor, rotor_spec = _parse_rotor(doc["rotor"])
    if scenario == "speedup" and rotor is None:
        raise ConfigError("scenario 'speedup' requires a 'rotor' block")

    sign = None
    if scenario == "manifold":
        if "sign" not in doc:
            raise ConfigError("scenario 'manifold' requires a 'sign' field "
                              "('plus' or 'minus')")
        if doc["sign"] not in ("plus", "minus"):
            raise ConfigError(f"'sign' must be 'plus' or 'minus', "
                              f"got {doc['sign']!r}")
        sign = 1 if doc["sign"] == "plus" else -1
    elif "sign" in doc:
        raise ConfigError("'sign' is only valid for scenario 'manifold'")

    initial, pose = _parse_initial(doc.get("initial", {}), vehicle.n_links)
    outputs = _parse_outputs(doc.get("outputs", {}))
    return ScenarioConfig(scenario, vehicle, rotor, rotor_spec, initial, pose,
                          integrator, outputs, sign)

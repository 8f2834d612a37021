"""Straight-line equilibria, their stability, and the rotor-driven speedup
asymptotics.

All straight-line motions of the fixed-energy angle system come in two
families (sleigh moving forward or backward) and 2^N trailer fold patterns
each; the linearization at any of them is lower triangular, so the spectrum
is read off the diagonal.  With a periodic rotor the vehicle speeds up
without bound: v1 grows like (cube_rate * t)^(1/3) and the angular
oscillations decay with known envelopes, which :func:`fit_power_law`
extracts from simulated trajectories.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .integrator import IntegratorOptions, integrate
from .model import DerivedParams, RotorProfile, VehicleParams


class DegenerateSpectrumError(ValueError):
    """Raised when a zero eigenvalue makes node/saddle classification
    meaningless (balanced sleigh, static moment = 0)."""


class NoSpeedupError(ValueError):
    """Raised when the speedup constant is undefined (balanced sleigh or a
    rotor with constant momentum)."""


class FixedPointKind(enum.Enum):
    STABLE_NODE = "stable_node"
    UNSTABLE_NODE = "unstable_node"
    SADDLE = "saddle"


@dataclass(frozen=True)
class FixedPoint:
    """One straight-line equilibrium of the angle system.

    v_sign is the sign of the longitudinal velocity (velocity_angle 0 or pi);
    theta_signs are the cosines (+-1) of the staggered angles, i.e. whether
    each platform is aligned with or folded onto its predecessor.
    """

    v_sign: int
    theta_signs: np.ndarray
    velocity_angle: float
    theta: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        for name in ("theta_signs", "theta", "phi"):
            arr = np.atleast_1d(np.asarray(getattr(self, name)))
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def describe(self) -> str:
        d = "forward" if self.v_sign > 0 else "backward"
        angles = ", ".join("pi" if v else "0" for v in self.phi != 0.0)
        return f"{d}, phi=({angles})" if self.phi.size else d


@dataclass(frozen=True)
class Classification:
    kind: FixedPointKind
    eigenvalues: np.ndarray


def enumerate_fixed_points(n: int) -> list[FixedPoint]:
    """All 2^(n+1) straight-line equilibria, angles reported in [0, 2pi).

    The relative angles are recovered from the staggered ones by exact
    integer back-substitution (the chart change is integer unimodular), so
    every entry is exactly 0.0 or pi.
    """
    if n < 0:
        raise ValueError("link count must be >= 0")
    points = []
    for pattern in itertools.product((1, -1), repeat=n + 1):
        v_sign = pattern[0]
        theta_signs = np.array(pattern[1:], dtype=int)
        theta_units = (1 - theta_signs) // 2  # 0 or 1 units of pi
        phi_units = np.empty(n, dtype=np.int64)
        acc = 0
        for i in range(n):
            s = 1 if i % 2 == 0 else -1
            phi_units[i] = s * (theta_units[i] - acc)
            acc += 2 * s * phi_units[i]
        phi_units %= 2
        points.append(FixedPoint(
            v_sign=v_sign,
            theta_signs=theta_signs,
            velocity_angle=0.0 if v_sign > 0 else math.pi,
            theta=theta_units * math.pi,
            phi=phi_units * math.pi,
        ))
    return points


def linearization_matrix(fp: FixedPoint, p: VehicleParams,
                         d: DerivedParams) -> np.ndarray:
    """Jacobian of the fixed-energy angle system at a straight-line
    equilibrium, in the (velocity_angle, phi...) variables.

    Lower triangular by construction, so its eigenvalues are the diagonal.
    """
    n = p.n_links
    s0 = float(fp.v_sign)
    a = np.zeros((n + 1, n + 1))
    a[0, 0] = -(d.static_moment / d.inertia) * s0
    root = math.sqrt(d.mass / d.inertia)
    for i in range(1, n + 1):
        si = float(fp.theta_signs[i - 1])
        ci = p.c[i - 1]
        a[i, 0] = -root * s0
        a[i, i] = -(s0 / ci) * si
        for j in range(1, i):
            a[i, j] = (-1.0) ** (i + j + 1) * (2.0 * s0 / ci) * si
    return a


def classify_fixed_point(fp: FixedPoint, p: VehicleParams,
                         d: DerivedParams) -> Classification:
    """Node/saddle type from the triangular spectrum.

    The forward-aligned point is the unique stable node, the
    backward-aligned one the unique unstable node; every other sign pattern
    mixes eigenvalue signs and is a saddle.
    """
    if d.static_moment == 0.0:
        raise DegenerateSpectrumError(
            "balanced sleigh (static moment 0) has a zero eigenvalue; "
            "node/saddle classification does not apply")
    s0 = float(fp.v_sign)
    eig = np.empty(p.n_links + 1)
    eig[0] = -(d.static_moment / d.inertia) * s0
    eig[1:] = -(s0 / p.c) * fp.theta_signs
    if np.all(eig < 0):
        kind = FixedPointKind.STABLE_NODE
    elif np.all(eig > 0):
        kind = FixedPointKind.UNSTABLE_NODE
    else:
        kind = FixedPointKind.SADDLE
    return Classification(kind, eig)


# --- speedup asymptotics ------------------------------------------------------


@dataclass(frozen=True)
class AsymptoticPrediction:
    """Late-time envelopes of the rotor-driven accelerating trajectory.

    v1 grows as v1_coeff * t^(1/3) where v1_coeff = cube_rate^(1/3);
    |omega| is enveloped by omega_coeff * t^(-1/3); the staggered and
    relative angles are enveloped by theta_coeffs / phi_coeffs times
    t^(-2/3).  Envelope coefficients use the rotor's peak momentum rate.
    """

    cube_rate: float
    v1_coeff: float
    omega_coeff: float
    theta_coeffs: np.ndarray
    phi_coeffs: np.ndarray
    mean_sq_rate: float
    max_rate: float

    V1_EXPONENT = 1.0 / 3.0
    OMEGA_EXPONENT = -1.0 / 3.0
    ANGLE_EXPONENT = -2.0 / 3.0

    def v1_envelope(self, t):
        return self.v1_coeff * np.asarray(t) ** self.V1_EXPONENT

    def omega_envelope(self, t):
        return self.omega_coeff * np.asarray(t) ** self.OMEGA_EXPONENT

    def phi_envelope(self, i: int, t):
        return self.phi_coeffs[i] * np.asarray(t) ** self.ANGLE_EXPONENT


def asymptotic_prediction(p: VehicleParams, d: DerivedParams,
                          rotor: RotorProfile) -> AsymptoticPrediction:
    """Speedup constant cube_rate = 3 <rate^2> / (b m) and the envelope
    coefficients of the accelerating trajectory."""
    b, m = d.static_moment, d.mass
    if b == 0.0:
        raise NoSpeedupError("balanced sleigh (static moment 0): no speedup")
    msr = rotor.mean_sq_rate()
    if msr <= 0.0:
        raise NoSpeedupError("rotor momentum is constant: no speedup")
    cube_rate = 3.0 * (msr / (b * m))
    kmax = rotor.max_abs_rate()
    v1_coeff = cube_rate ** (1.0 / 3.0)
    omega_coeff = kmax / (b * v1_coeff)
    theta_coeffs = p.c * kmax / b * cube_rate ** (-2.0 / 3.0)
    chain = p.c + 2.0 * np.concatenate(([0.0], np.cumsum(p.c)[:-1]))
    phi_coeffs = chain * kmax / b * cube_rate ** (-2.0 / 3.0)
    return AsymptoticPrediction(cube_rate, v1_coeff, omega_coeff,
                                theta_coeffs, phi_coeffs, msr, kmax)


# --- power-law fitting ---------------------------------------------------------


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    prefactor: float
    r_squared: float
    n_points: int


def envelope_points(times, values, period: float):
    """Per-period maxima of |values|: one (time-of-max, max) pair per full
    rotor period covered by the samples."""
    times = np.asarray(times, dtype=float)
    mags = np.abs(np.asarray(values, dtype=float))
    bins = np.floor(times / period).astype(np.int64)
    t_out, v_out = [], []
    start = 0
    for k in range(1, times.size + 1):
        if k == times.size or bins[k] != bins[start]:
            j = start + int(np.argmax(mags[start:k]))
            t_out.append(times[j])
            v_out.append(mags[j])
            start = k
    return np.array(t_out), np.array(v_out)


def fit_power_law(times, values, window, mode: str = "raw",
                  period: float | None = None) -> PowerLawFit:
    """Least-squares fit of log|value| against log t over a time window.

    mode "raw" fits the samples as-is and requires them positive; mode
    "envelope" first reduces to per-period maxima of |value| (period
    required).  The window must start at positive time and contain at least
    30 samples.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    t_lo, t_hi = window
    if t_lo <= 0:
        raise ValueError("fit window must start at positive time")
    mask = (times >= t_lo) & (times <= t_hi)
    if np.count_nonzero(mask) < 30:
        raise ValueError(
            f"need at least 30 samples in window [{t_lo}, {t_hi}], "
            f"got {np.count_nonzero(mask)}")
    t, v = times[mask], values[mask]
    if mode == "envelope":
        if period is None:
            raise ValueError("envelope mode needs the rotor period")
        t, v = envelope_points(t, v, period)
    elif mode == "raw":
        pass
    else:
        raise ValueError(f"unknown fit mode {mode!r}")
    if np.any(v <= 0):
        raise ValueError("power-law fit needs positive values "
                         "(zero or negative sample in window)")
    lt, lv = np.log(t), np.log(v)
    slope, intercept = np.polyfit(lt, lv, 1)
    resid = lv - (slope * lt + intercept)
    ss_tot = float(np.sum((lv - lv.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - float(np.sum(resid ** 2)) / ss_tot
    return PowerLawFit(float(slope), float(math.exp(intercept)), r2, t.size)


# --- averaged speedup law -------------------------------------------------------


@dataclass(frozen=True)
class AveragedLawReport:
    """Consistency report for the averaged slowdown law of p = 1/v1.

    substitution_residual: coefficient defect of the closed form
        p(t) = cube_rate^(-1/3) t^(-1/3) inserted into
        dp/dt = -gain p^4, gain = <rate^2>/(b m).  The closed form solves the
        equation exactly when cube_rate = 3 gain, so this is zero up to the
        arithmetic of that identity.
    ode_error: |p_numeric - p_closed| at t_end for the scalar averaged ODE
        started on the closed form at t_start.
    final_ratio: p * (cube_rate * t)^(1/3) at the last trajectory sample
        (None when no trajectory is supplied); tends to 1 on accelerating
        runs.
    """

    substitution_residual: float
    ode_error: float
    final_ratio: float | None


def averaged_law_check(p: VehicleParams, d: DerivedParams, rotor: RotorProfile,
                       trajectory=None, t_start: float = 1e3,
                       t_end: float = 1e5) -> AveragedLawReport:
    pred = asymptotic_prediction(p, d, rotor)
    gain = pred.mean_sq_rate / (d.static_moment * d.mass)
    delta = 3.0 * gain
    substitution_residual = abs(gain - delta / 3.0)

    p0 = delta ** (-1.0 / 3.0) * t_start ** (-1.0 / 3.0)
    opts = IntegratorOptions(t_end=t_end, rtol=1e-12, atol=1e-16, h0=1.0)
    sol = integrate(lambda t, y: -gain * y ** 4, [p0], opts, t0=t_start)
    p_closed = delta ** (-1.0 / 3.0) * t_end ** (-1.0 / 3.0)
    ode_error = abs(float(sol.states[-1, 0]) - p_closed)

    final_ratio = None
    if trajectory is not None:
        t_last = float(trajectory.times[-1])
        v_last = float(trajectory.v1[-1])
        final_ratio = (delta * t_last) ** (1.0 / 3.0) / v_last
    return AveragedLawReport(substitution_residual, ode_error, final_ratio)


def to_rescaled(v1, omega, times, period: float):
    """Slow-chart series (p, q, phase) = (1/v1, omega/v1, t mod period);
    defined only where v1 != 0."""
    v1 = np.asarray(v1, dtype=float)
    if np.any(v1 == 0.0):
        raise ValueError("rescaled chart undefined where v1 == 0")
    return 1.0 / v1, np.asarray(omega) / v1, np.mod(times, period)


def wrap_angles(x) -> np.ndarray:
    """Wrap angles to (-pi, pi]."""
    x = np.asarray(x, dtype=float)
    return np.pi - np.mod(np.pi - x, 2.0 * np.pi)


def wrapped_distance(phi, target) -> float:
    """Euclidean distance between angle vectors on the torus."""
    return float(np.linalg.norm(wrap_angles(np.asarray(phi) - np.asarray(target))))

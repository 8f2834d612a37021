"""Time-stepping engines: fixed-step RK4 and adaptive Dormand-Prince RK45.

The adaptive stepper controls the local error per step against
rtol * |y| + atol (max-norm scale) and lands exactly on requested output
times by clamping the step, so emitted samples need no interpolation and
runs are bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

METHOD_RK45 = "adaptive-rk45"
METHOD_RK4 = "fixed-rk4"

# Dormand-Prince 5(4) tableau.  Propagation is 5th order; the E row weights
# the embedded 4th-order difference used for error control.  Stage 7 equals
# the derivative at the new point (FSAL).
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = (
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
)
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200,
               22 / 525, -1 / 40])

_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0
_SAFETY = 0.9


class IntegrationError(RuntimeError):
    """Base class for integration failures; carries the failure time."""

    def __init__(self, message: str, time: float):
        super().__init__(message)
        self.time = time


class StepUnderflowError(IntegrationError):
    """Step size collapsed below the resolvable scale (stiffness or a
    singularity)."""


class DivergenceError(IntegrationError):
    """The right-hand side or the state stopped being finite."""


@dataclass(frozen=True)
class IntegratorOptions:
    """Stepper configuration.

    t_end is the integration horizon (integration starts at t0 passed to
    :func:`integrate`, 0 by default).  sample_stride decimates the emitted
    samples: every k-th accepted step is recorded (first and last always
    are).  h0 is the fixed step of the RK4 method and the initial trial step
    of RK45.
    """

    t_end: float
    method: str = METHOD_RK45
    rtol: float = 1e-10
    atol: float = 1e-12
    h0: float = 1e-3
    hmax: float = np.inf
    sample_stride: int = 1

    def __post_init__(self):
        if self.method not in (METHOD_RK45, METHOD_RK4):
            raise ValueError(f"unknown method {self.method!r}; "
                             f"use {METHOD_RK45!r} or {METHOD_RK4!r}")
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("rtol and atol must be positive")
        if self.h0 <= 0 or self.h0 > self.hmax:
            raise ValueError("need 0 < h0 <= hmax")
        if self.t_end <= 0:
            raise ValueError("t_end must be positive")
        if self.sample_stride < 1:
            raise ValueError("sample_stride must be >= 1")


@dataclass(frozen=True)
class Solution:
    """Emitted samples of one integration run."""

    times: np.ndarray
    states: np.ndarray
    n_accepted: int
    n_rejected: int
    n_evals: int


class _Buffer:
    """Append-only sample store with doubling growth."""

    def __init__(self, dim: int):
        self._t = np.empty(256)
        self._y = np.empty((256, dim))
        self.n = 0

    def append(self, t: float, y: np.ndarray):
        if self.n == self._t.size:
            self._t = np.concatenate((self._t, np.empty_like(self._t)))
            self._y = np.concatenate((self._y, np.empty_like(self._y)))
        self._t[self.n] = t
        self._y[self.n] = y
        self.n += 1

    def arrays(self):
        return self._t[: self.n].copy(), self._y[: self.n].copy()


def _prepare(rhs, y0, opts, t0, t_eval):
    y0 = np.atleast_1d(np.asarray(y0, dtype=float)).copy()
    if t_eval is not None:
        t_eval = np.asarray(t_eval, dtype=float)
        if t_eval.ndim != 1 or t_eval.size == 0:
            raise ValueError("t_eval must be a non-empty 1-d array")
        if np.any(np.diff(t_eval) <= 0):
            raise ValueError("t_eval must be strictly increasing")
        if t_eval[0] < t0 or t_eval[-1] > opts.t_end:
            raise ValueError("t_eval must lie within [t0, t_end]")
    f0 = np.asarray(rhs(t0, y0), dtype=float)
    if not np.all(np.isfinite(f0)):
        raise DivergenceError(f"right-hand side not finite at t={t0}", t0)
    return y0, t_eval, f0


def integrate(rhs, y0, opts: IntegratorOptions, t0: float = 0.0,
              t_eval=None) -> Solution:
    """Integrate dy/dt = rhs(t, y) from t0 to opts.t_end.

    If t_eval is given, exactly those times are emitted (the stepper lands
    on them); otherwise the accepted-step grid decimated by
    opts.sample_stride is emitted, always including the first and last
    points.
    """
    if opts.method == METHOD_RK4:
        return _run_rk4(rhs, y0, opts, t0, t_eval)
    return _run_rk45(rhs, y0, opts, t0, t_eval)


def _run_rk45(rhs, y0, opts, t0, t_eval):
    y, targets, k1 = _prepare(rhs, y0, opts, t0, t_eval)
    dim = y.size
    t_end = opts.t_end
    h_floor = 1e-14 * abs(t_end)
    buf = _Buffer(dim)

    next_target = 0
    if targets is not None:
        if targets[0] == t0:
            buf.append(t0, y)
            next_target = 1
    else:
        buf.append(t0, y)

    t = t0
    h_prop = min(opts.h0, opts.hmax, t_end - t0)
    n_acc = n_rej = 0
    n_evals = 1
    K = np.empty((7, dim))
    K[0] = k1

    while t < t_end:
        target = t_end if targets is None or next_target >= targets.size \
            else targets[next_target]
        gap = target - t
        h = min(h_prop, opts.hmax)
        if gap <= h / 0.9 and gap <= opts.hmax:
            # stretch/truncate to land exactly; avoids creeping up to the
            # target in vanishing increments
            h = gap
        clamped = h < h_prop
        if h < h_floor:
            raise StepUnderflowError(
                f"step size {h:.3e} underflowed at t={t!r} "
                f"(tolerances unreachable here)", t)

        for i in range(6):
            y_stage = y + h * (_A[i] @ K[: i + 1])
            K[i + 1] = rhs(t + _C[i + 1] * h, y_stage)
        n_evals += 6
        y_new = y_stage  # stage 7 abscissa is the 5th-order solution
        err = h * (_E @ K)

        # per-component scale, as in standard embedded RK codes
        scale = opts.atol + opts.rtol * np.maximum(np.abs(y), np.abs(y_new))
        with np.errstate(invalid="ignore"):
            err_norm = float(np.max(np.abs(err) / scale))

        if np.isnan(err_norm) or np.isinf(err_norm):
            n_rej += 1
            h_prop = h * 0.25
            if h_prop < h_floor:
                raise DivergenceError(
                    f"right-hand side not finite near t={t!r}", t)
            continue
        if err_norm > 1.0:
            n_rej += 1
            h_prop = h * max(_MIN_FACTOR, _SAFETY * err_norm ** -0.2)
            continue

        n_acc += 1
        t = target if h == gap else t + h
        y = y_new.copy()
        K[0] = K[6]  # FSAL

        factor = _MAX_FACTOR if err_norm == 0.0 else \
            min(_MAX_FACTOR, max(_MIN_FACTOR, _SAFETY * err_norm ** -0.2))
        h_prop = max(h_prop, h * factor) if clamped else h * factor

        if targets is not None:
            if next_target < targets.size and t == targets[next_target]:
                buf.append(t, y)
                next_target += 1
        elif n_acc % opts.sample_stride == 0 or t >= t_end:
            buf.append(t, y)

    if targets is None and buf._t[buf.n - 1] != t:
        buf.append(t, y)
    times, states = buf.arrays()
    return Solution(times, states, n_acc, n_rej, n_evals)


def _run_rk4(rhs, y0, opts, t0, t_eval):
    y, targets, _ = _prepare(rhs, y0, opts, t0, t_eval)
    t_end = opts.t_end
    buf = _Buffer(y.size)

    next_target = 0
    if targets is not None:
        if targets[0] == t0:
            buf.append(t0, y)
            next_target = 1
    else:
        buf.append(t0, y)

    t = t0
    n_acc = 0
    n_evals = 0
    while t < t_end:
        target = t_end if targets is None or next_target >= targets.size \
            else targets[next_target]
        h = min(opts.h0, target - t)
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        n_evals += 4
        if not np.all(np.isfinite(y)):
            raise DivergenceError(f"state not finite after step at t={t!r}", t)
        t = target if h == target - t else t + h
        n_acc += 1
        if targets is not None:
            if next_target < targets.size and t == targets[next_target]:
                buf.append(t, y)
                next_target += 1
        elif n_acc % opts.sample_stride == 0 or t >= t_end:
            buf.append(t, y)

    if targets is None and buf._t[buf.n - 1] != t:
        buf.append(t, y)
    times, states = buf.arrays()
    return Solution(times, states, n_acc, 0, n_evals)

"""Adaptive Dormand-Prince 5(4) integrator with terminal events."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

Rhs = Callable[[float, np.ndarray], np.ndarray]


class Termination(str, Enum):
    REACHED_TARGET = "ReachedTarget"
    LEFT_DOMAIN = "LeftDomain"
    MAX_STEPS = "MaxSteps"
    STEP_UNDERFLOW = "StepUnderflow"
    SPAN_END = "SpanEnd"


class IntegrationError(RuntimeError):
    pass


@dataclass
class Event:
    """Terminal event: fires when ``fun(xi, y)`` goes from positive to <= 0."""

    fun: Callable[[float, np.ndarray], float]
    reason: Termination = Termination.REACHED_TARGET


@dataclass
class Trajectory:
    xi: np.ndarray
    states: np.ndarray
    termination: Termination
    n_rhs: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def __len__(self) -> int:
        return len(self.xi)


# Dormand-Prince tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


class DormandPrince:
    """Single-use stepper; holds the current step size between calls."""

    safety = 0.9
    min_factor = 0.2
    max_factor = 5.0

    def __init__(self, rhs: Rhs, rtol: float = 1e-8, atol: float = 1e-10, max_step: float = math.inf):
        if rtol <= 0 or atol <= 0:
            raise ValueError("rtol and atol must be positive")
        self.rhs = rhs
        self.rtol = rtol
        self.atol = atol
        self.max_step = max_step
        self.h: float | None = None
        self.n_rhs = 0

    def _f(self, t: float, y: np.ndarray) -> np.ndarray:
        self.n_rhs += 1
        return np.asarray(self.rhs(t, y), dtype=float)

    def _initial_step(self, t0: float, y0: np.ndarray, f0: np.ndarray, direction: float) -> float:
        scale = self.atol + self.rtol * np.abs(y0)
        d0 = np.sqrt(np.mean((y0 / scale) ** 2))
        d1 = np.sqrt(np.mean((f0 / scale) ** 2))
        h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        y1 = y0 + direction * h0 * f0
        f1 = self._f(t0 + direction * h0, y1)
        d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
        if max(d1, d2) <= 1e-15:
            h1 = max(1e-6, h0 * 1e-3)
        else:
            h1 = (0.01 / max(d1, d2)) ** (1 / 5)
        return min(100 * h0, h1, self.max_step)

    def _stages(self, t: float, y: np.ndarray, f0: np.ndarray, h: float):
        k = [f0]
        for i in range(1, 7):
            dy = sum(a * kj for a, kj in zip(_A[i], k))
            k.append(self._f(t + _C[i] * h, y + h * dy))
        y_new = y + h * sum(b * kj for b, kj in zip(_B5, k) if b != 0.0)
        err = h * sum(e * kj for e, kj in zip(_E, k) if e != 0.0)
        return y_new, err, k[-1]

    def integrate(
        self,
        y0: Sequence[float],
        span: tuple[float, float],
        events: Sequence[Event] = (),
        max_steps: int = 100_000,
    ) -> Trajectory:
        t0, t_end = float(span[0]), float(span[1])
        y = np.array(y0, dtype=float)
        if not np.all(np.isfinite(y)):
            raise ValueError("initial state must be finite")
        direction = 1.0 if t_end >= t0 else -1.0
        length = abs(t_end - t0)
        ts = [t0]
        ys = [y.copy()]
        if length == 0:
            return Trajectory(np.array(ts), np.array(ys), Termination.SPAN_END, self.n_rhs)
        f = self._f(t0, y)
        h = self.h if self.h is not None else self._initial_step(t0, y, f, direction)
        h_min = 1e-14 * length
        g_prev = [ev.fun(t0, y) for ev in events]
        t = t0
        for _ in range(max_steps):
            h = min(h, abs(t_end - t), self.max_step)
            if h < h_min and abs(t_end - t) > h_min:
                return self._finish(ts, ys, Termination.STEP_UNDERFLOW)
            y_new, err, f_new = self._stages(t, y, f, direction * h)
            scale = self.atol + self.rtol * np.maximum(np.abs(y), np.abs(y_new))
            err_norm = float(np.sqrt(np.mean((err / scale) ** 2)))
            if not np.all(np.isfinite(y_new)) or err_norm > 1.0:
                factor = self.min_factor if not np.isfinite(err_norm) else max(
                    self.min_factor, self.safety * err_norm ** (-1 / 5)
                )
                h *= factor
                continue
            t_new = t + direction * h
            for i, ev in enumerate(events):
                g_new = ev.fun(t_new, y_new)
                if g_prev[i] > 0 and g_new <= 0:
                    t_hit, _ = self._locate(ev, t, y, f, t_new, y_new, f_new)
                    # re-step onto the crossing so the stored state lies on the flow
                    y_hit = self._stages(t, y, f, t_hit - t)[0] if t_hit != t_new else y_new
                    ts.append(t_hit)
                    ys.append(y_hit)
                    self.h = h
                    return self._finish(ts, ys, ev.reason)
                g_prev[i] = g_new
            t, y, f = t_new, y_new, f_new
            ts.append(t)
            ys.append(y.copy())
            factor = self.max_factor if err_norm == 0 else min(
                self.max_factor, self.safety * err_norm ** (-1 / 5)
            )
            h *= factor
            self.h = h
            if abs(t_end - t) <= 1e-15 * max(1.0, abs(t_end)):
                return self._finish(ts, ys, Termination.SPAN_END)
        return self._finish(ts, ys, Termination.MAX_STEPS)

    def _finish(self, ts, ys, reason: Termination) -> Trajectory:
        return Trajectory(np.array(ts), np.array(ys), reason, self.n_rhs)

    @staticmethod
    def _locate(ev: Event, t0, y0, f0, t1, y1, f1):
        """Root of the event function on the cubic Hermite interpolant of the step."""
        dt = t1 - t0

        def interp(t: float) -> np.ndarray:
            s = (t - t0) / dt
            h00 = 2 * s**3 - 3 * s**2 + 1
            h10 = s**3 - 2 * s**2 + s
            h01 = -2 * s**3 + 3 * s**2
            h11 = s**3 - s**2
            return h00 * y0 + h10 * dt * f0 + h01 * y1 + h11 * dt * f1

        g = lambda t: ev.fun(t, interp(t))  # noqa: E731
        try:
            lo, hi = (t0, t1) if t0 < t1 else (t1, t0)
            t_hit = brentq(g, lo, hi, xtol=1e-14 * max(1.0, abs(t1)))
        except ValueError:
            return t1, y1
        return t_hit, interp(t_hit)


def integrate(
    rhs: Rhs,
    y0: Sequence[float],
    span: tuple[float, float],
    rtol: float = 1e-8,
    atol: float = 1e-10,
    events: Sequence[Event] = (),
    max_steps: int = 100_000,
    max_step: float = math.inf,
) -> Trajectory:
    """Integrate ``y' = rhs(xi, y)`` over ``span`` (which may run backward)."""
    stepper = DormandPrince(rhs, rtol=rtol, atol=atol, max_step=max_step)
    return stepper.integrate(y0, span, events=events, max_steps=max_steps)

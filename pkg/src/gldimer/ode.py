"""Adaptive embedded Runge-Kutta 5(4) integrator (Dormand-Prince pair).

Hand-rolled rather than delegated so that per-step post-processing (e.g.
re-hermitization of a propagated density matrix) and per-step abort
monitors (e.g. truncation-mass ceilings) hook into every accepted step.
Works on real or complex flat state vectors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import StepUnderflowError

# Dormand-Prince 5(4) tableau; row 7 doubles as the 5th-order weights (FSAL).
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
# 5th-order minus 4th-order weights (error estimate)
_E = np.array([
    35 / 384 - 5179 / 57600,
    0.0,
    500 / 1113 - 7571 / 16695,
    125 / 192 - 393 / 640,
    -2187 / 6784 + 92097 / 339200,
    11 / 84 - 187 / 2100,
    -1 / 40,
])

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0


@dataclass
class OdeResult:
    t: float
    y: np.ndarray
    sample_ts: np.ndarray
    sample_ys: np.ndarray
    n_steps: int = 0
    n_rejected: int = 0
    n_rhs: int = 0
    extra: dict = field(default_factory=dict)


def _error_norm(err, y_old, y_new, rtol, atol):
    scale = atol + rtol * np.maximum(np.abs(y_old), np.abs(y_new))
    return float(np.sqrt(np.mean(np.abs(err / scale) ** 2)))


def _initial_step(rhs, t0, y0, f0, rtol, atol):
    scale = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean(np.abs(y0 / scale) ** 2))
    d1 = np.sqrt(np.mean(np.abs(f0 / scale) ** 2))
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    y1 = y0 + h0 * f0
    f1 = rhs(t0 + h0, y1)
    d2 = np.sqrt(np.mean(np.abs((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1)


def integrate_dp45(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    t_span: tuple[float, float],
    y0: np.ndarray,
    *,
    rtol: float = 1e-8,
    atol: float = 1e-10,
    max_step: float = np.inf,
    first_step: float | None = None,
    sample_times: Sequence[float] | None = None,
    on_step: Callable[[float, np.ndarray], np.ndarray] | None = None,
    monitor: Callable[[float, np.ndarray], None] | None = None,
) -> OdeResult:
    """Integrate y' = rhs(t, y) from t_span[0] to t_span[1].

    sample_times are hit exactly (the step is clamped onto them).  on_step
    may return a replacement state after every accepted step; monitor is
    called after every accepted step and may raise to abort.  Backward
    integration (t1 < t0) is supported.
    """
    if rtol <= 0 or atol <= 0:
        raise ValueError("tolerances must be positive")
    t0, t1 = float(t_span[0]), float(t_span[1])
    direction = 1.0 if t1 >= t0 else -1.0
    y = np.asarray(y0).copy()
    t = t0

    samples: list[float] = []
    if sample_times is not None:
        samples = sorted(float(s) for s in sample_times)
        if direction < 0:
            samples = samples[::-1]
        for s in samples:
            if (s - t0) * direction < -1e-12 or (t1 - s) * direction < -1e-12:
                raise ValueError("sample time outside integration span")
    sample_ys: list[np.ndarray] = []
    sample_ts: list[float] = []
    next_sample = 0

    def record_if_sample(tcur, ycur):
        nonlocal next_sample
        while next_sample < len(samples) and abs(samples[next_sample] - tcur) <= 1e-12 * max(1.0, abs(tcur)):
            sample_ts.append(samples[next_sample])
            sample_ys.append(ycur.copy())
            next_sample += 1

    res = OdeResult(t=t, y=y, sample_ts=np.empty(0), sample_ys=np.empty(0))
    f = rhs(t, y)
    res.n_rhs += 1
    record_if_sample(t, y)

    if t0 == t1:
        res.t, res.y = t, y
        res.sample_ts = np.array(sample_ts)
        res.sample_ys = np.array(sample_ys)
        return res

    if first_step is not None:
        h = float(first_step)
    else:
        h = _initial_step(rhs, t, y, f, rtol, atol)
        res.n_rhs += 2
    h = min(h, max_step, abs(t1 - t0))

    k = [None] * 7
    while (t1 - t) * direction > 0:
        h_min = 16 * np.finfo(float).eps * max(abs(t), 1.0)
        if h < h_min:
            raise StepUnderflowError(f"step size underflow at t = {t}")
        # clamp onto the end point and the next sample time
        h_eff = min(h, abs(t1 - t))
        if next_sample < len(samples):
            h_eff = min(h_eff, abs(samples[next_sample] - t))
        h_eff = max(h_eff, h_min)
        dt = direction * h_eff

        k[0] = f
        for i in range(1, 7):
            yi = y + dt * sum(aij * k[j] for j, aij in enumerate(_A[i]) if aij != 0.0)
            k[i] = rhs(t + _C[i] * dt, yi)
        res.n_rhs += 6
        y_new = y + dt * (
            _A[6][0] * k[0] + _A[6][2] * k[2] + _A[6][3] * k[3]
            + _A[6][4] * k[4] + _A[6][5] * k[5]
        )
        # k[6] is f(t+dt, y_new) by FSAL construction (A row 7 == b5)
        err = dt * (
            _E[0] * k[0] + _E[2] * k[2] + _E[3] * k[3]
            + _E[4] * k[4] + _E[5] * k[5] + _E[6] * k[6]
        )
        err_norm = _error_norm(err, y, y_new, rtol, atol)

        if err_norm <= 1.0:
            t = t + dt
            y = y_new
            f = k[6]
            if on_step is not None:
                # post-step projection (e.g. hermitization); assumed small
                # enough that the FSAL derivative stays valid
                y_fixed = on_step(t, y)
                if y_fixed is not None:
                    y = y_fixed
            if monitor is not None:
                monitor(t, y)
            record_if_sample(t, y)
            res.n_steps += 1
            factor = _MAX_FACTOR if err_norm == 0.0 else min(
                _MAX_FACTOR, _SAFETY * err_norm ** -0.2)
            # grow from the unclamped candidate when the step was clamped
            # onto a sample time, otherwise from the step actually taken
            h = min(max_step, max(h, h_eff * factor) if h_eff < h else h * factor)
            h = max(h, h_min)
        else:
            res.n_rejected += 1
            h = h_eff * max(_MIN_FACTOR, _SAFETY * err_norm ** -0.2)

    res.t, res.y = t, y
    res.sample_ts = np.array(sample_ts)
    res.sample_ys = np.array(sample_ys) if sample_ys else np.empty((0, y.size))
    return res

"""Adaptive explicit Runge-Kutta integration with event localization.

Dormand-Prince 5(4) pair with a PI step controller.  Each accepted step
stores (s, y, f) so the solution supports cubic-Hermite dense evaluation.
Terminal events are located by bisection: the bracketing step is replayed
from its left endpoint with the same integrator, so the event time is
resolved to 1e-12 in s rather than to dense-output accuracy.

A fixed-step mode (``fixed_step=h``) turns off the controller; the
convergence tests use it to read off the empirical order.
"""

from __future__ import annotations

import math

import numpy as np

# Dormand-Prince coefficients
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200,
       187 / 2100, 1 / 40)
_ERR = tuple(b5 - b4 for b5, b4 in zip(_B5, _B4))


class Event:
    """Scalar event g(s, y); fires when g crosses zero in `direction`
    (-1: + to -, +1: - to +, 0: either).  Terminal events stop the run."""

    def __init__(self, fn, name="event", direction=-1, terminal=True):
        self.fn = fn
        self.name = name
        self.direction = direction
        self.terminal = terminal


class OdeResult:
    """Accepted-step skeleton of a trajectory plus the stop reason.

    eval(s) interpolates with a cubic Hermite on the containing step
    (adequate for trajectory comparison; event times are bisected
    separately and much tighter).
    """

    def __init__(self, ss, ys, fs, status, event_name=None):
        self.ss = np.asarray(ss)
        self.ys = np.vstack(ys)
        self.fs = np.vstack(fs)
        self.status = status
        self.event_name = event_name
        self.s_end = self.ss[-1]
        self.y_end = self.ys[-1]

    def eval(self, s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        idx = np.searchsorted(self.ss, s, side="right") - 1
        idx = np.clip(idx, 0, len(self.ss) - 2)
        s0 = self.ss[idx]
        s1 = self.ss[idx + 1]
        h = s1 - s0
        tau = np.where(h > 0, (s - s0) / np.where(h > 0, h, 1.0), 0.0)
        y0 = self.ys[idx]
        y1 = self.ys[idx + 1]
        f0 = self.fs[idx]
        f1 = self.fs[idx + 1]
        t = tau[:, None]
        h00 = (1 + 2 * t) * (1 - t) ** 2
        h10 = t * (1 - t) ** 2
        h01 = t * t * (3 - 2 * t)
        h11 = t * t * (t - 1)
        out = h00 * y0 + h10 * h[:, None] * f0 + h01 * y1 + h11 * h[:, None] * f1
        return out[0] if out.shape[0] == 1 else out


def _step(f, s, y, h, k1):
    """One DP5(4) step; returns (y5, err_vec, k_last)."""
    k = [k1]
    for i in range(1, 7):
        acc = _A[i][0] * k[0]
        for j in range(1, i):
            aij = _A[i][j]
            if aij:
                acc = acc + aij * k[j]
        k.append(f(s + _C[i] * h, y + h * acc))
    y5 = y + h * (_B5[0] * k[0] + _B5[2] * k[2] + _B5[3] * k[3]
                  + _B5[4] * k[4] + _B5[5] * k[5])
    err = h * (_ERR[0] * k[0] + _ERR[2] * k[2] + _ERR[3] * k[3]
               + _ERR[4] * k[4] + _ERR[5] * k[5] + _ERR[6] * k[6])
    return y5, err, k[6]


def _initial_step(f, s0, y0, f0, s_max, rtol, atol):
    scale = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * f0
    f1 = f(s0 + h0, y1)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, s_max - s0)


def integrate(f, s0, y0, s_max, events=(), rtol=1e-10, atol=1e-12,
              max_step=math.inf, fixed_step=None, max_steps=10_000_000):
    """Integrate y' = f(s, y) from (s0, y0) until s_max or a terminal event.

    Returns an OdeResult with status 'reached_end', 'event', or raises on a
    step-size underflow (location reported).
    """
    y = np.asarray(y0, dtype=float).copy()
    s = float(s0)
    fcur = np.asarray(f(s, y), dtype=float)
    ss = [s]
    ys = [y.copy()]
    fs = [fcur.copy()]
    gvals = [ev.fn(s, y) for ev in events]
    if fixed_step is not None:
        h = fixed_step
    else:
        h = _initial_step(f, s, y, fcur, s_max, rtol, atol)
        h = min(h, max_step)
    err_prev = 1.0
    status = "reached_end"
    event_name = None
    for _ in range(max_steps):
        if s >= s_max:
            break
        h = min(h, s_max - s)
        if h < 1e-14 * max(1.0, abs(s)):
            raise RuntimeError(f"step size underflow at s={s:.12g}")
        y_new, err_vec, k_last = _step(f, s, y, h, fcur)
        if fixed_step is None:
            scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
            err = np.sqrt(np.mean((err_vec / scale) ** 2))
            if err > 1.0:
                h *= max(0.2, 0.9 * err ** -0.2)
                continue
        s_new = s + h
        f_new = k_last  # FSAL: the last stage is f at (s+h, y_new)
        fired = None
        g_new = []
        for i, ev in enumerate(events):
            g1 = ev.fn(s_new, y_new)
            g_new.append(g1)
            g0 = gvals[i]
            crossed = (g0 > 0 >= g1) if ev.direction < 0 else \
                      (g0 < 0 <= g1) if ev.direction > 0 else \
                      (g0 > 0 >= g1 or g0 < 0 <= g1)
            if crossed and fired is None:
                fired = ev
        if fired is not None and fired.terminal:
            s_ev, y_ev = _bisect_event(f, s, y, h, fired, rtol, atol)
            ss.append(s_ev)
            ys.append(y_ev)
            fs.append(np.asarray(f(s_ev, y_ev), dtype=float))
            status = "event"
            event_name = fired.name
            break
        s, y, fcur = s_new, y_new, f_new
        gvals = g_new
        ss.append(s)
        ys.append(y.copy())
        fs.append(fcur.copy())
        if fixed_step is None:
            # PI controller
            fac = 0.9 * err ** -0.14 * err_prev ** 0.06 if err > 0 else 5.0
            h = min(h * min(5.0, max(0.2, fac)), max_step)
            err_prev = max(err, 1e-10)
    else:
        raise RuntimeError("max_steps exceeded in integrate()")
    return OdeResult(ss, ys, fs, status, event_name)


def _bisect_event(f, s_left, y_left, h, ev, rtol, atol, tol=1e-12):
    """Locate the event inside (s_left, s_left+h] by bisection; each probe
    re-integrates from the step's left endpoint, so the located time
    inherits integrator accuracy rather than interpolant accuracy."""
    lo, hi = 0.0, h

    def probe(dt):
        if dt <= 0:
            return y_left
        sub = integrate(f, s_left, y_left, s_left + dt,
                        rtol=rtol, atol=atol)
        return sub.y_end

    g_lo = ev.fn(s_left, y_left)
    for _ in range(80):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        y_mid = probe(mid)
        g_mid = ev.fn(s_left + mid, y_mid)
        same_side = (g_mid > 0) if g_lo > 0 else (g_mid < 0)
        if same_side:
            lo = mid
        else:
            hi = mid
    y_ev = probe(hi)
    return s_left + hi, y_ev

"""Limiting trajectories of the tracked densities, and the constants they
produce.

Densities are per-n: x (path), y (paired), l1/l2 (one-/two-red) for the
randomized strategy; x, y, r and the blue-degree type densities c_{k1,k2}
for the degree-greedy strategy, phase by phase.  The right-hand sides are
the per-round expected changes with the O(1/n) corrections dropped.

Boundary times: trajectories exit through x -> 1 (randomized stage) or
through d = (minimum-level type mass) -> 0 (each greedy phase).  The run
stops at a small positive cutoff of the exit function g and the remaining
time is extrapolated from the local model

    g(s* + dt) = g + g' dt + (g''/2) dt^2,

whose admissible root is dt = 2g / (-g' + sqrt(g'^2 - 2 g g'')).  With g''
estimated from the last accepted steps this covers both exit shapes seen
here: the greedy d-exit is linear (g' stays away from 0; dt ~ g/|g'|) and
the randomized x-exit is a quadratic contact (g' ~ -2 sqrt(c g), the
discriminant vanishes, dt ~ 2g/|g'|).  Cutting the cutoff tenfold moves
the extrapolated constants by well under the acceptance tolerances.
"""

from __future__ import annotations

import math

import numpy as np

from .rk import Event, integrate

S_LIMIT = 3.0  # rounds-per-vertex bound; no trajectory here survives past it


def remaining_time(g, gp, gpp):
    """Positive root of the quadratic exit model; g > 0, gp < 0."""
    if gp >= 0:
        raise RuntimeError("exit function is not decreasing at the cutoff")
    disc = gp * gp - 2.0 * g * gpp
    if disc < 0.0:
        disc = 0.0
    return 2.0 * g / (-gp + math.sqrt(disc))


def _exit_curvature(res, gprime):
    """g'' at the end of a trajectory from the last stored derivatives."""
    s1, s0 = res.ss[-1], res.ss[-2]
    if s1 <= s0:
        return 0.0
    return (gprime(res.ys[-1], res.fs[-1]) - gprime(res.ys[-2], res.fs[-2])) \
        / (s1 - s0)


# ----------------------------------------------------------------------
# randomized-strategy system: v = (x, y, l1, l2)

def fr_drift(s, v):
    x, y, l1, l2 = v
    ux = 1.0 - x
    lam = 1.0 + y / ux
    a = 2.0 * y / ux
    l = l1 + l2
    qmass = x - 5.0 * l
    if qmass < 0.0:
        qmass = 0.0
    dx = 2.0 * y + 2.0 * l * lam
    dy = -2.0 * y + 2.0 * (1.0 - x - y) - 2.0 * l * a
    dl1 = (qmass - 2.0 * l1
           + (2.0 * l1 * lam + 2.0 * l2 * lam + 2.0 * y) * (2.0 * l2 - l1) / ux
           + 2.0 * l2 - l1)
    dl2 = (l1 - 2.0 * l2 * a
           - (2.0 * l1 + 2.0 * l2) * lam * 2.0 * l2 / ux - 2.0 * l2)
    return np.array((dx, dy, dl1, dl2))


def solve_fr(init=(0.0, 0.0, 0.0, 0.0), eps_stop=1e-6, rtol=1e-11, atol=1e-14,
             s0=0.0):
    """Integrate the randomized-stage system until 1 - x <= eps_stop.

    Returns (alpha_star, result): the exit time extrapolated to the x -> 1
    contact, and the trajectory up to the cutoff.
    """
    if 1.0 - init[0] <= eps_stop:
        raise ValueError("initial state already past the stop cutoff")
    ev = Event(lambda s, v: (1.0 - v[0]) - eps_stop, name="x_saturated",
               direction=-1)
    res = integrate(fr_drift, s0, init, s0 + S_LIMIT, events=(ev,),
                    rtol=rtol, atol=atol)
    if res.status != "event":
        raise RuntimeError("randomized system never saturated; "
                           f"status={res.status} at s={res.s_end:.6f}")
    g = 1.0 - res.y_end[0]
    gp = -fr_drift(res.s_end, res.y_end)[0]
    gpp = _exit_curvature(res, lambda y, f: -f[0])
    alpha = res.s_end + remaining_time(g, gp, gpp)
    return alpha, res


# ----------------------------------------------------------------------
# degree-greedy phase systems
#
# Phase q state vector: (x, y, r, cmin[0..q-1], cmax[0..q]) where
# cmin[k1] = c_{k1, q-1-k1} (minimum blue-degree level, mass d) and
# cmax[k1] = c_{k1, q-k1}.  Auxiliaries per level: b = k1*c counts blue
# path vertices through their off-path end's type, m = k2*c the magenta
# ones; l = b + m + r.

class DgPhaseSystem:
    """Drift of phase q; exposes the exit function d = sum(cmin)."""

    def __init__(self, q):
        self.q = q
        self.k1min = np.arange(q, dtype=float)
        self.k2min = (q - 1) - self.k1min
        self.k1max = np.arange(q + 1, dtype=float)
        self.k2max = q - self.k1max
        self.dim = 3 + 2 * q + 1

    def unpack(self, v):
        q = self.q
        return v[0], v[1], v[2], v[3:3 + q], v[3 + q:4 + 2 * q]

    def d_of(self, v):
        return float(np.sum(v[3:3 + self.q]))

    def __call__(self, s, v):
        q = self.q
        x, y, r = v[0], v[1], v[2]
        cmin = v[3:3 + q]
        cmax = v[3 + q:4 + 2 * q]
        bmin = self.k1min * cmin
        mmin = self.k2min * cmin
        bmax = self.k1max * cmax
        mmax = self.k2max * cmax
        b = bmin.sum() + bmax.sum()
        m = mmin.sum() + mmax.sum()
        l = b + m + r
        d = cmin.sum()
        ux = 1.0 - x
        gam = 1.0 + y / ux
        a = 2.0 * y / ux
        qmass = x - 5.0 * l
        if qmass < 0.0:
            qmass = 0.0

        dx = 2.0 * (y + l * gam)
        dy = -2.0 * y + 2.0 * (1.0 - x - y) - 2.0 * a * l

        ym2 = y * m / (ux * ux)
        s1 = 2.0 * ((bmin * (self.k2min + ym2)).sum()
                    + (bmax * (self.k2max + ym2)).sum())
        s2 = 2.0 * ((mmin * (self.k2min + ym2)).sum()
                    + (mmax * (self.k2max + ym2)).sum())
        dr = (y * (2.0 * m / ux - 2.0 * r / ux)
              - 2.0 * (b + m) * r * gam / ux + s1 + s2
              - 2.0 * r * (1.0 + r * gam / ux)
              + 2.0 * r * m * gam / ux - r)

        bm = b + m

        def common(c, bb, mm):
            mu = np.empty_like(mm)
            mu[0] = 0.0
            mu[1:] = mm[:-1]
            bdn = np.empty_like(bb)
            bdn[-1] = 0.0
            bdn[:-1] = bb[1:]
            return (y * (2.0 * mu - 2.0 * c - 2.0 * mm) / ux
                    + 2.0 * bm * gam * (mu - mm) / ux
                    - bm * a * c / ux
                    - 2.0 * bb - 2.0 * mm
                    + 2.0 * r * gam * (mu - mm - c) / ux
                    + bdn - bb)

        dcmin = common(cmin, bmin, mmin) - (qmass + r) * cmin / d
        up = np.concatenate(([0.0], cmin))
        same = np.concatenate((cmin, [0.0]))
        dcmax = common(cmax, bmax, mmax) + (qmass * up + r * same) / d
        return np.concatenate(([dx, dy, dr], dcmin, dcmax))


class PipelineReport:
    """Greedy-phases + randomized-stage chain: per-phase exit times, the
    hand-off densities, and the final constants."""

    def __init__(self):
        self.sigmas = []
        self.xhat = None
        self.yhat = None
        self.rhat = None
        self.mhat = None
        self.l1hat = None
        self.alpha_star = None
        self.alpha = None
        self.phases = 0
        self.final_types = None
        self.fr_result = None

    def summary(self):
        out = {
            "phases": self.phases,
            "sigma": list(self.sigmas),
            "alpha_star": self.alpha_star,
            "alpha": self.alpha,
        }
        if self.phases:
            out.update(xhat=self.xhat, yhat=self.yhat, l1hat=self.l1hat,
                       rhat=self.rhat, mhat=self.mhat)
        return out


def run_pipeline(phases, delta_stop=1e-8, eps_stop=1e-6, rtol=1e-11,
                 atol=1e-14, keep_solutions=False):
    """Chain the greedy phase systems for q = 1..phases, then the
    randomized stage from the hand-off densities; returns a PipelineReport.

    phases = 0 degenerates to the randomized system from the empty start.
    """
    rep = PipelineReport()
    rep.phases = phases
    if keep_solutions:
        rep.solutions = []
    x = y = r = 0.0
    cmin = np.array([1.0])
    sigma = 0.0
    for q in range(1, phases + 1):
        sys_q = DgPhaseSystem(q)
        v0 = np.concatenate(([x, y, r], cmin, np.zeros(q + 1)))
        ev = Event(lambda s, v, sq=sys_q: sq.d_of(v) - delta_stop,
                   name="level_drained", direction=-1)
        res = integrate(sys_q, sigma, v0, sigma + S_LIMIT, events=(ev,),
                        rtol=rtol, atol=atol)
        if res.status != "event":
            raise RuntimeError(f"phase {q} never drained its minimum level "
                               f"(status {res.status} at s={res.s_end:.6f})")
        v_end = res.y_end
        dv = sys_q(res.s_end, v_end)
        g = sys_q.d_of(v_end)
        gp = float(np.sum(dv[3:3 + q]))
        gpp = _exit_curvature(
            res, lambda yv, fv, q=q: float(np.sum(fv[3:3 + q])))
        sigma = res.s_end + remaining_time(g, gp, gpp)
        rep.sigmas.append(sigma)
        if keep_solutions:
            rep.solutions.append(res)
        x, y, r = float(v_end[0]), float(v_end[1]), float(v_end[2])
        cmin = v_end[3 + q:4 + 2 * q].copy()
    if phases:
        k1 = np.arange(phases + 1, dtype=float)
        k2 = phases - k1
        rep.xhat, rep.yhat, rep.rhat = x, y, r
        rep.mhat = float((k2 * cmin).sum())
        rep.l1hat = rep.mhat + rep.rhat
        rep.final_types = cmin.copy()
        init = (x, y, rep.l1hat, 0.0)
    else:
        init = (0.0, 0.0, 0.0, 0.0)
    alpha_star, fr_res = solve_fr(init, eps_stop=eps_stop, rtol=rtol,
                                  atol=atol, s0=sigma)
    rep.fr_result = fr_res
    rep.alpha_star = alpha_star - sigma
    rep.alpha = alpha_star
    return rep

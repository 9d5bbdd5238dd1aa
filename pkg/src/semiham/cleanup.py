"""Clean-up stage (id "cleanup"): absorb the last few off-path vertices and
close the cycle.

Takes a state whose path covers (1-eps)n vertices, all other vertices
unpaired.  Runs in iterations indexed k = 1, 2, ...; with j_0 = eps*n the
target off-path counts are j_k = ceil(j_{k-1}/2) while j_{k-1} > n^{1/4},
then j_k = j_{k-1} - 1 down to zero.  Iteration k:

  (i)   wipe all colors;
  (ii)  reservoir: spend m_k rounds (m_k = ceil(sqrt(eps) 2^{-k/2} n) in the
        halving regime, ceil(sqrt(n)) after); a square landing on an
        on-path, uncolored vertex with no red path-neighbour gets a red edge
        to an off-path vertex with the fewest red edges, else the round is
        burned;
  (iii) absorb: a square landing next to a red vertex x pulls x's red end
        into the path (detour through it), which also uncolors every red
        vertex pointing at the absorbed end; repeat until j_{k-1} - j_k
        vertices are absorbed.

Each iteration's absorb loop is capped at ten times its expected length;
on a cap hit the iteration is logged and retried with a fresh reservoir.

Closing the cycle: with the path spanning everything, stage one spends
ceil(sqrt(n) log n) rounds sending every circle to the left endpoint,
marking the left neighbour of each square; stage two sends every circle to
the right endpoint until a square hits a marked vertex, at which point one
edge swap yields the cycle.  A miss within budget returns "retry"; the
caller re-runs with fresh randomness (capped attempts).
"""

from __future__ import annotations

import logging
import math

from .graph_state import ON_PATH

log = logging.getLogger(__name__)

EPS_MAX = 0.05  # accepted hand-off sizes; the analysis wants eps -> 0


class CleanupPlan:
    """Target counts j_k and reservoir sizes m_k for a given hand-off."""

    def __init__(self, n, j0):
        self.n = n
        self.j0 = j0
        thr = n ** 0.25
        eps = j0 / n
        js = [j0]
        ms = [0]  # 1-indexed
        k = 0
        while js[-1] > 0:
            k += 1
            j = js[-1]
            if j > thr:
                js.append((j + 1) // 2)
                ms.append(max(math.ceil(math.sqrt(eps) * 2 ** (-k / 2) * n),
                              math.ceil(math.sqrt(n))))
            else:
                js.append(j - 1)
                ms.append(math.ceil(math.sqrt(n)))
        self.js = js
        self.ms = ms
        self.tau = len(js) - 1
        self.tau1 = next((i for i, j in enumerate(js) if j <= thr), 0)


def _build_reservoir_buckets(state, rdeg, bpos):
    """Min-red-degree buckets over off-path vertices (fresh each iteration;
    all colors were just wiped, so every degree starts at zero)."""
    members = list(state.uset.items)
    for v in members:
        rdeg[v] = 0
        bpos[v] = 0
    buckets = [members[:]]
    for i, v in enumerate(members):
        bpos[v] = i
    return buckets


def _bucket_promote(buckets, bpos, rdeg, v):
    d = rdeg[v]
    lst = buckets[d]
    i = bpos[v]
    last = lst.pop()
    if last != v:
        lst[i] = last
        bpos[last] = i
    rdeg[v] = d + 1
    if len(buckets) == d + 1:
        buckets.append([])
    nxt = buckets[d + 1]
    bpos[v] = len(nxt)
    nxt.append(v)


def _bucket_drop(buckets, bpos, rdeg, v):
    lst = buckets[rdeg[v]]
    i = bpos[v]
    last = lst.pop()
    if last != v:
        lst[i] = last
        bpos[last] = i


def _sample_min_red(buckets, rng):
    for lst in buckets:
        if lst:
            return lst[rng.index(len(lst))]
    return -1


def cleanup_run(state, rng, close=True, max_iter_retries=5):
    """Absorb every off-path vertex, then (by default) close the cycle.

    Returns the number of rounds consumed.  The state must be in cleanup
    mode with no pairs left; eps = off-path fraction must be at most
    EPS_MAX.
    """
    n = state.n
    if state.mode != "cleanup":
        raise ValueError("state must be in cleanup mode")
    if len(state.yset) != 0:
        raise ValueError("dissolve pairs before the clean-up stage")
    j0 = n - state.x_size
    if j0 / n > EPS_MAX:
        raise ValueError(f"clean-up hand-off too early: eps={j0 / n:.4f} > {EPS_MAX}")
    t_start = state.t
    plan = CleanupPlan(n, j0)
    rdeg = [0] * n
    bpos = [0] * n
    mem = state.mem
    cls = state.cls
    left, right = state.left, state.right
    for k in range(1, plan.tau + 1):
        needed = plan.js[k - 1] - plan.js[k]
        m_k = plan.ms[k]
        for attempt in range(max_iter_retries):
            state.strip_colors()
            buckets = _build_reservoir_buckets(state, rdeg, bpos)
            for _ in range(m_k):
                u = rng.index(n)
                if (mem[u] != ON_PATH or cls[u]
                        or (left[u] >= 0 and cls[left[u]])
                        or (right[u] >= 0 and cls[right[u]])):
                    state.pass_round(u)
                    continue
                v = _sample_min_red(buckets, rng)
                if v < 0:
                    state.pass_round(u)
                    continue
                state.color_edge(u, v, "red")
                _bucket_promote(buckets, bpos, rdeg, v)
            absorbed = 0
            cap = math.ceil(10 * (needed * n / (0.3 * m_k)
                                  + math.sqrt(n) * math.log(n) ** 2))
            spent = 0
            while absorbed < needed and spent < cap:
                u = rng.index(n)
                spent += 1
                if mem[u] != ON_PATH:
                    state.pass_round(u)
                    continue
                x = left[u]
                if x < 0 or not cls[x]:
                    x = right[u]
                    if x < 0 or not cls[x]:
                        state.pass_round(u)
                        continue
                far = state.red1[x]
                _bucket_drop(buckets, bpos, rdeg, far)
                state.path_augment(u, x, far)
                absorbed += 1
            if absorbed >= needed:
                break
            log.warning("clean-up iteration %d hit its round cap; retrying "
                        "with a fresh reservoir", k)
        else:
            raise RuntimeError(f"clean-up iteration {k} failed "
                               f"{max_iter_retries} times")
    state.strip_colors()
    if close:
        close_cycle(state, rng)
    return state.t - t_start


def close_cycle(state, rng, max_attempts=10):
    """Turn a full-span path into a cycle; returns rounds used.

    Each attempt spends up to ceil(sqrt(n) log n) rounds per stage (2x that
    total); a missed attempt is retried with fresh randomness.
    """
    n = state.n
    if state.x_size != n:
        raise ValueError("cycle closing needs a path covering every vertex")
    t_start = state.t
    budget = math.ceil(math.sqrt(n) * math.log(n))
    u_end = state.head
    v_end = state.tail
    left, right = state.left, state.right
    for _ in range(max_attempts):
        marked = bytearray(n)
        for _ in range(budget):
            u = rng.index(n)
            if u == u_end:
                state.pass_round(u)
                continue
            state.pass_round(u, u_end)
            marked[left[u]] = 1
        for _ in range(budget):
            u = rng.index(n)
            if u == v_end:
                state.pass_round(u)
                continue
            state.pass_round(u, v_end)
            if marked[u]:
                x = u
                y = right[x]
                seg1 = []
                v = state.head
                while True:
                    seg1.append(v)
                    if v == x:
                        break
                    v = right[v]
                seg2 = []
                v = state.tail
                while True:
                    seg2.append(v)
                    if v == y:
                        break
                    v = left[v]
                state.final_cycle = seg1 + seg2
                return state.t - t_start
    raise RetryExhausted(f"no marked square hit in {max_attempts} attempts")


class RetryExhausted(RuntimeError):
    """Cycle closing missed its budget in every attempt (vanishingly rare
    at the intended sizes; the caller may rerun with another seed)."""


def verify_hamiltonian_cycle(state, extra_logs=()):
    """Explicitly traverse state.final_cycle: n distinct vertices, and every
    consecutive pair (wrapping) realized by a logged edge of this state or
    of the earlier stages' logs."""
    cycle = getattr(state, "final_cycle", None)
    if cycle is None:
        return False, "no cycle recorded"
    n = state.n
    if len(cycle) != n or len(set(cycle)) != n:
        return False, "cycle does not span every vertex exactly once"
    edges = set()
    logs = [(state.log_sq, state.log_ci)]
    logs.extend(extra_logs)
    for sq, ci in logs:
        for a, b in zip(sq, ci):
            edges.add((a, b) if a < b else (b, a))
    for i, a in enumerate(cycle):
        b = cycle[(i + 1) % n]
        key = (a, b) if a < b else (b, a)
        if key not in edges:
            return False, f"cycle edge {key} was never added by the process"
    return True, "ok"

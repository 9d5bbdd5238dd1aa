"""Process driver: draws squares, applies a strategy's decisions, records
traces and phase events, and measures one-step drifts at frozen states.

A run is fully determined by (strategy, n, stop conditions, seed): squares
and every strategy-internal circle draw come from one buffered stream.

``empirical_drift`` estimates the conditional one-step expectation of the
tracked counts at a frozen state by Monte Carlo over the square (and, where
the strategy randomizes the circle, over the circle too).  The estimators
never mutate the state: per-decision deltas are computed by read-only
inspection and are checked against the real mutation path in the tests.
"""

from __future__ import annotations

import math

from .graph_state import IN_U, IN_Y, ON_PATH, ProcessState
from .rng import RandomStream


class StopCondition:
    """When to end a run: 'steps' (budget for this run), 'unsat_below'
    (off-path vertex count <= value), or 'phase_done' (every off-path vertex
    has blue degree >= value; dg mode)."""

    KINDS = ("steps", "unsat_below", "phase_done")

    def __init__(self, kind, value):
        if kind not in self.KINDS:
            raise ValueError(f"unknown stop condition {kind!r}")
        self.kind = kind
        self.value = int(value)

    def __repr__(self):
        return f"StopCondition({self.kind!r}, {self.value})"


def steps(budget):
    return StopCondition("steps", budget)


def unsat_below(count):
    return StopCondition("unsat_below", count)


def phase_done(q):
    return StopCondition("phase_done", q)


class Trace:
    """Sampled time series of the tracked counts plus an event log.

    fr rows: (t, X, Y, L1, L2); dg rows: (t, phase, X, Y, R, B, M, D) with D
    the count of off-path vertices at the current minimum blue degree.
    """

    FR_COLUMNS = ("t", "X", "Y", "L1", "L2")
    DG_COLUMNS = ("t", "phase", "X", "Y", "R", "B", "M", "D")

    def __init__(self, mode, stride):
        self.mode = mode
        self.stride = stride
        self.columns = self.DG_COLUMNS if mode == "dg" else self.FR_COLUMNS
        self.rows = []
        self.events = []
        self.status = "running"

    def record(self, state):
        if state.mode == "dg":
            d = state.min_unsat_degree()
            dc = state.dcounts[d] if d >= 0 else 0
            self.rows.append((state.t, d + 1, state.x_size, len(state.yset),
                              state.rcount, state.bcount, state.mcount, dc))
        else:
            self.rows.append((state.t, state.x_size, len(state.yset),
                              state.l1, state.l2))

    def column(self, name):
        i = self.columns.index(name)
        return [r[i] for r in self.rows]


def default_stride(n):
    return 1 if n <= 100_000 else math.ceil(n / 10_000)


def apply_decision(state, u, decision):
    tag = decision[0]
    if tag == "y":
        state.y_extend(u, decision[1])
    elif tag == "p":
        state.path_extend(u)
    elif tag == "a":
        state.path_augment(u, decision[1], decision[2])
    elif tag == "c":
        state.color_edge(u, decision[1], decision[2])
    elif tag == "pass":
        state.pass_round(u)
    else:
        raise ValueError(f"strategy produced unknown decision {decision!r}")


class RunResult:
    def __init__(self, state, trace, status, steps_done):
        self.state = state
        self.trace = trace
        self.status = status
        self.steps_done = steps_done


def run(strategy, n=None, stop=(), seed=None, state=None, rng=None,
        stride=None, max_steps=None, fused=True):
    """Drive `strategy` until a stop condition fires.

    Either pass n+seed for a fresh run or an existing state (+rng) to
    continue one.  Returns a RunResult; status is the stop kind that fired,
    or 'exhausted' when the safety budget ran out first.  `fused=False`
    forces the generic decide/apply loop (the fused fr loop is the default
    where it applies; both paths are draw-for-draw identical).
    """
    if state is None:
        state = ProcessState(n, strategy.mode)
    n = state.n
    if rng is None:
        rng = RandomStream(seed if seed is not None else 0)
    if isinstance(stop, StopCondition):
        stop = (stop,)
    for sc in stop:
        if sc.kind == "phase_done" and state.mode != "dg":
            raise ValueError("phase_done stops only apply to dg runs")
    if stride is None:
        stride = default_stride(n)
    budget = None
    for sc in stop:
        if sc.kind == "steps":
            budget = sc.value if budget is None else min(budget, sc.value)
    if max_steps is None:
        max_steps = 30 * n
    if budget is not None:
        max_steps = min(max_steps, budget)

    trace = Trace(state.mode, stride)
    trace.record(state)
    others = [sc for sc in stop if sc.kind != "steps"]

    if (fused and state.mode == "fr"
            and getattr(strategy, "name", "") == "fr"
            and all(sc.kind == "unsat_below" for sc in others)):
        unsat_stop = max((sc.value for sc in others), default=-1)
        done, reason = state.run_rounds_fr(
            rng, max_steps, unsat_stop=unsat_stop, stride=stride,
            rows=trace.rows)
        if reason == "unsat_below":
            status = "unsat_below"
        else:
            status = "steps" if budget is not None and done >= budget \
                else "exhausted"
        if not trace.rows or trace.rows[-1][0] != state.t:
            trace.record(state)
        trace.status = status
        return RunResult(state, trace, status, done)

    dg = state.mode == "dg"
    last_min = state.min_unsat_degree() if dg else None
    step = getattr(strategy, "step", None)
    if step is None:
        decide = strategy.decide

        def step(st, u, r):
            apply_decision(st, u, decide(st, u, r))
    index = rng.index
    t0 = state.t
    status = "exhausted"
    while True:
        done = None
        for sc in others:
            if sc.kind == "unsat_below":
                if state.n - state.x_size <= sc.value:
                    done = sc.kind
                    break
            elif sc.kind == "phase_done":
                md = state.min_unsat_degree()
                if md < 0 or md >= sc.value:
                    done = sc.kind
                    break
        if done:
            status = done
            break
        if state.t - t0 >= max_steps:
            status = "steps" if budget is not None and \
                state.t - t0 >= budget else "exhausted"
            break
        u = index(n)
        step(state, u, rng)
        if dg:
            md = state.min_unsat_degree()
            if md > last_min:
                for q in range(last_min + 1, md + 1):
                    trace.events.append(("tau", q, state.t))
                last_min = md
        if (state.t - t0) % stride == 0:
            trace.record(state)
    if not trace.rows or trace.rows[-1][0] != state.t:
        trace.record(state)
    trace.status = status
    return RunResult(state, trace, status, state.t - t0)


# ----------------------------------------------------------------------
# one-step drift estimation at a frozen state

def _uncolor_deltas_fr(state, absorbed):
    """(dL1, dL2) from wiping colored edges whose off-path end is absorbed."""
    lost = {}
    inc = state.inc_red
    for z in absorbed:
        for p in inc.get(z, ()):
            lost[p] = lost.get(p, 0) + 1
    dl1 = dl2 = 0
    cls = state.cls
    for p, k in lost.items():
        old = cls[p]
        new = old - k
        dl1 += (new == 1) - (old == 1)
        dl2 += (new == 2) - (old == 2)
    return dl1, dl2


def decision_deltas_fr(state, u, decision):
    """(dX, dY, dL1, dL2) the decision would cause; state untouched."""
    tag = decision[0]
    if tag == "y":
        return (0, 2, 0, 0)
    if tag == "p":
        dl1, dl2 = _uncolor_deltas_fr(state, (u, state.ypartner[u]))
        return (2, -2, dl1, dl2)
    if tag == "a":
        far = decision[2]
        if state.mem[far] == IN_U:
            dl1, dl2 = _uncolor_deltas_fr(state, (far,))
            return (1, 0, dl1, dl2)
        dl1, dl2 = _uncolor_deltas_fr(state, (far, state.ypartner[far]))
        return (2, -2, dl1, dl2)
    if tag == "c":
        if state.cls[u]:
            return (0, 0, -1, 1)
        return (0, 0, 1, 0)
    return (0, 0, 0, 0)


def decision_deltas_dg(state, u, decision):
    """(dX, dY, dR, dC) for a dg decision; dC maps (k1,k2) -> delta."""
    tag = decision[0]
    dc = {}

    def bump(key, by):
        dc[key] = dc.get(key, 0) + by

    if tag == "y":
        return (0, 2, 0, dc)
    if tag == "pass":
        return (0, 0, 0, dc)
    if tag == "c":
        v, color = decision[1], decision[2]
        k1, k2 = state.k1, state.k2
        if color == "blue":
            if state.cls[u] == 2:  # red -> magenta; v sees a magenta
                bump((k1[v], k2[v]), -1)
                bump((k1[v], k2[v] + 1), 1)
                return (0, 0, -1, dc)
            bump((k1[v], k2[v]), -1)  # fresh blue vertex; v sees a blue
            bump((k1[v] + 1, k2[v]), 1)
            return (0, 0, 0, dc)
        # red on a blue vertex: its blue partner now sees a magenta
        w = state.blue_end[u]
        bump((k1[w], k2[w]), -1)
        bump((k1[w] - 1, k2[w] + 1), 1)
        return (0, 0, 0, dc)

    # path growth: collect the absorbed off-path vertices
    if tag == "p":
        absorbed = (u, state.ypartner[u])
        dx, dy = 2, -2
    else:
        far = decision[2]
        if state.mem[far] == IN_U:
            absorbed = (far,)
            dx, dy = 1, 0
        else:
            absorbed = (far, state.ypartner[far])
            dx, dy = 2, -2
    aset = set(absorbed)
    k1, k2 = state.k1, state.k2
    for z in absorbed:
        bump((k1[z], k2[z]), -1)
    lost_red = {}
    lost_blue = {}
    for z in absorbed:
        for p in state.inc_red.get(z, ()):
            lost_red[p] = True
        for p in state.inc_blue.get(z, ()):
            lost_blue[p] = True
    dr = 0
    for p in set(lost_red) | set(lost_blue):
        c = state.cls[p]
        hb = p not in lost_blue and state.blue_end[p] >= 0
        hr = p not in lost_red and state.red_end[p] >= 0
        if c == 3:  # magenta
            if hb and not hr:
                w = state.blue_end[p]
                if w not in aset:
                    bump((k1[w], k2[w]), -1)
                    bump((k1[w] + 1, k2[w] - 1), 1)
            elif hr and not hb:
                dr += 1
        elif c == 2:  # red, loses its red edge
            dr -= 1
    return (dx, dy, dr, dc)


# ----------------------------------------------------------------------
# full three-stage construction

class FullRunResult:
    def __init__(self):
        self.status = "failed"
        self.stage_steps = {}
        self.total_steps = 0
        self.cycle = None
        self.detail = ""


def run_full(n, phases, seed, eps_handoff=9e-4, stride=None):
    """Run the degree-greedy stage for `phases` phases, continue with the
    randomized stage until at most eps_handoff*n vertices are off the path,
    then clean up and close the cycle.  Verifies the result by traversal
    against the union of the stage edge logs."""
    from .cleanup import cleanup_run, verify_hamiltonian_cycle
    from .degree_greedy import DegreeGreedy
    from .fully_randomized import FullyRandomized
    from .graph_state import ProcessState

    rng = RandomStream(seed)
    res = FullRunResult()
    extra_logs = []
    handoff = max(1, int(eps_handoff * n))
    if phases > 0:
        r1 = run(DegreeGreedy(phases), n=n, rng=rng,
                 stop=(phase_done(phases), unsat_below(handoff)), stride=stride)
        res.stage_steps["degree_greedy"] = r1.steps_done
        path, pairs, reds = r1.state.export_path_pairs_reds()
        extra_logs.append((r1.state.log_sq, r1.state.log_ci))
        state = ProcessState.from_path_pairs_reds(n, path, pairs, reds, mode="fr")
    else:
        res.stage_steps["degree_greedy"] = 0
        state = ProcessState(n, mode="fr")
    r2 = run(FullyRandomized(), rng=rng, state=state,
             stop=unsat_below(handoff), stride=stride)
    res.stage_steps["fully_randomized"] = r2.steps_done
    state.to_cleanup_mode()
    res.stage_steps["cleanup"] = cleanup_run(state, rng)
    res.total_steps = sum(res.stage_steps.values())
    ok, why = verify_hamiltonian_cycle(state, extra_logs)
    res.status = "hamiltonian" if ok else "failed"
    res.detail = why
    res.cycle = getattr(state, "final_cycle", None)
    res.state = state
    return res


def empirical_drift(state, strategy, samples, rng, ctypes=()):
    """Monte Carlo mean and standard error of the one-step changes of the
    tracked counts at the frozen `state` over `samples` square draws."""
    if samples < 1000:
        raise ValueError("need at least 1000 samples for a usable stderr")
    n = state.n
    dg = strategy.mode == "dg"
    names = ["X", "Y", "R"] if dg else ["X", "Y", "L1", "L2"]
    names += [f"C{a},{b}" for a, b in ctypes]
    sums = [0.0] * len(names)
    sqs = [0.0] * len(names)
    for _ in range(samples):
        u = rng.index(n)
        d = strategy.decide(state, u, rng)
        if dg:
            dx, dy, dr, dcd = decision_deltas_dg(state, u, d)
            vals = [dx, dy, dr] + [dcd.get(k, 0) for k in ctypes]
        else:
            vals = list(decision_deltas_fr(state, u, d))
        for i, v in enumerate(vals):
            sums[i] += v
            sqs[i] += v * v
    out = {}
    for i, name in enumerate(names):
        mean = sums[i] / samples
        var = max(sqs[i] / samples - mean * mean, 0.0)
        out[name] = (mean, math.sqrt(var / samples))
    return out

"""Degree-greedy strategy (id "dg").

Like the randomized strategy, but colored edges are placed to spread blue
degree evenly over the off-path vertices, in phases: while any off-path
vertex has blue degree q-1, fresh blue circles go to minimum-blue-degree
off-path vertices, so during phase q every off-path vertex has blue degree
q-1 or q.

Per round, with u the random square:

1. u unpaired off-path, another exists: pair them (circle uniform over the
   unpaired off-path vertices minus u).
2. u paired: splice its pair onto the path's left end.
3. u path-adjacent to colored x: detour via x's blue edge when it has one,
   else its red edge.
4. u permissible: blue edge to a uniform minimum-blue-degree off-path
   vertex (u becomes blue).
5. u red: same circle rule, edge blue (u becomes magenta).
6. u blue: red edge to a uniform off-path vertex (u becomes magenta).
7. otherwise (magenta hit, distance-2 landing, trimmed vertex): pass.

The circle pool in 4/5 is all off-path vertices, paired or not: the phase
clock D_{q-1} counts every off-path vertex, and it must be driven to zero
by greedy placement rather than by waiting for pair absorption.  Case 6
likewise draws over all off-path vertices so red ends stay exchangeable
with the off-path population; see the randomized strategy's note.
"""

from __future__ import annotations

PASS = ("pass",)


class DegreeGreedy:
    mode = "dg"
    name = "dg"

    def __init__(self, phases=100):
        self.phases = phases

    @staticmethod
    def step(state, u, rng):
        state.step_dg(u, rng)

    def decide(self, state, u, rng):
        kind = state.classify(u)
        tag = kind[0]
        if tag == "u":
            uset = state.uset
            if len(uset.items) >= 2:
                return ("y", uset.sample_excluding(rng, u))
            return PASS
        if tag == "y":
            return ("p",)
        if tag == "adj":
            x = kind[1]
            return ("a", x, state.aug_edge_of(x))
        if tag == "q":
            v = state.sample_min_unsat(rng)
            if v < 0:
                return PASS
            return ("c", v, "blue")
        if tag == "hit":
            c = kind[1]
            if c == 2:  # red vertex gains a blue edge
                v = state.sample_min_unsat(rng)
                if v < 0:
                    return PASS
                return ("c", v, "blue")
            if c == 1:  # blue vertex gains a red edge
                nu = len(state.uset.items)
                m = nu + len(state.yset.items)
                if m == 0:
                    return PASS
                k = rng.index(m)
                v = state.uset.items[k] if k < nu else state.yset.items[k - nu]
                return ("c", v, "red")
        return PASS

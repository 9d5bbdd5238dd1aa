"""Randomized-placement strategy (id "fr").

Per round, with u the random square:

1. u unpaired off-path and another such vertex exists: pair them.
2. u paired: splice its pair onto the path's left end.
3. u path-adjacent to a colored vertex x: detour through x's red edge
   (lowest-numbered end when x has two).
4. u permissible: draw the circle uniformly over ALL off-path vertices and
   color the edge red (u becomes one-red).
5. u one-red: same draw, edge red (u becomes two-red).
6. otherwise pass (two-red hits, distance-2 landings, trimmed path
   vertices).

Both red-edge cases draw the circle uniformly over all off-path vertices,
paired or not.  Restricting case 5 to unpaired vertices skews where red
ends live (paired vertices outlive unpaired ones), and the measured
one-step drifts then depart systematically from the expected-change
formulas the whole calibration rests on; the uniform draw keeps red ends
exchangeable with the off-path population.

When the sampling pool for 4/5 is empty the round is passed; that only
happens after the stage's stop condition is already due.
"""

from __future__ import annotations

PASS = ("pass",)


class FullyRandomized:
    mode = "fr"
    name = "fr"

    @staticmethod
    def step(state, u, rng):
        state.step_fr(u, rng)

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
            nu = len(state.uset.items)
            m = nu + len(state.yset.items)
            if m == 0:
                return PASS
            k = rng.index(m)
            v = state.uset.items[k] if k < nu else state.yset.items[k - nu]
            return ("c", v, "red")
        if tag == "hit" and kind[1] == 1:
            nu = len(state.uset.items)
            m = nu + len(state.yset.items)
            if m == 0:
                return PASS
            k = rng.index(m)
            v = state.uset.items[k] if k < nu else state.yset.items[k - nu]
            return ("c", v, "red")
        return PASS

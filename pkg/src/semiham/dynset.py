"""Index-backed vertex sets with O(1) add/remove/uniform-sample.

Vertices are small integers, so positions live in a flat list rather than a
dict.  Removal swaps the last element into the vacated slot; sampling picks a
uniform list index.  ``pop_last`` removes the most recently placed element,
which gives the deterministic eviction order the permissible-set upkeep
relies on.
"""

from __future__ import annotations


class IndexedSet:
    """Set of ints from a fixed universe [0, n) with uniform sampling."""

    __slots__ = ("items", "pos")

    def __init__(self, n, fill=False):
        if fill:
            self.items = list(range(n))
            self.pos = list(range(n))
        else:
            self.items = []
            self.pos = [-1] * n

    def __len__(self):
        return len(self.items)

    def __contains__(self, v):
        return self.pos[v] >= 0

    def __iter__(self):
        return iter(self.items)

    def add(self, v):
        if self.pos[v] >= 0:
            raise ValueError(f"{v} already present")
        self.pos[v] = len(self.items)
        self.items.append(v)

    def remove(self, v):
        items, pos = self.items, self.pos
        i = pos[v]
        if i < 0:
            raise KeyError(v)
        last = items.pop()
        if last != v:
            items[i] = last
            pos[last] = i
        pos[v] = -1

    def discard(self, v):
        if self.pos[v] >= 0:
            self.remove(v)

    def pop_last(self):
        v = self.items.pop()
        self.pos[v] = -1
        return v

    def sample(self, rng):
        return self.items[rng.index(len(self.items))]

    def sample_excluding(self, rng, u):
        """Uniform member other than u; requires len >= 2 if u is present."""
        items = self.items
        iu = self.pos[u]
        if iu < 0:
            return items[rng.index(len(items))]
        k = rng.index(len(items) - 1)
        if k >= iu:
            k += 1
        return items[k]

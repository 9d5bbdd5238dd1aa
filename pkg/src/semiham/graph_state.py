"""Incremental state of one semi-random construction run.

The state tracks, with O(1)-amortized updates per edge:

* the growing path (doubly linked ``left``/``right`` arrays plus endpoints),
* the collection of pairwise-disjoint reserve edges ("pairs") on off-path
  vertices,
* colored helper edges hanging off path vertices, with per-vertex classes
  (``fr`` mode: one-red / two-red; ``dg`` mode: blue / red / magenta;
  ``cleanup`` mode: red only),
* the permissible set Q of path vertices allowed to receive a fresh colored
  edge: exactly ``max(X - 5L, 0)`` members, all uncolored and at path
  distance >= 3 from every colored vertex,
* in ``dg`` mode, per-off-path-vertex counts of incident blue edges split by
  the class of the path endpoint (k1 to blue vertices, k2 to magenta ones),
  bucketed by total blue degree for O(1) minimum-degree sampling.

Every round appends exactly one edge to an append-only log ``(square,
circle)`` indexed by step, which is the replayable history the structure
counters consume.  Colored edges that later join the path are not re-logged;
they were logged at creation.

Q upkeep uses three pools: the live set Q, a LIFO ``reserve`` of candidates,
and per-colored-vertex ``waiters`` holding candidates parked because they sat
within distance 2 of that vertex when checked.  Candidates are re-validated
against current colors whenever they are popped, so stale parking never
admits an ineligible vertex; a rare full sweep of the waiter lists repairs
staleness in the other direction when the reserve runs dry.
"""

from __future__ import annotations

from array import array

from .dynset import IndexedSet

# membership codes
IN_U, IN_Y, ON_PATH = 0, 1, 2

# class codes; fr/cleanup use ONE_RED/TWO_RED, dg uses BLUE/RED/MAGENTA
UNCOLORED = 0
ONE_RED, TWO_RED = 1, 2
BLUE, RED, MAGENTA = 1, 2, 3


class ProcessState:
    """Mutable state of a single run over vertex set [0, n)."""

    def __init__(self, n, mode="fr"):
        if n < 3:
            raise ValueError("need n >= 3; smaller graphs admit no cycle cover")
        if mode not in ("fr", "dg", "cleanup"):
            raise ValueError(f"unknown mode {mode!r}")
        self.n = n
        self.mode = mode
        self.t = 0

        self.mem = [IN_U] * n
        self.left = [-1] * n
        self.right = [-1] * n
        self.head = -1
        self.tail = -1
        self.x_size = 0

        self.ypartner = [-1] * n
        self.uset = IndexedSet(n, fill=True)
        self.yset = IndexedSet(n)

        self.log_sq = array("i")
        self.log_ci = array("i")
        self.sq_count = [0] * n
        self.ci_count = [0] * n

        self.cls = [0] * n
        # fr/cleanup: up to two red ends per path vertex
        self.red1 = [-1] * n
        self.red2 = [-1] * n
        # dg: one blue and one red end per path vertex
        self.blue_end = [-1] * n
        self.red_end = [-1] * n
        # incoming colored edges keyed by the off-path end
        self.inc_red = {}
        self.inc_blue = {}

        # class counts; fr uses (l1, l2), dg uses (bcount, rcount, mcount)
        self.l1 = 0
        self.l2 = 0
        self.bcount = 0
        self.rcount = 0
        self.mcount = 0

        # permissible set machinery (fr/dg only)
        self.track_q = mode in ("fr", "dg")
        self.qset = IndexedSet(n)
        self.reserve = []
        self.waiters = {}

        # dg: blue-degree types over off-path vertices
        if mode == "dg":
            self.k1 = [0] * n
            self.k2 = [0] * n
            self.buckets = [list(range(n))]
            self.bpos = list(range(n))
            self.dcounts = [n]
            self.ctype = {(0, 0): n}
            self._mindeg = 0
        else:
            self.k1 = self.k2 = None
            self.buckets = None

    # ------------------------------------------------------------------
    # basic queries

    def colored_count(self):
        if self.mode == "dg":
            return self.bcount + self.rcount + self.mcount
        return self.l1 + self.l2

    def unsat_count(self):
        return self.n - self.x_size

    def ycount(self):
        return len(self.yset)

    def q_target(self):
        t = self.x_size - 5 * self.colored_count()
        return t if t > 0 else 0

    def log_edge(self, u, v):
        self.log_sq.append(u)
        self.log_ci.append(v)
        self.sq_count[u] += 1
        self.ci_count[v] += 1

    def path_vertices(self):
        """Path order from head to tail (O(X) walk)."""
        out = []
        v = self.head
        while v >= 0:
            out.append(v)
            v = self.right[v]
        return out

    # ------------------------------------------------------------------
    # landing classification

    def classify(self, u):
        """Case analysis for a square landing on u.

        Returns one of ('u',), ('y',), ('adj', x) with x the colored path
        neighbour, ('q',), ('hit', cls), ('pass',).  Colored vertices stay
        pairwise at distance >= 3, so a colored neighbour is unique.
        """
        m = self.mem[u]
        if m == IN_U:
            return ("u",)
        if m == IN_Y:
            return ("y",)
        cls = self.cls
        x = self.left[u]
        if x < 0 or not cls[x]:
            x = self.right[u]
            if x < 0 or not cls[x]:
                x = -1
        if x >= 0:
            return ("adj", x)
        if self.qset.pos[u] >= 0:
            return ("q",)
        c = cls[u]
        if c:
            return ("hit", c)
        return ("pass",)

    def step_fr(self, u, rng):
        """Fused classify+decide+apply for one randomized-strategy round.
        Exactly equivalent to applying FullyRandomized.decide; kept in one
        frame so million-step runs stay cheap."""
        mem = self.mem
        m = mem[u]
        if m == IN_U:
            us = self.uset
            if len(us.items) >= 2:
                self.y_extend(u, us.sample_excluding(rng, u))
            else:
                self.pass_round(u)
            return
        if m == IN_Y:
            self.path_extend(u)
            return
        cls = self.cls
        x = self.left[u]
        if x < 0 or not cls[x]:
            x = self.right[u]
            if x < 0 or not cls[x]:
                x = -1
        if x >= 0:
            self.path_augment(u, x, self.aug_edge_of(x))
            return
        if self.qset.pos[u] >= 0 or cls[u] == ONE_RED:
            ui = self.uset.items
            yi = self.yset.items
            nu = len(ui)
            tot = nu + len(yi)
            if tot == 0:
                self.pass_round(u)
                return
            k = rng.index(tot)
            self.color_edge(u, ui[k] if k < nu else yi[k - nu], "red")
            return
        self.pass_round(u)

    def step_dg(self, u, rng):
        """Fused round for the degree-greedy strategy (see step_fr)."""
        mem = self.mem
        m = mem[u]
        if m == IN_U:
            us = self.uset
            if len(us.items) >= 2:
                self.y_extend(u, us.sample_excluding(rng, u))
            else:
                self.pass_round(u)
            return
        if m == IN_Y:
            self.path_extend(u)
            return
        cls = self.cls
        x = self.left[u]
        if x < 0 or not cls[x]:
            x = self.right[u]
            if x < 0 or not cls[x]:
                x = -1
        if x >= 0:
            self.path_augment(u, x, self.aug_edge_of(x))
            return
        c = cls[u]
        if c == RED or (c == UNCOLORED and self.qset.pos[u] >= 0):
            v = self.sample_min_unsat(rng)
            if v < 0:
                self.pass_round(u)
            else:
                self.color_edge(u, v, "blue")
            return
        if c == BLUE:
            ui = self.uset.items
            yi = self.yset.items
            nu = len(ui)
            tot = nu + len(yi)
            if tot:
                k = rng.index(tot)
                self.color_edge(u, ui[k] if k < nu else yi[k - nu], "red")
                return
        self.pass_round(u)

    def aug_edge_of(self, x):
        """Off-path end of the colored edge a detour through x will use.

        fr/cleanup: the lowest-numbered red end.  dg: the blue end when x has
        one (blue preferred over red), else the red end.
        """
        if self.mode == "dg":
            b = self.blue_end[x]
            return b if b >= 0 else self.red_end[x]
        a, b = self.red1[x], self.red2[x]
        if a < 0:
            return b
        if b < 0:
            return a
        return a if a < b else b

    # ------------------------------------------------------------------
    # core moves

    def y_extend(self, u, v):
        """Pair two isolated vertices into a reserve edge."""
        if u == v:
            raise ValueError("cannot pair a vertex with itself")
        mem = self.mem
        if mem[u] != IN_U or mem[v] != IN_U:
            raise ValueError("pair endpoints must both be unpaired off-path vertices")
        self.log_sq.append(u)
        self.log_ci.append(v)
        self.sq_count[u] += 1
        self.ci_count[v] += 1
        mem[u] = IN_Y
        mem[v] = IN_Y
        ui, up = self.uset.items, self.uset.pos
        yi, yp = self.yset.items, self.yset.pos
        for w in (u, v):
            i = up[w]
            last = ui.pop()
            if last != w:
                ui[i] = last
                up[last] = i
            up[w] = -1
            yp[w] = len(yi)
            yi.append(w)
        self.ypartner[u] = v
        self.ypartner[v] = u
        self.t += 1

    def path_extend(self, u):
        """Append u's reserve edge to the path (left endpoint; a first call
        on an empty path turns the pair itself into the path)."""
        if self.mem[u] != IN_Y:
            raise ValueError("path extension needs a paired vertex")
        y = self.ypartner[u]
        left, right = self.left, self.right
        if self.x_size == 0:
            v = y
            self.head = u
            self.tail = y
            right[u] = y
            left[y] = u
        else:
            v = e = self.head
            left[e] = u
            right[u] = e
            left[u] = y
            right[y] = u
            self.head = y
        self.log_sq.append(u)
        self.log_ci.append(v)
        self.sq_count[u] += 1
        self.ci_count[v] += 1
        self.ypartner[u] = -1
        self.ypartner[y] = -1
        self._absorb(u)
        self._absorb(y)
        self.x_size += 2
        if self.track_q:
            self._rebalance_q()
        self.t += 1

    def path_augment(self, u, x, far):
        """Replace path edge u-x by a detour through far (and its partner if
        far is paired), consuming a colored edge of x."""
        if self.mem[u] != ON_PATH or self.mem[x] != ON_PATH:
            raise ValueError("augmentation endpoints must be on the path")
        if self.left[u] != x and self.right[u] != x:
            raise ValueError("augmentation needs u adjacent to x on the path")
        if not self._has_colored_end(x, far):
            raise ValueError("far is not a colored end of x")
        m = self.mem[far]
        left, right = self.left, self.right
        if m == IN_U:
            self.log_sq.append(u)
            self.log_ci.append(far)
            self.sq_count[u] += 1
            self.ci_count[far] += 1
            if right[u] == x:
                right[u] = far
                left[far] = u
                right[far] = x
                left[x] = far
            else:
                left[u] = far
                right[far] = u
                left[far] = x
                right[x] = far
            self._absorb(far)
            self.x_size += 1
        elif m == IN_Y:
            r2 = self.ypartner[far]
            self.log_sq.append(u)
            self.log_ci.append(r2)
            self.sq_count[u] += 1
            self.ci_count[r2] += 1
            if right[u] == x:
                right[u] = r2
                left[r2] = u
                right[r2] = far
                left[far] = r2
                right[far] = x
                left[x] = far
            else:
                left[u] = r2
                right[r2] = u
                left[r2] = far
                right[far] = r2
                left[far] = x
                right[x] = far
            self.ypartner[far] = -1
            self.ypartner[r2] = -1
            self._absorb(far)
            self._absorb(r2)
            self.x_size += 2
        else:
            raise ValueError("colored end already on the path")
        if self.track_q:
            self._rebalance_q()
        self.t += 1

    def color_edge(self, u, v, color):
        """Attach a colored edge from path vertex u to off-path vertex v."""
        if self.mem[u] != ON_PATH:
            raise ValueError("colored edges start on the path")
        if self.mem[v] == ON_PATH:
            raise ValueError("colored edges end off the path")
        self.log_sq.append(u)
        self.log_ci.append(v)
        self.sq_count[u] += 1
        self.ci_count[v] += 1
        if self.mode == "dg":
            self._color_edge_dg(u, v, color)
        else:
            self._color_edge_fr(u, v)
        if self.track_q:
            self._rebalance_q()
        self.t += 1

    def pass_round(self, u, v=None):
        """Burn a round: the edge is logged but never used structurally."""
        if v is None:
            v = u + 1 if u + 1 < self.n else 0
        self.log_edge(u, v)
        self.t += 1

    # ------------------------------------------------------------------
    # coloring internals

    def _color_edge_fr(self, u, v):
        old = self.cls[u]
        if old == UNCOLORED:
            if self.track_q:
                if self.qset.pos[u] < 0:
                    raise ValueError("fresh colored vertex must come from Q")
                self.qset.remove(u)
                self._evict_near(u)
            self.cls[u] = ONE_RED
            self.l1 += 1
        elif old == ONE_RED:
            self.cls[u] = TWO_RED
            self.l1 -= 1
            self.l2 += 1
        else:
            raise ValueError("vertex already carries two red edges")
        if self.red1[u] < 0:
            self.red1[u] = v
        else:
            self.red2[u] = v
        lst = self.inc_red.get(v)
        if lst is None:
            self.inc_red[v] = [u]
        else:
            lst.append(u)

    def _color_edge_dg(self, u, v, color):
        old = self.cls[u]
        if color == "blue":
            if self.blue_end[u] >= 0:
                raise ValueError("vertex already carries a blue edge")
            if old == UNCOLORED:
                if self.qset.pos[u] < 0:
                    raise ValueError("fresh colored vertex must come from Q")
                self.qset.remove(u)
                self._evict_near(u)
                self.cls[u] = BLUE
                self.bcount += 1
                self._retype(v, 1, 0)
            elif old == RED:
                self.cls[u] = MAGENTA
                self.rcount -= 1
                self.mcount += 1
                self._retype(v, 0, 1)
            else:
                raise ValueError("blue edges only attach to fresh or red vertices")
            self.blue_end[u] = v
            lst = self.inc_blue.get(v)
            if lst is None:
                self.inc_blue[v] = [u]
            else:
                lst.append(u)
        elif color == "red":
            if old != BLUE:
                raise ValueError("red edges only attach to blue vertices")
            self.cls[u] = MAGENTA
            self.bcount -= 1
            self.mcount += 1
            self.red_end[u] = v
            lst = self.inc_red.get(v)
            if lst is None:
                self.inc_red[v] = [u]
            else:
                lst.append(u)
            # u's blue partner now sees a magenta vertex across that edge
            w = self.blue_end[u]
            self._retype(w, -1, 1)
        else:
            raise ValueError(f"unknown color {color!r}")

    def _has_colored_end(self, x, far):
        if self.mode == "dg":
            # blue is consumed first when present
            if self.blue_end[x] >= 0:
                return far == self.blue_end[x]
            return far >= 0 and far == self.red_end[x]
        return far >= 0 and (self.red1[x] == far or self.red2[x] == far)

    # ------------------------------------------------------------------
    # dg type bookkeeping

    def _retype(self, v, dk1, dk2):
        """Shift off-path vertex v's blue-edge split by (dk1, dk2)."""
        k1, k2 = self.k1, self.k2
        a, b = k1[v], k2[v]
        ct = self.ctype
        key = (a, b)
        c = ct[key] - 1
        if c:
            ct[key] = c
        else:
            del ct[key]
        na, nb = a + dk1, b + dk2
        k1[v] = na
        k2[v] = nb
        key = (na, nb)
        ct[key] = ct.get(key, 0) + 1
        if na + nb != a + b:
            self._bucket_move(v, a + b, na + nb)

    def _bucket_move(self, v, old_deg, new_deg):
        buckets, bpos, dcounts = self.buckets, self.bpos, self.dcounts
        lst = buckets[old_deg]
        i = bpos[v]
        last = lst.pop()
        if last != v:
            lst[i] = last
            bpos[last] = i
        dcounts[old_deg] -= 1
        while len(buckets) <= new_deg:
            buckets.append([])
            dcounts.append(0)
        lst = buckets[new_deg]
        bpos[v] = len(lst)
        lst.append(v)
        dcounts[new_deg] += 1

    def _bucket_remove(self, v):
        deg = self.k1[v] + self.k2[v]
        lst = self.buckets[deg]
        i = self.bpos[v]
        last = lst.pop()
        if last != v:
            lst[i] = last
            self.bpos[last] = i
        self.bpos[v] = -1
        self.dcounts[deg] -= 1
        key = (self.k1[v], self.k2[v])
        c = self.ctype[key] - 1
        if c:
            self.ctype[key] = c
        else:
            del self.ctype[key]

    def min_unsat_degree(self):
        """Smallest blue degree among off-path vertices; -1 when none left."""
        dcounts = self.dcounts
        d = self._mindeg
        top = len(dcounts)
        while d < top and not dcounts[d]:
            d += 1
        self._mindeg = d
        return d if d < top else -1

    def sample_min_unsat(self, rng):
        d = self.min_unsat_degree()
        if d < 0:
            return -1
        lst = self.buckets[d]
        return lst[rng.index(len(lst))]

    # ------------------------------------------------------------------
    # absorption and uncoloring

    def _absorb(self, v):
        """Move off-path v onto the path: drop its pools, kill every colored
        edge whose off-path end is v, and queue v as a Q candidate."""
        s = self.uset if self.mem[v] == IN_U else self.yset
        items, pos = s.items, s.pos
        i = pos[v]
        last = items.pop()
        if last != v:
            items[i] = last
            pos[last] = i
        pos[v] = -1
        self.mem[v] = ON_PATH
        if self.buckets is not None:
            self._bucket_remove(v)
        if v in self.inc_red or v in self.inc_blue:
            self._uncolor_all_at(v)
        if self.track_q:
            self.reserve.append(v)

    def _uncolor_all_at(self, z):
        """Uncolor every colored edge whose off-path end is z."""
        if self.mode == "dg":
            self._uncolor_all_at_dg(z)
            return
        plist = self.inc_red.pop(z, None)
        if not plist:
            return
        cls, red1, red2 = self.cls, self.red1, self.red2
        for p in plist:
            # drop one slot holding z
            if red1[p] == z:
                red1[p] = red2[p]
                red2[p] = -1
            else:
                red2[p] = -1
            c = cls[p] - 1
            cls[p] = c
            if c == 1:
                self.l2 -= 1
                self.l1 += 1
            else:
                self.l1 -= 1
                self._release_colored(p)

    def _uncolor_all_at_dg(self, z):
        reds = self.inc_red.pop(z, None)
        blues = self.inc_blue.pop(z, None)
        if not reds and not blues:
            return
        cls = self.cls
        touched = []
        if reds:
            for p in reds:
                self.red_end[p] = -1
                touched.append(p)
        if blues:
            for p in blues:
                self.blue_end[p] = -1
                if not reds or p not in reds:
                    touched.append(p)
        for p in touched:
            old = cls[p]
            has_blue = self.blue_end[p] >= 0
            has_red = self.red_end[p] >= 0
            if old == MAGENTA:
                self.mcount -= 1
                if has_blue and not has_red:
                    cls[p] = BLUE
                    self.bcount += 1
                    # the surviving blue edge now leads to a blue vertex
                    self._retype(self.blue_end[p], 1, -1)
                elif has_red and not has_blue:
                    cls[p] = RED
                    self.rcount += 1
                else:
                    cls[p] = UNCOLORED
                    self._release_colored(p)
            elif old == BLUE:
                self.bcount -= 1
                cls[p] = UNCOLORED
                self._release_colored(p)
            elif old == RED:
                self.rcount -= 1
                cls[p] = UNCOLORED
                self._release_colored(p)

    def _release_colored(self, p):
        """p lost its last colored edge; it and its parked neighbours become
        Q candidates again."""
        if not self.track_q:
            return
        w = self.waiters.pop(p, None)
        if w:
            self.reserve.extend(w)
        self.reserve.append(p)

    # ------------------------------------------------------------------
    # permissible set upkeep

    def _evict_near(self, p):
        """Freshly colored p: pull Q members within path distance 2 of p."""
        left, right = self.left, self.right
        qi, qp = self.qset.items, self.qset.pos
        waiting = None
        a = left[p]
        b = right[p]
        for w in (a, (left[a] if a >= 0 else -1), b,
                  (right[b] if b >= 0 else -1)):
            if w >= 0 and qp[w] >= 0:
                i = qp[w]
                last = qi.pop()
                if last != w:
                    qi[i] = last
                    qp[last] = i
                qp[w] = -1
                if waiting is None:
                    waiting = self.waiters.setdefault(p, [])
                waiting.append(w)

    def _blocked_by(self, w):
        """Nearest colored vertex within path distance 2 of w, or -1."""
        cls, left, right = self.cls, self.left, self.right
        a = left[w]
        if a >= 0:
            if cls[a]:
                return a
            b = left[a]
            if b >= 0 and cls[b]:
                return b
        a = right[w]
        if a >= 0:
            if cls[a]:
                return a
            b = right[a]
            if b >= 0 and cls[b]:
                return b
        return -1

    def _rebalance_q(self):
        if self.mode == "dg":
            target = self.x_size - 5 * (self.bcount + self.rcount + self.mcount)
        else:
            target = self.x_size - 5 * (self.l1 + self.l2)
        if target < 0:
            target = 0
        qi, qp = self.qset.items, self.qset.pos
        reserve = self.reserve
        size = len(qi)
        while size > target:
            v = qi.pop()
            qp[v] = -1
            reserve.append(v)
            size -= 1
        if size == target:
            return
        cls, left, right = self.cls, self.left, self.right
        waiters = self.waiters
        swept = False
        while size < target:
            while reserve:
                w = reserve.pop()
                if cls[w]:
                    continue  # re-enters on uncoloring
                # nearest colored vertex within path distance 2, if any
                b = -1
                a = left[w]
                if a >= 0:
                    if cls[a]:
                        b = a
                    else:
                        a = left[a]
                        if a >= 0 and cls[a]:
                            b = a
                if b < 0:
                    a = right[w]
                    if a >= 0:
                        if cls[a]:
                            b = a
                        else:
                            a = right[a]
                            if a >= 0 and cls[a]:
                                b = a
                if b < 0:
                    qp[w] = size
                    qi.append(w)
                    size += 1
                    break
                lst = waiters.get(b)
                if lst is None:
                    waiters[b] = [w]
                else:
                    lst.append(w)
            else:
                if swept:
                    raise RuntimeError(
                        "permissible-set supply exhausted; invariant broken")
                self._sweep_waiters()
                swept = True

    def _sweep_waiters(self):
        """Re-validate every parked candidate (path edits can outdate the
        vertex it was parked under).  Rare: only runs when the reserve dries
        up while Q is below target."""
        waiters = self.waiters
        reserve = self.reserve
        for c in list(waiters):
            kept = []
            for w in waiters[c]:
                b = self._blocked_by(w)
                if b < 0:
                    reserve.append(w)
                elif b == c:
                    kept.append(w)
                else:
                    waiters.setdefault(b, []).append(w)
            if kept:
                waiters[c] = kept
            else:
                del waiters[c]

    # ------------------------------------------------------------------
    # construction from parts, and stage hand-off

    def run_rounds_fr(self, rng, budget, unsat_stop=-1, stride=1, rows=None):
        """Run up to `budget` randomized-strategy rounds in one frame.

        Stops early once n - X <= unsat_stop.  Semantically identical to
        repeated step_fr calls (same draws, same mutations); everything is
        bound locally so long runs avoid per-round attribute traffic.
        Appends (t, X, Y, L1, L2) to `rows` every `stride` rounds.
        Returns (rounds_done, reason) with reason 'steps' or 'unsat_below'.
        """
        if self.mode != "fr":
            raise ValueError("fused loop only runs in fr mode")
        n = self.n
        mem = self.mem
        left = self.left
        right = self.right
        cls = self.cls
        red1 = self.red1
        red2 = self.red2
        inc_red = self.inc_red
        ypartner = self.ypartner
        ui, up = self.uset.items, self.uset.pos
        yi, yp = self.yset.items, self.yset.pos
        qi, qp = self.qset.items, self.qset.pos
        reserve = self.reserve
        waiters = self.waiters
        log_sq, log_ci = self.log_sq, self.log_ci
        sq_count, ci_count = self.sq_count, self.ci_count
        x_size = self.x_size
        head, tail = self.head, self.tail
        l1, l2 = self.l1, self.l2
        t = self.t
        t0 = t
        gen = rng._gen
        rbuf = rng._buf
        ri = rng._i
        nbuf = len(rbuf)
        reason = "steps"
        if rows is None:
            rows = []

        while True:
            if n - x_size <= unsat_stop:
                reason = "unsat_below"
                break
            if t - t0 >= budget:
                break
            if ri == nbuf:
                rbuf = gen.random(nbuf).tolist()
                ri = 0
            u = int(rbuf[ri] * n)
            ri += 1
            m = mem[u]
            rebalance = False
            if m == IN_U:
                nu = len(ui)
                if nu >= 2:
                    # uniform partner among the other unpaired vertices
                    if ri == nbuf:
                        rbuf = gen.random(nbuf).tolist()
                        ri = 0
                    k = int(rbuf[ri] * (nu - 1))
                    ri += 1
                    if k >= up[u]:
                        k += 1
                    v = ui[k]
                    log_sq.append(u)
                    log_ci.append(v)
                    sq_count[u] += 1
                    ci_count[v] += 1
                    mem[u] = IN_Y
                    mem[v] = IN_Y
                    for w in (u, v):
                        i = up[w]
                        last = ui.pop()
                        if last != w:
                            ui[i] = last
                            up[last] = i
                        up[w] = -1
                        yp[w] = len(yi)
                        yi.append(w)
                    ypartner[u] = v
                    ypartner[v] = u
                else:
                    v = u + 1 if u + 1 < n else 0
                    log_sq.append(u)
                    log_ci.append(v)
                    sq_count[u] += 1
                    ci_count[v] += 1
            elif m == IN_Y:
                y = ypartner[u]
                if x_size == 0:
                    v = y
                    head = u
                    tail = y
                    right[u] = y
                    left[y] = u
                else:
                    v = head
                    left[v] = u
                    right[u] = v
                    left[u] = y
                    right[y] = u
                    head = y
                log_sq.append(u)
                log_ci.append(v)
                sq_count[u] += 1
                ci_count[v] += 1
                ypartner[u] = -1
                ypartner[y] = -1
                for w in (u, y):
                    i = yp[w]
                    last = yi.pop()
                    if last != w:
                        yi[i] = last
                        yp[last] = i
                    yp[w] = -1
                    mem[w] = ON_PATH
                    plist = inc_red.pop(w, None)
                    if plist:
                        for p in plist:
                            if red1[p] == w:
                                red1[p] = red2[p]
                                red2[p] = -1
                            else:
                                red2[p] = -1
                            c = cls[p] - 1
                            cls[p] = c
                            if c == 1:
                                l2 -= 1
                                l1 += 1
                            else:
                                l1 -= 1
                                wl = waiters.pop(p, None)
                                if wl:
                                    reserve.extend(wl)
                                reserve.append(p)
                    reserve.append(w)
                x_size += 2
                rebalance = True
            else:
                x = left[u]
                if x < 0 or not cls[x]:
                    x = right[u]
                    if x < 0 or not cls[x]:
                        x = -1
                if x >= 0:
                    # detour through x's lowest-numbered red end
                    a, b = red1[x], red2[x]
                    if a < 0:
                        far = b
                    elif b < 0 or a < b:
                        far = a
                    else:
                        far = b
                    if mem[far] == IN_U:
                        log_sq.append(u)
                        log_ci.append(far)
                        sq_count[u] += 1
                        ci_count[far] += 1
                        if right[u] == x:
                            right[u] = far
                            left[far] = u
                            right[far] = x
                            left[x] = far
                        else:
                            left[u] = far
                            right[far] = u
                            left[far] = x
                            right[x] = far
                        absorbed = (far,)
                        x_size += 1
                    else:
                        r2 = ypartner[far]
                        log_sq.append(u)
                        log_ci.append(r2)
                        sq_count[u] += 1
                        ci_count[r2] += 1
                        if right[u] == x:
                            right[u] = r2
                            left[r2] = u
                            right[r2] = far
                            left[far] = r2
                            right[far] = x
                            left[x] = far
                        else:
                            left[u] = r2
                            right[r2] = u
                            left[r2] = far
                            right[far] = r2
                            left[far] = x
                            right[x] = far
                        ypartner[far] = -1
                        ypartner[r2] = -1
                        absorbed = (far, r2)
                        x_size += 2
                    for w in absorbed:
                        if mem[w] == IN_U:
                            items, pos = ui, up
                        else:
                            items, pos = yi, yp
                        i = pos[w]
                        last = items.pop()
                        if last != w:
                            items[i] = last
                            pos[last] = i
                        pos[w] = -1
                        mem[w] = ON_PATH
                        plist = inc_red.pop(w, None)
                        if plist:
                            for p in plist:
                                if red1[p] == w:
                                    red1[p] = red2[p]
                                    red2[p] = -1
                                else:
                                    red2[p] = -1
                                c = cls[p] - 1
                                cls[p] = c
                                if c == 1:
                                    l2 -= 1
                                    l1 += 1
                                else:
                                    l1 -= 1
                                    wl = waiters.pop(p, None)
                                    if wl:
                                        reserve.extend(wl)
                                    reserve.append(p)
                        reserve.append(w)
                    rebalance = True
                elif qp[u] >= 0:
                    nu = len(ui)
                    tot = nu + len(yi)
                    if tot == 0:
                        v = u + 1 if u + 1 < n else 0
                        log_sq.append(u)
                        log_ci.append(v)
                        sq_count[u] += 1
                        ci_count[v] += 1
                    else:
                        if ri == nbuf:
                            rbuf = gen.random(nbuf).tolist()
                            ri = 0
                        k = int(rbuf[ri] * tot)
                        ri += 1
                        v = ui[k] if k < nu else yi[k - nu]
                        log_sq.append(u)
                        log_ci.append(v)
                        sq_count[u] += 1
                        ci_count[v] += 1
                        # fresh one-red vertex leaves Q and shades out d<=2
                        i = qp[u]
                        last = qi.pop()
                        if last != u:
                            qi[i] = last
                            qp[last] = i
                        qp[u] = -1
                        cls[u] = ONE_RED
                        l1 += 1
                        red1[u] = v
                        lst = inc_red.get(v)
                        if lst is None:
                            inc_red[v] = [u]
                        else:
                            lst.append(u)
                        waiting = None
                        a = left[u]
                        b = right[u]
                        for w in (a, (left[a] if a >= 0 else -1), b,
                                  (right[b] if b >= 0 else -1)):
                            if w >= 0 and qp[w] >= 0:
                                i = qp[w]
                                last = qi.pop()
                                if last != w:
                                    qi[i] = last
                                    qp[last] = i
                                qp[w] = -1
                                if waiting is None:
                                    waiting = waiters.setdefault(u, [])
                                waiting.append(w)
                        rebalance = True
                elif cls[u] == ONE_RED and (ui or yi):
                    nu = len(ui)
                    tot = nu + len(yi)
                    if ri == nbuf:
                        rbuf = gen.random(nbuf).tolist()
                        ri = 0
                    k = int(rbuf[ri] * tot)
                    ri += 1
                    v = ui[k] if k < nu else yi[k - nu]
                    log_sq.append(u)
                    log_ci.append(v)
                    sq_count[u] += 1
                    ci_count[v] += 1
                    cls[u] = TWO_RED
                    l1 -= 1
                    l2 += 1
                    if red1[u] < 0:
                        red1[u] = v
                    else:
                        red2[u] = v
                    lst = inc_red.get(v)
                    if lst is None:
                        inc_red[v] = [u]
                    else:
                        lst.append(u)
                    rebalance = True
                else:
                    v = u + 1 if u + 1 < n else 0
                    log_sq.append(u)
                    log_ci.append(v)
                    sq_count[u] += 1
                    ci_count[v] += 1

            if rebalance:
                target = x_size - 5 * (l1 + l2)
                if target < 0:
                    target = 0
                size = len(qi)
                while size > target:
                    v = qi.pop()
                    qp[v] = -1
                    reserve.append(v)
                    size -= 1
                while size < target:
                    while reserve:
                        w = reserve.pop()
                        if cls[w]:
                            continue
                        blk = -1
                        a = left[w]
                        if a >= 0:
                            if cls[a]:
                                blk = a
                            else:
                                a = left[a]
                                if a >= 0 and cls[a]:
                                    blk = a
                        if blk < 0:
                            a = right[w]
                            if a >= 0:
                                if cls[a]:
                                    blk = a
                                else:
                                    a = right[a]
                                    if a >= 0 and cls[a]:
                                        blk = a
                        if blk < 0:
                            qp[w] = size
                            qi.append(w)
                            size += 1
                            break
                        lst = waiters.get(blk)
                        if lst is None:
                            waiters[blk] = [w]
                        else:
                            lst.append(w)
                    else:
                        # rare: write back and let the shared slow path sweep
                        self.x_size = x_size
                        self.l1, self.l2 = l1, l2
                        self._sweep_waiters()
                        if not reserve:
                            raise RuntimeError(
                                "permissible-set supply exhausted; invariant broken")
            t += 1
            if (t - t0) % stride == 0:
                rows.append((t, x_size, len(yi), l1, l2))

        self.x_size = x_size
        self.head, self.tail = head, tail
        self.l1, self.l2 = l1, l2
        self.t = t
        rng._buf = rbuf
        rng._i = ri
        return t - t0, reason

    @classmethod
    def from_path_pairs_reds(cls, n, path, pairs, reds, mode="fr"):
        """Build a state holding a given path, pair collection, and red
        edges (one per distinct path vertex, path endpoints allowed, path
        ends pairwise at distance >= 3)."""
        st = cls(n, mode=mode)
        seen = [False] * n
        prev = -1
        for i, v in enumerate(path):
            if not 0 <= v < n or seen[v]:
                raise ValueError("path must list distinct vertices in range")
            seen[v] = True
            st.mem[v] = ON_PATH
            st.uset.remove(v)
            if st.buckets is not None:
                st._bucket_remove(v)
            if prev >= 0:
                st.right[prev] = v
                st.left[v] = prev
            prev = v
        if path:
            st.head = path[0]
            st.tail = path[-1]
            st.x_size = len(path)
        for a, b in pairs:
            if seen[a] or seen[b] or a == b:
                raise ValueError("pairs must be disjoint from the path")
            if st.mem[a] != IN_U or st.mem[b] != IN_U:
                raise ValueError("pairs must be pairwise disjoint")
            st.mem[a] = IN_Y
            st.mem[b] = IN_Y
            st.uset.remove(a)
            st.uset.remove(b)
            st.yset.add(a)
            st.yset.add(b)
            st.ypartner[a] = b
            st.ypartner[b] = a
        pos = {v: i for i, v in enumerate(path)}
        used = set()
        for p, z in reds:
            if p not in pos:
                raise ValueError("red edges must start on the path")
            if st.mem[z] == ON_PATH:
                raise ValueError("red edges must end off the path")
            if p in used:
                raise ValueError("at most one red edge per path vertex")
            for q in used:
                if abs(pos[q] - pos[p]) < 3:
                    raise ValueError("red path ends must sit at distance >= 3")
            used.add(p)
        for p, z in reds:
            if mode == "dg":
                raise ValueError("red-edge seeding is a one-red construction")
            st.cls[p] = ONE_RED
            st.red1[p] = z
            st.inc_red.setdefault(z, []).append(p)
            st.l1 += 1
        # Q candidates in path order; admission validates distances
        if st.track_q:
            for v in reversed(path):
                if not st.cls[v]:
                    st.reserve.append(v)
            st._rebalance_q()
        return st

    def export_path_pairs_reds(self):
        """Extract (path, pairs, red edges) for the next stage: blue edges
        are dropped, and every red/magenta vertex donates its red edge."""
        path = self.path_vertices()
        pairs = []
        for v in self.yset:
            w = self.ypartner[v]
            if v < w:
                pairs.append((v, w))
        reds = []
        if self.mode == "dg":
            for p in path:
                if self.cls[p] in (RED, MAGENTA):
                    reds.append((p, self.red_end[p]))
        else:
            for p in path:
                if self.cls[p] == ONE_RED:
                    reds.append((p, self.red1[p]))
        return path, pairs, reds

    def dissolve_pairs(self):
        """Turn every remaining pair back into isolated vertices (the
        clean-up stage treats all off-path vertices alike)."""
        for v in list(self.yset):
            self.yset.remove(v)
            self.ypartner[v] = -1
            self.mem[v] = IN_U
            self.uset.add(v)

    def to_cleanup_mode(self):
        """Hand the state to the clean-up stage: colors wiped, pairs
        dissolved, permissible-set upkeep switched off.  Step counter and
        edge log continue."""
        if self.mode != "fr":
            raise ValueError("clean-up takes over from an fr-mode state")
        self.strip_colors()
        self.dissolve_pairs()
        self.mode = "cleanup"
        self.track_q = False
        for w in list(self.qset):
            self.qset.remove(w)
        self.reserve.clear()
        self.waiters.clear()

    def strip_colors(self):
        """Uncolor everything (clean-up iterations restart coloring)."""
        for z in list(self.inc_red):
            self._uncolor_all_at(z)
        if self.mode == "dg":
            for z in list(self.inc_blue):
                self._uncolor_all_at(z)

    # ------------------------------------------------------------------
    # validation (test support; O(n) walks)

    def check_invariants(self):
        n = self.n
        # membership partitions the vertex set
        for v in range(n):
            m = self.mem[v]
            assert (v in self.uset) == (m == IN_U)
            assert (v in self.yset) == (m == IN_Y)
            if m == IN_Y:
                w = self.ypartner[v]
                assert w >= 0 and self.ypartner[w] == v and w != v
                assert self.mem[w] == IN_Y
        # path walk covers x_size distinct vertices
        path = self.path_vertices()
        assert len(path) == self.x_size
        assert len(set(path)) == self.x_size
        for i, v in enumerate(path):
            assert self.mem[v] == ON_PATH
            assert self.left[v] == (path[i - 1] if i else -1)
            assert self.right[v] == (path[i + 1] if i + 1 < len(path) else -1)
        if path:
            assert self.head == path[0] and self.tail == path[-1]
        for v in range(n):
            if self.mem[v] != ON_PATH:
                assert self.left[v] == -1 and self.right[v] == -1
                assert self.cls[v] == 0
        # color classes vs slots and counts
        if self.mode == "dg":
            b = r = m = 0
            for v in path:
                hb, hr = self.blue_end[v] >= 0, self.red_end[v] >= 0
                c = self.cls[v]
                if hb and hr:
                    assert c == MAGENTA
                    m += 1
                elif hb:
                    assert c == BLUE
                    b += 1
                elif hr:
                    assert c == RED
                    r += 1
                else:
                    assert c == UNCOLORED
                if hb:
                    assert self.mem[self.blue_end[v]] != ON_PATH
                if hr:
                    assert self.mem[self.red_end[v]] != ON_PATH
            assert (b, r, m) == (self.bcount, self.rcount, self.mcount)
            # recompute types from scratch
            k1 = [0] * n
            k2 = [0] * n
            for v in path:
                if self.blue_end[v] >= 0:
                    z = self.blue_end[v]
                    if self.cls[v] == BLUE:
                        k1[z] += 1
                    else:
                        k2[z] += 1
            ctype = {}
            dcnt = {}
            for z in range(n):
                if self.mem[z] != ON_PATH:
                    assert self.k1[z] == k1[z] and self.k2[z] == k2[z], (
                        z, self.k1[z], self.k2[z], k1[z], k2[z])
                    key = (k1[z], k2[z])
                    ctype[key] = ctype.get(key, 0) + 1
                    dcnt[k1[z] + k2[z]] = dcnt.get(k1[z] + k2[z], 0) + 1
            assert ctype == self.ctype
            for d, cnt in enumerate(self.dcounts):
                assert dcnt.get(d, 0) == cnt
        else:
            l1 = l2 = 0
            for v in path:
                c = self.cls[v]
                slots = (self.red1[v] >= 0) + (self.red2[v] >= 0)
                assert c == slots
                l1 += c == 1
                l2 += c == 2
                for z in (self.red1[v], self.red2[v]):
                    if z >= 0:
                        assert self.mem[z] != ON_PATH
            assert (l1, l2) == (self.l1, self.l2)
        # incoming lists mirror the slots
        inc = {}
        for v in path:
            ends = ((self.blue_end[v], self.red_end[v]) if self.mode == "dg"
                    else (self.red1[v], self.red2[v]))
            for z in ends:
                if z >= 0:
                    inc.setdefault(z, []).append(v)
        stored = {}
        for d in (self.inc_red, self.inc_blue):
            for z, lst in d.items():
                if lst:
                    stored.setdefault(z, []).extend(lst)
        assert {z: sorted(v) for z, v in inc.items()} == \
               {z: sorted(v) for z, v in stored.items() if v}
        # colored vertices pairwise at distance >= 3
        if self.mode != "cleanup":
            pos = {v: i for i, v in enumerate(path)}
            colored = [pos[v] for v in path if self.cls[v]]
            colored.sort()
            for a, b in zip(colored, colored[1:]):
                assert b - a >= 3, "colored vertices too close"
        # permissible set: size and eligibility
        if self.track_q:
            assert len(self.qset) == self.q_target()
            for w in self.qset:
                assert self.mem[w] == ON_PATH and not self.cls[w]
                assert self._blocked_by(w) < 0
            pools = list(self.qset) + [w for w in self.reserve] + \
                [w for lst in self.waiters.values() for w in lst]
            assert len(pools) == len(set(pools)), "vertex in two Q pools"

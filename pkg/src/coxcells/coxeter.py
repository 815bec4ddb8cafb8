"""Coxeter systems, ShortLex normal forms and the combinatorics built on them.

Elements of a group are integer handles into an intern table owned by a
:class:`CoxeterGroup`.  Handle ``0`` is the identity.  Every handle carries its
ShortLex-minimal reduced word (generator order ``0 < 1 < ... < rank-1``), so
equality of elements is equality of handles.

Multiplication never enumerates a ball.  The left action of a generator is
computed from the dihedral structure of descent sets: for ``s`` not a left
descent of ``w``, a second generator ``t`` is a left descent of ``sw`` exactly
when ``w`` starts with the alternating ``{s, t}``-word of length ``m(s,t) - 1``
beginning with ``t``.  Right multiplication is reduced to left multiplication
through the normal form ``w = first(w) * tail(w)``.
"""

from __future__ import annotations

import hashlib
import json
import math
import sys
from collections import deque
from dataclasses import dataclass, field
from functools import reduce
from itertools import combinations

INFINITY = 0  # encoding of m(s,t) = oo, in files and in memory

sys.setrecursionlimit(max(sys.getrecursionlimit(), 20000))


class CoxeterInputError(ValueError):
    """Malformed Coxeter matrix, word or generator label."""


class ResourceLimitError(RuntimeError):
    """A configured enumeration budget was exhausted."""

    def __init__(self, message: str, partial: int = 0):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class CoxeterSystem:
    """A Coxeter matrix with a name and a label offset for printed words."""

    matrix: tuple[tuple[int, ...], ...]
    name: str = ""
    labels_from: int = 1

    def __post_init__(self):
        m = tuple(tuple(int(x) for x in row) for row in self.matrix)
        object.__setattr__(self, "matrix", m)
        n = len(m)
        if n < 1:
            raise CoxeterInputError("rank must be at least 1")
        for i, row in enumerate(m):
            if len(row) != n:
                raise CoxeterInputError("Coxeter matrix must be square")
            if row[i] != 1:
                raise CoxeterInputError(f"diagonal entry m[{i}][{i}] must be 1")
            for j, x in enumerate(row):
                if x != m[j][i]:
                    raise CoxeterInputError("Coxeter matrix must be symmetric")
                if i != j and x != INFINITY and x < 2:
                    raise CoxeterInputError(
                        f"off-diagonal entry m[{i}][{j}] = {x} must be >= 2 or 0 (infinity)"
                    )
        if self.labels_from not in (0, 1):
            raise CoxeterInputError("labels_from must be 0 or 1")

    @property
    def rank(self) -> int:
        return len(self.matrix)

    def m(self, i: int, j: int) -> float:
        x = self.matrix[i][j]
        return math.inf if x == INFINITY else x

    def fingerprint(self) -> str:
        payload = json.dumps([self.matrix, self.labels_from], separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def is_crystallographic(self) -> bool:
        return all(x in (1, 2, 3, 4, 6, INFINITY) for row in self.matrix for x in row)

    # words <-> text -------------------------------------------------------

    def parse_word(self, text: str | list | tuple) -> tuple[int, ...]:
        """Parse whitespace separated labels (``"e"`` is the empty word)."""
        if isinstance(text, (list, tuple)):
            tokens = [str(t) for t in text]
        else:
            tokens = text.replace(",", " ").replace(".", " ").split()
        letters = []
        for tok in tokens:
            if tok == "e":
                continue
            tok = tok[1:] if tok[:1] in ("s", "S") else tok
            try:
                k = int(tok) - self.labels_from
            except ValueError:
                raise CoxeterInputError(f"bad generator label {tok!r}") from None
            if not 0 <= k < self.rank:
                raise CoxeterInputError(f"generator label {tok!r} out of range")
            letters.append(k)
        return tuple(letters)

    def format_word(self, word) -> str:
        if not word:
            return "e"
        return " ".join(str(a + self.labels_from) for a in word)

    def restrict(self, subset) -> tuple["CoxeterSystem", tuple[int, ...]]:
        """Coxeter system of the standard parabolic on ``subset`` and the index map."""
        idx = tuple(sorted(subset))
        sub = tuple(tuple(self.matrix[a][b] for b in idx) for a in idx)
        return CoxeterSystem(sub, name=f"{self.name}|{idx}", labels_from=0), idx


# --- finite type recognition -------------------------------------------------

_EXCEPTIONAL_ORDERS = {"E6": 51840, "E7": 2903040, "E8": 696729600, "F4": 1152,
                       "H3": 120, "H4": 14400}
_EXCEPTIONAL_ROOTS = {"E6": 36, "E7": 63, "E8": 120, "F4": 24, "H3": 15, "H4": 60}


@dataclass(frozen=True)
class ParabolicSpec:
    subset: frozenset
    finite: bool
    order: float  # math.inf for infinite parabolics
    type_label: str
    positive_roots: float = math.inf


def _component_type(sys_: CoxeterSystem, comp: list[int]) -> tuple[str, int, int] | None:
    """(label, order, number of positive roots) of a connected component, or None."""
    n = len(comp)
    if n == 1:
        return "A1", 2, 1
    edges = {}
    for a, b in combinations(comp, 2):
        x = sys_.matrix[a][b]
        if x == INFINITY:
            return None
        if x >= 3:
            edges[(a, b)] = x
    if len(edges) != n - 1:  # components are connected, so this means a cycle
        return None
    if n == 2:
        (mm,) = edges.values()
        label = {3: "A2", 4: "B2", 6: "G2"}.get(mm, f"I2({mm})")
        return label, 2 * mm, mm
    deg = {a: 0 for a in comp}
    for a, b in edges:
        deg[a] += 1
        deg[b] += 1
    labels = sorted(edges.values())
    if max(deg.values()) > 3:
        return None
    branch = [a for a in comp if deg[a] == 3]
    if len(branch) > 1:
        return None
    if branch:
        if labels[-1] != 3:
            return None
        c = branch[0]
        adj = {a: [] for a in comp}
        for a, b in edges:
            adj[a].append(b)
            adj[b].append(a)
        arms = []
        for start in adj[c]:
            length, prev, cur = 1, c, start
            while deg[cur] == 2:
                nxt = [x for x in adj[cur] if x != prev][0]
                prev, cur = cur, nxt
                length += 1
            arms.append(length)
        arms.sort()
        if arms[0] != 1:
            return None
        if arms[1] == 1:
            return f"D{n}", 2 ** (n - 1) * math.factorial(n), n * (n - 1)
        if arms[1] == 2 and arms[2] in (2, 3, 4):
            lab = f"E{n}"
            return lab, _EXCEPTIONAL_ORDERS[lab], _EXCEPTIONAL_ROOTS[lab]
        return None
    # a path: find the order of edge labels along it
    ends = [a for a in comp if deg[a] == 1]
    adj = {a: [] for a in comp}
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    path, prev, cur = [ends[0]], None, ends[0]
    while len(path) < n:
        nxt = [x for x in adj[cur] if x != prev][0]
        path.append(nxt)
        prev, cur = cur, nxt
    seq = [sys_.matrix[path[i]][path[i + 1]] for i in range(n - 1)]
    if all(x == 3 for x in seq):
        return f"A{n}", math.factorial(n + 1), n * (n + 1) // 2
    if seq.count(3) == n - 2:
        odd = [x for x in seq if x != 3][0]
        pos = [i for i, x in enumerate(seq) if x != 3][0]
        at_end = pos in (0, n - 2)
        if odd == 4 and at_end:
            return f"B{n}", 2 ** n * math.factorial(n), n * n
        if odd == 4 and n == 4 and pos == 1:
            return "F4", 1152, 24
        if odd == 5 and at_end and n in (3, 4):
            lab = f"H{n}"
            return lab, _EXCEPTIONAL_ORDERS[lab], _EXCEPTIONAL_ROOTS[lab]
    return None


def classify_parabolic(system: CoxeterSystem, subset) -> ParabolicSpec:
    """Decide finiteness of ``W_I`` from the Coxeter diagram restricted to ``I``."""
    subset = frozenset(subset)
    for a in subset:
        if not 0 <= a < system.rank:
            raise CoxeterInputError(f"generator index {a} out of range")
    if not subset:
        return ParabolicSpec(subset, True, 1, "trivial", 0)
    remaining = set(subset)
    labels, order, roots, finite = [], 1, 0, True
    while remaining:
        start = min(remaining)
        comp, stack = [], [start]
        remaining.discard(start)
        while stack:
            a = stack.pop()
            comp.append(a)
            for b in list(remaining):
                if system.matrix[a][b] != 2:
                    remaining.discard(b)
                    stack.append(b)
        comp.sort()
        t = _component_type(system, comp)
        if t is None:
            finite = False
            labels.append("inf" + "".join(str(c) for c in comp))
        else:
            labels.append(t[0])
            order *= t[1]
            roots += t[2]
    if not finite:
        return ParabolicSpec(subset, False, math.inf, "x".join(labels), math.inf)
    return ParabolicSpec(subset, True, order, "x".join(labels), roots)


def finite_parabolics(system: CoxeterSystem, maximal_only: bool = False) -> list[frozenset]:
    """All nonempty subsets generating finite parabolics, sorted by (size, members)."""
    found = []
    n = system.rank
    for k in range(1, n + 1):
        for sub in combinations(range(n), k):
            if classify_parabolic(system, sub).finite:
                found.append(frozenset(sub))
    if maximal_only:
        found = [a for a in found if not any(a < b for b in found)]
    return sorted(found, key=lambda s: (len(s), sorted(s)))


# --- the element engine ------------------------------------------------------


def _bits(mask: int):
    i = 0
    while mask:
        if mask & 1:
            yield i
        mask >>= 1
        i += 1


def alternating(a: int, b: int, n: int) -> tuple[int, ...]:
    return tuple(a if i % 2 == 0 else b for i in range(n))


class CoxeterGroup:
    """Lazily interned elements of a Coxeter group with memoized multiplication.

    All results are deterministic functions of the system; the caches only
    record values that were already forced by the relations.
    """

    identity = 0

    def __init__(self, system: CoxeterSystem):
        self.system = system
        self.rank = system.rank
        self._m = [[system.matrix[i][j] for j in range(self.rank)] for i in range(self.rank)]
        self._words: list[tuple[int, ...]] = [()]
        self._index: dict[tuple[int, ...], int] = {(): 0}
        self._tail: list[int] = [-1]
        self._ldesc: list[int] = [0]
        self._rdesc: list[int] = [0]
        self._lmul: list[list[int]] = [[-1] * self.rank]
        self._rmul: list[list[int]] = [[-1] * self.rank]
        self._leq_cache: dict[tuple[int, int], bool] = {}
        self._coatoms: dict[int, tuple[int, ...]] = {}
        self._inverse: dict[int, int] = {0: 0}
        self._gens = [self._lmul_up(s, 0) for s in range(self.rank)]

    def __len__(self) -> int:
        return len(self._words)

    # basic accessors ---------------------------------------------------

    def word(self, w: int) -> tuple[int, ...]:
        return self._words[w]

    def length(self, w: int) -> int:
        return len(self._words[w])

    def gen(self, s: int) -> int:
        return self._gens[s]

    def format(self, w: int) -> str:
        return self.system.format_word(self._words[w])

    def first(self, w: int) -> int:
        return self._words[w][0]

    def tail(self, w: int) -> int:
        return self._tail[w]

    def lookup(self, word) -> int | None:
        return self._index.get(tuple(word))

    # descents ----------------------------------------------------------

    def ldesc_mask(self, w: int) -> int:
        return self._ldesc[w]

    def rdesc_mask(self, w: int) -> int:
        r = self._rdesc[w]
        if r < 0:
            r = 0
            n = self.length(w)
            for s in range(self.rank):
                if self.length(self.rmul(w, s)) < n:
                    r |= 1 << s
            self._rdesc[w] = r
        return r

    def left_descents(self, w: int) -> frozenset:
        return frozenset(_bits(self._ldesc[w]))

    def right_descents(self, w: int) -> frozenset:
        return frozenset(_bits(self.rdesc_mask(w)))

    def descents(self, w: int, side: str = "right") -> frozenset:
        if side == "left":
            return self.left_descents(w)
        if side == "right":
            return self.right_descents(w)
        raise ValueError(f"side must be 'left' or 'right', not {side!r}")

    # left action -------------------------------------------------------

    def _strip(self, w: int, t: int, s: int, limit: int) -> tuple[int, int]:
        """Strip the alternating prefix t s t ... of ``w``; at most ``limit`` letters."""
        x, nxt, k = w, t, 0
        while k < limit and (self._ldesc[x] >> nxt) & 1:
            x = self._lmul_down(nxt, x)
            nxt = s if nxt == t else t
            k += 1
        return k, x

    def _new(self, word: tuple[int, ...], tail: int, ldesc: int) -> int:
        idx = self._index.get(word)
        if idx is not None:
            return idx
        idx = len(self._words)
        self._words.append(word)
        self._index[word] = idx
        self._tail.append(tail)
        self._ldesc.append(ldesc)
        self._rdesc.append(-1)
        self._lmul.append([-1] * self.rank)
        self._rmul.append([-1] * self.rank)
        return idx

    def _lmul_up(self, a: int, y: int) -> int:
        """``a * y`` for ``a`` not a left descent of ``y``."""
        cached = self._lmul[y][a] if y < len(self._lmul) else -1
        if cached >= 0:
            return cached
        mask = 1 << a
        stripped = {}
        for t in range(self.rank):
            if t == a:
                continue
            m = self._m[a][t]
            if m == INFINITY:
                continue
            k, x = self._strip(y, t, a, m - 1)
            if k == m - 1:
                mask |= 1 << t
                stripped[t] = x
        t0 = (mask & -mask).bit_length() - 1
        if t0 == a:
            res = self._new((a,) + self._words[y], y, mask)
        else:
            m = self._m[a][t0]
            x = stripped[t0]
            for c in reversed(alternating(a, t0, m - 1)):
                x = self._lmul_up(c, x)
            res = self._new((t0,) + self._words[x], x, mask)
        self._lmul[y][a] = res
        self._lmul[res][a] = y
        return res

    def _lmul_down(self, a: int, u: int) -> int:
        """``a * u`` for ``a`` a left descent of ``u``."""
        cached = self._lmul[u][a]
        if cached >= 0:
            return cached
        b = self._words[u][0]
        if a == b:
            res = self._tail[u]
        else:
            m = self._m[a][b]
            x = u
            for c in alternating(b, a, m):
                x = self._lmul_down(c, x)
            for c in reversed(alternating(b, a, m - 1)):
                x = self._lmul_up(c, x)
            res = x
        self._lmul[u][a] = res
        self._lmul[res][a] = u
        return res

    def lmul(self, a: int, w: int) -> int:
        """The product ``s_a * w``."""
        if (self._ldesc[w] >> a) & 1:
            return self._lmul_down(a, w)
        return self._lmul_up(a, w)

    def rmul(self, w: int, a: int) -> int:
        """The product ``w * s_a``."""
        cached = self._rmul[w][a]
        if cached >= 0:
            return cached
        if w == 0:
            res = self._gens[a]
        else:
            res = self.lmul(self._words[w][0], self.rmul(self._tail[w], a))
        self._rmul[w][a] = res
        self._rmul[res][a] = w
        return res

    # words and products ------------------------------------------------

    def element(self, word) -> int:
        """Normal form of an arbitrary (possibly non-reduced) word."""
        x = 0
        for a in word:
            if not 0 <= a < self.rank:
                raise CoxeterInputError(f"generator index {a} out of range")
            x = self.rmul(x, a)
        return x

    def parse(self, text) -> int:
        return self.element(self.system.parse_word(text))

    def mul(self, x: int, y: int) -> int:
        for a in self._words[y]:
            x = self.rmul(x, a)
        return x

    def inverse(self, w: int) -> int:
        r = self._inverse.get(w)
        if r is None:
            r = self.element(reversed(self._words[w]))
            self._inverse[w] = r
            self._inverse[r] = w
        return r

    def length_additive(self, x: int, y: int) -> bool:
        return self.length(self.mul(x, y)) == self.length(x) + self.length(y)

    def is_involution(self, w: int) -> bool:
        return self.inverse(w) == w

    # Bruhat order ------------------------------------------------------

    def leq(self, y: int, w: int) -> bool:
        """Bruhat order, via the lifting property on the first letter of ``w``."""
        ly, lw = self.length(y), self.length(w)
        if ly > lw:
            return False
        if ly == lw:
            return y == w
        if y == 0:
            return True
        key = (y, w)
        hit = self._leq_cache.get(key)
        if hit is not None:
            return hit
        s = self._words[w][0]
        if (self._ldesc[y] >> s) & 1:
            res = self.leq(self._lmul_down(s, y), self._tail[w])
        else:
            res = self.leq(y, self._tail[w])
        self._leq_cache[key] = res
        return res

    def coatoms(self, w: int) -> tuple[int, ...]:
        """Elements covered by ``w`` in Bruhat order."""
        hit = self._coatoms.get(w)
        if hit is not None:
            return hit
        if w == 0:
            res = ()
        else:
            s, w1 = self._words[w][0], self._tail[w]
            out = {w1}
            for z in self.coatoms(w1):
                if not (self._ldesc[z] >> s) & 1:
                    out.add(self._lmul_up(s, z))
            res = tuple(sorted(out))
        self._coatoms[w] = res
        return res

    def interval(self, y: int, w: int) -> list[int]:
        """The Bruhat interval ``[y, w]`` sorted by (length, normal form)."""
        if not self.leq(y, w):
            return []
        seen = {w}
        frontier = [w]
        ly = self.length(y)
        while frontier:
            nxt = []
            for u in frontier:
                if self.length(u) <= ly:
                    continue
                for z in self.coatoms(u):
                    if z not in seen and (y == 0 or self.leq(y, z)):
                        seen.add(z)
                        nxt.append(z)
            frontier = nxt
        return self.sort(seen)

    def sort(self, elements) -> list[int]:
        return sorted(elements, key=lambda u: (len(self._words[u]), self._words[u]))

    # parabolic subgroups -----------------------------------------------

    def longest_element(self, subset) -> int:
        spec = classify_parabolic(self.system, subset)
        if not spec.finite:
            raise CoxeterInputError(f"parabolic {sorted(subset)} is infinite")
        x = 0
        grew = True
        while grew:
            grew = False
            for s in sorted(subset):
                if not (self._ldesc[x] >> s) & 1:
                    x = self._lmul_up(s, x)
                    grew = True
        return x

    def support(self, w: int) -> frozenset:
        return frozenset(self._words[w])

    # reduced words -----------------------------------------------------

    def reduced_words(self, w: int, limit: int = 10**6) -> tuple[list[tuple[int, ...]], bool]:
        """All reduced expressions of ``w`` by braid-move closure.

        Returns ``(words, complete)``; ``complete`` is False when ``limit``
        stopped the closure early.
        """
        start = self._words[w]
        seen = {start}
        queue = deque([start])
        while queue:
            word = queue.popleft()
            n = len(word)
            for i in range(n - 1):
                a, b = word[i], word[i + 1]
                if a == b:
                    continue
                m = self._m[a][b]
                if m == INFINITY or i + m > n:
                    continue
                if word[i:i + m] != alternating(a, b, m):
                    continue
                new = word[:i] + alternating(b, a, m) + word[i + m:]
                if new not in seen:
                    if len(seen) >= limit:
                        return sorted(seen), False
                    seen.add(new)
                    queue.append(new)
        return sorted(seen), True

    def braid_orbit_size(self, w: int, limit: int = 10**6) -> int:
        return len(self.reduced_words(w, limit)[0])


@dataclass
class Ball:
    """All elements of length at most ``radius``, sorted by (length, ShortLex)."""

    group: CoxeterGroup
    radius: int
    elements: list[int]
    index: dict[int, int] = field(repr=False)

    def __len__(self):
        return len(self.elements)

    def __contains__(self, w: int) -> bool:
        return w in self.index

    def __iter__(self):
        return iter(self.elements)

    def restrict(self, radius: int) -> list[int]:
        return [w for w in self.elements if self.group.length(w) <= radius]


def enumerate_ball(group: CoxeterGroup, radius: int, max_elements: int = 2_000_000) -> Ball:
    """Breadth-first enumeration of the ball of the given radius."""
    if radius < 0:
        raise CoxeterInputError("radius must be nonnegative")
    level = [0]
    elements = [0]
    for _ in range(radius):
        nxt = set()
        for w in level:
            rd = group.rdesc_mask(w)
            for s in range(group.rank):
                if not (rd >> s) & 1:
                    nxt.add(group.rmul(w, s))
        if not nxt:
            break
        level = group.sort(nxt)
        elements.extend(level)
        if len(elements) > max_elements:
            raise ResourceLimitError(
                f"ball of radius {radius} exceeds {max_elements} elements", len(elements)
            )
    return Ball(group, radius, elements, {w: i for i, w in enumerate(elements)})


def group_order(group: CoxeterGroup) -> int:
    spec = classify_parabolic(group.system, range(group.rank))
    if not spec.finite:
        raise CoxeterInputError("group is infinite")
    return int(spec.order)


def product_of(group: CoxeterGroup, elements) -> int:
    return reduce(group.mul, elements, 0)

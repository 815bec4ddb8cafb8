"""Kazhdan-Lusztig polynomials and mu-coefficients with a persistent memo.

Polynomials are stored internally as dense tuples of q-coefficients.  The
recursion is the standard one: for ``s`` a left descent of ``w`` and ``v = sw``,

    P(y, w) = q^(1-c) P(sy, v) + q^c P(y, v)
              - sum_{y <= z < v, sz < z} mu(z, v) q^((l(w)-l(z))/2) P(y, z)

with ``c = 1`` iff ``sy < y``.  Before recursing, ``y`` is raised through the
descents of ``w`` on both sides (``P(y, w) = P(sy, w)`` when ``s`` is a
descent of ``w`` but not of ``y``), so only extremal pairs are memoized.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from pathlib import Path

from .coxeter import CoxeterGroup
from .laurent import LaurentPoly

HEADER = "COXCELLS-KL v1"

ONE = (1,)
ZERO = ()


class CacheError(ValueError):
    """A KL cache file could not be used for this group."""


def _qadd_shift(acc: list[int], poly: tuple[int, ...], shift: int, scale: int) -> None:
    need = len(poly) + shift
    if len(acc) < need:
        acc.extend([0] * (need - len(acc)))
    for i, c in enumerate(poly):
        acc[i + shift] += scale * c


def _trim(acc: list[int]) -> tuple[int, ...]:
    while acc and acc[-1] == 0:
        acc.pop()
    return tuple(acc)


@dataclass
class KLStats:
    hits: int = 0
    misses: int = 0
    loaded: int = 0

    def as_dict(self, size: int) -> dict:
        return {"hits": self.hits, "misses": self.misses, "loaded": self.loaded, "size": size}


@dataclass
class KLTable:
    """Memoized P(y, w) over one :class:`CoxeterGroup`."""

    group: CoxeterGroup
    memo: dict[tuple[int, int], tuple[int, ...]] = field(default_factory=dict)
    stats: KLStats = field(default_factory=KLStats)

    def __post_init__(self):
        self._mu_lists: dict[int, tuple[tuple[int, int], ...]] = {}
        self._lock = threading.Lock()

    # public API ------------------------------------------------------

    def P(self, y: int, w: int) -> LaurentPoly:
        return LaurentPoly.from_q(self.p_q(y, w))

    def p_q(self, y: int, w: int) -> tuple[int, ...]:
        """Dense q-coefficients of P(y, w); empty when y is not below w."""
        G = self.group
        if y == w:
            return ONE
        if not G.leq(y, w):
            return ZERO
        return self._extremal(y, w)

    def mu(self, y: int, w: int) -> int:
        """mu(y, w) for y < w, and 0 in every other case."""
        G = self.group
        d = G.length(w) - G.length(y)
        if d <= 0 or d % 2 == 0:
            return 0
        if d == 1:
            return 1 if G.leq(y, w) else 0
        p = self.p_q(y, w)
        k = (d - 1) // 2
        return p[k] if len(p) > k else 0

    def joined(self, x: int, w: int) -> bool:
        return self.mu(x, w) != 0 or self.mu(w, x) != 0

    def delta_pi(self, z: int) -> tuple[int, int]:
        """Degree and leading coefficient of P(e, z)."""
        p = self.p_q(0, z)
        return len(p) - 1, p[-1]

    def mu_list(self, w: int) -> tuple[tuple[int, int], ...]:
        """All (z, mu(z, w)) with z < w and mu nonzero, sorted by (length, word)."""
        hit = self._mu_lists.get(w)
        if hit is not None:
            return hit
        G = self.group
        lw = G.length(w)
        ld, rd = G.ldesc_mask(w), G.rdesc_mask(w)
        out = []
        for z in G.interval(0, w):
            d = lw - G.length(z)
            if d <= 0 or d % 2 == 0:
                continue
            if d > 1 and ((G.ldesc_mask(z) & ld) != ld or (G.rdesc_mask(z) & rd) != rd):
                continue
            m = self.mu(z, w)
            if m:
                out.append((z, m))
        res = tuple(out)
        self._mu_lists[w] = res
        return res

    def __len__(self) -> int:
        return len(self.memo)

    # recursion -------------------------------------------------------

    def _extremal(self, y: int, w: int) -> tuple[int, ...]:
        G = self.group
        ld, rd = G.ldesc_mask(w), G.rdesc_mask(w)
        while True:
            miss = ld & ~G.ldesc_mask(y)
            if miss:
                s = (miss & -miss).bit_length() - 1
                y = G.lmul(s, y)
                if y == w:
                    return ONE
                continue
            miss = rd & ~G.rdesc_mask(y)
            if miss:
                s = (miss & -miss).bit_length() - 1
                y = G.rmul(y, s)
                if y == w:
                    return ONE
                continue
            break
        key = (y, w)
        hit = self.memo.get(key)
        if hit is not None:
            self.stats.hits += 1
            return hit
        self.stats.misses += 1
        res = self._compute(y, w)
        with self._lock:
            self.memo.setdefault(key, res)
        return res

    def _compute(self, y: int, w: int) -> tuple[int, ...]:
        # y is extremal: every left and right descent of w is one of y
        G = self.group
        s = G.first(w)
        v = G.tail(w)
        lw = G.length(w)
        sy = G.lmul(s, y)
        acc: list[int] = []
        _qadd_shift(acc, self.p_q(sy, v), 0, 1)
        _qadd_shift(acc, self.p_q(y, v), 1, 1)
        lv = lw - 1
        for z in G.interval(y, v):
            if z == v or not (G.ldesc_mask(z) >> s) & 1:
                continue
            d = lv - G.length(z)
            if d % 2 == 0:
                continue
            m = self.mu(z, v)
            if m:
                _qadd_shift(acc, self.p_q(y, z), (lw - G.length(z)) // 2, -m)
        return _trim(acc)

    # persistence -----------------------------------------------------

    def save(self, path: str | Path) -> int:
        G = self.group
        fmt = G.system.format_word
        rows = []
        for (y, w), p in self.memo.items():
            rows.append((G.length(w), G.word(w), G.length(y), G.word(y), p))
        rows.sort()
        lines = [HEADER, G.system.fingerprint()]
        for _, ww, _, yw, p in rows:
            lines.append(f"{fmt(yw)}\t{fmt(ww)}\t{' '.join(map(str, p))}")
        Path(path).write_text("\n".join(lines) + "\n")
        return len(rows)

    def load(self, path: str | Path) -> int:
        text = Path(path).read_text().splitlines()
        if len(text) < 2 or text[0].strip() != HEADER:
            raise CacheError(f"{path}: not a {HEADER} file")
        if text[1].strip() != self.group.system.fingerprint():
            raise CacheError(f"{path}: cache belongs to a different group")
        G = self.group
        n = 0
        for lineno, line in enumerate(text[2:], start=3):
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise CacheError(f"{path}:{lineno}: malformed record")
            y, w = G.parse(parts[0]), G.parse(parts[1])
            try:
                p = tuple(int(c) for c in parts[2].split())
            except ValueError:
                raise CacheError(f"{path}:{lineno}: bad coefficient") from None
            self.memo[(y, w)] = p
            n += 1
        self.stats.loaded += n
        return n


def kl_poly(table: KLTable, y: int, w: int) -> LaurentPoly:
    return table.P(y, w)


def mu(table: KLTable, y: int, w: int) -> int:
    return table.mu(y, w)

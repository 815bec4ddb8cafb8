"""Factorizations through finite parabolics, rigidity, generation of
distinguished involutions and certified right equivalences.

Every equivalence produced here is an :class:`EquivalenceEdge` whose
certificate was recomputed from exact KL data.  The one-sided inequality
``x <=_R y`` always comes from a mu-link plus the descent condition; the
reverse inequality is obtained from equality of a-values (the standard
property ``x <=_R y, a(x) = a(y)  =>  x ~_R y``), and the certificate records
whether those a-values are exact or rest on a'.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field

from .cells import (
    CellPartition,
    DInvRecord,
    finite_cell_data,
    make_record,
    verdict_for,
)
from .coxeter import Ball, CoxeterGroup, classify_parabolic, finite_parabolics
from .hecke import AFunction, AValue, h_structure
from .kl import KLTable

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Witness:
    """w = x.v.y with v in a finite standard parabolic."""

    x: int
    v: int
    y: int

    def lengths(self, G: CoxeterGroup) -> tuple[int, int]:
        return G.length(self.x), G.length(self.y)

    def render(self, G: CoxeterGroup) -> str:
        return f"{G.format(self.x)} . {G.format(self.v)} . {G.format(self.y)}"


@dataclass
class RigidityReport:
    witness: Witness
    rigid: bool
    reason: str
    violation: Witness | None = None
    exhaustive: bool = True

    def to_json(self, G: CoxeterGroup) -> dict:
        return {
            "witness": self.witness.render(G),
            "rigid": self.rigid,
            "reason": self.reason,
            "violation": self.violation.render(G) if self.violation else None,
            "exhaustive": self.exhaustive,
        }


@dataclass
class EquivalenceEdge:
    source: int
    target: int
    rule: str  # descent | lemma1 | conj2a | conj2b
    certificate: dict
    side: str = "right"

    def to_json(self, G: CoxeterGroup) -> dict:
        return {"from": G.format(self.source), "to": G.format(self.target), "side": self.side,
                "rule": self.rule, "certificate": self.certificate}


@dataclass
class Rejection:
    state: tuple[int, int]
    s: int
    report: RigidityReport | None
    reason: str


@dataclass
class GenerationResult:
    records: list[DInvRecord]
    rejections: list[Rejection]
    terminated: bool
    max_len: int
    gate: str
    chains: dict[int, tuple[int, tuple[int, ...]]] = field(default_factory=dict)


@dataclass
class WalkResult:
    start: int
    d: int | None
    edges: list[EquivalenceEdge]
    abstained: str | None = None


class Engine:
    """Conjecture machinery for one Coxeter group."""

    def __init__(self, table: KLTable, afunc: AFunction | None = None, challengers: str = "Df"):
        if challengers not in ("Df", "all"):
            raise ValueError("challengers must be 'Df' or 'all'")
        self.table = table
        self.G = table.group
        self.afunc = afunc or AFunction(table)
        self.challengers = challengers
        self._finite_mask: dict[int, bool] = {0: True}
        self._zset: dict[int, list[Witness]] = {}
        self._aprime: dict[int, AValue] = {}
        self._df: set[int] | None = None
        self._df_a: dict[int, int] = {}

    # finite parabolic bookkeeping -----------------------------------------

    def finite_mask(self, mask: int) -> bool:
        hit = self._finite_mask.get(mask)
        if hit is None:
            subset = [i for i in range(self.G.rank) if (mask >> i) & 1]
            hit = classify_parabolic(self.G.system, subset).finite
            self._finite_mask[mask] = hit
        return hit

    def support_mask(self, w: int) -> int:
        m = 0
        for a in self.G.word(w):
            m |= 1 << a
        return m

    def a_exact(self, v: int) -> int:
        val = self.afunc.exact(v)
        if val is None:
            raise ValueError(f"{self.G.format(v)} is not in a finite parabolic")
        return val.value

    # Z(w), M(w), a'(w) ------------------------------------------------------

    def suffixes(self, w: int) -> list[tuple[int, int]]:
        """All (u, y) with w = u.y, found by growing y on the left."""
        G = self.G
        seen = {0}
        out = [(w, 0)]
        queue = deque(out)
        while queue:
            u, y = queue.popleft()
            rd = G.rdesc_mask(u)
            for s in range(G.rank):
                if (rd >> s) & 1:
                    y2 = G.lmul(s, y)
                    if y2 not in seen:
                        seen.add(y2)
                        item = (G.rmul(u, s), y2)
                        out.append(item)
                        queue.append(item)
        return out

    def zset(self, w: int) -> list[Witness]:
        """Every witness w = x.v.y with v != e in a finite standard parabolic."""
        hit = self._zset.get(w)
        if hit is not None:
            return hit
        G = self.G
        out = []
        for u, y in self.suffixes(w):
            # finite-support suffixes v of u: u = x.v
            seen = {0}
            queue = deque([(u, 0, 0)])
            while queue:
                x, v, mask = queue.popleft()
                rd = G.rdesc_mask(x)
                for s in range(G.rank):
                    if not (rd >> s) & 1:
                        continue
                    m2 = mask | (1 << s)
                    if not self.finite_mask(m2):
                        continue
                    v2 = G.lmul(s, v)
                    if v2 in seen:
                        continue
                    seen.add(v2)
                    x2 = G.rmul(x, s)
                    out.append(Witness(x2, v2, y))
                    queue.append((x2, v2, m2))
        out.sort(key=lambda t: (G.length(t.x), G.word(t.x), G.length(t.v), G.word(t.v)))
        self._zset[w] = out
        return out

    def dominated(self, wit: Witness, pool) -> Witness | None:
        """A challenger (x', v', y') with v < v', x' <= x, y' <= y, if any."""
        G = self.G
        lv = G.length(wit.v)
        for c in pool:
            if G.length(c.v) <= lv:
                continue
            if G.leq(c.x, wit.x) and G.leq(c.y, wit.y) and G.leq(wit.v, c.v):
                return c
        return None

    def maximal_set(self, w: int, pool=None) -> list[Witness]:
        zs = self.zset(w)
        pool = zs if pool is None else pool
        return [t for t in zs if self.dominated(t, pool) is None]

    def maximal_values(self, w: int) -> list[int]:
        G = self.G
        return G.sort({t.v for t in self.maximal_set(w)})

    def a_prime(self, w: int) -> AValue:
        """max of exact a(v) over v maximal in w."""
        hit = self._aprime.get(w)
        if hit is not None:
            return hit
        if w == 0:
            res = AValue(0, "exact", "identity")
        else:
            zs = self.zset(w)
            ranked = sorted(zs, key=lambda t: -self.a_exact(t.v))
            best = 0
            for t in ranked:
                a = self.a_exact(t.v)
                if a <= best:
                    break
                if self.dominated(t, zs) is None:
                    best = a
                    break
            status = "exact" if self.afunc.exact(w) is not None else "conjectural"
            res = AValue(best, status, "a' over maximal finite-parabolic factors")
        self._aprime[w] = res
        return res

    def a_value(self, w: int) -> AValue:
        """Exact a where a finite parabolic houses w, else a'."""
        ex = self.afunc.exact(w)
        return ex if ex is not None else self.a_prime(w)

    # D_f --------------------------------------------------------------------

    def df_set(self) -> set[int]:
        if self._df is None:
            G = self.G
            out = {0}
            for sub in finite_parabolics(G.system, maximal_only=True):
                data = finite_cell_data(self.afunc, sub)
                for d in data.d_set:
                    z = data.lift(G, d)
                    out.add(z)
                    self._df_a[z] = data.atable.a[d]
            self._df = out
        return self._df

    def d_f(self, strict: bool = False) -> list[DInvRecord]:
        G = self.G
        out = []
        for z in G.sort(self.df_set()):
            if strict and G.length(z) <= 1:
                continue
            out.append(make_record(self.table, self.afunc, z, {"kind": "finite_parabolic"}))
        return out

    def df_strict(self) -> list[int]:
        return [z for z in self.G.sort(self.df_set()) if self.G.length(z) > 1]

    # rigidity ---------------------------------------------------------------

    def _pool(self, w: int) -> list[Witness]:
        zs = self.zset(w)
        if self.challengers == "all":
            return zs
        df = self.df_set()
        return [t for t in zs if t.v in df]

    def is_rigid(self, w: int, wit: Witness) -> RigidityReport:
        G = self.G
        if G.mul(G.mul(wit.x, wit.v), wit.y) != w or G.length(w) != (
            G.length(wit.x) + G.length(wit.v) + G.length(wit.y)
        ):
            raise ValueError("witness is not a length-additive factorization of w")
        if wit.v not in self.df_set():
            return RigidityReport(wit, False, "v is not in D_f")
        pool = self._pool(w)
        dom = self.dominated(wit, pool)
        if dom is not None:
            return RigidityReport(wit, False, "v is not maximal in w", dom)
        av = self.a_exact(wit.v)
        lens = wit.lengths(G)
        bad = [c for c in pool if self.a_exact(c.v) >= av and c.lengths(G) != lens]
        if bad:
            # report the shortest offending factor
            c = min(bad, key=lambda t: (G.length(t.v), G.length(t.x), G.word(t.v), G.word(t.x)))
            return RigidityReport(wit, False, "another factor with a(v') >= a(v) moves the flanks", c)
        return RigidityReport(wit, True, "rigid")

    # generating distinguished involutions -----------------------------------

    def conj1_generate(self, max_len: int, gate: str = "conj1", seeds=None,
                       compute_delta: bool = True, lower_bounds: bool = False,
                       max_states: int = 100_000) -> GenerationResult:
        """Breadth-first generation of distinguished involutions from D_f-bullet.

        ``gate = "conj1"`` accepts s when ``s x v1`` is rigid at v1; ``"thm1"``
        additionally demands the hypotheses of the theorem: a(vs) = a(v),
        L(vs) minus R(vs) nonempty, and s v s rigid at v1.
        """
        if gate not in ("conj1", "thm1"):
            raise ValueError("gate must be 'conj1' or 'thm1'")
        G = self.G
        seeds = self.df_strict() if seeds is None else list(seeds)
        emitted: dict[int, tuple[int, tuple[int, ...]]] = {}
        rejections: list[Rejection] = []
        terminated = True
        seen_states = set()
        queue = deque()
        for v1 in seeds:
            queue.append((0, v1, ()))
            seen_states.add((0, v1))
        while queue:
            x, v1, chain = queue.popleft()
            v = G.mul(G.mul(x, v1), G.inverse(x))
            a1 = self.a_exact(v1)
            for s in range(G.rank):
                sx = G.lmul(s, x)
                if G.length(sx) < G.length(x):
                    continue
                vp = G.lmul(s, G.rmul(v, s))
                if G.length(vp) != G.length(v) + 2:
                    rejections.append(Rejection((x, v1), s, None, "s v s is not length-additive"))
                    continue
                if G.length(vp) > max_len:
                    terminated = False
                    continue
                w = G.mul(sx, v1)
                rep = self.is_rigid(w, Witness(sx, v1, 0))
                if not rep.rigid:
                    rejections.append(Rejection((x, v1), s, rep, "s x v1 not rigid at v1"))
                    continue
                if gate == "thm1":
                    ok, why, rep2 = self._thm1_hyp(v, vp, sx, v1, s)
                    if not ok:
                        rejections.append(Rejection((x, v1), s, rep2, why))
                        continue
                new_chain = chain + (s,)
                if vp not in emitted:
                    emitted[vp] = (v1, new_chain)
                if (sx, v1) in seen_states:
                    continue
                if self.a_prime(vp).value != a1:
                    rejections.append(Rejection((sx, v1), s, None, "a'(v') differs from a(v1); not extended"))
                    continue
                seen_states.add((sx, v1))
                if len(seen_states) > max_states:
                    terminated = False
                    queue.clear()
                    break
                queue.append((sx, v1, new_chain))
        records = []
        for z in G.sort(emitted):
            v1, chain = emitted[z]
            prov = {"kind": "generated", "gate": gate, "base": G.format(v1),
                    "chain": G.system.format_word(chain)}
            records.append(self.record(z, prov, compute_delta, lower_bounds))
        return GenerationResult(records, rejections, terminated, max_len, gate, emitted)

    def _thm1_hyp(self, v: int, vp: int, sx: int, v1: int, s: int):
        G = self.G
        vs = G.rmul(v, s)
        if self.a_value(vs).value != self.a_value(v).value:
            return False, "a(vs) != a(v)", None
        if not (G.ldesc_mask(vs) & ~G.rdesc_mask(vs)):
            return False, "L(vs) minus R(vs) is empty", None
        rep = self.is_rigid(vp, Witness(sx, v1, G.inverse(sx)))
        if not rep.rigid:
            return False, "s v s not rigid at v1", rep
        return True, "ok", rep

    def thm1_check(self, v: int, v1: int, x: int, s: int) -> dict:
        """Report which hypotheses of the theorem hold for v = x.v1.x^-1 and s."""
        G = self.G
        out = {"v_is_x_v1_xinv": G.mul(G.mul(x, v1), G.inverse(x)) == v
               and G.length(v) == 2 * G.length(x) + G.length(v1)}
        out["v1_in_Df_bullet"] = v1 in self.df_set() and G.length(v1) > 1
        out["a_v_equals_a_v1"] = self.a_value(v).value == self.a_exact(v1)
        vs = G.rmul(v, s)
        out["a_vs_equals_a_v"] = self.a_value(vs).value == self.a_value(v).value
        out["L_minus_R_nonempty"] = bool(G.ldesc_mask(vs) & ~G.rdesc_mask(vs))
        vp = G.lmul(s, vs)
        sx = G.lmul(s, x)
        if G.length(vp) == G.length(v) + 2 and G.length(sx) > G.length(x):
            rep = self.is_rigid(vp, Witness(sx, v1, G.inverse(sx)))
            out["v_prime_rigid"] = rep.rigid
            out["rigidity"] = rep.to_json(G)
        else:
            out["v_prime_rigid"] = False
        out["all_hold"] = all(out[k] for k in ("v_is_x_v1_xinv", "v1_in_Df_bullet", "a_v_equals_a_v1",
                                                "a_vs_equals_a_v", "L_minus_R_nonempty", "v_prime_rigid"))
        return out

    # records ------------------------------------------------------------------

    def a_lower_factor(self, z: int, max_pairs: int = 4) -> int:
        """Ball-free lower bound on a(z): deg h_{xv, vy, z} over good factorizations."""
        G = self.G
        target = self.a_prime(z).value
        best = 0
        tried = 0
        cands = sorted(self.maximal_set(z), key=lambda t: (-self.a_exact(t.v), -G.length(t.v)))
        for t in cands:
            if tried >= max_pairs or best >= target:
                break
            tried += 1
            h = h_structure(self.table, G.mul(t.x, t.v), G.mul(t.v, t.y), z).get(z, {})
            if h:
                best = max(best, max(h))
        return best

    def record(self, z: int, provenance: dict, compute_delta: bool = True,
               lower_bounds: bool = False) -> DInvRecord:
        G = self.G
        ex = self.afunc.exact(z)
        if ex is not None:
            return make_record(self.table, self.afunc, z, provenance)
        ap = self.a_prime(z)
        if not compute_delta:
            return DInvRecord(z, G.length(z), ap, -1, 0, "undetermined", provenance, None, ap.value)
        lb = self.a_lower_factor(z) if lower_bounds else None
        return make_record(self.table, self.afunc, z, provenance, lb, ap.value)

    # equivalences -------------------------------------------------------------

    def _a_status(self, *ws) -> tuple[int | None, str]:
        vals = [self.a_value(w) for w in ws]
        if len({v.value for v in vals}) != 1:
            return None, "mismatch"
        status = "exact" if all(v.status == "exact" for v in vals) else "conjectural"
        return vals[0].value, status

    def certify(self, lo: int, hi: int, rule: str, extra: dict | None = None) -> EquivalenceEdge | None:
        """Edge lo ~_R hi from mu(lo, hi) != 0 (either order), R(lo) not in R(hi), equal a."""
        G = self.G
        m = self.table.mu(lo, hi) or self.table.mu(hi, lo)
        if not m:
            return None
        if not (G.rdesc_mask(lo) & ~G.rdesc_mask(hi)):
            return None
        a, status = self._a_status(lo, hi)
        if a is None:
            return None
        cert = {"mu": m, "R_from": G.system.format_word(sorted(G.right_descents(lo))),
                "R_to": G.system.format_word(sorted(G.right_descents(hi))),
                "a": a, "a_status": status}
        if rule == "descent":
            cert["a_status"] = "not needed"
        if extra:
            cert.update(extra)
        return EquivalenceEdge(lo, hi, rule, cert)

    def peel_edge(self, w: int, s: int) -> EquivalenceEdge | None:
        """w ~_R ws for s a right descent of w.

        With R(w) = {s} this is the definition of the preorder; otherwise it
        needs a(w) = a(ws).
        """
        G = self.G
        ws = G.rmul(w, s)
        if G.length(ws) > G.length(w) or ws == 0:
            return None
        if G.rdesc_mask(w) == 1 << s:
            return EquivalenceEdge(w, ws, "descent", {"mu": 1, "R_from": G.system.format_word([s]),
                                                       "a_status": "not needed"})
        return self.certify(w, ws, "lemma1", {"step": "peel"})

    def lemma1_reduce(self, w: int) -> tuple[list[EquivalenceEdge], int]:
        """Peel right letters while the a-value stays put; returns the chain and the end."""
        G = self.G
        edges = []
        cur = w
        while True:
            nxt = None
            for s in sorted(G.right_descents(cur)):
                e = self.peel_edge(cur, s)
                if e is not None:
                    nxt = e
                    break
            if nxt is None:
                return edges, cur
            edges.append(nxt)
            cur = nxt.target

    def _suffix_factors(self, w: int) -> list[Witness]:
        """Maximal suffix witnesses w = x.v with a(v) = a'(w); D_f factors first, then longest."""
        G = self.G
        target = self.a_value(w).value
        zs = self.zset(w)
        df = self.df_set()
        # D_f factors are vetted later by is_rigid, whose challenger pool decides maximality
        cands = [t for t in zs if t.y == 0 and self.a_exact(t.v) == target
                 and (t.v in df or self.dominated(t, zs) is None)]
        cands.sort(key=lambda t: (t.v not in df, -G.length(t.v), G.word(t.v)))
        return cands

    def substitute(self, w: int, wit: Witness) -> tuple[list[EquivalenceEdge], int] | None:
        """Replace v by the distinguished involution of its right cell in W_J, lifted."""
        G = self.G
        supp = sorted(G.support(wit.v))
        data = finite_cell_data(self.afunc, supp)
        H = data.group
        v_loc = data.lower(G, wit.v)
        d_loc = data.d_of_right.get(v_loc)
        if d_loc is None:
            return None
        if d_loc == v_loc:
            return [], w
        block = set(data.right_cells.block(v_loc))
        # breadth-first path v -> d inside the W_J right cell, using mu-links
        prev = {v_loc: None}
        queue = deque([v_loc])
        while queue and d_loc not in prev:
            u = queue.popleft()
            for z in block:
                if z in prev:
                    continue
                if data.table.mu(u, z) or data.table.mu(z, u):
                    prev[z] = u
                    queue.append(z)
        if d_loc not in prev:
            return None
        path = [d_loc]
        while prev[path[-1]] is not None:
            path.append(prev[path[-1]])
        path.reverse()
        edges = []
        for a_loc, b_loc in zip(path, path[1:]):
            a = G.mul(wit.x, data.lift(G, a_loc))
            b = G.mul(wit.x, data.lift(G, b_loc))
            if G.length(a) != G.length(wit.x) + H.length(a_loc) or G.length(b) != G.length(wit.x) + H.length(b_loc):
                return None
            info = {"step": "parabolic substitution", "parabolic": G.system.format_word(supp)}
            e = self.certify(a, b, "lemma1", info) or self.certify(b, a, "lemma1", info)
            if e is None:
                return None
            edges.append(e)
        return edges, G.mul(wit.x, data.lift(G, d_loc))

    def find_distinguished_involution(self, w: int, max_steps: int = 64) -> WalkResult:
        """Walk from w to the distinguished involution of its right cell.

        Peel right letters while a stays put, replace the final finite factor
        by the distinguished involution of its W_J right cell, and conclude
        d = x v x^-1 once x.v is rigid at v; otherwise shift along a certified
        mu-link and repeat.
        """
        G = self.G
        edges: list[EquivalenceEdge] = []
        cur = w
        seen = set()
        for _ in range(max_steps):
            if cur == 0:
                return WalkResult(w, 0, edges)
            chain, cur = self.lemma1_reduce(cur)
            edges.extend(chain)
            if G.length(cur) == 1:
                return WalkResult(w, cur, edges)
            if cur in seen:
                return WalkResult(w, None, edges, "walk revisited an element")
            seen.add(cur)
            cands = self._suffix_factors(cur)
            if not cands:
                return WalkResult(w, None, edges, "no suffix factor with a(v) = a'(w)")
            wit = next((t for t in cands if t.v in self.df_set() and self.is_rigid(cur, t).rigid), None)
            if wit is None:
                wit = next((t for t in cands if t.v not in self.df_set()), None) or cands[0]
            if wit.v not in self.df_set():
                sub = self.substitute(cur, wit)
                if sub is None:
                    return WalkResult(w, None, edges, "parabolic substitution not certified")
                chain, cur = sub
                edges.extend(chain)
                d_loc = G.mul(G.inverse(wit.x), cur)
                wit = Witness(wit.x, d_loc, 0)
            rep = self.is_rigid(cur, wit)
            if rep.rigid:
                d = G.mul(cur, G.inverse(wit.x))
                if G.length(d) != G.length(cur) + G.length(wit.x):
                    return WalkResult(w, None, edges, "x v x^-1 is not length-additive")
                back = self._peel_to(d, cur, "lemma1")
                if back is None:
                    return WalkResult(w, None, edges, "cannot link x.v to x v x^-1")
                edges.extend(back)
                return WalkResult(w, d, edges)
            shift = self.conj2b_shift(cur, wit)
            if shift is None:
                return WalkResult(w, None, edges, "not rigid and no certified shift")
            edges.extend(shift[0])
            cur = shift[1]
        return WalkResult(w, None, edges, "step limit")

    # basic equivalences -------------------------------------------------------

    def _peel_to(self, top: int, bottom: int, rule: str) -> list[EquivalenceEdge] | None:
        """Certified peel chain from top down to its prefix bottom."""
        G = self.G
        rest = G.mul(G.inverse(bottom), top)
        if G.length(top) != G.length(bottom) + G.length(rest):
            return None
        chain = []
        node = top
        for s in reversed(G.word(rest)):
            e = self.peel_edge(node, s)
            if e is None:
                return None
            e.rule = rule
            chain.append(e)
            node = e.target
        return chain

    def _one_way(self, w: int, mid: int, rule: str, info: dict) -> EquivalenceEdge | None:
        return self.certify(w, mid, rule, info) or self.certify(mid, w, rule, info)

    def conj2a_apply(self, w: int, v0: int, u: int, x: int, v1: int) -> list[EquivalenceEdge] | None:
        """Certify w ~_R w'v01^-1 ~_R w' for w' = wu and a suffix v01 of v0.

        ``u = x.v1.x^-1``; suffixes v01 are tried shortest first.  Returns the
        edge list or None when nothing could be certified.
        """
        G = self.G
        y = G.mul(w, G.inverse(v0))
        if G.length(y) != G.length(w) - G.length(v0):
            raise ValueError("v0 is not a suffix of w")
        if G.mul(G.mul(x, v1), G.inverse(x)) != u:
            raise ValueError("u is not x v1 x^-1")
        wp = G.mul(w, u)
        if G.length(wp) != G.length(w) + G.length(u):
            return None
        if G.length(u) == 1:
            # degenerate case: the descent rule
            e = self.peel_edge(wp, G.word(u)[0])
            return [e] if e is not None else None
        if self.a_value(wp).value != self.a_value(w).value:
            return None
        if self.a_value(u).value > self.a_exact(v0):
            return None
        by_len: dict[int, list[int]] = {}
        for _, suf in self.suffixes(v0):
            by_len.setdefault(G.length(suf), []).append(suf)
        for k in sorted(by_len):
            variants = G.sort(by_len[k])
            rigid_all = True
            for v01p in variants:
                pre = G.mul(v01p, x)
                if G.length(pre) != G.length(v01p) + G.length(x) or \
                        G.length(G.mul(pre, v1)) != G.length(pre) + G.length(v1):
                    rigid_all = False
                    break
                if not self.is_rigid(G.mul(pre, v1), Witness(pre, v1, 0)).rigid:
                    rigid_all = False
                    break
            if not rigid_all:
                continue
            for v01 in variants:
                mid = G.mul(wp, G.inverse(v01))
                if G.length(mid) != G.length(wp) + G.length(v01):
                    continue
                rm, rw = G.rdesc_mask(mid), G.rdesc_mask(w)
                if rm & ~rw or rm == rw:
                    continue
                info = {"v01": G.format(v01), "u": G.format(u)}
                e1 = self.certify(w, mid, "conj2a", info)
                if e1 is None:
                    continue
                chain = self._peel_to(mid, wp, "conj2a")
                if chain is None:
                    continue
                return [e1] + chain
        return None

    def conj2b_apply(self, w: int, v1: int) -> list[EquivalenceEdge] | None:
        """Certify w ~_R w''v02^-1 ~_R w'' for w'' = w.v1 with v1 not maximal."""
        G = self.G
        wpp = G.mul(w, v1)
        if G.length(wpp) != G.length(w) + G.length(v1):
            return None
        zs = self.zset(wpp)
        own = [t for t in zs if t.v == v1 and t.y == 0]
        if not own or self.dominated(own[0], zs) is None:
            return None  # v1 maximal in w'': precondition fails
        if self.a_value(wpp).value != self.a_value(w).value:
            return None
        for t in sorted(self.maximal_set(wpp), key=lambda t: (G.length(t.v), G.word(t.v))):
            if t.y != 0:
                continue
            v03 = G.mul(t.v, G.inverse(v1))
            if G.length(v03) != G.length(t.v) - G.length(v1):
                continue
            rest = G.mul(w, G.inverse(v03))
            if G.length(rest) != G.length(w) - G.length(v03):
                continue
            for _, v02 in sorted(self.suffixes(rest), key=lambda p: (G.length(p[1]), G.word(p[1]))):
                if v02 == 0:
                    continue
                mid = G.mul(wpp, G.inverse(v02))
                if G.length(mid) != G.length(wpp) + G.length(v02):
                    continue
                if G.rdesc_mask(mid) == G.rdesc_mask(w):
                    continue
                e1 = self._one_way(w, mid, "conj2b", {"v02": G.format(v02), "v03v1": G.format(t.v)})
                if e1 is None:
                    continue
                chain = self._peel_to(mid, wpp, "conj2b")
                if chain is None:
                    continue
                return [e1] + chain
        return None

    def conj2b_shift(self, w: int, wit: Witness) -> tuple[list[EquivalenceEdge], int] | None:
        """Move from a non-rigid x.v to an equivalent element via certified mu-links."""
        G = self.G
        target = self.a_value(w).value
        best = None
        for z, m in self.table.mu_list(w):
            if G.length(z) >= G.length(w):
                continue
            e = self.certify(w, z, "conj2b", {"shift": "down"}) or self.certify(z, w, "conj2b", {"shift": "down"})
            if e is not None and self.a_value(z).value == target:
                best = (e, z)
                break
        if best is None:
            return None
        return [best[0]], best[1]

    # reconstruction -----------------------------------------------------------

    def reconstruct_cells(self, ball: Ball, brute: CellPartition | None = None,
                          side: str = "right") -> tuple[CellPartition, dict]:
        """Union-find over certified edges from walks started at every ball element.

        Left cells are the inverses of right cells, so ``side="left"`` walks
        from w^-1 and inverts the resulting edges.
        """
        if side not in ("right", "left"):
            raise ValueError("side must be 'right' or 'left'")
        G = self.G
        flip = (lambda z: z) if side == "right" else G.inverse
        parent: dict[int, int] = {}

        def find(a):
            parent.setdefault(a, a)
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        edges: list[EquivalenceEdge] = []
        walks = {}
        abstentions = {}
        for w in ball.elements:
            res = self.find_distinguished_involution(flip(w))
            walks[w] = None if res.d is None else flip(res.d)
            if res.abstained:
                abstentions[w] = res.abstained
            for e in res.edges:
                edges.append(e if side == "right" else
                             EquivalenceEdge(flip(e.source), flip(e.target), e.rule, e.certificate, side))
        for e in edges:
            ra, rb = find(e.source), find(e.target)
            if ra != rb:
                parent[rb] = ra
        groups: dict[int, list[int]] = {}
        for w in ball.elements:
            groups.setdefault(find(w), []).append(w)
        blocks = sorted((G.sort(b) for b in groups.values()), key=lambda b: (G.length(b[0]), G.word(b[0])))
        block_of = {w: i for i, b in enumerate(blocks) for w in b}
        certified = set(brute.certified) if brute is not None else set()
        part = CellPartition(side, ball.radius, brute.margin if brute else 0, blocks, certified, block_of)
        report = {"side": side, "edges": len(edges), "abstentions": len(abstentions),
                  "d_values": len({d for d in walks.values() if d is not None})}
        if brute is not None:
            report.update(compare_partitions(G, part, brute))
        return part, {"report": report, "edges": edges, "walks": walks, "abstentions": abstentions}

    # the equivalence theorem --------------------------------------------------

    def _conj_step_ok(self, vj: int, t: int, base: int, xx: int) -> bool:
        """a(vj t) = a(vj), L(vj t) minus R(vj t) nonempty, t vj t rigid at base."""
        G = self.G
        vt = G.rmul(vj, t)
        if self.a_value(vt).value != self.a_value(vj).value:
            return False
        if not (G.ldesc_mask(vt) & ~G.rdesc_mask(vt)):
            return False
        tvt = G.lmul(t, vt)
        if G.length(tvt) != G.length(vj) + 2:
            return False
        return self.is_rigid(tvt, Witness(xx, base, G.inverse(xx))).rigid

    def thm2_check(self, t_word, s_word, y: int, u0: int) -> dict:
        """Hypotheses and conclusion of the equivalence theorem.

        ``t_word`` lists t_n ... t_1 (so x = t_n...t_1), ``s_word`` lists
        s_l ... s_1 (so v0 = s_l...s_1), and u = y u0 y^-1.
        """
        G = self.G
        x = G.element(t_word)
        v0 = G.element(s_word)
        w = G.mul(x, v0)
        u = G.mul(G.mul(y, u0), G.inverse(y))
        ell = len(s_word)
        s_seq = list(reversed(s_word))  # s_1, ..., s_l
        t_seq = list(reversed(t_word))  # t_1, ..., t_n
        v01 = G.element(s_seq[: ell - 1])
        wp = G.mul(G.mul(w, u), v01)
        out: dict = {"w": G.format(w), "w_prime": G.format(wp)}
        out["w_is_x_v0"] = G.length(w) == len(t_word) + ell and G.length(v0) == ell
        supp = G.support(v0)
        out["v0_longest"] = classify_parabolic(G.system, supp).finite and G.longest_element(supp) == v0
        out["v0_maximal"] = v0 in self.maximal_values(w)
        out["a_w_equals_a_v0"] = self.a_value(w).value == self.a_exact(v0)
        out["u_is_y_u0_yinv"] = G.length(u) == 2 * G.length(y) + G.length(u0)
        out["u0_in_Df"] = u0 in self.df_set()
        out["a_u_equals_a_u0_equals_l"] = out["u0_in_Df"] and self.a_value(u).value == self.a_exact(u0) == ell
        out["w_prime_reduced"] = G.length(wp) == G.length(w) + G.length(u) + G.length(v01)
        out["a_w_prime"] = self.a_value(wp).value == self.a_value(w).value
        rw, rwp = G.rdesc_mask(w), G.rdesc_mask(wp)
        out["R_proper_subset"] = (rwp & ~rw) == 0 and rwp != rw
        # (1): conjugation of v0 by t_1, t_2, ...
        cond1 = True
        vj, xj = v0, 0
        for j in range(len(t_seq)):
            tries = [t_seq[j]]
            if j >= 1 and not (G.rdesc_mask(vj) >> t_seq[j - 1]) & 1:
                tries.append(t_seq[j - 1])
            for t in tries:
                cond1 = cond1 and self._conj_step_ok(vj, t, v0, G.lmul(t, xj))
            xj = G.lmul(t_seq[j], xj)
            vj = G.lmul(t_seq[j], G.rmul(vj, t_seq[j]))
        out["condition_1"] = cond1
        # (2): conjugation of u by s_1, ..., s_{l-1}
        cond2 = True
        uj, xj = u, y
        for j in range(ell - 1):
            sj = s_seq[j]
            cond2 = cond2 and self._conj_step_ok(uj, sj, u0, G.lmul(sj, xj))
            xj = G.lmul(sj, xj)
            uj = G.lmul(sj, G.rmul(uj, sj))
        out["condition_2"] = cond2
        keys = [k for k in out if k not in ("w", "w_prime")]
        out["hypotheses_hold"] = all(out[k] for k in keys)
        m = self.table.mu(w, wp)
        out["mu"] = m
        out["conclusion_mu_nonzero"] = m != 0
        return out

    # verification -------------------------------------------------------------

    def verdicts(self, records: list[DInvRecord]) -> dict[str, int]:
        counts: dict[str, int] = {}
        for r in records:
            counts[r.verdict] = counts.get(r.verdict, 0) + 1
        return counts


def compare_partitions(G: CoxeterGroup, recon: CellPartition, brute: CellPartition) -> dict:
    """Block-by-block comparison on the brute-force certified region."""
    region = sorted(brute.certified, key=lambda w: (G.length(w), G.word(w)))
    rb: dict[int, set[int]] = {}
    bb: dict[int, set[int]] = {}
    for w in region:
        rb.setdefault(recon.block_of[w], set()).add(w)
        bb.setdefault(brute.block_of[w], set()).add(w)
    rsets = {frozenset(v) for v in rb.values()}
    bsets = {frozenset(v) for v in bb.values()}
    agree = rsets & bsets
    conflicts = []
    refinements = []
    for r in rsets - bsets:
        owners = {brute.block_of[w] for w in r}
        if len(owners) > 1:
            conflicts.append(sorted(G.format(w) for w in r))
        else:
            refinements.append(sorted(G.format(w) for w in r))
    return {
        "certified_elements": len(region),
        "brute_blocks": len(bsets),
        "reconstructed_blocks": len(rsets),
        "agreeing_blocks": len(agree),
        "refinements": refinements,
        "conflicts": conflicts,
        "agrees": rsets == bsets,
    }


def edge_conflicts(G: CoxeterGroup, edges, brute: CellPartition) -> tuple[list[EquivalenceEdge], int]:
    """Edges with both endpoints certified by brute force but in different blocks.

    Also returns how many edges had an endpoint outside the certified region.
    """
    bad = []
    unchecked = 0
    for e in edges:
        if e.source in brute.certified and e.target in brute.certified:
            if brute.block_of[e.source] != brute.block_of[e.target]:
                bad.append(e)
        else:
            unchecked += 1
    return bad, unchecked


def verdict_summary(records) -> dict:
    out: dict[str, int] = {}
    for r in records:
        out[r.verdict] = out.get(r.verdict, 0) + 1
    return out


__all__ = [
    "Engine", "Witness", "RigidityReport", "EquivalenceEdge", "GenerationResult", "WalkResult",
    "compare_partitions", "edge_conflicts", "verdict_for", "verify_suite",
]


def _scan_p(table: KLTable) -> dict:
    """Nonnegativity, constant term and degree bound over every memoized P."""
    G = table.group
    neg = const = deg = 0
    examples = []
    for (y, w), p in table.memo.items():
        d = G.length(w) - G.length(y)
        bad = False
        if any(c < 0 for c in p):
            neg += 1
            bad = True
        if not p or p[0] != 1:
            const += 1
            bad = True
        if len(p) - 1 > (d - 1) // 2:
            deg += 1
            bad = True
        if bad and len(examples) < 5:
            examples.append([G.format(y), G.format(w), list(p)])
    return {"checked": len(table.memo), "negative": neg, "constant_term": const,
            "degree_bound": deg, "examples": examples}


def _scan_h(engine: Engine, ball: Ball, h_radius: int) -> dict:
    """Signs of h_{x,y,z} for x, y in the radius-h_radius sub-ball."""
    G = engine.G
    small = [w for w in ball.elements if G.length(w) <= h_radius]
    neg = 0
    examples = []
    for x in small:
        for y in small:
            for z, poly in h_structure(engine.table, x, y).items():
                if any(c < 0 for c in poly.values()):
                    neg += 1
                    if len(examples) < 5:
                        examples.append([G.format(x), G.format(y), G.format(z)])
    return {"pairs": len(small) ** 2, "negative": neg, "examples": examples}


def verify_suite(engine: Engine, radius: int, which=("conj1", "conj2", "conj3", "positivity"),
                 margin: int = 2, max_len: int | None = None, h_radius: int = 3,
                 conj3_radius: int | None = None, progress=None) -> dict:
    """Run the consistency checks on the radius-``radius`` ball.

    Each section reports ``status`` as pass, violation or inconclusive.
    """
    from .cells import ball_mu_pairs, build_mu_graph, cell_partition, dinv_bruteforce
    from .coxeter import enumerate_ball

    G = engine.G
    table = engine.table
    say = progress or (lambda msg: None)
    ball = enumerate_ball(G, radius)
    finite_group = classify_parabolic(G.system, range(G.rank)).finite
    report: dict = {"group": G.system.name, "radius": radius, "ball_size": len(ball.elements),
                    "finite_group": finite_group}
    brute = None

    def brute_partition():
        nonlocal brute
        if brute is None:
            say("mu-pairs over the ball")
            pairs = ball_mu_pairs(table, ball)
            brute = cell_partition(build_mu_graph(table, ball, "right", pairs), margin)
        return brute

    if "conj3" in which:
        say("a' against lower bounds")
        r3 = conj3_radius if conj3_radius is not None else radius
        viol, confirmed, open_, finite_bad = [], 0, 0, []
        for z in ball.elements:
            if z == 0 or G.length(z) > r3:
                continue
            ap = engine.a_prime(z).value
            ex = engine.afunc.exact(z)
            if ex is not None:
                if ex.value != ap:
                    finite_bad.append(G.format(z))
                continue
            lb = engine.a_lower_factor(z)
            if lb > ap:
                viol.append({"word": G.format(z), "a_prime": ap, "a_lower": lb})
            elif lb == ap:
                confirmed += 1
            else:
                open_ += 1
        status = "violation" if viol or finite_bad else ("pass" if open_ == 0 else "inconclusive")
        report["conj3"] = {"status": status, "radius": r3, "violations": viol,
                           "finite_mismatches": finite_bad, "lower_bound_matches": confirmed,
                           "lower_bound_below": open_}

    if "positivity" in which:
        say("positivity scan")
        for z in ball.elements:
            table.delta_pi(z)
        res = {"P": _scan_p(table), "h": _scan_h(engine, ball, h_radius)}
        if finite_group:
            at = engine.afunc.parabolic(range(G.rank))[1]
            res["h_full_group_nonnegative"] = at.h_nonnegative
        neg = res["P"]["negative"] + res["h"]["negative"] + (0 if res.get("h_full_group_nonnegative", True) else 1)
        structural = res["P"]["constant_term"] + res["P"]["degree_bound"]
        res["crystallographic"] = G.system.is_crystallographic()
        res["status"] = "violation" if neg or structural else "pass"
        report["positivity"] = res

    if "conj1" in which:
        say("distinguished involutions")
        ml = radius if max_len is None else max_len
        gen = engine.conj1_generate(ml, lower_bounds=not finite_group)
        df = engine.df_set()
        predicted = {r.element for r in gen.records} | df
        bad_records = [r.to_json(G) for r in gen.records
                       if r.delta >= 0 and r.a_prime is not None and r.length - r.a_prime - 2 * r.delta != 0]
        region = brute_partition().certified if not finite_group else set(ball.elements)
        brute_recs = dinv_bruteforce(table, ball, engine.afunc, "ball",
                                     a_lower=engine.a_lower_factor,
                                     a_prime=lambda z: engine.a_prime(z).value)
        members = {r.element for r in brute_recs if r.verdict in ("member_exact", "member_conjectural")}
        undetermined = sorted(G.format(r.element) for r in brute_recs
                              if r.verdict == "undetermined" and r.element in region)
        in_region = lambda s: {z for z in s if z in region}
        missing = sorted(G.format(z) for z in in_region(members) - predicted)
        extra = sorted(G.format(z) for z in in_region(predicted) - members)
        status = "violation" if missing or extra or bad_records else ("inconclusive" if undetermined else "pass")
        report["conj1"] = {"status": status, "generated": len(gen.records), "D_f": len(df),
                           "terminated": gen.terminated, "max_len": ml,
                           "bruteforce_members_in_region": len(in_region(members)),
                           "missing_from_generation": missing, "generated_but_not_member": extra,
                           "undetermined": undetermined, "record_failures": bad_records}

    if "conj2" in which:
        say("cell reconstruction")
        part = brute_partition()
        recon, info = engine.reconstruct_cells(ball, part)
        bad, unchecked = edge_conflicts(G, info["edges"], part)
        rep = info["report"]
        status = "violation" if bad or rep["conflicts"] else ("pass" if rep["agrees"] else "inconclusive")
        report["conj2"] = {"status": status, "comparison": rep, "edge_conflicts": [e.to_json(G) for e in bad],
                           "edges_outside_certified_region": unchecked,
                           "abstentions": {G.format(w): why for w, why in sorted(
                               info["abstentions"].items(), key=lambda kv: (G.length(kv[0]), G.word(kv[0])))}}

    statuses = [report[k]["status"] for k in ("conj1", "conj2", "conj3", "positivity") if k in report]
    report["status"] = "violation" if "violation" in statuses else (
        "inconclusive" if "inconclusive" in statuses else "pass")
    return report

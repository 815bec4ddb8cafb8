"""Hecke algebra arithmetic, structure constants h_{x,y,z} and the a-function.

Conventions: ``q = v^2`` and the T basis is normalized, ``T_w = v^(-l(w)) T^std_w``
where ``(T^std_s)^2 = q + (q - 1) T^std_s``.  Thus ``T_s^2 = 1 + (v - v^-1) T_s``
and the positive canonical basis is
``C'_w = sum_{y <= w} v^(l(y) - l(w)) P(y, w)(q) T_y``.  Every structure
constant is obtained by multiplying in the T basis and converting back by
triangular elimination.

Two implementations share these conventions:

* sparse dictionaries for single products in any group, and
* a dense numpy path that produces the whole a-table of a finite group.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from itertools import permutations

import numpy as np

from .coxeter import CoxeterGroup, classify_parabolic, enumerate_ball
from .kl import KLTable
from .laurent import LaurentPoly

# sparse polynomials in v: {exponent: coefficient}
Poly = dict


def _padd(acc: dict, e: int, c: int) -> None:
    x = acc.get(e, 0) + c
    if x:
        acc[e] = x
    else:
        acc.pop(e, None)


def _elem_add(target: dict, w: int, poly: dict, shift: int = 0, scale: int = 1) -> None:
    slot = target.get(w)
    if slot is None:
        slot = target[w] = {}
    for e, c in poly.items():
        _padd(slot, e + shift, scale * c)
    if not slot:
        del target[w]


# --- T-basis arithmetic --------------------------------------------------------


def t_right_mul_gen(G: CoxeterGroup, elem: dict, s: int) -> dict:
    """``elem * T_s`` for an element given as {w: {exp: coeff}} in the T basis."""
    out: dict = {}
    for w, poly in elem.items():
        ws = G.rmul(w, s)
        if G.length(ws) > G.length(w):
            _elem_add(out, ws, poly)
        else:
            _elem_add(out, ws, poly)
            _elem_add(out, w, poly, shift=1)
            _elem_add(out, w, poly, shift=-1, scale=-1)
    return out


def t_left_mul_gen(G: CoxeterGroup, s: int, elem: dict) -> dict:
    """``T_s * elem``."""
    out: dict = {}
    for w, poly in elem.items():
        sw = G.lmul(s, w)
        if G.length(sw) > G.length(w):
            _elem_add(out, sw, poly)
        else:
            _elem_add(out, sw, poly)
            _elem_add(out, w, poly, shift=1)
            _elem_add(out, w, poly, shift=-1, scale=-1)
    return out


def t_mul(G: CoxeterGroup, a: dict, b: dict) -> dict:
    """Product of two T-basis elements."""
    out: dict = {}
    prefix: dict[int, dict] = {0: a}

    def times_T(u: int) -> dict:
        hit = prefix.get(u)
        if hit is None:
            s = G.word(u)[-1]
            hit = t_right_mul_gen(G, times_T(G.rmul(u, s)), s)
            prefix[u] = hit
        return hit

    for u in G.sort(b):
        bu = b[u]
        for w, poly in times_T(u).items():
            slot = out.setdefault(w, {})
            for e1, c1 in poly.items():
                for e2, c2 in bu.items():
                    _padd(slot, e1 + e2, c1 * c2)
            if not slot:
                del out[w]
    return out


def cprime_T(table: KLTable, w: int) -> dict:
    """T-expansion of C'_w."""
    G = table.group
    lw = G.length(w)
    out = {}
    for y in G.interval(0, w):
        p = table.p_q(y, w)
        out[y] = {G.length(y) - lw + 2 * i: c for i, c in enumerate(p) if c}
    return out


def to_cprime(table: KLTable, elem: dict, above: int | None = None) -> dict:
    """Rewrite a T-basis element in the C' basis by triangular elimination.

    With ``above = z`` only the coefficient of ``C'_z`` is guaranteed: the
    elimination is restricted to elements u with z <= u.
    """
    G = table.group
    work = {w: dict(p) for w, p in elem.items() if p}
    if above is not None:
        work = {w: p for w, p in work.items() if G.leq(above, w)}
    out = {}
    while work:
        u = max(work, key=lambda w: (G.length(w), G.word(w)))
        c = work.pop(u)
        out[u] = c
        lu = G.length(u)
        for y in G.interval(above if above is not None else 0, u):
            if y == u:
                continue
            p = table.p_q(y, u)
            if not p:
                continue
            slot = work.setdefault(y, {})
            base = G.length(y) - lu
            for i, pc in enumerate(p):
                if pc:
                    for e, cc in c.items():
                        _padd(slot, e + base + 2 * i, -pc * cc)
            if not slot:
                del work[y]
    return out


def from_cprime(table: KLTable, elem: dict) -> dict:
    out: dict = {}
    for w, coeff in elem.items():
        for y, poly in cprime_T(table, w).items():
            slot = out.setdefault(y, {})
            for e1, c1 in coeff.items():
                for e2, c2 in poly.items():
                    _padd(slot, e1 + e2, c1 * c2)
            if not slot:
                del out[y]
    return out


def h_structure(table: KLTable, x: int, y: int, z: int | None = None) -> dict:
    """``C'_x C'_y`` in the C' basis, {z: {exp: coeff}}; restricted to one z if given."""
    G = table.group
    prod = t_mul(G, cprime_T(table, x), cprime_T(table, y))
    res = to_cprime(table, prod, above=z)
    if z is not None:
        return {z: res[z]} if z in res else {}
    return res


def h_poly(table: KLTable, x: int, y: int, z: int) -> LaurentPoly:
    return LaurentPoly(h_structure(table, x, y, z).get(z, {}))


@dataclass
class HeckeElement:
    """A Hecke algebra element in the T or C' basis."""

    table: KLTable
    basis: str
    coeffs: dict = field(default_factory=dict)  # element -> LaurentPoly

    def __post_init__(self):
        if self.basis not in ("T", "Cprime"):
            raise ValueError("basis must be 'T' or 'Cprime'")
        self.coeffs = {w: c for w, c in self.coeffs.items() if not c.is_zero()}

    @classmethod
    def T(cls, table: KLTable, w: int) -> "HeckeElement":
        return cls(table, "T", {w: LaurentPoly.one()})

    @classmethod
    def C(cls, table: KLTable, w: int) -> "HeckeElement":
        return cls(table, "Cprime", {w: LaurentPoly.one()})

    def _raw(self) -> dict:
        return {w: c.terms for w, c in self.coeffs.items()}

    @staticmethod
    def _wrap(table, basis, raw) -> "HeckeElement":
        return HeckeElement(table, basis, {w: LaurentPoly(p) for w, p in raw.items()})

    def in_T(self) -> "HeckeElement":
        if self.basis == "T":
            return self
        return self._wrap(self.table, "T", from_cprime(self.table, self._raw()))

    def in_cprime(self) -> "HeckeElement":
        if self.basis == "Cprime":
            return self
        return self._wrap(self.table, "Cprime", to_cprime(self.table, self._raw()))

    def __add__(self, other: "HeckeElement") -> "HeckeElement":
        other = other.in_T() if self.basis == "T" else other.in_cprime()
        out = dict(self.coeffs)
        for w, c in other.coeffs.items():
            out[w] = out.get(w, LaurentPoly.zero()) + c
        return HeckeElement(self.table, self.basis, out)

    def scale(self, p: LaurentPoly) -> "HeckeElement":
        return HeckeElement(self.table, self.basis, {w: c * p for w, c in self.coeffs.items()})

    def __mul__(self, other: "HeckeElement") -> "HeckeElement":
        G = self.table.group
        prod = t_mul(G, self.in_T()._raw(), other.in_T()._raw())
        res = self._wrap(self.table, "T", prod)
        return res if self.basis == "T" else res.in_cprime()

    def __eq__(self, other):
        if not isinstance(other, HeckeElement):
            return NotImplemented
        return self.in_T().coeffs == other.in_T().coeffs

    def render(self, signed: bool = False) -> str:
        """Text form; ``signed`` renders C' coefficients against the signed C basis."""
        G = self.table.group
        name = "T" if self.basis == "T" else ("C" if signed else "C'")
        parts = []
        for w in G.sort(self.coeffs):
            c = self.coeffs[w]
            if signed and self.basis == "Cprime":
                # C'_w = (-1)^{l(w)} j(C_w), j: v -> -v on coefficients and T_w -> (-1)^l T_w
                c = LaurentPoly({e: (-1) ** (e + G.length(w)) * k for e, k in c.items()})
            parts.append(f"({c.render()})*{name}[{G.format(w)}]")
        return " + ".join(parts) if parts else "0"


# --- a-function ----------------------------------------------------------------


@dataclass(frozen=True)
class AValue:
    """An a-value with an honest status: exact, lower_bound or conjectural."""

    value: int
    status: str
    scope: str

    def as_dict(self) -> dict:
        return {"value": self.value, "status": self.status, "scope": self.scope}


class ArithmeticRangeError(ArithmeticError):
    """Dense float arithmetic would leave the exactly representable integers."""


@dataclass
class FiniteATable:
    """Full h-maximization over a finite group: a(z) for every z."""

    group: CoxeterGroup
    elements: list[int]
    a: dict[int, int]
    witness: dict[int, tuple[int, int]]
    h_nonnegative: bool
    max_abs_coeff: int

    def value(self, z: int) -> int:
        return self.a[z]


def _window_shift(arr: np.ndarray, k: int) -> np.ndarray:
    """arr shifted by k along the last axis (multiplication by v^k), zero-filled."""
    if k == 0:
        return arr
    out = np.zeros_like(arr)
    if k > 0:
        out[..., k:] = arr[..., :-k]
    else:
        out[..., :k] = arr[..., -k:]
    return out


def finite_a_table(table: KLTable, progress=None) -> FiniteATable:
    """Compute a(z) for every element of a finite group by full h-maximization.

    For each y the products ``T_a C'_y`` are built for all a by the left T_s
    action, combined into ``C'_x C'_y`` for all x by a polynomial matrix
    product, and converted to the C' basis with the inverse of the
    unitriangular matrix of KL polynomials.  Arithmetic is float64 on
    integers; a magnitude guard keeps it exact.
    """
    G = table.group
    spec = classify_parabolic(G.system, range(G.rank))
    if not spec.finite:
        raise ValueError("finite_a_table needs a finite Coxeter group")
    L = int(spec.positive_roots)
    ball = enumerate_ball(G, L)
    els = ball.elements
    N = len(els)
    idx = ball.index
    lengths = np.array([G.length(w) for w in els])

    # KL matrix Pm[y, w] as v-polynomials in the window [-L, 0]
    EP = L + 1
    Pm = np.zeros((N, N, EP))
    for j, w in enumerate(els):
        lw = G.length(w)
        for y in G.interval(0, w):
            i = idx[y]
            for t, c in enumerate(table.p_q(y, w)):
                if c:
                    Pm[i, j, G.length(y) - lw + 2 * t + L] = c
    # inverse by back substitution: Qm[y] = e_y - sum_{z > y} Pm[y, z] Qm[z]
    Qm = np.zeros((N, N, EP))
    for i in range(N - 1, -1, -1):
        row = np.zeros((N, 2 * EP - 1))
        for k in range(EP):
            col = Pm[i, :, k].copy()
            col[i] = 0.0
            nz = np.nonzero(col)[0]
            if nz.size:
                row[:, k:k + EP] -= np.tensordot(col[nz], Qm[nz], axes=(0, 0))
        row[i, L + L] += 1.0  # exponent 0 sits at index 2L of the doubled window
        if np.any(row[:, :L]):
            raise ArithmeticRangeError("inverse KL matrix left the expected window")
        Qm[i] = row[:, L:L + EP]

    # left T_s action tables
    smul = np.array([[idx[G.lmul(s, w)] for w in els] for s in range(G.rank)])
    sdesc = np.array([[G.length(G.lmul(s, w)) < G.length(w) for w in els] for s in range(G.rank)])

    EM = 3 * L + 1  # exponents [-2L, L]
    ER = 2 * L + 1  # exponents [0, 2L]
    EH = L + 1  # exponents [0, L]
    # CP[x, a, k]: coefficient of T_a in C'_x at exponent k - L
    CPk = [np.ascontiguousarray(Pm[:, :, k].T) for k in range(EP)]
    QmK = [np.ascontiguousarray(Qm[:, :, k].T) for k in range(EP)]

    a = np.full(N, -1, dtype=int)
    wit = np.zeros((N, 2), dtype=int)
    nonneg = True
    max_abs = 0.0
    limit = 2.0 ** 50
    first_letter = [G.word(w)[0] if w else -1 for w in els]
    tail_idx = [idx[G.tail(w)] if w else -1 for w in els]

    for jy, y in enumerate(els):
        # M[a] = T_a C'_y, exponents [-2L, L]
        M = np.zeros((N, N, EM))
        M[0, :, L:L + EP] = Pm[:, jy, :]
        for ja in range(1, N):
            s = first_letter[ja]
            src = M[tail_idx[ja]]
            perm = smul[s]
            down = sdesc[s]
            new = src[perm]
            extra = _window_shift(src, 1) - _window_shift(src, -1)
            M[ja] = np.where(down[:, None], new + extra, new)
        if np.abs(M).max() > limit:
            raise ArithmeticRangeError("T-basis coefficients too large for float64")
        Mflat = M.reshape(N, N * EM)
        # R[x, u, e] for e in [0, 2L]: sum_k CP_k @ shift(M)
        R = np.zeros((N, N, ER))
        for k in range(EP):
            ck = CPk[k]
            if not ck.any():
                continue
            shift = k - L  # exponent of the C' coefficient
            prod = (ck @ Mflat).reshape(N, N, EM)
            # target exponent e = m + shift, m in [-2L, L]; keep e in [0, 2L]
            m_idx0 = 2 * L - shift
            take = prod[:, :, m_idx0:m_idx0 + ER]
            R[:, :, :take.shape[2]] += take
        if np.abs(R).max() > limit:
            raise ArithmeticRangeError("product coefficients too large for float64")
        # h[x, z, e] = sum_{u,k} R[x, u, e - k] Qm[u, z, k]  for e in [0, L]
        H = np.zeros((N, N, EH))
        Rt = np.ascontiguousarray(R.transpose(0, 2, 1))  # (x, e, u)
        for k in range(EP):
            qk = QmK[k]
            if not qk.any():
                continue
            shift = k - L
            # need R exponent e - shift in [0, 2L] for e in [0, L]
            part = Rt[:, -shift:-shift + EH, :]
            H += (part.reshape(N * EH, N) @ qk).reshape(N, EH, N).transpose(0, 2, 1)
        max_abs = max(max_abs, float(np.abs(H).max()))
        if max_abs > limit:
            raise ArithmeticRangeError("structure constants too large for float64")
        if nonneg and (H < -0.5).any():
            nonneg = False
        nzmask = np.abs(H) > 0.5
        anyz = nzmask.any(axis=2)  # (x, z)
        deg = np.where(anyz, EH - 1 - np.argmax(nzmask[:, :, ::-1], axis=2), -1)
        best_x = np.argmax(deg, axis=0)
        best = deg[best_x, np.arange(N)]
        upd = best > a
        a[upd] = best[upd]
        wit[upd, 0] = best_x[upd]
        wit[upd, 1] = jy
        if progress:
            progress(jy + 1, N)
    if not np.allclose(np.rint(max_abs), max_abs):
        raise ArithmeticRangeError("non-integral structure constant")
    return FiniteATable(
        group=G,
        elements=list(els),
        a={w: int(a[i]) for i, w in enumerate(els)},
        witness={w: (els[wit[i, 0]], els[wit[i, 1]]) for i, w in enumerate(els)},
        h_nonnegative=nonneg,
        max_abs_coeff=int(round(max_abs)),
    )


_SHARED_TABLES: dict[tuple, tuple[KLTable, FiniteATable]] = {}
_SHARED_LOCK = threading.Lock()


def canonical_order(system, subset) -> tuple[int, ...]:
    """Order of ``subset`` minimizing the restricted Coxeter matrix.

    Isomorphic parabolics then share one cached a-table.
    """
    idx = sorted(subset)
    if len(idx) > 7:
        return tuple(idx)
    best = None
    for perm in permutations(idx):
        key = tuple(system.matrix[a][b] for a in perm for b in perm)
        if best is None or key < best[0]:
            best = (key, perm)
    return tuple(best[1])


def shared_finite_table(system, order: tuple[int, ...]) -> tuple[KLTable, FiniteATable]:
    """KL and a-tables of the parabolic with generators ``order``, cached by matrix."""
    sub = tuple(tuple(system.matrix[a][b] for b in order) for a in order)
    with _SHARED_LOCK:
        hit = _SHARED_TABLES.get(sub)
    if hit is None:
        from .coxeter import CoxeterSystem

        sub_table = KLTable(CoxeterGroup(CoxeterSystem(sub, name="parabolic", labels_from=0)))
        hit = (sub_table, finite_a_table(sub_table))
        with _SHARED_LOCK:
            hit = _SHARED_TABLES.setdefault(sub, hit)
    return hit


class AFunction:
    """a-values for elements of one group, exact wherever a finite parabolic houses them."""

    def __init__(self, table: KLTable):
        self.table = table
        self.group = table.group
        self._finite: dict[frozenset, tuple[KLTable, FiniteATable, tuple[int, ...]]] = {}
        self._cache: dict[int, AValue] = {}

    def parabolic(self, subset) -> tuple[KLTable, FiniteATable, tuple[int, ...]]:
        """KL table, a-table and index map of the finite parabolic on ``subset``."""
        key = frozenset(subset)
        hit = self._finite.get(key)
        if hit is None:
            if not classify_parabolic(self.group.system, key).finite:
                raise ValueError(f"parabolic on {sorted(key)} is infinite")
            imap = canonical_order(self.group.system, key)
            sub_table, at = shared_finite_table(self.group.system, imap)
            hit = (sub_table, at, imap)
            self._finite[key] = hit
        return hit

    def to_parabolic(self, w: int, subset) -> int:
        sub_table, _, imap = self.parabolic(subset)
        back = {g: i for i, g in enumerate(imap)}
        return sub_table.group.element(back[a] for a in self.group.word(w))

    def from_parabolic(self, u: int, subset) -> int:
        sub_table, _, imap = self.parabolic(subset)
        return self.group.element(imap[a] for a in sub_table.group.word(u))

    def finite_value(self, w: int) -> int | None:
        """Exact a(w) when the support of w generates a finite parabolic."""
        supp = self.group.support(w)
        if not supp:
            return 0
        if not classify_parabolic(self.group.system, supp).finite:
            return None
        _, at, _ = self.parabolic(supp)
        return at.value(self.to_parabolic(w, supp))

    def exact(self, w: int) -> AValue | None:
        hit = self._cache.get(w)
        if hit is not None:
            return hit
        val = self.finite_value(w)
        if val is None:
            return None
        supp = sorted(self.group.support(w))
        label = classify_parabolic(self.group.system, supp).type_label if supp else "trivial"
        res = AValue(val, "exact", f"finite parabolic {label} on {self.group.system.format_word(supp)}")
        self._cache[w] = res
        return res


def gamma_delta_consts(table: KLTable, x: int, y: int, z: int, a_of_z: AValue) -> tuple[int, int]:
    """(gamma, delta) constants: the v^a and v^(a-1) coefficients of h_{x,y,z}."""
    if a_of_z.status != "exact":
        raise ValueError("gamma/delta constants need an exact a-value")
    h = h_structure(table, x, y, z).get(z, {})
    return h.get(a_of_z.value, 0), h.get(a_of_z.value - 1, 0)


def bound_default(group: CoxeterGroup) -> int:
    """Default cap N on a: twice the largest l(w0(I)) over finite parabolics."""
    from .coxeter import finite_parabolics

    best = 0
    for sub in finite_parabolics(group.system, maximal_only=True):
        best = max(best, int(classify_parabolic(group.system, sub).positive_roots))
    return 2 * best


def is_integer_valued(x: float) -> bool:
    return math.isclose(x, round(x))

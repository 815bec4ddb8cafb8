"""Sparse Laurent polynomials in v = q^(1/2) with Python integer coefficients."""

from __future__ import annotations

from typing import Iterable, Mapping


class NotAQPolynomial(ValueError):
    """Raised when a Laurent polynomial has odd or negative v-exponents."""


class LaurentPoly:
    """Immutable map exponent -> nonzero coefficient, exponents counted in v."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[int, int] | Iterable[tuple[int, int]] | None = None):
        clean: dict[int, int] = {}
        if terms:
            items = terms.items() if isinstance(terms, Mapping) else terms
            for e, c in items:
                if not isinstance(e, int) or isinstance(e, bool):
                    raise TypeError(f"exponent must be int, got {e!r}")
                c = int(c)
                if c:
                    clean[e] = clean.get(e, 0) + c
                    if not clean[e]:
                        del clean[e]
        self._terms = dict(sorted(clean.items()))
        self._hash = None

    # constructors --------------------------------------------------------

    @classmethod
    def zero(cls) -> "LaurentPoly":
        return cls()

    @classmethod
    def one(cls) -> "LaurentPoly":
        return cls({0: 1})

    @classmethod
    def monomial(cls, exp: int, coeff: int = 1) -> "LaurentPoly":
        return cls({exp: coeff})

    @classmethod
    def from_q(cls, coeffs: Iterable[int]) -> "LaurentPoly":
        """Embed a dense q-polynomial [c0, c1, ...] as sum c_i v^(2i)."""
        return cls({2 * i: c for i, c in enumerate(coeffs)})

    # access --------------------------------------------------------------

    @property
    def terms(self) -> dict[int, int]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def coeff(self, exp: int) -> int:
        return self._terms.get(exp, 0)

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def degree(self) -> int | None:
        return max(self._terms) if self._terms else None

    def valuation(self) -> int | None:
        return min(self._terms) if self._terms else None

    def leading_coeff(self) -> int | None:
        d = self.degree()
        return None if d is None else self._terms[d]

    def is_nonnegative(self) -> bool:
        return all(c >= 0 for c in self._terms.values())

    # arithmetic ----------------------------------------------------------

    def __add__(self, other):
        other = _coerce(other)
        out = dict(self._terms)
        for e, c in other._terms.items():
            out[e] = out.get(e, 0) + c
        return LaurentPoly(out)

    __radd__ = __add__

    def __neg__(self):
        return LaurentPoly({e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) - self

    def __mul__(self, other):
        other = _coerce(other)
        out: dict[int, int] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                out[e1 + e2] = out.get(e1 + e2, 0) + c1 * c2
        return LaurentPoly(out)

    __rmul__ = __mul__

    def shift(self, k: int) -> "LaurentPoly":
        """Multiply by v^k."""
        return LaurentPoly({e + k: c for e, c in self._terms.items()})

    def bar(self) -> "LaurentPoly":
        """The involution v -> v^(-1)."""
        return LaurentPoly({-e: c for e, c in self._terms.items()})

    def __eq__(self, other):
        if isinstance(other, int):
            other = LaurentPoly({0: other})
        if not isinstance(other, LaurentPoly):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(tuple(self._terms.items()))
        return self._hash

    # q-polynomials -------------------------------------------------------

    def as_q_polynomial(self) -> list[int]:
        """Dense q-coefficients; raises NotAQPolynomial on odd/negative exponents."""
        if not self._terms:
            return []
        for e in self._terms:
            if e < 0 or e % 2:
                raise NotAQPolynomial(f"exponent v^{e} is not a nonnegative power of q")
        out = [0] * (max(self._terms) // 2 + 1)
        for e, c in self._terms.items():
            out[e // 2] = c
        return out

    # rendering -----------------------------------------------------------

    def render(self) -> str:
        """Terms as ``c*q^{e/2}`` in decreasing exponent order."""
        if not self._terms:
            return "0"
        parts = []
        for e in sorted(self._terms, reverse=True):
            c = self._terms[e]
            parts.append("1" if e == 0 and c == 1 else f"{c}*q^{{{e}/2}}" if e else str(c))
        return " + ".join(parts).replace("+ -", "- ")

    def render_q(self) -> str:
        """Human form in q when possible (``1 + 2q + q^2``), else in v."""
        try:
            dense = self.as_q_polynomial()
            var, items = "q", [(i, c) for i, c in enumerate(dense) if c]
        except NotAQPolynomial:
            var, items = "v", sorted(self._terms.items())
        if not items:
            return "0"
        parts = []
        for e, c in items:
            mono = "" if e == 0 else var if e == 1 else f"{var}^{e}"
            if not mono:
                parts.append(str(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{c}{mono}")
        return " + ".join(parts).replace("+ -", "- ")

    def to_json(self) -> list[list[int]]:
        return [[e, c] for e, c in sorted(self._terms.items(), reverse=True)]

    def __repr__(self):
        return f"LaurentPoly({self._terms})"

    def __str__(self):
        return self.render_q()


def _coerce(x) -> LaurentPoly:
    if isinstance(x, LaurentPoly):
        return x
    if isinstance(x, int):
        return LaurentPoly({0: x})
    raise TypeError(f"cannot combine LaurentPoly with {type(x).__name__}")


V = LaurentPoly({1: 1})
Q = LaurentPoly({2: 1})

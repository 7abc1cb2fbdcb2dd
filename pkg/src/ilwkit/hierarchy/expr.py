"""Exact symbolic densities in one unknown mean-zero field.

Expression trees are plain nested tuples (hashable, totally ordered):

    ("u",)                the unknown field
    ("ap", op, child)     a unary operator application
    ("pr", (c1, ..., cj)) a pointwise product, j >= 2

Operators are Fourier multipliers named by tag: "dx" (derivative), "h"
(Hilbert), "g" (depth operator), "gt" (depth-scaled operator), "q" (deep
perturbation = (g - h) dx), "qt" (shallow perturbation = gt + dx/3), and the
opaque high-mode projection marker "pn" whose numeric cutoff is supplied only
at evaluation time.

A monomial carries an exact rational coefficient, a power of i (stored
folded into {0,1}, the sign of i^2 = -1 being absorbed into the
coefficient), a signed integer power of the depth parameter delta, and a
body tree.  A density is a finite rational combination of monomials tagged
with the regime it was built in.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, NamedTuple

__all__ = [
    "U",
    "OPS",
    "MULTIPLIER_OPS",
    "TRANSPOSE_SIGN",
    "Mono",
    "mono",
    "Density",
    "leaf_count",
    "op_count",
    "contains_op",
    "max_dx_per_leaf",
    "mean_zero",
    "deep_rank",
    "shallow_rank",
]

U = ("u",)

# chain sort order: decorations outermost, derivatives innermost
OPS = ("h", "g", "gt", "q", "qt", "dx", "pn")
MULTIPLIER_OPS = ("h", "g", "gt", "q", "qt", "dx")
_CHAIN_KEY = {o: i for i, o in enumerate(MULTIPLIER_OPS)}

# sign picked up when an operator hops across an integral by parts/adjoint
TRANSPOSE_SIGN = {"dx": -1, "h": -1, "g": -1, "gt": -1, "qt": -1, "q": 1}


def chain_key(op: str) -> int:
    return _CHAIN_KEY[op]


def ap(op: str, child: tuple) -> tuple:
    if op not in OPS:
        raise ValueError(f"unknown operator {op!r}")
    return ("ap", op, child)


def pr(children: Iterable[tuple]) -> tuple:
    kids = tuple(children)
    if len(kids) < 2:
        raise ValueError("product needs at least two factors")
    return ("pr", kids)


def chain(ops: Iterable[str], core: tuple) -> tuple:
    """Wrap core with ops given outermost-first."""
    out = core
    for op in reversed(list(ops)):
        out = ap(op, out)
    return out


def mean_zero(e: tuple) -> bool:
    """Provably mean-zero: u itself, or anything below an operator."""
    return e[0] != "pr"


def leaf_count(e: tuple) -> int:
    if e[0] == "u":
        return 1
    if e[0] == "ap":
        return leaf_count(e[2])
    return sum(leaf_count(c) for c in e[1])


def op_count(e: tuple, op: str) -> int:
    if e[0] == "u":
        return 0
    if e[0] == "ap":
        return (e[1] == op) + op_count(e[2], op)
    return sum(op_count(c, op) for c in e[1])


def contains_op(e: tuple, op: str) -> bool:
    return op_count(e, op) > 0


def max_dx_per_leaf(e: tuple, acc: int = 0) -> int:
    """Largest number of dx applications along any root-to-leaf path."""
    if e[0] == "u":
        return acc
    if e[0] == "ap":
        return max_dx_per_leaf(e[2], acc + (e[1] == "dx"))
    return max(max_dx_per_leaf(c, acc) for c in e[1])


class Mono(NamedTuple):
    coeff: Fraction
    ipow: int  # 0 or 1 after folding
    dpow: int  # signed power of delta
    body: tuple


def mono(coeff, ipow: int, dpow: int, body: tuple) -> Mono:
    """Normalize the i-power into {0,1}, folding i^2 = -1 into the coefficient."""
    c = Fraction(coeff)
    m4 = ipow % 4
    if m4 >= 2:
        c = -c
        m4 -= 2
    return Mono(c, m4, dpow, body)


def _mono_sort_key(m: Mono):
    return (m.body, m.dpow, m.ipow)


def deep_rank(m: Mono) -> int:
    """#u + #dx + #(1/delta) + #Q (deep-water grading)."""
    return leaf_count(m.body) + op_count(m.body, "dx") - m.dpow + op_count(m.body, "q")


def shallow_rank(m: Mono) -> Fraction:
    """#v + (#dx + #Gt + #Qt - #delta)/2 with the signed delta power."""
    b = m.body
    return leaf_count(b) + Fraction(
        op_count(b, "dx") + op_count(b, "gt") + op_count(b, "qt") - m.dpow, 2
    )


@dataclass(frozen=True)
class Density:
    """Rational combination of monomials; immutable value object."""

    monos: tuple
    regime: str = "deep"
    declared_rank: Fraction | None = None

    def __post_init__(self):
        if self.regime not in ("deep", "bo", "shallow", "kdv"):
            raise ValueError(f"unknown regime {self.regime!r}")

    # --- construction helpers -----------------------------------------

    @classmethod
    def zero(cls, regime: str = "deep") -> "Density":
        return cls((), regime)

    @classmethod
    def of(cls, monomials: Iterable[Mono], regime: str = "deep", rank=None) -> "Density":
        r = Fraction(rank) if rank is not None else None
        return cls(tuple(monomials), regime, r)

    @classmethod
    def unknown(cls, regime: str = "deep", coeff=1) -> "Density":
        return cls((mono(coeff, 0, 0, U),), regime)

    def with_rank(self, rank) -> "Density":
        r = Fraction(rank) if rank is not None else None
        return Density(self.monos, self.regime, r)

    # --- linear structure ---------------------------------------------

    def __add__(self, other: "Density") -> "Density":
        if other == 0:
            return self
        if self.regime != other.regime:
            raise ValueError("cannot mix regimes")
        return Density(self.monos + other.monos, self.regime, self.declared_rank)

    __radd__ = __add__

    def scale(self, coeff=1, ipow: int = 0, dpow: int = 0) -> "Density":
        return Density(
            tuple(mono(m.coeff * Fraction(coeff), m.ipow + ipow, m.dpow + dpow, m.body) for m in self.monos),
            self.regime,
            self.declared_rank,
        )

    def __neg__(self) -> "Density":
        return self.scale(-1)

    def __mul__(self, other: "Density") -> "Density":
        if self.regime != other.regime:
            raise ValueError("cannot mix regimes")
        out = []
        for a in self.monos:
            for b in other.monos:
                body = _merge_products(a.body, b.body)
                out.append(mono(a.coeff * b.coeff, a.ipow + b.ipow, a.dpow + b.dpow, body))
        rank = None
        if self.declared_rank is not None and other.declared_rank is not None:
            rank = self.declared_rank + other.declared_rank
        return Density(tuple(out), self.regime, rank)

    def apply(self, op: str) -> "Density":
        """Apply a unary operator to every monomial (linearity)."""
        return Density(
            tuple(Mono(m.coeff, m.ipow, m.dpow, ap(op, m.body)) for m in self.monos),
            self.regime,
            self.declared_rank,
        )

    def apply_chain(self, ops: Iterable[str]) -> "Density":
        d = self
        for op in reversed(list(ops)):
            d = d.apply(op)
        return d

    def map_monos(self, f: Callable[[Mono], Iterable[Mono]]) -> "Density":
        out = []
        for m in self.monos:
            out.extend(f(m))
        return Density(tuple(out), self.regime, self.declared_rank)

    def filter(self, pred: Callable[[Mono], bool]) -> "Density":
        return Density(tuple(m for m in self.monos if pred(m)), self.regime, self.declared_rank)

    # --- inspection ----------------------------------------------------

    def __len__(self) -> int:
        return len(self.monos)

    def is_zero(self) -> bool:
        return not self.monos

    def merged(self) -> "Density":
        """Collect identical (ipow, dpow, body) keys; drop zero coefficients."""
        acc: dict = {}
        for m in self.monos:
            key = (m.ipow, m.dpow, m.body)
            acc[key] = acc.get(key, Fraction(0)) + m.coeff
        kept = [Mono(c, k[0], k[1], k[2]) for k, c in acc.items() if c != 0]
        kept.sort(key=_mono_sort_key)
        return Density(tuple(kept), self.regime, self.declared_rank)

    def rank_check(self) -> Fraction:
        """Assert homogeneous grading and return it."""
        if not self.monos:
            raise ValueError("zero density has no rank")
        fn = deep_rank if self.regime in ("deep", "bo") else shallow_rank
        ranks = {fn(m) for m in self.monos}
        if len(ranks) > 1:
            raise ValueError(f"inhomogeneous density, ranks {sorted(ranks)}")
        r = Fraction(ranks.pop())
        if self.declared_rank is not None and r != self.declared_rank:
            raise AssertionError(f"declared rank {self.declared_rank} but computed {r}")
        return r

    # --- serialization -------------------------------------------------

    def to_json(self) -> str:
        def enc(e):
            if e[0] == "u":
                return ["u"]
            if e[0] == "ap":
                return ["ap", e[1], enc(e[2])]
            return ["pr", [enc(c) for c in e[1]]]

        doc = {
            "regime": self.regime,
            "rank": None
            if self.declared_rank is None
            else {"num": self.declared_rank.numerator, "den": self.declared_rank.denominator},
            "monomials": [
                {
                    "coeff": {"num": m.coeff.numerator, "den": m.coeff.denominator},
                    "ipow": m.ipow,
                    "dpow": m.dpow,
                    "body": enc(m.body),
                }
                for m in self.monos
            ],
        }
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Density":
        doc = json.loads(text)

        def dec(e):
            if e[0] == "u":
                return U
            if e[0] == "ap":
                return ap(e[1], dec(e[2]))
            return pr([dec(c) for c in e[1]])

        monos = tuple(
            mono(
                Fraction(m["coeff"]["num"], m["coeff"]["den"]),
                m["ipow"],
                m["dpow"],
                dec(m["body"]),
            )
            for m in doc["monomials"]
        )
        rank = None if doc["rank"] is None else Fraction(doc["rank"]["num"], doc["rank"]["den"])
        return cls(monos, doc["regime"], rank)

    # --- display -------------------------------------------------------

    def pretty(self) -> str:
        sym = "v" if self.regime in ("shallow", "kdv") else "u"

        def pe(e):
            if e[0] == "u":
                return sym
            if e[0] == "ap":
                names = {"h": "H", "g": "G", "gt": "Gt", "q": "Q", "qt": "Qt", "dx": "dx", "pn": "P>N"}
                return f"{names[e[1]]}[{pe(e[2])}]"
            return " * ".join(pe(c) for c in e[1])

        if not self.monos:
            return "0"
        parts = []
        for m in self.monos:
            c = str(m.coeff) if m.coeff.denominator == 1 else f"({m.coeff})"
            s = c
            if m.ipow:
                s += " i"
            if m.dpow:
                s += f" delta^{m.dpow}"
            parts.append(f"{s} {pe(m.body)}")
        return "  +  ".join(parts)


def _merge_products(a: tuple, b: tuple) -> tuple:
    ka = a[1] if a[0] == "pr" else (a,)
    kb = b[1] if b[0] == "pr" else (b,)
    return ("pr", ka + kb)

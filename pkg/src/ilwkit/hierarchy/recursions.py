"""Generating recursions for the microscopic conservation-law densities.

The deep-water family is built from the quadratic Miura-type recursion for
the finite-depth equation, with a linear step that can be phrased either
through the depth operator itself (the "g" alphabet) or perturbatively
around the Hilbert transform (the "q" alphabet).  The infinite-depth family
drops the depth corrections altogether.  The shallow family follows the
scaled recursion whose zero-depth part reproduces the classical
third-order hierarchy, together with its telescoped variant whose
integrals carry no negative powers of the depth parameter.
"""

from __future__ import annotations

from fractions import Fraction
from math import factorial

from .canon import canonicalize
from .expr import Density, U, ap, mono, pr

__all__ = [
    "chi_deep",
    "chi_bo",
    "h_shallow",
    "h_kdv",
    "h_tilde",
    "parity_flag",
]

_CHI_CACHE: dict = {}
_H_CACHE: dict = {}


def _compositions(total: int, parts: int, minimum: int):
    if parts == 1:
        if total >= minimum:
            yield (total,)
        return
    for first in range(minimum, total - minimum * (parts - 1) + 1):
        for rest in _compositions(total - first, parts - 1, minimum):
            yield (first,) + rest


def _linear_step_deep(d: Density, variant: str) -> Density:
    """Apply the linearized recursion operator for the deep families."""
    if variant == "g":
        out = d.apply_chain(["g", "dx"]) + d.apply("dx").scale(-1, ipow=1)
        out = out + d.scale(1, dpow=-1)
    elif variant == "q":
        out = d.apply_chain(["h", "dx"]) + d.apply("dx").scale(-1, ipow=1)
        out = out + d.scale(1, dpow=-1) + d.apply("q")
    elif variant == "bo":
        out = d.apply_chain(["h", "dx"]) + d.apply("dx").scale(-1, ipow=1)
    else:
        raise ValueError(f"unknown deep variant {variant!r}")
    return out


def chi_deep(n: int, variant: str = "g") -> Density:
    """n-th deep-water density; rank n, built over the chosen alphabet."""
    if n < 1:
        raise ValueError("density index starts at 1")
    if variant not in ("g", "q", "bo"):
        raise ValueError(f"unknown deep variant {variant!r}")
    key = (variant, n)
    got = _CHI_CACHE.get(key)
    if got is not None:
        return got
    regime = "bo" if variant == "bo" else "deep"
    if n == 1:
        out = Density.of([mono(2, 0, 0, U)], regime, rank=1)
    else:
        total = Density.zero(regime)
        for j in range(2, n + 1):
            coeff = Fraction(-1, factorial(j))
            for comp in _compositions(n, j, 1):
                term = chi_deep(comp[0], variant)
                for m in comp[1:]:
                    term = term * chi_deep(m, variant)
                total = total + term.scale(coeff)
        total = total + _linear_step_deep(chi_deep(n - 1, variant), variant).scale(-1)
        out = canonicalize(total).with_rank(n)
    out.rank_check()
    _CHI_CACHE[key] = out
    return out


def chi_bo(n: int) -> Density:
    """Infinite-depth densities: the recursion with no depth corrections."""
    return chi_deep(n, "bo")


def _linear_step_shallow(d: Density) -> Density:
    # (1 + i delta Gt) dx
    return d.apply("dx") + d.apply_chain(["gt", "dx"]).scale(1, ipow=1, dpow=1)


def h_shallow(n: int) -> Density:
    """n-th shallow-water density; rank 1 + n/2."""
    if n < 0:
        raise ValueError("density index starts at 0")
    key = ("shallow", n)
    got = _H_CACHE.get(key)
    if got is not None:
        return got
    if n == 0:
        out = Density.of([mono(-1, 0, 0, U)], "shallow", rank=1)
    elif n == 1:
        out = canonicalize(
            Density.of(
                [
                    mono(-1, 1, 1, pr((U, U))),
                    mono(-1, 0, 0, ap("dx", U)),
                    mono(-1, 1, 1, ap("gt", ap("dx", U))),
                ],
                "shallow",
                rank=Fraction(3, 2),
            )
        )
    else:
        total = Density.zero("shallow")
        # squared-sum block, degree n: prefactor -1/(2 delta^2)
        for j in range(2, n + 1):
            base = Fraction(2**j, 2 * factorial(j))
            for comp in _compositions(n - j, j, 0):
                term = h_shallow(comp[0])
                for m in comp[1:]:
                    term = term * h_shallow(m)
                total = total + term.scale(-base, ipow=j, dpow=j - 2)
        # squared-sum block, degree n + 1: prefactor i/(2 delta)
        for j in range(2, n + 2):
            base = Fraction(2**j, 2 * factorial(j))
            for comp in _compositions(n + 1 - j, j, 0):
                term = h_shallow(comp[0])
                for m in comp[1:]:
                    term = term * h_shallow(m)
                total = total + term.scale(base, ipow=j + 1, dpow=j - 1)
        total = total + _linear_step_shallow(h_shallow(n - 1))
        out = canonicalize(total).with_rank(Fraction(n + 2, 2))
    out.rank_check()
    _H_CACHE[key] = out
    return out


def h_kdv(n: int) -> Density:
    """Zero-depth densities: the classical quadratic recursion."""
    if n < 0:
        raise ValueError("density index starts at 0")
    key = ("kdv", n)
    got = _H_CACHE.get(key)
    if got is not None:
        return got
    if n == 0:
        out = Density.of([mono(-1, 0, 0, U)], "kdv", rank=1)
    elif n == 1:
        out = Density.of([mono(-1, 0, 0, ap("dx", U))], "kdv", rank=Fraction(3, 2))
    else:
        total = Density.zero("kdv")
        for comp in _compositions(n - 2, 2, 0):
            total = total + h_kdv(comp[0]) * h_kdv(comp[1])
        total = total + h_kdv(n - 1).apply("dx")
        out = canonicalize(total).with_rank(Fraction(n + 2, 2))
    out.rank_check()
    _H_CACHE[key] = out
    return out


def parity_flag(n: int) -> int:
    """1 on odd indices, 0 on even; the telescoped scaling exponent."""
    return n % 2


def h_tilde(n: int) -> Density:
    """Telescoped shallow densities whose integrals avoid negative depth powers."""
    if n < 1:
        raise ValueError("telescoped index starts at 1")
    key = ("tilde", n)
    got = _H_CACHE.get(key)
    if got is not None:
        return got
    p = parity_flag(n)
    total = Density.zero("shallow")
    for j in range(1, n + 1):
        # (-i delta)^p / delta^2 * (i delta)^(j - n) h_j
        total = total + h_shallow(j).scale(
            (-1) ** p, ipow=p + (j - n), dpow=p - 2 + (j - n)
        )
    out = canonicalize(total).with_rank(Fraction(4 + n - p, 2))
    out.rank_check()
    _H_CACHE[key] = out
    return out

"""Energy functionals of the conservation-law hierarchy.

The deep energies at half-integer regularity k/2 are assembled from the
integrated densities with depth-power corrections by lower energies; the
infinite-depth energies take the plain real part.  The shallow energies
come from the telescoped densities, with the zero-depth family as their
collapse limit.  Densities returned here are integrated canonical forms
with the real part already extracted.
"""

from __future__ import annotations

from fractions import Fraction
from math import comb

from .canon import canonicalize, canonicalize_integrated, re_part
from .expr import Density, leaf_count, mono, op_count, pr, U
from .recursions import chi_deep, h_kdv, h_tilde

__all__ = [
    "b_coeff",
    "a_coeff",
    "atilde_coeff",
    "energy_deep",
    "energy_bo",
    "energy_shallow",
    "energy_kdv",
    "interaction_part",
    "delta_free_deep",
    "delta_free_shallow",
]

_E_CACHE: dict = {}


def b_coeff(k: int) -> int:
    """Normalization of the deep energy at regularity k/2."""
    if k < 0:
        raise ValueError("index starts at 0")
    return sum(comb(k + 1, ell + 1) for ell in range(0, k + 1, 2))


def a_coeff(k: int, ell: int) -> Fraction:
    """Weight distribution of the deep energy quadratic form."""
    if ell % 2 or not 0 <= ell <= k:
        raise ValueError("even 0 <= ell <= k required")
    return Fraction(comb(k + 1, ell + 1), b_coeff(k))


def atilde_coeff(k: int, ell: int) -> Fraction:
    """Weight distribution of the shallow energy quadratic form."""
    if k % 2:
        kap = (k + 1) // 2
        if ell % 2 == 0 or not 1 <= ell <= 2 * kap - 1 + 2:
            raise ValueError("odd 1 <= ell <= k+1 required")
        return Fraction(3, 2 * kap) * comb(2 * kap, ell)
    kap = k // 2
    if ell % 2 or not 0 <= ell <= 2 * kap + 2:
        raise ValueError("even 0 <= ell <= k+2 required")
    return Fraction(comb(2 * kap + 1, ell))


def energy_deep(k: int, variant: str = "g") -> Density:
    """Deep energy at regularity k/2, corrected by the lower energies."""
    if k < 0:
        raise ValueError("index starts at 0")
    if variant not in ("g", "q"):
        raise ValueError(f"unknown deep variant {variant!r}")
    key = ("deep", variant, k)
    got = _E_CACHE.get(key)
    if got is not None:
        return got
    if k == 0:
        out = Density.of([mono(Fraction(1, 2), 0, 0, pr((U, U)))], "deep", rank=2)
    else:
        sign = (-1) ** (k + 1)
        total = re_part(canonicalize_integrated(chi_deep(k + 2, variant)))
        for j in range(k):
            c = Fraction(-4 * sign * comb(k + 2, j + 2) * b_coeff(j))
            total = total + energy_deep(j, variant).scale(c, dpow=-(k - j))
        out = re_part(
            canonicalize_integrated(total.scale(Fraction(sign, 4 * b_coeff(k))))
        ).with_rank(k + 2)
    out.rank_check()
    _E_CACHE[key] = out
    return out


def energy_bo(k: int) -> Density:
    """Infinite-depth energy at regularity k/2."""
    if k < 0:
        raise ValueError("index starts at 0")
    key = ("bo", k)
    got = _E_CACHE.get(key)
    if got is not None:
        return got
    if k == 0:
        out = Density.of([mono(Fraction(1, 2), 0, 0, pr((U, U)))], "bo", rank=2)
    else:
        sign = Fraction((-1) ** (k + 1), 4 * b_coeff(k))
        out = re_part(
            canonicalize_integrated(chi_deep(k + 2, "bo").scale(sign))
        ).with_rank(k + 2)
    out.rank_check()
    _E_CACHE[key] = out
    return out


def energy_shallow(k: int) -> Density:
    """Shallow energy at regularity k/2, from the telescoped densities."""
    if k < 0:
        raise ValueError("index starts at 0")
    key = ("shallow", k)
    got = _E_CACHE.get(key)
    if got is not None:
        return got
    if k % 2:
        kap = (k + 1) // 2
        c = Fraction(3 * (-1) ** (kap + 1), 4 * kap)
    else:
        kap = k // 2
        c = Fraction((-1) ** (kap + 1), 2)
    out = re_part(canonicalize_integrated(h_tilde(k + 1).scale(c)))
    out = out.with_rank(out.rank_check())
    _E_CACHE[key] = out
    return out


def energy_kdv(kappa: int) -> Density:
    """Zero-depth energy at integer regularity kappa."""
    if kappa < 0:
        raise ValueError("index starts at 0")
    key = ("kdv", kappa)
    got = _E_CACHE.get(key)
    if got is not None:
        return got
    c = Fraction((-1) ** kappa, 2)
    out = re_part(canonicalize_integrated(h_kdv(2 * kappa + 2).scale(c)))
    out = out.with_rank(out.rank_check())
    _E_CACHE[key] = out
    return out


def interaction_part(d: Density) -> Density:
    """Monomials of degree three and higher in the field."""
    return d.filter(lambda m: leaf_count(m.body) >= 3)


def _g_to_h(e: tuple):
    if e[0] == "u":
        return e
    if e[0] == "ap":
        return ("ap", "h" if e[1] == "g" else e[1], _g_to_h(e[2]))
    return ("pr", tuple(_g_to_h(c) for c in e[1]))


def delta_free_deep(d: Density) -> Density:
    """Depth-free part: drop negative depth powers and perturbation factors,
    and send the depth operator to its infinite-depth limit.

    Meaningful on the perturbative alphabet, where the claim is that the
    result coincides with the infinite-depth energy.
    """
    kept = [
        mono(m.coeff, m.ipow, m.dpow, _g_to_h(m.body))
        for m in d.monos
        if m.dpow >= 0 and not op_count(m.body, "q")
    ]
    return canonicalize_integrated(Density(tuple(kept), "bo", None))


def _gt_to_dx(e: tuple):
    if e[0] == "u":
        return (0, e)
    if e[0] == "ap":
        cnt, child = _gt_to_dx(e[2])
        if e[1] == "gt":
            return (cnt + 1, ("ap", "dx", child))
        return (cnt, ("ap", e[1], child))
    total = 0
    kids = []
    for c in e[1]:
        cnt, k = _gt_to_dx(c)
        total += cnt
        kids.append(k)
    return (total, ("pr", tuple(kids)))


def delta_free_shallow(d: Density) -> Density:
    """Zero-depth collapse: drop positive depth powers, then send the
    depth-scaled operator to minus a third of the derivative."""
    out = []
    for m in d.monos:
        if m.dpow > 0:
            continue
        if m.dpow < 0:
            raise ValueError("negative depth power in a shallow integrated density")
        if op_count(m.body, "qt"):
            raise ValueError("perturbation factor has no zero-depth collapse here")
        cnt, body = _gt_to_dx(m.body)
        out.append(mono(m.coeff * Fraction(-1, 3) ** cnt, m.ipow, m.dpow, body))
    return canonicalize_integrated(Density(tuple(out), "kdv", None))

"""Quadratic sectors: weight descriptors and their closed forms.

A quadratic functional of a real mean-zero field is determined by its
weight at the positive modes: the key (dpow, npow, xpow) stands for

    delta^dpow * sum_{n>0} 2 n^npow x(n)^xpow |u_hat(n)|^2

where x(n) is the depth symbol coth(delta n) - 1/(delta n) in the deep
families and its delta-scaled form in the shallow families.  The closed
forms below give the exact quadratic parts of the integrated hierarchy
densities; the recursion output is tested against them term by term.
"""

from __future__ import annotations

from fractions import Fraction
from math import comb

from .canon import weight_entries
from .expr import Density, leaf_count

__all__ = [
    "quadratic_part",
    "deep_quadratic_reference",
    "shallow_quadratic_reference",
    "kdv_quadratic_reference",
    "deep_energy_quadratic",
    "shallow_energy_quadratic",
    "kdv_energy_quadratic",
]


def quadratic_part(d: Density) -> dict:
    """Weight map of the two-point monomials of an integrated density."""
    out: dict = {}
    for m in d.monos:
        if leaf_count(m.body) != 2:
            continue
        if m.body[0] != "pr":
            continue  # integrates to zero
        if m.ipow:
            raise ValueError("imaginary quadratic monomial; take the real part first")
        for (npow, xpow), cf in weight_entries(m.body).items():
            key = (m.dpow, npow, xpow)
            out[key] = out.get(key, Fraction(0)) + m.coeff * cf
    return {k: v for k, v in out.items() if v != 0}


# --- closed forms for the hierarchy densities ------------------------------


def deep_quadratic_reference(n: int) -> dict:
    """Quadratic weight of the integrated n-th deep density."""
    if n < 2:
        raise ValueError("quadratic sector starts at index 2")
    out: dict = {}
    sign = 2 * (-1) ** (n + 1)
    for m in range(n - 1):
        for ell in range(0, m + 1, 2):
            key = (-(n - 2 - m), m, m - ell)
            out[key] = out.get(key, Fraction(0)) + sign * comb(n, m + 2) * comb(m + 1, ell + 1)
    return {k: Fraction(v) for k, v in out.items() if v != 0}


def shallow_quadratic_reference(n: int) -> dict:
    """Quadratic weight of the integrated n-th telescoped shallow density."""
    if n < 2:
        raise ValueError("quadratic sector starts at index 2")
    p = n % 2
    sign = (-1) ** ((n - 2 - p) // 2)
    out: dict = {}
    for ell in range(n):
        if ell % 2 != (n - 1) % 2:
            continue
        key = (ell - 1 + p, n - 1, ell)
        out[key] = out.get(key, Fraction(0)) + sign * comb(n, ell)
    return {k: Fraction(v) for k, v in out.items() if v != 0}


def kdv_quadratic_reference(n: int) -> dict:
    """Quadratic weight of the integrated (2n)-th zero-depth density."""
    if n < 1:
        raise ValueError("index starts at 1")
    return {(0, 2 * (n - 1), 0): Fraction((-1) ** (n - 1))}


# --- closed forms for the energy functionals -------------------------------


def _b(k: int) -> int:
    return sum(comb(k + 1, ell + 1) for ell in range(0, k + 1, 2))


def _a(k: int, ell: int) -> Fraction:
    return Fraction(comb(k + 1, ell + 1), _b(k))


def deep_energy_quadratic(k: int) -> dict:
    """Quadratic weight of the deep energy at regularity k/2."""
    if k < 0:
        raise ValueError("index starts at 0")
    return {
        (0, k, k - ell): Fraction(1, 2) * _a(k, ell) for ell in range(0, k + 1, 2)
    }


def shallow_energy_quadratic(k: int) -> dict:
    """Quadratic weight of the shallow energy at regularity k/2."""
    if k < 0:
        raise ValueError("index starts at 0")
    if k % 2:
        kap = (k + 1) // 2
        return {
            (ell - 1, k, ell): Fraction(3, 4 * kap) * comb(2 * kap, ell)
            for ell in range(1, 2 * kap + 1, 2)
        }
    kap = k // 2
    return {
        (ell, k, ell): Fraction(1, 2) * comb(2 * kap + 1, ell)
        for ell in range(0, 2 * kap + 2, 2)
    }


def kdv_energy_quadratic(kappa: int) -> dict:
    """Quadratic weight of the zero-depth energy at integer regularity kappa."""
    if kappa < 0:
        raise ValueError("index starts at 0")
    return {(0, 2 * kappa, 0): Fraction(1, 2)}

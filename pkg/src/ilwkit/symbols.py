"""Fourier multipliers for the ILW operator family on the torus.

Every operator in the toolkit is a Fourier multiplier m(n) acting on
mean-zero functions, with the Hermitian symmetry m(-n) = conj(m(n)) so that
real fields stay real.  This module evaluates the symbols, the associated
dispersion weights, and slowly-converging series representations used as
independent cross-checks of the closed forms.

Conventions: delta is the depth parameter, delta > 0 (math.inf and 0 are
admitted only where the limiting operator exists, see ``_LIMITS``).  n is a
nonzero integer mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "SymbolKind",
    "HILBERT",
    "GDELTA",
    "GDELTA_TILDE",
    "QDELTA",
    "QDELTA_TILDE",
    "TILBERT",
    "DX",
    "DX_INV",
    "PROJ_NONZERO",
    "proj_low",
    "proj_high",
    "coth",
    "gsym",
    "kappa",
    "ell",
    "hfrak",
    "qsym",
    "qtilde_sym",
    "symbol",
    "dispersion",
    "series_oracle",
]


@dataclass(frozen=True)
class SymbolKind:
    """Tag for a multiplier operator; projections carry their cutoff."""

    tag: str
    cutoff: int | None = None

    def __post_init__(self) -> None:
        if self.tag in ("proj_low", "proj_high"):
            if self.cutoff is None or self.cutoff < 1:
                raise ValueError(f"{self.tag} needs a cutoff >= 1")
        elif self.cutoff is not None:
            raise ValueError(f"{self.tag} takes no cutoff")


HILBERT = SymbolKind("hilbert")
GDELTA = SymbolKind("gdelta")
GDELTA_TILDE = SymbolKind("gdelta_tilde")
QDELTA = SymbolKind("qdelta")
QDELTA_TILDE = SymbolKind("qdelta_tilde")
TILBERT = SymbolKind("tilbert")
DX = SymbolKind("dx")
DX_INV = SymbolKind("dx_inv")
PROJ_NONZERO = SymbolKind("proj_nonzero")


def proj_low(cutoff: int) -> SymbolKind:
    return SymbolKind("proj_low", cutoff)


def proj_high(cutoff: int) -> SymbolKind:
    return SymbolKind("proj_high", cutoff)


# Laurent branch threshold: below this, expm1-based formulas lose digits to
# cancellation; the truncated Laurent series is exact to well below 1 ulp.
_SMALL = 1e-4
# Above this, coth(x) - sign(x) is below double precision resolution and
# expm1(2x) would overflow (exp overflows near 709).
_LARGE = 354.0


def coth(x: float) -> float:
    """Numerically stable hyperbolic cotangent."""
    if x == 0.0:
        raise ZeroDivisionError("coth(0)")
    ax = abs(x)
    if ax < _SMALL:
        return 1.0 / x + x / 3.0 - x**3 / 45.0 + 2.0 * x**5 / 945.0
    if ax > _LARGE:
        return math.copysign(1.0, x)
    return 1.0 + 2.0 / math.expm1(2.0 * x)


def _coth_minus_inv(x: float) -> float:
    """coth(x) - 1/x, accurate through the small-x cancellation."""
    ax = abs(x)
    if ax < _SMALL:
        return x / 3.0 - x**3 / 45.0 + 2.0 * x**5 / 945.0
    return coth(x) - 1.0 / x


def _check_mode(n: int) -> None:
    if not isinstance(n, (int,)) or isinstance(n, bool):
        raise TypeError(f"mode must be an integer, got {n!r}")
    if n == 0:
        raise ValueError("mode 0 is outside the mean-zero setting")


def _check_delta(delta: float, allow_inf: bool = False, allow_zero: bool = False) -> None:
    if delta is None:
        raise ValueError("delta is required for this symbol")
    if math.isinf(delta):
        if not allow_inf:
            raise ValueError("delta = inf not admissible for this symbol")
        return
    if delta == 0:
        if not allow_zero:
            raise ValueError("delta = 0 not admissible for this symbol")
        return
    if not (delta > 0):
        raise ValueError(f"delta must be positive, got {delta}")


def gsym(delta: float, n: int) -> complex:
    """Symbol of G_delta: -i (coth(delta n) - 1/(delta n)); Hilbert at inf."""
    _check_mode(n)
    _check_delta(delta, allow_inf=True)
    if math.isinf(delta):
        return complex(0.0, -math.copysign(1.0, n))
    return complex(0.0, -_coth_minus_inv(delta * n))


def kappa(delta: float, n: int) -> float:
    """Dispersion weight of G_delta dx: |n| coth(delta |n|) - 1/delta.

    Strictly positive, even in n, equal to |n| at delta = inf.  The small
    delta*|n| branch evaluates the subtracted Laurent series directly, which
    is where the naive formula cancels catastrophically.
    """
    _check_mode(n)
    _check_delta(delta, allow_inf=True)
    a = abs(n)
    if math.isinf(delta):
        return float(a)
    x = delta * a
    if x < _SMALL:
        return a * x * (1.0 / 3.0 - x * x / 45.0 + 2.0 * x**4 / 945.0)
    return a * coth(x) - 1.0 / delta


def ell(delta: float, n: int) -> float:
    """Dispersion weight of the depth-scaled operator: kappa/delta; n^2/3 at 0."""
    _check_mode(n)
    _check_delta(delta, allow_zero=True)
    if delta == 0:
        return n * n / 3.0
    return kappa(delta, n) / delta


def hfrak(delta: float, n: int) -> float:
    """The shallow-water defect 1 - 3 L_delta(n)/n^2, in (0, 1].

    Tends to 0 as delta -> 0 (fixed n) and to 1 as |n| -> inf (fixed delta).
    """
    _check_mode(n)
    _check_delta(delta, allow_zero=True)
    if delta == 0:
        return 0.0
    x = delta * abs(n)
    if x < 0.05:
        # 1 - 3(coth x - 1/x)/x expanded; next term is O(x^8/4.7e5)
        return x * x / 15.0 - 2.0 * x**4 / 315.0 + x**6 / 1575.0
    return 1.0 - 3.0 * ell(delta, n) / (n * n)


def qsym(delta: float, n: int) -> float:
    """Symbol of Q_delta = (G_delta - H) dx: 2|n|/(e^{2 delta |n|} - 1) - 1/delta.

    Real, even, negative, bounded by 1/delta in absolute value; 0 at inf.
    """
    _check_mode(n)
    _check_delta(delta, allow_inf=True)
    if math.isinf(delta):
        return 0.0
    x = delta * abs(n)
    if x < _SMALL:
        # (2x/expm1(2x) - 1)/delta, series: -x + x^2/3 - x^4/45 + ...
        return (-x + x * x / 3.0 - x**4 / 45.0) / delta
    if x > _LARGE:
        return -1.0 / delta
    return 2.0 * abs(n) / math.expm1(2.0 * x) - 1.0 / delta


def qtilde_sym(delta: float, n: int) -> complex:
    """Symbol of Q~_delta = G~_delta + (1/3) dx: i n hfrak/3, purely imaginary."""
    _check_mode(n)
    _check_delta(delta, allow_zero=True)
    return complex(0.0, n * hfrak(delta, n) / 3.0)


def symbol(kind: SymbolKind, delta: float | None, n: int) -> complex:
    """Evaluate the multiplier of ``kind`` at mode n (depth delta if needed)."""
    _check_mode(n)
    tag = kind.tag
    if tag == "hilbert":
        return complex(0.0, -math.copysign(1.0, n))
    if tag == "dx":
        return complex(0.0, float(n))
    if tag == "dx_inv":
        return complex(0.0, -1.0 / n)
    if tag == "proj_nonzero":
        return complex(1.0, 0.0)
    if tag == "proj_low":
        return complex(1.0 if abs(n) <= kind.cutoff else 0.0, 0.0)
    if tag == "proj_high":
        return complex(1.0 if abs(n) > kind.cutoff else 0.0, 0.0)
    if tag == "gdelta":
        return gsym(delta, n)
    if tag == "gdelta_tilde":
        _check_delta(delta, allow_zero=True)
        if delta == 0:
            return complex(0.0, -n / 3.0)
        return gsym(delta, n) / delta
    if tag == "qdelta":
        return complex(qsym(delta, n), 0.0)
    if tag == "qdelta_tilde":
        return qtilde_sym(delta, n)
    if tag == "tilbert":
        _check_delta(delta)
        return complex(0.0, -coth(delta * n))
    raise ValueError(f"unknown symbol kind {tag!r}")


def dispersion(kind: SymbolKind, delta: float | None, n: int) -> float:
    """Strictly positive dispersion weight: kappa for gdelta, ell for gdelta_tilde."""
    if kind.tag == "gdelta":
        return kappa(delta, n)
    if kind.tag == "gdelta_tilde":
        return ell(delta, n)
    raise ValueError(f"no dispersion weight for symbol kind {kind.tag!r}")


# --- series representations -------------------------------------------------
#
# Slowly converging partial-fraction series; used as oracles that never
# touch coth.  Each partial sum is completed by the exact integral of the
# summand over (terms + 1/2, inf) (midpoint rule), whose error is two orders
# beyond the truncation it replaces; a plain partial sum is available with
# tail=False.


def _series_ell(delta: float, n: int, terms: int, tail: bool) -> float:
    n2 = float(n * n)
    a2 = (delta * n) ** 2
    total = 0.0
    for k in range(terms, 0, -1):  # ascending magnitude: sum small terms first
        total += 2.0 * n2 / (k * k * math.pi * math.pi + a2)
    if tail:
        # int_K^inf 2 n^2 / (pi^2 k^2 + a^2) dk = (2 n^2/(pi a)) (pi/2 - atan(pi K / a))
        K = terms + 0.5
        a = abs(delta * n)
        total += (2.0 * n2 / (math.pi * a)) * (math.pi / 2.0 - math.atan(math.pi * K / a))
    return total


def _series_g(delta: float, n: int, terms: int, tail: bool) -> complex:
    dn = delta * n
    total = 0.0
    for k in range(terms, 0, -1):
        total += 2.0 * dn / (k * k * math.pi * math.pi + dn * dn)
    if tail:
        K = terms + 0.5
        a = abs(dn)
        t = (2.0 / math.pi) * (math.pi / 2.0 - math.atan(math.pi * K / a))
        total += math.copysign(t, dn)
    return complex(0.0, -total)


def _series_hfrak(delta: float, n: int, terms: int, tail: bool) -> float:
    n2 = float(n * n)
    a2 = (delta * n) ** 2
    total = 0.0
    for k in range(terms, 0, -1):
        kp = k * k * math.pi * math.pi
        total += 6.0 * delta * delta * n2 / (kp * (kp + a2))
    if tail:
        # summand ~ 6 d^2 n^2 / (pi^4 k^4) for large k; integrate that envelope
        K = terms + 0.5
        total += 6.0 * delta * delta * n2 / (3.0 * math.pi**4 * K**3)
    return total


def series_oracle(kind: str, delta: float, n: int, terms: int = 100_000, tail: bool = True) -> complex:
    """Partial-fraction series value for 'gdelta', 'ell' or 'hfrak'.

    Independent of the closed forms above (no coth evaluation).  With
    tail=True (default) the exact midpoint-rule tail integral is added so the
    result is limited by O(terms^-3) instead of O(terms^-1).
    """
    _check_mode(n)
    _check_delta(delta)
    if terms < 1:
        raise ValueError("terms must be >= 1")
    if kind == "ell":
        return complex(_series_ell(delta, n, terms, tail), 0.0)
    if kind == "gdelta":
        return _series_g(delta, n, terms, tail)
    if kind == "hfrak":
        return complex(_series_hfrak(delta, n, terms, tail), 0.0)
    raise ValueError(f"no series oracle for {kind!r}")

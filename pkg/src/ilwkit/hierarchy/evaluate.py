"""Numerical evaluation of symbolic densities on spectral fields.

A density is evaluated as an integral over the circle: each monomial body
is realized by applying Fourier multipliers and alias-free products to the
given field, the top-level product is integrated exactly, and the results
are combined with the rational coefficients, the powers of i, and the
powers of the depth parameter.
"""

from __future__ import annotations

import math

from .. import spectral, symbols
from .expr import Density, contains_op

__all__ = ["evaluate", "evaluate_complex"]

_KIND = {
    "dx": symbols.DX,
    "h": symbols.HILBERT,
    "g": symbols.GDELTA,
    "gt": symbols.GDELTA_TILDE,
    "q": symbols.QDELTA,
    "qt": symbols.QDELTA_TILDE,
}


def _flat_children(e: tuple) -> tuple:
    out = []
    for c in e[1]:
        if c[0] == "pr":
            out.extend(_flat_children(c))
        else:
            out.append(c)
    return tuple(out)


def _delta_power(delta: float, dpow: int) -> float:
    if dpow == 0:
        return 1.0
    if math.isinf(delta):
        if dpow < 0:
            return 0.0
        raise ValueError("positive depth power at infinite depth")
    if delta == 0:
        if dpow > 0:
            return 0.0
        raise ValueError("negative depth power at zero depth")
    return float(delta) ** dpow


def evaluate_complex(
    d: Density,
    field: spectral.SpectralField,
    delta: float,
    cutoff: int | None = None,
) -> complex:
    """Integrate the density applied to the field; exact in the mode algebra."""
    has_pn = any(contains_op(m.body, "pn") for m in d.monos)
    if has_pn:
        if cutoff is None:
            raise ValueError("density carries a projection marker; cutoff required")
        if field.cutoff > cutoff:
            raise ValueError(
                f"field cutoff {field.cutoff} exceeds projection cutoff {cutoff}"
            )
    memo: dict = {}

    def body_field(e: tuple) -> spectral.SpectralField:
        got = memo.get(e)
        if got is not None:
            return got
        if e[0] == "u":
            val = field
        elif e[0] == "ap":
            child = body_field(e[2])
            if e[1] == "pn":
                val = spectral.apply_multiplier(child, symbols.proj_high(cutoff))
            else:
                val = spectral.apply_multiplier(child, _KIND[e[1]], delta)
        else:
            # bare nested products flatten before multiplying, and the
            # accumulated means are tracked inside product_field; only the
            # final mean is dropped (exact under every 0-annihilating symbol,
            # and the convention cancels across each mean-zero aggregate)
            flat = _flat_children(e)
            val = spectral.product_field(*[body_field(c) for c in flat])
        memo[e] = val
        return val

    total = 0.0 + 0.0j
    for m in d.monos:
        dp = _delta_power(delta, m.dpow)
        if dp == 0.0:
            continue
        if m.body[0] == "pr":
            value = spectral.integral(*[body_field(c) for c in _flat_children(m.body)])
        else:
            value = 0.0  # mean-zero integrand
        total += float(m.coeff) * (1j if m.ipow else 1.0) * dp * value
    return total


def evaluate(
    d: Density,
    field: spectral.SpectralField,
    delta: float,
    cutoff: int | None = None,
) -> float:
    """Real-valued evaluation; rejects a significant imaginary residue."""
    z = evaluate_complex(d, field, delta, cutoff)
    if abs(z.imag) > 1e-10 * max(1.0, abs(z)):
        raise AssertionError(f"imaginary residue {z.imag} in density evaluation")
    return z.real

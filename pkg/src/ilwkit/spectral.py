"""Mean-zero spectral fields on the 2pi-periodic torus.

A field is stored through its positive-mode coefficients only; the negative
modes are implied by the Hermitian symmetry u^(-n) = conj(u^(n)) and the zero
mode is identically absent.  The normalization is

    u(x) = (1/sqrt(2pi)) sum_n u^(n) e^{inx},

so that ||u||_{L^2}^2 = sum_n |u^(n)|^2 and int_T u v dx = sum_n u^(n) v^(-n).
Products are computed alias-free on a padded grid and are exact up to
rounding; the zero mode of a product is never stored (see ``integral`` for
why that loses nothing).
"""

from __future__ import annotations

import json
import math
from typing import Iterable, Mapping

import numpy as np
from scipy.fft import next_fast_len

from . import symbols as sym

__all__ = ["SpectralField", "synthesize", "multiply", "apply_multiplier", "integral"]

_SQRT2PI = math.sqrt(2.0 * math.pi)


class SpectralField:
    """Immutable mean-zero field; ``c[n]`` for 1 <= n <= cutoff."""

    __slots__ = ("_c",)

    def __init__(self, coeffs: np.ndarray):
        # internal layout: complex array of length cutoff+1, entry 0 unused
        c = np.asarray(coeffs, dtype=np.complex128).copy()
        if c.ndim != 1 or len(c) < 2:
            raise ValueError("need at least one positive mode")
        c[0] = 0.0
        c.flags.writeable = False
        object.__setattr__(self, "_c", c)

    def __setattr__(self, *a):  # pragma: no cover
        raise AttributeError("SpectralField is immutable")

    @property
    def cutoff(self) -> int:
        return len(self._c) - 1

    @property
    def positive(self) -> np.ndarray:
        """Read-only view of coefficients for modes 1..cutoff."""
        return self._c[1:]

    def coeff(self, n: int) -> complex:
        if n == 0:
            return 0.0 + 0.0j
        if abs(n) > self.cutoff:
            return 0.0 + 0.0j
        return complex(self._c[n]) if n > 0 else complex(np.conj(self._c[-n]))

    def trimmed(self, cutoff: int | None = None) -> "SpectralField":
        """Copy restricted to modes <= cutoff (default: drop trailing zeros)."""
        if cutoff is None:
            nz = np.nonzero(self._c)[0]
            cutoff = int(nz[-1]) if len(nz) else 1
        cutoff = max(1, min(cutoff, self.cutoff))
        return SpectralField(self._c[: cutoff + 1])

    def padded(self, cutoff: int) -> "SpectralField":
        if cutoff <= self.cutoff:
            return self
        c = np.zeros(cutoff + 1, dtype=np.complex128)
        c[: self.cutoff + 1] = self._c
        return SpectralField(c)

    # --- norms ---------------------------------------------------------

    def l2_norm(self) -> float:
        return math.sqrt(2.0 * float(np.sum(np.abs(self._c[1:]) ** 2)))

    def sobolev_norm(self, s: float, homogeneous: bool = True) -> float:
        n = np.arange(1, self.cutoff + 1, dtype=np.float64)
        w = n ** (2.0 * s) if homogeneous else (1.0 + n * n) ** s
        return math.sqrt(2.0 * float(np.sum(w * np.abs(self._c[1:]) ** 2)))

    # --- physical side -------------------------------------------------

    def grid_values(self, points: int | None = None) -> np.ndarray:
        """Real samples on the uniform grid x_j = 2 pi j / points."""
        m = points if points is not None else next_fast_len(2 * self.cutoff + 1)
        if m < 2 * self.cutoff + 1:
            raise ValueError("grid too coarse for this cutoff")
        full = np.zeros(m, dtype=np.complex128)
        full[1 : self.cutoff + 1] = self._c[1:]
        full[m - self.cutoff :] = np.conj(self._c[1:][::-1])
        return np.real(np.fft.ifft(full)) * m / _SQRT2PI

    # --- serialization -------------------------------------------------

    def to_json(self) -> str:
        n = [int(i) for i in range(1, self.cutoff + 1)]
        return json.dumps(
            {
                "n": n,
                "re": [float(x) for x in np.real(self._c[1:])],
                "im": [float(x) for x in np.imag(self._c[1:])],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "SpectralField":
        d = json.loads(text)
        pairs = {int(n): complex(r, i) for n, r, i in zip(d["n"], d["re"], d["im"])}
        return synthesize(pairs)

    def __repr__(self) -> str:  # pragma: no cover
        return f"SpectralField(cutoff={self.cutoff})"


def synthesize(coeffs: Mapping[int, complex]) -> SpectralField:
    """Build a field from {mode: coefficient}; modes must be >= 1."""
    if not coeffs:
        raise ValueError("empty coefficient set")
    for n in coeffs:
        if not isinstance(n, int) or n < 1:
            raise ValueError(f"modes must be positive integers, got {n!r}")
    cutoff = max(coeffs)
    c = np.zeros(cutoff + 1, dtype=np.complex128)
    for n, v in coeffs.items():
        c[n] = v
    return SpectralField(c)


def from_grid(values: np.ndarray, cutoff: int) -> SpectralField:
    """Positive modes of a real sample vector (inverse of grid_values)."""
    v = np.asarray(values, dtype=np.float64)
    m = len(v)
    if m < 2 * cutoff + 1:
        raise ValueError("grid too coarse for requested cutoff")
    spec = np.fft.fft(v) * _SQRT2PI / m
    c = np.zeros(cutoff + 1, dtype=np.complex128)
    c[1:] = spec[1 : cutoff + 1]
    return SpectralField(c)


def multiply(f: SpectralField, g: SpectralField) -> SpectralField:
    """Alias-free pointwise product; result cutoff = f.cutoff + g.cutoff.

    The zero mode of the product is dropped (mean-zero invariant); the final
    integral of a product chain recovers it through ``integral``.
    """
    nf, ng = f.cutoff, g.cutoff
    nout = nf + ng
    m = next_fast_len(2 * nout + 1)
    a = f.grid_values(m)
    b = g.grid_values(m)
    spec = np.fft.fft(a * b) * _SQRT2PI / m
    c = np.zeros(nout + 1, dtype=np.complex128)
    c[1:] = spec[1 : nout + 1]
    return SpectralField(c)


def product_mean(f: SpectralField, g: SpectralField) -> complex:
    """Zero-mode coefficient (fg)^(0) = (1/sqrt(2pi)) sum f^(n) g^(-n)."""
    m = min(f.cutoff, g.cutoff)
    fa = f._c[1 : m + 1]
    ga = g._c[1 : m + 1]
    s = np.sum(fa * np.conj(ga))
    return complex(s + np.conj(s)) / _SQRT2PI


def _accumulate_product(fields) -> tuple[complex, SpectralField]:
    """Running product of mean-zero factors as (average value, fluctuation).

    Intermediate products acquire means; dropping them silently would lose
    the strata where a partial mode sum returns to zero, so the mean rides
    along as a scalar: (m + A) * f = mean(A f) + (m f + [A f - mean]).
    """
    m = 0.0 + 0.0j
    acc = fields[0]
    for f in fields[1:]:
        new_m = product_mean(acc, f) / _SQRT2PI
        fluct = multiply(acc, f)
        if m != 0:
            c = np.array(fluct._c)
            c[1 : f.cutoff + 1] += m * f._c[1:]
            fluct = SpectralField(c)
        m, acc = new_m, fluct
    return m, acc


def product_field(*fields: SpectralField) -> SpectralField:
    """Mean-zero part of the exact pointwise product of mean-zero fields."""
    if not fields:
        raise ValueError("product of nothing")
    if len(fields) == 1:
        return fields[0]
    return _accumulate_product(fields)[1]


def integral(*fields: SpectralField) -> float:
    """Exact torus integral of a pointwise product of mean-zero fields."""
    if not fields:
        raise ValueError("integral of nothing")
    if len(fields) == 1:
        return 0.0
    m, _ = _accumulate_product(fields)
    return float(np.real(m)) * 2.0 * math.pi


def apply_multiplier(
    f: SpectralField, kind: sym.SymbolKind, delta: float | None = None
) -> SpectralField:
    """Apply the Fourier multiplier ``kind`` mode by mode."""
    c = np.array(f._c, dtype=np.complex128)
    tag = kind.tag
    n = np.arange(1, f.cutoff + 1, dtype=np.float64)
    if tag == "dx":
        c[1:] *= 1j * n
    elif tag == "dx_inv":
        c[1:] *= -1j / n
    elif tag == "hilbert":
        c[1:] *= -1j
    elif tag == "proj_nonzero":
        pass
    elif tag == "proj_low":
        c[kind.cutoff + 1 :] = 0.0
    elif tag == "proj_high":
        c[1 : kind.cutoff + 1] = 0.0
    else:
        vals = np.array([sym.symbol(kind, delta, k) for k in range(1, f.cutoff + 1)])
        c[1:] *= vals
    return SpectralField(c)

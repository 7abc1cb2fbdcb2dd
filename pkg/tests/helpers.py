"""Shared fixtures-by-import for the symbolic test modules.

The integrated canonical forms of the recursion outputs are expensive at
high order, and several test modules (plus the acceptance battery) need the
same ones; the lru_cache makes each order a one-time cost per session.
"""

from functools import lru_cache

import numpy as np

from ilwkit import spectral
from ilwkit.hierarchy import canonicalize_integrated, re_part
from ilwkit.hierarchy.energies import energy_deep, energy_shallow
from ilwkit.hierarchy.recursions import chi_deep, h_kdv, h_tilde


@lru_cache(maxsize=None)
def integrated_chi(n: int, variant: str = "g"):
    return re_part(canonicalize_integrated(chi_deep(n, variant)))


@lru_cache(maxsize=None)
def integrated_h_tilde(n: int):
    return re_part(canonicalize_integrated(h_tilde(n)))


@lru_cache(maxsize=None)
def integrated_h_kdv(n: int):
    return re_part(canonicalize_integrated(h_kdv(n)))


@lru_cache(maxsize=None)
def pstar_energy(kind: str, k: int):
    from ilwkit.hierarchy.pstar import p_star

    base = energy_deep(k) if kind == "deep" else energy_shallow(k)
    return p_star(base)


def random_field(cutoff: int, seed: int, decay: float = 0.35) -> spectral.SpectralField:
    rng = np.random.default_rng(seed)
    mag = np.exp(-decay * np.arange(1, cutoff + 1))
    pos = (rng.normal(size=cutoff) + 1j * rng.normal(size=cutoff)) * mag
    return spectral.SpectralField(np.concatenate([[0.0], pos]))

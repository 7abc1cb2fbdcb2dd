"""Symbolic conservation-law hierarchy: expressions, canonical forms,
recursions, energies, and their numerical evaluation."""

from .expr import Density, Mono, mono, deep_rank, shallow_rank
from .canon import canonicalize, canonicalize_integrated, re_part
from .evaluate import evaluate, evaluate_complex

__all__ = [
    "Density",
    "Mono",
    "mono",
    "deep_rank",
    "shallow_rank",
    "canonicalize",
    "canonicalize_integrated",
    "re_part",
    "evaluate",
    "evaluate_complex",
]

"""Symbolic, spectral, and Monte Carlo toolkit for the ILW conservation
hierarchy, its deep- and shallow-water limits, and the associated Gaussian
and Gibbs ensembles."""

from . import dynamics, measures, rng, spectral, symbols
from .dynamics import EvolutionSpec, IntegratorParams, Trajectory, evolve
from .hierarchy import (
    Density,
    canonicalize,
    canonicalize_integrated,
    evaluate,
    re_part,
)
from .hierarchy.energies import (
    energy_bo,
    energy_deep,
    energy_kdv,
    energy_shallow,
    interaction_part,
)
from .measures import (
    GaussianSpec,
    expected_sobolev_sq,
    gibbs_density,
    invariance_battery,
    kakutani_partial_sums,
    kl_gaussian,
    sample,
)
from .spectral import SpectralField, integral, product_field, synthesize

__version__ = "0.1.0"

__all__ = [
    "Density",
    "EvolutionSpec",
    "GaussianSpec",
    "IntegratorParams",
    "SpectralField",
    "Trajectory",
    "canonicalize",
    "canonicalize_integrated",
    "dynamics",
    "energy_bo",
    "energy_deep",
    "energy_kdv",
    "energy_shallow",
    "evaluate",
    "evolve",
    "expected_sobolev_sq",
    "gibbs_density",
    "integral",
    "interaction_part",
    "invariance_battery",
    "kakutani_partial_sums",
    "kl_gaussian",
    "measures",
    "product_field",
    "re_part",
    "rng",
    "sample",
    "spectral",
    "symbols",
    "synthesize",
]

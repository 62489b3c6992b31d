"""Spectral and quadrature toolkit for SQG with anisotropic fractional dissipation."""
from .errors import AnisqgError
from .theory import (Branch, DecayQuery, DissipationParams, RegionVerdict, critical_exponent,
                     critical_p, decay_exponent, difference_exponent, difference_exponent_l2only,
                     regularity_region, small_data_sobolev_index)
from .spectral import GridSpec, MultiplierSymbol, SpectralField
from .analysis import DecaySeries, RateFit, RateVerdict, compare_to_theory, fit_decay_rate

__version__ = "0.1.0"

__all__ = [
    "AnisqgError",
    "Branch",
    "DecayQuery",
    "DissipationParams",
    "RegionVerdict",
    "critical_exponent",
    "critical_p",
    "decay_exponent",
    "difference_exponent",
    "difference_exponent_l2only",
    "regularity_region",
    "small_data_sobolev_index",
    "GridSpec",
    "MultiplierSymbol",
    "SpectralField",
    "DecaySeries",
    "RateFit",
    "RateVerdict",
    "compare_to_theory",
    "fit_decay_rate",
]

"""Closed-form decay exponents and the global-regularity region.

All exponents are for the unsquared L2 (or homogeneous Sobolev) norm:
a value ``E`` means ``||.|| <= C (1+t)^(-E)``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import InvalidParameters, PreconditionViolated

__all__ = [
    "DissipationParams",
    "DecayQuery",
    "Branch",
    "RegionVerdict",
    "regularity_region",
    "region_threshold",
    "decay_exponent",
    "critical_p",
    "difference_amplitude",
    "difference_exponent",
    "difference_exponent_l2only",
    "critical_exponent",
    "small_data_sobolev_index",
]

# relative tolerance for detecting p == p*
P_STAR_RTOL = 1e-12


@dataclass(frozen=True)
class DissipationParams:
    """Horizontal (alpha) and vertical (beta) dissipation powers."""

    alpha: float
    beta: float

    def __post_init__(self):
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v)):
                raise InvalidParameters(f"{name} must be a finite real, got {v!r}")
            if not 0.0 < v <= 1.0:
                raise InvalidParameters(f"{name} must lie in (0, 1], got {v}")

    def symbol(self, xi1, xi2):
        """Evaluate |xi1|^(2 alpha) + |xi2|^(2 beta); works on scalars and arrays."""
        import numpy as np

        return np.abs(xi1) ** (2 * self.alpha) + np.abs(xi2) ** (2 * self.beta)

    def swapped(self) -> "DissipationParams":
        return DissipationParams(self.beta, self.alpha)


@dataclass(frozen=True)
class DecayQuery:
    s: float = 0.0
    p: float = 2.0

    def __post_init__(self):
        if not self.s >= 0.0:
            raise InvalidParameters(f"s must be >= 0, got {self.s}")
        if not 1.0 <= self.p <= 2.0:
            raise InvalidParameters(f"p must lie in [1, 2], got {self.p}")


class Branch(str, enum.Enum):
    LOW_ALPHA = "LOW_ALPHA"
    HIGH_ALPHA = "HIGH_ALPHA"
    COMPLEMENT = "COMPLEMENT"


@dataclass(frozen=True)
class RegionVerdict:
    admissible: bool
    branch: Branch


def region_threshold(alpha: float) -> float:
    """Lower bound on beta for large-data global regularity at this alpha."""
    if alpha <= 0.5:
        return 1.0 / (2.0 * alpha + 1.0)
    return (1.0 - alpha) / (2.0 * alpha)


def regularity_region(params: DissipationParams) -> RegionVerdict:
    """Classify (alpha, beta) against the strict large-data regularity condition.

    The condition is only stated for alpha, beta in the open interval (0, 1),
    so alpha == 1 or beta == 1 falls in the complement.  Boundary points are
    inadmissible.
    """
    a, b = params.alpha, params.beta
    if a >= 1.0 or b >= 1.0:
        return RegionVerdict(False, Branch.COMPLEMENT)
    if b > region_threshold(a):
        return RegionVerdict(True, Branch.LOW_ALPHA if a <= 0.5 else Branch.HIGH_ALPHA)
    return RegionVerdict(False, Branch.COMPLEMENT)


def decay_exponent(params: DissipationParams, query: DecayQuery) -> float:
    """Exponent of ||Lambda^s theta(t)||_{L2} for data in L^p (p=2: no extra assumption)."""
    a, b = params.alpha, params.beta
    s, p = query.s, query.p
    return ((a + b) * (2.0 - p) + 2.0 * min(a, b) * s * p) / (4.0 * a * b * p)


def critical_p(params: DissipationParams) -> float:
    """The Lebesgue exponent p* separating the three difference-rate cases."""
    a, b = params.alpha, params.beta
    return 2.0 * (a + b) / (2.0 * a * b + a + b)


def _min_shifted(a, b, p):
    return min(a + (p + 1.0) * b, (p + 1.0) * a + b)


def difference_amplitude(params: DissipationParams, p: float) -> float:
    a, b = params.alpha, params.beta
    return _min_shifted(a, b, p) + 2.0 * (a + b) - (a + b + 2.0 * a * b) * p


def difference_exponent(params: DissipationParams, p: float) -> float:
    """Exponent of ||theta - theta_linear||_{L2} for data in L2 and L^p, p in [1, 2)."""
    if not 1.0 <= p < 2.0:
        raise InvalidParameters(f"p must lie in [1, 2), got {p}")
    a, b = params.alpha, params.beta
    denom = 4.0 * a * b * p
    pstar = critical_p(params)
    amp = difference_amplitude(params, p)
    m3 = min(a + 3.0 * b, 3.0 * a + b)
    if math.isclose(p, pstar, rel_tol=P_STAR_RTOL, abs_tol=0.0):
        return _min_shifted(a, b, p) / denom
    if p < pstar:
        return min(m3 * p, amp) / denom
    return min(m3 * p + 2.0 * (a + b) * (2.0 - p) - 4.0 * a * b * p, amp) / denom


def difference_exponent_l2only(params: DissipationParams) -> float:
    """Exponent of ||theta - theta_linear||_{L2} for data only in L2."""
    a, b = params.alpha, params.beta
    m3 = min(a + 3.0 * b, 3.0 * a + b)
    if not m3 > 4.0 * a * b:
        raise PreconditionViolated(
            f"requires min(a+3b, 3a+b) > 4ab; got {m3} <= {4.0 * a * b}"
        )
    return (m3 - 4.0 * a * b) / (8.0 * a * b)


def critical_exponent(s: float, p: float) -> float:
    """Small-data rate for alpha = beta = 1/2 with L^p data."""
    if not 1.0 <= p <= 2.0:
        raise InvalidParameters(f"p must lie in [1, 2], got {p}")
    return (2.0 + (s - 1.0) * p) / p


def small_data_sobolev_index(params: DissipationParams) -> float:
    """Order of the homogeneous norm that must be small outside the admissible region."""
    a, b = params.alpha, params.beta
    return 2.0 - 4.0 * a * b / (a + b)

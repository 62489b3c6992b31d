"""Power-law rate estimation against the (1+t)^(-E) normal form."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientSamples, InvalidParameters, NonPositiveValue

__all__ = ["DecaySeries", "RateFit", "RateVerdict", "fit_decay_rate", "compare_to_theory",
           "MIN_FIT_SAMPLES"]

MIN_FIT_SAMPLES = 8


@dataclass(frozen=True)
class DecaySeries:
    times: np.ndarray
    values: np.ndarray
    label: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.shape != v.shape or t.ndim != 1:
            raise InvalidParameters("times and values must be 1-D arrays of equal length")
        if t.size and (np.any(t <= 0) or np.any(np.diff(t) <= 0)):
            raise InvalidParameters("times must be positive and strictly ascending")
        if np.any(v <= 0):
            raise NonPositiveValue("series values must be positive; use from_samples to truncate")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_samples(cls, times, values, label=None):
        """Build a series, cutting it at the first non-positive value."""
        t = np.asarray(times, dtype=float)
        v = np.asarray(values, dtype=float)
        bad = np.flatnonzero(~(v > 0))
        n = bad[0] if bad.size else v.size
        return cls(t[:n], v[:n], dict(label or {}))

    def __len__(self):
        return self.times.size


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    window: tuple
    residual_rms: float
    local_slopes: np.ndarray
    n_samples: int


@dataclass(frozen=True)
class RateVerdict:
    label: dict
    slope: float
    theory: float
    tol: float
    passed: bool
    window: tuple
    residual_rms: float
    rel_dev: float
    drift: float

    def to_json(self):
        return {
            "label": self.label,
            "slope": self.slope,
            "theory": self.theory,
            "tol": self.tol,
            "pass": self.passed,
            "window": list(self.window),
            "residual_rms": self.residual_rms,
        }


def fit_decay_rate(series: DecaySeries, window=None) -> RateFit:
    """Least-squares line through (log(1+t), log value) on the window [t_lo, t_hi]."""
    t, v = series.times, series.values
    if window is None:
        window = (t[0], t[-1]) if t.size else (0.0, 0.0)
    lo, hi = window
    sel = (t >= lo * (1 - 1e-12)) & (t <= hi * (1 + 1e-12))
    if np.count_nonzero(sel) < MIN_FIT_SAMPLES:
        raise InsufficientSamples(
            f"need >= {MIN_FIT_SAMPLES} samples in window {window}, got {np.count_nonzero(sel)}")
    x = np.log1p(t[sel])
    y = np.log(v[sel])
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + intercept)
    local = np.gradient(y, x)
    return RateFit(float(slope), float(intercept), (float(t[sel][0]), float(t[sel][-1])),
                   float(np.sqrt(np.mean(resid**2))), local, int(x.size))


def compare_to_theory(fit: RateFit, theory_exponent: float, rel_tol: float, label=None) -> RateVerdict:
    """PASS iff the fitted decay exponent and the local-slope spread are both within tolerance.

    The scale is ``max(theory, 0.1)`` so a zero exponent gets an absolute floor
    of ``0.1 * rel_tol``.
    """
    scale = max(theory_exponent, 0.1)
    dev = abs(-fit.slope - theory_exponent)
    drift = float(np.ptp(fit.local_slopes)) / scale if fit.local_slopes.size else 0.0
    ok = dev <= rel_tol * scale and drift <= 2 * rel_tol
    return RateVerdict(
        label=dict(label or {}),
        slope=fit.slope,
        theory=theory_exponent,
        tol=rel_tol,
        passed=bool(ok),
        window=fit.window,
        residual_rms=fit.residual_rms,
        rel_dev=dev / scale,
        drift=drift,
    )

"""Numerical certification of Fourier-side inequalities and splitting-set geometry.

Two kinds of checks live here.  Inequalities whose proofs are pure Hoelder or
pointwise symbol comparisons hold with constant exactly 1, so they are checked
against the hard threshold ``1 + 1e-10`` on every field.  Inequalities whose
constants are not known are only *measured*: an empirical sup of LHS/RHS over
seeded random fields, reported for regression tracking.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import integrate, special

from .errors import (DegenerateSystem, HypothesisViolated, InvalidParameters, ZeroField)
from .spectral import (GridSpec, MultiplierSymbol, SpectralField, anisotropic_norm,
                       apply_multiplier, lp_norm, mixed_norm, random_band_limited, resample)
from .theory import DissipationParams

__all__ = [
    "CONSTANT_ONE_THRESHOLD",
    "InterpolationTriple",
    "Weights",
    "interpolation_weights",
    "check_aniso_interpolation",
    "check_directional_interpolation",
    "check_symbol_inequalities",
    "InequalityId",
    "EMPIRICAL_IDS",
    "CONSTANT_ONE_IDS",
    "empirical_ratio_report",
    "constant_one_suite",
    "Moment",
    "splitting_moment",
    "splitting_moment_exponent",
    "splitting_moment_quadrature",
    "OdeComparison",
    "ode_comparison_bound",
    "ode_comparison_verify",
    "time_convolution_ratio",
]

CONSTANT_ONE_THRESHOLD = 1.0 + 1e-10


# -- anisotropic interpolation -------------------------------------------------

class Weights(NamedTuple):
    mu: float
    lam: float
    valid: bool


def interpolation_weights(delta, eps, gamma) -> Weights:
    """Solve delta = mu*eps + lam*gamma (componentwise) for the Hoelder weights.

    ``valid`` is False when mu < 0, lam < 0 or mu + lam > 1; the weights are
    still returned so callers can report them.
    """
    d1, d2 = map(float, delta)
    e1, e2 = map(float, eps)
    g1, g2 = map(float, gamma)
    det = e2 * g1 - e1 * g2
    # scale by the entry sizes: the cross products themselves can both be tiny
    if abs(det) <= 1e-14 * max(abs(e1), abs(e2)) * max(abs(g1), abs(g2)):
        raise DegenerateSystem(f"eps2*gamma1 - eps1*gamma2 vanishes for eps={eps}, gamma={gamma}")
    mu = (d2 * g1 - d1 * g2) / det
    lam = (e2 * d1 - e1 * d2) / det
    return Weights(mu, lam, bool(mu >= 0.0 and lam >= 0.0 and mu + lam <= 1.0))


@dataclass(frozen=True)
class InterpolationTriple:
    delta: tuple
    eps: tuple
    gamma: tuple

    def __post_init__(self):
        for name in ("delta", "eps", "gamma"):
            v = tuple(float(x) for x in getattr(self, name))
            if len(v) != 2 or any(x < 0 or not math.isfinite(x) for x in v):
                raise InvalidParameters(f"{name} must be two finite non-negative reals")
            object.__setattr__(self, name, v)
        if min(self.delta) <= 0.0:
            raise InvalidParameters("delta components must be positive")

    @property
    def weights(self) -> Weights:
        return interpolation_weights(self.delta, self.eps, self.gamma)

    @property
    def mu(self):
        return self.weights.mu

    @property
    def lam(self):
        return self.weights.lam

    def consistency_defect(self) -> float:
        """max_i |delta_i - (eps_i mu + gamma_i lam)|, zero up to rounding."""
        mu, lam, _ = self.weights
        return max(abs(d - (e * mu + g * lam)) for d, e, g in zip(self.delta, self.eps, self.gamma))


def _ratio(lhs, factors):
    """lhs / prod(norm**power), with 0**0 = 1 and 0/0 = 0."""
    rhs = 1.0
    for value, power in factors:
        if power != 0.0:
            rhs *= value**power
    if lhs == 0.0:
        return 0.0
    return lhs / rhs if rhs > 0.0 else math.inf


def _nonzero(f: SpectralField) -> float:
    n = mixed_norm(f, 0.0, 0.0)
    if n == 0.0:
        raise ZeroField("field is identically zero")
    return n


def check_aniso_interpolation(f: SpectralField, triple: InterpolationTriple) -> float:
    mu, lam, ok = triple.weights
    if not ok:
        raise HypothesisViolated(f"weights mu={mu}, lambda={lam} outside the admissible simplex")
    base = _nonzero(f)
    lhs = mixed_norm(f, *triple.delta)
    return _ratio(lhs, [(base, 1.0 - mu - lam),
                        (mixed_norm(f, *triple.eps), mu),
                        (mixed_norm(f, *triple.gamma), lam)])


def check_directional_interpolation(f: SpectralField, axis: int, gamma: float, varrho: float) -> float:
    if not 0.0 <= gamma <= varrho or varrho <= 0.0:
        raise HypothesisViolated(f"need 0 <= gamma <= varrho, varrho > 0; got {gamma}, {varrho}")
    base = _nonzero(f)
    theta = gamma / varrho
    return _ratio(anisotropic_norm(f, axis, gamma),
                  [(base, 1.0 - theta), (anisotropic_norm(f, axis, varrho), theta)])


def check_symbol_inequalities(grid: GridSpec, ls: Sequence[float] = tuple(np.linspace(0, 1, 11)),
                              ks: Sequence[float] = (1.0, 1.5, 2.0)) -> dict:
    """Worst pointwise ratios of the two symbol comparisons over every nonzero grid mode.

    first:  |xi_i|^(k+l) |xi_j|^(1-l) <= |xi_i|^k |xi|
    second: |xi_i|^(k-l) |xi_j|^l     <= |xi_i|^(k-1) |xi|
    """
    nz = grid.xi_abs > 0
    r = grid.xi_abs[nz]
    worst = {"first": 0.0, "second": 0.0}
    for l in ls:
        if not 0.0 <= l <= 1.0:
            raise InvalidParameters(f"l must lie in [0, 1], got {l}")
        for k in ks:
            if k < 1.0:
                raise InvalidParameters(f"k must be >= 1, got {k}")
            for xi, xj in ((grid.xi1[nz], grid.xi2[nz]), (grid.xi2[nz], grid.xi1[nz])):
                ai, aj = np.abs(xi), np.abs(xj)
                pairs = {
                    "first": (ai ** (k + l) * aj ** (1 - l), ai**k * r),
                    "second": (ai ** (k - l) * aj**l, ai ** (k - 1) * r),
                }
                for key, (lhs, rhs) in pairs.items():
                    if np.any((rhs == 0) & (lhs > 0)):
                        worst[key] = math.inf
                        continue
                    pos = rhs > 0
                    if pos.any():
                        worst[key] = max(worst[key], float(np.max(lhs[pos] / rhs[pos])))
    return worst


# -- seeded sweeps ----------------------------------------------------------------

class InequalityId(str, enum.Enum):
    EMBEDDING_SPT402 = "EMBEDDING_SPT402"
    MIXED_LP_FGGH = "MIXED_LP_FGGH"
    LP_DIRECTIONAL_GH908 = "LP_DIRECTIONAL_GH908"
    ANISO_INTERPOLATION = "ANISO_INTERPOLATION"
    DIRECTIONAL_INTERPOLATION = "DIRECTIONAL_INTERPOLATION"
    SYMBOL_FACTS = "SYMBOL_FACTS"


EMPIRICAL_IDS = (InequalityId.EMBEDDING_SPT402, InequalityId.MIXED_LP_FGGH,
                 InequalityId.LP_DIRECTIONAL_GH908)
CONSTANT_ONE_IDS = (InequalityId.ANISO_INTERPOLATION, InequalityId.DIRECTIONAL_INTERPOLATION,
                    InequalityId.SYMBOL_FACTS)

# Fields for the empirical sweeps are drawn on this base grid and zero-padded
# to the requested resolution, so refining n changes only the quadrature.
BASE_N = 32


def _field_stream(seed: int, count: int, grid: GridSpec, base_n: int | None = BASE_N):
    root = np.random.SeedSequence(seed)
    for child in root.spawn(count):
        rng = np.random.default_rng(child)
        slope = rng.uniform(-3.0, 0.0)
        hi = rng.uniform(3.0, 10.0)
        field_seed = int(rng.integers(2**63 - 1))
        if base_n is None:
            yield random_band_limited(field_seed, grid, band=(1.0, hi), spectrum_slope=slope), rng
        else:
            base = GridSpec(base_n, base_n, grid.l1, grid.l2)
            f = random_band_limited(field_seed, base, band=(1.0, min(hi, base_n / 2 - 1)),
                                    spectrum_slope=slope)
            yield resample(f, grid), rng


def embedding_exponents(params: DissipationParams):
    a, b = params.alpha, params.beta
    if not a + b > 2 * a * b:
        raise HypothesisViolated(f"needs alpha + beta > 2 alpha beta; got {a}, {b}")
    return 2 * (a + b) / (a + b - 2 * a * b), b / (a + b), a / (a + b)


def mixed_lp_exponents(params: DissipationParams, p: float):
    if not 1.0 <= p < 2.0:
        raise HypothesisViolated(f"needs p in [1, 2), got {p}")
    a, b = params.alpha, params.beta
    h = 1.0 / p - 0.5
    d = (a + b) * h + a * b
    return a * b / d, b * h / d, a * h / d


def directional_lp_r(sigma, delta, p, q):
    if not (0.0 <= sigma < delta and 1.0 <= p < q):
        raise HypothesisViolated("needs 0 <= sigma < delta and 1 <= p < q")
    inv = (0.0 if math.isinf(q) else 1.0 / q) * (1 - sigma / delta) + sigma / delta / p
    r = 1.0 / inv
    if not p < r < q:
        raise HypothesisViolated(f"derived r={r} not strictly between p={p} and q={q}")
    return r


def _empirical_ratio(iid, f, params, extra):
    if iid is InequalityId.EMBEDDING_SPT402:
        r, e1, e2 = embedding_exponents(params)
        return _ratio(lp_norm(f, r), [(anisotropic_norm(f, 1, params.alpha), e1),
                                      (anisotropic_norm(f, 2, params.beta), e2)])
    if iid is InequalityId.MIXED_LP_FGGH:
        e0, e1, e2 = mixed_lp_exponents(params, extra["p"])
        return _ratio(mixed_norm(f, 0, 0), [(lp_norm(f, extra["p"]), e0),
                                            (anisotropic_norm(f, 1, params.alpha), e1),
                                            (anisotropic_norm(f, 2, params.beta), e2)])
    sigma, delta, p, q, axis = (extra[k] for k in ("sigma", "delta", "p", "q", "axis"))
    r = directional_lp_r(sigma, delta, p, q)
    lhs = lp_norm(apply_multiplier(f, MultiplierSymbol.axis_power(axis, sigma)), r)
    top = lp_norm(apply_multiplier(f, MultiplierSymbol.axis_power(axis, delta)), p)
    return _ratio(lhs, [(lp_norm(f, q), 1 - sigma / delta), (top, sigma / delta)])


_EMPIRICAL_DEFAULTS = {
    InequalityId.EMBEDDING_SPT402: {},
    InequalityId.MIXED_LP_FGGH: {"p": 1.0},
    InequalityId.LP_DIRECTIONAL_GH908: {"sigma": 0.5, "delta": 1.0, "p": 2.0, "q": math.inf, "axis": 1},
}


def empirical_ratio_report(inequality_id, samples: int = 200, params: DissipationParams | None = None,
                           seed: int = 0, n: int = 128, bins: int = 10, **extra) -> dict:
    """Sup and histogram of LHS/RHS over seeded random fields; no threshold is applied."""
    iid = InequalityId(inequality_id)
    if iid not in EMPIRICAL_IDS:
        raise InvalidParameters(f"{iid.value} is a constant-1 check; use constant_one_suite")
    if samples < 1:
        raise InvalidParameters("samples must be >= 1")
    params = params or DissipationParams(0.25, 0.25)
    opts = {**_EMPIRICAL_DEFAULTS[iid], **extra}
    grid = GridSpec(n, n)
    ratios = np.array([_empirical_ratio(iid, f, params, opts)
                       for f, _ in _field_stream(seed, samples, grid)])
    counts, edges = np.histogram(ratios[np.isfinite(ratios)], bins=bins)
    sup = float(ratios.max())
    return {
        "id": iid.value,
        "params": {"alpha": params.alpha, "beta": params.beta,
                   **{k: (str(v) if isinstance(v, float) and math.isinf(v) else v) for k, v in opts.items()}},
        "samples": samples,
        "n": n,
        "sup_ratio": sup,
        "histogram": {"counts": counts.tolist(), "edges": edges.tolist()},
        "threshold": None,
        "pass": bool(math.isfinite(sup)),
        "seed": seed,
    }


def _random_triple(rng) -> InterpolationTriple:
    while True:
        eps = rng.uniform(0.0, 2.0, 2) * (rng.random(2) > 0.2)
        gamma = rng.uniform(0.0, 2.0, 2) * (rng.random(2) > 0.2)
        w = rng.dirichlet(np.ones(3))
        mu, lam = w[0], w[1]
        if min(mu, lam) < 1e-3 or abs(eps[1] * gamma[0] - eps[0] * gamma[1]) < 1e-3:
            continue
        delta = eps * mu + gamma * lam
        if delta.min() > 1e-3:
            return InterpolationTriple(tuple(delta), tuple(eps), tuple(gamma))


def constant_one_suite(samples: int = 1000, n: int = 128, seed: int = 0,
                       ids: Sequence = CONSTANT_ONE_IDS) -> list:
    """Hard-threshold sweeps of the constant-1 inequalities; one report per id."""
    ids = [InequalityId(i) for i in ids]
    grid = GridSpec(n, n)
    reports = []
    field_checks = [i for i in ids if i is not InequalityId.SYMBOL_FACTS]
    sups = {i: 0.0 for i in field_checks}
    violations = {i: 0 for i in field_checks}
    if field_checks:
        for f, rng in _field_stream(seed, samples, grid, base_n=None):
            for iid in field_checks:
                if iid is InequalityId.ANISO_INTERPOLATION:
                    r = check_aniso_interpolation(f, _random_triple(rng))
                else:
                    g = rng.uniform(0.0, 2.0)
                    r = check_directional_interpolation(f, int(rng.integers(1, 3)), g,
                                                        rng.uniform(max(g, 1e-3), 3.0))
                sups[iid] = max(sups[iid], r)
                violations[iid] += int(r > CONSTANT_ONE_THRESHOLD)
    for iid in ids:
        if iid is InequalityId.SYMBOL_FACTS:
            worst = check_symbol_inequalities(grid)
            sup, count, nsamp = max(worst.values()), sum(v > CONSTANT_ONE_THRESHOLD for v in worst.values()), grid.n1 * grid.n2
        else:
            sup, count, nsamp = sups[iid], violations[iid], samples
        reports.append({
            "id": iid.value,
            "params": {"n": n},
            "samples": nsamp,
            "sup_ratio": float(sup),
            "violations": int(count),
            "threshold": CONSTANT_ONE_THRESHOLD,
            "pass": bool(count == 0 and sup <= CONSTANT_ONE_THRESHOLD),
            "seed": seed,
        })
    return reports


# -- splitting sets E(rho) = {|xi1|^(2a) + |xi2|^(2b) <= rho} ---------------------

class Moment(str, enum.Enum):
    AREA = "AREA"
    XI1_SQ = "XI1_SQ"
    XI2_SQ = "XI2_SQ"
    ISO_BOUND = "ISO_BOUND"


def splitting_moment_exponent(params: DissipationParams, moment) -> float:
    """Power of rho in the closed form (not defined for ISO_BOUND)."""
    a, b = params.alpha, params.beta
    m = Moment(moment)
    if m is Moment.AREA:
        return (a + b) / (2 * a * b)
    if m is Moment.XI1_SQ:
        return (a + 3 * b) / (2 * a * b)
    if m is Moment.XI2_SQ:
        return (3 * a + b) / (2 * a * b)
    raise InvalidParameters("ISO_BOUND is a sum of two powers")


def _xi1_sq(a, b, rho):
    # Substituting u = xi1^(2a), v = xi2^(2b) reduces the quadrant integral to a Beta function.
    return 2.0 / (3.0 * b) * special.beta(1.0 / (2 * b), 3.0 / (2 * a) + 1.0) * rho ** ((a + 3 * b) / (2 * a * b))


def splitting_moment(params: DissipationParams, rho: float, moment, s: float = 0.0) -> float:
    """Closed-form moments of E(rho).

    AREA is |E|, XI1_SQ / XI2_SQ are the integrals of xi1^2 / xi2^2 over E.
    ISO_BOUND is an upper bound for the integral of |xi|^(2s) over E:
    ``max(1, 2^(s-1)) * (rho^(s/a) + rho^(s/b)) * |E|``.  The factor covers
    s > 1, where |xi|^(2s) <= rho^(s/a) + rho^(s/b) no longer holds.
    """
    if not rho > 0:
        raise InvalidParameters(f"rho must be positive, got {rho}")
    a, b = params.alpha, params.beta
    m = Moment(moment)
    if m is Moment.XI1_SQ:
        return float(_xi1_sq(a, b, rho))
    if m is Moment.XI2_SQ:
        return float(_xi1_sq(b, a, rho))
    area = 2.0 / b * special.beta(1.0 / (2 * b), 1.0 / (2 * a) + 1.0) * rho ** ((a + b) / (2 * a * b))
    if m is Moment.AREA:
        return float(area)
    if s < 0:
        raise InvalidParameters("s must be >= 0")
    return float(max(1.0, 2.0 ** (s - 1.0)) * (rho ** (s / a) + rho ** (s / b)) * area)


def splitting_moment_quadrature(params: DissipationParams, rho: float, moment, s: float = 0.0,
                                rel_tol: float = 1e-11) -> tuple:
    """Direct nested quadrature over one quadrant of E(rho), times four.

    ISO_BOUND here means the exact integral of |xi|^(2s), i.e. the quantity the
    closed form bounds.  Returns (value, error estimate).
    """
    a, b = params.alpha, params.beta
    m = Moment(moment)
    weight = {
        Moment.AREA: lambda x, y: 1.0,
        Moment.XI1_SQ: lambda x, y: x * x,
        Moment.XI2_SQ: lambda x, y: y * y,
        Moment.ISO_BOUND: lambda x, y: (x * x + y * y) ** s,
    }[m]
    x_max = rho ** (1.0 / (2 * a))

    def y_top(x):
        return max(rho - x ** (2 * a), 0.0) ** (1.0 / (2 * b))

    err_total = 0.0

    def inner(x):
        nonlocal err_total
        v, e = integrate.quad(lambda y: weight(x, y), 0.0, y_top(x), epsabs=0.0, epsrel=rel_tol, limit=200)
        err_total = max(err_total, e)
        return v

    val, err = integrate.quad(inner, 0.0, x_max, epsabs=0.0, epsrel=rel_tol, limit=400)
    return 4.0 * val, 4.0 * (err + err_total * x_max)


# -- ODE comparison ------------------------------------------------------------------

@dataclass(frozen=True)
class OdeComparison:
    """X' + nu X^k <= 0, X(0) = x0 >= 0, k > 1."""

    x0: float
    nu: float
    k: float

    def __post_init__(self):
        if not self.x0 >= 0:
            raise InvalidParameters("x0 must be >= 0")
        if not self.nu > 0:
            raise InvalidParameters("nu must be > 0")
        if not self.k > 1:
            raise InvalidParameters("k must be > 1")


def ode_comparison_bound(c: OdeComparison, t):
    t = np.asarray(t, dtype=float)
    if c.x0 == 0.0:
        return np.zeros_like(t) if t.ndim else 0.0
    out = (c.x0 ** (1 - c.k) + (c.k - 1) * c.nu * t) ** (-1.0 / (c.k - 1))
    return out if t.ndim else float(out)


def ode_comparison_verify(c: OdeComparison, dt: float, t_end: float,
                          forcing: Callable[[float], float] | None = None) -> dict:
    """RK4 on X' = -nu X^k - g(t), g >= 0; compare against the closed-form bound.

    Returns the worst relative excess over the bound (must be <= 1e-8) and,
    for the unforced equation, the worst relative gap (saturation).
    """
    if not (dt > 0 and t_end > 0):
        raise InvalidParameters("dt and t_end must be positive")
    g = forcing or (lambda t: 0.0)

    def rhs(t, x):
        return -c.nu * max(x, 0.0) ** c.k - g(t)

    steps = int(math.ceil(t_end / dt - 1e-9))
    h = t_end / steps
    x, t = c.x0, 0.0
    worst_excess = worst_gap = 0.0
    for i in range(steps):
        k1 = rhs(t, x)
        k2 = rhs(t + h / 2, x + h / 2 * k1)
        k3 = rhs(t + h / 2, x + h / 2 * k2)
        k4 = rhs(t + h, x + h * k3)
        x = max(x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4), 0.0)
        t = (i + 1) * h
        b = ode_comparison_bound(c, t)
        if b > 0:
            worst_excess = max(worst_excess, (x - b) / b)
            worst_gap = max(worst_gap, abs(x - b) / b)
        elif x > 0:
            worst_excess = math.inf
    return {"max_rel_excess": worst_excess, "max_rel_gap": worst_gap,
            "pass": bool(worst_excess <= 1e-8), "steps": steps}


def time_convolution_ratio(vartheta: float, varrho: float, times) -> dict:
    """(1+t)^rho * int_0^t exp(-theta (t - s)) (1+s)^(-rho) ds on a time grid.

    ``pass`` means the sup is finite and the normalized value does not
    increase after its maximum (the knee).
    """
    if not (vartheta > 0 and varrho > 0):
        raise InvalidParameters("vartheta and varrho must be positive")
    times = np.asarray(times, dtype=float)
    vals = np.empty_like(times)
    for i, t in enumerate(times):
        if t <= 0:
            vals[i] = 0.0
            continue
        f = lambda s, t=t: math.exp(-vartheta * (t - s)) * (1 + s) ** (-varrho)
        # the kernel lives within a few 1/vartheta of s = t
        cut = max(0.0, t - 60.0 / vartheta)
        v = integrate.quad(f, cut, t, epsabs=0.0, epsrel=1e-12, limit=200)[0]
        if cut > 0:
            v += integrate.quad(f, 0.0, cut, epsabs=0.0, epsrel=1e-10, limit=200)[0]
        vals[i] = v * (1 + t) ** varrho
    knee = int(np.argmax(vals)) if vals.size else 0
    tail = vals[knee:]
    monotone = bool(np.all(np.diff(tail) <= 1e-10 * np.abs(tail[:-1]) + 1e-300))
    sup = float(vals.max()) if vals.size else 0.0
    return {"times": times, "values": vals, "sup": sup, "knee": float(times[knee]) if vals.size else 0.0,
            "pass": bool(math.isfinite(sup) and monotone)}

"""Normal approximation linking ensemble size, precision and error probability.

For ``n`` independent members the fraction scoring 1 deviates from ``p`` by at
least ``theta`` with probability approximately

    eps = 2 * (1 - Phi(t)),   t = 2 * theta * sqrt(n)

(worst case ``p = 1/2``).  This module evaluates that relation in every
direction, rebuilds the published n-table, and audits it.  The exact
binomial tail is provided alongside as the reference the approximation is
measured against.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import PreconditionError

__all__ = [
    "erf",
    "erfc",
    "normal_cdf",
    "normal_sf",
    "normal_quantile",
    "normal_upper_quantile",
    "TailConvention",
    "TableSpec",
    "required_n",
    "achieved_epsilon",
    "achieved_theta",
    "build_table",
    "PUBLISHED_TABLE",
    "audit_table1",
    "binomial_error_probability",
    "beyond_band",
    "parse_real",
]

_TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)
_SQRT2 = math.sqrt(2.0)
_SERIES_LIMIT = 2.0
_CF_TOL = 1e-17
_TINY = 1e-300

# ε is honoured to this relative precision when rounding n; it absorbs the
# rounding of quoted tail probabilities such as 0.0455 for 2*(1 - Phi(2)).
EPS_RTOL = 1e-5


def _erf_series(x: float) -> float:
    # erf(x) = 2/sqrt(pi) exp(-x^2) sum_k 2^k x^(2k+1) / (2k+1)!!, all terms positive
    x2 = x * x
    term = x
    total = x
    k = 0
    while True:
        k += 1
        term *= 2.0 * x2 / (2 * k + 1)
        total += term
        if term <= total * 1e-17:
            break
    return _TWO_OVER_SQRT_PI * math.exp(-x2) * total


def _erfc_continued_fraction(x: float) -> float:
    # erfc(x) = exp(-x^2)/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))), modified Lentz
    f = x
    c = x
    d = 0.0
    k = 1
    while True:
        a = 0.5 * k
        d = x + a * d
        d = 1.0 / (d if abs(d) > _TINY else _TINY)
        c = x + a / c
        if abs(c) < _TINY:
            c = _TINY
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < _CF_TOL or k > 5000:
            break
        k += 1
    return math.exp(-x * x) / (math.sqrt(math.pi) * f)


def erf(x: float) -> float:
    """Error function: power series below |x| = 2, continued fraction above."""
    if math.isnan(x):
        return x
    ax = abs(x)
    if ax < _SERIES_LIMIT:
        v = _erf_series(ax)
    elif ax > 6.0:
        v = 1.0 if ax > 27.0 else 1.0 - _erfc_continued_fraction(ax)
    else:
        v = 1.0 - _erfc_continued_fraction(ax)
    return math.copysign(v, x)


def erfc(x: float) -> float:
    """Complementary error function, accurate in relative terms for x > 0."""
    if math.isnan(x):
        return x
    if x < 0:
        return 2.0 - erfc(-x)
    if x < _SERIES_LIMIT:
        return 1.0 - _erf_series(x)
    if x > 27.3:
        return 0.0
    return _erfc_continued_fraction(x)


def normal_cdf(x: float) -> float:
    """Standard normal distribution function Phi(x)."""
    if not math.isfinite(x):
        if math.isnan(x):
            raise PreconditionError("normal_cdf of NaN")
        return 1.0 if x > 0 else 0.0
    return 0.5 * erfc(-x / _SQRT2)


def normal_sf(x: float) -> float:
    """Upper tail 1 - Phi(x) without cancellation for large x."""
    return 0.5 * erfc(x / _SQRT2)


def normal_upper_quantile(q: float) -> float:
    """x with normal_sf(x) == q, for q in (0, 1)."""
    if not (0.0 < q < 1.0):
        raise PreconditionError(f"tail probability must lie in (0, 1), got {q}")
    if q > 0.5:
        return -normal_upper_quantile(1.0 - q)
    if q == 0.5:
        return 0.0
    lo, hi = 0.0, 1.0
    while normal_sf(hi) > q:
        lo, hi = hi, 2.0 * hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if normal_sf(mid) > q:
            lo = mid
        else:
            hi = mid
    # one Newton polish in relative form: d sf / dx = -pdf
    x = 0.5 * (lo + hi)
    pdf = math.exp(-0.5 * x * x) / math.sqrt(2 * math.pi)
    if pdf > 0:
        cand = x + (normal_sf(x) - q) / pdf
        if lo <= cand <= hi:
            x = cand
    return x


def normal_quantile(p: float) -> float:
    """Inverse of :func:`normal_cdf` on (0, 1) by bracketed bisection."""
    if not (0.0 < p < 1.0):
        raise PreconditionError(f"probability must lie in the open interval (0, 1), got {p}")
    if p < 0.5:
        return -normal_upper_quantile(p)
    return normal_upper_quantile(1.0 - p)


class TailConvention(str, enum.Enum):
    """How a tabulated ε maps to the integration limit t.

    TWO_SIDED reads ε as the mass outside [-t, t]; COLS23 reads it as
    twice that mass, which is what the second and third table columns use.
    """

    TWO_SIDED = "two-sided"
    COLS23 = "paper-cols23"

    @property
    def tail_factor(self) -> int:
        return 2 if self is TailConvention.TWO_SIDED else 4

    def t_for(self, epsilon: float) -> float:
        return normal_upper_quantile(epsilon / self.tail_factor)

    def epsilon_for(self, t: float) -> float:
        return self.tail_factor * normal_sf(t)


def _check_open_half(name, v):
    if not (0.0 < v < 0.5):
        raise PreconditionError(f"{name} must lie in (0, 1/2), got {v}")


def achieved_epsilon(theta: float, n: int, convention=TailConvention.TWO_SIDED) -> float:
    """Error probability guaranteed at precision theta with n members.

    theta = 0 is allowed and gives the vacuous guarantee 1.
    """
    if not (0.0 <= theta < 0.5):
        raise PreconditionError(f"theta must lie in [0, 1/2), got {theta}")
    if n < 1:
        raise PreconditionError(f"n must be at least 1, got {n}")
    return TailConvention(convention).epsilon_for(2.0 * theta * math.sqrt(n))


def achieved_theta(epsilon: float, n: int, convention=TailConvention.TWO_SIDED) -> float:
    _check_open_half("epsilon", epsilon)
    if n < 1:
        raise PreconditionError(f"n must be at least 1, got {n}")
    return TailConvention(convention).t_for(epsilon) / (2.0 * math.sqrt(n))


def required_n(theta: float, epsilon: float, convention=TailConvention.TWO_SIDED) -> int:
    """Smallest member count meeting (theta, epsilon) under the normal approximation.

    The real solution is ``(t / (2 theta))^2``; it is rounded up, except that
    a count whose achieved ε exceeds the target by less than EPS_RTOL
    (relative) is accepted.
    """
    _check_open_half("theta", theta)
    _check_open_half("epsilon", epsilon)
    conv = TailConvention(convention)
    t = conv.t_for(epsilon)
    n = max(1, math.ceil((t / (2.0 * theta)) ** 2))
    limit = epsilon * (1.0 + EPS_RTOL)
    while n > 1 and conv.epsilon_for(2.0 * theta * math.sqrt(n - 1)) <= limit:
        n -= 1
    while conv.epsilon_for(2.0 * theta * math.sqrt(n)) > limit:
        n += 1
    return n


@dataclass(frozen=True)
class TableSpec:
    thetas: tuple[float, ...]
    epsilons: tuple[float, ...]
    convention: TailConvention = TailConvention.TWO_SIDED

    def __post_init__(self):
        for th in self.thetas:
            _check_open_half("theta", th)
        for e in self.epsilons:
            _check_open_half("epsilon", e)
        object.__setattr__(self, "convention", TailConvention(self.convention))


def build_table(spec: TableSpec) -> list[list[int]]:
    return [[required_n(th, e, spec.convention) for e in spec.epsilons] for th in spec.thetas]


PUBLISHED_TABLE = {
    "thetas": (2.0**-5, 2.0**-6, 2.0**-7),
    "epsilons": (0.04550, 0.02000, 0.01000),
    "n": ((1024, 1699, 2018), (4096, 6795, 8069), (16384, 27177, 32275)),
}


@dataclass
class AuditRecord:
    theta: float
    epsilon_stated: float
    n_published: int
    n_two_sided: int
    n_cols23: int
    epsilon_achieved: float
    verdict: str

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class Table1Audit:
    records: list[AuditRecord]
    conclusions: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"records": [r.to_dict() for r in self.records], "conclusions": dict(self.conclusions)}


def audit_table1(ratio_tol: float = 0.0002) -> Table1Audit:
    """Recompute every published cell and state which convention it follows."""
    records = []
    for i, th in enumerate(PUBLISHED_TABLE["thetas"]):
        for j, eps in enumerate(PUBLISHED_TABLE["epsilons"]):
            n_published = PUBLISHED_TABLE["n"][i][j]
            n2 = required_n(th, eps, TailConvention.TWO_SIDED)
            n4 = required_n(th, eps, TailConvention.COLS23)
            records.append(AuditRecord(
                theta=th,
                epsilon_stated=eps,
                n_published=n_published,
                n_two_sided=n2,
                n_cols23=n4,
                epsilon_achieved=achieved_epsilon(th, n_published),
                verdict="consistent" if n2 == n_published else "inconsistent",
            ))
    col1 = [r for r in records if r.epsilon_stated == PUBLISHED_TABLE["epsilons"][0]]
    rest = [r for r in records if r not in col1]
    conclusions = {
        "column1_matches_two_sided": all(r.n_two_sided == r.n_published for r in col1),
        "columns23_match_cols23": all(abs(r.n_cols23 - r.n_published) <= 1 for r in rest),
        "columns23_achieve_half_stated_epsilon": all(
            abs(r.epsilon_achieved - r.epsilon_stated / 2) <= ratio_tol for r in rest
        ),
        "inconsistent_cells": sum(r.verdict == "inconsistent" for r in records),
    }
    return Table1Audit(records, conclusions)


def binomial_error_probability(p: float, n: int, theta: float, scale: str = "probability") -> float:
    """Exact P(|K/n - p| >= theta) for K ~ Binomial(n, p), by summing the pmf.

    On the ``plusminus`` scale the estimate is 2K/n - 1 against 2p - 1, which
    is the same event at half the precision.
    """
    if not (0.0 <= p <= 1.0):
        raise PreconditionError(f"p must lie in [0, 1], got {p}")
    if n < 1 or n > 10**6:
        raise PreconditionError(f"exact tail supports 1 <= n <= 1e6, got {n}")
    band = theta if scale == "probability" else theta / 2.0
    k = np.arange(n + 1)
    mask = beyond_band(k, n, p, band)
    if p in (0.0, 1.0):
        return 1.0 if mask[int(round(p * n))] else 0.0
    logpmf = (math.lgamma(n + 1) - np.array([math.lgamma(i + 1) + math.lgamma(n - i + 1) for i in k])
              + k * math.log(p) + (n - k) * math.log1p(-p))
    return math.fsum(np.exp(logpmf[mask]).tolist())


def beyond_band(counts, n: int, p: float, band: float):
    """Vectorised |count/n - p| >= band, inclusive at the boundary up to rounding."""
    counts = np.asarray(counts, dtype=float)
    return np.abs(counts - n * p) >= n * band * (1.0 - 1e-12)


_POW2 = re.compile(r"^\s*2\s*\^\s*(-?\d+)\s*$")


def parse_real(text: str) -> float:
    """Decimal, ``2^-k`` or ``a/b`` notation, as used for theta and epsilon flags."""
    m = _POW2.match(text)
    if m:
        return 2.0 ** int(m.group(1))
    if "/" in text:
        try:
            return float(Fraction(text.strip()))
        except (ValueError, ZeroDivisionError):
            raise PreconditionError(f"not a number: {text!r}") from None
    try:
        return float(text)
    except ValueError:
        raise PreconditionError(f"not a number: {text!r} (use a decimal or 2^-k)") from None

"""Gamma-family special functions and log-domain summation helpers.

The regularized incomplete gamma pair uses the usual split: power series for
``x < a + 1`` and a modified-Lentz continued fraction otherwise.  Everything
that can overflow is carried in the log domain.
"""

import math

__all__ = [
    "log_gamma",
    "reg_gamma_p",
    "reg_gamma_q",
    "log_reg_gamma_q",
    "log_upper_gamma",
    "finite_upper_gamma_sum",
    "generalized_binomial",
    "log_binomial",
    "log_pow",
    "SignedLogSum",
]

_EPS = 1e-17
_TINY = 1e-300
_MAX_ITER = 10_000


def log_gamma(x):
    """ln Gamma(x) for x > 0."""
    if not x > 0:
        raise ValueError(f"log_gamma needs x > 0, got {x!r}")
    return math.lgamma(x)


def _check_args(a, x):
    if not a > 0:
        raise ValueError(f"shape a must be > 0, got {a!r}")
    if not x >= 0:
        raise ValueError(f"argument x must be >= 0, got {x!r}")


def _log_prefactor(a, x):
    # ln(x^a e^-x / Gamma(a))
    return a * math.log(x) - x - math.lgamma(a)


def _series_p(a, x):
    """Regularized lower gamma by its power series (x < a + 1)."""
    ap = a
    term = 1.0 / a
    total = term
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    else:
        raise ArithmeticError(f"series for P({a}, {x}) did not converge")
    return math.exp(_log_prefactor(a, x)) * total


def _log_cf_q(a, x):
    """ln Q(a, x) by continued fraction (x >= a + 1)."""
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    else:
        raise ArithmeticError(f"continued fraction for Q({a}, {x}) did not converge")
    return _log_prefactor(a, x) + math.log(h)


def reg_gamma_p(a, x):
    """Regularized lower incomplete gamma P(a, x) = gamma(a, x) / Gamma(a)."""
    _check_args(a, x)
    if x == 0:
        return 0.0
    if math.isinf(x):
        return 1.0
    if x < a + 1.0:
        return _series_p(a, x)
    return -math.expm1(_log_cf_q(a, x))


def reg_gamma_q(a, x):
    """Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x)."""
    _check_args(a, x)
    if x == 0:
        return 1.0
    if math.isinf(x):
        return 0.0
    if x < a + 1.0:
        return 1.0 - _series_p(a, x)
    return math.exp(_log_cf_q(a, x))


def log_reg_gamma_q(a, x):
    """ln Q(a, x); stays finite far into the tail where Q underflows."""
    _check_args(a, x)
    if x == 0:
        return 0.0
    if math.isinf(x):
        return -math.inf
    if x < a + 1.0:
        return math.log1p(-_series_p(a, x))
    return _log_cf_q(a, x)


def log_upper_gamma(a, x):
    """ln Gamma(a, x), the unregularized upper incomplete gamma."""
    return math.lgamma(a) + log_reg_gamma_q(a, x)


def finite_upper_gamma_sum(m, x):
    """e^-x * sum_{p<m} x^p / p!, i.e. Q(m, x) for integer m >= 1."""
    if isinstance(m, float) and m.is_integer():
        m = int(m)
    if not isinstance(m, int) or isinstance(m, bool) or m < 1:
        raise ValueError(f"finite expansion needs an integer m >= 1, got {m!r}")
    if not x >= 0:
        raise ValueError(f"argument x must be >= 0, got {x!r}")
    if x == 0:
        return 1.0
    acc = SignedLogSum()
    logx = math.log(x)
    for p in range(m):
        acc.add(p * logx - math.lgamma(p + 1))
    return math.exp(acc.log_value() - x)


def log_binomial(top, k):
    """ln |C(top, k)| via gamma ratios; requires top - k + 1 > 0."""
    if k < 0 or int(k) != k:
        raise ValueError(f"k must be a nonnegative integer, got {k!r}")
    if not top - k + 1 > 0:
        raise ValueError(f"C({top}, {k}) hits a pole of Gamma(top - k + 1)")
    return math.lgamma(top + 1) - math.lgamma(k + 1) - math.lgamma(top - k + 1)


def generalized_binomial(top, k):
    """Gamma(top+1) / (Gamma(k+1) Gamma(top-k+1)) for real ``top``."""
    if not top + 1 > 0:
        raise ValueError(f"C({top}, {k}) hits a pole of Gamma(top + 1)")
    return math.exp(log_binomial(top, k))


def log_pow(base, k):
    """ln(base**k) with 0**0 = 1; returns None when the power vanishes."""
    if k == 0:
        return 0.0
    if base == 0:
        return None
    return k * math.log(base)


class SignedLogSum:
    """Accumulate signed terms given as (sign, ln|term|).

    The total is formed after the largest magnitude is known, with
    compensated summation over the rescaled terms.  Terms smaller than
    ``drop`` relative to the largest one are ignored.
    """

    def __init__(self, drop=1e-18):
        self._terms = []
        self._log_drop = math.log(drop)

    def add(self, log_mag, sign=1):
        if log_mag is None or log_mag == -math.inf or sign == 0:
            return
        self._terms.append((log_mag, 1 if sign > 0 else -1))

    def __len__(self):
        return len(self._terms)

    def _scaled(self):
        top = max(t[0] for t in self._terms)
        parts = [s * math.exp(lm - top) for lm, s in self._terms
                 if lm - top > self._log_drop]
        return top, math.fsum(parts)

    def value(self):
        if not self._terms:
            return 0.0
        top, s = self._scaled()
        return s * math.exp(top)

    def log_value(self):
        """ln of the total; the total must be positive."""
        if not self._terms:
            return -math.inf
        top, s = self._scaled()
        if s <= 0:
            raise ArithmeticError("log of a nonpositive signed sum")
        return top + math.log(s)

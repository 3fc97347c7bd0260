"""Numerical quadrature of the raw outage integrals.

Ground truth for the closed forms.  Only scipy's quadpack and its Gamma
routines are used here; nothing is shared with ``special`` or ``analytic``
beyond the input record and the relay-set combinatorics.  Infinite domains
are cut at a high quantile of the dominating Gamma factor.
"""

from dataclasses import dataclass
import math

from scipy import integrate, special

from .analytic import OutageEstimate, relay_inputs, tsrs_combine

__all__ = [
    "QuadratureSpec",
    "QuadratureError",
    "quad_relay_user1_success",
    "quad_prob_relay_in_kr",
    "quad_phi1",
    "quad_phi2",
    "quad_phi3",
    "quad_joint_success",
    "op_ssrs_quadrature",
    "op_tsrs_quadrature",
]


@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-300
    rel_tol: float = 1e-10
    quantile: float = 1.0 - 1e-10
    limit: int = 200

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("quadrature tolerances must be > 0")
        if not 0.9 < self.quantile < 1:
            raise ValueError("truncation quantile must lie in (0.9, 1)")
        if self.limit < 1:
            raise ValueError("subdivision limit must be >= 1")

    @property
    def tail(self):
        return 1.0 - self.quantile


DEFAULT_SPEC = QuadratureSpec()
ACCEPT_REL = 1e-8


class QuadratureError(ArithmeticError):
    """Quadrature missed its tolerance; ``estimate`` holds the best value."""

    def __init__(self, message, estimate):
        super().__init__(message)
        self.estimate = estimate


def _gamma_pdf(m, mean):
    rate = m / mean
    const = m * math.log(rate) - special.gammaln(m)

    def pdf(x):
        if x <= 0:
            return 0.0
        return math.exp(const + (m - 1.0) * math.log(x) - rate * x)

    return pdf


def _upper(m, mean, spec, lower=0.0):
    """Truncation point: mass beyond it is ``spec.tail`` of the mass above ``lower``."""
    mass = special.gammaincc(m, m * lower / mean) if lower > 0 else 1.0
    return max(special.gammainccinv(m, spec.tail * mass) * mean / m, lower)


def _quad(f, a, b, spec, what, breaks=()):
    """Integrate over [a, b], split at any interior ``breaks``."""
    pts = [a] + sorted(x for x in breaks if a < x < b) + [b]
    val = err = 0.0
    msg = None
    for lo, hi in zip(pts, pts[1:]):
        if hi <= lo:
            continue
        v, e, *rest = integrate.quad(f, lo, hi, epsabs=spec.abs_tol, epsrel=spec.rel_tol,
                                     limit=spec.limit, full_output=1)
        val += v
        err += e
        if len(rest) > 1:
            msg = rest[1]
    # quadpack flags roundoff even when converged; only the error estimate decides
    if err > max(spec.abs_tol, ACCEPT_REL * abs(val)):
        raise QuadratureError(f"{what}: {msg or 'error estimate too large'} "
                              f"(err {err:.3g} on {val:.3g})", val)
    return val


def _sf(m, x):
    return special.gammaincc(m, x)


def _saturated(inp):
    return inp.g1 * inp.a4 >= inp.a3


def _dest_tail(m, om, rho, inp):
    return _sf(m, m * inp.g1 / (om * rho * (inp.a3 - inp.g1 * inp.a4)))


def quad_relay_user1_success(inp, spec=DEFAULT_SPEC):
    """Pr(user-1 SINR at the relay > g1) over |h_S|^2 and the SI gain."""
    k = inp.m_s1 * inp.g1 / (inp.a1 * inp.rho_s * inp.om_s1)
    w = inp.varpi * inp.rho_r
    pdf_x = _gamma_pdf(inp.m_s2, inp.om_s2)
    x_hi = _upper(inp.m_s2, inp.om_s2, spec)

    def over_x(y):
        c = k * (w * y + 1.0)
        f = lambda x: _sf(inp.m_s1, c + k * inp.a2 * inp.rho_s * x) * pdf_x(x)
        return _quad(f, 0.0, x_hi, spec, "relay user-1 inner")

    if w == 0 or inp.om_rr == 0:
        return over_x(0.0)
    pdf_y = _gamma_pdf(inp.m_rr, inp.om_rr)
    y_hi = _upper(inp.m_rr, inp.om_rr, spec)
    return _quad(lambda y: over_x(y) * pdf_y(y), 0.0, y_hi, spec, "relay user-1 outer")


def quad_prob_relay_in_kr(inp, spec=DEFAULT_SPEC):
    if _saturated(inp):
        return 0.0
    return (_dest_tail(inp.m_d1, inp.om_d1, inp.rho_d1, inp)
            * _dest_tail(inp.m_d2, inp.om_d2, inp.rho_d2, inp)
            * quad_relay_user1_success(inp, spec))


def quad_phi1(inp, spec=DEFAULT_SPEC):
    """Integral of F_res((a4 rho x - g2) / (g2 a3 eps rho)) f(x) over x > U_max."""
    if _saturated(inp):
        return 0.0
    u = max(inp.g2 / (inp.rho_d2 * inp.a4), inp.g1 / (inp.rho_d2 * (inp.a3 - inp.g1 * inp.a4)))
    if inp.eps_d2 == 0:
        return _sf(inp.m_d2, inp.m_d2 * u / inp.om_d2)
    pdf = _gamma_pdf(inp.m_d2, inp.om_d2)
    mt = inp.mt_d2
    scale = inp.g2 * inp.a3 * inp.eps_d2 * inp.rho_d2

    def f(x):
        t = (inp.a4 * inp.rho_d2 * x - inp.g2) / scale
        return special.gammainc(mt, mt * t) * pdf(x)

    hi = _upper(inp.m_d2, inp.om_d2, spec, lower=u)
    # the residual CDF climbs from 0 to 1 over a window that can be narrow
    knee = (inp.g2 + scale * _upper(mt, 1.0, spec)) / (inp.a4 * inp.rho_d2)
    mid = (inp.g2 + scale) / (inp.a4 * inp.rho_d2)
    return _quad(f, u, hi, spec, "phi1", breaks=(mid, knee))


def quad_phi2(inp, spec=DEFAULT_SPEC):
    if _saturated(inp):
        return 0.0
    return _dest_tail(inp.m_d1, inp.om_d1, inp.rho_d1, inp)


def quad_phi3(inp, spec=DEFAULT_SPEC):
    """Pr(both users decoded at the relay).

    The |g_S|^2 integral is its Gamma tail and the relay residual gain enters
    through its Gamma CDF; |h_S|^2 and the SI gain z are integrated
    numerically.  The z integral drops out without self-interference.
    """
    a1, a2, rs = inp.a1, inp.a2, inp.rho_s
    w = inp.varpi * inp.rho_r
    k = inp.m_s1 * inp.g1 / (a1 * rs * inp.om_s1)
    mt = inp.mt_r
    res = a1 * inp.eps_r * rs
    pdf_y = _gamma_pdf(inp.m_s2, inp.om_s2)
    psi_hi = _upper(mt, 1.0, spec) if res > 0 else 0.0

    def given(z):
        base = w * z + 1.0
        lo = inp.g2 * base / (a2 * rs)
        c = k * base

        def f(y):
            val = _sf(inp.m_s1, c + k * a2 * rs * y) * pdf_y(y)
            if res > 0:
                # residual gain psi must stay below (a2 rs y / g2 - base) / res
                val *= special.gammainc(mt, mt * (a2 * rs * y / inp.g2 - base) / res)
            return val

        hi = _upper(inp.m_s2, inp.om_s2, spec, lower=lo)
        # window where the residual CDF factor rises from 0 to 1
        knees = [inp.g2 * (base + res * t) / (a2 * rs) for t in (1.0, psi_hi)] if res > 0 else []
        return _quad(f, lo, hi, spec, "phi3 inner", breaks=knees)

    if not (w > 0 and inp.om_rr > 0):
        return given(0.0)
    pdf_z = _gamma_pdf(inp.m_rr, inp.om_rr)
    z_hi = _upper(inp.m_rr, inp.om_rr, spec)
    return _quad(lambda z: given(z) * pdf_z(z), 0.0, z_hi, spec, "phi3 z")


def quad_joint_success(inp, spec=DEFAULT_SPEC):
    if _saturated(inp):
        return 0.0
    return quad_phi1(inp, spec) * quad_phi2(inp, spec) * quad_phi3(inp, spec)


def _relay_terms(cfg, fn):
    if cfg.is_homogeneous:
        return [fn(relay_inputs(cfg, 0))] * cfg.n_relays
    return [fn(relay_inputs(cfg, i)) for i in range(cfg.n_relays)]


def op_ssrs_quadrature(cfg, spec=DEFAULT_SPEC):
    p = _relay_terms(cfg, lambda inp: quad_prob_relay_in_kr(inp, spec))
    raw = math.prod(1.0 - v for v in p)
    return OutageEstimate(value=min(max(raw, 0.0), 1.0), method="quadrature", raw=raw)


def op_tsrs_quadrature(cfg, spec=DEFAULT_SPEC):
    def pair(inp):
        p = quad_prob_relay_in_kr(inp, spec)
        return p, (quad_joint_success(inp, spec) / p if p > 0 else 0.0)

    pairs = _relay_terms(cfg, pair)
    raw = tsrs_combine([a for a, _ in pairs], [b for _, b in pairs], cfg.is_homogeneous)
    return OutageEstimate(value=min(max(raw, 0.0), 1.0), method="quadrature", raw=raw)

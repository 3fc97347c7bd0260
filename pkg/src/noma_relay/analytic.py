"""Closed-form and high-SNR outage probabilities for SSRS and TSRS.

Per relay the building blocks are

* ``prob_relay_in_kr`` -- the relay meets user 1's rate at itself and at both
  destinations (membership in the QoS set K_R);
* ``phi1`` / ``phi2`` / ``phi3`` -- the three independent factors of the joint
  event "relay in K_R and user 2 served through it" (D2 link, D1 link,
  source-relay hop).

Multi-sums are accumulated as signed log-magnitudes (``SignedLogSum``) so
that terms spanning hundreds of decades combine without overflow.
"""

from dataclasses import dataclass
from itertools import combinations
import math

from .model import ConfigError, link_scales
from .special import (
    SignedLogSum,
    log_binomial,
    log_pow,
    log_reg_gamma_q,
    log_upper_gamma,
    reg_gamma_q,
)

__all__ = [
    "RelayAnalyticInputs",
    "OutageEstimate",
    "ProbabilityRangeError",
    "CapacityError",
    "relay_inputs",
    "prob_relay_in_kr",
    "prob_relay_in_kr_asymptotic",
    "relay_user1_success",
    "dest_user1_tail",
    "u_max",
    "phi1",
    "phi1_psic",
    "phi2",
    "phi3",
    "relay_user1_success_reduced",
    "phi3_reduced",
    "phi1_asymptotic",
    "phi2_asymptotic",
    "phi3_asymptotic",
    "joint_success",
    "conditional_success",
    "tsrs_combine",
    "op_ssrs_exact",
    "op_ssrs_asymptotic",
    "op_tsrs_exact",
    "op_tsrs_asymptotic",
    "MAX_HETEROGENEOUS_RELAYS",
]

RANGE_TOL = 1e-8
MAX_HETEROGENEOUS_RELAYS = 20


class ProbabilityRangeError(ArithmeticError):
    """A computed probability left [0, 1] by more than the tolerance."""

    def __init__(self, message, raw):
        super().__init__(message)
        self.raw = raw


class CapacityError(RuntimeError):
    pass


@dataclass(frozen=True)
class OutageEstimate:
    value: float
    method: str
    half_width: float = None
    raw: float = None

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True)
class RelayAnalyticInputs:
    """Everything the closed forms need for one relay (effective means)."""

    om_s1: float
    om_s2: float
    om_d1: float
    om_d2: float
    om_rr: float
    m_s1: float
    m_s2: float
    m_d1: float
    m_d2: float
    m_rr: float
    mt_r: float
    mt_d2: float
    rho_s: float
    rho_r: float
    rho_d1: float
    rho_d2: float
    varpi: int
    eps_r: float
    eps_d2: float
    a1: float
    a2: float
    a3: float
    a4: float
    g1: float
    g2: float

    @property
    def saturated(self):
        """User 1 can never be decoded at the destinations."""
        return self.g1 * self.a4 >= self.a3

    @property
    def si_load(self):
        return self.varpi * self.rho_r * self.om_rr


def relay_inputs(cfg, i):
    prof = cfg.relays[i]
    sc = link_scales(cfg, i)
    g1, g2 = cfg.thresholds
    p = cfg.power
    return RelayAnalyticInputs(
        om_s1=sc["s1"], om_s2=sc["s2"], om_d1=sc["d1"], om_d2=sc["d2"], om_rr=sc["rr"],
        m_s1=prof.s1.m, m_s2=prof.s2.m, m_d1=prof.d1.m, m_d2=prof.d2.m, m_rr=prof.si.m,
        mt_r=prof.sic.m_r, mt_d2=prof.sic.m_d2,
        rho_s=cfg.rho_s, rho_r=cfg.rho_r, rho_d1=cfg.rho_d1, rho_d2=cfg.rho_d2,
        varpi=cfg.varpi, eps_r=prof.sic.eps_r, eps_d2=prof.sic.eps_d2,
        a1=p.a1, a2=p.a2, a3=p.a3, a4=p.a4, g1=g1, g2=g2,
    )


def _integer_shape(value, name):
    if float(value).is_integer() and value >= 1:
        return int(value)
    raise ConfigError(f"closed form needs an integer {name}, got {value}", name)


def _check_range(raw, what):
    if raw < -RANGE_TOL or raw > 1 + RANGE_TOL:
        raise ProbabilityRangeError(f"{what} = {raw!r} is outside [0, 1]", raw)
    return min(max(raw, 0.0), 1.0)


def dest_user1_tail(m, om, rho, inp):
    """Pr(user-1 SINR at a destination exceeds the threshold)."""
    if inp.saturated:
        return 0.0
    return reg_gamma_q(m, m * inp.g1 / (om * rho * (inp.a3 - inp.g1 * inp.a4)))


def _source_ratio(inp):
    # m_S1 g1 a2 Om_S2 / (m_S2 a1 Om_S1)
    return inp.m_s1 * inp.g1 * inp.a2 * inp.om_s2 / (inp.m_s2 * inp.a1 * inp.om_s1)


def _si_ratio(inp):
    # m_S1 g1 varpi rho_R Om_RR / (m_RR a1 rho_S Om_S1)
    return inp.m_s1 * inp.g1 * inp.si_load / (inp.m_rr * inp.a1 * inp.rho_s * inp.om_s1)


def relay_user1_success(inp):
    """Pr(user-1 SINR at the relay exceeds g1), finite triple sum."""
    m1 = _integer_shape(inp.m_s1, "m_s1")
    m2, mr = inp.m_s2, inp.m_rr
    b = _source_ratio(inp)
    s = _si_ratio(inp)
    lb, ls = math.log1p(b), math.log1p(s)
    base_q = inp.m_s1 * inp.g1 / (inp.a1 * inp.om_s1)
    base_x = inp.a2 * inp.om_s2 / m2
    base_z = inp.si_load / mr
    const = -math.lgamma(m2) - math.lgamma(mr)
    acc = SignedLogSum()
    for p1 in range(m1):
        l1 = log_pow(base_q, p1)
        if l1 is None:
            continue
        for p2 in range(p1 + 1):
            for p3 in range(p2 + 1):
                lz = log_pow(base_z, p2 - p3)
                if lz is None:
                    continue
                acc.add(
                    l1 + p3 * math.log(base_x) + lz
                    + log_binomial(p1, p2) + log_binomial(p2, p3)
                    + math.lgamma(p3 + m2) + math.lgamma(p2 - p3 + mr) + const
                    - math.lgamma(p1 + 1)
                    - (m2 + p3) * lb - (mr + p2 - p3) * ls
                    - (p1 - p3) * math.log(inp.rho_s)
                )
    c = inp.m_s1 * inp.g1 / (inp.a1 * inp.rho_s * inp.om_s1)
    return math.exp(acc.log_value() - c)


def prob_relay_in_kr(inp):
    """Pr(R_i in K_R): product of the three independent user-1 successes."""
    if inp.saturated:
        return 0.0
    raw = (dest_user1_tail(inp.m_d1, inp.om_d1, inp.rho_d1, inp)
           * dest_user1_tail(inp.m_d2, inp.om_d2, inp.rho_d2, inp)
           * relay_user1_success(inp))
    return _check_range(raw, "Pr(relay in K_R)")


def _small_tail(m, om, rho, inp):
    # leading-order 1 - P(m, x) ~ 1 - x^m / Gamma(m + 1)
    x = m * inp.g1 / (om * rho * (inp.a3 - inp.g1 * inp.a4))
    return 1.0 - math.exp(m * math.log(x) - math.lgamma(m + 1))


def _relay_user1_floor(inp):
    m1 = _integer_shape(inp.m_s1, "m_s1")
    b = _source_ratio(inp)
    s = _si_ratio(inp)
    ratio = b / (1.0 + b)
    acc = SignedLogSum()
    for p1 in range(m1):
        lr = log_pow(ratio, p1)
        if lr is None:
            continue
        acc.add(log_binomial(p1 + inp.m_s2 - 1, p1) + lr)
    return math.exp(acc.log_value() - inp.m_s2 * math.log1p(b) - inp.m_rr * math.log1p(s))


def prob_relay_in_kr_asymptotic(inp):
    if inp.saturated:
        return 0.0
    return (_small_tail(inp.m_d1, inp.om_d1, inp.rho_d1, inp)
            * _small_tail(inp.m_d2, inp.om_d2, inp.rho_d2, inp)
            * _relay_user1_floor(inp))


def u_max(inp):
    """Smallest |h_R2|^2 that serves user 2 and user 1 at D2."""
    return max(inp.g2 / (inp.rho_d2 * inp.a4),
               inp.g1 / (inp.rho_d2 * (inp.a3 - inp.g1 * inp.a4)))


def phi1_psic(inp):
    if inp.saturated:
        return 0.0
    return reg_gamma_q(inp.m_d2, inp.m_d2 * u_max(inp) / inp.om_d2)


def phi1(inp):
    """Pr(both user signals decoded at D2), residual SIC included."""
    if inp.saturated:
        return 0.0
    if inp.eps_d2 == 0:
        return phi1_psic(inp)
    mt = _integer_shape(inp.mt_d2, "mt_d2")
    m, om = inp.m_d2, inp.om_d2
    u = u_max(inp)
    rate = inp.a4 * mt / (inp.g2 * inp.a3 * inp.eps_d2)
    shift = mt / (inp.a3 * inp.eps_d2 * inp.rho_d2)
    ratio = m / (om * rate)
    lam = m / om + rate
    lead = shift - math.lgamma(m) - m * math.log1p(1.0 / ratio)
    acc = SignedLogSum()
    acc.add(log_reg_gamma_q(m, m * u / om))
    for p1 in range(mt):
        for p2 in range(p1 + 1):
            lshift = log_pow(shift, p1 - p2)
            if lshift is None:
                continue
            acc.add(
                lead + log_binomial(p1, p2) + log_upper_gamma(p2 + m, lam * u)
                - math.lgamma(p1 + 1) + lshift - p2 * math.log1p(ratio),
                sign=-((-1) ** (p1 - p2)),
            )
    return _check_range(acc.value(), "phi1")


def phi2(inp):
    return dest_user1_tail(inp.m_d1, inp.om_d1, inp.rho_d1, inp)


def _phi3_ratios(inp):
    m1, m2 = inp.m_s1, inp.m_s2
    a1, a2 = inp.a1, inp.a2
    o1, o2 = inp.om_s1, inp.om_s2
    g1, g2 = inp.g1, inp.g2
    num = g2 * m2 * a1 * o1 + (g2 + 1.0) * m1 * g1 * a2 * o2
    c0 = num / (a1 * a2 * inp.rho_s * o1 * o2)
    t_si = num / (inp.m_rr * a1 * a2 * o1 * o2) * inp.si_load / inp.rho_s
    t_ip = g2 * (m2 * a1 * o1 + m1 * g1 * a2 * o2) * inp.eps_r / (inp.mt_r * a2 * o1 * o2)
    return c0, t_si, t_ip


def phi3(inp):
    """Pr(user 1 and user 2 both decoded at the relay)."""
    m1 = _integer_shape(inp.m_s1, "m_s1")
    m2 = _integer_shape(inp.m_s2, "m_s2")
    mr, mtr = inp.m_rr, inp.mt_r
    c0, t_si, t_ip = _phi3_ratios(inp)
    b = _source_ratio(inp)
    lb, lsi, lip = math.log1p(b), math.log1p(t_si), math.log1p(t_ip)
    base_q = inp.m_s1 * inp.g1 / (inp.a1 * inp.om_s1)
    lx = math.log(inp.a2 * inp.om_s2 / m2)
    base_eps = inp.a1 * inp.eps_r / mtr
    base_z = inp.si_load / mr
    lg2 = math.log(inp.g2)
    lrho = math.log(inp.rho_s)
    const = -math.lgamma(m2) - math.lgamma(mr) - math.lgamma(mtr)
    acc = SignedLogSum()
    for q1 in range(m1):
        lq = log_pow(base_q, q1)
        if lq is None:
            continue
        lq -= math.lgamma(q1 + 1)
        for q2 in range(q1 + 1):
            for q3 in range(q2 + 1):
                lbq = log_binomial(q1, q2) + log_binomial(q2, q3) + math.lgamma(q3 + m2)
                for k1 in range(q3 + m2):
                    for k2 in range(k1 + 1):
                        for k3 in range(k2 + 1):
                            le = log_pow(base_eps, k3)
                            nz = k2 + q2 - k3 - q3
                            lz = log_pow(base_z, nz)
                            if le is None or lz is None:
                                continue
                            acc.add(
                                lq + lbq + const
                                + log_binomial(k1, k2) + log_binomial(k2, k3)
                                + math.lgamma(k3 + mtr) + math.lgamma(nz + mr)
                                - math.lgamma(k1 + 1)
                                + (q3 - k1) * lx + le + k1 * lg2
                                - (q3 + m2 - k1) * lb
                                - (k3 + mtr) * lip
                                - (nz + mr) * lsi
                                + lz - (k1 + q1 - k3 - q3) * lrho
                            )
    return _check_range(math.exp(acc.log_value() - c0), "phi3")


def _require_reduced(inp):
    if inp.si_load != 0 or inp.eps_r != 0:
        raise ValueError("reduced forms need no self-interference and perfect SIC at the relay")


def relay_user1_success_reduced(inp):
    """HD / no-SI form: sum_p sum_j C(p, j) E[h^j e^(-k a2 rho h)] k^p (a2 rho)^j / p!."""
    _require_reduced(inp)
    m1 = _integer_shape(inp.m_s1, "m_s1")
    m2, o2 = inp.m_s2, inp.om_s2
    k = inp.m_s1 * inp.g1 / (inp.a1 * inp.rho_s * inp.om_s1)
    t = k * inp.a2 * inp.rho_s
    acc = SignedLogSum()
    for p in range(m1):
        for j in range(p + 1):
            acc.add(p * math.log(k) - math.lgamma(p + 1) + log_binomial(p, j)
                    + j * math.log(inp.a2 * inp.rho_s * o2 / m2)
                    + math.lgamma(m2 + j) - math.lgamma(m2)
                    - (m2 + j) * math.log1p(t * o2 / m2))
    return math.exp(acc.log_value() - k)


def phi3_reduced(inp):
    """HD / pSIC form of phi3 through one upper incomplete gamma per term."""
    _require_reduced(inp)
    m1 = _integer_shape(inp.m_s1, "m_s1")
    m2, o2 = inp.m_s2, inp.om_s2
    k = inp.m_s1 * inp.g1 / (inp.a1 * inp.rho_s * inp.om_s1)
    c = inp.a2 * inp.rho_s
    lam = k * c + m2 / o2
    lower = inp.g2 / c
    acc = SignedLogSum()
    for p in range(m1):
        for j in range(p + 1):
            acc.add(p * math.log(k) - math.lgamma(p + 1) + log_binomial(p, j)
                    + j * math.log(c) + m2 * math.log(m2 / o2) - math.lgamma(m2)
                    + log_upper_gamma(m2 + j, lam * lower) - (m2 + j) * math.log(lam))
    return _check_range(math.exp(acc.log_value() - k), "phi3")


def phi1_asymptotic(inp):
    if inp.saturated:
        return 0.0
    m = inp.m_d2
    if inp.eps_d2 == 0:
        x = m * u_max(inp) / inp.om_d2
        return 1.0 - math.exp(m * math.log(x) - math.lgamma(m + 1))
    mt = _integer_shape(inp.mt_d2, "mt_d2")
    big = m * inp.g2 * inp.a3 * inp.eps_d2 / (inp.a4 * mt * inp.om_d2)
    acc = SignedLogSum()
    for p1 in range(mt):
        acc.add(math.lgamma(p1 + m) - math.lgamma(p1 + 1) - math.lgamma(m)
                + m * math.log(big) - (m + p1) * math.log1p(big))
    return 1.0 - acc.value()


def phi2_asymptotic(inp):
    if inp.saturated:
        return 0.0
    return _small_tail(inp.m_d1, inp.om_d1, inp.rho_d1, inp)


def phi3_asymptotic(inp):
    m1 = _integer_shape(inp.m_s1, "m_s1")
    m2 = _integer_shape(inp.m_s2, "m_s2")
    mtr = inp.mt_r
    _, t_si, t_ip = _phi3_ratios(inp)
    b = _source_ratio(inp)
    base_q = inp.m_s1 * inp.g1 / (inp.a1 * inp.om_s1)
    lx = math.log(inp.a2 * inp.om_s2 / m2)
    base_k = inp.g2 * inp.a1 * inp.eps_r / mtr
    acc = SignedLogSum()
    for q1 in range(m1):
        lq = log_pow(base_q, q1)
        if lq is None:
            continue
        for k1 in range(q1 + m2):
            lk = log_pow(base_k, k1)
            if lk is None:
                continue
            acc.add(
                math.lgamma(mtr + k1) + math.lgamma(m2 + q1)
                - math.lgamma(m2) - math.lgamma(mtr) - math.lgamma(k1 + 1) - math.lgamma(q1 + 1)
                + (q1 - k1) * lx + lq + lk
                - (m2 + q1 - k1) * math.log1p(b)
                - (mtr + k1) * math.log1p(t_ip)
            )
    return math.exp(acc.log_value() - inp.m_rr * math.log1p(t_si))


def joint_success(inp, asymptotic=False):
    """Pr(relay in K_R and user 2 served through it) = phi1 * phi2 * phi3."""
    if inp.saturated:
        return 0.0
    if asymptotic:
        return phi1_asymptotic(inp) * phi2_asymptotic(inp) * phi3_asymptotic(inp)
    return phi1(inp) * phi2(inp) * phi3(inp)


def conditional_success(joint, p_in):
    """P_phi: Pr(user 2 served | relay in K_R)."""
    if p_in == 0:
        return 0.0
    return joint / p_in


def tsrs_combine(p_in, p_phi, homogeneous):
    """Sum over |K_R| of Pr(all members fail user 2, |K_R| = l).

    ``p_in`` and ``p_phi`` are per-relay sequences.  The homogeneous form
    weights each cardinality with a binomial coefficient; otherwise every
    subset of relays is enumerated explicitly.
    """
    n = len(p_in)
    if homogeneous:
        p, f = p_in[0], 1.0 - p_phi[0]
        return math.fsum(math.comb(n, l) * (f * p) ** l * (1.0 - p) ** (n - l)
                         for l in range(n + 1))
    if n > MAX_HETEROGENEOUS_RELAYS:
        raise CapacityError(f"{n} heterogeneous relays need 2^{n} subsets; limit is "
                            f"{MAX_HETEROGENEOUS_RELAYS}")
    terms = []
    for l in range(n + 1):
        for members in combinations(range(n), l):
            inside = set(members)
            prod = 1.0
            for i in range(n):
                prod *= p_in[i] * (1.0 - p_phi[i]) if i in inside else 1.0 - p_in[i]
            terms.append(prod)
    return math.fsum(terms)


def _per_relay(cfg, fn):
    if cfg.is_homogeneous:
        v = fn(relay_inputs(cfg, 0))
        return [v] * cfg.n_relays
    return [fn(relay_inputs(cfg, i)) for i in range(cfg.n_relays)]


def _estimate(raw, method, strict=True):
    value = _check_range(raw, "outage probability") if strict else min(max(raw, 0.0), 1.0)
    return OutageEstimate(value=value, method=method, raw=raw)


def op_ssrs_exact(cfg):
    p = _per_relay(cfg, prob_relay_in_kr)
    return _estimate(math.prod(1.0 - v for v in p), "exact")


def op_ssrs_asymptotic(cfg):
    p = _per_relay(cfg, prob_relay_in_kr_asymptotic)
    return _estimate(math.prod(1.0 - v for v in p), "asymptotic", strict=False)


def _tsrs(cfg, p_fn, j_fn, method, strict):
    def both(inp):
        p = p_fn(inp)
        j = j_fn(inp)
        p_phi = conditional_success(j, p)
        if strict:
            p_phi = _check_range(p_phi, "P_phi")
        return p, p_phi

    pairs = _per_relay(cfg, both)
    p_in = [a for a, _ in pairs]
    p_phi = [b for _, b in pairs]
    raw = tsrs_combine(p_in, p_phi, cfg.is_homogeneous)
    return _estimate(raw, method, strict)


def op_tsrs_exact(cfg):
    return _tsrs(cfg, prob_relay_in_kr, joint_success, "exact", strict=True)


def op_tsrs_asymptotic(cfg):
    return _tsrs(cfg, prob_relay_in_kr_asymptotic,
                 lambda inp: joint_success(inp, asymptotic=True), "asymptotic", strict=False)

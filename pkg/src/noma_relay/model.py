"""Domain records and the deterministic SINR / threshold / geometry formulas.

Two sources S1, S2 reach two users D1, D2 only through one of L decode-and-
forward relays.  Uplink and downlink both use power-domain NOMA; user 1 has
service priority.  All SNR-like quantities are linear.
"""

from dataclasses import dataclass, field, replace
from enum import Enum
import math

import numpy as np

__all__ = [
    "ConfigError",
    "Duplex",
    "PowerAllocation",
    "NodeLayout",
    "LinkFading",
    "SelfInterferenceModel",
    "ImperfectSic",
    "RelayProfile",
    "SystemConfig",
    "ChannelDraw",
    "SinrBundle",
    "NODES",
    "db_to_linear",
    "node_distance",
    "effective_scale",
    "si_variance",
    "thresholds",
    "link_scales",
    "sinr_relay_user1",
    "sinr_relay_user2",
    "sinr_dest_user1_at_d1",
    "sinr_dest_user1_at_d2",
    "sinr_dest_user2_at_d2",
    "sinr_bundle",
]

NODES = ("s1", "s2", "d1", "d2")

_SUM_TOL = 1e-12


class ConfigError(ValueError):
    """An invalid parameter set; ``field`` names the offending entry."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


def _require(cond, message, name=None):
    if not cond:
        raise ConfigError(message, name)


def db_to_linear(db):
    return 10.0 ** (db / 10.0)


class Duplex(Enum):
    HD = "hd"
    FD = "fd"

    @property
    def varpi(self):
        """Self-interference switch: 1 for full duplex, 0 for half duplex."""
        return 1 if self is Duplex.FD else 0


@dataclass(frozen=True)
class PowerAllocation:
    a1: float
    a2: float
    a3: float
    a4: float

    def __post_init__(self):
        for name in ("a1", "a2", "a3", "a4"):
            v = getattr(self, name)
            _require(0 < v < 1, f"power.{name} must lie in (0, 1), got {v}", f"power.{name}")
        _require(abs(self.a1 + self.a2 - 1) <= _SUM_TOL, "power.a1 + power.a2 must equal 1", "power.a2")
        _require(abs(self.a3 + self.a4 - 1) <= _SUM_TOL, "power.a3 + power.a4 must equal 1", "power.a4")
        _require(self.a1 > self.a2, "power.a1 must exceed power.a2", "power.a1")
        _require(self.a3 > self.a4, "power.a3 must exceed power.a4", "power.a3")

    @classmethod
    def from_primary(cls, a1, a3):
        return cls(a1, 1.0 - a1, a3, 1.0 - a3)


@dataclass(frozen=True)
class NodeLayout:
    """Node positions in meters; relays sit at polar (r, theta) about the origin."""

    s1: tuple = (-6.0, 6.0)
    s2: tuple = (-6.0, -6.0)
    d1: tuple = (6.0, -6.0)
    d2: tuple = (6.0, 6.0)
    r: float = 0.0
    theta: float = 0.0
    alpha: float = 3.0

    def __post_init__(self):
        _require(self.alpha > 0, "geometry.alpha must be > 0", "geometry.alpha")
        _require(self.r >= 0, "geometry.r must be >= 0", "geometry.r")
        _require(0 <= self.theta < 2 * math.pi, "geometry.theta must lie in [0, 2*pi)", "geometry.theta")

    @property
    def relay_xy(self):
        return (self.r * math.cos(self.theta), self.r * math.sin(self.theta))

    def at(self, r, theta):
        return replace(self, r=r, theta=theta)


@dataclass(frozen=True)
class LinkFading:
    """Gamma law of a squared Nakagami-m gain: shape ``m``, mean ``omega``.

    In geometric mode ``omega`` is the unit-distance mean and the effective
    mean is ``omega * d**-alpha``.
    """

    m: float = 1.0
    omega: float = 1.0

    def __post_init__(self):
        _require(self.m > 0, f"fading shape must be > 0, got {self.m}", "m")
        _require(self.omega > 0, f"fading scale must be > 0, got {self.omega}", "omega")


@dataclass(frozen=True)
class SelfInterferenceModel:
    m: float = 1.0
    omega: float = 1.0
    kappa: float = 1.0
    theta: float = 0.2

    def __post_init__(self):
        _require(self.m > 0, "si.m must be > 0", "si.m")
        _require(self.omega > 0, "si.omega must be > 0", "si.omega")
        _require(0 <= self.kappa <= 1, "si.kappa must lie in [0, 1]", "si.kappa")
        _require(0 <= self.theta <= 1, "si.theta must lie in [0, 1]", "si.theta")


@dataclass(frozen=True)
class ImperfectSic:
    """Residual-SIC fractions and shapes; residual gains have unit mean."""

    eps_r: float = 0.0
    eps_d2: float = 0.0
    m_r: float = 1.0
    m_d2: float = 1.0

    def __post_init__(self):
        _require(0 <= self.eps_r <= 1, "sic.eps_r must lie in [0, 1]", "sic.eps_r")
        _require(0 <= self.eps_d2 <= 1, "sic.eps_d2 must lie in [0, 1]", "sic.eps_d2")
        _require(self.m_r > 0, "sic.m_r must be > 0", "sic.m_r")
        _require(self.m_d2 > 0, "sic.m_d2 must be > 0", "sic.m_d2")

    @property
    def perfect(self):
        return self.eps_r == 0 and self.eps_d2 == 0


@dataclass(frozen=True)
class RelayProfile:
    s1: LinkFading = field(default_factory=LinkFading)
    s2: LinkFading = field(default_factory=LinkFading)
    d1: LinkFading = field(default_factory=LinkFading)
    d2: LinkFading = field(default_factory=LinkFading)
    si: SelfInterferenceModel = field(default_factory=SelfInterferenceModel)
    sic: ImperfectSic = field(default_factory=ImperfectSic)

    def link(self, node):
        return getattr(self, node)


@dataclass(frozen=True)
class SystemConfig:
    """Full experiment description.

    ``pt`` is the total power P_T (linear); sources and relays each get
    P_T / 2.  When ``layout`` is set, link means follow the path-loss model,
    otherwise they are taken as given (unit distances).
    """

    relays: tuple
    power: PowerAllocation
    duplex: Duplex
    rate_d1: float
    rate_d2: float
    pt: float
    noise_r: float = 1.0
    noise_d1: float = 1.0
    noise_d2: float = 1.0
    layout: NodeLayout = None

    def __post_init__(self):
        object.__setattr__(self, "relays", tuple(self.relays))
        _require(len(self.relays) >= 1, "at least one relay is required", "relays")
        _require(self.rate_d1 > 0, "rates.d1 must be > 0", "rates.d1")
        _require(self.rate_d2 > 0, "rates.d2 must be > 0", "rates.d2")
        _require(self.pt > 0, "total power must be > 0", "pt")
        for name in ("noise_r", "noise_d1", "noise_d2"):
            _require(getattr(self, name) > 0, f"{name} must be > 0", name.replace("_", "."))

    @classmethod
    def homogeneous(cls, profile, n_relays, **kwargs):
        return cls(relays=(profile,) * n_relays, **kwargs)

    @property
    def n_relays(self):
        return len(self.relays)

    @property
    def is_homogeneous(self):
        return all(r == self.relays[0] for r in self.relays)

    @property
    def p_source(self):
        return self.pt / 2.0

    @property
    def p_relay(self):
        return self.pt / 2.0

    @property
    def rho_s(self):
        return self.p_source / self.noise_r

    @property
    def rho_r(self):
        return self.p_relay / self.noise_r

    @property
    def rho_d1(self):
        return self.p_relay / self.noise_d1

    @property
    def rho_d2(self):
        return self.p_relay / self.noise_d2

    @property
    def varpi(self):
        return self.duplex.varpi

    @property
    def thresholds(self):
        return thresholds(self.rate_d1, self.rate_d2, self.duplex)

    def at_snr_db(self, db):
        """Copy with P_T / sigma^2 set to ``db`` (noise variances unchanged)."""
        return replace(self, pt=db_to_linear(db))

    def with_relays(self, n_relays):
        if not self.is_homogeneous:
            raise ConfigError("relay count can only be changed on homogeneous configs", "relays")
        return replace(self, relays=(self.relays[0],) * n_relays)

    def replace(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True)
class ChannelDraw:
    """Squared channel gains; each field has a trailing relay axis."""

    g_s: np.ndarray
    h_s: np.ndarray
    g_r1: np.ndarray
    h_r2: np.ndarray
    g_s_res: np.ndarray
    h_r2_res: np.ndarray
    h_rr: np.ndarray

    def __post_init__(self):
        for name in self.__dataclass_fields__:
            arr = np.asarray(getattr(self, name), dtype=float)
            if np.any(arr < 0):
                raise ConfigError(f"channel gain {name} must be nonnegative", name)
            object.__setattr__(self, name, arr)

    def relay(self, i):
        return ChannelDraw(**{k: getattr(self, k)[..., i] for k in self.__dataclass_fields__})


@dataclass(frozen=True)
class SinrBundle:
    relay_user1: object
    relay_user2: object
    d1_user1: object
    d2_user1: object
    d2_user2: object

    @property
    def min_user1(self):
        return np.minimum(np.minimum(self.relay_user1, self.d1_user1), self.d2_user1)

    @property
    def min_user2(self):
        return np.minimum(self.relay_user2, self.d2_user2)


def node_distance(layout, node):
    """Distance in meters between ``node`` and the relay cluster."""
    x, y = getattr(layout, node)
    rx, ry = layout.relay_xy
    return math.hypot(x - rx, y - ry)


def effective_scale(link, d, alpha):
    """Mean squared gain after path loss, omega0 * d**-alpha."""
    if not d > 0:
        raise ValueError("path loss is singular at zero distance")
    return link.omega * d ** (-alpha)


def si_variance(si, p_relay):
    """Residual self-interference variance omega_RR * kappa * P_R**(theta - 1)."""
    if not p_relay > 0:
        raise ValueError("relay power must be > 0")
    return si.omega * si.kappa * p_relay ** (si.theta - 1.0)


def thresholds(rate_d1, rate_d2, duplex):
    """SINR thresholds (user 1, user 2); half duplex doubles the rate exponent."""
    if not (rate_d1 > 0 and rate_d2 > 0):
        raise ValueError("rates must be > 0")
    k = 2.0 if duplex is Duplex.HD else 1.0
    return 2.0 ** (k * rate_d1) - 1.0, 2.0 ** (k * rate_d2) - 1.0


def link_scales(cfg, i):
    """Effective means of relay ``i``'s links: dict with s1, s2, d1, d2, rr."""
    prof = cfg.relays[i]
    out = {}
    for node in NODES:
        link = prof.link(node)
        if cfg.layout is None:
            out[node] = link.omega
        else:
            out[node] = effective_scale(link, node_distance(cfg.layout, node), cfg.layout.alpha)
    out["rr"] = si_variance(prof.si, cfg.p_relay)
    return out


def _column(arr, i):
    return arr if i is None else arr[..., i]


def _eps(cfg, attr, i):
    if i is None:
        return np.array([getattr(r.sic, attr) for r in cfg.relays])
    return getattr(cfg.relays[i].sic, attr)


def sinr_relay_user1(cfg, draw, i=None):
    """User-1 SINR at the relay, decoded first with user 2 as interference."""
    p = cfg.power
    num = p.a1 * cfg.rho_s * _column(draw.g_s, i)
    den = p.a2 * cfg.rho_s * _column(draw.h_s, i) + cfg.varpi * cfg.rho_r * _column(draw.h_rr, i) + 1.0
    return num / den


def sinr_relay_user2(cfg, draw, i=None):
    """User-2 SINR at the relay after (possibly imperfect) SIC of user 1."""
    p = cfg.power
    eps = _eps(cfg, "eps_r", i)
    num = p.a2 * cfg.rho_s * _column(draw.h_s, i)
    den = p.a1 * eps * cfg.rho_s * _column(draw.g_s_res, i) + cfg.varpi * cfg.rho_r * _column(draw.h_rr, i) + 1.0
    return num / den


def _priority_sinr(p, rho, gain):
    return p.a3 * rho * gain / (p.a4 * rho * gain + 1.0)


def sinr_dest_user1_at_d1(cfg, draw, i=None):
    return _priority_sinr(cfg.power, cfg.rho_d1, _column(draw.g_r1, i))


def sinr_dest_user1_at_d2(cfg, draw, i=None):
    return _priority_sinr(cfg.power, cfg.rho_d2, _column(draw.h_r2, i))


def sinr_dest_user2_at_d2(cfg, draw, i=None):
    p = cfg.power
    eps = _eps(cfg, "eps_d2", i)
    num = p.a4 * cfg.rho_d2 * _column(draw.h_r2, i)
    den = p.a3 * eps * cfg.rho_d2 * _column(draw.h_r2_res, i) + 1.0
    return num / den


def sinr_bundle(cfg, draw, i=None):
    return SinrBundle(
        relay_user1=sinr_relay_user1(cfg, draw, i),
        relay_user2=sinr_relay_user2(cfg, draw, i),
        d1_user1=sinr_dest_user1_at_d1(cfg, draw, i),
        d2_user1=sinr_dest_user1_at_d2(cfg, draw, i),
        d2_user2=sinr_dest_user2_at_d2(cfg, draw, i),
    )

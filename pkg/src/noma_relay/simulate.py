"""Monte Carlo outage estimation with reproducible, block-partitioned streams.

Trials are split into blocks of ``McSettings.block``; block ``k`` draws from
its own generator seeded by ``SeedSequence(seed, spawn_key=(k,))``.  Counts
are integers, so the total is the same whatever the worker count or the
order in which blocks finish.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
import math

import numpy as np

from .analytic import OutageEstimate
from .model import ChannelDraw, link_scales, sinr_bundle

__all__ = [
    "Strategy",
    "McSettings",
    "RngStream",
    "McCounts",
    "sample_gamma",
    "draw_channels",
    "select_ssrs",
    "build_kr",
    "select_tsrs",
    "outage_events",
    "run_counts",
    "estimate_op",
    "estimate_both",
    "wald_half_width",
]

Z95 = 1.96


class Strategy(str, Enum):
    SSRS = "ssrs"
    TSRS = "tsrs"


@dataclass(frozen=True)
class McSettings:
    trials: int
    seed: int = 0
    block: int = 1 << 16
    workers: int = 1

    def __post_init__(self):
        if int(self.trials) != self.trials or self.trials < 1:
            raise ValueError(f"trial count must be a positive integer, got {self.trials!r}")
        if self.block < 1:
            raise ValueError("block size must be >= 1")
        if self.workers < 1:
            raise ValueError("worker count must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")

    def blocks(self):
        """(index, size) for every block; the last one may be short."""
        full, rest = divmod(int(self.trials), self.block)
        out = [(k, self.block) for k in range(full)]
        if rest:
            out.append((full, rest))
        return out


@dataclass(frozen=True)
class RngStream:
    """Identity of one block's random stream."""

    seed: int
    block: int

    def generator(self):
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(self.block,)))


def sample_gamma(m, mean, rng, size=None):
    """Squared Nakagami-m gain: Gamma with shape m and scale mean / m."""
    m = np.asarray(m, dtype=float)
    mean = np.asarray(mean, dtype=float)
    if np.any(m <= 0) or np.any(mean <= 0):
        raise ValueError("gamma shape and mean must be > 0")
    return rng.gamma(m, mean / m, size=size)


def _relay_params(cfg):
    cols = {k: [] for k in ("g_s", "h_s", "g_r1", "h_r2", "g_s_res", "h_r2_res", "h_rr")}
    for i, prof in enumerate(cfg.relays):
        sc = link_scales(cfg, i)
        cols["g_s"].append((prof.s1.m, sc["s1"]))
        cols["h_s"].append((prof.s2.m, sc["s2"]))
        cols["g_r1"].append((prof.d1.m, sc["d1"]))
        cols["h_r2"].append((prof.d2.m, sc["d2"]))
        cols["g_s_res"].append((prof.sic.m_r, 1.0))
        cols["h_r2_res"].append((prof.sic.m_d2, 1.0))
        cols["h_rr"].append((prof.si.m, sc["rr"]))
    return {k: np.array(v).T for k, v in cols.items()}


def draw_channels(cfg, rng, size=None, params=None):
    """One independent draw of every gain; shape ``(size, L)`` or ``(L,)``."""
    params = _relay_params(cfg) if params is None else params
    shape = (cfg.n_relays,) if size is None else (size, cfg.n_relays)
    # fixed field order keeps streams reproducible
    gains = {k: sample_gamma(m, om, rng, size=shape) for k, (m, om) in params.items()}
    return ChannelDraw(**gains)


def select_ssrs(cfg, draw, bundle=None):
    """Relay maximizing user 1's end-to-end min SINR (lowest index on ties)."""
    bundle = sinr_bundle(cfg, draw) if bundle is None else bundle
    return np.argmax(bundle.min_user1, axis=-1)


def build_kr(cfg, draw, bundle=None):
    """Boolean mask of relays meeting user 1's threshold on all three hops."""
    bundle = sinr_bundle(cfg, draw) if bundle is None else bundle
    return bundle.min_user1 > cfg.thresholds[0]


def select_tsrs(cfg, draw, bundle=None):
    """Best user-2 relay within K_R; -1 where K_R is empty."""
    bundle = sinr_bundle(cfg, draw) if bundle is None else bundle
    kr = build_kr(cfg, draw, bundle)
    score = np.where(kr, bundle.min_user2, -np.inf)
    idx = np.argmax(score, axis=-1)
    return np.where(kr.any(axis=-1), idx, -1)


def _take(values, idx):
    return np.take_along_axis(values, np.expand_dims(idx, -1), axis=-1)[..., 0]


def outage_events(cfg, draw):
    """Per-trial outage flags (ssrs, tsrs) for a batch draw of shape (N, L)."""
    g1, g2 = cfg.thresholds
    bundle = sinr_bundle(cfg, draw)
    u1 = bundle.min_user1
    ssrs = _take(u1, select_ssrs(cfg, draw, bundle)) < g1
    sel = select_tsrs(cfg, draw, bundle)
    u2 = _take(bundle.min_user2, np.maximum(sel, 0))
    tsrs = (sel < 0) | (u2 < g2)
    return ssrs, tsrs


@dataclass(frozen=True)
class McCounts:
    trials: int
    ssrs: int
    tsrs: int
    in_kr: tuple
    joint: tuple

    def __add__(self, other):
        return McCounts(
            self.trials + other.trials, self.ssrs + other.ssrs, self.tsrs + other.tsrs,
            tuple(a + b for a, b in zip(self.in_kr, other.in_kr)),
            tuple(a + b for a, b in zip(self.joint, other.joint)),
        )

    def frequency(self, strategy):
        return getattr(self, Strategy(strategy).value) / self.trials


def _block_counts(cfg, seed, block, size):
    rng = RngStream(seed, block).generator()
    draw = draw_channels(cfg, rng, size=size)
    g1, g2 = cfg.thresholds
    ssrs, tsrs = outage_events(cfg, draw)
    bundle = sinr_bundle(cfg, draw)
    kr = bundle.min_user1 > g1
    served = kr & (bundle.min_user2 > g2)
    return McCounts(
        trials=size, ssrs=int(ssrs.sum()), tsrs=int(tsrs.sum()),
        in_kr=tuple(int(v) for v in kr.sum(axis=0)),
        joint=tuple(int(v) for v in served.sum(axis=0)),
    )


def _block_task(args):
    return _block_counts(*args)


def run_counts(cfg, settings):
    """Integer event counts over all blocks (outages and per-relay memberships)."""
    tasks = [(cfg, settings.seed, k, n) for k, n in settings.blocks()]
    if settings.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=settings.workers) as pool:
            parts = list(pool.map(_block_task, tasks))
    else:
        parts = [_block_task(t) for t in tasks]
    total = parts[0]
    for part in parts[1:]:
        total = total + part
    return total


def wald_half_width(p, n):
    return Z95 * math.sqrt(p * (1.0 - p) / n)


def _to_estimate(count, n):
    p = count / n
    return OutageEstimate(value=p, method="monte-carlo", half_width=wald_half_width(p, n), raw=p)


def estimate_both(cfg, settings):
    """SSRS and TSRS estimates from one shared set of draws."""
    c = run_counts(cfg, settings)
    return {Strategy.SSRS: _to_estimate(c.ssrs, c.trials),
            Strategy.TSRS: _to_estimate(c.tsrs, c.trials)}


def estimate_op(cfg, strategy, settings):
    return estimate_both(cfg, settings)[Strategy(strategy)]

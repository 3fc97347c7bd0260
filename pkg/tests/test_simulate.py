import math

import numpy as np
import pytest
from scipy import stats

from noma_relay.analytic import (
    conditional_success,
    joint_success,
    op_ssrs_exact,
    op_tsrs_exact,
    prob_relay_in_kr,
    relay_inputs,
)
from noma_relay.model import ChannelDraw, Duplex, link_scales, sinr_bundle
from noma_relay.simulate import (
    McSettings,
    RngStream,
    Strategy,
    build_kr,
    draw_channels,
    estimate_both,
    estimate_op,
    outage_events,
    run_counts,
    sample_gamma,
    select_ssrs,
    select_tsrs,
    wald_half_width,
)
from noma_relay.special import reg_gamma_p

from conftest import nakagami_config, rayleigh_config


def test_rayleigh_power_mean():
    x = sample_gamma(1.0, 1.0, np.random.default_rng(1), size=10 ** 6)
    assert abs(x.mean() - 1.0) < 0.01


def test_gamma_moments():
    x = sample_gamma(2.0, 3.0, np.random.default_rng(2), size=10 ** 6)
    assert x.mean() == pytest.approx(3.0, rel=0.01)
    assert x.var() == pytest.approx(4.5, rel=0.01)


def test_small_shape_ks():
    n = 10 ** 5
    x = np.sort(sample_gamma(0.5, 1.0, np.random.default_rng(3), size=n))
    cdf = np.array([reg_gamma_p(0.5, 0.5 * v) for v in x])
    i = np.arange(1, n + 1)
    d = max(np.max(i / n - cdf), np.max(cdf - (i - 1) / n))
    assert d < 1.628 / math.sqrt(n)


def test_sample_gamma_rejects_bad_parameters():
    with pytest.raises(ValueError):
        sample_gamma(0.0, 1.0, np.random.default_rng(0))


def test_channel_means():
    cfg = nakagami_config(n_relays=2)
    draw = draw_channels(cfg, np.random.default_rng(4), size=10 ** 6)
    sc = link_scales(cfg, 0)
    for name, mean in (("g_s", sc["s1"]), ("h_s", sc["s2"]), ("g_r1", sc["d1"]), ("h_r2", sc["d2"]),
                       ("g_s_res", 1.0), ("h_r2_res", 1.0), ("h_rr", sc["rr"])):
        arr = getattr(draw, name)
        assert arr.shape == (10 ** 6, 2)
        np.testing.assert_allclose(arr.mean(axis=0), mean, rtol=0.01)


def test_fixed_seed_reproduces_draws():
    cfg = rayleigh_config()
    a = draw_channels(cfg, RngStream(9, 3).generator(), size=100)
    b = draw_channels(cfg, RngStream(9, 3).generator(), size=100)
    c = draw_channels(cfg, RngStream(9, 4).generator(), size=100)
    np.testing.assert_array_equal(a.g_s, b.g_s)
    assert not np.array_equal(a.g_s, c.g_s)


def test_single_relay_selection():
    cfg = rayleigh_config(n_relays=1)
    draw = draw_channels(cfg, np.random.default_rng(5), size=1000)
    assert np.all(select_ssrs(cfg, draw) == 0)


def test_ssrs_picks_max_min_and_lowest_index_on_ties():
    cfg = rayleigh_config(n_relays=3)
    draw = draw_channels(cfg, np.random.default_rng(6), size=5000)
    sel = select_ssrs(cfg, draw)
    u1 = sinr_bundle(cfg, draw).min_user1
    np.testing.assert_array_equal(u1[np.arange(5000), sel], u1.max(axis=1))
    tied = ChannelDraw(*(np.ones((1, 3)) for _ in range(7)))
    assert select_ssrs(cfg, tied)[0] == 0
    assert select_tsrs(cfg, tied)[0] == 0


def test_dominant_relay_selected():
    cfg = rayleigh_config(n_relays=2)
    d = draw_channels(cfg, np.random.default_rng(7), size=2000)
    fields = {k: getattr(d, k).copy() for k in d.__dataclass_fields__}
    for k in ("g_s", "g_r1", "h_r2"):
        fields[k][:, 1] = 2 * fields[k][:, 0]
    for k in ("h_s", "g_s_res", "h_r2_res", "h_rr"):
        fields[k][:, 1] = fields[k][:, 0]
    boosted = ChannelDraw(**fields)
    assert np.all(select_ssrs(cfg, boosted) == 1)


def test_kr_edge_cases():
    sat = rayleigh_config(n_relays=3, rate_d1=2.5)
    draw = draw_channels(sat, np.random.default_rng(8), size=1000)
    assert not build_kr(sat, draw).any()
    assert np.all(select_tsrs(sat, draw) == -1)
    easy = rayleigh_config(n_relays=3, rate_d1=1e-12)
    assert build_kr(easy, draw).all()


def test_tsrs_single_member():
    cfg = rayleigh_config(n_relays=3)
    gains = np.ones((1, 3))
    g_s = gains.copy()
    g_s[0, [0, 2]] = 0.0
    d = ChannelDraw(g_s, gains, gains, gains, gains, gains, gains)
    assert build_kr(cfg, d).tolist() == [[False, True, False]]
    assert select_tsrs(cfg, d)[0] == 1


def test_certain_and_impossible_outage():
    sat = rayleigh_config(n_relays=2, rate_d1=2.5)
    est = estimate_both(sat, McSettings(3000, seed=1))
    assert est[Strategy.SSRS].value == 1.0 and est[Strategy.TSRS].value == 1.0
    easy = rayleigh_config(n_relays=2, db=60, rate_d1=1e-9, rate_d2=1e-9)
    est = estimate_both(easy, McSettings(3000, seed=1))
    assert est[Strategy.SSRS].value == 0.0 and est[Strategy.TSRS].value == 0.0
    assert est[Strategy.TSRS].half_width == 0.0


def test_settings_and_blocks():
    s = McSettings(trials=10, block=4)
    assert s.blocks() == [(0, 4), (1, 4), (2, 2)]
    for bad in ({"trials": 0}, {"trials": 1.5}, {"trials": 5, "block": 0}, {"trials": 5, "workers": 0},
                {"trials": 5, "seed": -1}):
        with pytest.raises(ValueError):
            McSettings(**bad)
    assert wald_half_width(0.5, 100) == pytest.approx(1.96 * 0.05)


def test_worker_count_does_not_change_counts():
    cfg = nakagami_config()
    one = run_counts(cfg, McSettings(50_000, seed=3, block=8192, workers=1))
    three = run_counts(cfg, McSettings(50_000, seed=3, block=8192, workers=3))
    assert one == three
    assert one.trials == 50_000


def test_rayleigh_point_matches_exact():
    cfg = rayleigh_config(duplex=Duplex.FD, db=45, n_relays=3)
    n = 10 ** 6
    est = estimate_both(cfg, McSettings(n, seed=21, workers=2))
    for strategy, exact in ((Strategy.SSRS, op_ssrs_exact(cfg).value),
                            (Strategy.TSRS, op_tsrs_exact(cfg).value)):
        assert abs(est[strategy].value - exact) <= 3 * math.sqrt(exact * (1 - exact) / n)


@pytest.mark.parametrize("make", [
    lambda: rayleigh_config(duplex=Duplex.FD, db=10, n_relays=2, eps=0.05),
    lambda: nakagami_config(duplex=Duplex.HD, db=15, n_relays=2),
])
def test_membership_and_conditional_frequencies(make):
    cfg = make()
    n = 10 ** 6
    c = run_counts(cfg, McSettings(n, seed=5, workers=2))
    inp = relay_inputs(cfg, 0)
    p = prob_relay_in_kr(inp)
    p_phi = conditional_success(joint_success(inp), p)
    for i in range(cfg.n_relays):
        freq = c.in_kr[i] / n
        assert abs(freq - p) <= 3 * math.sqrt(p * (1 - p) / n)
        cond = c.joint[i] / c.in_kr[i]
        assert abs(cond - p_phi) <= 3 * math.sqrt(p_phi * (1 - p_phi) / c.in_kr[i])


def test_membership_independent_across_relays():
    cfg = rayleigh_config(duplex=Duplex.FD, db=5, n_relays=2)
    draw = draw_channels(cfg, np.random.default_rng(11), size=10 ** 5)
    kr = build_kr(cfg, draw)
    table = np.array([[np.sum(~kr[:, 0] & ~kr[:, 1]), np.sum(~kr[:, 0] & kr[:, 1])],
                      [np.sum(kr[:, 0] & ~kr[:, 1]), np.sum(kr[:, 0] & kr[:, 1])]])
    assert stats.chi2_contingency(table).pvalue > 0.01


def test_outage_event_definitions():
    cfg = rayleigh_config(duplex=Duplex.HD, db=10, n_relays=2)
    draw = draw_channels(cfg, np.random.default_rng(12), size=20_000)
    ssrs, tsrs = outage_events(cfg, draw)
    b = sinr_bundle(cfg, draw)
    g1, g2 = cfg.thresholds
    np.testing.assert_array_equal(ssrs, b.min_user1.max(axis=1) < g1)
    served = ((b.min_user1 > g1) & (b.min_user2 > g2)).any(axis=1)
    np.testing.assert_array_equal(tsrs, ~served)


def test_estimate_op_tags():
    est = estimate_op(rayleigh_config(), "tsrs", McSettings(1000, seed=2))
    assert est.method == "monte-carlo" and est.half_width is not None

import random

import pytest

from noma_relay.model import (
    Duplex,
    ImperfectSic,
    LinkFading,
    NodeLayout,
    PowerAllocation,
    RelayProfile,
    SelfInterferenceModel,
    SystemConfig,
    db_to_linear,
)


def rayleigh_config(duplex=Duplex.FD, db=30, n_relays=2, kappa=1.0, theta=0.2, eps=0.0,
                    a1=0.75, a3=0.75, rate_d1=0.1, rate_d2=1.0):
    prof = RelayProfile(si=SelfInterferenceModel(1.0, 1.0, kappa, theta),
                        sic=ImperfectSic(eps, eps, 1.0, 1.0))
    return SystemConfig.homogeneous(prof, n_relays, power=PowerAllocation.from_primary(a1, a3),
                                    duplex=duplex, rate_d1=rate_d1, rate_d2=rate_d2,
                                    pt=db_to_linear(db))


def nakagami_config(duplex=Duplex.FD, db=40, eps=0.01, n_relays=3):
    """Mixed integer and non-integer shapes across the four links."""
    prof = RelayProfile(LinkFading(2, 1.55), LinkFading(3, 1.7), LinkFading(1.75, 1.3),
                        LinkFading(1.5, 1.6), si=SelfInterferenceModel(1.25, 1.0, 1.0, 0.2),
                        sic=ImperfectSic(eps, eps, 2, 2))
    return SystemConfig.homogeneous(prof, n_relays, power=PowerAllocation.from_primary(0.75, 0.75),
                                    duplex=duplex, rate_d1=0.2, rate_d2=1.0, pt=db_to_linear(db))


def geometric_config(duplex=Duplex.FD, db=50, a1=0.55, a3=0.75, n_relays=4, kappa=1.0,
                     theta=0.31, eps=(0.0, 0.0), rates=(0.1, 1.0)):
    link = LinkFading(2, 1.0)
    prof = RelayProfile(link, link, link, link, si=SelfInterferenceModel(2, 1.0, kappa, theta),
                        sic=ImperfectSic(eps[0], eps[1], 2, 2))
    return SystemConfig.homogeneous(prof, n_relays, power=PowerAllocation.from_primary(a1, a3),
                                    duplex=duplex, rate_d1=rates[0], rate_d2=rates[1],
                                    pt=db_to_linear(db), layout=NodeLayout())


def random_config(rng, n_relays=1):
    """Random valid config: integer source shapes, real-valued other shapes."""
    def link(integer):
        m = rng.choice([1, 2, 3]) if integer else rng.uniform(0.5, 3.0)
        return LinkFading(m, rng.uniform(0.2, 3.0))

    prof = RelayProfile(
        link(True), link(True), link(False), link(False),
        si=SelfInterferenceModel(rng.uniform(0.5, 3.0), rng.uniform(0.2, 3.0),
                                 rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)),
        sic=ImperfectSic(rng.choice([0.0, 0.01, 0.05]), rng.choice([0.0, 0.01, 0.05]),
                         rng.uniform(0.5, 3.0), rng.choice([1, 2, 3])),
    )
    return SystemConfig.homogeneous(
        prof, n_relays,
        power=PowerAllocation.from_primary(rng.uniform(0.55, 0.9), rng.uniform(0.55, 0.9)),
        duplex=rng.choice([Duplex.FD, Duplex.HD]),
        rate_d1=rng.uniform(0.05, 0.5), rate_d2=rng.uniform(0.2, 2.0),
        pt=db_to_linear(rng.choice([10, 30, 50])),
    )


@pytest.fixture
def rng():
    return random.Random(20240611)

import numpy as np
from hypothesis import HealthCheck, settings, strategies as st

from groupoid_morita.groupoid import random_functor, random_groupoid
from groupoid_morita.measure import random_measured

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def rng_of(seed):
    return np.random.default_rng(seed)


def random_chain(rng, length, max_arrows=8):
    """Random measured groupoids G0 -> ... -> G_length with random functors between them."""
    gs = [random_groupoid(rng, max_arrows) for _ in range(length + 1)]
    ms = [random_measured(g, rng) for g in gs]
    fs = [random_functor(a, b, rng) for a, b in zip(gs, gs[1:])]
    return ms, fs

import numpy as np
import pytest
from hypothesis import given

from conftest import rng_of, seeds
from groupoid_morita.bibundle import (Bibundle, bibundle_from_functor, bibundle_isomorphic, bibundle_tensor,
                                      canonical_bibundle, induced_measure, pairing_is_bijective, reverse_bibundle,
                                      validate_bibundle)
from groupoid_morita.errors import StructureError
from groupoid_morita.groupoid import (compose_functors, cyclic_group_table, group_groupoid, pair_groupoid, product,
                                      random_functor, random_groupoid)
from groupoid_morita.measure import counting_haar, haar_from_source_weights, random_measured


def over_point(n, copies=1):
    """pair(n) acting on ``copies`` disjoint copies of {1..n}, with the point acting trivially on the right."""
    g, pt = pair_groupoid(n), pair_groupoid(1)
    size = n * copies
    lact = -np.ones((g.n_arrows, size), dtype=np.int64)
    for x in range(g.n_arrows):
        i, j = divmod(x, n)
        for c in range(copies):
            lact[x, c * n + j] = c * n + i
    return Bibundle(g, pt, tuple(f"{c}:{i + 1}" for c in range(copies) for i in range(n)),
                    [m % n for m in range(size)], [0] * size, lact, np.arange(size)[:, None], name=f"X{n}")


def principal_chain(rng, length, max_arrows=6):
    """Left principal bibundles G0-G1, G1-G2, ... from random functors G_{i+1} -> G_i."""
    gs = [random_groupoid(rng, max_arrows) for _ in range(length + 1)]
    return gs, [bibundle_from_functor(random_functor(b, a, rng)) for a, b in zip(gs, gs[1:])]


def test_canonical_bibundle_is_principal():
    for g in (pair_groupoid(3), group_groupoid(cyclic_group_table(3)), random_groupoid(rng_of(1))):
        assert validate_bibundle(canonical_bibundle(g)) == []


def test_pair_over_point_is_principal():
    assert validate_bibundle(over_point(3)) == []


def test_non_free_action_is_reported():
    z = group_groupoid(cyclic_group_table(2))
    g, pt = product(pair_groupoid(2), z), pair_groupoid(1)
    lact = -np.ones((g.n_arrows, 2), dtype=np.int64)
    for x in range(g.n_arrows):
        # act through the pair(2) factor; the Z/2 factor fixes every point
        i, j = divmod(x // 2, 2)
        lact[x, j] = i
    b = Bibundle(g, pt, ("1", "2"), [0, 1], [0, 0], lact, [[0], [1]])
    report = validate_bibundle(b)
    assert report and all(v.axiom == "free" for v in report)
    assert ("(1,1).1", "1") in {v.witness for v in report}


def test_malformed_tables_are_structure_errors():
    g = pair_groupoid(2)
    with pytest.raises(StructureError):
        Bibundle(g, g, ("a",), [0], [0], -np.ones((4, 1)), -np.ones((1, 3)))


def test_canonical_induced_measure_is_counting():
    g = random_groupoid(rng_of(2))
    mu = induced_measure(canonical_bibundle(g), counting_haar(g)).mu
    assert set(mu) == {1}
    for r in range(g.n_objects):
        assert sum(mu[m] for m in g.s_fiber(r)) == len(g.s_fiber(r))


def test_pair_over_point_has_mass_n():
    for n in (1, 2, 4):
        b = over_point(n)
        assert sum(induced_measure(b, counting_haar(b.left)).mu) == n


def test_induced_measure_is_independent_of_basepoint():
    rng = rng_of(3)
    for _ in range(20):
        _, (b,) = principal_chain(rng, 1)
        haar = random_measured(b.left, rng).haar
        ims = induced_measure(b, haar, check=True)
        assert ims.equivariance_violations(b) == []
        # free and transitive: the unique x with x.m = m0 has weight c(tau m)
        for m in range(b.size):
            assert ims.mu[m] == haar.weight[b.left.unit[b.tau[m]]]


def test_tensor_with_canonical_is_a_unit():
    rng = rng_of(4)
    _, (b,) = principal_chain(rng, 1)
    right, _ = bibundle_tensor(b, canonical_bibundle(b.right))
    left, _ = bibundle_tensor(canonical_bibundle(b.left), b)
    assert bibundle_isomorphic(right, b) is not None
    assert bibundle_isomorphic(left, b) is not None


@pytest.mark.parametrize("n", [2, 3])
def test_x_times_reversed_x_is_the_pair_groupoid(n):
    x = over_point(n)
    t, _ = bibundle_tensor(x, reverse_bibundle(x))
    assert t.size == n * n
    assert validate_bibundle(t) == []
    assert bibundle_isomorphic(t, canonical_bibundle(x.left)) is not None


def test_orbit_count_by_direct_enumeration():
    rng = rng_of(5)
    for _ in range(10):
        _, (b1, b2) = principal_chain(rng, 2)
        H = b1.right
        pairs = [(m, n) for m in range(b1.size) for n in range(b2.size) if b1.sigma[m] == b2.tau[n]]
        orbit_sets = {frozenset((int(b1.ract[m, h]), int(b2.lact[H.inv[h], n])) for h in H.t_fiber(b1.sigma[m]))
                      for m, n in pairs}
        t, orbit_of = bibundle_tensor(b1, b2)
        assert t.size == len(orbit_sets) == len(set(orbit_of.values()))
        assert sum(len(o) for o in orbit_sets) == len(pairs)


def test_isomorphism_examples():
    _, (b,) = principal_chain(rng_of(6), 1)
    assert bibundle_isomorphic(b, b) == tuple(range(b.size))
    small, big = over_point(2), over_point(2, copies=2)
    big = Bibundle(small.left, small.right, big.carrier, big.tau, big.sigma, big.lact, big.ract)
    assert validate_bibundle(big)
    assert bibundle_isomorphic(small, big) is None


def test_tensor_of_functor_bibundles_is_the_composite():
    rng = rng_of(7)
    for _ in range(10):
        g, h, k = (random_groupoid(rng, 6) for _ in range(3))
        p1, p2 = random_functor(h, g, rng), random_functor(k, h, rng)
        t, _ = bibundle_tensor(bibundle_from_functor(p1), bibundle_from_functor(p2))
        assert bibundle_isomorphic(t, bibundle_from_functor(compose_functors(p2, p1))) is not None


@given(seeds)
def test_pairing_map_matches_free_and_transitive(seed):
    rng = rng_of(seed)
    g, h = random_groupoid(rng, 6), random_groupoid(rng, 6)
    for b in (bibundle_from_functor(random_functor(h, g, rng)),
              reverse_bibundle(bibundle_from_functor(random_functor(h, g, rng)))):
        assert validate_bibundle(b, check_principal=False) == []
        assert pairing_is_bijective(b) == (validate_bibundle(b) == [])


@given(seeds)
def test_tensor_is_associative_up_to_isomorphism(seed):
    _, (b1, b2, b3) = principal_chain(rng_of(seed), 3, max_arrows=5)
    lhs, _ = bibundle_tensor(bibundle_tensor(b1, b2)[0], b3)
    rhs, _ = bibundle_tensor(b1, bibundle_tensor(b2, b3)[0])
    assert validate_bibundle(lhs) == [] and validate_bibundle(rhs) == []
    assert bibundle_isomorphic(lhs, rhs) is not None


@given(seeds)
def test_measure_of_a_composite_through_the_quotient(seed):
    rng = rng_of(seed)
    (g, _, _), (b1, b2) = principal_chain(rng, 2)
    c = [int(rng.integers(1, 9)) for _ in range(g.n_objects)]
    haar = haar_from_source_weights(g, c)
    mu1 = induced_measure(b1, haar).mu
    t, orbit_of = bibundle_tensor(b1, b2)
    mu12 = induced_measure(t, haar).mu
    for (m, n), o in orbit_of.items():
        assert mu12[o] == mu1[m]

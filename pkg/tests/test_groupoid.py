import itertools

import numpy as np
import pytest
from hypothesis import given

from conftest import rng_of, seeds
from groupoid_morita.errors import StructureError
from groupoid_morita.groupoid import (FiniteGroupoid, GroupoidFunctor, NaturalIsomorphism, action_groupoid,
                                      build_standard, compose_functors, cyclic_group_table, from_tables,
                                      group_groupoid, identity_functor, naturally_isomorphic, orbits,
                                      pair_groupoid, product, random_functor, random_groupoid,
                                      symmetric_group_table, unit_groupoid, validate_functor, validate_groupoid)


def z2():
    return group_groupoid(cyclic_group_table(2), name="z2")


def with_table(g, **tables):
    parts = {k: getattr(g, k).copy() for k in ("src", "tgt", "unit", "inv", "comp")}
    parts.update(tables)
    return FiniteGroupoid(g.objects, g.arrows, name=g.name, **parts)


def test_unit_groupoid_on_two_labelled_points():
    g = from_tables(["a", "b"], ["1a", "1b"], {"1a": "a", "1b": "b"}, {"1a": "a", "1b": "b"},
                    {"a": "1a", "b": "1b"}, {"1a": "1a", "1b": "1b"}, [("1a", "1a", "1a"), ("1b", "1b", "1b")])
    assert validate_groupoid(g) == []


def test_pair3_associativity_by_enumeration():
    g = pair_groupoid(3)
    assert validate_groupoid(g) == []
    # independent oracle on labels: (i,j)(j,k) = (i,k)
    lab = {x: tuple(int(c) for c in g.arrows[x].strip("()").split(",")) for x in range(g.n_arrows)}
    for x, y, z in itertools.product(range(g.n_arrows), repeat=3):
        (i, j), (j2, k), (k2, l) = lab[x], lab[y], lab[z]
        if j == j2 and k == k2:
            assert lab[g.comp[g.comp[x, y], z]] == (i, l) == lab[g.comp[x, g.comp[y, z]]]
        if j == j2:
            assert lab[g.comp[x, y]] == (i, k)
        else:
            assert g.comp[x, y] == -1


def test_misset_inverse_is_reported_with_witness():
    g = pair_groupoid(2)
    x = g.arrow("(1,2)")
    inv = g.inv.copy()
    inv[x] = x
    report = validate_groupoid(with_table(g, inv=inv))
    assert any(v.axiom == "inverse" and v.witness == ("(1,2)",) for v in report)


def test_dangling_id_is_a_structure_error():
    g = pair_groupoid(2)
    comp = g.comp.copy()
    comp[0, 0] = 17
    with pytest.raises(StructureError, match="17"):
        with_table(g, comp=comp)
    with pytest.raises(StructureError, match="unknown arrow"):
        from_tables(["a"], ["e"], {"e": "a"}, {"e": "a"}, {"a": "e"}, {"e": "e"}, [("e", "e", "f")])


def test_standard_counts():
    p = build_standard("pair", 2)
    assert (p.n_objects, p.n_arrows) == (2, 4)
    g = build_standard("group", cyclic_group_table(2).mul)
    assert (g.n_objects, g.n_arrows) == (1, 2)
    a = 1 - g.unit[0]
    assert g.comp[a, a] == g.unit[0]
    act = build_standard("action", (cyclic_group_table(2), [[0, 1], [1, 0]]))
    assert (act.n_objects, act.n_arrows) == (2, 4)
    assert validate_groupoid(act) == []
    # brute-force orbit enumeration from the hom sets
    linked = {(u, v) for u in range(2) for v in range(2) if len(act.hom(u, v))}
    assert linked == {(0, 0), (0, 1), (1, 0), (1, 1)}
    assert len(orbits(act)) == 1


def test_action_groupoid_rejects_non_action():
    with pytest.raises(StructureError):
        action_groupoid(cyclic_group_table(2), [[1, 0], [1, 0]])


@pytest.mark.parametrize("g", [unit_groupoid(1), unit_groupoid(4), pair_groupoid(1), pair_groupoid(3), z2(),
                               group_groupoid(cyclic_group_table(5)), group_groupoid(symmetric_group_table(3)),
                               action_groupoid(symmetric_group_table(3), [[int(p[k]) - 1 for k in range(3)]
                                                                          for p in symmetric_group_table(3).labels]),
                               product(pair_groupoid(2), z2())])
def test_standard_groupoids_validate(g):
    assert validate_groupoid(g) == []
    assert np.array_equal(g.inv[g.inv], np.arange(g.n_arrows))
    for x in range(g.n_arrows):
        assert g.comp[g.unit[g.tgt[x]], x] == x


def test_identity_functor_is_two_sided_unit():
    rng = rng_of(3)
    g, h = random_groupoid(rng, 8), random_groupoid(rng, 8)
    f = random_functor(g, h, rng)
    assert compose_functors(identity_functor(g), f) == f
    assert compose_functors(f, identity_functor(h)) == f


def test_constant_functors_compose_pointwise():
    p, a, b = pair_groupoid(2), z2(), z2()
    f = GroupoidFunctor(p, a, [0, 0], [0] * 4)
    gen = 1 - b.unit[0]
    g = GroupoidFunctor(a, b, [0], [b.unit[0], gen])
    for fn in (f, g):
        assert validate_functor(fn) == []
    h = compose_functors(f, g)
    for x in range(p.n_arrows):
        assert h.phi1[x] == g.phi1[f.phi1[x]]
    assert validate_functor(h) == []


def test_reflexive_witness_is_units():
    rng = rng_of(5)
    g, h = random_groupoid(rng), random_groupoid(rng)
    f = random_functor(g, h, rng)
    eta = naturally_isomorphic(f, f)
    assert eta is not None
    assert eta.eta == tuple(int(h.unit[f.phi0[u]]) for u in range(g.n_objects))


def test_two_unit_choices_are_connected():
    a, p = z2(), pair_groupoid(2)
    f = GroupoidFunctor(a, p, [0], [p.unit[0]] * 2)
    g = GroupoidFunctor(a, p, [1], [p.unit[1]] * 2)
    eta = naturally_isomorphic(f, g)
    assert eta is not None and eta.violations() == []
    assert p.arrows[eta.eta[0]] == "(2,1)"
    # exhaustive oracle: exactly the arrows 1 -> 2 are natural
    natural = [x for x in p.hom(0, 1) if not NaturalIsomorphism(f, g, (int(x),)).violations()]
    assert natural == [eta.eta[0]]


def test_disconnected_images_have_no_witness():
    a, u = z2(), unit_groupoid(2)
    f = GroupoidFunctor(a, u, [0], [0, 0])
    g = GroupoidFunctor(a, u, [1], [1, 1])
    assert naturally_isomorphic(f, g) is None


@given(seeds)
def test_random_groupoids_and_functors_validate(seed):
    rng = rng_of(seed)
    g, h = random_groupoid(rng), random_groupoid(rng)
    assert validate_groupoid(g) == []
    assert validate_functor(random_functor(g, h, rng)) == []


@given(seeds)
def test_natural_isomorphism_reflexive_and_symmetric(seed):
    rng = rng_of(seed)
    g, h = random_groupoid(rng, 6), random_groupoid(rng, 6)
    f1, f2 = random_functor(g, h, rng), random_functor(g, h, rng)
    assert naturally_isomorphic(f1, f1) is not None
    fwd, back = naturally_isomorphic(f1, f2), naturally_isomorphic(f2, f1)
    assert (fwd is None) == (back is None)
    if fwd is not None:
        assert fwd.violations() == [] and fwd.inverse().violations() == []

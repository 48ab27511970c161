from fractions import Fraction

import pytest
from hypothesis import given

from conftest import rng_of, seeds
from groupoid_morita.errors import StructureError
from groupoid_morita.groupoid import (GroupoidFunctor, cyclic_group_table, disjoint_union, group_groupoid,
                                      identity_functor, pair_groupoid, random_groupoid)
from groupoid_morita.measure import (HaarSystem, MeasuredGroupoid, counting_haar, counting_measured,
                                     haar_from_source_weights, measured_functor_check, random_measured,
                                     validate_haar)


def test_counting_haar_on_pair3_and_z2():
    p = pair_groupoid(3)
    assert counting_haar(p).weight == (1,) * 9
    assert validate_haar(counting_measured(p)) == []
    z = group_groupoid(cyclic_group_table(2))
    assert counting_haar(z).weight == (1, 1)
    assert validate_haar(counting_measured(z)) == []


def test_non_invariant_weight_is_caught():
    p = pair_groupoid(2)
    w = [Fraction(1)] * 4
    w[p.arrow("(1,2)")] = Fraction(2)
    report = validate_haar(MeasuredGroupoid(p, HaarSystem(w), (1, 1)))
    assert report
    # brute force: every composable (x, y) with w(xy) != w(y)
    expected = {(p.arrows[x], p.arrows[y]) for x, y, xy in p.composable_pairs if w[xy] != w[y]}
    assert {v.witness for v in report} == expected
    assert ("(2,1)", "(1,2)") in expected


def test_group_bundle_fiberwise_constant_weights():
    g = disjoint_union([group_groupoid(cyclic_group_table(2)), group_groupoid(cyclic_group_table(3))])
    c = [Fraction(3, 2), Fraction(7)]
    mg = MeasuredGroupoid(g, HaarSystem([c[t] for t in g.tgt]), (1, 1))
    assert validate_haar(mg) == []


def test_zero_weight_rejected():
    with pytest.raises(StructureError):
        MeasuredGroupoid(pair_groupoid(1), HaarSystem([0]), (1,))


def test_uniform_measure_is_unimodular():
    mg = counting_measured(pair_groupoid(3))
    assert set(mg.modular.delta) == {1}


def test_modular_function_of_skewed_base():
    p = pair_groupoid(2)
    mg = MeasuredGroupoid(p, counting_haar(p), (1, 2))
    d = mg.modular.delta
    # nu(i,j) = base(i): Delta(1,2) = base(1)/base(2)
    assert d[p.arrow("(1,2)")] == Fraction(1, 2)
    assert d[p.arrow("(2,1)")] == 2
    assert mg.modular.violations(p) == []


def test_identity_functor_ratio_is_one():
    mg = random_measured(pair_groupoid(3), rng_of(1))
    rep = measured_functor_check(identity_functor(mg.g), mg, mg)
    assert rep.ok and set(rep.ratio.values()) == {1}


def test_pushforward_to_point_carries_total_mass():
    p, point = pair_groupoid(2), pair_groupoid(1)
    dom = MeasuredGroupoid(p, counting_haar(p), (Fraction(1, 3), Fraction(5, 2)))
    rep = measured_functor_check(GroupoidFunctor(p, point, [0, 0], [0] * 4), dom, counting_measured(point))
    assert rep.ok
    assert rep.pushed_mass == {"1": Fraction(1, 3) + Fraction(5, 2)}


@given(seeds)
def test_counting_haar_always_validates(seed):
    g = random_groupoid(rng_of(seed))
    assert validate_haar(counting_measured(g)) == []


@given(seeds)
def test_modular_function_is_a_homomorphism(seed):
    rng = rng_of(seed)
    mg = random_measured(random_groupoid(rng), rng)
    assert validate_haar(mg) == []
    assert mg.modular.violations(mg.g) == []


@given(seeds)
def test_total_mass_splits_over_base(seed):
    rng = rng_of(seed)
    g = random_groupoid(rng)
    c = [Fraction(int(rng.integers(1, 9)), int(rng.integers(1, 5))) for _ in range(g.n_objects)]
    mg = MeasuredGroupoid(g, haar_from_source_weights(g, c), random_measured(g, rng).base)
    fiber_mass = [sum((mg.weight[x] for x in g.t_fiber(u)), Fraction(0)) for u in range(g.n_objects)]
    assert mg.total_mass() == sum(b * m for b, m in zip(mg.base, fiber_mass))

from fractions import Fraction

import numpy as np
from hypothesis import given

from conftest import random_chain, rng_of, seeds
from groupoid_morita import linalg
from groupoid_morita.algebra import regular_representation
from groupoid_morita.correspondence import (build_correspondence, find_intertwiner, fusion_intertwiner,
                                            inner_product_table, inner_product_valued, relative_tensor,
                                            saup_inner_product_table, standard_correspondence, unit_law_check)
from groupoid_morita.groupoid import (GroupoidFunctor, compose_functors, cyclic_group_table, group_groupoid,
                                      identity_functor, pair_groupoid, random_functor, random_groupoid,
                                      unit_groupoid)
from groupoid_morita.measure import counting_measured, random_measured

TOL = 1e-9


def z2():
    return group_groupoid(cyclic_group_table(2), name="z2")


def test_identity_functor_gives_the_standard_form():
    rng = rng_of(0)
    mg = random_measured(random_groupoid(rng), rng)
    c = build_correspondence(identity_functor(mg.g), mg, mg)
    assert sorted(h for _, h in c.basis) == list(range(mg.g.n_arrows))
    assert all(u == mg.g.tgt[h] for u, h in c.basis)
    assert unit_law_check(mg).passed


def test_point_into_z2_carries_the_right_regular_representation():
    g, z = unit_groupoid(1), z2()
    mz = counting_measured(z)
    c = build_correspondence(GroupoidFunctor(g, z, [0], [z.unit[0]]), counting_measured(g), mz)
    assert c.dim == 2
    assert [h for _, h in c.basis] == [0, 1]
    assert np.allclose(c.right, regular_representation(mz).right_normalized)
    # generator acts by the swap
    assert np.allclose(c.right[1], [[0, 1], [1, 0]])


def test_constant_functor_to_a_point():
    p, pt = pair_groupoid(2), unit_groupoid(1)
    c = build_correspondence(GroupoidFunctor(p, pt, [0, 0], [0] * 4), counting_measured(p), counting_measured(pt))
    assert c.basis == ((0, 0), (1, 0))
    assert np.allclose(c.right[0], np.eye(2))
    # hand expansion: delta_(i,j) sends the basis vector at j to the one at i
    for x in range(4):
        i, j = divmod(x, 2)
        expected = np.zeros((2, 2))
        expected[i, j] = 1
        assert np.allclose(c.left[x], expected)


def test_inner_product_of_one_delta():
    rng = rng_of(4)
    H, K = random_groupoid(rng, 6), random_groupoid(rng, 6)
    mH, mK = random_measured(H, rng), random_measured(K, rng)
    psi = random_functor(H, K, rng)
    c = build_correspondence(psi, mH, mK)
    for i, (u, k) in enumerate(c.basis):
        d = np.zeros(c.dim)
        d[i] = 1
        v = inner_product_valued(d, d, c)
        assert np.isclose(v[H.unit[u]], float(mK.weight[k]))
        for h in range(H.n_arrows):
            if H.src[h] != u or H.tgt[h] != u:
                assert v[h] == 0


def test_deltas_over_different_objects_are_orthogonal():
    u = unit_groupoid(2)
    mu = counting_measured(u)
    c = build_correspondence(identity_functor(u), mu, mu)
    a, b = np.eye(2)
    assert not inner_product_valued(a, b, c).any()


def test_inner_product_satisfies_its_defining_property():
    rng = rng_of(9)
    H, K = random_groupoid(rng, 6), random_groupoid(rng, 6)
    mH, mK = random_measured(H, rng), random_measured(K, rng)
    c = build_correspondence(random_functor(H, K, rng), mH, mK)
    raw_scale = c.scaling
    w = np.array([float(x) for x in c.weights])
    for _ in range(20):
        p1, p2 = (rng.normal(size=c.dim) + 1j * rng.normal(size=c.dim) for _ in range(2))
        f = rng.normal(size=H.n_arrows) + 1j * rng.normal(size=H.n_arrows)
        lhs = np.sum(mH.nu_array * np.conj(f) * inner_product_valued(p1, p2, c))
        jf = mH.delta_array ** -0.5 * np.conj(f[H.inv])
        op = c.act_left(jf) / raw_scale[:, None] * raw_scale[None, :]
        rhs = np.sum(w * np.conj(p1) * (op @ p2))
        assert abs(lhs - rhs) < TOL * max(1.0, abs(lhs))


def test_closed_form_and_pairing_form_of_inner_product_agree():
    rng = rng_of(10)
    H, K = random_groupoid(rng), random_groupoid(rng)
    mH, mK = random_measured(H, rng), random_measured(K, rng)
    c = build_correspondence(random_functor(H, K, rng), mH, mK)
    s = c.scaling
    closed = inner_product_table(c) / s[:, None, None] / s[None, :, None]
    assert linalg.max_abs(closed - saup_inner_product_table(c)) < TOL


def test_unit_laws_of_fusion():
    rng = rng_of(2)
    mG, mH = (random_measured(random_groupoid(rng, 6), rng) for _ in range(2))
    c = build_correspondence(random_functor(mG.g, mH.g, rng), mG, mH)
    right = relative_tensor(c, standard_correspondence(mH))
    left = relative_tensor(standard_correspondence(mG), c)
    assert find_intertwiner(right, c).found
    assert find_intertwiner(left, c).found


def test_fusion_dimension_is_the_form_rank():
    p, z, pt = unit_groupoid(1), z2(), unit_groupoid(1)
    mp, mz, mpt = counting_measured(p), counting_measured(z), counting_measured(pt)
    c1 = build_correspondence(GroupoidFunctor(p, z, [0], [z.unit[0]]), mp, mz)
    c2 = build_correspondence(GroupoidFunctor(z, pt, [0], [0, 0]), mz, mpt)
    fused = relative_tensor(c1, c2)
    assert linalg.rank(fused.form) == fused.dim == 1
    assert fused.dim < c1.dim * c2.dim


def test_identity_fusion():
    rng = rng_of(5)
    mg = random_measured(random_groupoid(rng), rng)
    i = identity_functor(mg.g)
    rep = fusion_intertwiner(i, i, mg, mg, mg)
    assert rep.passed and rep.fused_dim == mg.g.n_arrows


def test_point_z2_z2_chain():
    p, z = unit_groupoid(1), z2()
    mp, mz = counting_measured(p), counting_measured(z)
    rep = fusion_intertwiner(GroupoidFunctor(p, z, [0], [z.unit[0]]), identity_functor(z), mp, mz, mz)
    assert rep.passed
    assert rep.unitary.shape == (2, 2)
    assert np.allclose(rep.unitary.conj().T @ rep.unitary, np.eye(2))


@given(seeds)
def test_random_fusion_chains(seed):
    ms, (f1, f2) = random_chain(rng_of(seed), 2)
    rep = fusion_intertwiner(f1, f2, *ms)
    assert rep.passed, rep.to_dict()


@given(seeds)
def test_fusion_is_associative_up_to_unitary(seed):
    ms, (f1, f2, f3) = random_chain(rng_of(seed), 3, max_arrows=6)
    c1, c2, c3 = (build_correspondence(f, a, b) for f, a, b in zip((f1, f2, f3), ms, ms[1:]))
    lhs = relative_tensor(relative_tensor(c1, c2), c3)
    rhs = relative_tensor(c1, relative_tensor(c2, c3))
    assert find_intertwiner(lhs, rhs).found
    # both are L^2 of the composite functor
    whole = build_correspondence(compose_functors(compose_functors(f1, f2), f3), ms[0], ms[3])
    assert find_intertwiner(lhs, whole).found


@given(seeds)
def test_rescaling_base_measures_keeps_certificates(seed):
    rng = rng_of(seed)
    ms, (f1, f2) = random_chain(rng, 2)
    rescaled = [m.rescaled([Fraction(int(rng.integers(1, 20)), int(rng.integers(1, 7)))
                            for _ in range(m.g.n_objects)]) for m in ms]
    assert fusion_intertwiner(f1, f2, *ms).passed
    assert fusion_intertwiner(f1, f2, *rescaled).passed

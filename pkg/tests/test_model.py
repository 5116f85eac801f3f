import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bphlife.model import (TABLE1, ModelParams, ParameterError, assemble_generator, build_layout,
                           build_model, validate_params)

from oracles import dense_generator


def test_table1_is_valid():
    assert validate_params(TABLE1) is TABLE1


@pytest.mark.parametrize("change, field", [
    ({"n": 0}, "n"),
    ({"i": 201}, "i"),
    ({"j": 0}, "j"),
    ({"lambda_c": -1e-3}, "lambda_c"),
    ({"b_f": float("nan")}, "b_f"),
])
def test_invalid_field_is_named(change, field):
    with pytest.raises(ParameterError) as info:
        validate_params(TABLE1.replace(**change))
    assert field in info.value.problems
    assert field in str(info.value)


def test_every_violation_reported():
    with pytest.raises(ParameterError) as info:
        validate_params(TABLE1.replace(a_m=-1.0, lambda_=-2.0, i=500))
    assert set(info.value.problems) == {"a_m", "lambda_", "i"}


def test_small_multiplier_only_warns():
    with pytest.warns(UserWarning, match="lambda_wf"):
        validate_params(TABLE1.replace(lambda_wf=0.5))


@pytest.mark.parametrize("n, i, j, dims", [
    (200, 89, 80, (112, 112, 121, 578)),
    (3, 1, 1, (3, 3, 3, 15)),
    (5, 2, 4, (2, 4, 2, 14)),
])
def test_layout_dimensions(n, i, j, dims):
    L = build_layout(TABLE1.replace(n=n, i=i, j=j))
    assert (L.d0, L.d1, L.d2, L.dim) == dims


small_params = st.integers(1, 12).flatmap(
    lambda n: st.tuples(st.just(n), st.integers(1, n), st.integers(1, n))
)


@given(small_params)
def test_layout_maps_are_bijective(nij):
    n, i, j = nij
    L = build_layout(TABLE1.replace(n=n, i=i, j=j))
    seen = []
    for block in L.BLOCKS:
        for l in range(1, L.block_size(block) + 1):
            flat = L.index(block, l)
            assert L.label(flat) == (block, l)
            seen.append(flat)
    assert sorted(seen) == list(range(L.dim))


def test_layout_ages():
    L = build_layout(TABLE1.replace(n=10, i=3, j=5))
    assert L.ages(L.joint(2)) == (4, 6)
    assert L.ages(L.widower_recovered(4)) == (6, None)
    assert L.ages(L.widow_bereaved(1)) == (None, 5)


def toy(**kw):
    base = dict(a_m=0.001, b_m=0.0, c_m=0.0, a_f=0.001, b_f=0.0, c_f=0.0, lambda_c=0.0002,
                lambda_=2.0, lambda_in=2.3707, lambda_rm=10.0, lambda_rf=5.0,
                lambda_wm=6.0, lambda_wf=4.0, n=3, i=1, j=1)
    base.update(kw)
    return ModelParams(**base)


def test_toy_entries():
    gen = build_model(toy())
    L = gen.layout
    Q = gen.Q.toarray()
    assert Q[L.joint(1), L.joint(1)] == pytest.approx(-2.0022, abs=1e-15)
    assert Q[L.widower_bereaved(1), L.widower_bereaved(1)] == pytest.approx(-12.3767, abs=1e-12)
    assert Q[L.widower_bereaved(1), L.widower_recovered(2)] == 10.0
    assert Q[L.joint(1), L.widower_bereaved(2)] == pytest.approx(0.001)
    assert Q[L.joint(1), L.widow_bereaved(2)] == pytest.approx(0.001)


def test_common_shock_is_only_joint_exit_at_start():
    gen = build_model(TABLE1.replace(i=1, j=1))
    assert gen.q[gen.layout.joint(1)] == pytest.approx(0.0002, rel=1e-9)


def test_equal_ages_top_state_targets_top_bereavement_states():
    gen = build_model(toy(n=4, i=2, j=2))
    L, p = gen.layout, gen.params
    Q = gen.Q.toarray()
    top = L.joint(L.d0)
    assert Q[top, L.widower_bereaved(L.d1)] == pytest.approx(p.female_rate(4))
    assert Q[top, L.widow_bereaved(L.d2)] == pytest.approx(p.male_rate(4))
    assert gen.q[top] == pytest.approx(p.lambda_c)


@pytest.mark.parametrize("i, j", [(3, 7), (7, 3), (5, 5), (1, 10), (10, 10)])
def test_matches_dense_construction(i, j):
    p = TABLE1.replace(n=10, i=i, j=j, b_m=1e-4, b_f=2e-4, c_m=2.5, c_f=2.0)
    gen = build_model(p)
    np.testing.assert_allclose(gen.Q.toarray(), dense_generator(p), rtol=0, atol=1e-15)


def test_table1_scale_matches_dense(table1_params, table1_gen):
    np.testing.assert_allclose(table1_gen.Q.toarray(), dense_generator(table1_params), rtol=1e-15, atol=0)


random_params = st.builds(
    lambda nij, a, b, c, lc, lam, lin, lr, lw: ModelParams(
        a_m=a[0], b_m=b[0], c_m=c[0], a_f=a[1], b_f=b[1], c_f=c[1],
        lambda_c=lc, lambda_=lam, lambda_in=lin, lambda_rm=lr[0], lambda_rf=lr[1],
        lambda_wm=lw[0], lambda_wf=lw[1], n=nij[0], i=nij[1], j=nij[2]),
    small_params,
    st.tuples(*[st.floats(0, 0.05)] * 2),
    st.tuples(*[st.floats(0, 1e-3)] * 2),
    st.tuples(*[st.floats(0, 4)] * 2),
    st.floats(0, 0.1),
    st.floats(0, 5),
    st.floats(0, 5),
    st.tuples(*[st.floats(0, 20)] * 2),
    st.tuples(*[st.floats(1, 10)] * 2),
)


@settings(max_examples=150, deadline=None)
@given(random_params)
def test_generator_invariants(p):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        gen = build_model(p)
    Q = gen.Q.toarray()
    L = gen.layout
    off = Q - np.diag(np.diag(Q))
    assert np.all(off >= 0)
    assert np.all(np.diag(Q) <= 0)
    assert np.all(gen.q >= 0)
    np.testing.assert_allclose(Q.sum(axis=1) + gen.q, 0, atol=1e-12)

    # upper block triangular
    J, M, F = L.joint_slice, L.widower_slice, L.widow_slice
    for rows, cols in ((M, J), (F, J), (M, F), (F, M)):
        assert not np.any(Q[rows, cols])

    # common shock is the only route from the joint block to absorption
    np.testing.assert_allclose(gen.q[J], p.lambda_c, rtol=1e-9, atol=1e-12)

    # bereaved death rate = multiplier x recovered death rate at the same age
    for mult, bereaved, recovered, d in ((p.lambda_wm, L.widower_bereaved, L.widower_recovered, L.d1),
                                         (p.lambda_wf, L.widow_bereaved, L.widow_recovered, L.d2)):
        for l in range(1, d + 1):
            assert gen.q[bereaved(l)] == pytest.approx(mult * gen.q[recovered(l)], rel=1e-9, abs=1e-12)

    np.testing.assert_array_equal(gen.g1 * gen.g2, np.r_[np.ones(L.d0), np.zeros(L.dim - L.d0)])
    assert gen.pi.sum() == 1.0 and gen.pi[L.joint(1)] == 1.0


@given(small_params)
def test_no_bereavement_effect_collapses_phases(nij):
    n, i, j = nij
    p = TABLE1.replace(n=n, i=i, j=j, lambda_wm=1.0, lambda_wf=1.0, lambda_rm=0.0, lambda_rf=0.0)
    gen = build_model(p)
    L = gen.layout
    Q = gen.Q.toarray()
    for d, b0, r0 in ((L.d1, L.widower_bereaved(1), L.widower_recovered(1)),
                      (L.d2, L.widow_bereaved(1), L.widow_recovered(1))):
        bereaved = Q[b0:b0 + d, b0:b0 + d]
        recovered = Q[r0:r0 + d, r0:r0 + d]
        np.testing.assert_array_equal(bereaved, recovered)


def test_generator_is_read_only(table1_gen):
    with pytest.raises(ValueError):
        table1_gen.q[0] = 1.0
    with pytest.raises(AttributeError):
        table1_gen.params = TABLE1


def test_assemble_accepts_explicit_layout():
    p = toy(n=6, i=2, j=3)
    a = assemble_generator(p, build_layout(p))
    b = build_model(p)
    assert (a.Q != b.Q).nnz == 0

"""Sp(2), its algebra, the exponential, Haar sampling and the U-action."""

import math

import numpy as np
import pytest
import scipy.linalg

from gmsphere.quat import ImQuaternion, Quaternion, mul
from gmsphere.sp2 import (AlgebraElement, GroupElement, QMatrix2, alg_diag,
                          alg_p, alg_h, bracket, exp, haar_sample,
                          random_algebra_element, trace_inner, u_action)

QI = Quaternion(0, 1, 0, 0)
IM_I, IM_J, IM_K = ImQuaternion(1, 0, 0), ImQuaternion(0, 1, 0), ImQuaternion(0, 0, 1)

# frozen regression: haar_sample(42), see also the unitarity residual bound
HAAR_SEED42 = [
    0.10614793844653536, -0.3622775887178862, 0.2614190428832837, 0.32764492788174815,
    0.4048105866463317, -0.5220673720212488, 0.40072595929515537, 0.2911858559142493,
    -0.6796414670262348, -0.45361313600194075, 0.04453309692163368, -0.11016284106329674,
    0.34866907632503835, 0.4392535090061793, 0.05958338116765421, -0.011815312157377937,
]


def test_bracket_examples():
    X = random_algebra_element(np.random.default_rng(0))
    assert bracket(X, X).norm() < 1e-14
    B = bracket(alg_diag(IM_I, ImQuaternion()), alg_diag(IM_J, ImQuaternion()))
    assert (B.x1 - ImQuaternion(0, 0, 2)).norm() < 1e-15
    assert B.x2.norm() == 0 and B.off.norm() == 0


def test_bracket_skew_and_jacobi():
    rng = np.random.default_rng(1)
    for _ in range(200):
        X, Y, Z = (random_algebra_element(rng) for _ in range(3))
        assert bracket(X, Y).to_qmatrix().skew_residual() < 1e-12
        jac = (bracket(X, bracket(Y, Z)) + bracket(Y, bracket(Z, X))
               + bracket(Z, bracket(X, Y)))
        assert jac.norm() < 1e-10 * max(1.0, X.norm() * Y.norm() * Z.norm())


def test_trace_inner_examples():
    assert trace_inner(alg_h(IM_I), alg_h(IM_I)) == pytest.approx(2.0)
    assert trace_inner(alg_diag(IM_I, ImQuaternion()),
                       alg_diag(ImQuaternion(), IM_I)) == 0.0
    assert trace_inner(alg_p(Quaternion(1)), alg_p(Quaternion(1))) == pytest.approx(2.0)


def test_trace_inner_ad_invariance():
    rng = np.random.default_rng(2)
    for _ in range(200):
        X, Y, Z = (random_algebra_element(rng) for _ in range(3))
        val = trace_inner(bracket(Z, X), Y) + trace_inner(X, bracket(Z, Y))
        assert abs(val) < 1e-10 * max(1.0, X.norm() * Y.norm() * Z.norm())


def test_decomposition_roundtrip_and_symmetric_pairs():
    rng = np.random.default_rng(3)
    for _ in range(100):
        X = random_algebra_element(rng)
        Y = random_algebra_element(rng)
        back = X.p_component() + X.q_component() + X.h_component()
        assert (X - back).norm() < 1e-14
        # orthogonality of the three blocks in the trace metric
        assert abs(trace_inner(X.p_component(), Y.k_component())) < 1e-12
        assert abs(trace_inner(X.q_component(), Y.h_component())) < 1e-12
        # [p,p] in k, [k,p] in p
        assert bracket(X.p_component(), Y.p_component()).off.norm() < 1e-12
        Bkp = bracket(X.k_component(), Y.p_component())
        assert Bkp.x1.norm() + Bkp.x2.norm() < 1e-12
        # [q,q] in h, [h,q] in q
        assert bracket(X.q_component(), Y.q_component()).q_entry.norm() < 1e-12
        assert bracket(X.h_component(), Y.q_component()).h_entry.norm() < 1e-12


# exp ---------------------------------------------------------------------------

def test_exp_examples():
    assert (exp(AlgebraElement()).mat - QMatrix2.identity()).frobenius() == 0
    E = exp(alg_diag(ImQuaternion(math.pi / 2, 0, 0), ImQuaternion()))
    assert (E.a - QI).norm() < 1e-14
    assert (E.d - Quaternion(1)).norm() < 1e-14
    E = exp(alg_p(Quaternion(math.pi / 2)))
    assert (E.a - Quaternion()).norm() < 1e-13
    assert (E.b - Quaternion(-1)).norm() < 1e-13
    assert (E.c - Quaternion(1)).norm() < 1e-13


def test_exp_unitary_homomorphism():
    rng = np.random.default_rng(4)
    for _ in range(50):
        X = random_algebra_element(rng, unit=True)
        g = exp(X)
        assert g.mat.unitarity_residual() < 1e-12
        s, t = rng.uniform(-1, 1, 2)
        lhs = exp(X.scale(s)).mat @ exp(X.scale(t)).mat
        rhs = exp(X.scale(s + t)).mat
        assert (lhs - rhs).frobenius() < 1e-9


def test_exp_against_scipy_embedding():
    # independent oracle: expm of the complex 4x4 embedding
    rng = np.random.default_rng(5)
    for _ in range(25):
        X = random_algebra_element(rng)
        ours = exp(X).mat.to_complex4()
        ref = scipy.linalg.expm(X.to_qmatrix().to_complex4())
        assert np.abs(ours - ref).max() < 1e-12 * max(1.0, np.abs(ref).max())


# haar --------------------------------------------------------------------------

def test_haar_seed42_regression():
    g = haar_sample(42)
    assert np.abs(g.to_flat16() - np.array(HAAR_SEED42)).max() < 1e-15
    assert g.mat.unitarity_residual() < 1e-10


def test_haar_distinct_seeds():
    assert np.abs(haar_sample(1).to_flat16() - haar_sample(2).to_flat16()).max() > 1e-3


def test_haar_mean_a2():
    rng = np.random.default_rng(123)
    n = 100000
    tot = sum(haar_sample(rng).a.norm2() for _ in range(n))
    assert tot / n == pytest.approx(0.5, abs=0.01)


def test_haar_translation_invariance_statistics():
    # the law is invariant under fixed left/right translations: compare
    # moments of smooth functionals across translated streams
    rng = np.random.default_rng(7)
    left = haar_sample(rng)
    right = haar_sample(rng)
    n = 4000

    def stats(transform):
        rr = np.random.default_rng(99)
        vals = np.empty(n)
        for k in range(n):
            g = transform(haar_sample(rr))
            vals[k] = g.a.norm2() + 0.5 * g.b.w
        return vals.mean()

    base = stats(lambda g: g)
    lshift = stats(lambda g: left @ g)
    rshift = stats(lambda g: g @ right)
    # CLT scale ~ 0.5/sqrt(n) ~ 0.008; allow 5 sigma
    assert abs(lshift - base) < 0.045
    assert abs(rshift - base) < 0.045


# u_action ------------------------------------------------------------------------

def test_u_action_examples():
    g = haar_sample(10)
    assert (u_action(Quaternion(1), g).to_flat16() - g.to_flat16() != 0).sum() == 0
    q = Quaternion.from_array(np.random.default_rng(11).standard_normal(4)).normalized()
    acted = u_action(q, GroupElement.identity())
    assert (acted.a - Quaternion(1)).norm() < 1e-14
    assert (acted.d - q.conjugate()).norm() < 1e-14


def test_u_action_entry_identities_and_invariants():
    rng = np.random.default_rng(12)
    for _ in range(100):
        g = haar_sample(rng)
        q = Quaternion.from_array(rng.standard_normal(4)).normalized()
        acted = u_action(q, g)
        qc = q.conjugate()
        assert (acted.a - mul(mul(q, g.a), qc)).norm() < 1e-12
        assert (acted.b - mul(mul(q, g.b), qc)).norm() < 1e-12
        assert abs(acted.a.norm() - g.a.norm()) < 1e-12
        assert abs(acted.a.im_norm() - g.a.im_norm()) < 1e-12


def test_u_action_is_group_action():
    rng = np.random.default_rng(13)
    for _ in range(60):
        g = haar_sample(rng)
        q1 = Quaternion.from_array(rng.standard_normal(4)).normalized()
        q2 = Quaternion.from_array(rng.standard_normal(4)).normalized()
        lhs = u_action(mul(q1, q2), g)
        rhs = u_action(q1, u_action(q2, g))
        assert np.abs(lhs.to_flat16() - rhs.to_flat16()).max() < 1e-10


def test_u_action_freeness_spot_check():
    rng = np.random.default_rng(14)
    for _ in range(1000):
        g = haar_sample(rng)
        q = Quaternion.from_array(rng.standard_normal(4)).normalized()
        if math.acos(min(1.0, abs(q.w))) < 0.1:  # angle to {+-1} too small
            continue
        moved = np.abs(u_action(q, g).to_flat16() - g.to_flat16()).max()
        assert moved > 1e-4


def test_u_action_rejects_non_unit():
    with pytest.raises(ValueError):
        u_action(Quaternion(2), GroupElement.identity())


def test_flat16_roundtrip():
    g = haar_sample(15)
    back = GroupElement.from_text(g.to_text())
    assert (back.to_flat16() == g.to_flat16()).all()
    back = GroupElement.from_flat16(g.to_flat16())
    assert (back.to_flat16() == g.to_flat16()).all()


def test_group_element_rejects_non_unitary():
    with pytest.raises(ValueError):
        GroupElement(QMatrix2.diag(Quaternion(2), Quaternion(1)))

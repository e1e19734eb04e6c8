"""The contracted metric family, Koszul connection and curvature tensor."""

import math

import numpy as np
import pytest

from gmsphere.quat import ImQuaternion, Quaternion
from gmsphere.sp2 import (alg_diag, alg_p, alg_h, bracket,
                          random_algebra_element, trace_inner, ad_group)
from gmsphere.cheeger import (BI_INVARIANT, MetricParams, algebra_to_coords,
                              coords_to_algebra, curvature_tensor, gram2,
                              inner1, inner2, kappa_G, nabla, norm2_of,
                              orthonormal_frame, product_split_diagnostic,
                              sec_G, tilde, untilde, zero_bracket_residuals)
from gmsphere.zeroset import build_template

IM_I, IM_J = ImQuaternion(1, 0, 0), ImQuaternion(0, 1, 0)
GRID = [MetricParams(s, t) for s in (0.25, 0.5, 0.75) for t in (0.25, 0.5, 0.75)]
M_DEFAULT = MetricParams(0.5, 0.5)


def test_metric_params_validation():
    with pytest.raises(ValueError):
        MetricParams(0.0, 0.5)
    with pytest.raises(ValueError):
        MetricParams(0.5, 1.5)
    m = MetricParams.from_st(1.0, 3.0)
    assert m.s_tilde == pytest.approx(0.5)
    assert m.t_tilde == pytest.approx(0.75)
    assert BI_INVARIANT.is_bi_invariant


def test_inner2_examples():
    rng = np.random.default_rng(0)
    for _ in range(50):
        X, Y = random_algebra_element(rng), random_algebra_element(rng)
        assert inner2(X, Y, BI_INVARIANT) == pytest.approx(trace_inner(X, Y), abs=1e-12)
    m = MetricParams(0.3, 0.7)
    H = alg_h(IM_I)
    assert inner2(H, H, m) == pytest.approx(2 * 0.3 * 0.7)
    assert inner2(alg_p(Quaternion(1)), alg_diag(IM_I, -IM_I), m) == 0.0


def test_inner1_examples_and_tilde_identity():
    m = MetricParams(0.4, 0.6)
    assert inner1(alg_diag(IM_I, ImQuaternion()),
                  alg_diag(IM_I, ImQuaternion()), m) == pytest.approx(0.4)
    rng = np.random.default_rng(1)
    for _ in range(1000):
        X, Y = random_algebra_element(rng), random_algebra_element(rng)
        assert inner2(X, Y, m) == pytest.approx(inner1(tilde(X, m.t_tilde), Y, m), abs=1e-12)
    for _ in range(50):
        X, Y = random_algebra_element(rng), random_algebra_element(rng)
        assert inner1(X, Y, MetricParams(1.0, 1.0)) == pytest.approx(trace_inner(X, Y), abs=1e-12)


def test_tilde_untilde():
    X = alg_p(Quaternion(0.5, 1, 0, 2))
    assert (tilde(X, 0.3) - X).norm() < 1e-15
    H = alg_h(IM_I)
    assert (tilde(H, 0.5) - alg_h(ImQuaternion(0.5, 0, 0))).norm() < 1e-15
    rng = np.random.default_rng(2)
    for _ in range(100):
        X = random_algebra_element(rng)
        assert (untilde(tilde(X, 0.37), 0.37) - X).norm() < 1e-13
    with pytest.raises(ValueError):
        tilde(X, 0.0)
    with pytest.raises(ValueError):
        untilde(X, -1.0)


def test_frame_orthonormal_and_coords():
    rng = np.random.default_rng(3)
    for m in GRID:
        fr = orthonormal_frame(m)
        G = np.array([[inner2(a, b, m) for b in fr] for a in fr])
        assert np.abs(G - np.eye(10)).max() < 1e-12
        for _ in range(20):
            X = random_algebra_element(rng)
            c = algebra_to_coords(X, m)
            assert (coords_to_algebra(c, m) - X).norm() < 1e-12
            Y = random_algebra_element(rng)
            assert inner2(X, Y, m) == pytest.approx(
                float(c @ algebra_to_coords(Y, m)), abs=1e-10)


def test_connection_bi_invariant_limit():
    rng = np.random.default_rng(4)
    for _ in range(100):
        X, Y = random_algebra_element(rng), random_algebra_element(rng)
        half = bracket(X, Y).scale(0.5)
        assert (nabla(X, Y, BI_INVARIANT) - half).norm() < 1e-10


def test_connection_compatibility_torsion():
    rng = np.random.default_rng(5)
    for _ in range(1000):
        m = MetricParams(rng.uniform(0.2, 1.0), rng.uniform(0.2, 1.0))
        X, Y, Z = (random_algebra_element(rng) for _ in range(3))
        # metric compatibility: <Y,Z> is constant along left-invariant fields
        comp = inner2(nabla(X, Y, m), Z, m) + inner2(Y, nabla(X, Z, m), m)
        assert abs(comp) < 1e-10 * max(1.0, X.norm() * Y.norm() * Z.norm())
        # torsion-freeness
        tors = nabla(X, Y, m) - nabla(Y, X, m) - bracket(X, Y)
        assert norm2_of(tors, m) < 1e-10 * max(1.0, X.norm() * Y.norm())
        # geodesic orthogonality
        assert abs(inner2(nabla(X, X, m), X, m)) < 1e-10 * max(1.0, X.norm() ** 3)


def test_connection_compatibility_definition():
    # <nabla_X Y, Z> + <Y, nabla_X Z> = 0 for left-invariant fields
    rng = np.random.default_rng(6)
    m = MetricParams(0.35, 0.8)
    for _ in range(200):
        X, Y, Z = (random_algebra_element(rng) for _ in range(3))
        val = inner2(nabla(X, Y, m), Z, m) + inner2(Y, nabla(X, Z, m), m)
        assert abs(val) < 1e-10 * max(1.0, X.norm() * Y.norm() * Z.norm())


def test_curvature_symmetries_bianchi():
    for m in (M_DEFAULT, MetricParams(0.9, 0.3), BI_INVARIANT):
        R = curvature_tensor(m).riemann
        assert np.abs(R + R.transpose(1, 0, 2, 3)).max() < 1e-9
        assert np.abs(R + R.transpose(0, 1, 3, 2)).max() < 1e-9
        assert np.abs(R - R.transpose(2, 3, 0, 1)).max() < 1e-9
        assert np.abs(R + R.transpose(1, 2, 0, 3) + R.transpose(2, 0, 1, 3)).max() < 1e-9


def test_kappa_bi_invariant_identity():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        X, Y = random_algebra_element(rng), random_algebra_element(rng)
        B = bracket(X, Y)
        expect = 0.25 * trace_inner(B, B)
        assert kappa_G(X, Y, BI_INVARIANT) == pytest.approx(expect, abs=1e-10 * max(1, expect))


def test_kappa_swap_and_degenerate():
    rng = np.random.default_rng(8)
    m = MetricParams(0.6, 0.4)
    X, Y = random_algebra_element(rng), random_algebra_element(rng)
    assert kappa_G(X, Y, m) == pytest.approx(kappa_G(Y, X, m), rel=1e-12)
    assert abs(kappa_G(X, X, m)) < 1e-12
    with pytest.raises(ValueError):
        sec_G(X, X.scale(2.0), m)
    assert sec_G(X, Y, m) == pytest.approx(kappa_G(X, Y, m) / gram2(X, Y, m))


def test_metric_h_ad_invariance():
    # inner2 is Ad-invariant under the diagonal subgroup diag(q, q); the
    # full block-diagonal subgroup preserves only the single-contraction
    # metric (it mixes the q- and h-blocks)
    from gmsphere.sp2 import QMatrix2, GroupElement
    rng = np.random.default_rng(9)
    m = MetricParams(0.45, 0.65)
    m1 = MetricParams(0.45, 1.0)
    for _ in range(200):
        q = Quaternion.from_array(rng.standard_normal(4)).normalized()
        p = Quaternion.from_array(rng.standard_normal(4)).normalized()
        kh = GroupElement(QMatrix2.diag(q, q))
        kk = GroupElement(QMatrix2.diag(p, q))
        X, Y = random_algebra_element(rng), random_algebra_element(rng)
        assert inner2(ad_group(kh, X), ad_group(kh, Y), m) == pytest.approx(
            inner2(X, Y, m), abs=1e-10 * max(1, X.norm() * Y.norm()))
        assert inner2(ad_group(kk, X), ad_group(kk, Y), m1) == pytest.approx(
            inner2(X, Y, m1), abs=1e-10 * max(1, X.norm() * Y.norm()))


def test_template_zero_curvature_across_grid():
    rng = np.random.default_rng(10)
    for _ in range(10):
        y = ImQuaternion.from_vec3(rng.standard_normal(3))
        x = Quaternion.from_array(rng.standard_normal(4))
        xv = rng.standard_normal(3)
        yv = y.to_vec3() / y.norm()
        xv -= (xv @ yv) * yv
        xperp = Quaternion(0, *xv)
        for kind, xx in (("type1", None), ("type2a", x), ("type2b", xperp)):
            tpl = build_template(kind, xx, y)
            for m in GRID:
                X, Y = tpl.plane(m)
                X = X.scale(1.0 / math.sqrt(inner2(X, X, m)))
                Y = Y.scale(1.0 / math.sqrt(inner2(Y, Y, m)))
                assert abs(kappa_G(X, Y, m)) < 1e-10


def test_zero_bracket_residuals():
    m = MetricParams(0.5, 0.75)
    tpl = build_template("type2a", Quaternion(1, 0, 1, 0), ImQuaternion(0, 0, 1))
    X, Y = tpl.plane(m)
    r = zero_bracket_residuals(X, Y, m)
    assert r.max() < 1e-12

    X = alg_diag(IM_I, ImQuaternion())
    Y = alg_diag(IM_J, ImQuaternion())
    r = zero_bracket_residuals(X, Y, m)
    assert r.h == pytest.approx(math.sqrt(0.5), abs=1e-12)
    assert r.h > 0.5  # visibly nonzero obstruction


def test_residuals_iff_zero_kappa():
    # two-sided: templates (zeros) vs their perturbations (nonzeros)
    rng = np.random.default_rng(11)
    m = M_DEFAULT
    for _ in range(40):
        y = ImQuaternion.from_vec3(rng.standard_normal(3))
        x = Quaternion.from_array(rng.standard_normal(4))
        tpl = build_template("type2a", x, y)
        X, Y = tpl.plane(m)
        nx = math.sqrt(inner2(X, X, m))
        ny = math.sqrt(inner2(Y, Y, m))
        X, Y = X.scale(1 / nx), Y.scale(1 / ny)
        assert abs(kappa_G(X, Y, m)) < 1e-10
        assert zero_bracket_residuals(X, Y, m).max() < 1e-6
        Xp = X + random_algebra_element(rng, unit=True).scale(1e-3)
        kp = kappa_G(Xp, Y, m)
        rp = zero_bracket_residuals(Xp, Y, m).max()
        assert kp > 1e-9 or rp < 1e-6  # perturbations violate both together
        assert rp > 1e-5  # bracket residual sees the 1e-3 perturbation


def test_example1_specialization():
    # t~ = 1: zero curvature iff the two k-level brackets vanish
    rng = np.random.default_rng(12)
    m = MetricParams(0.5, 1.0)
    tpl = build_template("type1", None, ImQuaternion(0.2, -1.0, 0.4))
    X, Y = tpl.plane(m)
    assert abs(kappa_G(X, Y, m)) < 1e-12
    r = zero_bracket_residuals(X, Y, m)
    assert r.tilde < 1e-13 and r.k_tilde < 1e-13
    for _ in range(50):
        X, Y = random_algebra_element(rng), random_algebra_element(rng)
        r = zero_bracket_residuals(X, Y, m)
        if r.tilde < 1e-9 and r.k_tilde < 1e-9:
            assert abs(kappa_G(X, Y, m)) < 1e-8


def test_monotone_degeneration():
    # kappa approaches the bi-invariant value linearly in the distance to
    # (1, 1); at distance 1e-9 the difference is inside 1e-8
    rng = np.random.default_rng(13)
    pairs = [(random_algebra_element(rng, unit=True),
              random_algebra_element(rng, unit=True)) for _ in range(20)]
    prev = math.inf
    for d in (1e-2, 1e-4, 1e-6, 1e-9):
        m = MetricParams(1.0 - d, 1.0 - d)
        worst = max(abs(kappa_G(X, Y, m) - kappa_G(X, Y, BI_INVARIANT))
                    for X, Y in pairs)
        assert worst < 10.0 * d  # Lipschitz window
        assert worst < prev + 1e-15
        prev = worst
    assert worst < 1e-8


def test_product_split_diagnostic():
    # reported consistency at t~ = 1: the intrinsic curvature dominates the
    # two-term product formula and the gap (the submersion correction) is
    # nonnegative
    rng = np.random.default_rng(14)
    for s_tilde in (0.3, 0.5, 0.8):
        for _ in range(50):
            X = random_algebra_element(rng, unit=True)
            Y = random_algebra_element(rng, unit=True)
            k1, split, oneill = product_split_diagnostic(X, Y, s_tilde)
            assert oneill >= -1e-9
            assert k1 == pytest.approx(split + oneill)
    with pytest.raises(ValueError):
        product_split_diagnostic(alg_h(IM_I), alg_h(IM_J), 1.0)

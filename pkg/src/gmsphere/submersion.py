"""The Riemannian submersion Sp(2) -> Sp(2)/U: vertical spaces, horizontal
projection, the O'Neill A-tensor and base sectional curvature.

The vertical space at g is spanned, in left trivialization, by

    v_g = g^-1 diag(v, 0) g - diag(v, v),   v in {i, j, k},

with entrywise closed form (conj(a)va - v, conj(a)vb; conj(b)va,
conj(b)vb - v). A tangent vector is horizontal when <,>_2-orthogonal to all
three. The A-tensor is evaluated by differentiating the horizontally
projected left-invariant extension along geodesic-parameter curves
g exp(tau X), with central differences and Richardson extrapolation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quat import ImQuaternion, Quaternion, mul
from .sp2 import AlgebraElement, GroupElement, exp as sp2_exp
from .cheeger import (MetricParams, algebra_to_coords, coords_to_algebra,
                      curvature_tensor, gram2, inner1, kappa_G, tilde)

HORIZONTAL_DIM = 7
_IM_UNITS = (ImQuaternion(1, 0, 0), ImQuaternion(0, 1, 0), ImQuaternion(0, 0, 1))


@dataclass(frozen=True)
class VerticalFrame:
    """The three vertical generators at a base point, one per v in {i,j,k}."""

    g: GroupElement
    elements: tuple


def vertical_basis(g: GroupElement) -> VerticalFrame:
    """Closed-form vertical generators at g."""
    a, b = g.a, g.b
    ac, bc = a.conjugate(), b.conjugate()
    elems = []
    for v in _IM_UNITS:
        vq = v.as_quaternion()
        m11 = mul(mul(ac, vq), a) - vq
        m21 = mul(mul(bc, vq), a)
        m22 = mul(mul(bc, vq), b) - vq
        elems.append(AlgebraElement(m21, m11.im, m22.im))
    return VerticalFrame(g, tuple(elems))


def vertical_coords(g: GroupElement, m: MetricParams) -> np.ndarray:
    """(3, 10) coordinates of the vertical frame in the canonical frame."""
    vf = vertical_basis(g)
    return np.stack([algebra_to_coords(e, m) for e in vf.elements])


def _projection_matrix(vc: np.ndarray) -> np.ndarray:
    """Orthogonal projector onto the complement of the rows of vc."""
    gram = vc @ vc.T
    sol = np.linalg.solve(gram, vc)
    return np.eye(vc.shape[1]) - vc.T @ sol


def projection_matrix(g: GroupElement, m: MetricParams) -> np.ndarray:
    """(10, 10) horizontal projector at g in canonical-frame coordinates."""
    return _projection_matrix(vertical_coords(g, m))


def horizontal_projection(g: GroupElement, X: AlgebraElement,
                          m: MetricParams) -> AlgebraElement:
    """<,>_2-orthogonal projection of X onto the horizontal space at g."""
    P = projection_matrix(g, m)
    return coords_to_algebra(P @ algebra_to_coords(X, m), m)


@dataclass(frozen=True)
class HorizontalSpace:
    """Orthonormal basis of the 7-dim horizontal space at g."""

    g: GroupElement
    params: MetricParams
    coords: np.ndarray  # (7, 10), rows orthonormal

    @property
    def basis(self) -> list[AlgebraElement]:
        return [coords_to_algebra(row, self.params) for row in self.coords]


def horizontal_space(g: GroupElement, m: MetricParams) -> HorizontalSpace:
    """Horizontal orthonormal basis via pivoted Gram-Schmidt on the
    projected canonical frame (pivot = largest remaining norm)."""
    P = projection_matrix(g, m)
    cand = P.copy()  # row a = projection of e_a
    rows = []
    for _ in range(HORIZONTAL_DIM):
        norms = np.linalg.norm(cand, axis=1)
        idx = int(np.argmax(norms))
        v = cand[idx] / norms[idx]
        rows.append(v)
        cand = cand - np.outer(cand @ v, v)
    Q = np.stack(rows)
    # one re-orthogonalization sweep for numerical tightness
    for i in range(HORIZONTAL_DIM):
        v = Q[i]
        for j in range(i):
            v = v - (v @ Q[j]) * Q[j]
        Q[i] = v / np.linalg.norm(v)
    return HorizontalSpace(g, m, Q)


def horizontality_residual(g: GroupElement, X: AlgebraElement,
                           m: MetricParams) -> np.ndarray:
    """<X, v_g>_2 for v = i, j, k."""
    vc = vertical_coords(g, m)
    return vc @ algebra_to_coords(X, m)


def horizontality_residual_tilded(X_tilde: AlgebraElement, g: GroupElement,
                                  m: MetricParams) -> np.ndarray:
    """<X~, v_g>_1 for v = i, j, k; equals <untilde(X~), v_g>_2."""
    vf = vertical_basis(g)
    return np.array([inner1(X_tilde, e, m) for e in vf.elements])


def _check_horizontal(g, X, m, tol):
    res = np.abs(horizontality_residual(g, X, m)).max()
    scale = max(1.0, np.linalg.norm(algebra_to_coords(X, m)))
    if res > tol * scale:
        raise ValueError(f"input is not horizontal: residual {res:.3e}")


def _dP_dtau(g: GroupElement, X: AlgebraElement, m: MetricParams,
             step: float) -> np.ndarray:
    """Richardson-extrapolated derivative of the horizontal projector
    matrix along tau -> g exp(tau X) at tau = 0."""

    def P_at(tau: float) -> np.ndarray:
        h = GroupElement((g.mat @ sp2_exp(X.scale(tau)).mat), tol=1e-8)
        return projection_matrix(h, m)

    def central(h: float) -> np.ndarray:
        return (P_at(h) - P_at(-h)) / (2.0 * h)

    d1 = central(step)
    d2 = central(step / 2.0)
    return (4.0 * d2 - d1) / 3.0


def a_tensor(g: GroupElement, X: AlgebraElement, Y: AlgebraElement,
             m: MetricParams, step: float = 1e-5,
             horizontal_tol: float = 1e-9) -> AlgebraElement:
    """O'Neill tensor A_X Y: vertical part of the covariant derivative of
    the horizontalized left-invariant extension of Y along X."""
    _check_horizontal(g, X, m, horizontal_tol)
    _check_horizontal(g, Y, m, horizontal_tol)
    ct = curvature_tensor(m)
    x = algebra_to_coords(X, m)
    y = algebra_to_coords(Y, m)
    nab = np.einsum('abc,a,b->c', ct.gamma, x, y)
    dP = _dP_dtau(g, X, m, step)
    total = nab + dP @ y
    vc = vertical_coords(g, m)
    vert = total - _projection_matrix(vc) @ total
    return coords_to_algebra(vert, m)


def sec_M(g: GroupElement, X: AlgebraElement, Y: AlgebraElement,
          m: MetricParams, step: float = 1e-5) -> float:
    """Sectional curvature of the base through O'Neill's formula:
    sec_M = sec_G + 3 |A_X Y|^2 / |X ^ Y|^2 on horizontal planes."""
    g2 = gram2(X, Y, m)
    if g2 <= 1e-12:
        raise ValueError("degenerate plane")
    A = a_tensor(g, X, Y, m, step=step)
    a2 = algebra_to_coords(A, m)
    return (kappa_G(X, Y, m) + 3.0 * float(a2 @ a2)) / g2


def a_table(g: GroupElement, hs: HorizontalSpace, m: MetricParams,
            step: float = 1e-5) -> np.ndarray:
    """(7, 7, 10) table of A_{e_i} e_j on the horizontal basis, in canonical
    coordinates, antisymmetrized over (i, j) to suppress finite-difference
    noise (the exact tensor is antisymmetric)."""
    H = hs.coords
    ct = curvature_tensor(m)
    vc = vertical_coords(g, m)
    Pv = np.eye(10) - _projection_matrix(vc)  # vertical projector
    raw = np.empty((HORIZONTAL_DIM, HORIZONTAL_DIM, 10))
    for i in range(HORIZONTAL_DIM):
        Xi = coords_to_algebra(H[i], m)
        dP = _dP_dtau(g, Xi, m, step)
        nab = np.einsum('abc,a,jb->jc', ct.gamma, H[i], H)
        raw[i] = (nab + H @ dP.T) @ Pv.T
    return 0.5 * (raw - raw.transpose(1, 0, 2))


def oneill_tensor(hs: HorizontalSpace, table: np.ndarray) -> np.ndarray:
    """(7,7,7,7) correction T with kappa_M contraction convention:
    T[a,b,c,d] x_a y_b y_c x_d = 3 |A(x, y)|^2."""
    # T[a,b,c,d] = 3 <A_ab, A_dc>
    return 3.0 * np.tensordot(table, table, axes=(2, 2)).transpose(0, 1, 3, 2)


def horizontal_curvature(hs: HorizontalSpace) -> np.ndarray:
    """Group curvature tensor restricted to the horizontal basis, (7,)*4."""
    R = curvature_tensor(hs.params).riemann
    H = hs.coords
    for _ in range(4):  # contract the last axis per pass; indices cycle home
        R = np.tensordot(H, R, axes=(1, 3))
    return R

"""Two-stage contracted left-invariant metrics on sp(2) and their curvature.

The family is parameterized by contraction factors (s_tilde, t_tilde) in
(0, 1]^2 acting on the q- and h-blocks:

    <X, Y>_2 = <X_p, Y_p> + s_tilde <X_q, Y_q> + s_tilde t_tilde <X_h, Y_h>

with (1, 1) the bi-invariant trace metric. All curvature quantities are
computed intrinsically from the Koszul formula in a fixed <,>_2-orthonormal
left-invariant frame, so the metric is the identity matrix and only
structure constants enter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .quat import ImQuaternion, Quaternion
from .sp2 import (AlgebraElement, alg_p, alg_q, alg_h, bracket, trace_inner)

DIM = 10
GRAM_TOL = 1e-12

_IM_UNITS = (ImQuaternion(1, 0, 0), ImQuaternion(0, 1, 0), ImQuaternion(0, 0, 1))
_P_UNITS = (Quaternion(1), Quaternion(0, 1), Quaternion(0, 0, 1), Quaternion(0, 0, 0, 1))


@dataclass(frozen=True)
class MetricParams:
    """Contraction pair (s_tilde, t_tilde) in (0, 1]^2."""

    s_tilde: float
    t_tilde: float

    def __post_init__(self):
        for name, v in (("s_tilde", self.s_tilde), ("t_tilde", self.t_tilde)):
            if not (0.0 < v <= 1.0):
                raise ValueError(f"{name} must lie in (0, 1], got {v!r}")

    @classmethod
    def from_st(cls, s: float, t: float) -> "MetricParams":
        """From the unnormalized parameters s, t > 0 via s/(s+1), t/(t+1)."""
        if s <= 0 or t <= 0:
            raise ValueError("s and t must be positive")
        return cls(s / (s + 1.0), t / (t + 1.0))

    @property
    def is_bi_invariant(self) -> bool:
        return self.s_tilde == 1.0 and self.t_tilde == 1.0


BI_INVARIANT = MetricParams(1.0, 1.0)


def tilde(X: AlgebraElement, t_tilde: float) -> AlgebraElement:
    """Scale the h-component by t_tilde, fixing p and q."""
    if t_tilde <= 0:
        raise ValueError("t_tilde must be positive")
    m = X.h_entry.scale(t_tilde)
    d = X.q_entry
    return AlgebraElement(X.off, m + d, m - d)


def untilde(X: AlgebraElement, t_tilde: float) -> AlgebraElement:
    """Inverse of `tilde`."""
    if t_tilde <= 0:
        raise ValueError("t_tilde must be positive")
    return tilde(X, 1.0 / t_tilde)


def inner2(X: AlgebraElement, Y: AlgebraElement, m: MetricParams) -> float:
    """The deformed metric <X_p,Y_p> + s~ <X_q,Y_q> + s~ t~ <X_h,Y_h>."""
    p = 2.0 * X.off.dot(Y.off)
    q = 2.0 * X.q_entry.dot(Y.q_entry)
    h = 2.0 * X.h_entry.dot(Y.h_entry)
    return p + m.s_tilde * (q + m.t_tilde * h)


def inner1(X: AlgebraElement, Y: AlgebraElement, m: MetricParams) -> float:
    """Single-stage contraction <X_p,Y_p> + s~ <X_k,Y_k>."""
    p = 2.0 * X.off.dot(Y.off)
    k = X.x1.dot(Y.x1) + X.x2.dot(Y.x2)
    return p + m.s_tilde * k


def norm2_of(X: AlgebraElement, m: MetricParams) -> float:
    return math.sqrt(inner2(X, X, m))


def orthonormal_frame(m: MetricParams) -> list[AlgebraElement]:
    """Canonical <,>_2-orthonormal frame: 4 p-, 3 q-, 3 h-generators."""
    sp = 1.0 / math.sqrt(2.0)
    sq = 1.0 / math.sqrt(2.0 * m.s_tilde)
    sh = 1.0 / math.sqrt(2.0 * m.s_tilde * m.t_tilde)
    frame = [alg_p(u).scale(sp) for u in _P_UNITS]
    frame += [alg_q(u).scale(sq) for u in _IM_UNITS]
    frame += [alg_h(u).scale(sh) for u in _IM_UNITS]
    return frame


def algebra_to_coords(X: AlgebraElement, m: MetricParams) -> np.ndarray:
    """Coordinates of X in the canonical orthonormal frame."""
    cp = math.sqrt(2.0)
    cq = math.sqrt(2.0 * m.s_tilde)
    ch = math.sqrt(2.0 * m.s_tilde * m.t_tilde)
    d = X.q_entry
    h = X.h_entry
    return np.array([
        cp * X.off.w, cp * X.off.x, cp * X.off.y, cp * X.off.z,
        cq * d.x, cq * d.y, cq * d.z,
        ch * h.x, ch * h.y, ch * h.z,
    ])


def coords_to_algebra(v, m: MetricParams) -> AlgebraElement:
    v = np.asarray(v, dtype=float)
    cp = 1.0 / math.sqrt(2.0)
    cq = 1.0 / math.sqrt(2.0 * m.s_tilde)
    ch = 1.0 / math.sqrt(2.0 * m.s_tilde * m.t_tilde)
    off = Quaternion(cp * v[0], cp * v[1], cp * v[2], cp * v[3])
    d = ImQuaternion(cq * v[4], cq * v[5], cq * v[6])
    h = ImQuaternion(ch * v[7], ch * v[8], ch * v[9])
    return AlgebraElement(off, h + d, h - d)


@dataclass(frozen=True)
class CurvatureTensor:
    """Structure constants, connection and curvature in the canonical frame.

    riemann[a, b, c, d] = < R(e_a, e_b) e_c, e_d >_2 with the sign fixed by
    kappa(X, Y) = < R(X, Y) Y, X >_2, so kappa of a coordinate pair (x, y)
    is the contraction riemann[a,b,c,d] x_a y_b y_c x_d.
    """

    params: MetricParams
    frame: tuple
    structure: np.ndarray  # (10, 10, 10): <[e_a, e_b], e_c>_2
    gamma: np.ndarray      # (10, 10, 10): <nabla_{e_a} e_b, e_c>_2
    riemann: np.ndarray    # (10, 10, 10, 10)

    @classmethod
    def build(cls, m: MetricParams) -> "CurvatureTensor":
        frame = orthonormal_frame(m)
        C = np.zeros((DIM, DIM, DIM))
        for a in range(DIM):
            for b in range(a + 1, DIM):
                cab = algebra_to_coords(bracket(frame[a], frame[b]), m)
                C[a, b] = cab
                C[b, a] = -cab
        G = 0.5 * (C - np.einsum('bca->abc', C) + np.einsum('cab->abc', C))
        R = (np.einsum('bce,aed->abcd', G, G)
             - np.einsum('ace,bed->abcd', G, G)
             - np.einsum('abe,ecd->abcd', C, G))
        return cls(m, tuple(frame), C, G, R)

    def kappa_coords(self, x: np.ndarray, y: np.ndarray) -> float:
        return float(np.einsum('abcd,a,b,c,d', self.riemann, x, y, y, x))

    def kappa_batch(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        """kappa for stacked coordinate pairs, shapes (n, 10)."""
        return np.einsum('abcd,na,nb,nc,nd->n', self.riemann, xs, ys, ys, xs,
                         optimize=True)


@lru_cache(maxsize=32)
def curvature_tensor(m: MetricParams) -> CurvatureTensor:
    return CurvatureTensor.build(m)


def connection_coefficients(m: MetricParams) -> np.ndarray:
    """Koszul coefficients <nabla_{e_a} e_b, e_c>_2 in the canonical frame."""
    return curvature_tensor(m).gamma


def nabla(X: AlgebraElement, Y: AlgebraElement, m: MetricParams) -> AlgebraElement:
    """Levi-Civita covariant derivative of left-invariant fields at identity."""
    ct = curvature_tensor(m)
    x = algebra_to_coords(X, m)
    y = algebra_to_coords(Y, m)
    return coords_to_algebra(np.einsum('abc,a,b->c', ct.gamma, x, y), m)


def kappa_G(X: AlgebraElement, Y: AlgebraElement, m: MetricParams) -> float:
    """Unnormalized sectional curvature <R(X,Y)Y,X>_2 of the group metric."""
    ct = curvature_tensor(m)
    return ct.kappa_coords(algebra_to_coords(X, m), algebra_to_coords(Y, m))


def gram2(X: AlgebraElement, Y: AlgebraElement, m: MetricParams) -> float:
    """Squared area |X ^ Y|^2 in <,>_2."""
    xx = inner2(X, X, m)
    yy = inner2(Y, Y, m)
    xy = inner2(X, Y, m)
    return xx * yy - xy * xy


def sec_G(X: AlgebraElement, Y: AlgebraElement, m: MetricParams) -> float:
    """Sectional curvature of the plane spanned by X, Y."""
    g2 = gram2(X, Y, m)
    if g2 <= GRAM_TOL:
        raise ValueError(f"degenerate plane: |X ^ Y|^2 = {g2!r}")
    return kappa_G(X, Y, m) / g2


class BracketResiduals(NamedTuple):
    """Trace norms of the five bracket obstructions to zero curvature."""

    tilde: float    # [X~, Y~]
    k_tilde: float  # [X~_k, Y~_k]
    p: float        # [X_p, Y_p]
    q: float        # [X_q, Y_q]
    h: float        # [X_h, Y_h]

    def max(self) -> float:
        return max(self)


def _tnorm(Z: AlgebraElement) -> float:
    return math.sqrt(trace_inner(Z, Z))


def zero_bracket_residuals(X: AlgebraElement, Y: AlgebraElement,
                           m: MetricParams) -> BracketResiduals:
    """The bracket criteria whose simultaneous vanishing marks a flat plane."""
    Xt = tilde(X, m.t_tilde)
    Yt = tilde(Y, m.t_tilde)
    return BracketResiduals(
        tilde=_tnorm(bracket(Xt, Yt)),
        k_tilde=_tnorm(bracket(Xt.k_component(), Yt.k_component())),
        p=_tnorm(bracket(X.p_component(), Y.p_component())),
        q=_tnorm(bracket(X.q_component(), Y.q_component())),
        h=_tnorm(bracket(X.h_component(), Y.h_component())),
    )


def tilde_k(X: AlgebraElement, s_tilde: float) -> AlgebraElement:
    """First-stage tilde map: scale the whole k-part (q + h) by s_tilde."""
    return X.p_component() + X.k_component().scale(s_tilde)


def product_split_diagnostic(X: AlgebraElement, Y: AlgebraElement,
                             s_tilde: float) -> tuple[float, float, float]:
    """Cross-check of the single-contraction curvature against the
    product-space splitting, valid for t_tilde = 1 and s_tilde < 1.

    Returns (kappa_intrinsic, kappa_split, oneill_term) where kappa_split =
    kappa_bi(X~, Y~) + s^-3 kappa_bi(X~_k, Y~_k) and oneill_term is their
    difference (nonnegative up to rounding). Reported, never asserted.
    """
    if not (0.0 < s_tilde < 1.0):
        raise ValueError("diagnostic requires 0 < s_tilde < 1")
    m1 = MetricParams(s_tilde, 1.0)
    k1 = kappa_G(X, Y, m1)
    s = s_tilde / (1.0 - s_tilde)
    Xt = tilde_k(X, s_tilde)
    Yt = tilde_k(Y, s_tilde)
    split = (kappa_G(Xt, Yt, BI_INVARIANT)
             + kappa_G(Xt.k_component(), Yt.k_component(), BI_INVARIANT) / s ** 3)
    return k1, split, k1 - split

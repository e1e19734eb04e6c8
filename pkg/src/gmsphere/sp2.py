"""The group Sp(2) of quaternionic unitary 2x2 matrices and its Lie algebra.

sp(2) consists of skew-Hermitian quaternionic 2x2 matrices and carries the
orthogonal splitting g = p + q + h used throughout: p is the off-diagonal
part, and the diagonal (two imaginary quaternions x1, x2) splits into the
diagonal-embedded part h = {diag(m, m)} and its complement q = {diag(d, -d)}.

Scalars act on H^2 on the right, so "unitary" means g* g = I with the
quaternionic conjugate-transpose; Gram-Schmidt coefficients multiply on the
right accordingly.
"""

from __future__ import annotations

import math

import numpy as np

from .quat import ImQuaternion, Quaternion, mul

UNITARY_TOL = 1e-10
SKEW_TOL = 1e-12


class QMatrix2:
    """2x2 matrix of quaternions, entries m11, m12, m21, m22."""

    __slots__ = ("m11", "m12", "m21", "m22")

    def __init__(self, m11: Quaternion, m12: Quaternion,
                 m21: Quaternion, m22: Quaternion):
        self.m11 = m11
        self.m12 = m12
        self.m21 = m21
        self.m22 = m22

    @classmethod
    def zero(cls) -> "QMatrix2":
        return cls(Quaternion(), Quaternion(), Quaternion(), Quaternion())

    @classmethod
    def identity(cls) -> "QMatrix2":
        return cls(Quaternion(1.0), Quaternion(), Quaternion(), Quaternion(1.0))

    @classmethod
    def diag(cls, d1: Quaternion, d2: Quaternion) -> "QMatrix2":
        return cls(d1, Quaternion(), Quaternion(), d2)

    def entries(self):
        return (self.m11, self.m12, self.m21, self.m22)

    def __repr__(self):
        return (f"QMatrix2({self.m11!r}, {self.m12!r}, "
                f"{self.m21!r}, {self.m22!r})")

    def __add__(self, other: "QMatrix2") -> "QMatrix2":
        return QMatrix2(self.m11 + other.m11, self.m12 + other.m12,
                        self.m21 + other.m21, self.m22 + other.m22)

    def __sub__(self, other: "QMatrix2") -> "QMatrix2":
        return QMatrix2(self.m11 - other.m11, self.m12 - other.m12,
                        self.m21 - other.m21, self.m22 - other.m22)

    def scale(self, r: float) -> "QMatrix2":
        return QMatrix2(self.m11.scale(r), self.m12.scale(r),
                        self.m21.scale(r), self.m22.scale(r))

    def __matmul__(self, other: "QMatrix2") -> "QMatrix2":
        return QMatrix2(
            mul(self.m11, other.m11) + mul(self.m12, other.m21),
            mul(self.m11, other.m12) + mul(self.m12, other.m22),
            mul(self.m21, other.m11) + mul(self.m22, other.m21),
            mul(self.m21, other.m12) + mul(self.m22, other.m22),
        )

    def adjoint(self) -> "QMatrix2":
        """Quaternionic conjugate-transpose."""
        return QMatrix2(self.m11.conjugate(), self.m21.conjugate(),
                        self.m12.conjugate(), self.m22.conjugate())

    def frobenius(self) -> float:
        return math.sqrt(sum(e.norm2() for e in self.entries()))

    def unitarity_residual(self) -> float:
        return (self.adjoint() @ self - QMatrix2.identity()).frobenius()

    def skew_residual(self) -> float:
        return (self.adjoint() + self).frobenius()

    def to_flat16(self) -> np.ndarray:
        """Row-major entries, (w, x, y, z) per quaternion."""
        return np.concatenate([e.to_array() for e in self.entries()])

    @classmethod
    def from_flat16(cls, flat) -> "QMatrix2":
        flat = np.asarray(flat, dtype=float)
        if flat.shape != (16,):
            raise ValueError(f"expected 16 reals, got shape {flat.shape}")
        qs = [Quaternion.from_array(flat[4 * k:4 * k + 4]) for k in range(4)]
        return cls(*qs)

    def to_complex4(self) -> np.ndarray:
        """Embedding into C^{4x4}: q = (w + xi) + (y + zi) j maps to
        [[w+xi, y+zi], [-(y-zi), w-xi]] blockwise."""
        out = np.zeros((4, 4), dtype=complex)
        for (r, c), q in (((0, 0), self.m11), ((0, 1), self.m12),
                          ((1, 0), self.m21), ((1, 1), self.m22)):
            alpha = complex(q.w, q.x)
            beta = complex(q.y, q.z)
            out[2 * r, 2 * c] = alpha
            out[2 * r, 2 * c + 1] = beta
            out[2 * r + 1, 2 * c] = -beta.conjugate()
            out[2 * r + 1, 2 * c + 1] = alpha.conjugate()
        return out

    @classmethod
    def from_complex4(cls, mat: np.ndarray) -> "QMatrix2":
        qs = []
        for r in range(2):
            for c in range(2):
                alpha = mat[2 * r, 2 * c]
                beta = mat[2 * r, 2 * c + 1]
                qs.append(Quaternion(alpha.real, alpha.imag, beta.real, beta.imag))
        return cls(*qs)


class GroupElement:
    """Element of Sp(2): quaternionic 2x2 matrix with g* g = I."""

    __slots__ = ("mat",)

    def __init__(self, mat: QMatrix2, tol: float = UNITARY_TOL):
        res = mat.unitarity_residual()
        if res > tol:
            raise ValueError(f"matrix is not unitary: residual {res:.3e}")
        self.mat = mat

    @classmethod
    def identity(cls) -> "GroupElement":
        return cls(QMatrix2.identity())

    @property
    def a(self) -> Quaternion:
        return self.mat.m11

    @property
    def b(self) -> Quaternion:
        return self.mat.m12

    @property
    def c(self) -> Quaternion:
        return self.mat.m21

    @property
    def d(self) -> Quaternion:
        return self.mat.m22

    def inverse(self) -> "GroupElement":
        return GroupElement(self.mat.adjoint())

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(self.mat @ other.mat)

    def to_flat16(self) -> np.ndarray:
        return self.mat.to_flat16()

    @classmethod
    def from_flat16(cls, flat, tol: float = UNITARY_TOL) -> "GroupElement":
        return cls(QMatrix2.from_flat16(flat), tol=tol)

    def to_text(self) -> str:
        """16 whitespace-separated reals, row-major entries, (w x y z) per
        quaternion; repr formatting makes the round-trip exact."""
        return " ".join(repr(float(v)) for v in self.to_flat16())

    @classmethod
    def from_text(cls, text: str, tol: float = UNITARY_TOL) -> "GroupElement":
        vals = [float(tok) for tok in text.replace(",", " ").split()]
        return cls.from_flat16(np.array(vals), tol=tol)

    def __repr__(self):
        return f"GroupElement({self.mat!r})"


class AlgebraElement:
    """Element of sp(2): skew-Hermitian quaternionic 2x2 matrix.

    Constructed from the off-diagonal entry x = m21 (m12 = -conj(x) is
    forced) and the two imaginary diagonal entries, so skew-Hermiticity
    holds exactly.
    """

    __slots__ = ("off", "x1", "x2")

    def __init__(self, off: Quaternion | None = None,
                 x1: ImQuaternion | None = None,
                 x2: ImQuaternion | None = None):
        self.off = off if off is not None else Quaternion()
        self.x1 = x1 if x1 is not None else ImQuaternion()
        self.x2 = x2 if x2 is not None else ImQuaternion()

    @classmethod
    def from_qmatrix(cls, mat: QMatrix2, tol: float = SKEW_TOL) -> "AlgebraElement":
        res = mat.skew_residual()
        if res > tol * max(1.0, mat.frobenius()):
            raise ValueError(f"matrix is not skew-Hermitian: residual {res:.3e}")
        return cls(mat.m21, mat.m11.im, mat.m22.im)

    def to_qmatrix(self) -> QMatrix2:
        return QMatrix2(self.x1.as_quaternion(), -self.off.conjugate(),
                        self.off, self.x2.as_quaternion())

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        return AlgebraElement(self.off + other.off, self.x1 + other.x1,
                              self.x2 + other.x2)

    def __sub__(self, other: "AlgebraElement") -> "AlgebraElement":
        return AlgebraElement(self.off - other.off, self.x1 - other.x1,
                              self.x2 - other.x2)

    def __neg__(self) -> "AlgebraElement":
        return AlgebraElement(-self.off, -self.x1, -self.x2)

    def scale(self, r: float) -> "AlgebraElement":
        return AlgebraElement(self.off.scale(r), self.x1.scale(r), self.x2.scale(r))

    # p/q/h decomposition ---------------------------------------------------

    @property
    def h_entry(self) -> ImQuaternion:
        """m = (x1 + x2)/2, the diag(m, m) part."""
        return (self.x1 + self.x2).scale(0.5)

    @property
    def q_entry(self) -> ImQuaternion:
        """d = (x1 - x2)/2, the diag(d, -d) part."""
        return (self.x1 - self.x2).scale(0.5)

    def p_component(self) -> "AlgebraElement":
        return AlgebraElement(self.off, ImQuaternion(), ImQuaternion())

    def k_component(self) -> "AlgebraElement":
        return AlgebraElement(Quaternion(), self.x1, self.x2)

    def q_component(self) -> "AlgebraElement":
        d = self.q_entry
        return AlgebraElement(Quaternion(), d, -d)

    def h_component(self) -> "AlgebraElement":
        m = self.h_entry
        return AlgebraElement(Quaternion(), m, m)

    def norm(self) -> float:
        """Norm in the bi-invariant trace metric."""
        return math.sqrt(trace_inner(self, self))

    def __repr__(self):
        return f"AlgebraElement(off={self.off!r}, x1={self.x1!r}, x2={self.x2!r})"


# canonical generators ------------------------------------------------------

def alg_p(u: Quaternion) -> AlgebraElement:
    """Off-diagonal generator with m21 = u."""
    return AlgebraElement(off=u)


def alg_q(u: ImQuaternion) -> AlgebraElement:
    """diag(u, -u)."""
    return AlgebraElement(x1=u, x2=-u)


def alg_h(u: ImQuaternion) -> AlgebraElement:
    """diag(u, u)."""
    return AlgebraElement(x1=u, x2=u)


def alg_diag(x1: ImQuaternion, x2: ImQuaternion) -> AlgebraElement:
    return AlgebraElement(x1=x1, x2=x2)


# operations ----------------------------------------------------------------

def bracket(X: AlgebraElement, Y: AlgebraElement) -> AlgebraElement:
    """Lie bracket XY - YX."""
    M = X.to_qmatrix() @ Y.to_qmatrix() - Y.to_qmatrix() @ X.to_qmatrix()
    # exact skew-Hermiticity up to rounding; canonicalize through the entries
    return AlgebraElement(M.m21, M.m11.im, M.m22.im)


def trace_inner(X: AlgebraElement, Y: AlgebraElement) -> float:
    """Bi-invariant trace metric Re trace(X* Y) = sum of entrywise dots."""
    MX, MY = X.to_qmatrix(), Y.to_qmatrix()
    return (MX.m11.dot(MY.m11) + MX.m12.dot(MY.m12)
            + MX.m21.dot(MY.m21) + MX.m22.dot(MY.m22))


def exp(X: AlgebraElement) -> GroupElement:
    """Matrix exponential of X in sp(2), landing in Sp(2).

    Scaling-and-squaring with a 12-term Taylor series, evaluated in the
    complex 4x4 embedding; the scaling step keeps the scaled norm <= 0.5.
    """
    A = X.to_qmatrix().to_complex4()
    nrm = np.linalg.norm(A)
    squarings = 0
    if nrm > 0.5:
        squarings = max(0, int(math.ceil(math.log2(nrm / 0.5))))
        A = A / (2.0 ** squarings)
    term = np.eye(4, dtype=complex)
    acc = np.eye(4, dtype=complex)
    for k in range(1, 13):
        term = term @ A / k
        acc = acc + term
    for _ in range(squarings):
        acc = acc @ acc
    return GroupElement(QMatrix2.from_complex4(acc))


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def random_quaternion(rng) -> Quaternion:
    """Standard Gaussian on the 4 components."""
    return Quaternion.from_array(_as_generator(rng).standard_normal(4))


def random_im_quaternion(rng) -> ImQuaternion:
    return ImQuaternion.from_vec3(_as_generator(rng).standard_normal(3))


def random_algebra_element(rng, unit: bool = False) -> AlgebraElement:
    """Gaussian element of sp(2) (10 independent components)."""
    gen = _as_generator(rng)
    X = AlgebraElement(Quaternion.from_array(gen.standard_normal(4)),
                       ImQuaternion.from_vec3(gen.standard_normal(3)),
                       ImQuaternion.from_vec3(gen.standard_normal(3)))
    if unit:
        X = X.scale(1.0 / X.norm())
    return X


def haar_sample(rng) -> GroupElement:
    """Haar-distributed element of Sp(2).

    Draws two quaternionic Gaussian columns and orthonormalizes them by
    quaternionic Gram-Schmidt with coefficients acting on the right; the
    normalization scalars are real and positive, which pins the QR phase
    and makes the output exactly Haar. Degenerate draws are redrawn.
    """
    gen = _as_generator(rng)
    while True:
        cols = [[random_quaternion(gen), random_quaternion(gen)] for _ in range(2)]
        n1 = math.sqrt(cols[0][0].norm2() + cols[0][1].norm2())
        if n1 < 1e-12:
            continue
        u1 = [cols[0][0].scale(1.0 / n1), cols[0][1].scale(1.0 / n1)]
        # right-module inner product sum(conj(u_i) v_i); coefficient on the right
        w = cols[1]
        for _ in range(2):  # re-orthogonalize once to kill cancellation residue
            coef = mul(u1[0].conjugate(), w[0]) + mul(u1[1].conjugate(), w[1])
            w = [w[0] - mul(u1[0], coef), w[1] - mul(u1[1], coef)]
        n2 = math.sqrt(w[0].norm2() + w[1].norm2())
        if n2 < 1e-12:
            continue
        u2 = [w[0].scale(1.0 / n2), w[1].scale(1.0 / n2)]
        return GroupElement(QMatrix2(u1[0], u2[0], u1[1], u2[1]))


def u_action(q: Quaternion, g: GroupElement, tol: float = UNITARY_TOL) -> GroupElement:
    """diag(q, 1) g diag(q, q)^{-1} for unit q.

    Entrywise: a -> q a q^-1, b -> q b q^-1, c -> c q^-1, d -> d q^-1.
    """
    if abs(q.norm2() - 1.0) > tol:
        raise ValueError(f"u_action requires a unit quaternion, |q| = {q.norm()!r}")
    qc = q.conjugate()
    m = g.mat
    return GroupElement(QMatrix2(
        mul(mul(q, m.m11), qc), mul(mul(q, m.m12), qc),
        mul(m.m21, qc), mul(m.m22, qc),
    ))


def ad_group(k: GroupElement, X: AlgebraElement) -> AlgebraElement:
    """Adjoint action k X k^-1 of the group on its algebra."""
    M = (k.mat @ X.to_qmatrix()) @ k.mat.adjoint()
    return AlgebraElement(M.m21, M.m11.im, M.m22.im)

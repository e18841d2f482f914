"""Composite and augmented representations of complex second-order quantities.

A complex vector ``z = x + j y`` of length ``n`` has two real-linear encodings:

* the *composite* vector ``[x; y]`` (real, length ``2n``),
* the *augmented* vector ``[z; conj(z)]`` (complex, length ``2n``).

They are related by ``aug = T @ comp`` with ``T = [[I, jI], [I, -jI]]`` and
``T @ T^H = 2 I``. Covariance matrices follow ``C_aug = T @ C_comp @ T^H``.

Augmented matrices are held as their two generating blocks ``A`` (upper left)
and ``B`` (upper right); the full matrix ``[[A, B], [B*, A*]]`` is only built
on request by :meth:`AugmentedMatrix.materialize`. Every solve goes through
the real composite matrix, which is symmetric and admits a Cholesky factor.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .exceptions import NumericalStructureError, SingularMatrixError, StructuralError

logger = logging.getLogger(__name__)

#: Relative diagonal jitter tried, in order, after a plain factorization fails.
JITTER_LADDER = (1e-12, 1e-10, 1e-8)
#: Default relative tolerance for structural checks.
STRUCTURE_TOL = 1e-10


def _frozen(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


def transform_matrix(n):
    """Return the ``2n x 2n`` matrix ``T = [[I, jI], [I, -jI]]``."""
    eye = np.eye(n)
    return np.block([[eye, 1j * eye], [eye, -1j * eye]])


def to_augmented(v):
    """Map a composite vector ``[x; y]`` to the augmented vector ``[z; z*]``.

    Works along axis 0, so a ``(2n, k)`` array is converted column by column.
    """
    v = np.asarray(v)
    if np.iscomplexobj(v):
        raise StructuralError("composite vectors are real-valued")
    if v.shape[0] % 2:
        raise StructuralError(f"composite length must be even, got {v.shape[0]}")
    n = v.shape[0] // 2
    z = v[:n] + 1j * v[n:]
    return np.concatenate([z, z.conj()], axis=0)


def to_composite(z, tol=1e-12):
    """Inverse of :func:`to_augmented`, i.e. ``T^H z / 2``.

    Raises
    ------
    StructuralError
        If the length is odd or the lower half is not the conjugate of the
        upper half within ``tol`` relative to ``max |z|``.
    """
    z = np.asarray(z, dtype=complex)
    if z.shape[0] % 2:
        raise StructuralError(f"augmented length must be even, got {z.shape[0]}")
    n = z.shape[0] // 2
    top, bottom = z[:n], z[n:]
    scale = np.max(np.abs(z)) if z.size else 0.0
    mismatch = np.max(np.abs(bottom - top.conj())) if z.size else 0.0
    if mismatch > tol * scale:
        raise StructuralError(
            f"not a conjugate stack: residual {mismatch:.3e} exceeds {tol:g} x {scale:.3e}"
        )
    # average the two halves so tiny asymmetries do not bias either part
    re = 0.5 * (top.real + bottom.real)
    im = 0.5 * (top.imag - bottom.imag)
    return np.concatenate([re, im], axis=0)


@dataclass(frozen=True)
class AugmentedMatrix:
    """Matrix ``[[A, B], [B*, A*]]`` stored through its blocks ``A`` and ``B``."""

    upper_left: np.ndarray
    upper_right: np.ndarray

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.upper_left, dtype=complex))
        b = np.atleast_2d(np.asarray(self.upper_right, dtype=complex))
        if a.ndim != 2 or a.shape != b.shape:
            raise StructuralError(
                f"augmented blocks must be 2-D with equal shapes, got {a.shape} and {b.shape}"
            )
        object.__setattr__(self, "upper_left", _frozen(a))
        object.__setattr__(self, "upper_right", _frozen(b))

    @property
    def block_shape(self):
        return self.upper_left.shape

    @property
    def shape(self):
        n, m = self.block_shape
        return (2 * n, 2 * m)

    def materialize(self):
        a, b = self.upper_left, self.upper_right
        return np.block([[a, b], [b.conj(), a.conj()]])

    def hermitian_residual(self):
        """Largest entry of ``M - M^H`` relative to ``max |M|`` (square only)."""
        a, b = self.upper_left, self.upper_right
        if a.shape[0] != a.shape[1]:
            raise StructuralError(f"Hermitian check needs a square matrix, got {self.shape}")
        if a.size == 0:
            return 0.0
        scale = max(np.max(np.abs(a)), np.max(np.abs(b)))
        if scale == 0.0:
            return 0.0
        res = max(np.max(np.abs(a - a.conj().T)), np.max(np.abs(b - b.T)))
        return float(res / scale)

    def __matmul__(self, other):
        if not isinstance(other, AugmentedMatrix):
            return NotImplemented
        a1, b1 = self.upper_left, self.upper_right
        a2, b2 = other.upper_left, other.upper_right
        return AugmentedMatrix(a1 @ a2 + b1 @ b2.conj(), a1 @ b2 + b1 @ a2.conj())

    def __add__(self, other):
        if not isinstance(other, AugmentedMatrix):
            return NotImplemented
        return AugmentedMatrix(
            self.upper_left + other.upper_left, self.upper_right + other.upper_right
        )

    def __sub__(self, other):
        if not isinstance(other, AugmentedMatrix):
            return NotImplemented
        return AugmentedMatrix(
            self.upper_left - other.upper_left, self.upper_right - other.upper_right
        )

    @property
    def H(self):
        """Conjugate transpose, which is again augmented."""
        return AugmentedMatrix(self.upper_left.conj().T, self.upper_right.T)


def augmented_from_blocks(A, B):
    """Build an :class:`AugmentedMatrix` from its upper blocks."""
    return AugmentedMatrix(A, B)


def composite_matrix(M, tol=STRUCTURE_TOL, hermitian=None):
    """Real composite counterpart ``T^H M T / 4`` of an augmented matrix.

    With ``A = E[f g^H]`` and ``B = E[f g^T]`` the composite blocks are::

        Rxx = Re(A + B) / 2     Rxy = Im(B - A) / 2
        Ryx = Im(A + B) / 2     Ryy = Re(A - B) / 2

    The expression is real by construction. When ``hermitian`` is true (the
    default for square inputs) ``M`` must be Hermitian within ``tol`` and the
    result is symmetrized.

    Raises
    ------
    NumericalStructureError
        If a square ``M`` is not Hermitian within ``tol``.
    """
    if not isinstance(M, AugmentedMatrix):
        raise StructuralError("composite_matrix expects an AugmentedMatrix")
    a, b = M.upper_left, M.upper_right
    square = a.shape[0] == a.shape[1]
    if hermitian is None:
        hermitian = square
    if hermitian:
        res = M.hermitian_residual()
        if res > tol:
            raise NumericalStructureError(
                f"augmented matrix is not Hermitian: relative residual {res:.3e} > {tol:g}"
            )
    s, d = a + b, a - b
    out = 0.5 * np.block([[s.real, -d.imag], [s.imag, d.real]])
    if hermitian:
        out = 0.5 * (out + out.T)
    return out


def augmented_from_composite(R):
    """Inverse of :func:`composite_matrix`: ``T R T^H`` as block pair."""
    R = np.asarray(R)
    if R.ndim != 2 or R.shape[0] % 2 or R.shape[1] % 2:
        raise StructuralError(f"composite matrix needs even dimensions, got {R.shape}")
    if np.iscomplexobj(R):
        raise StructuralError("composite matrices are real-valued")
    n, m = R.shape[0] // 2, R.shape[1] // 2
    xx, xy = R[:n, :m], R[:n, m:]
    yx, yy = R[n:, :m], R[n:, m:]
    return AugmentedMatrix(xx + yy + 1j * (yx - xy), xx - yy + 1j * (yx + xy))


def cholesky_with_jitter(a, jitter=True):
    """Lower Cholesky factor of a symmetric/Hermitian matrix, in ``cho_factor`` form.

    On failure the diagonal is loaded with ``delta * mean(diag)`` for each
    ``delta`` in :data:`JITTER_LADDER`. A factor whose smallest pivot squared
    is below machine epsilon times the largest counts as a failure.
    """
    a = np.asarray(a)
    n = a.shape[0]
    if a.ndim != 2 or a.shape[1] != n:
        raise StructuralError(f"expected a square matrix, got {a.shape}")
    if n == 0:
        return a.copy(), True
    if not np.all(np.isfinite(a)):
        raise SingularMatrixError("matrix has non-finite entries")
    scale = float(np.mean(np.real(np.diag(a))))
    if not scale > 0.0:
        scale = 1.0
    eps = np.finfo(float).eps
    deltas = (0.0,) + (tuple(JITTER_LADDER) if jitter else ())
    eye = np.eye(n)
    for delta in deltas:
        try:
            c, lower = cho_factor(a + (delta * scale) * eye, lower=True, check_finite=False)
        except LinAlgError:
            continue
        piv = np.abs(np.diag(c))
        if piv.min() ** 2 > eps * piv.max() ** 2:
            if delta:
                logger.debug("cholesky succeeded with jitter %g", delta)
            return c, lower
    tried = "with jitter up to %g" % JITTER_LADDER[-1] if jitter else "without jitter"
    raise SingularMatrixError(f"matrix of size {n} is not positive definite ({tried})")


class AugmentedFactor:
    """Factorization of an augmented covariance, reusable for many solves.

    Immutable after construction.
    """

    __slots__ = ("_n", "_cho", "_composite")

    def __init__(self, M, jitter=True, tol=STRUCTURE_TOL):
        if not isinstance(M, AugmentedMatrix):
            raise StructuralError("AugmentedFactor expects an AugmentedMatrix")
        n, m = M.block_shape
        if n != m:
            raise StructuralError(f"augmented covariance must be square, got {M.shape}")
        comp = composite_matrix(M, tol=tol)
        comp.setflags(write=False)
        self._n = n
        self._composite = comp
        self._cho = cholesky_with_jitter(comp, jitter=jitter)

    @property
    def size(self):
        return self._n

    @property
    def composite(self):
        return self._composite

    def composite_solve(self, b):
        """Solve ``C_comp x = b`` for real ``b``."""
        if self._n == 0:
            return np.zeros_like(b, dtype=float)
        return cho_solve(self._cho, b, check_finite=False)

    def logdet_composite(self):
        if self._n == 0:
            return 0.0
        return float(2.0 * np.sum(np.log(np.abs(np.diag(self._cho[0])))))

    def solve(self, rhs):
        """Solve ``M x = rhs`` for an augmented vector or :class:`AugmentedMatrix`."""
        if isinstance(rhs, AugmentedMatrix):
            if rhs.block_shape[0] != self._n:
                raise StructuralError(
                    f"right-hand side has {rhs.block_shape[0]} block rows, expected {self._n}"
                )
            comp = composite_matrix(rhs, hermitian=False)
            return augmented_from_composite(0.5 * self.composite_solve(comp))
        rhs = np.asarray(rhs)
        if rhs.shape[0] != 2 * self._n:
            raise StructuralError(f"right-hand side has length {rhs.shape[0]}, expected {2 * self._n}")
        return to_augmented(0.5 * self.composite_solve(to_composite(rhs)))


def solve_augmented(M, rhs, jitter=True):
    """Solve ``M x = rhs`` through the composite Cholesky factorization.

    Parameters
    ----------
    M : AugmentedMatrix
        Square augmented covariance (Hermitian, positive semidefinite).
    rhs : array_like or AugmentedMatrix
        Conjugate-stacked vector of length ``2n`` or an augmented matrix with
        ``n`` block rows.
    jitter : bool
        Allow diagonal jitter when the plain factorization fails.

    Returns
    -------
    ndarray or AugmentedMatrix
        Solution with the same structure as ``rhs``.
    """
    return AugmentedFactor(M, jitter=jitter).solve(rhs)

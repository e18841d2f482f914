"""Widely linear and strictly linear estimators, and complex GP regression.

Four predictors live here:

* :func:`wlmmse` / :func:`lmmse` act on known second-order statistics.
* :func:`composite_gpr_predict` is ordinary real GP regression applied to the
  stacked ``[Re; Im]`` outputs.
* :class:`WCGPR` (:func:`wcgpr_predict`) uses both the kernel and the
  pseudo-kernel through the augmented covariance.
* :class:`ProperCGPR` (:func:`proper_cgpr_predict`) ignores every
  pseudo-covariance.

The widely GP predictor never forms ``P = C - C~ C^-* C~^*``; it solves
against the augmented covariance once through its composite Cholesky factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve

from .augmented import (
    AugmentedFactor,
    AugmentedMatrix,
    cholesky_with_jitter,
    to_composite,
)
from .exceptions import StructuralError
from .kernels import KernelPair, as_inputs, augmented_gram, gram, proper_pair
from .noise import NoiseModel


def _hsolve(a, b, jitter=True):
    """Solve ``a x = b`` for Hermitian positive definite ``a``."""
    a = 0.5 * (a + a.conj().T)
    if a.shape[0] == 0:
        return np.zeros(b.shape, dtype=np.result_type(a, b))
    return cho_solve(cholesky_with_jitter(a, jitter=jitter), b, check_finite=False)


def _right_hsolve(x, a, jitter=True):
    """``x @ inv(a)`` for Hermitian positive definite ``a``."""
    return _hsolve(a, x.conj().T, jitter).conj().T


def _hermitian(a):
    return 0.5 * (a + a.conj().T)


# -- widely linear MMSE -------------------------------------------------------


@dataclass(frozen=True)
class SecondOrderStats:
    """Joint second-order description of a signal ``f`` (length p) and measurement ``y`` (length n).

    ``R_fy = E[f y^H]``, ``Rt_fy = E[f y^T]``, ``R_yy = E[y y^H]``,
    ``Rt_yy = E[y y^T]`` and ``R_ff = E[f f^H]``.
    """

    R_fy: np.ndarray
    Rt_fy: np.ndarray
    R_yy: np.ndarray
    Rt_yy: np.ndarray
    R_ff: np.ndarray | None = None

    def __post_init__(self):
        for name in ("R_fy", "Rt_fy", "R_yy", "Rt_yy", "R_ff"):
            val = getattr(self, name)
            if val is None:
                continue
            val = np.atleast_2d(np.array(val, dtype=complex))
            val.setflags(write=False)
            object.__setattr__(self, name, val)
        n = self.R_yy.shape[0]
        p = self.R_fy.shape[0]
        if self.R_yy.shape != (n, n) or self.Rt_yy.shape != (n, n):
            raise StructuralError("R_yy and Rt_yy must be square and of equal size")
        if self.R_fy.shape != (p, n) or self.Rt_fy.shape != (p, n):
            raise StructuralError(f"cross statistics must be {p}x{n}")
        if self.R_ff is not None and self.R_ff.shape != (p, p):
            raise StructuralError(f"R_ff must be {p}x{p}")

    @property
    def augmented_measurement_cov(self):
        return AugmentedMatrix(self.R_yy, self.Rt_yy)

    @property
    def augmented_cross_cov(self):
        return AugmentedMatrix(self.R_fy, self.Rt_fy)


def wlmmse_weights(stats, jitter=True):
    """Weights ``(W1, W2)`` of the widely linear estimate ``W1 y + W2 y*``.

    ``W1 = [R_fy - Rt_fy R_yy^-* Rt_yy^*] P^-1`` and
    ``W2 = [Rt_fy - R_fy R_yy^-1 Rt_yy] P^-*`` with
    ``P = R_yy - Rt_yy R_yy^-* Rt_yy^*``.
    """
    R, Rt = stats.R_yy, stats.Rt_yy
    Rc = R.conj()
    P = _hermitian(R - Rt @ _hsolve(Rc, Rt.conj(), jitter))
    left1 = stats.R_fy - _right_hsolve(stats.Rt_fy, Rc, jitter) @ Rt.conj()
    left2 = stats.Rt_fy - _right_hsolve(stats.R_fy, R, jitter) @ Rt
    W1 = _right_hsolve(left1, P, jitter)
    W2 = _right_hsolve(left2, P.conj(), jitter)
    return W1, W2


def wlmmse(stats, y, jitter=True):
    """Widely linear MMSE estimate of ``f`` from ``y`` and its error covariance.

    Returns
    -------
    estimate : ndarray, shape (p,)
    error_cov : ndarray, shape (p, p)
        ``R_ff - W1 R_fy^H - W2 Rt_fy^H``; ``None`` when ``stats.R_ff`` is unset.
    """
    y = np.asarray(y, dtype=complex)
    if y.shape != (stats.R_yy.shape[0],):
        raise StructuralError(f"measurement has shape {y.shape}, expected ({stats.R_yy.shape[0]},)")
    W1, W2 = wlmmse_weights(stats, jitter)
    estimate = W1 @ y + W2 @ y.conj()
    if stats.R_ff is None:
        return estimate, None
    Q = stats.R_ff - W1 @ stats.R_fy.conj().T - W2 @ stats.Rt_fy.conj().T
    return estimate, _hermitian(Q)


def lmmse(stats, y, jitter=True):
    """Strictly linear MMSE estimate ``R_fy R_yy^-1 y``."""
    y = np.asarray(y, dtype=complex)
    if y.shape != (stats.R_yy.shape[0],):
        raise StructuralError(f"measurement has shape {y.shape}, expected ({stats.R_yy.shape[0]},)")
    return stats.R_fy @ _hsolve(stats.R_yy, y, jitter)


def lmmse_error_cov(stats, jitter=True):
    """Error covariance ``R_ff - R_fy R_yy^-1 R_fy^H`` of :func:`lmmse`."""
    if stats.R_ff is None:
        raise StructuralError("R_ff is required for the error covariance")
    return _hermitian(stats.R_ff - stats.R_fy @ _hsolve(stats.R_yy, stats.R_fy.conj().T, jitter))


def reduction_residual(stats, jitter=True):
    """``Rt_fy - R_fy R_yy^-1 Rt_yy``; zero exactly when WLMMSE equals LMMSE."""
    return stats.Rt_fy - stats.R_fy @ _hsolve(stats.R_yy, stats.Rt_yy, jitter)


# -- predictive distributions -------------------------------------------------


@dataclass(frozen=True)
class PredictiveDistribution:
    """Complex predictive mean, covariance ``E[e e^H]`` and pseudo-covariance ``E[e e^T]``.

    When built with ``full_cov=False`` the ``cov`` and ``pseudo_cov`` fields
    hold only the diagonals (shape ``(m,)``).
    """

    mean: np.ndarray
    cov: np.ndarray
    pseudo_cov: np.ndarray

    @property
    def full(self):
        return self.cov.ndim == 2

    @property
    def variance(self):
        return np.real(np.diag(self.cov)) if self.full else np.real(self.cov)

    def augmented_cov(self):
        if not self.full:
            raise StructuralError("augmented covariance needs the full covariance")
        return AugmentedMatrix(self.cov, self.pseudo_cov)

    def augmented_mean(self):
        return np.concatenate([self.mean, self.mean.conj()])


@dataclass(frozen=True)
class CompositePredictive:
    """Real predictive mean (length ``2m``) and covariance of ``[Re f*; Im f*]``."""

    mean: np.ndarray
    cov: np.ndarray


def composite_gpr_predict(K_train, noise_cov, y_comp, K_cross, K_test, jitter=True):
    """Real GP regression on composite outputs.

    Parameters
    ----------
    K_train : ndarray, shape (2n, 2n)
        Block kernel ``[[K_rr, K_ri], [K_ir, K_ii]]`` of the training inputs.
        A ``((K_rr, K_ri), (K_ir, K_ii))`` nesting is also accepted, likewise
        for the other kernel arguments.
    noise_cov : ndarray, shape (2n, 2n)
    y_comp : ndarray, shape (2n,)
    K_cross : ndarray, shape (2m, 2n)
        Block kernel between test and training inputs.
    K_test : ndarray, shape (2m, 2m)
    """
    K_train, K_cross, K_test = (_as_block(a) for a in (K_train, K_cross, K_test))
    noise_cov = _as_block(noise_cov)
    y_comp = np.asarray(y_comp, dtype=float)
    n2 = y_comp.shape[0]
    if K_train.shape != (n2, n2) or noise_cov.shape != (n2, n2):
        raise StructuralError(f"training blocks must be {n2}x{n2}")
    if K_cross.shape != (K_test.shape[0], n2):
        raise StructuralError(f"cross block has shape {K_cross.shape}, expected ({K_test.shape[0]}, {n2})")
    if n2 == 0:
        return CompositePredictive(np.zeros(K_test.shape[0]), K_test.copy())
    C = K_train + noise_cov
    cho = cholesky_with_jitter(0.5 * (C + C.T), jitter=jitter)
    mean = K_cross @ cho_solve(cho, y_comp, check_finite=False)
    cov = K_test - K_cross @ cho_solve(cho, K_cross.T, check_finite=False)
    return CompositePredictive(mean, 0.5 * (cov + cov.T))


def _as_block(a):
    if isinstance(a, (tuple, list)) and len(a) == 2 and isinstance(a[0], (tuple, list)):
        return np.block([[np.asarray(b, dtype=float) for b in row] for row in a])
    return np.asarray(a, dtype=float)


def _observations(X, y):
    X = as_inputs(X)
    y = np.asarray(y, dtype=complex).reshape(-1)
    if y.shape[0] != X.shape[0]:
        raise StructuralError(f"{X.shape[0]} inputs but {y.shape[0]} outputs")
    return X, y


def _test_inputs(Xstar, d):
    if np.size(Xstar) == 0:
        return np.zeros((0, d), dtype=complex)
    return as_inputs(Xstar)


class WCGPR:
    """Widely complex GP regression, conditioned on ``(X, y)``.

    The augmented covariance ``C_aug = K_aug(X, X) + Sigma_aug`` is factorized
    once; predictions at any number of test batches reuse it. Instances are
    immutable after construction.

    Parameters
    ----------
    kp : KernelPair
    noise : NoiseModel
    X : array_like, shape (n, d)
    y : array_like, shape (n,)
    jitter : bool
    """

    def __init__(self, kp, noise, X, y, jitter=True):
        if not isinstance(kp, KernelPair):
            raise StructuralError("WCGPR needs a KernelPair")
        if not isinstance(noise, NoiseModel):
            raise StructuralError("WCGPR needs a NoiseModel")
        X, y = _observations(X, y)
        self.kp = kp
        self.noise = noise
        self.X = X
        self.y = y
        self.cov = augmented_gram(kp, X, X) + noise.augmented(X.shape[0])
        self.factor = AugmentedFactor(self.cov, jitter=jitter)
        self._alpha = self.factor.solve(np.concatenate([y, y.conj()]))[: X.shape[0]]
        self._alpha.setflags(write=False)

    @property
    def n(self):
        return self.X.shape[0]

    def mean(self, Xstar):
        """Predictive mean ``K(X*, X) a + K~(X*, X) a*`` with ``[a; a*] = C_aug^-1 [y; y*]``."""
        Xs = _test_inputs(Xstar, self.X.shape[1])
        K, Kt = gram(self.kp, Xs, self.X)
        return K @ self._alpha + Kt @ self._alpha.conj()

    def predict(self, Xstar, full_cov=True):
        """Predictive distribution at ``Xstar``.

        The covariance and pseudo-covariance are the upper blocks of
        ``K_aug(X*, X*) - K_aug(X*, X) C_aug^-1 K_aug(X, X*)``.
        """
        Xs = _test_inputs(Xstar, self.X.shape[1])
        m = Xs.shape[0]
        cross = augmented_gram(self.kp, Xs, self.X)
        mean = cross.upper_left @ self._alpha + cross.upper_right @ self._alpha.conj()
        G = self.factor.solve(cross.H) if self.n else AugmentedMatrix(
            np.zeros((0, m)), np.zeros((0, m))
        )
        if full_cov:
            prior = augmented_gram(self.kp, Xs, Xs)
            post = prior - cross @ G
            cov = _hermitian(post.upper_left)
            pcov = 0.5 * (post.upper_right + post.upper_right.T)
            return PredictiveDistribution(mean, cov, pcov)
        kd, ktd = self.kp.diag(Xs)
        A, B = cross.upper_left, cross.upper_right
        G1, G2 = G.upper_left, G.upper_right
        var = kd - np.einsum("ij,ji->i", A, G1) - np.einsum("ij,ji->i", B, G2.conj())
        pvar = ktd - np.einsum("ij,ji->i", A, G2) - np.einsum("ij,ji->i", B, G1.conj())
        return PredictiveDistribution(mean, var.real.astype(complex), pvar)

    def properness_residual(self, Xstar):
        """``K~(X*, X) - K(X*, X) C^-1 C~``, with ``C`` and ``C~`` the blocks of ``C_aug``."""
        Xs = _test_inputs(Xstar, self.X.shape[1])
        K, Kt = gram(self.kp, Xs, self.X)
        C, Ct = self.cov.upper_left, self.cov.upper_right
        return Kt - K @ _hsolve(C, Ct)


def wcgpr_predict(kp, noise, X, y, Xstar, full_cov=True, jitter=True):
    """Widely complex GP prediction; see :class:`WCGPR`."""
    return WCGPR(kp, noise, X, y, jitter=jitter).predict(Xstar, full_cov=full_cov)


class ProperCGPR:
    """Strict complex GP regression, ignoring pseudo-kernel and noise pseudo-variance.

    Only ``k`` and the noise variance enter: ``C = K(X, X) + sigma2 I``.
    """

    def __init__(self, k, noise_sigma2, X, y, jitter=True):
        if isinstance(k, KernelPair):
            k = k.k
        self.kp = proper_pair(k)
        if isinstance(noise_sigma2, NoiseModel):
            noise_sigma2 = noise_sigma2.sigma2
        self.sigma2 = float(noise_sigma2)
        if self.sigma2 < 0:
            raise StructuralError("noise variance must be >= 0")
        X, y = _observations(X, y)
        self.X = X
        self.y = y
        K, _ = gram(self.kp, X, X)
        C = _hermitian(K + self.sigma2 * np.eye(X.shape[0]))
        self._cho = cholesky_with_jitter(C, jitter=jitter) if X.shape[0] else None
        self._alpha = self._solve(y)

    def _solve(self, b):
        if self._cho is None:
            return np.zeros(b.shape, dtype=complex)
        return cho_solve(self._cho, b, check_finite=False)

    def mean(self, Xstar):
        Xs = _test_inputs(Xstar, self.X.shape[1])
        K, _ = gram(self.kp, Xs, self.X)
        return K @ self._alpha

    def predict(self, Xstar, full_cov=True):
        Xs = _test_inputs(Xstar, self.X.shape[1])
        m = Xs.shape[0]
        K, _ = gram(self.kp, Xs, self.X)
        mean = K @ self._alpha
        V = self._solve(K.conj().T)
        if full_cov:
            prior, _ = gram(self.kp, Xs, Xs)
            cov = _hermitian(prior - K @ V)
            return PredictiveDistribution(mean, cov, np.zeros((m, m), dtype=complex))
        kd, _ = self.kp.diag(Xs)
        var = np.real(kd - np.einsum("ij,ji->i", K, V))
        return PredictiveDistribution(mean, var.astype(complex), np.zeros(m, dtype=complex))


def proper_cgpr_predict(k, noise_sigma2, X, y, Xstar, full_cov=True, jitter=True):
    """Strict complex GP prediction; see :class:`ProperCGPR`."""
    return ProperCGPR(k, noise_sigma2, X, y, jitter=jitter).predict(Xstar, full_cov=full_cov)


def properness_residual(kp, noise, X, Xstar, jitter=True):
    """``K~(X*, X) - K(X*, X) C^-1 C~`` with ``C = K + sigma2 I`` and ``C~ = K~ + rho sigma2 I``.

    A zero matrix means the strict predictor already gives the widely mean.
    """
    X = as_inputs(X)
    Xs = _test_inputs(Xstar, X.shape[1])
    C, Ct = gram(kp, X, X)
    n = X.shape[0]
    C = C + noise.sigma2 * np.eye(n)
    Ct = Ct + noise.pseudo_variance * np.eye(n)
    K, Kt = gram(kp, Xs, X)
    return Kt - K @ _hsolve(C, Ct, jitter)


def log_marginal_likelihood(kp, noise, X, y, jitter=True):
    """Log density of ``[Re y; Im y]`` under ``N(0, C_comp)``.

    ``C_comp`` is the composite form of ``K_aug(X, X) + Sigma_aug``.
    """
    X, y = _observations(X, y)
    n = X.shape[0]
    if n == 0:
        return 0.0
    C = augmented_gram(kp, X, X) + noise.augmented(n)
    factor = AugmentedFactor(C, jitter=jitter)
    yc = to_composite(np.concatenate([y, y.conj()]))
    quad = float(yc @ factor.composite_solve(yc))
    return -0.5 * quad - 0.5 * factor.logdet_composite() - n * math.log(2.0 * math.pi)


__all__ = [
    "SecondOrderStats",
    "wlmmse_weights",
    "wlmmse",
    "lmmse",
    "lmmse_error_cov",
    "reduction_residual",
    "PredictiveDistribution",
    "CompositePredictive",
    "composite_gpr_predict",
    "WCGPR",
    "wcgpr_predict",
    "ProperCGPR",
    "proper_cgpr_predict",
    "properness_residual",
    "log_marginal_likelihood",
]

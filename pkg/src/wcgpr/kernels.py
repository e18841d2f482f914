"""Kernel / pseudo-kernel pairs over complex inputs.

A :class:`KernelPair` bundles the covariance function ``k(x, x') = E[f(x) f(x')^*]``
and the pseudo-covariance function ``k~(x, x') = E[f(x) f(x')]``. Both are
stored as vectorized callables mapping input sets of shapes ``(m1, d)`` and
``(m2, d)`` to an ``(m1, m2)`` complex matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.signal import fftconvolve

from .augmented import AugmentedMatrix, composite_matrix
from .exceptions import StructuralError
from .synthesis import WidelyLinearFilterModel


def as_inputs(X):
    """Coerce to a complex ``(m, d)`` input set; 1-D arrays are ``d = 1``."""
    X = np.asarray(X, dtype=complex)
    if X.ndim == 0:
        X = X.reshape(1, 1)
    elif X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[1] < 1:
        raise StructuralError(f"inputs must be (m, d) with d >= 1, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise StructuralError("inputs contain non-finite coordinates")
    return X


def _zeros(X1, X2):
    return np.zeros((X1.shape[0], X2.shape[0]), dtype=complex)


def _zeros_diag(X):
    return np.zeros(X.shape[0], dtype=complex)


_zeros.diag = _zeros_diag


@dataclass(frozen=True)
class KernelPair:
    """Covariance ``k`` and pseudo-covariance ``k_tilde`` of a complex process.

    The callables may expose a ``diag(X)`` attribute for cheap evaluation of
    ``k(x_i, x_i)``; otherwise the diagonal is computed point by point.
    """

    k: Callable
    k_tilde: Callable = _zeros
    descriptor: dict = field(default_factory=dict)

    @property
    def is_proper(self):
        return self.k_tilde is _zeros

    def diag(self, X):
        """``(k(x_i, x_i), k~(x_i, x_i))`` for every row of ``X``."""
        X = as_inputs(X)
        return _diag(self.k, X), _diag(self.k_tilde, X)

    def conj(self):
        """Pair of the conjugate process ``f*``: ``(k*, k~*)``."""
        k, kt = self.k, self.k_tilde

        def kc(X1, X2):
            return np.conj(k(X1, X2))

        def ktc(X1, X2):
            return np.conj(kt(X1, X2))

        return KernelPair(kc, _zeros if self.is_proper else ktc, dict(self.descriptor, conjugated=True))


def _diag(fn, X):
    if hasattr(fn, "diag"):
        return np.asarray(fn.diag(X), dtype=complex)
    return np.array([fn(X[i : i + 1], X[i : i + 1])[0, 0] for i in range(X.shape[0])], dtype=complex)


def proper_pair(k, descriptor=None):
    """Kernel pair with identically zero pseudo-kernel."""
    return KernelPair(k, _zeros, dict(descriptor or {}))


def gram(kp, X, X2=None):
    """Gram matrices ``K[i, l] = k(X[i], X2[l])`` and ``K~[i, l] = k~(X[i], X2[l])``."""
    X = as_inputs(X)
    X2 = X if X2 is None else as_inputs(X2)
    if X.shape[1] != X2.shape[1]:
        raise StructuralError(f"input dimensions differ: {X.shape[1]} vs {X2.shape[1]}")
    shape = (X.shape[0], X2.shape[0])
    if 0 in shape:
        return np.zeros(shape, dtype=complex), np.zeros(shape, dtype=complex)
    K = np.asarray(kp.k(X, X2), dtype=complex)
    Kt = np.asarray(kp.k_tilde(X, X2), dtype=complex)
    if K.shape != shape or Kt.shape != shape:
        raise StructuralError(f"kernel returned shapes {K.shape}/{Kt.shape}, expected {shape}")
    return K, Kt


def augmented_gram(kp, X, X2=None):
    """Augmented Gram matrix ``[[K, K~], [K~*, K*]]`` as an :class:`AugmentedMatrix`."""
    K, Kt = gram(kp, X, X2)
    return AugmentedMatrix(K, Kt)


def composite_gram(kp, X, X2=None):
    """Real block kernel ``[[K_rr, K_ri], [K_ir, K_ii]]`` of the composite outputs."""
    return composite_matrix(augmented_gram(kp, X, X2), hermitian=False)


# -- parametric pairs ---------------------------------------------------------


class SquaredExponential:
    """``variance * exp(-||x - x'||^2 / (2 lengthscale^2))`` on complex inputs."""

    def __init__(self, variance=1.0, lengthscale=1.0, scale=1.0):
        if not variance >= 0 or not lengthscale > 0:
            raise StructuralError("squared exponential needs variance >= 0 and lengthscale > 0")
        self.variance = float(variance)
        self.lengthscale = float(lengthscale)
        self.scale = complex(scale)

    def __call__(self, X1, X2):
        d2 = np.zeros((X1.shape[0], X2.shape[0]))
        for c in range(X1.shape[1]):
            d2 += np.abs(X1[:, c][:, None] - X2[:, c][None, :]) ** 2
        return self.scale * self.variance * np.exp(-0.5 * d2 / self.lengthscale**2)

    def diag(self, X):
        return np.full(X.shape[0], self.scale * self.variance, dtype=complex)


def squared_exponential_pair(variance=1.0, lengthscale=1.0, pseudo_ratio=0.0):
    """Squared-exponential ``k`` with ``k~ = pseudo_ratio * k``.

    The augmented Gram matrix is ``[[1, c], [c*, 1]] (x) K``, which is PSD
    exactly when ``|pseudo_ratio| <= 1``.
    """
    c = complex(pseudo_ratio)
    if abs(c) > 1.0:
        raise StructuralError(f"|pseudo_ratio| must be <= 1, got {abs(c)}")
    desc = {
        "kind": "squared_exponential",
        "variance": float(variance),
        "lengthscale": float(lengthscale),
        "pseudo_ratio": [c.real, c.imag],
    }
    k = SquaredExponential(variance, lengthscale)
    if c == 0:
        return KernelPair(k, _zeros, desc)
    return KernelPair(k, SquaredExponential(variance, lengthscale, c), desc)


# -- filter-induced pair ------------------------------------------------------


def cross_correlation(a, b):
    """Linear 2-D cross-correlation ``c[t] = sum_u a[u] b[u - t]`` over all lags.

    Output index ``t + (shape - 1)`` holds lag ``t``, so the zero lag sits at
    the center of the ``(2 n0 - 1, 2 n1 - 1)`` result.
    """
    return fftconvolve(a, b[::-1, ::-1], mode="full")


class LagTable:
    """Tabulated stationary function of the complex lag, read back bilinearly.

    Lags outside the tabulated support evaluate to 0.
    """

    def __init__(self, values, spacing):
        values = np.asarray(values, dtype=complex)
        n0, n1 = values.shape
        self.values = values
        self.spacing = spacing
        axes = [np.arange(-(n - 1) // 2, (n - 1) // 2 + 1) * h for n, h in zip((n0, n1), spacing)]
        self._interp = RegularGridInterpolator(
            axes, values, method="linear", bounds_error=False, fill_value=0.0
        )

    def at_lag(self, tau):
        tau = np.asarray(tau, dtype=complex)
        pts = np.stack([tau.real.ravel(), tau.imag.ravel()], axis=-1)
        return self._interp(pts).reshape(tau.shape)

    def __call__(self, X1, X2):
        if X1.shape[1] != 1:
            raise StructuralError("filter-induced kernels are defined for scalar complex inputs (d = 1)")
        return self.at_lag(X1[:, 0][:, None] - X2[:, 0][None, :])

    def diag(self, X):
        return np.full(X.shape[0], self.at_lag(0.0), dtype=complex)


def filter_induced_kernel(model, spacing=None):
    """Exact second-order functions of the process synthesized from ``model``.

    With ``c_ab(tau) = sum_u a(u) b(u - tau)`` over the grid lattice::

        k(tau)  = c_{h1, h1*}(tau) + c_{h2, h2*}(tau)
        k~(tau) = c_{h1, h2}(tau)  + c_{h2, h1}(tau)

    where ``tau = x - x'`` is measured in input units through the grid
    spacing. Values between lattice lags are interpolated bilinearly.

    Parameters
    ----------
    model : WidelyLinearFilterModel
    spacing : tuple of float, optional
        Lattice spacing along ``(Re, Im)``; taken from the model grid when
        omitted. Required for single-node axes.
    """
    if not isinstance(model, WidelyLinearFilterModel):
        raise StructuralError("filter_induced_kernel expects a WidelyLinearFilterModel")
    if spacing is None:
        spacing = model.grid.spacing
    spacing = tuple(spacing)
    if len(spacing) != 2 or any(h is None or not h > 0 for h in spacing):
        raise StructuralError(f"grid spacing must be two positive numbers, got {spacing}")
    h1, h2 = model.filters
    k = cross_correlation(h1, h1.conj()) + cross_correlation(h2, h2.conj())
    # remove FFT round-off so that k(-t) = k(t)* and k~(-t) = k~(t) hold exactly
    k = 0.5 * (k + k[::-1, ::-1].conj())
    if model.is_proper:
        kt = None
    else:
        kt = cross_correlation(h1, h2) + cross_correlation(h2, h1)
        kt = 0.5 * (kt + kt[::-1, ::-1])
    desc = {
        "kind": "filter_induced",
        "gamma": model.gamma,
        "amplitudes": list(model.amplitudes),
        "normalize": model.normalize,
        "spacing": list(spacing),
    }
    k_fn = LagTable(k, spacing)
    kt_fn = _zeros if kt is None else LagTable(kt, spacing)
    return KernelPair(k_fn, kt_fn, desc)


def kernel_from_descriptor(desc, model=None):
    """Rebuild a kernel pair from its descriptor (see ``KernelPair.descriptor``)."""
    kind = desc.get("kind", "filter_induced")
    if kind == "filter_induced":
        if model is None:
            raise StructuralError("a filter-induced kernel needs the filter model")
        return filter_induced_kernel(model, desc.get("spacing"))
    if kind == "squared_exponential":
        ratio = desc.get("pseudo_ratio", 0.0)
        if isinstance(ratio, (list, tuple)):
            ratio = complex(*ratio)
        return squared_exponential_pair(desc.get("variance", 1.0), desc.get("lengthscale", 1.0), ratio)
    raise StructuralError(f"unknown kernel kind {kind!r}")


# -- validation ---------------------------------------------------------------


@dataclass(frozen=True)
class ValidationReport:
    hermitian_residual: float
    symmetry_residual: float
    min_eigenvalue: float
    max_eigenvalue: float
    tol: float

    @property
    def psd(self):
        return self.min_eigenvalue >= -self.tol * max(self.max_eigenvalue, 0.0)

    @property
    def passed(self):
        return self.hermitian_residual < self.tol and self.symmetry_residual < self.tol and self.psd

    def __bool__(self):
        return self.passed

    def failures(self):
        out = []
        if self.hermitian_residual >= self.tol:
            out.append(f"K not Hermitian (residual {self.hermitian_residual:.3e})")
        if self.symmetry_residual >= self.tol:
            out.append(f"K~ not symmetric (residual {self.symmetry_residual:.3e})")
        if not self.psd:
            out.append(
                f"augmented Gram not PSD (min eigenvalue {self.min_eigenvalue:.3e}, "
                f"max {self.max_eigenvalue:.3e})"
            )
        return out

    def summary(self):
        status = "PASS" if self.passed else "FAIL"
        lines = [
            f"kernel pair validation: {status}",
            f"  hermitian residual of K : {self.hermitian_residual:.3e}",
            f"  symmetry residual of K~ : {self.symmetry_residual:.3e}",
            f"  augmented Gram eigenvalues in [{self.min_eigenvalue:.3e}, {self.max_eigenvalue:.3e}]",
        ]
        lines += [f"  - {f}" for f in self.failures()]
        return "\n".join(lines)


def validate_kernel_pair(kp, X, tol=1e-10):
    """Check Hermitian/symmetric structure and joint PSD-ness on the inputs ``X``.

    Residuals are relative to the largest Gram entry. Never raises on a
    failing pair; inspect the returned report.
    """
    X = as_inputs(X)
    if X.shape[0] < 1:
        raise StructuralError("validation needs at least one input point")
    K, Kt = gram(kp, X, X)
    scale = max(np.max(np.abs(K)), np.max(np.abs(Kt)), np.finfo(float).tiny)
    herm = float(np.max(np.abs(K - K.conj().T)) / scale)
    sym = float(np.max(np.abs(Kt - Kt.T)) / scale)
    full = AugmentedMatrix(K, Kt).materialize()
    eig = np.linalg.eigvalsh(0.5 * (full + full.conj().T))
    return ValidationReport(herm, sym, float(eig[0]), float(eig[-1]), float(tol))

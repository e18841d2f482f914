"""Improper complex Gaussian noise description."""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

from .augmented import AugmentedMatrix
from .exceptions import StructuralError


@dataclass(frozen=True)
class NoiseModel:
    """I.i.d. complex Gaussian noise with ``E|e|^2 = sigma2`` and ``E[e^2] = rho * sigma2``.

    ``|rho| <= 1`` is required for the augmented covariance to be PSD.
    """

    sigma2: float
    rho: complex = 0.0

    def __post_init__(self):
        sigma2 = float(self.sigma2)
        rho = complex(self.rho)
        if not np.isfinite(sigma2) or sigma2 < 0.0:
            raise StructuralError(f"noise variance must be finite and >= 0, got {sigma2}")
        if not cmath.isfinite(rho) or abs(rho) > 1.0 + 1e-12:
            raise StructuralError(f"|rho| must be <= 1, got {abs(rho)}")
        object.__setattr__(self, "sigma2", sigma2)
        object.__setattr__(self, "rho", rho)

    @classmethod
    def from_sigma(cls, sigma, rho=0.0):
        """Build from the standard deviation ``sigma`` rather than the variance."""
        return cls(float(sigma) ** 2, rho)

    @property
    def pseudo_variance(self):
        return self.rho * self.sigma2

    @property
    def is_proper(self):
        return self.rho == 0 or self.sigma2 == 0.0

    def augmented(self, n):
        """Augmented covariance of ``n`` i.i.d. samples: blocks ``sigma2 I`` and ``rho sigma2 I``."""
        eye = np.eye(n)
        return AugmentedMatrix(self.sigma2 * eye, self.pseudo_variance * eye)

    def composite_cov(self):
        """2x2 covariance of ``(Re e, Im e)``."""
        s, r = self.sigma2, self.rho
        return 0.5 * s * np.array([[1.0 + r.real, r.imag], [r.imag, 1.0 - r.real]])

    def conj(self):
        return NoiseModel(self.sigma2, self.rho.conjugate())

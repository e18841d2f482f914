import numpy as np
import pytest

from wcgpr.augmented import transform_matrix
from wcgpr.estimators import SecondOrderStats, composite_gpr_predict
from wcgpr.kernels import KernelPair, SquaredExponential, augmented_gram, squared_exponential_pair
from wcgpr.noise import NoiseModel

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def dense_composite(M_full):
    """Oracle: T^H M T / 4 by explicit multiplication, imaginary residual checked."""
    n = M_full.shape[0] // 2
    m = M_full.shape[1] // 2
    out = transform_matrix(n).conj().T @ M_full @ transform_matrix(m) / 4
    assert np.max(np.abs(out.imag)) <= 1e-12 * max(np.max(np.abs(out)), 1.0)
    return out.real


def composite_oracle(kp, noise, X, y, Xs):
    """Composite GP on blocks built with the dense T transform."""
    n = len(X)
    Ktr = dense_composite(augmented_gram(kp, X).materialize())
    Kx = dense_composite(augmented_gram(kp, Xs, X).materialize())
    Kte = dense_composite(augmented_gram(kp, Xs).materialize())
    N = dense_composite(noise.augmented(n).materialize())
    yc = np.concatenate([y.real, y.imag])
    return composite_gpr_predict(Ktr, N, yc, Kx, Kte)


def random_inputs(rng, m, d):
    return rng.uniform(-2, 2, (m, d)) + 1j * rng.uniform(-2, 2, (m, d))


def random_improper_pair(rng):
    """Sum of two squared-exponential pairs with random pseudo ratios (valid by construction)."""
    parts = []
    for _ in range(2):
        c = rng.uniform(0, 1) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        parts.append((rng.uniform(0.3, 2.0), rng.uniform(0.5, 2.0), c))

    def k(X1, X2):
        return sum(SquaredExponential(v, ell)(X1, X2) for v, ell, _ in parts)

    def kt(X1, X2):
        return sum(SquaredExponential(v, ell, c)(X1, X2) for v, ell, c in parts)

    return KernelPair(k, kt, {"kind": "random_sum"})


def random_noise(rng, proper=False):
    rho = 0.0 if proper else rng.uniform(0, 0.95) * np.exp(1j * rng.uniform(0, 2 * np.pi))
    return NoiseModel(rng.uniform(0.05, 0.5), rho)


def random_widely_linear_stats(rng, p, n, with_pseudo_ff=False):
    """Joint statistics of [f; y] = A w + B w* with proper white w, plus white noise on y."""
    q = p + n + 2
    A = rng.standard_normal((p + n, q)) + 1j * rng.standard_normal((p + n, q))
    B = 0.7 * (rng.standard_normal((p + n, q)) + 1j * rng.standard_normal((p + n, q)))
    R = A @ A.conj().T + B @ B.conj().T
    Rt = A @ B.T + B @ A.T
    R[p:, p:] += 0.5 * np.eye(n)
    stats = SecondOrderStats(R[:p, p:], Rt[:p, p:], R[p:, p:], Rt[p:, p:], R[:p, :p])
    if with_pseudo_ff:
        return stats, Rt[:p, :p]
    return stats


def se_pair(rng=None, pseudo_ratio=0.0):
    return squared_exponential_pair(1.3, 0.8, pseudo_ratio)

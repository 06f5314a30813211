"""Exact Gaussian-process regression with an isotropic RBF kernel.

Hyperparameters are fitted by maximising the log-marginal likelihood with
multi-start Nelder-Mead in log space. The prior mean is the constant
empirical mean of the training outputs, recomputed on every fit.

The likelihood is evaluated thousands of times per fit, so its core is
compiled with numba; prediction uses plain numpy/scipy.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numba
import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular

from .optim import NmConfig, multi_start

__all__ = [
    "Hyperparams",
    "Dataset",
    "GpPosterior",
    "GPModel",
    "MleConfig",
    "MleResult",
    "NumericalDegeneracyError",
    "DEFAULT_HYPERPARAMS",
    "rbf_kernel",
    "log_marginal_likelihood",
    "fit_mle",
    "predict",
]

JITTER_START = 1e-10
JITTER_MAX = 1e-4
_LOG_2PI = math.log(2.0 * math.pi)


class NumericalDegeneracyError(np.linalg.LinAlgError):
    """The kernel matrix could not be factorised even with maximal jitter."""


@dataclass(frozen=True)
class Hyperparams:
    """RBF kernel hyperparameters.

    ``noise_std`` may be exactly zero for noise-free interpolation; the
    other two must be strictly positive.
    """

    signal_std: float
    length_scale: float
    noise_std: float

    def __post_init__(self):
        vals = (self.signal_std, self.length_scale, self.noise_std)
        if not all(np.isfinite(vals)):
            raise ValueError("hyperparameters must be finite")
        if self.signal_std <= 0 or self.length_scale <= 0 or self.noise_std < 0:
            raise ValueError("hyperparameters must be positive")

    @classmethod
    def from_log(cls, theta):
        theta = np.asarray(theta, dtype=float)
        return cls(*(float(v) for v in np.exp(theta)))

    def to_log(self):
        return np.log([self.signal_std, self.length_scale, self.noise_std])

    def scaled(self, s: float) -> "Hyperparams":
        """Hyperparameters for outputs multiplied by ``s``."""
        return Hyperparams(self.signal_std * s, self.length_scale, self.noise_std * s)


DEFAULT_HYPERPARAMS = Hyperparams(1.0, 0.25, 0.1)


@dataclass(frozen=True)
class GpPosterior:
    mean: np.ndarray
    variance: np.ndarray

    @property
    def std(self):
        return np.sqrt(self.variance)


def _sqdist(a, b):
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    d2 = (a * a).sum(1)[:, None] + (b * b).sum(1)[None, :] - 2.0 * a @ b.T
    return np.maximum(d2, 0.0)


def _sqdist_exact(a):
    diff = a[:, None, :] - a[None, :, :]
    return (diff * diff).sum(-1)


def rbf_kernel(a, b, hp: Hyperparams):
    """sigma_f^2 exp(-|a-b|^2 / (2 l^2)).

    Vectors give a scalar; (n, d) and (m, d) arrays give an (n, m) matrix.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim == 1 and b.ndim == 1:
        if a.shape != b.shape:
            raise ValueError("dimension mismatch")
        r2 = float(((a - b) ** 2).sum())
        return hp.signal_std**2 * math.exp(-r2 / (2.0 * hp.length_scale**2))
    if a.ndim == 1:
        a = a[None, :]
    if b.ndim == 1:
        b = b[None, :]
    if a.shape[1] != b.shape[1]:
        raise ValueError("dimension mismatch")
    diff = a[:, None, :] - b[None, :, :]
    return hp.signal_std**2 * np.exp(-(diff * diff).sum(-1) / (2.0 * hp.length_scale**2))


@numba.njit(cache=True)
def _lml_core(sf2, ell, se2, sq, yc):
    n = yc.shape[0]
    c = -0.5 / (ell * ell)
    K = np.empty((n, n))
    for i in range(n):
        for j in range(i + 1):
            v = sf2 * np.exp(c * sq[i, j])
            K[i, j] = v
            K[j, i] = v
    # first attempt without jitter, then 1e-10 * sf2 escalating tenfold
    jitter = 0.0
    ok = False
    L = K
    while jitter <= JITTER_MAX * 1.000001:
        A = K.copy()
        for i in range(n):
            A[i, i] += se2 + jitter * sf2
        try:
            L = np.linalg.cholesky(A)
            ok = True
            break
        except Exception:
            jitter = JITTER_START if jitter == 0.0 else jitter * 10.0
    if not ok:
        return -np.inf
    a = np.empty(n)
    logdet = 0.0
    for i in range(n):
        s = yc[i]
        for k in range(i):
            s -= L[i, k] * a[k]
        a[i] = s / L[i, i]
        logdet += np.log(L[i, i])
    return -0.5 * (a @ a) - logdet - 0.5 * n * _LOG_2PI


def log_marginal_likelihood(X, y, hp: Hyperparams) -> float:
    """Log-marginal likelihood with the prior mean set to ``mean(y)``.

    Raises NumericalDegeneracyError when K + sigma_eps^2 I cannot be
    factorised.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if len(X) != len(y) or len(y) == 0:
        raise ValueError("X and y must be non-empty and of equal length")
    val = _lml_core(
        hp.signal_std**2, hp.length_scale, hp.noise_std**2, _sqdist_exact(X), y - y.mean()
    )
    if not np.isfinite(val):
        raise NumericalDegeneracyError("kernel matrix is numerically singular")
    return float(val)


def _factorize(K, diag_add, scale):
    """Lower Cholesky factor of K + (diag_add + jitter*scale) I.

    Jitter is zero unless the factorisation fails, then escalates from
    ``JITTER_START`` tenfold up to ``JITTER_MAX``.
    """
    n = len(K)
    jitter = 0.0
    while jitter <= JITTER_MAX * 1.000001:
        A = K + (diag_add + jitter * scale) * np.eye(n)
        try:
            return cholesky(A, lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            jitter = JITTER_START if jitter == 0.0 else jitter * 10.0
    raise NumericalDegeneracyError("kernel matrix is numerically singular")


class GPModel:
    """GP conditioned on (X, y) under fixed hyperparameters.

    Immutable after construction, so ``predict`` is safe to share.
    """

    def __init__(self, X, y, hp: Hyperparams):
        self.X = np.atleast_2d(np.asarray(X, dtype=float)).copy()
        self.y = np.asarray(y, dtype=float).ravel().copy()
        if len(self.X) != len(self.y) or len(self.y) == 0:
            raise ValueError("X and y must be non-empty and of equal length")
        self.hp = hp
        self.prior_mean = float(self.y.mean())
        sf2 = hp.signal_std**2
        K = rbf_kernel(self.X, self.X, hp)
        self._L = _factorize(K, hp.noise_std**2, sf2)
        self._alpha = cho_solve((self._L, True), self.y - self.prior_mean, check_finite=False)

    def predict(self, queries) -> GpPosterior:
        Q = np.atleast_2d(np.asarray(queries, dtype=float))
        Ks = rbf_kernel(self.X, Q, self.hp)
        mean = self.prior_mean + Ks.T @ self._alpha
        v = solve_triangular(self._L, Ks, lower=True, check_finite=False)
        var = self.hp.signal_std**2 - (v * v).sum(0)
        return GpPosterior(mean, np.maximum(var, 0.0))


def predict(X, y, hp: Hyperparams, queries) -> GpPosterior:
    return GPModel(X, y, hp).predict(queries)


@dataclass(frozen=True)
class MleConfig:
    """Search settings for hyperparameter MLE (natural-unit bounds)."""

    n_starts: int = 8
    max_iters: int | None = None
    f_tol: float = 1e-8
    signal_bounds: tuple = (1e-3, 1e3)
    length_bounds: tuple = (1e-2, 10.0)
    noise_bounds: tuple = (1e-6, 10.0)

    def nm_config(self) -> NmConfig:
        bounds = [np.log(self.signal_bounds), np.log(self.length_bounds), np.log(self.noise_bounds)]
        return NmConfig(
            bounds=bounds, max_iters=self.max_iters, f_tol=self.f_tol, n_starts=self.n_starts
        )


@dataclass(frozen=True)
class MleResult:
    hp: Hyperparams
    lml: float
    fallback: bool = False


def fit_mle(X, y, config: MleConfig | None = None, seed=None) -> MleResult:
    """Maximum-likelihood hyperparameters by multi-start Nelder-Mead.

    With a single observation the likelihood cannot identify anything and
    the defaults are returned. If every start fails numerically the
    defaults are returned with ``fallback=True`` and a warning.
    """
    config = config or MleConfig()
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    sq = _sqdist_exact(X)
    yc = y - y.mean()

    def lml_at(hp):
        return _lml_core(hp.signal_std**2, hp.length_scale, hp.noise_std**2, sq, yc)

    if len(y) < 2:
        return MleResult(DEFAULT_HYPERPARAMS, float(lml_at(DEFAULT_HYPERPARAMS)))

    def objective(theta):
        return _lml_core(
            math.exp(2.0 * theta[0]), math.exp(theta[1]), math.exp(2.0 * theta[2]), sq, yc
        )

    theta, best = multi_start(objective, config.nm_config(), seed=seed)
    if theta is None or not np.isfinite(best):
        warnings.warn("all MLE starts failed; using default hyperparameters", RuntimeWarning)
        return MleResult(DEFAULT_HYPERPARAMS, float(lml_at(DEFAULT_HYPERPARAMS)), fallback=True)
    return MleResult(Hyperparams.from_log(theta), float(best))


class Dataset:
    """Observed (input, output) pairs plus their normalisation record.

    Inputs are kept raw and exposed mapped to the unit cube through the
    feasible box ``bounds``; outputs are exposed standardised.
    """

    def __init__(self, bounds, inputs=None, outputs=None):
        b = np.asarray(bounds, dtype=float)
        if b.ndim != 2 or b.shape[1] != 2 or np.any(b[:, 0] >= b[:, 1]):
            raise ValueError("bounds must be (d, 2) with lo < hi")
        self.bounds = b
        self._x = []
        self._y = []
        if inputs is not None:
            for xi, yi in zip(inputs, outputs):
                self.append(xi, yi)

    def __len__(self):
        return len(self._y)

    @property
    def dim(self):
        return len(self.bounds)

    def append(self, x, y):
        x = np.asarray(x, dtype=float).ravel()
        if x.shape != (self.dim,):
            raise ValueError(f"expected a {self.dim}-vector")
        self._x.append(x)
        self._y.append(float(y))

    @property
    def inputs(self) -> np.ndarray:
        return np.array(self._x).reshape(-1, self.dim)

    @property
    def outputs(self) -> np.ndarray:
        return np.array(self._y)

    def to_unit(self, x):
        lo, hi = self.bounds[:, 0], self.bounds[:, 1]
        return (np.asarray(x, dtype=float) - lo) / (hi - lo)

    def from_unit(self, u):
        lo, hi = self.bounds[:, 0], self.bounds[:, 1]
        return lo + np.asarray(u, dtype=float) * (hi - lo)

    @property
    def unit_inputs(self) -> np.ndarray:
        return self.to_unit(self.inputs)

    @property
    def output_mean(self) -> float:
        return float(np.mean(self._y))

    @property
    def output_scale(self) -> float:
        s = float(np.std(self._y)) if len(self._y) > 1 else 0.0
        return s if s > 0 else 1.0

    @property
    def standardized_outputs(self) -> np.ndarray:
        return (self.outputs - self.output_mean) / self.output_scale

"""Subsample relative-error loss over random batch pairs.

For a batch b and a half-size sub-batch c drawn from it, the loss of a
kernel dictionary is

    rho = 1 - (y_c' K_c^{-1} y_c) / (y_b' K_b^{-1} y_b),

the relative RKHS error incurred by predicting from half the data, which
lies in [0, 1].  Both quadratic forms use kernel values sliced from the
*same* batch Gram matrix and share one nugget (resolved from the batch
diagonal), which preserves that range exactly: the sub-matrix quadratic
form of a positive-definite matrix never exceeds the full one.

Quadratic forms double as Gaussian log-density terms: each equals
-2 times the quadratic part of log N(y; 0, K + eps I), so rho compares
the same data under nested models.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from ._validation import check_positive_int
from .exceptions import DegenerateBatchError
from .kernels import cholesky_factor, pairwise_stats, resolve_nugget

__all__ = [
    "KFConfig",
    "BatchPair",
    "RhoValue",
    "RhoGradient",
    "MeanRhoResult",
    "BaseGramCache",
    "sample_batch_pair",
    "rho",
    "mean_rho",
    "mean_rho_detail",
    "rho_gradient",
]

# A batch is degenerate when its denominator quadratic form all but
# vanishes relative to the target energy.
DEGENERACY_GUARD = 1e-12

# How many replacement draws a degenerate batch gets before giving up.
MAX_RESAMPLES = 10


@dataclass(frozen=True)
class KFConfig:
    """Loss-evaluation settings: batch geometry, seed, and nugget policy.

    ``batch_size=None`` resolves to ``min(64, N)`` at use time;
    ``nugget=None`` applies the default diagonal-relative policy.
    """

    batch_size: int | None = None
    n_batches: int = 32
    seed: int = 0
    nugget: float | None = None

    def __post_init__(self):
        check_positive_int(self.n_batches, "n_batches")
        if self.batch_size is not None:
            check_positive_int(self.batch_size, "batch_size")

    def resolved_batch_size(self, n):
        if self.batch_size is None:
            return min(64, int(n))
        return min(self.batch_size, int(n))


@dataclass(frozen=True)
class BatchPair:
    """Indices of one batch and a sub-batch drawn from it, plus their seed.

    The sampler always produces a half-size sub-batch; the type itself only
    requires containment and uniqueness, so degenerate configurations
    (e.g. sub == batch, which forces rho = 0) remain expressible in tests.
    """

    batch_indices: tuple
    sub_indices: tuple
    seed: tuple

    def __post_init__(self):
        batch = tuple(int(i) for i in self.batch_indices)
        sub = tuple(int(i) for i in self.sub_indices)
        if len(set(batch)) != len(batch):
            raise ValueError("batch_indices contain duplicates")
        if len(set(sub)) != len(sub):
            raise ValueError("sub_indices contain duplicates")
        if not set(sub) <= set(batch):
            raise ValueError("sub_indices must be drawn from batch_indices")
        if not sub:
            raise ValueError("sub_indices must be nonempty")
        object.__setattr__(self, "batch_indices", batch)
        object.__setattr__(self, "sub_indices", sub)
        object.__setattr__(self, "seed", tuple(int(s) for s in np.atleast_1d(self.seed)))

    @property
    def sub_positions(self):
        """Positions of the sub-batch inside the batch index list."""
        lookup = {index: position for position, index in enumerate(self.batch_indices)}
        return tuple(lookup[i] for i in self.sub_indices)


@dataclass(frozen=True)
class RhoValue:
    """One loss evaluation and the two quadratic forms behind it."""

    rho: float
    numerator_qf: float
    denominator_qf: float

    def __post_init__(self):
        ratio = 1.0 - self.numerator_qf / self.denominator_qf
        if abs(self.rho - max(ratio, 0.0)) > 1e-12:
            raise ValueError(
                f"rho={self.rho} is inconsistent with its quadratic forms "
                f"({self.numerator_qf}, {self.denominator_qf})"
            )
        if not 0.0 <= self.rho <= 1.0 + 1e-9:
            raise ValueError(f"rho={self.rho} outside [0, 1]")


@dataclass(frozen=True)
class RhoGradient:
    """Gradient of rho in the mixture weights and log-hyperparameters.

    ``theta`` has one entry per dictionary kernel; ``log_beta`` holds one
    array per kernel with a slot per hyperparameter (zeros for the
    non-learnable polynomial degree, empty for the linear kernel).
    ``value`` is the loss at the evaluation point, available for free.
    """

    theta: np.ndarray
    log_beta: tuple
    value: float


@dataclass(frozen=True)
class MeanRhoResult:
    """Average loss plus the per-batch values and replayable pairs."""

    mean: float
    values: tuple
    pairs: tuple


def _child_seed(base, *extra):
    """Flatten a base seed plus derivation indices into one entropy tuple."""
    if isinstance(base, (tuple, list)):
        return tuple(int(s) for s in base) + tuple(int(e) for e in extra)
    return (int(base),) + tuple(int(e) for e in extra)


def sample_batch_pair(N, batch_size, rng_seed):
    """Draw a batch uniformly without replacement, then half of it again.

    Deterministic for a fixed seed; both index lists come out sorted.
    """
    N = int(N)
    batch_size = int(batch_size)
    if not 2 <= batch_size <= N:
        raise ValueError(
            f"batch_size must be between 2 and N={N}, got {batch_size}"
        )
    seed = _child_seed(rng_seed)
    rng = np.random.default_rng(seed)
    batch = np.sort(rng.choice(N, size=batch_size, replace=False))
    sub = np.sort(rng.choice(batch, size=batch_size // 2, replace=False))
    return BatchPair(tuple(batch), tuple(sub), seed)


class BaseGramCache:
    """Per-kernel Gram values over a fixed point set.

    When hyperparameters are frozen, every batch Gram matrix is a slice of
    these full-dataset stacks, so weight sweeps avoid re-evaluating
    kernels.  The cache is keyed on the kernel tuple; a dictionary with
    different hyperparameters simply misses.
    """

    def __init__(self, kernels, X):
        sq, dot = pairwise_stats(np.asarray(X, dtype=np.float64))
        self.kernels = tuple(kernels)
        stack = np.stack([k.value(sq, dot) for k in self.kernels])
        self.stack = 0.5 * (stack + stack.transpose(0, 2, 1))

    @property
    def nbytes(self):
        return self.stack.nbytes

    def matches(self, kernels):
        return tuple(kernels) == self.kernels

    def batch_bases(self, indices):
        ix = np.asarray(indices, dtype=np.intp)
        return self.stack[:, ix[:, None], ix]


def _quadratic_form(factor, y):
    """y' M^{-1} y via the Cholesky factor of M; nonnegative by construction."""
    half = solve_triangular(factor, y, lower=True)
    return float(half @ half), half


def _pair_system(dictionary, data, pair, nugget, cache=None, need_bases=False):
    """Shared assembly for rho and its gradient.

    Returns the batch bases (or None), regularized batch/sub factorizations,
    representer coefficients, both quadratic forms, and the index arrays.
    """
    batch = np.asarray(pair.batch_indices, dtype=np.intp)
    if batch.max() >= data.n:
        raise ValueError(
            f"batch index {batch.max()} out of range for dataset of size {data.n}"
        )
    pos = np.asarray(pair.sub_positions, dtype=np.intp)
    y_b = data.y[batch]
    y_c = y_b[pos]

    theta_sq = np.square(dictionary.theta_array)
    bases = None
    if cache is not None and cache.matches(dictionary.kernels):
        bases = cache.batch_bases(batch)
        K_b = np.tensordot(theta_sq, bases, axes=1)
    else:
        sq, dot = pairwise_stats(data.X[batch])
        if need_bases:
            bases = np.stack([k.value(sq, dot) for k in dictionary.kernels])
            K_b = np.tensordot(theta_sq, bases, axes=1)
        else:
            K_b = dictionary.value(sq, dot)
    K_b = 0.5 * (K_b + K_b.T)

    # one nugget for both quadratic forms, resolved on the batch diagonal:
    # slicing the same regularized matrix keeps num <= den exactly
    eps = resolve_nugget(K_b.diagonal().mean(), nugget)
    K_b_reg = K_b.copy()
    K_b_reg[np.diag_indices_from(K_b_reg)] += eps
    K_c_reg = K_b_reg[np.ix_(pos, pos)]

    factor_b = cholesky_factor(K_b_reg)
    den, half_b = _quadratic_form(factor_b, y_b)
    if den <= DEGENERACY_GUARD * float(y_b @ y_b):
        raise DegenerateBatchError(
            f"denominator quadratic form {den:.3e} is negligible against "
            f"the batch target energy {float(y_b @ y_b):.3e}"
        )
    factor_c = cholesky_factor(K_c_reg)
    num, half_c = _quadratic_form(factor_c, y_c)

    alpha_b = solve_triangular(factor_b.T, half_b, lower=False)
    alpha_c = solve_triangular(factor_c.T, half_c, lower=False)
    return bases, batch, pos, y_b, y_c, alpha_b, alpha_c, num, den


def rho(dictionary, data, pair, nugget=None, cache=None):
    """The subsample loss on one batch pair.

    Mathematically within [0, 1]; roundoff-scale negatives (~1e-15) are
    clamped to zero so the value honors its range invariant.
    """
    *_, num, den = _pair_system(dictionary, data, pair, nugget, cache=cache)
    return RhoValue(rho=max(1.0 - num / den, 0.0),
                    numerator_qf=num, denominator_qf=den)


def mean_rho_detail(dictionary, data, n_batches, batch_size, rng_seed,
                    nugget=None, cache=None):
    """Average rho over freshly sampled pairs, keeping per-batch detail.

    Pair i uses the derived seed ``(rng_seed, i)``; a degenerate batch is
    redrawn with ``(rng_seed, i, retry)`` up to ``MAX_RESAMPLES`` times
    before the degeneracy is raised.  Aggregation follows pair index
    order, so the result is deterministic per seed.
    """
    check_positive_int(n_batches, "n_batches")
    values = []
    pairs = []
    for i in range(int(n_batches)):
        for retry in range(MAX_RESAMPLES + 1):
            seed = _child_seed(rng_seed, i) if retry == 0 \
                else _child_seed(rng_seed, i, retry)
            pair = sample_batch_pair(data.n, batch_size, seed)
            try:
                value = rho(dictionary, data, pair, nugget=nugget, cache=cache)
            except DegenerateBatchError:
                continue
            break
        else:
            raise DegenerateBatchError(
                f"batch {i} stayed degenerate after {MAX_RESAMPLES} resamples"
            )
        values.append(value.rho)
        pairs.append(pair)
    return MeanRhoResult(mean=float(np.mean(values)), values=tuple(values),
                         pairs=tuple(pairs))


def mean_rho(dictionary, data, n_batches, batch_size, rng_seed,
             nugget=None, cache=None):
    """Arithmetic mean of rho over ``n_batches`` sampled pairs."""
    return mean_rho_detail(dictionary, data, n_batches, batch_size, rng_seed,
                           nugget=nugget, cache=cache).mean


def rho_gradient(dictionary, data, pair, nugget=None, cache=None,
                 include_beta=True):
    """Analytic gradient of rho in (theta, log beta) on one batch pair.

    Uses d(y' K^{-1} y) = -a' (dK) a with a = K^{-1} y on both quadratic
    forms.  The nugget is held fixed during differentiation, so comparisons
    against finite differences of :func:`rho` should pass an explicit
    nugget.  ``include_beta=False`` skips hyperparameter derivatives (a
    weight-only optimization does not need them).
    """
    bases, batch, pos, y_b, y_c, alpha_b, alpha_c, num, den = _pair_system(
        dictionary, data, pair, nugget, cache=cache, need_bases=True)
    value = max(1.0 - num / den, 0.0)

    def d_rho(d_num, d_den):
        return (num * d_den - den * d_num) / den**2

    theta = dictionary.theta_array
    # dK/d theta_i = 2 theta_i B_i, so each directional derivative is a
    # per-kernel quadratic form in the representer coefficients
    qf_b = np.einsum("kij,i,j->k", bases, alpha_b, alpha_b)
    qf_c = np.einsum("kij,i,j->k", bases[:, pos[:, None], pos], alpha_c, alpha_c)
    grad_theta = d_rho(-2.0 * theta * qf_c, -2.0 * theta * qf_b)

    if not include_beta:
        return RhoGradient(theta=grad_theta, log_beta=tuple(
            np.zeros(k.spec.n_beta) for k in dictionary.kernels),
            value=value)

    sq, dot = pairwise_stats(data.X[batch])
    grad_beta = []
    for i, kernel in enumerate(dictionary.kernels):
        parts = np.zeros(kernel.spec.n_beta)
        if theta[i] != 0.0:
            for j, d_base in enumerate(kernel.dlog_beta(sq, dot)):
                dK = theta[i] ** 2 * d_base
                d_den = -float(alpha_b @ dK @ alpha_b)
                d_num = -float(alpha_c @ dK[np.ix_(pos, pos)] @ alpha_c)
                parts[j] = d_rho(d_num, d_den)
        grad_beta.append(parts)
    return RhoGradient(theta=grad_theta, log_beta=tuple(grad_beta), value=value)

"""Stochastic proximal-gradient engine shared by the two fitters.

One loop serves both the per-support weight/hyperparameter optimizer
(``lam=0``, plain gradient steps) and the L1-penalized fit (``lam > 0``,
gradient step on the smooth loss composed with exact soft thresholding).
Iterates are ranked by a validation objective evaluated on a fixed seed,
so runs over different dictionaries/supports stay comparable under common
random numbers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import (
    ConditioningError,
    DegenerateBatchError,
    OptimizationError,
    SingularGramError,
)
from .kf_loss import (
    MAX_RESAMPLES,
    _child_seed,
    mean_rho,
    rho_gradient,
    sample_batch_pair,
)

__all__ = ["soft_threshold", "DescentResult", "descend"]


def soft_threshold(v, t):
    """Proximal operator of ``t * ||.||_1``: sign(v) * max(|v| - t, 0)."""
    if t < 0:
        raise ValueError(f"threshold must be nonnegative, got {t}")
    v = np.asarray(v, dtype=np.float64)
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


@dataclass(frozen=True)
class DescentResult:
    """Best iterate found, its validation scores, and the recorded path.

    ``val_mean_rho`` is the plain validation loss of the best iterate and
    ``val_objective`` adds the L1 term; with ``lam=0`` they coincide.
    ``path`` holds ``(iteration, theta, batch objective)`` triples when
    path recording was requested.  ``pruned_empty`` flags a run whose
    weights all hit zero — an absorbing state (the gradient vanishes with
    the weights), reported as the terminal iterate with infinite scores.
    """

    theta: np.ndarray
    betas: tuple
    val_mean_rho: float
    val_objective: float
    best_iteration: int
    iterations_run: int
    pruned_empty: bool
    path: tuple


def _snapshot(iteration, theta, betas):
    return {
        "iteration": int(iteration),
        "theta": tuple(float(t) for t in theta),
        "betas": tuple(tuple(float(b) for b in beta) for beta in betas),
    }


def descend(dictionary, data, kf_config, opt_config, lam=0.0, cache=None):
    """Run the stochastic proximal descent from the dictionary's own state.

    Training pair ``t`` draws from seed ``(opt_config.seed, 0, t)`` (with
    retry suffixes on degenerate batches); validation always runs on
    ``kf_config.seed``.  The returned iterate is the best one *including
    the initial point* under the validation objective
    ``mean_rho + lam * ||theta||_1``, unless every weight was thresholded
    to zero, in which case the run stops and reports the empty terminal
    state.  Hyperparameters move only when ``opt_config.learn_beta`` is
    set, via plain gradient steps in log space over each kernel's
    learnable slots.
    """
    if lam < 0:
        raise ValueError(f"lam must be nonnegative, got {lam}")
    n = data.n
    batch_size = kf_config.resolved_batch_size(n)
    theta = dictionary.theta_array.copy()
    betas = [np.asarray(kernel.beta, dtype=np.float64)
             for kernel in dictionary.kernels]
    masks = [np.asarray(kernel.learnable, dtype=bool)
             for kernel in dictionary.kernels]
    current = dictionary
    record_every = int(getattr(opt_config, "path_every", 0) or 0)
    path = []

    def validate(candidate, candidate_theta):
        value = mean_rho(candidate, data, kf_config.n_batches, batch_size,
                         kf_config.seed, nugget=kf_config.nugget, cache=cache)
        return value, value + lam * float(np.abs(candidate_theta).sum())

    def freeze(result_theta, result_betas, val, obj, best_iter, last_iter,
               pruned):
        return DescentResult(
            theta=np.asarray(result_theta, dtype=np.float64),
            betas=tuple(tuple(float(b) for b in beta) for beta in result_betas),
            val_mean_rho=float(val),
            val_objective=float(obj),
            best_iteration=int(best_iter),
            iterations_run=int(last_iter),
            pruned_empty=pruned,
            path=tuple(path),
        )

    if not np.any(theta):
        return freeze(theta, betas, np.inf, np.inf, 0, 0, True)

    best_val, best_obj = validate(current, theta)
    best = (theta.copy(), [np.array(b) for b in betas], 0)

    def train_gradient(t):
        for retry in range(MAX_RESAMPLES + 1):
            seed = _child_seed(opt_config.seed, 0, t) if retry == 0 \
                else _child_seed(opt_config.seed, 0, t, retry)
            pair = sample_batch_pair(n, batch_size, seed)
            try:
                return rho_gradient(current, data, pair,
                                    nugget=kf_config.nugget, cache=cache,
                                    include_beta=opt_config.learn_beta)
            except DegenerateBatchError:
                continue
        raise DegenerateBatchError(
            f"training batch {t} stayed degenerate after {MAX_RESAMPLES} "
            f"resamples")

    iterations = int(opt_config.iterations)
    for t in range(1, iterations + 1):
        eta = opt_config.step * opt_config.decay ** (t - 1)
        try:
            grad = train_gradient(t)
        except (SingularGramError, ConditioningError) as exc:
            raise OptimizationError(
                f"loss evaluation failed at iteration {t}: {exc}",
                iterate=_snapshot(t, theta, betas)) from exc

        theta = soft_threshold(theta - eta * grad.theta, eta * lam)
        if opt_config.learn_beta:
            for beta, mask, part in zip(betas, masks, grad.log_beta):
                if mask.any():
                    beta[mask] *= np.exp(-eta * part[mask])
        if not np.all(np.isfinite(theta)) or not all(
                np.all(np.isfinite(b)) for b in betas):
            raise OptimizationError(
                f"non-finite iterate at iteration {t}",
                iterate=_snapshot(t, theta, betas))
        current = dictionary.with_params(theta, [tuple(b) for b in betas])

        if record_every and (t % record_every == 0 or t == iterations):
            path.append((t, tuple(float(v) for v in theta),
                         float(grad.value + lam * np.abs(theta).sum())))
        if not np.any(theta):
            return freeze(theta, betas, np.inf, np.inf, t, t, True)
        if t % int(opt_config.val_every) == 0 or t == iterations:
            val, obj = validate(current, theta)
            if obj < best_obj:
                best_val, best_obj = val, obj
                best = (theta.copy(), [np.array(b) for b in betas], t)

    best_theta, best_betas, best_iter = best
    return freeze(best_theta, best_betas, best_val, best_obj, best_iter,
                  iterations, False)

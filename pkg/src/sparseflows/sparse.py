"""L1-penalized loss minimization and the penalty sweep.

``sparse_fit`` minimizes ``mean rho + lam * ||theta||_1`` by stochastic
proximal gradient: a gradient step on the smooth loss followed by exact
soft thresholding.  The L1 term is a search heuristic for sparsity;
``lambda_sweep`` runs several penalties and lets the support-size
objective (:func:`~sparseflows.mdl.mdl_objective`) arbitrate among the
extracted supports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._descent import descend, soft_threshold
from .exceptions import AllPrunedError
from .mdl import SupportSet, _maybe_cache, mdl_objective

__all__ = [
    "DEFAULT_LAMBDAS",
    "EPS_THRESHOLD_REL",
    "SparseFitResult",
    "soft_threshold",
    "extract_support",
    "sparse_fit",
    "lambda_sweep",
    "write_path_dump",
]

# Geometric default sweep; the rescore picks among its survivors.
DEFAULT_LAMBDAS = (0.001, 0.01, 0.1, 1.0)

# A weight counts as active when it exceeds this fraction of the largest
# weight; relative so that globally rescaled dictionaries extract the
# same support.
EPS_THRESHOLD_REL = 1e-3


@dataclass(frozen=True)
class SparseFitResult:
    """One penalized fit: final iterate, extracted support, and rescore.

    ``support_extracted`` collects the 1-based indices of weights above
    the relative threshold; a fully pruned run leaves it empty, flags
    ``pruned_empty``, and carries an infinite ``mdl_rescore`` so sweeps
    never select it.  ``theta_path`` holds (iteration, theta, batch
    objective) triples when recording was on.
    """

    theta_path: tuple
    theta_final: tuple
    beta_final: tuple
    lam: float
    support_extracted: SupportSet
    mdl_rescore: float
    val_objective: float
    pruned_empty: bool


def extract_support(theta, threshold_rel=EPS_THRESHOLD_REL):
    """Indices (1-based) with |theta_i| above the relative threshold."""
    theta = np.asarray(theta, dtype=np.float64)
    scale = np.abs(theta).max() if theta.size else 0.0
    if scale == 0.0:
        return SupportSet(())
    return SupportSet(tuple(
        int(i) + 1 for i in np.flatnonzero(np.abs(theta) > threshold_rel * scale)))


def sparse_fit(dictionary, data, lam, kf_config, opt_config):
    """Stochastic proximal-gradient fit of all weights under an L1 penalty.

    Weights start from the dictionary's own values (the loss depends on
    theta squared, so flipping initial signs changes nothing but signs).
    The returned iterate is the best by validation
    ``mean_rho + lam * ||theta||_1``; the extracted support is then
    rescored by the support-size objective with the same ``kf_config``,
    making results comparable across penalties and with the exhaustive
    scan.
    """
    lam = float(lam)
    if lam < 0 or not math.isfinite(lam):
        raise ValueError(f"lam must be finite and nonnegative, got {lam}")
    cache = _maybe_cache(dictionary.kernels, data.X, opt_config.learn_beta)
    result = descend(dictionary, data, kf_config, opt_config, lam=lam,
                     cache=cache)
    support = extract_support(result.theta)
    if support.p == 0:
        rescore = math.inf
    else:
        fitted = dictionary.with_params(result.theta, result.betas)
        rescore = mdl_objective(fitted, data, support, kf_config)
    return SparseFitResult(
        theta_path=result.path,
        theta_final=tuple(float(t) for t in result.theta),
        beta_final=result.betas,
        lam=lam,
        support_extracted=support,
        mdl_rescore=float(rescore),
        val_objective=result.val_objective,
        pruned_empty=result.pruned_empty,
    )


def lambda_sweep(dictionary, data, lambdas, kf_config, opt_config):
    """Run one fit per penalty and pick the best rescored support.

    Returns ``(results, selected_index)``; the selected entry minimizes
    ``mdl_rescore`` (ties: smaller support, lexicographic indices, then
    sweep order).  Raises :class:`AllPrunedError` when every penalty
    pruned every weight.
    """
    lambdas = tuple(float(l) for l in lambdas)
    if not lambdas:
        raise ValueError("lambda sweep needs at least one value")
    results = tuple(
        sparse_fit(dictionary, data, lam, kf_config, opt_config)
        for lam in lambdas)
    viable = [i for i, r in enumerate(results) if r.support_extracted.p > 0]
    if not viable:
        raise AllPrunedError(
            f"every penalty in {lambdas} pruned all {dictionary.m} weights; "
            f"retry with smaller values")
    selected = min(viable, key=lambda i: (
        results[i].mdl_rescore,
        results[i].support_extracted.p,
        results[i].support_extracted.active,
        i,
    ))
    return results, selected


def write_path_dump(result, path):
    """Write the iterate path as a whitespace-columnar file for plotting."""
    if not result.theta_path:
        raise ValueError(
            "no recorded path: set path_every in the optimizer settings")
    m = len(result.theta_final)
    rows = np.array([
        [iteration, *theta, objective]
        for iteration, theta, objective in result.theta_path
    ])
    header = " ".join(["iteration", *(f"theta_{i + 1}" for i in range(m)),
                       "objective"])
    np.savetxt(path, rows, header=header,
               fmt=["%d"] + ["%.17g"] * (m + 1))

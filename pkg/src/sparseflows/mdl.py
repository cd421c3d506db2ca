"""Combinatorial model selection: penalized subsample loss over supports.

A support (subset of dictionary kernels) is scored by

    score = mean_rho + (p / 2) * ln(N),

where p is the number of active kernels and N the full dataset size.
``exhaustive_mdl_select`` optimizes and scores every nonempty support —
2^m - 1 inner problems — and returns the minimizer, breaking exact ties
toward smaller p and then lexicographically smaller index sets.  The
generic ``bic_score`` applies the same (d/2) ln(n) complexity penalty to
any negative log-likelihood.

Natural logarithms throughout.  Kernel indices in supports are 1-based,
matching how reports and factorization pivots are numbered.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from ._descent import descend
from ._validation import check_positive_int
from .exceptions import DictionaryTooLargeError
from .kernels import median_heuristic
from .kf_loss import BaseGramCache, mean_rho

__all__ = [
    "SupportSet",
    "SupportScore",
    "SelectionReport",
    "OptConfig",
    "EXHAUSTIVE_CAP",
    "CACHE_LIMIT_BYTES",
    "mdl_penalty",
    "mdl_objective",
    "optimize_support",
    "exhaustive_mdl_select",
    "enumerate_supports",
    "bic_score",
]

# Largest dictionary the exhaustive scan accepts (2^12 - 1 = 4095 supports).
EXHAUSTIVE_CAP = 12

# Per-kernel Gram stacks are precomputed only below this footprint.
CACHE_LIMIT_BYTES = 200_000_000


@dataclass(frozen=True)
class SupportSet:
    """A set of active kernels, stored as sorted 1-based indices."""

    active: tuple

    def __post_init__(self):
        active = tuple(sorted(int(i) for i in self.active))
        if len(set(active)) != len(active):
            raise ValueError(f"support contains duplicate indices: {self.active}")
        if active and active[0] < 1:
            raise ValueError(
                f"kernel indices are 1-based, got {active[0]}")
        object.__setattr__(self, "active", active)

    @property
    def p(self):
        return len(self.active)

    @property
    def positions(self):
        """0-based positions into the dictionary's kernel list."""
        return tuple(i - 1 for i in self.active)

    def validate_against(self, m):
        if not self.active:
            raise ValueError("support is empty: at least one kernel must be active")
        if self.active[-1] > m:
            raise ValueError(
                f"support names kernel {self.active[-1]} but the dictionary "
                f"has only {m}")
        return self


@dataclass(frozen=True)
class OptConfig:
    """Inner-optimizer settings shared by the exhaustive and L1 paths.

    Defaults: 500 iterations of step 1e-2 with geometric decay 0.999,
    active weights started at 1, hyperparameters started from the
    dictionary's own values (``beta_init="median"`` replaces every
    learnable slot with the median pairwise distance of the data instead).
    ``path_every=k`` records every k-th iterate for dumps; 0 disables.
    """

    iterations: int = 500
    step: float = 1e-2
    decay: float = 0.999
    seed: int = 0
    learn_beta: bool = True
    theta_init: float = 1.0
    beta_init: str = "dictionary"
    val_every: int = 50
    path_every: int = 0

    def __post_init__(self):
        check_positive_int(self.iterations, "iterations")
        check_positive_int(self.val_every, "val_every")
        if self.step <= 0 or not math.isfinite(self.step):
            raise ValueError(f"step must be positive, got {self.step}")
        if not 0 < self.decay <= 1:
            raise ValueError(f"decay must be in (0, 1], got {self.decay}")
        if self.beta_init not in ("dictionary", "median"):
            raise ValueError(
                f"beta_init must be 'dictionary' or 'median', got {self.beta_init!r}")


@dataclass(frozen=True)
class SupportScore:
    """One audited support: its loss, penalty, and total."""

    support: SupportSet
    mean_rho: float
    penalty: float
    score: float


@dataclass(frozen=True)
class SelectionReport:
    """Outcome of a selection run plus the complete audit trail.

    ``theta_opt`` spans the full dictionary with inactive weights frozen
    at zero; ``beta_opt`` likewise keeps inactive kernels' hyperparameters
    untouched.  The winning support is re-derivable from ``audit`` by
    taking the (score, p, indices)-smallest entry.
    """

    support: SupportSet
    theta_opt: tuple
    beta_opt: tuple
    mean_rho: float
    penalty: float
    score: float
    n_data: int
    audit: tuple

    def __post_init__(self):
        if abs(self.score - (self.mean_rho + self.penalty)) > 1e-12:
            raise ValueError(
                f"score {self.score} does not decompose into "
                f"mean_rho {self.mean_rho} + penalty {self.penalty}")
        if self.audit:
            winner = min(self.audit, key=_audit_order)
            if winner.support != self.support:
                raise ValueError(
                    f"reported support {self.support.active} is not the "
                    f"audit minimizer {winner.support.active}")

    def to_dict(self):
        return {
            "support": list(self.support.active),
            "theta_opt": list(self.theta_opt),
            "beta_opt": [list(b) for b in self.beta_opt],
            "mean_rho": self.mean_rho,
            "penalty": self.penalty,
            "score": self.score,
            "n_data": self.n_data,
            "audit": [
                {
                    "support": list(entry.support.active),
                    "p": entry.support.p,
                    "mean_rho": entry.mean_rho,
                    "penalty": entry.penalty,
                    "score": entry.score,
                }
                for entry in self.audit
            ],
        }


def _audit_order(entry):
    return (entry.score, entry.support.p, entry.support.active)


def mdl_penalty(p, n):
    """(p/2) * ln(n); n may be any real >= 1 (counts in practice)."""
    if p < 0:
        raise ValueError(f"p must be nonnegative, got {p}")
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    return (p / 2.0) * math.log(n)


def bic_score(neg_log_likelihood, d, n):
    """Penalized code length ``nll + (d/2) ln n``.

    The O(d) constant of the underlying expansion is omitted; comparisons
    at fixed n are unaffected for models of equal dimension and the term
    grows slower than the retained one otherwise.
    """
    if d < 0:
        raise ValueError(f"d must be nonnegative, got {d}")
    return float(neg_log_likelihood) + mdl_penalty(d, n)


def mdl_objective(dictionary, data, support, kf_config, cache=None):
    """Score the dictionary restricted to a support, as it stands.

    No optimization happens here: the restricted dictionary's current
    weights are evaluated by ``mean_rho`` on the configured batches and
    the support-size penalty is added.
    """
    support.validate_against(dictionary.m)
    restricted = dictionary.subset(support.positions)
    value = mean_rho(
        restricted, data, kf_config.n_batches,
        kf_config.resolved_batch_size(data.n), kf_config.seed,
        nugget=kf_config.nugget, cache=cache)
    return value + mdl_penalty(support.p, data.n)


def _initial_restricted(dictionary, support, data, opt_config):
    """The support's sub-dictionary at the optimizer's starting point."""
    restricted = dictionary.subset(support.positions)
    theta = tuple(opt_config.theta_init for _ in range(restricted.m))
    if opt_config.beta_init == "median":
        scale = median_heuristic(data.X)
        betas = []
        for kernel in restricted.kernels:
            beta = [scale if learnable else value
                    for value, learnable in zip(kernel.beta, kernel.learnable)]
            betas.append(tuple(beta))
    else:
        betas = [kernel.beta for kernel in restricted.kernels]
    return restricted.with_params(theta, betas)


def _maybe_cache(kernels, X, learn_beta):
    """Precompute per-kernel Gram stacks when they are valid and affordable."""
    if learn_beta:
        return None
    m = len(kernels)
    n = X.shape[0]
    if m * n * n * 8 > CACHE_LIMIT_BYTES:
        return None
    return BaseGramCache(kernels, X)


def optimize_support(dictionary, data, support, kf_config, opt_config):
    """Fit one support's weights (and optionally hyperparameters).

    Stochastic descent from the configured initialization; the best
    iterate is chosen by validation ``mean_rho`` on ``kf_config.seed``,
    the initial point included.  Returns ``(theta_opt, beta_opt,
    mean_rho)`` where the full-length ``theta_opt`` freezes inactive
    kernels at zero and ``beta_opt`` keeps their hyperparameters
    unchanged.
    """
    support.validate_against(dictionary.m)
    start = _initial_restricted(dictionary, support, data, opt_config)
    cache = _maybe_cache(start.kernels, data.X, opt_config.learn_beta)
    result = descend(start, data, kf_config, opt_config, lam=0.0, cache=cache)

    theta_full = np.zeros(dictionary.m)
    betas_full = [kernel.beta for kernel in dictionary.kernels]
    for where, theta, beta in zip(support.positions, result.theta, result.betas):
        theta_full[where] = theta
        betas_full[where] = tuple(beta)
    return theta_full, tuple(betas_full), result.val_mean_rho


def enumerate_supports(m):
    """All nonempty supports of {1..m}, smallest first, lexicographic within."""
    check_positive_int(m, "m")
    for p in range(1, m + 1):
        for active in combinations(range(1, m + 1), p):
            yield SupportSet(active)


def exhaustive_mdl_select(dictionary, data, kf_config, opt_config,
                          cap=EXHAUSTIVE_CAP):
    """Optimize and score every nonempty support; return the minimizer.

    The audit records all 2^m - 1 supports in enumeration order; exact
    score ties resolve toward fewer kernels, then lexicographically
    smaller index sets.
    """
    if dictionary.m > cap:
        raise DictionaryTooLargeError(
            f"dictionary has m={dictionary.m} kernels; the exhaustive scan "
            f"is capped at {cap} (2^{dictionary.m} - 1 supports) — use the "
            f"sparse path (sparse_fit / lambda_sweep) instead")
    audit = []
    results = {}
    for support in enumerate_supports(dictionary.m):
        theta_opt, beta_opt, value = optimize_support(
            dictionary, data, support, kf_config, opt_config)
        penalty = mdl_penalty(support.p, data.n)
        audit.append(SupportScore(support=support, mean_rho=value,
                                  penalty=penalty, score=value + penalty))
        results[support.active] = (theta_opt, beta_opt)

    winner = min(audit, key=_audit_order)
    theta_opt, beta_opt = results[winner.support.active]
    return SelectionReport(
        support=winner.support,
        theta_opt=tuple(float(t) for t in theta_opt),
        beta_opt=beta_opt,
        mean_rho=winner.mean_rho,
        penalty=winner.penalty,
        score=winner.score,
        n_data=data.n,
        audit=tuple(audit),
    )

"""Estimator-style wrappers around the two kernel selectors.

These follow the fit/get_params protocol so selections can sit inside
pipelines and grid searches; the heavy lifting stays in
:mod:`sparseflows.mdl` and :mod:`sparseflows.sparse`.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator

from .data import Dataset
from .kf_loss import KFConfig
from .mdl import OptConfig, exhaustive_mdl_select
from .sparse import DEFAULT_LAMBDAS, lambda_sweep

__all__ = ["ExhaustiveMDLSelector", "SparseKernelFlows"]


class _SelectorBase(BaseEstimator):
    def __init__(self, dictionary=None, batch_size=None, n_batches=32,
                 seed=0, nugget=None, iterations=500, step=1e-2, decay=0.999,
                 learn_beta=True):
        self.dictionary = dictionary
        self.batch_size = batch_size
        self.n_batches = n_batches
        self.seed = seed
        self.nugget = nugget
        self.iterations = iterations
        self.step = step
        self.decay = decay
        self.learn_beta = learn_beta

    def _configs(self):
        if self.dictionary is None:
            raise ValueError("a kernel dictionary is required")
        kf = KFConfig(batch_size=self.batch_size, n_batches=self.n_batches,
                      seed=self.seed, nugget=self.nugget)
        opt = OptConfig(iterations=self.iterations, step=self.step,
                        decay=self.decay, seed=self.seed,
                        learn_beta=self.learn_beta)
        return kf, opt

    @staticmethod
    def _dataset(X, y):
        return Dataset(X=X, y=y)


class ExhaustiveMDLSelector(_SelectorBase):
    """Scores every nonempty kernel support and keeps the best.

    After ``fit``: ``support_`` (1-based indices), ``dictionary_`` (the
    input dictionary with optimized weights, inactive ones zero),
    ``score_``, and ``report_`` with the full audit.
    """

    def fit(self, X, y):
        kf, opt = self._configs()
        report = exhaustive_mdl_select(self.dictionary, self._dataset(X, y),
                                       kf, opt)
        self.report_ = report
        self.support_ = report.support
        self.score_ = report.score
        self.dictionary_ = self.dictionary.with_params(report.theta_opt,
                                                       report.beta_opt)
        return self


class SparseKernelFlows(BaseEstimator):
    """L1 penalty sweep with support-score arbitration.

    After ``fit``: ``results_`` (one entry per penalty),
    ``selected_index_``, ``support_``, and ``dictionary_`` carrying the
    selected fit's weights.
    """

    def __init__(self, dictionary=None, lambdas=DEFAULT_LAMBDAS,
                 batch_size=None, n_batches=32, seed=0, nugget=None,
                 iterations=500, step=1e-2, decay=0.999, learn_beta=True):
        self.dictionary = dictionary
        self.lambdas = lambdas
        self.batch_size = batch_size
        self.n_batches = n_batches
        self.seed = seed
        self.nugget = nugget
        self.iterations = iterations
        self.step = step
        self.decay = decay
        self.learn_beta = learn_beta

    def fit(self, X, y):
        helper = _SelectorBase(
            dictionary=self.dictionary, batch_size=self.batch_size,
            n_batches=self.n_batches, seed=self.seed, nugget=self.nugget,
            iterations=self.iterations, step=self.step, decay=self.decay,
            learn_beta=self.learn_beta)
        kf, opt = helper._configs()
        results, selected = lambda_sweep(
            self.dictionary, Dataset(X=X, y=y), tuple(self.lambdas), kf, opt)
        self.results_ = results
        self.selected_index_ = selected
        self.support_ = results[selected].support_extracted
        self.dictionary_ = self.dictionary.with_params(
            results[selected].theta_final, results[selected].beta_final)
        return self

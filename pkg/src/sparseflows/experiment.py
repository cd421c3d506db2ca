"""Experiment orchestration: configured runs that emit structured reports.

A report is a JSON document with a ``schema_version`` field, every seed
that influenced the run, the full selection audit, and wall-clock
timings.  Reports are deterministic apart from the fields listed in
``TIMING_FIELDS``, so two runs with the same config can be compared by
stripping those.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .benchmark import degree_selection_rate, run_recovery_suite
from .data import Dataset, gen_gp_dataset, load_csv
from .kernels import KernelDictionary, dictionary_to_spec, load_dictionary
from .kf_loss import KFConfig
from .mdl import OptConfig, SupportSet, exhaustive_mdl_select
from .sparse import DEFAULT_LAMBDAS, lambda_sweep

__all__ = [
    "REPORT_SCHEMA_VERSION",
    "TIMING_FIELDS",
    "MODES",
    "ExperimentConfig",
    "run_experiment",
    "run_bench",
    "strip_timing_fields",
    "write_report",
]

REPORT_SCHEMA_VERSION = 1
TIMING_FIELDS = ("created_at", "timings")
MODES = ("exhaustive", "sparse", "both")


@dataclass(frozen=True)
class ExperimentConfig:
    """One selection run: a dictionary, a dataset, and the two configs.

    ``mode`` picks the selector(s); ``lambdas`` feeds the sparse path.
    ``output_path`` is optional — :func:`run_experiment` always returns
    the report dict and writes it only when a path is set.
    """

    dictionary: KernelDictionary
    data: Dataset
    mode: str = "both"
    lambdas: tuple = DEFAULT_LAMBDAS
    kf_config: KFConfig = field(default_factory=KFConfig)
    opt_config: OptConfig = field(default_factory=OptConfig)
    output_path: str | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        object.__setattr__(self, "lambdas",
                           tuple(float(l) for l in self.lambdas))
        if self.mode != "exhaustive" and not self.lambdas:
            raise ValueError("sparse mode needs a nonempty lambda list")

    @classmethod
    def from_files(cls, dictionary_path, data_path=None, synthetic=None,
                   **kwargs):
        """Build a config from a dictionary spec file plus a data source.

        The data source is either ``data_path`` (a CSV file) or
        ``synthetic``, a dict with keys ``support`` (1-based indices),
        ``N``, ``d``, ``noise_sd``, and ``seed``, drawn from the loaded
        dictionary itself.
        """
        dictionary_path = Path(dictionary_path)
        if not dictionary_path.exists():
            raise FileNotFoundError(f"dictionary spec not found: "
                                    f"{dictionary_path}")
        dictionary = load_dictionary(dictionary_path)
        if (data_path is None) == (synthetic is None):
            raise ValueError(
                "exactly one of data_path / synthetic must be given")
        if data_path is not None:
            data_path = Path(data_path)
            if not data_path.exists():
                raise FileNotFoundError(f"data file not found: {data_path}")
            data = load_csv(data_path)
        else:
            spec = dict(synthetic)
            support = SupportSet(tuple(int(i) for i in spec.pop("support")))
            support.validate_against(dictionary.m)
            data = gen_gp_dataset(dictionary, support.positions, **spec)
        return cls(dictionary=dictionary, data=data, **kwargs)


def _dataset_record(data):
    seed = data.seed
    if isinstance(seed, tuple):
        seed = list(seed)
    return {"n": data.n, "d": data.d, "provenance": data.provenance,
            "seed": seed}


def _config_records(config):
    kf = config.kf_config
    opt = config.opt_config

    def as_seed(s):
        return list(s) if isinstance(s, tuple) else s

    return {
        "kf_config": {
            "batch_size": kf.batch_size,
            "n_batches": kf.n_batches,
            "seed": as_seed(kf.seed),
            "nugget": kf.nugget,
        },
        "opt_config": {
            "iterations": opt.iterations,
            "step": opt.step,
            "decay": opt.decay,
            "seed": as_seed(opt.seed),
            "learn_beta": opt.learn_beta,
            "theta_init": opt.theta_init,
            "beta_init": opt.beta_init,
            "val_every": opt.val_every,
            "path_every": opt.path_every,
        },
    }


def _sparse_record(results, selected):
    entries = []
    for r in results:
        entries.append({
            "lambda": r.lam,
            "support": list(r.support_extracted.active),
            "theta_final": list(r.theta_final),
            "beta_final": [list(b) for b in r.beta_final],
            "mdl_rescore": r.mdl_rescore,
            "val_objective": r.val_objective,
            "pruned_empty": r.pruned_empty,
        })
    return {
        "results": entries,
        "selected_index": selected,
        "selected_support": list(results[selected].support_extracted.active),
    }


def run_experiment(config):
    """Execute the configured pipeline and return the report dict.

    The report carries the schema version, the dataset and config
    records (seeds included), the selection outcome(s), and timings.
    In ``both`` mode a ``match`` flag compares the two selections.
    """
    started = time.perf_counter()
    report = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "kind": "experiment-report",
        "created_at": datetime.now(timezone.utc).isoformat(),
        "mode": config.mode,
        "data": _dataset_record(config.data),
        "dictionary": dictionary_to_spec(config.dictionary),
        "lambdas": list(config.lambdas),
        **_config_records(config),
    }
    timings = {}

    if config.mode in ("exhaustive", "both"):
        t0 = time.perf_counter()
        selection = exhaustive_mdl_select(
            config.dictionary, config.data, config.kf_config,
            config.opt_config)
        timings["exhaustive_s"] = time.perf_counter() - t0
        report["exhaustive"] = selection.to_dict()

    if config.mode in ("sparse", "both"):
        t0 = time.perf_counter()
        results, selected = lambda_sweep(
            config.dictionary, config.data, config.lambdas, config.kf_config,
            config.opt_config)
        timings["sparse_s"] = time.perf_counter() - t0
        report["sparse"] = _sparse_record(results, selected)

    if config.mode == "both":
        report["match"] = (report["exhaustive"]["support"]
                           == report["sparse"]["selected_support"])

    timings["total_s"] = time.perf_counter() - started
    report["timings"] = timings
    if config.output_path is not None:
        write_report(report, config.output_path)
    return report


def run_bench(n_trials=50, base_seed=0, bic_trials=50, output_path=None):
    """Run the 2-of-6 recovery suite plus the BIC demo; return the report."""
    started = time.perf_counter()
    t0 = time.perf_counter()
    recovery = run_recovery_suite(n_trials=n_trials, base_seed=base_seed)
    recovery_s = time.perf_counter() - t0

    t0 = time.perf_counter()
    bic_rate, picks = degree_selection_rate(n_trials=bic_trials,
                                            base_seed=base_seed)
    bic_s = time.perf_counter() - t0

    report = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "kind": "bench-report",
        "created_at": datetime.now(timezone.utc).isoformat(),
        "base_seed": base_seed,
        "recovery": recovery.to_dict(),
        "bic": {
            "n_trials": int(bic_trials),
            "rate": bic_rate,
            "picks": list(picks),
        },
        "timings": {
            "recovery_s": recovery_s,
            "bic_s": bic_s,
            "total_s": time.perf_counter() - started,
        },
    }
    if output_path is not None:
        write_report(report, output_path)
    return report


def strip_timing_fields(report):
    """A copy of the report without its non-deterministic fields."""
    return {k: v for k, v in report.items() if k not in TIMING_FIELDS}


def write_report(report, path):
    """Serialize a report as indented JSON (floats round-trip via repr)."""
    with open(path, "w") as handle:
        json.dump(report, handle, indent=2)
        handle.write("\n")

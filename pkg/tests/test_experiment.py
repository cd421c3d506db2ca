"""Tests for experiment orchestration and report emission."""

import json
from datetime import datetime

import pytest

from sparseflows import kernels as kr
from sparseflows.data import gen_gp_dataset, save_csv
from sparseflows.experiment import (
    REPORT_SCHEMA_VERSION,
    ExperimentConfig,
    run_bench,
    run_experiment,
    strip_timing_fields,
    write_report,
)
from sparseflows.kernels import save_dictionary
from sparseflows.kf_loss import KFConfig
from sparseflows.mdl import OptConfig

KF = KFConfig(batch_size=16, n_batches=8, seed=5)
OPT = OptConfig(iterations=40, step=0.05, decay=0.99, seed=1,
                learn_beta=False, val_every=10)


def two_kernel_dictionary():
    return kr.KernelDictionary((kr.gaussian(0.25), kr.linear()), (1.0, 1.0))


def small_config(mode="both", **kwargs):
    d = two_kernel_dictionary()
    data = gen_gp_dataset(d, [0], N=40, d=1, noise_sd=0.05, seed=3)
    return ExperimentConfig(dictionary=d, data=data, mode=mode,
                            kf_config=KF, opt_config=OPT, **kwargs)


class TestExperimentConfig:
    def test_invalid_mode_rejected(self):
        with pytest.raises(ValueError, match="mode"):
            small_config(mode="everything")

    def test_sparse_mode_needs_lambdas(self):
        with pytest.raises(ValueError, match="lambda"):
            small_config(mode="sparse", lambdas=())

    def test_exhaustive_mode_tolerates_empty_lambdas(self):
        assert small_config(mode="exhaustive", lambdas=()).lambdas == ()

    def test_from_files_requires_one_data_source(self, tmp_path):
        spec = tmp_path / "dict.yaml"
        save_dictionary(two_kernel_dictionary(), spec)
        with pytest.raises(ValueError, match="exactly one"):
            ExperimentConfig.from_files(spec)

    def test_from_files_missing_dictionary(self, tmp_path):
        with pytest.raises(FileNotFoundError, match="dictionary"):
            ExperimentConfig.from_files(tmp_path / "nope.yaml",
                                        synthetic={"support": [1], "N": 10,
                                                   "d": 1, "noise_sd": 0.0,
                                                   "seed": 0})

    def test_from_files_missing_data(self, tmp_path):
        spec = tmp_path / "dict.yaml"
        save_dictionary(two_kernel_dictionary(), spec)
        with pytest.raises(FileNotFoundError, match="data"):
            ExperimentConfig.from_files(spec, data_path=tmp_path / "no.csv")

    def test_from_files_synthetic_generation(self, tmp_path):
        spec = tmp_path / "dict.yaml"
        save_dictionary(two_kernel_dictionary(), spec)
        config = ExperimentConfig.from_files(
            spec, synthetic={"support": [1], "N": 25, "d": 2,
                             "noise_sd": 0.1, "seed": 9},
            kf_config=KF, opt_config=OPT)
        assert config.data.n == 25 and config.data.d == 2
        assert config.data.provenance == "synthetic-gp"

    def test_from_files_csv_ingestion(self, tmp_path):
        spec = tmp_path / "dict.yaml"
        save_dictionary(two_kernel_dictionary(), spec)
        d = two_kernel_dictionary()
        data = gen_gp_dataset(d, [0], N=15, d=1, noise_sd=0.0, seed=2)
        csv_path = tmp_path / "data.csv"
        save_csv(data, csv_path)
        config = ExperimentConfig.from_files(spec, data_path=csv_path,
                                             kf_config=KF, opt_config=OPT)
        assert config.data.n == 15
        assert config.data.provenance == "file"


class TestRunExperiment:
    def test_exhaustive_mode_sections(self):
        report = run_experiment(small_config(mode="exhaustive"))
        assert report["schema_version"] == REPORT_SCHEMA_VERSION
        assert report["kind"] == "experiment-report"
        assert len(report["exhaustive"]["audit"]) == 3
        assert "sparse" not in report and "match" not in report

    def test_sparse_mode_sections(self):
        report = run_experiment(small_config(mode="sparse",
                                             lambdas=(0.01, 1e3)))
        assert "exhaustive" not in report
        assert len(report["sparse"]["results"]) == 2
        assert report["sparse"]["results"][1]["pruned_empty"]

    def test_both_mode_match_flag(self):
        report = run_experiment(small_config(mode="both"))
        assert report["match"] == (report["exhaustive"]["support"]
                                   == report["sparse"]["selected_support"])

    def test_deterministic_modulo_timing(self):
        config = small_config()
        a = run_experiment(config)
        b = run_experiment(config)
        assert json.dumps(strip_timing_fields(a)) \
            == json.dumps(strip_timing_fields(b))
        assert a["timings"] != {} and "created_at" in a

    def test_report_is_json_round_trippable(self, tmp_path):
        config = small_config(output_path=str(tmp_path / "report.json"))
        report = run_experiment(config)
        with open(tmp_path / "report.json") as handle:
            loaded = json.load(handle)
        assert loaded == json.loads(json.dumps(report))

    def test_seeds_recorded(self):
        report = run_experiment(small_config(mode="exhaustive"))
        assert report["kf_config"]["seed"] == KF.seed
        assert report["opt_config"]["seed"] == OPT.seed
        assert report["data"]["seed"] == 3

    def test_created_at_is_parseable(self):
        report = run_experiment(small_config(mode="exhaustive"))
        assert datetime.fromisoformat(report["created_at"]) is not None


class TestStripTimingFields:
    def test_removes_exactly_the_timing_fields(self):
        report = {"a": 1, "created_at": "x", "timings": {"t": 2}}
        assert strip_timing_fields(report) == {"a": 1}


class TestRunBench:
    def test_small_bench_report(self, tmp_path):
        out = tmp_path / "bench.json"
        report = run_bench(n_trials=1, bic_trials=2, output_path=str(out))
        assert report["kind"] == "bench-report"
        assert 0.0 <= report["recovery"]["exhaustive_recovery_rate"] <= 1.0
        assert 0.0 <= report["recovery"]["sweep_match_rate"] <= 1.0
        assert len(report["bic"]["picks"]) == 2
        assert len(report["recovery"]["trials"]) == 1
        with open(out) as handle:
            assert json.load(handle)["kind"] == "bench-report"

    def test_rerun_identical_modulo_timing(self):
        a = run_bench(n_trials=1, bic_trials=1)
        b = run_bench(n_trials=1, bic_trials=1)
        assert json.dumps(strip_timing_fields(a)) \
            == json.dumps(strip_timing_fields(b))


class TestWriteReport:
    def test_floats_round_trip(self, tmp_path):
        payload = {"x": 0.1 + 0.2, "y": [1e-17, 3.141592653589793]}
        path = tmp_path / "r.json"
        write_report(payload, path)
        with open(path) as handle:
            assert json.load(handle) == payload

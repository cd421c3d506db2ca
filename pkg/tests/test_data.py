"""Tests for CSV ingestion, dataset invariants, and the GP generator."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from sparseflows import kernels as kr
from sparseflows.data import Dataset, gen_gp_dataset, load_csv, load_table, save_csv
from sparseflows.exceptions import DataFormatError, SingularGramError


class TestDataset:
    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            Dataset(X=np.zeros((3, 1)), y=np.zeros(2))

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            Dataset(X=np.array([[0.0], [np.inf]]), y=np.zeros(2))

    def test_unknown_provenance_rejected(self):
        with pytest.raises(ValueError, match="provenance"):
            Dataset(X=np.zeros((2, 1)), y=np.zeros(2), provenance="guess")

    def test_arrays_are_read_only(self):
        ds = Dataset(X=np.zeros((2, 1)), y=np.zeros(2))
        with pytest.raises(ValueError):
            ds.y[0] = 1.0

    def test_one_dimensional_x_becomes_column(self):
        ds = Dataset(X=np.arange(4.0), y=np.zeros(4))
        assert ds.X.shape == (4, 1)
        assert (ds.n, ds.d) == (4, 1)


class TestLoadCsv:
    def write(self, tmp_path, text):
        path = tmp_path / "data.csv"
        path.write_text(text)
        return path

    def test_basic_parse(self, tmp_path):
        path = self.write(tmp_path, "x1,x2,y\n0.0,1.0,2.0\n3.0,4.0,5.0\n1,2,3\n")
        ds = load_csv(path)
        assert (ds.n, ds.d) == (3, 2)
        assert_allclose(ds.X[1], [3.0, 4.0], rtol=0, atol=0)
        assert_allclose(ds.y, [2.0, 5.0, 3.0], rtol=0, atol=0)
        assert ds.provenance == "file"

    def test_row_order_preserved(self, tmp_path):
        path = self.write(tmp_path, "x1,y\n9.0,1.0\n1.0,2.0\n5.0,3.0\n")
        assert_allclose(load_csv(path).X[:, 0], [9.0, 1.0, 5.0], rtol=0, atol=0)

    def test_empty_file(self, tmp_path):
        with pytest.raises(DataFormatError, match="empty file"):
            load_csv(self.write(tmp_path, ""))

    def test_header_only(self, tmp_path):
        with pytest.raises(DataFormatError, match="no data rows"):
            load_csv(self.write(tmp_path, "x1,y\n"))

    def test_blank_line_located(self, tmp_path):
        path = self.write(tmp_path, "x1,y\n1.0,2.0\n\n3.0,4.0\n")
        with pytest.raises(DataFormatError, match="blank line at line 3"):
            load_csv(path)

    def test_ragged_row_located(self, tmp_path):
        path = self.write(tmp_path, "x1,x2,y\n1.0,2.0,3.0\n4.0,5.0\n")
        with pytest.raises(DataFormatError, match="line 3 has 2 cells, expected 3"):
            load_csv(path)

    def test_non_numeric_cell_located(self, tmp_path):
        path = self.write(tmp_path, "x1,y\n1.0,2.0\noops,4.0\n")
        with pytest.raises(DataFormatError, match="line 3, column 'x1'.*'oops'"):
            load_csv(path)

    def test_non_finite_cell_located(self, tmp_path):
        path = self.write(tmp_path, "x1,y\n1.0,nan\n")
        with pytest.raises(DataFormatError, match="line 2, column 'y'"):
            load_csv(path)

    def test_single_column_rejected(self, tmp_path):
        with pytest.raises(DataFormatError, match="header"):
            load_csv(self.write(tmp_path, "y\n1.0\n"))

    def test_load_table_returns_header(self, tmp_path):
        path = self.write(tmp_path, "a,b\n1.0,2.0\n")
        header, data = load_table(path)
        assert header == ["a", "b"]
        assert data.shape == (1, 2)


class TestRoundTrip:
    def test_bitwise_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        ds = Dataset(X=rng.normal(size=(40, 3)), y=rng.normal(size=40))
        path = tmp_path / "rt.csv"
        save_csv(ds, path)
        back = load_csv(path)
        assert np.array_equal(back.X, ds.X)
        assert np.array_equal(back.y, ds.y)

    def test_synthetic_round_trip(self, tmp_path):
        d = kr.KernelDictionary((kr.gaussian(0.3), kr.linear()), (1.0, 0.5))
        ds = gen_gp_dataset(d, [0, 1], N=25, d=2, noise_sd=0.1, seed=7)
        path = tmp_path / "gp.csv"
        save_csv(ds, path)
        assert np.array_equal(load_csv(path).y, ds.y)


class TestGpGenerator:
    def dictionary(self):
        return kr.KernelDictionary(
            (kr.gaussian(0.2), kr.gaussian(1.0), kr.linear()), (1.0, 1.0, 1.0))

    def test_deterministic_per_seed(self):
        d = self.dictionary()
        a = gen_gp_dataset(d, [0, 2], N=15, d=1, noise_sd=0.05, seed=3)
        b = gen_gp_dataset(d, [0, 2], N=15, d=1, noise_sd=0.05, seed=3)
        assert np.array_equal(a.X, b.X)
        assert np.array_equal(a.y, b.y)
        assert a.provenance == "synthetic-gp" and a.seed == 3

    def test_seed_changes_draw(self):
        d = self.dictionary()
        a = gen_gp_dataset(d, [0], N=10, d=1, noise_sd=0.0, seed=0)
        b = gen_gp_dataset(d, [0], N=10, d=1, noise_sd=0.0, seed=1)
        assert not np.array_equal(a.y, b.y)

    def test_single_point_constant_kernel_is_standard_normal(self):
        d = kr.KernelDictionary((kr.constant(1.0),), (1.0,))
        draws = np.array([
            gen_gp_dataset(d, [0], N=1, d=1, noise_sd=0.0, seed=s).y[0]
            for s in range(4000)
        ])
        # unit-variance zero-mean scalar: sample moments at 4000 draws
        assert abs(draws.mean()) < 3.0 / np.sqrt(4000)
        assert abs(draws.var() - 1.0) < 4.0 * np.sqrt(2.0 / 4000)

    def test_inactive_kernels_have_no_influence(self):
        base = self.dictionary()
        retuned = base.with_theta((1.0, 137.0, -2.5))  # kernels 1, 2 inactive
        a = gen_gp_dataset(base, [0], N=12, d=2, noise_sd=0.05, seed=11)
        b = gen_gp_dataset(retuned, [0], N=12, d=2, noise_sd=0.05, seed=11)
        assert np.array_equal(a.y, b.y)

    def test_points_live_in_unit_cube(self):
        ds = gen_gp_dataset(self.dictionary(), [0, 1], N=200, d=3,
                            noise_sd=0.0, seed=5)
        assert ds.X.min() >= 0.0 and ds.X.max() <= 1.0
        assert ds.X.shape == (200, 3)

    def test_empirical_covariance_matches_gram(self):
        # MC oracle: covariance of y at 3 fixed points over many seeds
        d = self.dictionary()
        pts = np.array([[0.1], [0.45], [0.8]])
        noise = 0.05
        n_draws = 2000
        draws = np.stack([
            gen_gp_dataset(d, [0, 2], N=3, d=1, noise_sd=noise, seed=s, X=pts).y
            for s in range(n_draws)
        ])
        target = kr.gram(d.subset([0, 2]), pts, nugget=0.0).entries
        target[np.diag_indices_from(target)] += noise**2
        sample_cov = draws.T @ draws / n_draws
        # var(y_i y_j) = C_ii C_jj + C_ij^2 for a zero-mean Gaussian
        se = np.sqrt((np.outer(target.diagonal(), target.diagonal())
                      + target**2) / n_draws)
        assert np.all(np.abs(sample_cov - target) <= 3.0 * se)

    def test_fixed_points_shape_checked(self):
        with pytest.raises(ValueError, match="fixed points"):
            gen_gp_dataset(self.dictionary(), [0], N=5, d=1, noise_sd=0.0,
                           seed=0, X=np.zeros((4, 1)))

    def test_empty_support_rejected(self):
        with pytest.raises(ValueError):
            gen_gp_dataset(self.dictionary(), [], N=5, d=1, noise_sd=0.0, seed=0)

    def test_negative_noise_rejected(self):
        with pytest.raises(ValueError, match="noise_sd"):
            gen_gp_dataset(self.dictionary(), [0], N=5, d=1, noise_sd=-0.1, seed=0)

    def test_degenerate_covariance_surfaces(self):
        # duplicated fixed points + zero noise: factorization must fail loudly
        d = kr.KernelDictionary((kr.gaussian(0.5),), (1.0,))
        pts = np.array([[0.3], [0.3]])
        with pytest.warns(UserWarning, match="duplicate points"):
            with pytest.raises(SingularGramError):
                gen_gp_dataset(d, [0], N=2, d=1, noise_sd=0.0, seed=0, X=pts)

import math

import numpy as np
import pytest

from dpcov.datagen import SynthSpec, load_csv, rescale_radius, save_csv, synth, zipf_bin_counts
from dpcov.linalg import Dataset, radius, trace_stat


def largest_remainder_oracle(n, bins, skew):
    """Independent largest-remainder rounding of the Zipf quotas."""
    weights = [1.0 / k**skew for k in range(1, bins + 1)]
    total = sum(weights)
    quotas = [n * w / total for w in weights]
    counts = [math.floor(q) for q in quotas]
    remainders = sorted(
        range(bins), key=lambda i: (-(quotas[i] - counts[i]), i)
    )
    for i in remainders[: n - sum(counts)]:
        counts[i] += 1
    return counts


class TestZipfCounts:
    def test_matches_oracle_and_frozen_values(self):
        got = zipf_bin_counts(1000, 4, 3.0)
        assert got == largest_remainder_oracle(1000, 4, 3.0)
        # quotas are (849.14, 106.14, 31.45, 13.27); the one leftover seat
        # goes to the largest remainder (bin 3)
        assert got == [849, 106, 32, 13]
        assert sum(got) == 1000

    def test_random_parameters_sum_to_n(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            n = int(rng.integers(10, 5000))
            bins = int(rng.integers(1, 9))
            skew = float(rng.uniform(0.5, 4.0))
            counts = zipf_bin_counts(n, bins, skew)
            assert sum(counts) == n
            assert counts == largest_remainder_oracle(n, bins, skew)

    def test_single_bin_takes_everything(self):
        assert zipf_bin_counts(123, 1, 3.0) == [123]


class TestSynth:
    def test_unit_norm_case(self):
        x = synth(SynthSpec(n=300, d=10, bins=1, seed=1))
        assert np.max(np.abs(x.norms() - 1.0)) < 1e-12
        assert abs(trace_stat(x) - 1.0) < 1e-12

    def test_norms_take_dyadic_values(self):
        spec = SynthSpec(n=500, d=8, bins=4, seed=2)
        x = synth(spec)
        counts = zipf_bin_counts(500, 4, 3.0)
        values, tallies = np.unique(np.round(x.norms(), 12), return_counts=True)
        assert list(values) == [2.0 ** (k - 4) for k in (1, 2, 3, 4)]
        assert sorted(tallies.tolist(), reverse=True) == sorted(counts, reverse=True)
        assert x.ball_constrained

    def test_trace_matches_bin_mass(self):
        spec = SynthSpec(n=1000, d=6, bins=4, seed=3)
        x = synth(spec)
        counts = zipf_bin_counts(1000, 4, 3.0)
        want = sum(c / 1000 * 4.0 ** (k - 4) for k, c in zip((1, 2, 3, 4), counts))
        assert abs(trace_stat(x) - want) < 1e-10

    def test_reproducible(self):
        spec = SynthSpec(n=100, d=5, bins=2, seed=4)
        assert np.array_equal(synth(spec).columns, synth(spec).columns)

    def test_distinct_seeds_differ(self):
        a = synth(SynthSpec(n=50, d=4, bins=1, seed=5))
        b = synth(SynthSpec(n=50, d=4, bins=1, seed=6))
        assert not np.array_equal(a.columns, b.columns)

    def test_underpopulated_bins_rejected(self):
        with pytest.raises(ValueError, match="cannot populate bins"):
            SynthSpec(n=3, d=4, bins=5)


class TestRescaleRadius:
    def test_small_radius_doubles_up(self):
        cols = np.zeros((2, 3))
        cols[0] = [0.3, 0.1, 0.05]
        x = rescale_radius(Dataset(cols))
        assert abs(radius(x) - 0.6) < 1e-15

    def test_radius_one_unchanged(self):
        x = Dataset(np.eye(3))
        assert rescale_radius(x) is x

    def test_lands_in_half_open_interval(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            cols = rng.standard_normal((3, 10)) * rng.uniform(1e-6, 1e3)
            r = radius(rescale_radius(Dataset(cols)))
            assert 0.5 < r <= 1.0

    def test_degenerate_rejected(self):
        with pytest.raises(ValueError, match="degenerate dataset"):
            rescale_radius(Dataset(np.zeros((2, 2))))


class TestCsvRoundTrip:
    def test_basis_rows(self, tmp_path):
        path = tmp_path / "basis.csv"
        path.write_text("1,0\n0,1\n")
        x = load_csv(path)
        assert np.array_equal(x.columns, np.eye(2))

    def test_header_skipped(self, tmp_path):
        path = tmp_path / "head.csv"
        path.write_text("alpha,beta\n1,2\n3,4\n")
        x = load_csv(path)
        assert x.dim == 2 and x.count == 2
        assert np.array_equal(x.columns[:, 0], [1.0, 2.0])

    def test_write_then_load_is_exact(self, tmp_path):
        rng = np.random.default_rng(8)
        x = Dataset(rng.standard_normal((5, 20)) * 1e-3)
        path = tmp_path / "round.csv"
        save_csv(x, path)
        assert np.array_equal(load_csv(path).columns, x.columns)

    def test_ragged_row_rejected(self, tmp_path):
        path = tmp_path / "ragged.csv"
        path.write_text("1,2\n3\n")
        with pytest.raises(ValueError, match="ragged row 2"):
            load_csv(path)

    def test_non_numeric_cell_located(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1,2\n3,x\n")
        with pytest.raises(ValueError, match="row 2, column 2"):
            load_csv(path)

    def test_non_finite_rejected(self, tmp_path):
        path = tmp_path / "inf.csv"
        path.write_text("1,2\n3,inf\n")
        with pytest.raises(ValueError, match="non-finite value at row 2, column 2"):
            load_csv(path)

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(ValueError, match="empty file"):
            load_csv(path)

    def test_header_only_rejected(self, tmp_path):
        path = tmp_path / "only_head.csv"
        path.write_text("a,b\n")
        with pytest.raises(ValueError, match="empty file"):
            load_csv(path)

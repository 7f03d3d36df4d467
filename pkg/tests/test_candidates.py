import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shapeclust.candidates import (
    expected_cell_count,
    generate_candidates,
    grid_views,
    resample_to_grid,
    restore_from_grid,
    save_candidates_csv,
)
from shapeclust.data import Dataset, TimeSeriesInstance


def make_dataset(n_inst=2, n_vars=1, length=10, seed=0):
    rng = np.random.default_rng(seed)
    instances = tuple(
        TimeSeriesInstance(values=rng.normal(size=(n_vars, length)), id=str(i))
        for i in range(n_inst)
    )
    return Dataset(instances=instances)


class TestResample:
    def test_linear_midpoint(self):
        np.testing.assert_allclose(resample_to_grid([0.0, 1.0], 3), [0.0, 0.5, 1.0])

    def test_constant_invariance(self):
        np.testing.assert_array_equal(resample_to_grid([1.0] * 4, 7), np.ones(7))

    def test_piecewise_linear_eval(self):
        np.testing.assert_allclose(resample_to_grid([0.0, 2.0, 4.0, 6.0], 3), [0.0, 3.0, 6.0])

    def test_endpoints_exact(self):
        rng = np.random.default_rng(0)
        vals = rng.normal(size=9)
        out = resample_to_grid(vals, 13)
        assert out[0] == vals[0]
        assert out[-1] == vals[-1]

    @given(
        st.lists(st.floats(-100, 100), min_size=2, max_size=20),
        st.floats(-50, 50),
        st.integers(2, 40),
    )
    @settings(max_examples=60, deadline=None)
    def test_translation_equivariance(self, vals, shift, grid_len):
        vals = np.array(vals)
        a = resample_to_grid(vals + shift, grid_len)
        b = resample_to_grid(vals, grid_len) + shift
        np.testing.assert_allclose(a, b, atol=1e-9)


class TestRestore:
    def test_inverse_of_midpoint_example(self):
        np.testing.assert_allclose(restore_from_grid([0.0, 0.5, 1.0], 2), [0.0, 1.0])

    def test_constant(self):
        np.testing.assert_array_equal(restore_from_grid([2.0] * 5, 3), np.full(3, 2.0))

    def test_monotone_round_trip_error_bound(self):
        rng = np.random.default_rng(42)
        for _ in range(20):
            signal = np.sort(rng.normal(size=8))
            span = signal.max() - signal.min()
            back = restore_from_grid(resample_to_grid(signal, 32), 8)
            assert np.abs(back - signal).max() <= 0.15 * max(span, 1e-9)

    def test_exact_on_linear_signal(self):
        signal = np.linspace(-2.0, 5.0, 11)
        back = restore_from_grid(resample_to_grid(signal, 32), 11)
        np.testing.assert_allclose(back, signal, atol=1e-12)


class TestGenerate:
    def test_window_count_n10_ratio_half(self):
        ds = make_dataset(n_inst=2, length=10)
        cands = generate_candidates(ds, ratios=(0.5,), stride=1, per_cell_cap=100)
        per_instance = [c for c in cands if c.subsequence.source_id == "0"]
        assert len(per_instance) == 6
        assert [c.subsequence.start for c in per_instance] == [0, 1, 2, 3, 4, 5]

    def test_window_count_multivariate(self):
        ds = make_dataset(n_inst=2, n_vars=6, length=100)
        cands = generate_candidates(ds, ratios=(0.1,), stride=5, per_cell_cap=100)
        per_instance = [c for c in cands if c.subsequence.source_id == "0"]
        assert len(per_instance) == 114  # 6 variables x 19 starts

    def test_cell_count_formula(self):
        assert expected_cell_count(100, 10, 5) == 19
        assert expected_cell_count(10, 5, 1) == 6

    def test_cap_subsamples_reproducibly(self):
        ds = make_dataset(n_inst=2, length=100)
        a = generate_candidates(ds, ratios=(0.1,), stride=1, per_cell_cap=10, seed=5)
        b = generate_candidates(ds, ratios=(0.1,), stride=1, per_cell_cap=10, seed=5)
        per_cell = [c for c in a if c.subsequence.source_id == "0"]
        assert len(per_cell) == 10  # cell had 91 windows
        assert [c.key for c in a] == [c.key for c in b]

    def test_short_ratio_skipped_with_warning(self, caplog):
        ds = make_dataset(n_inst=2, length=10)
        with caplog.at_level(logging.WARNING):
            cands = generate_candidates(ds, ratios=(0.1, 0.5), stride=1, per_cell_cap=50)
        assert "skipped" in caplog.text
        assert all(c.length_ratio == 0.5 for c in cands)

    def test_all_ratios_too_short_is_error(self):
        ds = make_dataset(n_inst=2, length=10)
        with pytest.raises(ValueError, match="no candidates"):
            generate_candidates(ds, ratios=(0.1,), stride=1)

    def test_grid_view_shape_and_normalization(self):
        ds = make_dataset(n_inst=2, length=40)
        cands = generate_candidates(ds, ratios=(0.3,), stride=3, grid_len=16)
        for c in cands:
            assert c.grid_view.shape == (16,)
            assert c.subsequence.length == 12
        # grid views come from z-normalized windows: endpoints match znorm
        c0 = cands[0]
        w = c0.subsequence.values
        zn = (w - w.mean()) / w.std()
        assert c0.grid_view[0] == pytest.approx(zn[0])
        assert c0.grid_view[-1] == pytest.approx(zn[-1])

    def test_subsequence_values_are_raw_slice(self):
        ds = make_dataset(n_inst=2, length=30, seed=3)
        cands = generate_candidates(ds, ratios=(0.2,), stride=4)
        for c in cands:
            inst = ds.instances[int(c.subsequence.source_id)]
            s = c.subsequence
            np.testing.assert_array_equal(
                s.values, inst.values[s.variable, s.start : s.start + s.length]
            )

    def test_determinism_and_canonical_order(self):
        ds = make_dataset(n_inst=3, n_vars=2, length=60, seed=9)
        a = generate_candidates(ds, ratios=(0.2, 0.4), stride=2, per_cell_cap=8, seed=1)
        b = generate_candidates(ds, ratios=(0.4, 0.2), stride=2, per_cell_cap=8, seed=1)
        assert [c.key for c in a] == [c.key for c in b]
        keys = [
            (int(c.subsequence.source_id), c.subsequence.variable, c.length_ratio, c.subsequence.start)
            for c in a
        ]
        assert keys == sorted(keys)

    def test_global_cap(self):
        ds = make_dataset(n_inst=4, length=100)
        cands = generate_candidates(
            ds, ratios=(0.1, 0.2), stride=1, per_cell_cap=50, max_candidates=77, seed=2
        )
        assert len(cands) == 77

    def test_grid_views_stack(self):
        ds = make_dataset(n_inst=2, length=20)
        cands = generate_candidates(ds, ratios=(0.5,), stride=2, grid_len=8)
        stacked = grid_views(cands)
        assert stacked.shape == (len(cands), 8)

    def test_candidate_dump(self, tmp_path):
        ds = make_dataset(n_inst=2, length=20)
        cands = generate_candidates(ds, ratios=(0.5,), stride=5)
        path = tmp_path / "cands.csv"
        save_candidates_csv(cands, str(path))
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "id,instance,variable,start,length,ratio"
        assert len(lines) == len(cands) + 1

"""
Data Foundation Tests
=====================

Cell records, CSV store, normalization and fleet splits.
"""

import numpy as np
import pytest

from rul2stage.contracts.base import ConfigError, DataError, ErrorCode
from rul2stage.contracts.data_contracts import (
    CHANNELS, CellHistory, CycleRecord, FeatureSelection, NormalizationStats,
)
from rul2stage.dataio.csv_store import (
    MANIFEST_NAME, load_cells, read_cell_csv, read_manifest, resolve_sources, save_cells,
)
from rul2stage.dataio.normalization import apply_normalization, compute_normalization, denormalize
from rul2stage.dataio.split import split_train_test, split_validation_cells
from tests.factories import linear_cell, make_cell

HEADER = ("cycle_index,discharge_capacity,charge_capacity,internal_resistance,"
          "temp_avg,temp_min,temp_max,charge_time\n")


def record(cycle, **overrides):
    values = dict(cycle_index=cycle, discharge_capacity=1.1, charge_capacity=1.1,
                  internal_resistance=0.016, temp_avg=32.0, temp_min=30.0, temp_max=34.0,
                  charge_time=10.0)
    values.update(overrides)
    return CycleRecord(**values)


def write_csv(path, rows):
    path.write_text(HEADER + "".join(rows), encoding="utf-8")
    return path


# =============================================================================
# RECORDS
# =============================================================================

class TestCycleRecord:
    """Per-record invariants."""

    def test_rejects_non_positive_capacity(self):
        with pytest.raises(DataError) as exc:
            record(1, discharge_capacity=0.0)
        assert exc.value.code is ErrorCode.RECORD_INVARIANT

    def test_rejects_unordered_temperatures(self):
        with pytest.raises(DataError) as exc:
            record(1, temp_min=33.0)
        assert exc.value.code is ErrorCode.RECORD_INVARIANT

    def test_rejects_nan(self):
        with pytest.raises(DataError) as exc:
            record(1, charge_time=float("nan"))
        assert exc.value.code is ErrorCode.NON_FINITE_VALUE


class TestCellHistory:

    def test_eol_is_record_count(self):
        cell = CellHistory("c", tuple(record(i) for i in range(1, 11)))
        assert cell.eol == 10

    def test_gap_rejected(self):
        with pytest.raises(DataError) as exc:
            CellHistory("c", (record(1), record(3)))
        assert exc.value.code is ErrorCode.CYCLE_GAP

    def test_channel_matrix_follows_selection(self):
        cell = linear_cell(eol=60)
        matrix = cell.channel_matrix(FeatureSelection.from_count(3))
        assert matrix.shape == (3, 60)
        np.testing.assert_array_equal(matrix[0], cell.channel("discharge_capacity"))
        np.testing.assert_array_equal(matrix[2], cell.channel("internal_resistance"))

    def test_channels_are_read_only(self):
        cell = linear_cell(eol=60)
        with pytest.raises(ValueError):
            cell.channel("discharge_capacity")[0] = 0.0


class TestFeatureSelection:

    def test_canonical_prefixes(self):
        assert FeatureSelection.from_count(1).channels == ("discharge_capacity",)
        assert FeatureSelection.from_count(4).channels == CHANNELS[:4]
        assert FeatureSelection.from_count(7).channels == CHANNELS

    @pytest.mark.parametrize("count", [0, 8])
    def test_count_out_of_range(self, count):
        with pytest.raises(ConfigError):
            FeatureSelection.from_count(count)

    def test_unknown_channel(self):
        with pytest.raises(ConfigError) as exc:
            FeatureSelection(("voltage",))
        assert exc.value.code is ErrorCode.CONFIG_INVALID
        assert ("channel", "voltage") in exc.value.error.context

    def test_order_enforced(self):
        with pytest.raises(ConfigError):
            FeatureSelection(("charge_capacity", "discharge_capacity"))


# =============================================================================
# CSV STORE
# =============================================================================

class TestCsvStore:
    """Loading, validation and lossless save/load."""

    def test_save_load_is_exact(self, tmp_path, small_fleet):
        save_cells(small_fleet, tmp_path)
        loaded = load_cells(tmp_path)
        assert [c.cell_id for c in loaded] == [c.cell_id for c in small_fleet]
        for before, after in zip(small_fleet, loaded):
            for name in CHANNELS:
                np.testing.assert_array_equal(before.channel(name), after.channel(name))

    def test_manifest_lists_relative_paths(self, tmp_path, small_fleet):
        manifest = save_cells(small_fleet[:2], tmp_path / "fleet")
        lines = manifest.read_text(encoding="utf-8").splitlines()
        assert lines == [f"{c.cell_id}.csv" for c in small_fleet[:2]]
        assert read_manifest(manifest) == [tmp_path / "fleet" / line for line in lines]

    def test_resolve_prefers_manifest(self, tmp_path, small_fleet):
        save_cells(small_fleet[:2], tmp_path)
        (tmp_path / "stray.csv").write_text(HEADER, encoding="utf-8")
        assert [p.name for p in resolve_sources(tmp_path)] == [f"{c.cell_id}.csv" for c in small_fleet[:2]]
        assert (tmp_path / MANIFEST_NAME).is_file()

    def test_columns_matched_by_name(self, tmp_path):
        path = tmp_path / "shuffled.csv"
        path.write_text(
            "charge_time,cycle_index,temp_max,temp_min,temp_avg,internal_resistance,charge_capacity,discharge_capacity\n"
            "10.5,1,34,30,32,0.016,1.1,1.09\n"
            "10.6,2,34,30,32,0.017,1.1,1.08\n",
            encoding="utf-8",
        )
        cell = read_cell_csv(path)
        assert cell.cell_id == "shuffled"
        np.testing.assert_array_equal(cell.channel("discharge_capacity"), [1.09, 1.08])
        np.testing.assert_array_equal(cell.channel("charge_time"), [10.5, 10.6])

    def test_rows_sorted_by_cycle(self, tmp_path):
        path = write_csv(tmp_path / "c.csv", [
            "2,1.08,1.1,0.016,32,30,34,10\n",
            "1,1.09,1.1,0.016,32,30,34,10\n",
        ])
        assert list(read_cell_csv(path).channel("discharge_capacity")) == [1.09, 1.08]

    def test_missing_column(self, tmp_path):
        path = tmp_path / "c.csv"
        path.write_text("cycle_index,discharge_capacity\n1,1.1\n", encoding="utf-8")
        with pytest.raises(DataError) as exc:
            read_cell_csv(path)
        assert exc.value.code is ErrorCode.MISSING_COLUMN

    def test_cycle_gap_names_line(self, tmp_path):
        path = write_csv(tmp_path / "c.csv", [
            "1,1.09,1.1,0.016,32,30,34,10\n",
            "3,1.08,1.1,0.016,32,30,34,10\n",
        ])
        with pytest.raises(DataError) as exc:
            read_cell_csv(path)
        assert exc.value.code is ErrorCode.CYCLE_GAP
        assert ("line", "3") in exc.value.error.context

    def test_duplicate_cycle(self, tmp_path):
        path = write_csv(tmp_path / "c.csv", [
            "1,1.09,1.1,0.016,32,30,34,10\n",
            "1,1.08,1.1,0.016,32,30,34,10\n",
        ])
        with pytest.raises(DataError) as exc:
            read_cell_csv(path)
        assert exc.value.code is ErrorCode.CYCLE_GAP

    def test_unparseable_value(self, tmp_path):
        path = write_csv(tmp_path / "c.csv", ["1,abc,1.1,0.016,32,30,34,10\n"])
        with pytest.raises(DataError) as exc:
            read_cell_csv(path)
        assert exc.value.code is ErrorCode.MALFORMED_ROW

    def test_non_finite_value(self, tmp_path):
        path = write_csv(tmp_path / "c.csv", ["1,1.1,1.1,inf,32,30,34,10\n"])
        with pytest.raises(DataError) as exc:
            read_cell_csv(path)
        assert exc.value.code is ErrorCode.NON_FINITE_VALUE

    def test_header_only(self, tmp_path):
        path = write_csv(tmp_path / "c.csv", [])
        with pytest.raises(DataError) as exc:
            read_cell_csv(path)
        assert exc.value.code is ErrorCode.EMPTY_INPUT

    def test_missing_path(self, tmp_path):
        with pytest.raises(DataError) as exc:
            load_cells(tmp_path / "nowhere")
        assert exc.value.code is ErrorCode.FILE_NOT_FOUND


# =============================================================================
# NORMALIZATION
# =============================================================================

class TestNormalization:

    def test_training_stats_are_zero_mean_unit_std(self, small_fleet):
        selection = FeatureSelection.from_count(4)
        stats = compute_normalization(small_fleet, selection)
        pooled = np.concatenate(
            [apply_normalization(c, stats, selection).values for c in small_fleet], axis=1
        )
        np.testing.assert_allclose(pooled.mean(axis=1), 0.0, atol=1e-9)
        np.testing.assert_allclose(pooled.std(axis=1), 1.0, atol=1e-9)

    def test_denormalize_inverts(self, small_fleet):
        selection = FeatureSelection.from_count(3)
        stats = compute_normalization(small_fleet, selection)
        cell = small_fleet[0]
        restored = denormalize(apply_normalization(cell, stats, selection), stats, selection)
        np.testing.assert_allclose(restored, cell.channel_matrix(selection), rtol=1e-12)

    def test_zero_variance_channel(self):
        cells = [make_cell("a", np.full(60, 1.0)), make_cell("b", np.full(60, 1.0))]
        with pytest.raises(DataError) as exc:
            compute_normalization(cells, FeatureSelection.from_count(1))
        assert exc.value.code is ErrorCode.ZERO_VARIANCE

    def test_stats_missing_channel(self, small_fleet):
        stats = compute_normalization(small_fleet, FeatureSelection.from_count(2))
        with pytest.raises(DataError) as exc:
            apply_normalization(small_fleet[0], stats, FeatureSelection.from_count(3))
        assert exc.value.code is ErrorCode.MISSING_CHANNEL

    def test_stats_reject_zero_std(self):
        with pytest.raises(DataError):
            NormalizationStats(("discharge_capacity",), (1.0,), (0.0,))


# =============================================================================
# SPLITS
# =============================================================================

class TestSplits:

    def test_train_test_partition(self, small_fleet):
        train, test = split_train_test(small_fleet, 4, seed=7)
        assert len(train) == 4 and len(test) == 2
        ids = sorted(c.cell_id for c in train + test)
        assert ids == sorted(c.cell_id for c in small_fleet)

    def test_train_test_is_seeded(self, small_fleet):
        a = split_train_test(small_fleet, 3, seed=1)
        b = split_train_test(small_fleet, 3, seed=1)
        assert [c.cell_id for c in a[0]] == [c.cell_id for c in b[0]]

    @pytest.mark.parametrize("n_train", [0, 6])
    def test_invalid_train_size(self, small_fleet, n_train):
        with pytest.raises(DataError) as exc:
            split_train_test(small_fleet, n_train, seed=0)
        assert exc.value.code is ErrorCode.INVALID_SPLIT

    def test_validation_keeps_one_cell_each_side(self, small_fleet):
        fit, val = split_validation_cells(small_fleet[:2], 0.1, seed=0)
        assert len(fit) == 1 and len(val) == 1

    def test_validation_needs_two_cells(self, small_fleet):
        with pytest.raises(DataError):
            split_validation_cells(small_fleet[:1], 0.1, seed=0)

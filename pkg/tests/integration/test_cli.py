"""
CLI Tests

Commands end to end through main(), exit codes and artifact layout.

AXIOM UNDER TEST:
=================
Every failure surfaces as a typed error with its exit code; identical
inputs and seeds reproduce identical files.
"""

import json
import math

import pandas as pd
import pytest

from rul2stage.cli import LOCK_NAME, main
from rul2stage.contracts.data_contracts import FeatureSelection, NormalizationStats
from rul2stage.contracts.model_contracts import HeadType
from rul2stage.dataio.csv_store import load_cells, save_cells
from rul2stage.eval.report import read_report
from rul2stage.nn import init_params, save_checkpoint
from rul2stage.observability import AuditEntry, AuditEventType
from tests.factories import linear_cell

FLEET_CFG = "n_cells=3\neol_range=80,100\n"

SMALL_RUN_CFG = """\
features=2
n_w=20
n_train=6
hidden_size=6
layers_per_stack=1
n_stacks=2
dense_units=8
batch_size=16
max_epochs=40
patience=10
learning_rate=0.005
validation_fraction=0.2
"""


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def read_audit(path):
    return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines()]


def assert_chain_verifies(entries):
    """Each line's hash recomputes from its fields and links to the line before."""
    previous = ""
    for n, entry in enumerate(entries, start=1):
        assert entry["sequence"] == n
        assert entry["previous_hash"] == previous
        details = tuple(sorted(entry["details"].items()))
        recomputed = AuditEntry.compute_hash(n, AuditEventType(entry["event_type"]), details, previous)
        assert recomputed == entry["entry_hash"]
        previous = entry["entry_hash"]


# =============================================================================
# GENERATE
# =============================================================================

class TestGenerate:

    def test_same_seed_same_files(self, tmp_path):
        cfg = write(tmp_path / "fleet.cfg", FLEET_CFG)
        assert main(["generate", "--config", str(cfg), "--seed", "4", "--out", str(tmp_path / "a"), "--quiet"]) == 0
        assert main(["generate", "--config", str(cfg), "--seed", "4", "--out", str(tmp_path / "b"), "--quiet"]) == 0
        for name in ("manifest.txt", "cell001.csv", "cell003.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
        assert not (tmp_path / "a" / LOCK_NAME).exists()

    def test_output_is_loadable(self, tmp_path):
        cfg = write(tmp_path / "fleet.cfg", FLEET_CFG)
        main(["generate", "--config", str(cfg), "--out", str(tmp_path / "fleet"), "--quiet"])
        cells = load_cells(tmp_path / "fleet")
        assert [c.cell_id for c in cells] == ["cell001", "cell002", "cell003"]

    def test_locked_output(self, tmp_path, capsys):
        out = tmp_path / "fleet"
        out.mkdir()
        (out / LOCK_NAME).write_text("123", encoding="utf-8")
        cfg = write(tmp_path / "fleet.cfg", FLEET_CFG)
        assert main(["generate", "--config", str(cfg), "--out", str(out)]) == 2
        assert "OUTPUT_LOCKED" in capsys.readouterr().err

    def test_bad_fleet_config(self, tmp_path):
        cfg = write(tmp_path / "fleet.cfg", "eol_range=10,20\n")
        assert main(["generate", "--config", str(cfg), "--out", str(tmp_path / "x")]) == 2


# =============================================================================
# ERROR SURFACES
# =============================================================================

class TestExitCodes:

    def test_feature_count_eight(self, tmp_path, capsys):
        assert main(["train", "--features", "8", "--data", str(tmp_path), "--out", str(tmp_path / "run")]) == 2
        assert "[ERROR] CONFIG_INVALID" in capsys.readouterr().err

    def test_missing_data_setting(self, tmp_path):
        assert main(["train", "--out", str(tmp_path / "run")]) == 2

    def test_malformed_cell_file(self, tmp_path, capsys):
        data = tmp_path / "data"
        save_cells([linear_cell("a", eol=100), linear_cell("b", eol=100)], data)
        (data / "b.csv").write_text("cycle_index,discharge_capacity\n1,1.1\n", encoding="utf-8")
        assert main(["train", "--data", str(data), "--out", str(tmp_path / "run")]) == 3
        assert "MISSING_COLUMN" in capsys.readouterr().err

    def test_failed_run_leaves_audit(self, tmp_path):
        data = tmp_path / "data"
        save_cells([linear_cell("a", eol=100), linear_cell("b", eol=100)], data)
        out = tmp_path / "run"
        # n_train defaults to 100, more than the fleet holds
        assert main(["train", "--data", str(data), "--out", str(out), "--quiet"]) == 3
        entries = read_audit(out / "audit.jsonl")
        assert [e["event_type"] for e in entries] == ["stage_started", "run_failed"]
        assert_chain_verifies(entries)
        assert not (out / LOCK_NAME).exists()

    def test_tampered_audit_line_breaks_chain(self, tmp_path):
        data = tmp_path / "data"
        save_cells([linear_cell("a", eol=100), linear_cell("b", eol=100)], data)
        out = tmp_path / "run"
        main(["train", "--data", str(data), "--out", str(out), "--quiet"])
        entries = read_audit(out / "audit.jsonl")
        entries[0]["details"]["stage"] = "evaluate"
        with pytest.raises(AssertionError):
            assert_chain_verifies(entries)

    def test_no_command(self):
        assert main([]) == 2


# =============================================================================
# INSPECT
# =============================================================================

class TestInspect:

    def test_prints_header(self, tmp_path, tiny_spec, capsys):
        spec = tiny_spec(head=HeadType.RUL)
        selection = FeatureSelection.from_count(2)
        stats = NormalizationStats(selection.channels, (1.0, 1.0), (0.1, 0.1))
        path = save_checkpoint(tmp_path / "m.ckpt", spec, init_params(spec), selection, stats, {"stage": "rul"})
        assert main(["inspect", str(path)]) == 0
        out = capsys.readouterr().out
        assert "head=rul" in out and "n_w=20" in out
        assert "selection=discharge_capacity,charge_capacity" in out
        assert "meta.stage=rul" in out

    def test_corrupt_checkpoint(self, tmp_path):
        path = write(tmp_path / "m.ckpt", "not a checkpoint\n")
        assert main(["inspect", str(path)]) == 3


# =============================================================================
# FULL PIPELINE
# =============================================================================

@pytest.mark.slow
class TestPipeline:
    """generate -> train -> evaluate -> ablate -> baseline on a small fleet."""

    def test_end_to_end(self, tmp_path):
        fleet_cfg = write(tmp_path / "fleet.cfg", "n_cells=8\neol_range=90,130\n")
        run_cfg = write(tmp_path / "run.cfg", SMALL_RUN_CFG)
        fleet, run = tmp_path / "fleet", tmp_path / "run"

        assert main(["generate", "--config", str(fleet_cfg), "--out", str(fleet), "--quiet"]) == 0
        assert main(["train", "--config", str(run_cfg), "--data", str(fleet), "--out", str(run), "--quiet"]) == 0
        for name in ("hs.ckpt", "rul.ckpt", "hs_history.csv", "rul_history.csv", "fpc_decisions.csv",
                     "training_metrics.csv", "train_manifest.txt", "test_manifest.txt", "audit.jsonl"):
            assert (run / name).is_file(), name
        assert len(load_cells(run / "train_manifest.txt")) == 6
        assert len(pd.read_csv(run / "fpc_decisions.csv")) == 6
        assert_chain_verifies(read_audit(run / "audit.jsonl"))

        summary = pd.read_csv(run / "training_metrics.csv")
        assert list(summary.columns) == ["stage", "metric", "count", "min", "max", "avg", "last"]
        assert set(summary["stage"]) == {"hs", "rul"}
        hs_epochs = summary.query("stage == 'hs' and metric == 'epochs_run'")["last"].item()
        assert hs_epochs == len(pd.read_csv(run / "hs_history.csv"))

        report_dir = tmp_path / "report"
        assert main(["evaluate", "--config", str(run_cfg), "--hs", str(run / "hs.ckpt"),
                     "--rul", str(run / "rul.ckpt"), "--data", str(run / "test_manifest.txt"),
                     "--out", str(report_dir), "--quiet"]) == 0
        values = read_report(report_dir / "report.txt")
        assert values["cells.total"] == "2"
        rows = pd.read_csv(report_dir / "metrics.csv")
        assert len(rows) == 2
        hit = rows[rows["triggered"]]
        assert int(values["aggregate.n_cells"]) == len(hit)
        assert int(values["cells.untriggered"]) == 2 - len(hit)
        if len(hit):
            # the aggregate is the plain mean of the per-cell rows
            assert float(values["aggregate.mae"]) == math.fsum(hit["mae"]) / len(hit)
            assert float(values["aggregate.mse"]) == math.fsum(hit["mse"]) / len(hit)
        for row in hit.itertuples():
            curve = pd.read_csv(report_dir / "curves" / f"{row.cell_id}.csv")
            assert len(curve) == row.eol - row.fpc_cycle + 1
            assert curve["anchor_cycle"].iloc[0] == row.fpc_cycle
            assert curve["anchor_cycle"].iloc[-1] == row.eol
            assert curve["target"].iloc[0] == 1.0 and curve["target"].iloc[-1] == 0.0
            assert curve["prediction"].between(0.0, 1.0).all()
        for cell_id in rows["cell_id"]:
            assert (report_dir / "plots" / f"{cell_id}.svg").is_file(), cell_id
            assert (report_dir / "traces" / f"{cell_id}.csv").is_file(), cell_id

        ablate_dir = tmp_path / "ablate"
        assert main(["ablate", "--config", str(run_cfg), "--data", str(fleet), "--counts", "1,2",
                     "--out", str(ablate_dir), "--quiet"]) == 0
        lines = (ablate_dir / "ablation.csv").read_text().splitlines()
        assert lines[0].startswith("features,channels,mse,mae,mape")
        assert len(lines) == 3
        ablation_summary = pd.read_csv(ablate_dir / "training_metrics.csv")
        assert list(ablation_summary.columns)[:2] == ["features", "stage"]
        assert set(ablation_summary["features"]) == {1, 2}

        baseline_dir = tmp_path / "baseline"
        assert main(["baseline", "--config", str(run_cfg), "--data", str(fleet),
                     "--out", str(baseline_dir), "--quiet"]) == 0
        lines = (baseline_dir / "baseline.csv").read_text().splitlines()
        assert len(lines) == 9
        assert lines[0] == ("cell_id,eol,input_end,horizon,mse,mae,mape,"
                            "predicted_eol,eol_censored,rul_mse,rul_mae,rul_mape")
        baseline = pd.read_csv(baseline_dir / "baseline.csv")
        assert (baseline["predicted_eol"] > baseline["input_end"]).all()
        assert baseline["rul_mae"].between(0.0, 1.0).all()

    def test_training_is_reproducible(self, tmp_path):
        fleet_cfg = write(tmp_path / "fleet.cfg", "n_cells=8\neol_range=90,130\n")
        run_cfg = write(tmp_path / "run.cfg", SMALL_RUN_CFG)
        main(["generate", "--config", str(fleet_cfg), "--out", str(tmp_path / "fleet"), "--quiet"])
        codes = [main(["train", "--config", str(run_cfg), "--data", str(tmp_path / "fleet"),
                       "--out", str(tmp_path / name), "--quiet"]) for name in ("a", "b")]
        assert codes == [0, 0]
        for name in ("hs.ckpt", "rul.ckpt", "fpc_decisions.csv", "training_metrics.csv", "audit.jsonl"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name

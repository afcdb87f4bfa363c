"""
rul2stage CLI
=============

Batch orchestration of the two-stage pipeline.

COMMANDS:
- generate:  Synthetic fleet -> CSV files + manifest
- train:     Stage 1 (health state + FPC) then stage 2 (RUL) -> checkpoints
- evaluate:  Checkpoints + test cells -> metrics report, curves, plots
- ablate:    Train/evaluate once per feature count -> summary table
- baseline:  Conventional-scheme capacity forecast metrics
- inspect:   Print a checkpoint header

EXIT CODES:
- 0 success, 2 config error, 3 data error, 4 numeric failure

USAGE:
    python -m rul2stage [COMMAND] [ARGS]
"""

from __future__ import annotations
from contextlib import contextmanager
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence
import argparse
import logging
import os
import sys

import numpy as np
import pandas as pd

from .config import RunConfig, load_fleet_spec, load_run_config
from .contracts.base import ConfigError, DataError, ErrorCode, PipelineError
from .contracts.data_contracts import CellHistory
from .dataio.csv_store import load_cells, resolve_sources, save_cells, write_manifest
from .dataio.split import split_train_test
from .eval.baseline import baseline_forecast, baseline_metrics, baseline_split
from .eval.fleet import evaluate_fleet
from .eval.report import baseline_to_frame, write_report, write_table
from .fpc.export import decisions_to_frame
from .fpc.hs_model import HSModel, labeled_accuracy, train_hs
from .fpc.stage_model import check_compatible
from .fpc.trigger import decide_fpc
from .nn.checkpoint import read_header
from .nn.training import SUMMARY_COLUMNS, history_to_frame, metrics_to_frame
from .observability import AuditEventType, AuditLog, MetricsCollector
from .rulpred.rul_model import RULModel, train_rul
from .synthgen.fleet import generate_fleet

logger = logging.getLogger("rul2stage")

LOCK_NAME = ".rul2stage.lock"
AUDIT_NAME = "audit.jsonl"
ABLATION_COLUMNS = ["features", "channels", "mse", "mae", "mape", "hs_accuracy", "n_cells", "untriggered"]


# =============================================================================
# HELPERS
# =============================================================================

class Console:
    """[*]-prefixed progress lines on stdout, silenced by --quiet."""

    def __init__(self, quiet: bool = False):
        self.quiet = quiet

    def say(self, message: str) -> None:
        if not self.quiet:
            print(f"[*] {message}")

    def detail(self, message: str) -> None:
        if not self.quiet:
            print(f"    {message}")


@contextmanager
def output_lock(out_dir: Path) -> Iterator[Path]:
    """Exclusive use of out_dir for one command; the lock file is removed afterwards."""
    out_dir.mkdir(parents=True, exist_ok=True)
    lock = out_dir / LOCK_NAME
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise ConfigError(ErrorCode.OUTPUT_LOCKED, "output directory is in use by another run", path=out_dir)
    try:
        os.write(fd, str(os.getpid()).encode('ascii'))
        os.close(fd)
        yield out_dir
    finally:
        lock.unlink(missing_ok=True)


@contextmanager
def audited(out_dir: Path, command: str) -> Iterator[AuditLog]:
    """Audit log for one command, written to out_dir even when the command fails."""
    audit = AuditLog()
    audit.append(AuditEventType.STAGE_STARTED, stage=command)
    try:
        yield audit
    except PipelineError as exc:
        audit.append(AuditEventType.RUN_FAILED, stage=command, error=exc.error.describe())
        raise
    else:
        audit.append(AuditEventType.STAGE_COMPLETED, stage=command)
    finally:
        ok, error = audit.verify_integrity()
        if not ok:
            logger.error("audit chain does not verify: %s", error.describe())
        logger.info("%s: %d artifacts recorded", command,
                    sum(1 for _ in audit.replay(AuditEventType.ARTIFACT_WRITTEN)))
        audit.write_jsonl(out_dir / AUDIT_NAME)


def _overrides(args: argparse.Namespace, **extra: object) -> Dict[str, object]:
    values = {"seed": args.seed, "out": args.out, "features": args.features}
    values.update(extra)
    return values


def _record(audit: AuditLog, out_dir: Path, path: Path) -> Path:
    audit.append(AuditEventType.ARTIFACT_WRITTEN, path=Path(path).relative_to(out_dir).as_posix())
    return path


def _fmt(value: Optional[float]) -> str:
    return "n/a" if value is None else f"{value:.6g}"


def _ablation_row(count, channels, agg, hs_accuracy, untriggered) -> Dict[str, object]:
    return {
        "features": count,
        "channels": "+".join(channels),
        "mse": agg.mse if agg else None,
        "mae": agg.mae if agg else None,
        "mape": agg.mape if agg else None,
        "hs_accuracy": hs_accuracy,
        "n_cells": agg.n_cells if agg else 0,
        "untriggered": untriggered,
    }


def _train_both(
    cfg: RunConfig,
    train_cells: Sequence[CellHistory],
    count: int,
    metrics: MetricsCollector,
    console: Console,
):
    """Stage 1, training-cell FPCs, stage 2. Returns (hs, decisions, rul)."""
    selection = cfg.selection(count)
    architecture = cfg.architecture(count)
    tc = cfg.train_config()

    console.say(f"Stage 1: health-state model on {len(train_cells)} cells, {count} features")
    hs = train_hs(train_cells, selection, p=cfg.p, config=tc, n_w=cfg.n_w, step=cfg.step,
                  architecture=architecture, metrics=metrics)
    decisions = [decide_fpc(hs, cell, cfg.k) for cell in train_cells]
    n_triggered = sum(d.triggered for d in decisions)
    console.detail(f"{n_triggered}/{len(decisions)} training cells triggered")

    console.say("Stage 2: RUL model on post-FPC windows")
    rul = train_rul(train_cells, decisions, selection, config=tc, n_w=cfg.n_w, step=cfg.step,
                    architecture=architecture, stats=hs.stats, metrics=metrics)
    return hs, decisions, rul


# =============================================================================
# COMMANDS
# =============================================================================

def cmd_generate(args: argparse.Namespace, console: Console) -> int:
    """Write a synthetic fleet in the cell CSV format."""
    spec = load_fleet_spec(args.config, {"master_seed": args.seed})
    out_dir = Path(args.out or "fleet")
    console.say(f"Generating {spec.n_cells} cells (master_seed={spec.master_seed})")
    with output_lock(out_dir):
        cells = generate_fleet(spec)
        manifest = save_cells(cells, out_dir)
    console.detail(f"Wrote {len(cells)} cell files and {manifest}")
    return 0


def cmd_train(args: argparse.Namespace, console: Console) -> int:
    """Stage 1 then stage 2; persists both checkpoints, histories, decisions and manifests."""
    cfg = load_run_config(args.config, _overrides(args, data=args.data))
    data = cfg.require("data")["data"]
    out_dir = Path(cfg.out)

    with output_lock(out_dir), audited(out_dir, "train") as audit:
        sources = {p.stem: p for p in resolve_sources(data)}
        cells = load_cells(data, cfg.workers)
        console.say(f"Loaded {len(cells)} cells from {data}")
        train_cells, test_cells = split_train_test(cells, cfg.n_train, cfg.seed)
        console.detail(f"Split: {len(train_cells)} train / {len(test_cells)} test (seed={cfg.seed})")
        for name, subset in (("train_manifest.txt", train_cells), ("test_manifest.txt", test_cells)):
            _record(audit, out_dir, write_manifest([sources[c.cell_id] for c in subset], out_dir / name))

        metrics = MetricsCollector()
        hs, decisions, rul = _train_both(cfg, train_cells, cfg.features, metrics, console)
        for d in decisions:
            if not d.triggered:
                audit.append(AuditEventType.CELL_UNTRIGGERED, cell_id=d.cell_id, split="train")

        meta = {"seed": cfg.seed, "p": cfg.p, "k": cfg.k, "step": cfg.step}
        _record(audit, out_dir, hs.save(out_dir / "hs.ckpt", meta))
        _record(audit, out_dir, rul.save(out_dir / "rul.ckpt", meta))
        _record(audit, out_dir, write_table(history_to_frame(hs.history), out_dir / "hs_history.csv"))
        _record(audit, out_dir, write_table(history_to_frame(rul.history), out_dir / "rul_history.csv"))
        _record(audit, out_dir, write_table(decisions_to_frame(decisions), out_dir / "fpc_decisions.csv"))
        _record(audit, out_dir, write_table(metrics_to_frame(metrics), out_dir / "training_metrics.csv"))
        untriggered = sum(1 for _ in audit.replay(AuditEventType.CELL_UNTRIGGERED))

    console.say(f"Checkpoints written to {out_dir}")
    console.detail(f"hs: best epoch {hs.history.best_epoch}, val BCE {_fmt(hs.history.best_val_loss)}")
    console.detail(f"rul: best epoch {rul.history.best_epoch}, val MAE {_fmt(rul.history.best_val_loss)}")
    if untriggered:
        console.detail(f"{untriggered} training cells never triggered and were left out of stage 2")
    return 0


def cmd_evaluate(args: argparse.Namespace, console: Console) -> int:
    """Evaluate both checkpoints on test cells; writes report, metrics CSV, curves and plots."""
    cfg = load_run_config(args.config, _overrides(
        args, test_data=args.data, hs_checkpoint=args.hs, rul_checkpoint=args.rul))
    paths = cfg.require("hs_checkpoint", "rul_checkpoint", "test_data")
    out_dir = Path(cfg.out)

    hs = HSModel.load(paths["hs_checkpoint"])
    rul = RULModel.load(paths["rul_checkpoint"])
    check_compatible(hs, rul)

    with output_lock(out_dir), audited(out_dir, "evaluate") as audit:
        cells = load_cells(paths["test_data"], cfg.workers)
        if not cells:
            raise DataError(ErrorCode.EMPTY_INPUT, "test set is empty", path=paths["test_data"])
        console.say(f"Evaluating {len(cells)} test cells")
        report = evaluate_fleet(rul, hs, cells, k=cfg.k, mape_floor=cfg.mape_floor, workers=cfg.workers)
        for cell_id in report.untriggered:
            audit.append(AuditEventType.CELL_UNTRIGGERED, cell_id=cell_id, split="test")
        for path in write_report(report, out_dir, plots=cfg.plots):
            _record(audit, out_dir, path)

    agg = report.aggregate
    console.say(f"Report written to {out_dir}")
    if agg is None:
        console.detail("No test cell triggered; no aggregate metrics")
    else:
        console.detail(f"MSE {_fmt(agg.mse)}  MAE {_fmt(agg.mae)}  MAPE {_fmt(agg.mape)}  "
                       f"({agg.n_cells} cells, {len(report.untriggered)} untriggered)")
    return 0


def cmd_ablate(args: argparse.Namespace, console: Console) -> int:
    """Train and evaluate once per feature count with a shared seed and split."""
    cfg = load_run_config(args.config, _overrides(args, data=args.data, ablate_counts=args.counts))
    data = cfg.require("data")["data"]
    out_dir = Path(cfg.out)

    with output_lock(out_dir), audited(out_dir, "ablate") as audit:
        cells = load_cells(data, cfg.workers)
        train_cells, test_cells = split_train_test(cells, cfg.n_train, cfg.seed)
        rows, summaries = [], []
        for count in cfg.ablate_counts:
            metrics = MetricsCollector()
            try:
                hs, _, rul = _train_both(cfg, train_cells, count, metrics, console)
            except DataError as exc:
                if exc.code is not ErrorCode.NO_TRIGGERED_CELLS:
                    raise
                summaries.append(metrics_to_frame(metrics, ("hs",)).assign(features=count))
                # row without metrics
                logger.warning("%d features: no training cell triggered", count)
                rows.append(_ablation_row(count, cfg.selection(count).channels, None, None, len(test_cells)))
                continue
            summaries.append(metrics_to_frame(metrics).assign(features=count))
            report = evaluate_fleet(rul, hs, test_cells, k=cfg.k, mape_floor=cfg.mape_floor,
                                    workers=cfg.workers)
            rows.append(_ablation_row(count, hs.selection.channels, report.aggregate,
                                      labeled_accuracy(hs, test_cells, cfg.p), len(report.untriggered)))
            console.detail(f"{count} features: MAE {_fmt(rows[-1]['mae'])}")
        table = pd.DataFrame(rows, columns=ABLATION_COLUMNS)
        _record(audit, out_dir, write_table(table, out_dir / "ablation.csv"))
        summary = pd.concat(summaries, ignore_index=True)[["features"] + SUMMARY_COLUMNS]
        _record(audit, out_dir, write_table(summary, out_dir / "training_metrics.csv"))

    if not console.quiet:
        print(table.to_string(index=False, float_format=lambda v: f"{v:.6g}"))
    return 0


def cmd_baseline(args: argparse.Namespace, console: Console) -> int:
    """
    Conventional scheme: forecast capacity over the last (1 - q) of each cell,
    then score it on the capacity scale and, through its EOL crossing, on the
    RUL-fraction scale. The rollout runs up to one extra lifetime past EOL.
    """
    cfg = load_run_config(args.config, _overrides(args, data=args.data, baseline_q=args.q))
    data = cfg.require("data")["data"]
    out_dir = Path(cfg.out)
    architecture = cfg.architecture(count=1)

    with output_lock(out_dir), audited(out_dir, "baseline") as audit:
        cells = sorted(load_cells(data, cfg.workers), key=lambda c: c.cell_id)
        console.say(f"Baseline forecasts for {len(cells)} cells (q={cfg.baseline_q})")
        results = []
        for cell in cells:
            try:
                split = baseline_split(cell, cfg.baseline_q, cfg.n_w)
                forecast = baseline_forecast(cell, split, cfg.train_config(), cfg.n_w, architecture,
                                              overrun=cell.eol)
            except PipelineError as exc:
                raise exc.with_context('cell_id', cell.cell_id)
            results.append(baseline_metrics(cell, split, forecast, cfg.mape_floor))
        _record(audit, out_dir, write_table(baseline_to_frame(results), out_dir / "baseline.csv"))

    if results:
        console.detail(f"capacity: mean MAE {_fmt(float(np.mean([r.metrics.mae for r in results])))} Ah")
        rul_mapes = [r.rul_metrics.mape for r in results if r.rul_metrics.mape is not None]
        console.detail(
            f"RUL fraction: mean MSE {_fmt(float(np.mean([r.rul_metrics.mse for r in results])))}  "
            f"MAE {_fmt(float(np.mean([r.rul_metrics.mae for r in results])))}  "
            f"MAPE {_fmt(float(np.mean(rul_mapes)) if rul_mapes else None)}  "
            f"({sum(r.eol_censored for r in results)} forecasts never reached EOL)"
        )
    return 0


def cmd_inspect(args: argparse.Namespace, console: Console) -> int:
    """Print a checkpoint header without loading the parameters into a model."""
    header, payload = read_header(args.checkpoint)
    spec = header.get("spec", {})
    print(f"[*] Checkpoint: {args.checkpoint}")
    print(f"    head={spec.get('head')} n_features={spec.get('n_features')} n_w={spec.get('n_w')}")
    print(f"    hidden_size={spec.get('hidden_size')} layers_per_stack={spec.get('layers_per_stack')} "
          f"n_stacks={spec.get('n_stacks')} dense_units={spec.get('dense_units')}")
    print(f"    selection={','.join(header.get('selection') or [])}")
    norm = header.get("normalization")
    if norm:
        for name, mean, std in zip(norm["channels"], norm["means"], norm["stds"]):
            print(f"    norm.{name}: mean={mean!r} std={std!r}")
    for key, value in sorted(header.get("metadata", {}).items()):
        print(f"    meta.{key}={value}")
    print(f"    params={header.get('param_count')} bytes={len(payload)} sha256={header.get('sha256')}")
    return 0


# =============================================================================
# ENTRY POINT
# =============================================================================

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value config file")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--out", help="output directory")
    common.add_argument("--features", type=int, help="feature count 1..7 (canonical order)")
    common.add_argument("--quiet", action="store_true", help="warnings and errors only")

    parser = argparse.ArgumentParser(prog="rul2stage", description="Two-stage early RUL prediction")
    sub = parser.add_subparsers(dest="command")

    sub.add_parser("generate", parents=[common], help="Generate a synthetic fleet")

    train = sub.add_parser("train", parents=[common], help="Train both stages")
    train.add_argument("--data", help="fleet manifest, directory or CSV")

    evaluate = sub.add_parser("evaluate", parents=[common], help="Evaluate checkpoints on test cells")
    evaluate.add_argument("--hs", help="health-state checkpoint")
    evaluate.add_argument("--rul", help="RUL checkpoint")
    evaluate.add_argument("--data", help="test manifest, directory or CSV")

    ablate = sub.add_parser("ablate", parents=[common], help="Feature-count ablation")
    ablate.add_argument("--data", help="fleet manifest, directory or CSV")
    ablate.add_argument("--counts", help="comma-separated feature counts, e.g. 1,2,3,4,7")

    baseline = sub.add_parser("baseline", parents=[common], help="Conventional-scheme capacity forecast")
    baseline.add_argument("--data", help="fleet manifest, directory or CSV")
    baseline.add_argument("--q", type=float, help="input share of each cell (default 0.4)")

    inspect = sub.add_parser("inspect", parents=[common], help="Print a checkpoint header")
    inspect.add_argument("checkpoint", help="checkpoint file")
    return parser


COMMANDS = {
    "generate": cmd_generate,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "ablate": cmd_ablate,
    "baseline": cmd_baseline,
    "inspect": cmd_inspect,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 2

    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )
    console = Console(quiet=args.quiet)
    try:
        return COMMANDS[args.command](args, console)
    except PipelineError as exc:
        print(f"[ERROR] {exc.error.describe()}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"[ERROR] {exc}", file=sys.stderr)
        return DataError.exit_code


if __name__ == "__main__":
    sys.exit(main())

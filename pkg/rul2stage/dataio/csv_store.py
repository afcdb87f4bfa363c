"""
Cell CSV Store

One CSV file per cell plus a plain-text fleet manifest.

FORMAT:
=======
- Header: cycle_index,discharge_capacity,charge_capacity,internal_resistance,
  temp_avg,temp_min,temp_max,charge_time (matched by name, not position)
- One row per cycle, UTF-8, '.' decimal separator, no thousands separators
- Floats written with 17 significant digits so save -> load is bit-exact
- Manifest: one relative path per line, '#' starts a comment
"""

from __future__ import annotations
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union
import logging
import os

import numpy as np
import pandas as pd

from ..contracts.base import DataError, ErrorCode
from ..contracts.data_contracts import CSV_COLUMNS, CellHistory, CycleRecord

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.txt"
FLOAT_FORMAT = "%.17g"

_NON_FINITE_LITERALS = {"nan", "-nan", "+nan", "inf", "-inf", "+inf",
                        "infinity", "-infinity", "+infinity"}


# =============================================================================
# MANIFEST
# =============================================================================

def read_manifest(path: Union[str, Path]) -> List[Path]:
    """Return the cell files listed in a manifest, resolved against its directory."""
    path = Path(path)
    if not path.is_file():
        raise DataError(ErrorCode.FILE_NOT_FOUND, "manifest not found", file=path)
    entries = []
    for line in path.read_text(encoding='utf-8').splitlines():
        line = line.split('#', 1)[0].strip()
        if line:
            entries.append(path.parent / line)
    return entries


def write_manifest(paths: Iterable[Union[str, Path]], manifest_path: Union[str, Path]) -> Path:
    """Write a manifest listing `paths` relative to the manifest's directory."""
    manifest_path = Path(manifest_path)
    base = manifest_path.parent.resolve()
    lines = []
    for p in paths:
        p = Path(p).resolve()
        try:
            lines.append(Path(os.path.relpath(p, base)).as_posix())
        except ValueError:
            # different drive
            lines.append(p.as_posix())
    manifest_path.write_text("".join(f"{line}\n" for line in lines), encoding='utf-8')
    return manifest_path


def resolve_sources(path: Union[str, Path]) -> List[Path]:
    """Cell files behind a manifest, a directory or a single CSV, in load order."""
    path = Path(path)
    if path.is_dir():
        manifest = path / MANIFEST_NAME
        if manifest.is_file():
            return read_manifest(manifest)
        return sorted(path.glob("*.csv"))
    if path.suffix.lower() == ".csv":
        return [path]
    return read_manifest(path)


# =============================================================================
# LOADING
# =============================================================================

def _parse_column(raw: pd.Series, column: str, path: Path) -> np.ndarray:
    text = raw.str.strip()
    parsed = pd.to_numeric(text, errors='coerce')
    literal = text.str.lower().isin(_NON_FINITE_LITERALS)
    bad = parsed.isna() & ~literal
    if bad.any():
        row = int(np.flatnonzero(bad.to_numpy())[0])
        raise DataError(
            ErrorCode.MALFORMED_ROW,
            f"cannot parse {column}={raw.iloc[row]!r}",
            file=path, line=row + 2,
        )
    # astype goes through float() per element, which is correctly rounded
    values = text.astype(np.float64).to_numpy()
    non_finite = ~np.isfinite(values)
    if non_finite.any():
        row = int(np.flatnonzero(non_finite)[0])
        raise DataError(
            ErrorCode.NON_FINITE_VALUE,
            f"{column} is not finite",
            file=path, line=row + 2,
        )
    return values


def read_cell_csv(path: Union[str, Path]) -> CellHistory:
    """Parse and validate one cell file; the cell_id is the file stem."""
    path = Path(path)
    if not path.is_file():
        raise DataError(ErrorCode.FILE_NOT_FOUND, "cell file not found", file=path)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding='utf-8')
    except pd.errors.EmptyDataError:
        raise DataError(ErrorCode.EMPTY_INPUT, "file is empty", file=path)
    except pd.errors.ParserError as exc:
        raise DataError(ErrorCode.MALFORMED_ROW, str(exc).strip(), file=path)

    missing = [c for c in CSV_COLUMNS if c not in frame.columns]
    if missing:
        raise DataError(ErrorCode.MISSING_COLUMN, "required column missing", file=path, column=missing[0])
    if frame.empty:
        raise DataError(ErrorCode.EMPTY_INPUT, "file has a header but no rows", file=path)

    columns = {c: _parse_column(frame[c], c, path) for c in CSV_COLUMNS}

    cycles = columns['cycle_index']
    fractional = (cycles != np.floor(cycles)) | (cycles < 1)
    if fractional.any():
        row = int(np.flatnonzero(fractional)[0])
        raise DataError(ErrorCode.MALFORMED_ROW, "cycle_index must be a positive integer",
                        file=path, line=row + 2)

    order = np.argsort(cycles, kind='stable')
    sorted_cycles = cycles[order].astype(np.int64)
    for position, (row, cycle) in enumerate(zip(order, sorted_cycles), start=1):
        if cycle != position:
            previous = int(sorted_cycles[position - 2]) if position > 1 else 0
            detail = "duplicate" if cycle == previous else f"jumps {previous}->{cycle}"
            raise DataError(ErrorCode.CYCLE_GAP, f"cycle_index {detail}",
                            file=path, line=int(row) + 2)

    records = []
    for row in order:
        try:
            records.append(CycleRecord(
                cycle_index=int(cycles[row]),
                **{c: float(columns[c][row]) for c in CSV_COLUMNS if c != 'cycle_index'}
            ))
        except DataError as exc:
            raise exc.with_context('file', path).with_context('line', int(row) + 2)
    return CellHistory(cell_id=path.stem, records=tuple(records))


def load_cells(path: Union[str, Path], workers: Optional[int] = None) -> List[CellHistory]:
    """
    Load a fleet from a manifest, a directory, or a single CSV file.

    Files are parsed in parallel; results keep manifest order.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(ErrorCode.FILE_NOT_FOUND, "data path does not exist", path=path)
    sources = resolve_sources(path)
    if not sources:
        return []
    with ThreadPoolExecutor(max_workers=workers) as pool:
        cells = list(pool.map(read_cell_csv, sources))
    seen = set()
    for cell in cells:
        if cell.cell_id in seen:
            raise DataError(ErrorCode.RECORD_INVARIANT, "duplicate cell_id in fleet", cell_id=cell.cell_id)
        seen.add(cell.cell_id)
    logger.info("Loaded %d cells from %s", len(cells), path)
    return cells


# =============================================================================
# SAVING
# =============================================================================

def cell_to_frame(cell: CellHistory) -> pd.DataFrame:
    frame = pd.DataFrame({
        c: [r.cycle_index for r in cell.records] if c == 'cycle_index' else cell.channel(c)
        for c in CSV_COLUMNS
    })
    return frame[list(CSV_COLUMNS)]


def save_cells(cells: Sequence[CellHistory], directory: Union[str, Path]) -> Path:
    """Write one `<cell_id>.csv` per cell plus `manifest.txt`; returns the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for cell in cells:
        target = directory / f"{cell.cell_id}.csv"
        cell_to_frame(cell).to_csv(target, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        paths.append(target)
    manifest = write_manifest(paths, directory / MANIFEST_NAME)
    logger.info("Wrote %d cells to %s", len(paths), directory)
    return manifest

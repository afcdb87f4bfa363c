"""
Checkpoint Files

FORMAT (version 1):
===================
    RUL2STAGE-CKPT 1\n
    <8-byte little-endian header length>
    <UTF-8 JSON header: spec, selection, normalization, metadata,
     parameter layout, SHA-256 of the parameter bytes>
    <parameters as float64 little-endian, in Network parameter order>

The header is written with sorted keys and no timestamps, so the same
model always produces the same bytes.
"""

from __future__ import annotations
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Tuple, Union
import hashlib
import json

import numpy as np

from ..contracts.base import DataError, ErrorCode, PipelineError
from ..contracts.data_contracts import FeatureSelection, NormalizationStats
from ..contracts.model_contracts import ModelSpec
from .network import Params, param_shapes

MAGIC = b"RUL2STAGE-CKPT"
FORMAT_VERSION = 1
_LE_FLOAT = np.dtype('<f8')


@dataclass(frozen=True, eq=False)
class Checkpoint:
    spec: ModelSpec
    params: Params
    selection: Optional[FeatureSelection] = None
    stats: Optional[NormalizationStats] = None
    metadata: Tuple[Tuple[str, str], ...] = field(default_factory=tuple)

    def meta(self) -> Dict[str, str]:
        return dict(self.metadata)


def _param_bytes(spec: ModelSpec, params: Params) -> bytes:
    return b"".join(
        np.ascontiguousarray(params[name], dtype=_LE_FLOAT).tobytes()
        for name in param_shapes(spec)
    )


def _header(ckpt: Checkpoint, payload: bytes) -> Dict[str, object]:
    stats = None
    if ckpt.stats is not None:
        stats = {"channels": list(ckpt.stats.channels),
                 "means": list(ckpt.stats.means),
                 "stds": list(ckpt.stats.stds)}
    return {
        "spec": ckpt.spec.describe(),
        "selection": list(ckpt.selection.channels) if ckpt.selection is not None else None,
        "normalization": stats,
        "metadata": dict(ckpt.metadata),
        "layout": [[name, list(shape)] for name, shape in param_shapes(ckpt.spec).items()],
        "param_count": len(payload) // _LE_FLOAT.itemsize,
        "sha256": hashlib.sha256(payload).hexdigest(),
    }


def save_checkpoint(
    path: Union[str, Path],
    spec: ModelSpec,
    params: Params,
    selection: Optional[FeatureSelection] = None,
    stats: Optional[NormalizationStats] = None,
    metadata: Optional[Mapping[str, object]] = None,
) -> Path:
    path = Path(path)
    ckpt = Checkpoint(
        spec=spec, params=params, selection=selection, stats=stats,
        metadata=tuple(sorted((str(k), str(v)) for k, v in (metadata or {}).items())),
    )
    payload = _param_bytes(spec, params)
    header = json.dumps(_header(ckpt, payload), sort_keys=True).encode('utf-8')
    with open(path, 'wb') as f:
        f.write(MAGIC + b" " + str(FORMAT_VERSION).encode('ascii') + b"\n")
        f.write(len(header).to_bytes(8, 'little'))
        f.write(header)
        f.write(payload)
    return path


def _corrupt(path: Path, message: str) -> DataError:
    return DataError(ErrorCode.CHECKPOINT_CORRUPT, message, file=path)


def read_header(path: Union[str, Path]) -> Tuple[Dict[str, object], bytes]:
    """Validate framing and return (header, raw parameter bytes)."""
    path = Path(path)
    if not path.is_file():
        raise DataError(ErrorCode.FILE_NOT_FOUND, "checkpoint not found", file=path)
    blob = path.read_bytes()
    first_line, sep, rest = blob.partition(b"\n")
    parts = first_line.split(b" ")
    if not sep or len(parts) != 2 or parts[0] != MAGIC:
        raise _corrupt(path, "not a checkpoint file")
    try:
        version = int(parts[1])
    except ValueError:
        raise _corrupt(path, "unreadable format version")
    if version != FORMAT_VERSION:
        raise DataError(ErrorCode.CHECKPOINT_VERSION,
                        f"format version {version}, this build reads {FORMAT_VERSION}", file=path)
    if len(rest) < 8:
        raise _corrupt(path, "truncated before header")
    size = int.from_bytes(rest[:8], 'little')
    if len(rest) < 8 + size:
        raise _corrupt(path, "truncated header")
    try:
        header = json.loads(rest[8:8 + size].decode('utf-8'))
    except (UnicodeDecodeError, json.JSONDecodeError):
        raise _corrupt(path, "unreadable header")
    return header, rest[8 + size:]


@dataclass(frozen=True)
class _HeaderFields:
    spec: ModelSpec
    expected_bytes: int
    digest: str
    layout: List[Tuple[str, Tuple[int, ...]]]
    selection: Optional[FeatureSelection]
    stats: Optional[NormalizationStats]
    metadata: Tuple[Tuple[str, str], ...]


def _parse_header(header: Dict[str, object]) -> _HeaderFields:
    """Raises KeyError/TypeError/ValueError/AttributeError or a PipelineError on a bad header."""
    selection = None
    if header["selection"] is not None:
        selection = FeatureSelection(channels=tuple(header["selection"]))
    stats = None
    norm = header["normalization"]
    if norm is not None:
        stats = NormalizationStats(
            channels=tuple(norm["channels"]),
            means=tuple(float(m) for m in norm["means"]),
            stds=tuple(float(s) for s in norm["stds"]),
        )
    return _HeaderFields(
        spec=ModelSpec.from_descriptor(header["spec"]),
        expected_bytes=int(header["param_count"]) * _LE_FLOAT.itemsize,
        digest=str(header["sha256"]),
        layout=[(name, tuple(shape)) for name, shape in header["layout"]],
        selection=selection,
        stats=stats,
        metadata=tuple(sorted((str(k), str(v)) for k, v in header.get("metadata", {}).items())),
    )


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    path = Path(path)
    header, payload = read_header(path)
    try:
        fields = _parse_header(header)
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise _corrupt(path, f"header field missing or malformed: {exc!r}")
    except PipelineError as exc:
        raise _corrupt(path, f"header holds an invalid value: {exc.error.message}").with_context(
            "cause", exc.code.name)

    if len(payload) != fields.expected_bytes:
        raise _corrupt(path, f"expected {fields.expected_bytes} parameter bytes, found {len(payload)}")
    if hashlib.sha256(payload).hexdigest() != fields.digest:
        raise _corrupt(path, "parameter digest mismatch")
    shapes = param_shapes(fields.spec)
    if fields.layout != list(shapes.items()):
        raise _corrupt(path, "parameter layout does not match the model spec")

    flat = np.frombuffer(payload, dtype=_LE_FLOAT).astype(np.float64)
    params: Params = {}
    offset = 0
    for name, shape in shapes.items():
        size = int(np.prod(shape))
        params[name] = flat[offset:offset + size].reshape(shape).copy()
        offset += size

    return Checkpoint(
        spec=fields.spec, params=params, selection=fields.selection, stats=fields.stats,
        metadata=fields.metadata,
    )

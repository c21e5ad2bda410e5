# src/ksdk/store.py
# Persistence: binary field snapshots, trajectory export, particle dumps, report files.
# Writers are deterministic: sorted keys, repr floats, no timestamps.

from __future__ import annotations

import csv
import json
import math
import os
import struct
from typing import Any, Dict, Iterable, List, Sequence

import numpy as np

from ksdk.deterministic import Trajectory
from ksdk.errors import InputError
from ksdk.fields import FourierField

MAGIC = b"KSDK"
FORMAT_VERSION = 1
# magic, version u16, M u16, components u16, is_real u8, 5 pad bytes
_HEADER = struct.Struct("<4sHHHB5x")
HEADER_SIZE = _HEADER.size  # 16


# =========================
# Snapshots
# =========================

def encode_snapshot(f: FourierField) -> bytes:
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, f.resolution, f.components, int(f.is_real))
    return header + np.ascontiguousarray(f.coeffs, dtype="<c16").tobytes()


def decode_snapshot(data: bytes) -> FourierField:
    if len(data) < HEADER_SIZE:
        raise InputError(f"snapshot too short: {len(data)} bytes")
    magic, version, M, components, is_real = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise InputError(f"not a field snapshot (magic {magic!r})")
    if version != FORMAT_VERSION:
        raise InputError(f"unsupported snapshot version {version}")
    n = 2 * M + 1
    expected = HEADER_SIZE + components * n * n * 16
    if len(data) != expected:
        raise InputError(f"snapshot body has {len(data) - HEADER_SIZE} bytes, expected {expected - HEADER_SIZE}")
    coeffs = np.frombuffer(data, dtype="<c16", offset=HEADER_SIZE).reshape(components, n, n)
    return FourierField(coeffs.astype(np.complex128), is_real=bool(is_real))


def write_snapshot(path: str, f: FourierField) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_snapshot(f))


def read_snapshot(path: str) -> FourierField:
    with open(path, "rb") as fh:
        return decode_snapshot(fh.read())


# =========================
# Trajectories
# =========================

def export_trajectory(traj: Trajectory, out_dir: str, stride: int = 1) -> str:
    """meta.jsonl (header record first, then one record per stored field) + one .bin per field."""
    assert stride >= 1, "stride must be >= 1"
    os.makedirs(out_dir, exist_ok=True)
    picked = list(range(0, len(traj.steps), stride))
    if picked and picked[-1] != len(traj.steps) - 1:
        picked.append(len(traj.steps) - 1)
    header = {
        "_trajectory_header": {
            "format_version": FORMAT_VERSION,
            "dt": traj.dt,
            "resolution": traj.fields[0].resolution if traj.fields else None,
            "blew_up_at": traj.blew_up_at,
            "n_records": len(picked),
        }
    }
    meta_path = os.path.join(out_dir, "meta.jsonl")
    with open(meta_path, "w", encoding="utf-8") as f:
        f.write(json.dumps(header, sort_keys=True) + "\n")
        for i in picked:
            step = traj.steps[i]
            name = f"field_{step:08d}.bin"
            write_snapshot(os.path.join(out_dir, name), traj.fields[i])
            record = {"step": step, "t": traj.times[i], "file": name, "min_value": traj.min_value_path[i]}
            f.write(json.dumps(record, sort_keys=True) + "\n")
    if traj.diagnostics:
        write_series_csv(os.path.join(out_dir, "diagnostics.csv"), traj.diagnostics)
    return meta_path


def load_trajectory(path: str) -> Trajectory:
    meta_path = os.path.join(path, "meta.jsonl")
    assert os.path.exists(meta_path), "meta.jsonl missing"
    with open(meta_path, "r", encoding="utf-8") as f:
        records = [json.loads(line) for line in f if line.strip()]
    assert records, "no metadata found"
    header = records[0].get("_trajectory_header")
    assert header, "missing _trajectory_header in first record"
    if header["format_version"] != FORMAT_VERSION:
        raise InputError(f"unsupported trajectory format {header['format_version']}")
    traj = Trajectory(dt=header["dt"])
    for rec in records[1:]:
        traj.record(rec["step"], read_snapshot(os.path.join(path, rec["file"])))
    traj.blew_up_at = header["blew_up_at"]
    return traj


def write_series_csv(path: str, series: Dict[str, Sequence[float]]) -> None:
    """Column-aligned series (shorter columns padded with blanks)."""
    keys = list(series)
    length = max((len(v) for v in series.values()), default=0)
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(keys)
        for i in range(length):
            w.writerow([_fmt(series[k][i]) if i < len(series[k]) else "" for k in keys])


# =========================
# Particles
# =========================

def write_particles_csv(path: str, states: Iterable[Any], stride: int = 1) -> None:
    """Position dump with columns t, i, x1, x2."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["t", "i", "x1", "x2"])
        for k, state in enumerate(states):
            if k % stride:
                continue
            for i, (x1, x2) in enumerate(state.positions):
                w.writerow([_fmt(state.t), i, _fmt(x1), _fmt(x2)])


# =========================
# Reports
# =========================

def _fmt(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return "nan" if math.isnan(v) else repr(v)
    return str(value)


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return None if math.isnan(v) or math.isinf(v) else v
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


class RunDirectory:
    """ReportWriter rooted at one output directory."""

    def __init__(self, root: str):
        self.root = root
        os.makedirs(root, exist_ok=True)

    def path(self, name: str) -> str:
        return os.path.join(self.root, name)

    def write_json(self, name: str, payload: Dict[str, Any]) -> str:
        p = self.path(name)
        with open(p, "w", encoding="utf-8") as f:
            json.dump(_jsonable(payload), f, sort_keys=True, indent=2, ensure_ascii=False)
            f.write("\n")
        return p

    def write_csv(self, name: str, rows: List[Dict[str, Any]]) -> str:
        p = self.path(name)
        columns: List[str] = []
        for row in rows:
            columns.extend(k for k in row if k not in columns)
        with open(p, "w", encoding="utf-8", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(columns)
            for row in rows:
                w.writerow([_fmt(row.get(c)) for c in columns])
        return p

    def write_text(self, name: str, text: str) -> str:
        p = self.path(name)
        with open(p, "w", encoding="utf-8") as f:
            f.write(text if text.endswith("\n") else text + "\n")
        return p

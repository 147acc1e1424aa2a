"""Raw sample streams and their CSV encoding.

Canonical file layout::

    packet_index,t,ax1,ay1,az1,ax2,ay2,az2,gx,gy,gz
    count,s,m/s^2,m/s^2,m/s^2,m/s^2,m/s^2,m/s^2,rad/s,rad/s,rad/s
    0,0,0.01,...

Columns ``*1`` hold the primary (low-noise) accelerometer, ``*2`` the
secondary one, ``g*`` the gyroscope.  The second line declares units.
Missing packet indices are kept as gaps.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import StreamFormatError

HEADER = ("packet_index", "t", "ax1", "ay1", "az1", "ax2", "ay2", "az2", "gx", "gy", "gz")
ACCEL_UNITS = ("m/s^2", "g", "LSB")
GYRO_UNITS = ("rad/s", "deg/s", "LSB")
DEFAULT_UNITS = ("count", "s") + ("m/s^2",) * 6 + ("rad/s",) * 3
FLOAT_FORMAT = "%.12g"


class Record(NamedTuple):
    packet_index: int
    timestamp: float
    accel: np.ndarray
    gyro: np.ndarray


@dataclass
class SampleStream:
    packet_index: np.ndarray
    t: np.ndarray
    accel: np.ndarray
    gyro: np.ndarray
    sample_rate: float
    accel2: np.ndarray | None = None
    units: tuple = DEFAULT_UNITS
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.packet_index = np.asarray(self.packet_index, dtype=np.int64)
        self.t = np.asarray(self.t, dtype=float)
        self.accel = np.asarray(self.accel, dtype=float).reshape(-1, 3)
        self.gyro = np.asarray(self.gyro, dtype=float).reshape(-1, 3)
        if self.accel2 is None:
            self.accel2 = self.accel.copy()
        self.accel2 = np.asarray(self.accel2, dtype=float).reshape(-1, 3)
        n = len(self.packet_index)
        if not (len(self.t) == len(self.accel) == len(self.accel2) == len(self.gyro) == n):
            raise StreamFormatError("stream columns have different lengths")
        if self.sample_rate <= 0:
            raise StreamFormatError("sample rate must be positive")
        if n and (np.any(np.diff(self.packet_index) <= 0) or self.packet_index[0] < 0):
            raise StreamFormatError("packet indices must be non-negative and strictly increasing")

    def __len__(self) -> int:
        return len(self.packet_index)

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate

    def record(self, i: int, accel_source: str = "primary") -> Record:
        return Record(int(self.packet_index[i]), float(self.t[i]),
                      self.accel_for(accel_source)[i], self.gyro[i])

    def accel_for(self, source: str = "primary") -> np.ndarray:
        if source == "primary":
            return self.accel
        if source == "secondary":
            return self.accel2
        raise ValueError(f"unknown accelerometer source {source!r}")

    def slice(self, start: int | None = None, stop: int | None = None) -> "SampleStream":
        s = np.s_[start:stop]
        return SampleStream(self.packet_index[s], self.t[s], self.accel[s], self.gyro[s],
                            self.sample_rate, self.accel2[s], self.units, dict(self.metadata))

    def gaps(self) -> np.ndarray:
        """Packet indices missing between the first and last record."""
        if len(self) == 0:
            return np.zeros(0, dtype=np.int64)
        full = np.arange(self.packet_index[0], self.packet_index[-1] + 1)
        return np.setdiff1d(full, self.packet_index)


def write_stream(stream: SampleStream, path_or_file) -> None:
    body = np.column_stack([stream.t, stream.accel, stream.accel2, stream.gyro])
    buf = io.StringIO()
    buf.write(",".join(HEADER) + "\n")
    buf.write(",".join(stream.units) + "\n")
    for idx, row in zip(stream.packet_index.tolist(), body):
        buf.write(str(idx) + "," + ",".join(FLOAT_FORMAT % v for v in row) + "\n")
    _write_text(path_or_file, buf.getvalue())


def read_stream(path_or_file, sample_rate: float | None = None) -> SampleStream:
    """Parse a stream file; the sample rate is inferred from timestamps unless given."""
    lines = _read_text(path_or_file).splitlines()
    if len(lines) < 2:
        raise StreamFormatError("missing header lines")
    header = tuple(c.strip() for c in lines[0].split(","))
    if header != HEADER:
        raise StreamFormatError(f"line 1: header does not match {','.join(HEADER)}")
    units = tuple(c.strip() for c in lines[1].split(","))
    _check_units(units)
    rows = []
    for lineno, line in enumerate(lines[2:], start=3):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != len(HEADER):
            raise StreamFormatError(f"line {lineno}: expected {len(HEADER)} fields, got {len(parts)}")
        try:
            idx = int(parts[0])
            vals = [float(p) for p in parts[1:]]
        except ValueError as exc:
            raise StreamFormatError(f"line {lineno}: {exc}") from None
        if not np.all(np.isfinite(vals)):
            raise StreamFormatError(f"line {lineno}: non-finite value")
        if rows and idx <= rows[-1][0]:
            raise StreamFormatError(f"line {lineno}: packet index {idx} is not increasing")
        rows.append((idx, vals))
    if not rows:
        raise StreamFormatError("stream has no records")
    index = np.array([r[0] for r in rows], dtype=np.int64)
    data = np.array([r[1] for r in rows], dtype=float)
    if sample_rate is None:
        sample_rate = _infer_rate(index, data[:, 0])
    return SampleStream(index, data[:, 0], data[:, 1:4], data[:, 7:10], sample_rate,
                        accel2=data[:, 4:7], units=units)


def _check_units(units):
    if len(units) != len(HEADER):
        raise StreamFormatError("line 2: unit header has wrong number of fields")
    if units[1] != "s":
        raise StreamFormatError("line 2: timestamps must be in seconds")
    for group, allowed in ((units[2:5], ACCEL_UNITS), (units[5:8], ACCEL_UNITS), (units[8:11], GYRO_UNITS)):
        if len(set(group)) != 1 or group[0] not in allowed:
            raise StreamFormatError(f"line 2: unit mismatch in {group}")


def _infer_rate(index, t):
    if len(index) < 2:
        raise StreamFormatError("cannot infer sample rate from a single record")
    span = (t[-1] - t[0]) / (index[-1] - index[0])
    if span <= 0:
        raise StreamFormatError("timestamps do not increase")
    return float(np.round(1.0 / span, 6))


def _read_text(path_or_file) -> str:
    if hasattr(path_or_file, "read"):
        return path_or_file.read()
    return Path(path_or_file).read_text()


def _write_text(path_or_file, text: str) -> None:
    if hasattr(path_or_file, "write"):
        path_or_file.write(text)
    else:
        Path(path_or_file).write_text(text)

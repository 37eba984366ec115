"""PGM image I/O plus the delimited outputs of a run.

Only the two portable graymap flavors are accepted (P2 text, P5 binary),
with `#` comments allowed in the header, 16-bit binary samples big-endian,
and hard errors on anything outside the grammar: wrong magic, missing or
extra samples, samples above maxval, truncated payloads.  Guessing what a
malformed file meant is how quiet data corruption starts.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import PgmParseError
from .laser import OCCLUDED, ConflictEvent, GroundTruth
from .pipeline import DisparityMap, EntropyMap, RunMetrics

_WHITESPACE = b" \t\r\n\x0b\x0c"

METRICS_HEADER = ["aim", "column", "total_entropy_nats", "pixels_err_gt1"]
CONFLICT_HEADER = ["row", "aim_index", "existing_q", "existing_g", "new_q", "new_g"]


@dataclass(frozen=True)
class GrayImage:
    """Decoded graymap: samples is (height, width) uint16, values <= maxval."""

    samples: np.ndarray
    maxval: int

    @property
    def width(self) -> int:
        return int(self.samples.shape[1])

    @property
    def height(self) -> int:
        return int(self.samples.shape[0])


def _next_token(data: bytes, pos: int, what: str) -> tuple[bytes, int]:
    """Scan past whitespace and comments to the next header token."""
    length = len(data)
    while pos < length:
        byte = data[pos : pos + 1]
        if byte == b"#":
            while pos < length and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif byte in (b" ", b"\t", b"\r", b"\n", b"\x0b", b"\x0c"):
            pos += 1
        else:
            break
    if pos >= length:
        raise PgmParseError(f"unexpected end of file while reading {what}")
    start = pos
    while pos < length:
        byte = data[pos : pos + 1]
        if byte in (b" ", b"\t", b"\r", b"\n", b"\x0b", b"\x0c", b"#"):
            break
        pos += 1
    return data[start:pos], pos


def _header_int(data: bytes, pos: int, what: str, low: int, high: int) -> tuple[int, int]:
    token, pos = _next_token(data, pos, what)
    if not token.isdigit():
        raise PgmParseError(f"{what} must be a decimal integer, got {token!r}")
    value = int(token)
    if not low <= value <= high:
        raise PgmParseError(f"{what} {value} outside {low}..{high}")
    return value, pos


def read_pgm(path: str | Path) -> GrayImage:
    data = Path(path).read_bytes()
    magic, pos = _next_token(data, 0, "magic number")
    if magic not in (b"P2", b"P5"):
        raise PgmParseError(f"unsupported magic {magic!r}; only P2/P5 graymaps are read")
    width, pos = _header_int(data, pos, "width", 1, 1 << 30)
    height, pos = _header_int(data, pos, "height", 1, 1 << 30)
    maxval, pos = _header_int(data, pos, "maxval", 1, 65535)
    count = width * height
    if magic == b"P5":
        if pos >= len(data) or data[pos : pos + 1] not in _split_bytes(_WHITESPACE):
            raise PgmParseError("P5 header must end with a single whitespace byte")
        pos += 1
        payload = data[pos:]
        itemsize = 2 if maxval > 255 else 1
        expected = count * itemsize
        if len(payload) != expected:
            raise PgmParseError(
                f"P5 payload holds {len(payload)} bytes, expected exactly {expected}"
            )
        dtype = np.dtype(">u2") if itemsize == 2 else np.dtype("u1")
        samples = np.frombuffer(payload, dtype=dtype).astype(np.uint16)
    else:
        samples = np.empty(count, dtype=np.uint16)
        for k in range(count):
            value, pos = _header_int(data, pos, f"sample {k}", 0, 65535)
            samples[k] = value
        tail, _ = _trailing(data, pos)
        if tail:
            raise PgmParseError(f"trailing data after the last sample: {tail!r}")
    if int(samples.max(initial=0)) > maxval:
        raise PgmParseError(
            f"sample value {int(samples.max())} exceeds the declared maxval {maxval}"
        )
    return GrayImage(samples.reshape(height, width), maxval)


def _split_bytes(raw: bytes) -> tuple[bytes, ...]:
    return tuple(raw[k : k + 1] for k in range(len(raw)))


def _trailing(data: bytes, pos: int) -> tuple[bytes, int]:
    """Whatever follows after skipping whitespace and comments (b'' if clean)."""
    length = len(data)
    while pos < length:
        byte = data[pos : pos + 1]
        if byte == b"#":
            while pos < length and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif byte in _split_bytes(_WHITESPACE):
            pos += 1
        else:
            return data[pos:], pos
    return b"", pos


def write_pgm(path: str | Path, samples: np.ndarray, maxval: int = 255) -> None:
    """Write a (height, width) integer array as binary P5."""
    samples = np.asarray(samples)
    if samples.ndim != 2:
        raise ValueError(f"need a 2-d array, got shape {samples.shape}")
    if not 1 <= maxval <= 65535:
        raise ValueError(f"maxval {maxval} outside 1..65535")
    if samples.min(initial=0) < 0 or samples.max(initial=0) > maxval:
        raise ValueError("sample values fall outside 0..maxval")
    header = f"P5\n{samples.shape[1]} {samples.shape[0]}\n{maxval}\n".encode("ascii")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    Path(path).write_bytes(header + samples.astype(dtype).tobytes())


def read_ground_truth(
    path: str | Path, scale: float = 1.0, sentinel: int | None = None
) -> GroundTruth:
    """Load a disparity reference stored as a graymap.

    Stored values divide by `scale` (round half up) to give disparities;
    pixels equal to `sentinel` (before scaling) become occlusions.
    """
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    img = read_pgm(path)
    raw = img.samples.astype(np.float64)
    disp = np.floor(raw / scale + 0.5).astype(np.int32)
    if sentinel is not None:
        disp[img.samples == sentinel] = OCCLUDED
    return GroundTruth(disp)


def write_disparity_pgm(path: str | Path, dmap: DisparityMap) -> None:
    """Render a disparity map to an 8-bit graymap, occlusions black."""
    top = max(dmap.num_disparities - 1, 1)
    scaled = np.floor(dmap.values.astype(np.float64) * 255.0 / top + 0.5)
    scaled = np.clip(scaled, 0, 255).astype(np.uint16)
    scaled[dmap.occluded] = 0
    write_pgm(path, scaled, 255)


def write_entropy_pgm(path: str | Path, emap: EntropyMap) -> None:
    """Render per-pixel entropy to an 8-bit graymap, bright = uncertain."""
    top = float(emap.values.max())
    if top <= 0.0:
        scaled = np.zeros_like(emap.values, dtype=np.uint16)
    else:
        scaled = np.floor(emap.values * 255.0 / top + 0.5)
        scaled = np.clip(scaled, 0, 255).astype(np.uint16)
    write_pgm(path, scaled, 255)


def write_metrics_csv(path: str | Path, metrics: RunMetrics) -> None:
    """One row per aim: aim number, queried column, entropy, pixel errors.

    Floats keep 12 significant digits so reruns can be compared exactly
    enough; fields without a value (baseline column, no ground truth) stay
    empty.
    """
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(METRICS_HEADER)
        for rec in metrics.records:
            writer.writerow(
                [
                    rec.aim_index,
                    "" if rec.column is None else rec.column,
                    f"{rec.total_entropy:.12g}",
                    "" if rec.pixel_errors is None else rec.pixel_errors,
                ]
            )


def write_conflict_csv(path: str | Path, conflicts: list[ConflictEvent]) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(CONFLICT_HEADER)
        for event in conflicts:
            writer.writerow(
                [
                    event.row,
                    event.aim_index,
                    event.existing_col,
                    event.existing_disp,
                    event.new_col,
                    event.new_disp,
                ]
            )

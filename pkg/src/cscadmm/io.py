"""Image ingestion and export of traces, filter banks and benchmark tables."""

import csv
import math
from pathlib import Path

import numpy as np
from PIL import Image

from .csc import IterationTrace, TraceRecord
from .exceptions import FormatError
from .fourier import FilterBank

TRACE_HEADER = ("iter", "fidelity", "l1", "objective", "constraint_error", "nu", "seconds")
BENCH_HEADER = (
    "kernel", "K", "P", "n", "repetitions",
    "median_seconds", "mean_seconds", "stddev_seconds", "model_flops",
)
FILTER_DATA = "filters.f64"
FILTER_HEADER = "filters.hdr"
FILTER_MOSAIC = "filters_mosaic.pgm"


def _fmt(v):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return f"{v:.12g}"


# -- images -----------------------------------------------------------------

def _read_token(buf, pos):
    """Next whitespace-delimited header token of a PNM file, skipping comments."""
    n = len(buf)
    while pos < n:
        c = buf[pos:pos + 1]
        if c == b"#":
            while pos < n and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not buf[pos:pos + 1].isspace() and buf[pos:pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise FormatError("truncated PGM header")
    return buf[start:pos], pos


def read_pgm(path):
    """Parse a binary (P5) PGM; return ``(pixels, maxval)``."""
    buf = Path(path).read_bytes()
    magic, pos = _read_token(buf, 0)
    if magic != b"P5":
        raise FormatError(f"{path}: expected binary greyscale PGM magic 'P5', got {magic!r}")
    fields = []
    for _ in range(3):
        tok, pos = _read_token(buf, pos)
        try:
            fields.append(int(tok))
        except ValueError:
            raise FormatError(f"{path}: non-integer PGM header field {tok!r}") from None
    width, height, maxval = fields
    if width <= 0 or height <= 0:
        raise FormatError(f"{path}: invalid PGM size {width}x{height}")
    if not 0 < maxval < 65536:
        raise FormatError(f"{path}: PGM maxval {maxval} outside 1..65535")
    pos += 1  # single whitespace byte after maxval
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    count = width * height
    data = buf[pos:pos + count * dtype.itemsize]
    if len(data) != count * dtype.itemsize:
        raise FormatError(
            f"{path}: PGM raster holds {len(data)} bytes, expected {count * dtype.itemsize}"
        )
    return np.frombuffer(data, dtype=dtype).reshape(height, width), maxval


def load_image(path):
    """Load a greyscale PGM (P5) or PNG as floats in ``[0, 1]``.

    Values are divided by the format maximum (PGM ``maxval``, 255 or 65535
    for PNG). Colour images are rejected; no resizing is done.

    Raises
    ------
    FileNotFoundError
        If ``path`` does not exist.
    FormatError
        For unsupported formats or colour images.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such image: {path}")
    with open(path, "rb") as fh:
        head = fh.read(8)
    if head[:2] == b"P5":
        pixels, maxval = read_pgm(path)
        return pixels.astype(np.float64) / maxval
    if head[:2] in (b"P2", b"P3", b"P6", b"P1", b"P4"):
        raise FormatError(f"{path}: PNM variant {head[:2].decode()} not supported, only P5")
    if head != b"\x89PNG\r\n\x1a\n":
        raise FormatError(f"{path}: not a PGM (P5) or PNG file")
    with Image.open(path) as im:
        mode = im.mode
        if mode == "L":
            maxval = 255
        elif mode.startswith("I;16") or mode == "I":
            maxval = 65535
        else:
            raise FormatError(f"{path}: PNG mode {mode!r} is not greyscale (need L or I;16)")
        arr = np.asarray(im, dtype=np.float64)
    if arr.ndim != 2:
        raise FormatError(f"{path}: expected a single channel, got shape {arr.shape}")
    return arr / maxval


def save_pgm(path, pixels, maxval=255):
    """Write integer ``pixels`` as a binary PGM."""
    pixels = np.asarray(pixels)
    if pixels.ndim != 2:
        raise ValueError("PGM data must be 2-D")
    dtype = ">u2" if maxval > 255 else "u1"
    header = f"P5\n{pixels.shape[1]} {pixels.shape[0]}\n{maxval}\n".encode()
    Path(path).write_bytes(header + pixels.astype(dtype).tobytes())


def save_image(path, img):
    """Save a ``[0, 1]`` float image as 8-bit PGM (values clipped)."""
    save_pgm(path, np.rint(np.clip(img, 0.0, 1.0) * 255).astype(np.uint8))


# -- traces -----------------------------------------------------------------

def export_trace(trace, path):
    """Write a trace as CSV with the fixed ``TRACE_HEADER`` columns."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        for r in trace:
            writer.writerow([
                r.iteration, _fmt(r.fidelity), _fmt(r.l1), _fmt(r.objective),
                _fmt(r.constraint_error), _fmt(r.nu), _fmt(r.seconds),
            ])


def read_trace(path):
    """Parse a CSV written by :func:`export_trace`."""
    def num(v):
        return None if v == "" else float(v)

    trace = IterationTrace()
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != TRACE_HEADER:
            raise FormatError(f"{path}: unexpected trace header {header}")
        for row in reader:
            it, fid, l1, obj, cerr, nu, sec = row
            trace.append(TraceRecord(
                iteration=int(it), fidelity=num(fid), l1=num(l1), objective=num(obj),
                seconds=num(sec), constraint_error=num(cerr), nu=num(nu),
            ))
    return trace


def write_bench_csv(results, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(BENCH_HEADER)
        for r in results:
            writer.writerow([
                r.kernel, r.K, r.P, r.n, r.repetitions, _fmt(r.median_seconds),
                _fmt(r.mean_seconds), _fmt(r.stddev_seconds),
                "" if r.model_flops is None else r.model_flops,
            ])


# -- filter banks -------------------------------------------------------------

def mosaic_layout(K):
    """Grid ``(rows, cols)`` used to tile ``K`` filters."""
    cols = math.ceil(math.sqrt(K))
    return math.ceil(K / cols), cols


def filter_mosaic(filters):
    """Tile filters into one 8-bit image with one-pixel black gutters.

    Each tile is min-max normalized on its own; constant tiles are black.
    """
    f = np.asarray(filters)
    K, m1, m2 = f.shape
    rows, cols = mosaic_layout(K)
    out = np.zeros((rows * m1 + rows - 1, cols * m2 + cols - 1), dtype=np.uint8)
    for k in range(K):
        r, c = divmod(k, cols)
        tile = f[k]
        lo, hi = tile.min(), tile.max()
        scaled = (tile - lo) / (hi - lo) if hi > lo else np.zeros_like(tile)
        out[r * (m1 + 1):r * (m1 + 1) + m1, c * (m2 + 1):c * (m2 + 1) + m2] = np.rint(
            scaled * 255
        )
    return out


def export_filterbank(filters, directory):
    """Write raw doubles, a text header and an inspection mosaic to ``directory``.

    The raw file holds little-endian float64 values, filter-major then
    row-major; the header records ``K``, ``m1`` and ``m2``.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    f = np.asarray(filters.filters if isinstance(filters, FilterBank) else filters)
    K, m1, m2 = f.shape
    (directory / FILTER_DATA).write_bytes(np.ascontiguousarray(f, dtype="<f8").tobytes())
    (directory / FILTER_HEADER).write_text(
        f"K {K}\nm1 {m1}\nm2 {m2}\ndtype <f8\norder k-major row-major\n"
        f"data {FILTER_DATA}\n"
    )
    save_pgm(directory / FILTER_MOSAIC, filter_mosaic(f))


def import_filterbank(path):
    """Read a bank written by :func:`export_filterbank` (directory or header path)."""
    path = Path(path)
    header = path / FILTER_HEADER if path.is_dir() else path
    if not header.is_file():
        raise FileNotFoundError(f"no filter header at {header}")
    meta = {}
    for line in header.read_text().splitlines():
        if line.strip():
            key, _, val = line.partition(" ")
            meta[key] = val.strip()
    try:
        K, m1, m2 = int(meta["K"]), int(meta["m1"]), int(meta["m2"])
    except (KeyError, ValueError) as exc:
        raise FormatError(f"{header}: malformed filter header") from exc
    raw = (header.parent / meta.get("data", FILTER_DATA)).read_bytes()
    if len(raw) != K * m1 * m2 * 8:
        raise FormatError(f"{header}: expected {K * m1 * m2 * 8} bytes, found {len(raw)}")
    return FilterBank(np.frombuffer(raw, dtype="<f8").reshape(K, m1, m2).astype(np.float64))

"""File formats: models in, epitomes/features/stats out.

Three formats, all little-endian where binary:

* Model files (text): a ``ghne-model v1`` header, then per layer a
  ``layer <name>`` line followed by ``filters``, ``channels``,
  ``kernel``, optional ``stride`` (default 1), and ``weights inline``
  (whitespace-separated decimals, row-major [filter][channel][spatial])
  or ``weights blob <relative-path>`` pointing at raw little-endian
  float64 next to the model file.  ``#`` starts a comment anywhere.

* Epitome banks (binary): magic ``GHNE``, u32 version, u32 m, c, rank,
  rank u32 extents, then m*c*prod(extents) interleaved (f64 g, u64 s)
  entries in [m][c] row-major order.  Round-trips are bit-exact.

* Images: binary PGM (P5) and PPM (P6) with maxval 255 only.  Pixels
  map to normalized values p/255 on read; on write, values are min-max
  scaled to 0..255 with the bounds recorded in a ``scaling.txt``
  sidecar (a constant member renders as mid-gray 128).

All writes go through a temp file and an atomic rename, so a failed
command never leaves a partial file behind.
"""

from __future__ import annotations

import math
import os
import re
import struct
import tempfile

import numpy as np

from .banks import Bank, DeepEpitome, LayerSpec, Model, StatsReport
from .epitome import Histogram

__all__ = [
    "FormatError",
    "ModelFormatError",
    "EpitomeFormatError",
    "BadMagicError",
    "VersionError",
    "TruncatedError",
    "ImageFormatError",
    "write_text",
    "load_model",
    "save_model",
    "save_epitome",
    "load_epitome",
    "read_image",
    "write_pgm",
    "write_ppm",
    "write_member_images",
    "write_pseudo_color_images",
    "write_histogram_csv",
    "write_stats_csv",
    "write_series_csv",
    "write_features_csv",
]


class FormatError(Exception):
    """A file does not conform to one of the documented formats."""


class ModelFormatError(FormatError):
    """Malformed model text file; message carries file/line context."""


class EpitomeFormatError(FormatError):
    """Malformed GHNE epitome file."""


class BadMagicError(EpitomeFormatError):
    """The file does not start with the GHNE magic bytes."""


class VersionError(EpitomeFormatError):
    """The file declares a format version this reader does not speak."""


class TruncatedError(EpitomeFormatError):
    """The file ends before the declared data does."""


class ImageFormatError(FormatError):
    """Unsupported or malformed PGM/PPM image."""


_MAGIC = b"GHNE"
_VERSION = 1
_PAIR_DTYPE = np.dtype([("g", "<f8"), ("s", "<u8")])
_NAME_RE = re.compile(r"[A-Za-z0-9_.-]+")
_MODEL_HEADER = "ghne-model v1"


def _atomic_write(path, data: bytes):
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".ghne-tmp-")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _fmt(x) -> str:
    # repr of a Python float is the shortest decimal that round-trips
    return repr(float(x))


def write_text(path, text: str):
    """Write a UTF-8 text file atomically (temp file + rename)."""
    _atomic_write(path, text.encode("utf-8"))


# ---------------------------------------------------------------------------
# model text format


def _model_lines(path):
    with open(path, "r", encoding="utf-8") as f:
        raw = f.read().splitlines()
    lines = []
    for lineno, line in enumerate(raw, 1):
        body = line.split("#", 1)[0].strip()
        if body:
            lines.append((lineno, body.split()))
    return lines


def load_model(path) -> Model:
    """Parse and validate a model text file.

    Every malformed input yields a ModelFormatError naming the file,
    line, and problem; nothing is silently defaulted except the
    documented stride default of 1.
    """
    path = os.fspath(path)

    def fail(lineno, msg):
        raise ModelFormatError(f"{path}:{lineno}: {msg}")

    lines = _model_lines(path)
    if not lines:
        raise ModelFormatError(f"{path}: empty model file, expected '{_MODEL_HEADER}' header")
    lineno, words = lines[0]
    if words != _MODEL_HEADER.split():
        fail(lineno, f"expected header '{_MODEL_HEADER}', got {' '.join(words)!r}")

    layers = []
    seen_names = set()
    pos = 1
    while pos < len(lines):
        lineno, words = lines[pos]
        if words[0] != "layer" or len(words) != 2:
            fail(lineno, f"expected 'layer <name>', got {' '.join(words)!r}")
        name = words[1]
        if name in seen_names:
            fail(lineno, f"duplicate layer name {name!r}")
        seen_names.add(name)
        pos += 1

        fields = {}
        weights = None
        while pos < len(lines):
            lineno, words = lines[pos]
            key = words[0]
            if key == "layer":
                break
            if key in ("filters", "channels"):
                if key in fields:
                    fail(lineno, f"layer {name!r}: duplicate field {key!r}")
                if len(words) != 2 or not words[1].isdigit() or int(words[1]) < 1:
                    fail(lineno, f"layer {name!r}: {key} needs one positive integer")
                fields[key] = int(words[1])
                pos += 1
            elif key in ("kernel", "stride"):
                if key in fields:
                    fail(lineno, f"layer {name!r}: duplicate field {key!r}")
                if len(words) < 2 or not all(w.isdigit() and int(w) >= 1 for w in words[1:]):
                    fail(lineno, f"layer {name!r}: {key} needs positive integer extents")
                fields[key] = tuple(int(w) for w in words[1:])
                pos += 1
            elif key == "weights":
                missing = [k for k in ("filters", "channels", "kernel") if k not in fields]
                if missing:
                    fail(lineno, f"layer {name!r}: weights before {', '.join(missing)}")
                count = fields["filters"] * fields["channels"] * math.prod(fields["kernel"])
                if len(words) == 2 and words[1] == "inline":
                    pos += 1
                    values = []
                    while len(values) < count and pos < len(lines):
                        vline, vwords = lines[pos]
                        if vwords[0] in ("layer", "weights"):
                            break
                        for w in vwords:
                            try:
                                values.append(float(w))
                            except ValueError:
                                fail(vline, f"layer {name!r}: bad weight value {w!r}")
                        pos += 1
                    if len(values) != count:
                        fail(
                            lineno,
                            f"layer {name!r}: expected {count} weights "
                            f"(filters*channels*kernel), got {len(values)}",
                        )
                    weights = np.array(values)
                elif len(words) == 3 and words[1] == "blob":
                    rel = words[2]
                    if os.path.isabs(rel):
                        fail(lineno, f"layer {name!r}: blob path must be relative, got {rel!r}")
                    blob_path = os.path.join(os.path.dirname(path) or ".", rel)
                    try:
                        with open(blob_path, "rb") as bf:
                            blob = bf.read()
                    except OSError as e:
                        fail(lineno, f"layer {name!r}: cannot read weight blob {rel!r}: {e}")
                    if len(blob) != count * 8:
                        fail(
                            lineno,
                            f"layer {name!r}: blob {rel!r} holds {len(blob) // 8} float64 "
                            f"values, expected {count}",
                        )
                    weights = np.frombuffer(blob, dtype="<f8").astype(np.float64)
                    pos += 1
                else:
                    fail(lineno, f"layer {name!r}: expected 'weights inline' or 'weights blob <path>'")
                break
            else:
                fail(lineno, f"layer {name!r}: unknown field {key!r}")
        if weights is None:
            fail(lineno, f"layer {name!r}: missing weights")
        shape = (fields["filters"], fields["channels"]) + fields["kernel"]
        stride = fields.get("stride", (1,) * len(fields["kernel"]))
        if len(stride) == 1:
            stride = stride * len(fields["kernel"])
        if len(stride) != len(fields["kernel"]):
            fail(lineno, f"layer {name!r}: stride rank {len(stride)} != kernel rank {len(fields['kernel'])}")
        try:
            layers.append(LayerSpec(name, weights.reshape(shape), stride))
        except ValueError as e:
            raise ModelFormatError(f"{path}: {e}") from e

    if not layers:
        raise ModelFormatError(f"{path}: model declares no layers")
    try:
        return Model(layers)
    except ValueError as e:
        raise ModelFormatError(f"{path}: {e}") from e


def save_model(model: Model, path, weights_mode: str = "inline"):
    """Write a model file; 'blob' mode puts weights in sibling .f64 files."""
    if weights_mode not in ("inline", "blob"):
        raise ValueError(f"unknown weights mode {weights_mode!r}")
    path = os.fspath(path)
    for layer in model.layers:
        if not _NAME_RE.fullmatch(layer.name):
            raise ValueError(
                f"layer name {layer.name!r} not writable: use only letters, "
                f"digits, '_', '.', '-'"
            )
    stem = os.path.splitext(os.path.basename(path))[0]
    lines = [_MODEL_HEADER]
    for layer in model.layers:
        lines.append(f"layer {layer.name}")
        lines.append(f"filters {layer.out_filters}")
        lines.append(f"channels {layer.in_channels}")
        lines.append("kernel " + " ".join(str(e) for e in layer.kernel_shape))
        lines.append("stride " + " ".join(str(v) for v in layer.stride))
        flat = layer.weights.ravel()
        if weights_mode == "inline":
            lines.append("weights inline")
            row = layer.kernel_shape[-1]
            for start in range(0, flat.size, row):
                lines.append(" ".join(_fmt(v) for v in flat[start : start + row]))
        else:
            blob_name = f"{stem}.{layer.name}.f64"
            _atomic_write(
                os.path.join(os.path.dirname(path) or ".", blob_name),
                flat.astype("<f8").tobytes(),
            )
            lines.append(f"weights blob {blob_name}")
    _atomic_write(path, ("\n".join(lines) + "\n").encode("utf-8"))


# ---------------------------------------------------------------------------
# GHNE binary epitome format


def save_epitome(bank, path):
    """Write a Bank (or a DeepEpitome's bank) as a GHNE file, atomically."""
    if isinstance(bank, DeepEpitome):
        bank = bank.bank
    header = struct.pack("<4sIIII", _MAGIC, _VERSION, bank.m, bank.c, bank.rank)
    header += struct.pack(f"<{bank.rank}I", *bank.spatial_shape)
    entries = np.empty(bank.g.shape, dtype=_PAIR_DTYPE)
    entries["g"] = bank.g
    entries["s"] = bank.s.astype(np.uint64)
    _atomic_write(path, header + entries.tobytes())


def load_epitome(path) -> Bank:
    """Read a GHNE file back into a Bank, verifying every declared count.

    The magic is checked before anything is sized or allocated; bad
    magic, unknown version, and truncation raise distinct errors.
    """
    with open(path, "rb") as f:
        magic = f.read(4)
        if len(magic) < 4 or magic != _MAGIC:
            raise BadMagicError(f"bad magic {magic!r}, expected {_MAGIC!r}")
        head = f.read(16)
        if len(head) < 16:
            raise TruncatedError("file ends inside the fixed header")
        version, m, c, rank = struct.unpack("<IIII", head)
        if version != _VERSION:
            raise VersionError(f"unsupported format version {version}, expected {_VERSION}")
        if m < 1 or c < 1 or rank < 1:
            raise EpitomeFormatError(f"bad dimensions m={m} c={c} rank={rank}")
        if rank > 16:
            raise EpitomeFormatError(f"implausible rank {rank}")
        ext_bytes = f.read(4 * rank)
        if len(ext_bytes) < 4 * rank:
            raise TruncatedError("file ends inside the extent list")
        extents = struct.unpack(f"<{rank}I", ext_bytes)
        if any(e < 1 for e in extents):
            raise EpitomeFormatError(f"zero extent in {extents}")
        n_entries = m * c * math.prod(extents)
        if n_entries > 1 << 31:
            raise EpitomeFormatError(f"implausible entry count {n_entries}")
        data = f.read(n_entries * _PAIR_DTYPE.itemsize)
        if len(data) < n_entries * _PAIR_DTYPE.itemsize:
            raise TruncatedError(
                f"expected {n_entries * _PAIR_DTYPE.itemsize} entry bytes, got {len(data)}"
            )
        if f.read(1):
            raise EpitomeFormatError("trailing data after the declared entries")
    arr = np.frombuffer(data, dtype=_PAIR_DTYPE)
    shape = (m, c) + extents
    g = arr["g"].reshape(shape).copy()
    s_raw = arr["s"]
    if np.any(s_raw > np.iinfo(np.int64).max):
        raise EpitomeFormatError("summand count exceeds the supported range")
    if np.any(s_raw < 1):
        raise EpitomeFormatError("summand count < 1 in entry stream")
    s = s_raw.astype(np.int64).reshape(shape)
    try:
        return Bank(g, s)
    except ValueError as e:
        raise EpitomeFormatError(str(e)) from e


# ---------------------------------------------------------------------------
# PGM / PPM images


def _next_token(f) -> bytes:
    c = f.read(1)
    while c:
        if c in b" \t\r\n":
            c = f.read(1)
            continue
        if c == b"#":
            while c and c != b"\n":
                c = f.read(1)
            continue
        break
    if not c:
        raise ImageFormatError("unexpected end of file in image header")
    token = bytearray()
    while c and c not in b" \t\r\n":
        token += c
        c = f.read(1)
    return bytes(token)


def _int_token(f, what: str) -> int:
    token = _next_token(f)
    if not token.isdigit():
        raise ImageFormatError(f"bad {what} {token!r} in image header")
    return int(token)


def read_image(path) -> Bank:
    """Read a P5/P6 image as a normalized input bank (values p/255).

    Grayscale becomes m=1, c=1; color becomes m=3, c=1 with one epitome
    per color plane, matching the input-pairing rule input.m = deep.c.
    """
    with open(path, "rb") as f:
        magic = f.read(2)
        if magic not in (b"P5", b"P6"):
            raise ImageFormatError(
                f"unsupported image magic {magic!r}: only binary PGM (P5) and PPM (P6)"
            )
        width = _int_token(f, "width")
        height = _int_token(f, "height")
        maxval = _int_token(f, "maxval")
        if maxval != 255:
            raise ImageFormatError(f"unsupported maxval {maxval}, only 255")
        planes = 1 if magic == b"P5" else 3
        expected = width * height * planes
        raster = f.read(expected)
        if len(raster) < expected:
            raise ImageFormatError(
                f"truncated raster: expected {expected} bytes, got {len(raster)}"
            )
    data = np.frombuffer(raster, dtype=np.uint8)
    if planes == 1:
        g = (data / 255.0).reshape(1, 1, height, width)
    else:
        g = (data.reshape(height, width, 3).transpose(2, 0, 1) / 255.0).reshape(
            3, 1, height, width
        )
    return Bank(g, np.ones(g.shape, dtype=np.int64))


def write_pgm(path, pixels):
    """Write a 2-D uint8 array as binary PGM."""
    pixels = np.ascontiguousarray(pixels, dtype=np.uint8)
    if pixels.ndim != 2:
        raise ValueError(f"PGM needs a 2-D array, got shape {pixels.shape}")
    h, w = pixels.shape
    _atomic_write(path, f"P5\n{w} {h}\n255\n".encode("ascii") + pixels.tobytes())


def write_ppm(path, pixels):
    """Write an (h, w, 3) uint8 array as binary PPM."""
    pixels = np.ascontiguousarray(pixels, dtype=np.uint8)
    if pixels.ndim != 3 or pixels.shape[2] != 3:
        raise ValueError(f"PPM needs an (h, w, 3) array, got shape {pixels.shape}")
    h, w = pixels.shape[:2]
    _atomic_write(path, f"P6\n{w} {h}\n255\n".encode("ascii") + pixels.tobytes())


def _scale_to_bytes(values):
    lo = float(values.min())
    hi = float(values.max())
    if hi > lo:
        pixels = np.rint((values - lo) / (hi - lo) * 255.0).astype(np.uint8)
        return pixels, lo, hi, False
    return np.full(values.shape, 128, dtype=np.uint8), lo, hi, True


def _sidecar_line(filename, lo, hi, constant, channel=None) -> str:
    parts = [filename]
    if channel is not None:
        parts.append(f"channel={channel}")
    parts.append(f"lo={_fmt(lo)}")
    parts.append(f"hi={_fmt(hi)}")
    if constant:
        parts.append("constant=128")
    return " ".join(parts)


def write_member_images(bank: Bank, out_dir, prefix: str = "member") -> list:
    """Write one min-max scaled PGM per (filter, channel) member.

    Scaling bounds go into scaling.txt in the same directory; a member
    with no spread renders as constant mid-gray 128 and is flagged.
    """
    if bank.rank != 2:
        raise ValueError(f"only rank-2 banks render as images, got rank {bank.rank}")
    os.makedirs(out_dir, exist_ok=True)
    values = bank.values()
    written = []
    sidecar = []
    for i in range(bank.m):
        for j in range(bank.c):
            pixels, lo, hi, constant = _scale_to_bytes(values[i, j])
            filename = f"{prefix}_f{i}_c{j}.pgm"
            write_pgm(os.path.join(out_dir, filename), pixels)
            sidecar.append(_sidecar_line(filename, lo, hi, constant))
            written.append(os.path.join(out_dir, filename))
    _atomic_write(
        os.path.join(out_dir, "scaling.txt"), ("\n".join(sidecar) + "\n").encode("utf-8")
    )
    return written


def write_pseudo_color_images(bank: Bank, out_dir, prefix: str = "member") -> list:
    """Write one PPM per filter, channels 0,1,2 mapped to R,G,B.

    Each channel is min-max scaled independently; bounds land in
    scaling.txt, one line per channel.
    """
    if bank.c != 3:
        raise ValueError(f"pseudo-color rendering needs exactly 3 channels, bank has c={bank.c}")
    if bank.rank != 2:
        raise ValueError(f"only rank-2 banks render as images, got rank {bank.rank}")
    os.makedirs(out_dir, exist_ok=True)
    values = bank.values()
    written = []
    sidecar = []
    for i in range(bank.m):
        planes = []
        filename = f"{prefix}_f{i}_rgb.ppm"
        for j in range(3):
            pixels, lo, hi, constant = _scale_to_bytes(values[i, j])
            planes.append(pixels)
            sidecar.append(_sidecar_line(filename, lo, hi, constant, channel=j))
        write_ppm(os.path.join(out_dir, filename), np.stack(planes, axis=-1))
        written.append(os.path.join(out_dir, filename))
    _atomic_write(
        os.path.join(out_dir, "scaling.txt"), ("\n".join(sidecar) + "\n").encode("utf-8")
    )
    return written


# ---------------------------------------------------------------------------
# CSV


def write_histogram_csv(hist: Histogram, path):
    """One row per bin: bin_lo,bin_hi,count."""
    lines = ["bin_lo,bin_hi,count"]
    for k in range(hist.counts.size):
        lines.append(f"{_fmt(hist.bin_edges[k])},{_fmt(hist.bin_edges[k + 1])},{int(hist.counts[k])}")
    _atomic_write(path, ("\n".join(lines) + "\n").encode("utf-8"))


def write_stats_csv(report: StatsReport, path):
    """Per-member histogram blocks plus an 'all' aggregate block.

    Columns: filter,channel,bin_lo,bin_hi,count,fuzziness; the member's
    mean fuzziness repeats on each of its bin rows.
    """
    lines = ["filter,channel,bin_lo,bin_hi,count,fuzziness"]

    def block(stats):
        f = "all" if stats.filter_index is None else str(stats.filter_index)
        c = "all" if stats.channel_index is None else str(stats.channel_index)
        h = stats.histogram
        for k in range(h.counts.size):
            lines.append(
                f"{f},{c},{_fmt(h.bin_edges[k])},{_fmt(h.bin_edges[k + 1])},"
                f"{int(h.counts[k])},{_fmt(stats.fuzziness)}"
            )

    for stats in report.members:
        block(stats)
    block(report.aggregate)
    _atomic_write(path, ("\n".join(lines) + "\n").encode("utf-8"))


def write_series_csv(rows, path, header=("label", "value")):
    """Two-column CSV of (label, float) rows; empty rows give header only."""
    lines = [",".join(header)]
    for label, value in rows:
        lines.append(f"{label},{_fmt(value)}")
    _atomic_write(path, ("\n".join(lines) + "\n").encode("utf-8"))


def write_features_csv(bank: Bank, path):
    """Every normalized entry with its coordinates, one row per entry.

    Columns: filter,channel,<one per spatial axis>,value; spatial axes
    are named row,col for rank 2 and axis0,axis1,... otherwise.
    """
    if bank.rank == 2:
        axis_names = ["row", "col"]
    else:
        axis_names = [f"axis{k}" for k in range(bank.rank)]
    lines = ["filter,channel," + ",".join(axis_names) + ",value"]
    values = bank.values()
    for i in range(bank.m):
        for j in range(bank.c):
            member = values[i, j]
            for idx in np.ndindex(member.shape):
                coords = ",".join(str(v) for v in idx)
                lines.append(f"{i},{j},{coords},{_fmt(member[idx])}")
    _atomic_write(path, ("\n".join(lines) + "\n").encode("utf-8"))

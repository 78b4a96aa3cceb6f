"""On-disk containers for spike streams and tensors, plus PGM frame I/O.

Stream container (.spks), all integers little-endian:

    magic      4 bytes  b"SPKS"
    version    u16      1
    flags      u16      bit 0: payload is xz/LZMA-compressed
    width      u32
    height     u32
    num_steps  u64
    tau_ns     u64
    meta_len   u32
    meta       meta_len bytes of UTF-8 (free-form; JSON recommended)
    payload    ceil(H*W/8) * num_steps bytes of packed planes (before the
               optional entropy stage)

Tensor container (.spkt):

    magic      4 bytes  b"SPKT"
    version    u16      1
    dtype      u16      0 = uint8, 1 = float32 little-endian
    rank       u32
    dims       rank * u64
    payload    element_size * prod(dims) bytes

Writes go to a temporary file in the destination directory and are renamed
into place, so a failed save never leaves a partial file behind.
"""

import lzma
import os
import re
import struct
import tempfile
from pathlib import Path

import numpy as np

from .simulate import IntensityClip
from .stream import SpikeStream, plane_bytes_for

STREAM_MAGIC = b"SPKS"
TENSOR_MAGIC = b"SPKT"
FORMAT_VERSION = 1
FLAG_ENTROPY = 0x0001

_STREAM_HEADER = struct.Struct("<4sHHIIQQI")
_TENSOR_HEADER = struct.Struct("<4sHHI")

_DTYPE_CODES = {0: np.dtype("uint8"), 1: np.dtype("<f4")}

# keep declared sizes sane: payload length must fit in a signed 64-bit count
_MAX_PAYLOAD = 2**63 - 1


class FormatError(ValueError):
    """Header or layout violates the container format."""


class CorruptionError(FormatError):
    """Self-described lengths disagree with the bytes actually present."""


def compress_payload(data: bytes) -> bytes:
    """Entropy stage: lossless xz/LZMA."""
    return lzma.compress(data, format=lzma.FORMAT_XZ, preset=6)


def decompress_payload(data: bytes) -> bytes:
    try:
        return lzma.decompress(data, format=lzma.FORMAT_XZ)
    except lzma.LZMAError as exc:
        raise CorruptionError(f"entropy payload does not decompress: {exc}") from None


def _atomic_write(path, write_body) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            write_body(handle)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def save_stream(stream: SpikeStream, path, entropy: bool = False) -> None:
    """Write a stream container; load_stream(save_stream(s)) is bit-identical."""
    meta = stream.meta.encode("utf-8")
    flags = FLAG_ENTROPY if entropy else 0
    header = _STREAM_HEADER.pack(
        STREAM_MAGIC,
        FORMAT_VERSION,
        flags,
        stream.width,
        stream.height,
        stream.num_steps,
        stream.tau_ns,
        len(meta),
    )

    def body(handle):
        handle.write(header)
        handle.write(meta)
        if entropy:
            compressor = lzma.LZMACompressor(format=lzma.FORMAT_XZ, preset=6)
            rows = max(1, 8_000_000 // max(1, stream.plane_bytes))
            for a in range(0, stream.num_steps, rows):
                handle.write(compressor.compress(stream.planes[a : a + rows].tobytes()))
            handle.write(compressor.flush())
        else:
            stream.planes.tofile(handle)

    _atomic_write(path, body)


def _read_exact(handle, n: int, what: str) -> bytes:
    data = handle.read(n)
    if len(data) != n:
        raise CorruptionError(f"truncated file: expected {n} bytes of {what}, got {len(data)}")
    return data


def load_stream(path) -> SpikeStream:
    """Read a stream container, validating every length the header declares."""
    with open(path, "rb") as handle:
        raw = _read_exact(handle, _STREAM_HEADER.size, "header")
        magic, version, flags, width, height, num_steps, tau_ns, meta_len = (
            _STREAM_HEADER.unpack(raw)
        )
        if magic != STREAM_MAGIC:
            raise FormatError(f"bad magic {magic!r}, expected {STREAM_MAGIC!r}")
        if version != FORMAT_VERSION:
            raise FormatError(f"unsupported version {version}")
        if width < 1 or height < 1 or num_steps < 1:
            raise FormatError(f"dimensions must be >= 1, got {height}x{width}x{num_steps}")
        if tau_ns < 1:
            raise FormatError(f"tau_ns must be >= 1, got {tau_ns}")
        expected = plane_bytes_for(height, width) * num_steps
        if expected > _MAX_PAYLOAD:
            raise FormatError(f"dimensions overflow: payload would be {expected} bytes")
        meta = _read_exact(handle, meta_len, "metadata").decode("utf-8")
        payload = handle.read()

    if flags & FLAG_ENTROPY:
        payload = decompress_payload(payload)
    if len(payload) != expected:
        raise CorruptionError(
            f"payload is {len(payload)} bytes, header declares {expected}"
        )
    planes = np.frombuffer(payload, dtype=np.uint8).reshape(
        num_steps, plane_bytes_for(height, width)
    )
    return SpikeStream(height, width, num_steps, tau_ns, planes.copy(), meta)


def import_raw_stream(
    path,
    height: int,
    width: int,
    num_steps: int,
    tau_ns: int,
    bit_order: str = "lsb",
    layout: str = "planar",
) -> SpikeStream:
    """Ingest a headerless binary dump of spike bits.

    layout "planar": each time step padded to a whole byte (the container's
    own payload layout); "continuous": one unpadded H*W*T bitstream.  The
    vendor's native bit order is not documented anywhere, hence the
    bit_order flag ("lsb" or "msb" = lowest pixel index in the lowest or
    highest bit of each byte).  Extra trailing bytes are ignored.
    """
    if bit_order not in ("lsb", "msb"):
        raise ValueError(f"bit_order must be 'lsb' or 'msb', got {bit_order!r}")
    if layout not in ("planar", "continuous"):
        raise ValueError(f"layout must be 'planar' or 'continuous', got {layout!r}")
    if height < 1 or width < 1 or num_steps < 1:
        raise ValueError(f"dimensions must be >= 1, got {height}x{width}x{num_steps}")
    npix = height * width
    pbytes = plane_bytes_for(height, width)
    required = pbytes * num_steps if layout == "planar" else (npix * num_steps + 7) // 8
    data = np.fromfile(path, dtype=np.uint8)
    if data.size < required:
        raise FormatError(
            f"file holds {data.size} bytes, layout needs at least {required}"
        )
    order = "little" if bit_order == "lsb" else "big"
    if layout == "planar":
        raw = data[:required].reshape(num_steps, pbytes)
        bits = np.unpackbits(raw, axis=1, count=npix, bitorder=order)
    else:
        bits = np.unpackbits(data[:required], count=npix * num_steps, bitorder=order)
        bits = bits.reshape(num_steps, npix)
    planes = np.packbits(bits, axis=1, bitorder="little")
    return SpikeStream(height, width, num_steps, tau_ns, planes)


def save_tensor(values: np.ndarray, path) -> None:
    """Write a uint8 or float32 tensor container (little-endian payload)."""
    values = np.asarray(values)
    if values.dtype == np.uint8:
        code = 0
    elif values.dtype == np.float32:
        code = 1
        values = values.astype("<f4", copy=False)
    else:
        raise ValueError(f"tensor dtype must be uint8 or float32, got {values.dtype}")
    header = _TENSOR_HEADER.pack(TENSOR_MAGIC, FORMAT_VERSION, code, values.ndim)
    dims = struct.pack(f"<{values.ndim}Q", *values.shape)

    def body(handle):
        handle.write(header)
        handle.write(dims)
        np.ascontiguousarray(values).tofile(handle)

    _atomic_write(path, body)


def load_tensor(path) -> np.ndarray:
    with open(path, "rb") as handle:
        raw = _read_exact(handle, _TENSOR_HEADER.size, "header")
        magic, version, code, rank = _TENSOR_HEADER.unpack(raw)
        if magic != TENSOR_MAGIC:
            raise FormatError(f"bad magic {magic!r}, expected {TENSOR_MAGIC!r}")
        if version != FORMAT_VERSION:
            raise FormatError(f"unsupported version {version}")
        if code not in _DTYPE_CODES:
            raise FormatError(f"unknown dtype code {code}")
        if rank < 1 or rank > 32:
            raise FormatError(f"rank {rank} outside [1, 32]")
        dims = struct.unpack(f"<{rank}Q", _read_exact(handle, 8 * rank, "dims"))
        dtype = _DTYPE_CODES[code]
        count = 1
        for dim in dims:
            count *= dim
        if count * dtype.itemsize > _MAX_PAYLOAD:
            raise FormatError(f"dimensions overflow: payload would exceed {_MAX_PAYLOAD}")
        payload = handle.read()
    if len(payload) != count * dtype.itemsize:
        raise CorruptionError(
            f"payload is {len(payload)} bytes, dims {dims} declare {count * dtype.itemsize}"
        )
    return np.frombuffer(payload, dtype=dtype).reshape(dims).copy()


# -- PGM (P5) gray frames ---------------------------------------------------


def write_pgm(pixels: np.ndarray, path) -> None:
    """Write one 8-bit grayscale frame as binary PGM."""
    pixels = np.asarray(pixels)
    if pixels.ndim != 2 or pixels.dtype != np.uint8:
        raise ValueError("PGM frame must be a 2-D uint8 array")
    height, width = pixels.shape

    def body(handle):
        handle.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        pixels.tofile(handle)

    _atomic_write(path, body)


def read_pgm(path) -> np.ndarray:
    """Read a binary (P5) 8-bit PGM; comments after the magic are skipped."""
    with open(path, "rb") as handle:
        data = handle.read()
    if not data.startswith(b"P5"):
        raise FormatError("not a binary PGM (P5) file")
    # magic, width, height, maxval, separated by whitespace; '#' starts a comment
    tokens = []
    pos = 2
    while len(tokens) < 3:
        match = re.match(rb"(?:\s+|#[^\n]*\n)*(\d+)", data[pos:])
        if match is None:
            raise FormatError("malformed PGM header")
        tokens.append(int(match.group(1)))
        pos += match.end()
    width, height, maxval = tokens
    if not 0 < maxval < 256:
        raise FormatError(f"only 8-bit PGM supported, maxval={maxval}")
    pos += 1  # single whitespace byte before the raster
    raster = np.frombuffer(data, dtype=np.uint8, offset=pos)
    if raster.size < width * height:
        raise CorruptionError(
            f"PGM raster holds {raster.size} bytes, header declares {width * height}"
        )
    return raster[: width * height].reshape(height, width).copy()


def load_pgm_clip(directory, frame_interval_ns: int) -> IntensityClip:
    """Build an intensity clip from a directory of PGM frames (sorted by name).

    Pixel value v maps to intensity v / 255.
    """
    paths = sorted(Path(directory).glob("*.pgm"))
    if not paths:
        raise FormatError(f"no .pgm frames found in {directory}")
    frames = [read_pgm(p) for p in paths]
    shape = frames[0].shape
    for p, frame in zip(paths, frames):
        if frame.shape != shape:
            raise FormatError(f"{p} has shape {frame.shape}, expected {shape}")
    values = np.stack(frames).astype(np.float64) / 255.0
    return IntensityClip(values, frame_interval_ns)

"""Rate tensors and texture-from-playback (TFP) reconstruction.

Rate encoding turns a binary stream into F real-valued frames by averaging
contiguous, non-overlapping chunks of L = floor(T/F) steps, so every value
is an exact multiple of 1/L.  An alternative strided reading (frame j
averages steps j, j+F, j+2F, ...) is kept behind the `interleaved` flag for
reproduction studies; it interleaves steps from across the whole clip and is
not the default.

TFP assigns each pixel the gray level proportional to its firing rate over
a sliding window: frame m covers steps [m*stride, m*stride + w) and maps a
count n to round-half-up(255 * n / w).  Both transforms count spikes in
integers; floats appear only in the final stored values.
"""

from dataclasses import dataclass

import numpy as np

from .stream import SpikeStream

# packed planes to unpack per accumulation chunk (~8 MB packed)
_CHUNK_BYTES = 8_000_000


@dataclass
class RateTensor:
    """Frames of window-average firing rates; each value is a multiple of 1/chunk_len."""

    values: np.ndarray
    chunk_len: int

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float32)
        if self.values.ndim != 3:
            raise ValueError(f"rate tensor must be (F, H, W), got shape {self.values.shape}")
        if self.chunk_len < 1:
            raise ValueError(f"chunk_len must be >= 1, got {self.chunk_len}")

    @property
    def num_frames(self) -> int:
        return self.values.shape[0]

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]


def _window_counts(stream: SpikeStream, num_windows: int, length: int, interleaved: bool):
    """Spike counts per (window, pixel) over the first num_windows*length steps."""
    npix = stream.height * stream.width
    counts = np.zeros((num_windows, npix), dtype=np.int64)
    used = num_windows * length
    # align chunks to whole windows (contiguous) or whole cycles (interleaved)
    group = length if not interleaved else num_windows
    rows = max(group, (_CHUNK_BYTES // max(1, stream.plane_bytes)) // group * group)
    for start in range(0, used, rows):
        stop = min(used, start + rows)
        bits = np.unpackbits(
            stream.planes[start:stop], axis=1, count=npix, bitorder="little"
        )
        if interleaved:
            # step t belongs to window t % num_windows
            counts += bits.reshape(-1, num_windows, npix).sum(axis=0, dtype=np.int64)
        else:
            # step t belongs to window t // length
            chunk = bits.reshape(-1, length, npix).sum(axis=1, dtype=np.int64)
            counts[start // length : start // length + chunk.shape[0]] += chunk
    return counts


def rate_encode(stream: SpikeStream, num_frames: int, interleaved: bool = False) -> RateTensor:
    """Average the stream into num_frames frames of chunk length T // num_frames.

    Only the first num_frames * chunk_len steps contribute.  Frame f, pixel
    (x, y) is the pixel's spike count over its chunk divided by the chunk
    length, exactly.
    """
    if num_frames < 1:
        raise ValueError(f"num_frames must be >= 1, got {num_frames}")
    length = stream.num_steps // num_frames
    if length < 1:
        raise ValueError(
            f"num_frames={num_frames} exceeds stream length {stream.num_steps}"
        )
    counts = _window_counts(stream, num_frames, length, interleaved)
    values = (counts / length).astype(np.float32)
    return RateTensor(values.reshape(num_frames, stream.height, stream.width), length)


def gray_from_counts(counts: np.ndarray, window: int) -> np.ndarray:
    """Quantize window spike counts to 8-bit gray: round-half-up of 255*n/w."""
    counts = np.asarray(counts, dtype=np.int64)
    return ((510 * counts + window) // (2 * window)).astype(np.uint8)


def tfp_reconstruct(stream: SpikeStream, window: int, stride: int | None = None) -> np.ndarray:
    """Reconstruct gray frames from trailing firing-rate windows.

    Frame m covers steps [m*stride, m*stride + window); the frame count is
    floor((T - window) / stride) + 1.  stride defaults to the window length
    (non-overlapping frames).  Returns (num_frames, H, W) uint8.
    """
    if not 1 <= window <= stream.num_steps:
        raise ValueError(
            f"window {window} outside [1, {stream.num_steps}]"
        )
    if stride is None:
        stride = window
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    num_frames = (stream.num_steps - window) // stride + 1
    height, width = stream.height, stream.width
    npix = height * width

    if stride == window:
        counts = _window_counts(stream, num_frames, window, interleaved=False)
        return gray_from_counts(counts, window).reshape(num_frames, height, width)

    # overlapping windows: one pass with prefix-count snapshots at window starts
    frames = np.empty((num_frames, npix), dtype=np.uint8)
    running = np.zeros(npix, dtype=np.int64)
    pending: list[tuple[int, np.ndarray]] = []
    next_start = 0
    consumed = stream.num_steps if num_frames == 0 else (num_frames - 1) * stride + window
    rows = max(1, _CHUNK_BYTES // max(1, stream.plane_bytes))
    for start in range(0, consumed, rows):
        stop = min(consumed, start + rows)
        bits = np.unpackbits(
            stream.planes[start:stop], axis=1, count=npix, bitorder="little"
        )
        for t in range(start, stop):
            if next_start < num_frames and t == next_start * stride:
                pending.append((next_start, running.copy()))
                next_start += 1
            running += bits[t - start]
            if pending and pending[0][0] * stride + window == t + 1:
                m, snapshot = pending.pop(0)
                frames[m] = gray_from_counts(running - snapshot, window)
    return frames.reshape(num_frames, height, width)

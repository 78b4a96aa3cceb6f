"""Bit-packed spike streams and their elementary rate queries.

A spike stream is a dense binary tensor S(x, y, k) over pixels and polling
steps, stored one time-step plane at a time: pixels in row-major order
(y outer, x inner), 8 pixels per byte, least-significant bit first, each
plane padded to a whole byte.  The plane-aligned layout keeps temporal
slicing and per-step streaming trivial; padding bits are always zero.

Indexing is 0-based everywhere.  Equipment and papers that count polling
steps from 1 map as k_external = k_internal + 1.
"""

from dataclasses import dataclass, field

import numpy as np

# spikes per byte value, used for fast whole-stream counting
_POPCOUNT8 = np.array([bin(i).count("1") for i in range(256)], dtype=np.uint8)

# packed planes to unpack per chunk in streaming queries (~8 MB packed)
_CHUNK_BYTES = 8_000_000


def plane_bytes_for(height: int, width: int) -> int:
    """Bytes occupied by one bit-packed time-step plane."""
    return (height * width + 7) // 8


@dataclass
class SpikeTrain:
    """One pixel's binary spike sequence, contiguous in time."""

    bits: np.ndarray

    def __post_init__(self):
        self.bits = np.ascontiguousarray(self.bits, dtype=np.uint8)
        if self.bits.ndim != 1:
            raise ValueError(f"spike train must be 1-D, got shape {self.bits.shape}")
        if self.bits.size and self.bits.max() > 1:
            raise ValueError("spike train values must be 0 or 1")

    def __len__(self) -> int:
        return self.bits.size

    @property
    def num_steps(self) -> int:
        return self.bits.size

    def count_prefix(self, length: int) -> int:
        """Number of spikes among the first `length` steps (monotone in length)."""
        if not 0 <= length <= self.bits.size:
            raise ValueError(f"prefix length {length} outside [0, {self.bits.size}]")
        return int(self.bits[:length].sum(dtype=np.int64))

    def count(self) -> int:
        return int(self.bits.sum(dtype=np.int64))

    def rate(self) -> float:
        if self.bits.size == 0:
            return 0.0
        return self.count() / self.bits.size


@dataclass
class RateMap:
    """Per-pixel firing rates over some step window; values in [0, 1]."""

    rates: np.ndarray

    def __post_init__(self):
        self.rates = np.asarray(self.rates, dtype=np.float64)
        if self.rates.ndim != 2:
            raise ValueError(f"rate map must be 2-D, got shape {self.rates.shape}")

    @property
    def height(self) -> int:
        return self.rates.shape[0]

    @property
    def width(self) -> int:
        return self.rates.shape[1]


@dataclass(eq=False)
class SpikeStream:
    """Bit-packed binary tensor over (x, y, k) with a fixed polling period.

    `planes` has shape (num_steps, plane_bytes) and dtype uint8.  A stream is
    mutable only while it is being built or imported; share it read-only
    afterwards.  All query methods are pure.
    """

    height: int
    width: int
    num_steps: int
    tau_ns: int
    planes: np.ndarray
    meta: str = ""

    def __post_init__(self):
        if self.height < 1 or self.width < 1 or self.num_steps < 1:
            raise ValueError(
                f"dimensions must be >= 1, got {self.height}x{self.width}x{self.num_steps}"
            )
        if self.tau_ns <= 0:
            raise ValueError(f"tau_ns must be positive, got {self.tau_ns}")
        self.tau_ns = int(self.tau_ns)
        self.planes = np.ascontiguousarray(self.planes, dtype=np.uint8)
        expected = (self.num_steps, self.plane_bytes)
        if self.planes.shape != expected:
            raise ValueError(f"planes shape {self.planes.shape} != expected {expected}")
        pad_bits = self.plane_bytes * 8 - self.height * self.width
        if pad_bits and self.planes.size:
            # padding must stay zero so byte-level counting and packing agree
            if int(self.planes[:, -1].max()) >> (8 - pad_bits):
                raise ValueError("padding bits in the last plane byte must be zero")

    # -- construction ------------------------------------------------------

    @classmethod
    def zeros(cls, height: int, width: int, num_steps: int, tau_ns: int) -> "SpikeStream":
        """Fresh all-zero stream; every query on the result returns 0."""
        if height < 1 or width < 1 or num_steps < 1:
            raise ValueError(f"dimensions must be >= 1, got {height}x{width}x{num_steps}")
        planes = np.zeros((num_steps, plane_bytes_for(height, width)), dtype=np.uint8)
        return cls(height, width, num_steps, tau_ns, planes)

    @classmethod
    def from_dense(cls, dense: np.ndarray, tau_ns: int, meta: str = "") -> "SpikeStream":
        """Pack a dense (num_steps, height, width) binary array."""
        dense = np.asarray(dense)
        if dense.ndim != 3:
            raise ValueError(f"dense spike array must be (T, H, W), got shape {dense.shape}")
        if dense.size and (dense.min() < 0 or dense.max() > 1):
            raise ValueError("dense spike values must be 0 or 1")
        num_steps, height, width = dense.shape
        flat = np.ascontiguousarray(dense.reshape(num_steps, height * width), dtype=np.uint8)
        planes = np.packbits(flat, axis=1, bitorder="little")
        return cls(height, width, num_steps, tau_ns, planes, meta)

    def to_dense(self) -> np.ndarray:
        """Unpack to a (num_steps, height, width) uint8 array of 0/1."""
        bits = np.unpackbits(
            self.planes, axis=1, count=self.height * self.width, bitorder="little"
        )
        return bits.reshape(self.num_steps, self.height, self.width)

    # -- geometry ----------------------------------------------------------

    @property
    def plane_bytes(self) -> int:
        return plane_bytes_for(self.height, self.width)

    @property
    def num_bits(self) -> int:
        """Logical bit count height * width * num_steps (padding excluded)."""
        return self.height * self.width * self.num_steps

    @property
    def payload_bytes(self) -> int:
        return self.plane_bytes * self.num_steps

    def _pixel_index(self, x: int, y: int) -> int:
        if not 0 <= x < self.width:
            raise IndexError(f"x={x} outside [0, {self.width})")
        if not 0 <= y < self.height:
            raise IndexError(f"y={y} outside [0, {self.height})")
        return y * self.width + x

    def _check_step(self, k: int) -> None:
        if not 0 <= k < self.num_steps:
            raise IndexError(f"k={k} outside [0, {self.num_steps})")

    # -- element access ----------------------------------------------------

    def get(self, x: int, y: int, k: int) -> int:
        idx = self._pixel_index(x, y)
        self._check_step(k)
        return int(self.planes[k, idx >> 3] >> (idx & 7)) & 1

    def set(self, x: int, y: int, k: int, bit: int) -> None:
        if bit not in (0, 1):
            raise ValueError(f"bit must be 0 or 1, got {bit}")
        idx = self._pixel_index(x, y)
        self._check_step(k)
        mask = np.uint8(1 << (idx & 7))
        if bit:
            self.planes[k, idx >> 3] |= mask
        else:
            self.planes[k, idx >> 3] &= np.uint8(~mask & 0xFF)

    def train(self, x: int, y: int) -> SpikeTrain:
        """Copy one pixel's bits into a contiguous train."""
        idx = self._pixel_index(x, y)
        column = self.planes[:, idx >> 3]
        return SpikeTrain((column >> (idx & 7)) & 1)

    # -- counting ----------------------------------------------------------

    def count(self) -> int:
        """Total spikes in the stream."""
        total = 0
        rows = max(1, _CHUNK_BYTES // max(1, self.plane_bytes))
        for a in range(0, self.num_steps, rows):
            total += int(_POPCOUNT8[self.planes[a : a + rows]].sum(dtype=np.int64))
        return total

    def rate(self) -> float:
        return self.count() / self.num_bits

    def pixel_counts(self, k_start: int, k_end: int) -> np.ndarray:
        """Per-pixel spike counts over steps [k_start, k_end), as (H, W) int64."""
        if not 0 <= k_start < k_end <= self.num_steps:
            raise ValueError(
                f"window [{k_start}, {k_end}) invalid for {self.num_steps} steps"
            )
        npix = self.height * self.width
        total = np.zeros(npix, dtype=np.int64)
        rows = max(1, _CHUNK_BYTES // max(1, self.plane_bytes))
        for a in range(k_start, k_end, rows):
            chunk = self.planes[a : min(k_end, a + rows)]
            bits = np.unpackbits(chunk, axis=1, count=npix, bitorder="little")
            total += bits.sum(axis=0, dtype=np.int64)
        return total.reshape(self.height, self.width)

    def firing_rate_map(self, k_start: int, k_end: int) -> RateMap:
        """Per-pixel firing rates over [k_start, k_end)."""
        counts = self.pixel_counts(k_start, k_end)
        return RateMap(counts / (k_end - k_start))

    # -- identity ----------------------------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, SpikeStream):
            return NotImplemented
        return (
            self.height == other.height
            and self.width == other.width
            and self.num_steps == other.num_steps
            and self.tau_ns == other.tau_ns
            and self.meta == other.meta
            and np.array_equal(self.planes, other.planes)
        )

"""Compiled hot loops for interval-rate compression.

Both kernels run the same exact integer recurrence: the membrane is the
numerator v over the fixed denominator d, each interval adds its spike
count, the neuron fires when v >= d (membrane >= 1) and then subtracts d.
All arithmetic is integer, so results are exact and deterministic no matter
how the work is scheduled.
"""

import numpy as np
from numba import njit, prange


@njit(cache=True)
def fire_from_counts(counts, d):
    """Emit one bit per interval from interval spike counts (scalar train)."""
    out = np.empty(counts.size, dtype=np.uint8)
    v = np.int64(0)
    for i in range(counts.size):
        v += counts[i]
        if v >= d:
            v -= d
            out[i] = 1
        else:
            out[i] = 0
    return out


@njit(parallel=True, nogil=True, cache=True)
def compress_packed(planes, d, out):
    """Per-pixel interval compression over bit-packed planes.

    planes: (T, plane_bytes) uint8, LSB-first pixels; out: (T', plane_bytes)
    uint8, written in place.  Pixels are independent, so the work is split
    into 64-byte column blocks (512 pixels) that walk time sequentially;
    padding bits never fire because their input counts are always zero.
    """
    t_out = out.shape[0]
    nbytes = planes.shape[1]
    nblocks = (nbytes + 63) // 64
    for blk in prange(nblocks):
        b0 = blk * 64
        b1 = min(b0 + 64, nbytes)
        nb = b1 - b0
        v = np.zeros(8 * nb, dtype=np.int64)
        c = np.zeros(8 * nb, dtype=np.int64)
        for i in range(t_out):
            for j in range(8 * nb):
                c[j] = 0
            base = i * d
            for t in range(base, base + d):
                for j in range(nb):
                    w = planes[t, b0 + j]
                    k = 8 * j
                    c[k] += w & 1
                    c[k + 1] += (w >> 1) & 1
                    c[k + 2] += (w >> 2) & 1
                    c[k + 3] += (w >> 3) & 1
                    c[k + 4] += (w >> 4) & 1
                    c[k + 5] += (w >> 5) & 1
                    c[k + 6] += (w >> 6) & 1
                    c[k + 7] += (w >> 7) & 1
            for j in range(nb):
                o = 0
                k = 8 * j
                for p in range(8):
                    vv = v[k + p] + c[k + p]
                    if vv >= d:
                        vv -= d
                        o |= 1 << p
                    v[k + p] = vv
                out[i, b0 + j] = np.uint8(o)

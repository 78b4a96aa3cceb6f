"""Interval-rate compression of spike streams.

A train of length T is cut into T' = floor(T/d) back-to-back intervals of d
steps (any trailing remainder is dropped).  Each interval's firing rate is
fed to a unit-threshold subtract-reset integrate-and-fire neuron whose
output is the compressed train.  Because every interval rate is a multiple
of 1/d, the membrane is tracked as an integer numerator over d and the
whole pipeline is exact: for every prefix l,

    count_prefix(compressed, l) == floor(count_prefix(original, l * d) / d)

which pins the rate of the compressed train to the original's within 1/T'.
`verify_rate_preservation` checks this identity against exact rational
arithmetic on constant-rate trains.
"""

import os
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .simulate import _as_fraction, constant_rate_train
from .stream import SpikeStream, SpikeTrain


def _check_factor(d, num_steps: int) -> int:
    if int(d) != d or d < 1:
        raise ValueError(f"interval length d must be a positive integer, got {d}")
    d = int(d)
    if d > num_steps:
        raise ValueError(f"interval length d={d} exceeds train length {num_steps}")
    return d


def _interval_counts(bits: np.ndarray, d: int) -> np.ndarray:
    t_out = bits.size // d
    return bits[: t_out * d].reshape(t_out, d).sum(axis=1, dtype=np.int64)


def compress_train(train: SpikeTrain, d: int) -> SpikeTrain:
    """Compress one train by the interval-rate neuron; output length T // d."""
    from . import _kernels

    d = _check_factor(d, len(train))
    counts = _interval_counts(train.bits, d)
    return SpikeTrain(_kernels.fire_from_counts(counts, np.int64(d)))


def thread_cap() -> int:
    """Worker limit for per-pixel fan-out; SPIKEFORGE_THREADS caps it."""
    available = os.cpu_count() or 1
    raw = os.environ.get("SPIKEFORGE_THREADS")
    if raw is None:
        return available
    try:
        cap = int(raw)
    except ValueError:
        cap = 0
    if cap < 1:
        raise ValueError(f"SPIKEFORGE_THREADS must be a positive integer, got {raw!r}")
    return min(cap, available)


def compress_stream(stream: SpikeStream, d: int) -> SpikeStream:
    """Compress every pixel of a stream; output is (H, W, T // d) at tau * d.

    Bit-for-bit equal to running compress_train on each extracted pixel
    train; the packed kernel just avoids unpacking the whole stream.
    """
    import numba

    from . import _kernels

    d = _check_factor(d, stream.num_steps)
    t_out = stream.num_steps // d
    out = np.empty((t_out, stream.plane_bytes), dtype=np.uint8)
    numba.set_num_threads(min(thread_cap(), numba.config.NUMBA_NUM_THREADS))
    _kernels.compress_packed(stream.planes, np.int64(d), out)
    return SpikeStream(
        stream.height, stream.width, t_out, stream.tau_ns * d, out, stream.meta
    )


def dropped_steps(num_steps: int, d: int) -> int:
    """Trailing steps discarded when compressing a T-step input by d."""
    return num_steps - (num_steps // d) * d


@dataclass
class RatePreservationReport:
    """Outcome of checking compression on an exact constant-rate train."""

    c: Fraction
    d: int
    num_steps: int
    t_out: int
    checks_run: int
    failures: list = field(default_factory=list)
    terminal_rate_gap: Fraction = Fraction(0)
    gap_bound: Fraction = Fraction(0)

    @property
    def gap_within_bound(self) -> bool:
        return self.terminal_rate_gap <= self.gap_bound

    @property
    def all_pass(self) -> bool:
        return not self.failures and self.gap_within_bound

    def to_dict(self) -> dict:
        return {
            "c": f"{self.c.numerator}/{self.c.denominator}",
            "d": self.d,
            "num_steps": self.num_steps,
            "t_out": self.t_out,
            "checks_run": self.checks_run,
            "failures": self.failures[:100],
            "num_failures": len(self.failures),
            "terminal_rate_gap": float(self.terminal_rate_gap),
            "gap_bound": float(self.gap_bound),
            "gap_within_bound": self.gap_within_bound,
            "all_pass": self.all_pass,
        }


def verify_rate_preservation(c, d: int, num_steps: int) -> RatePreservationReport:
    """Check the exact prefix identity on a constant-rate train.

    Generates the train for rational c in [0, 1], compresses it by d, and
    verifies count_prefix(compressed, l) == floor(floor(l*d*c) / d) for every
    l in [1, T'], plus the terminal rate gap |rate(compressed) - c| <= 1/T'.
    """
    c = _as_fraction(c)
    if not 0 <= c <= 1:
        raise ValueError(f"constant rate must be in [0, 1], got {c}")
    if num_steps < 1:
        raise ValueError(f"num_steps must be >= 1, got {num_steps}")
    d = _check_factor(d, num_steps)

    train = constant_rate_train(c, num_steps)
    compressed = compress_train(train, d)
    t_out = len(compressed)
    actual = np.cumsum(compressed.bits, dtype=np.int64)

    p, q = c.numerator, c.denominator
    failures = []
    if p * d * t_out <= 2**62:
        ls = np.arange(1, t_out + 1, dtype=np.int64)
        expected = (ls * d * p // q) // d
        bad = np.nonzero(actual != expected)[0]
        failures = [int(i) + 1 for i in bad]
    else:
        for l in range(1, t_out + 1):
            if actual[l - 1] != ((l * d * p) // q) // d:
                failures.append(l)

    gap = abs(Fraction(int(actual[-1]), t_out) - c)
    return RatePreservationReport(
        c=c,
        d=d,
        num_steps=num_steps,
        t_out=t_out,
        checks_run=t_out,
        failures=failures,
        terminal_rate_gap=gap,
        gap_bound=Fraction(1, t_out),
    )


@dataclass
class RecompressionReport:
    """Two-stage (d1 then d2) versus single-stage (d1*d2) compression.

    The two routes agree on lengths but not necessarily on bits; each stage
    preserves its own prefix identity, and the report documents how far the
    results drift rather than claiming equality.
    """

    d1: int
    d2: int
    num_steps: int
    t_out: int
    hamming_distance: int
    two_stage_prefix: np.ndarray
    direct_prefix: np.ndarray

    def to_dict(self) -> dict:
        return {
            "d1": self.d1,
            "d2": self.d2,
            "num_steps": self.num_steps,
            "t_out": self.t_out,
            "hamming_distance": self.hamming_distance,
            "two_stage_prefix": self.two_stage_prefix.tolist(),
            "direct_prefix": self.direct_prefix.tolist(),
        }


def recompress_comparison(train: SpikeTrain, d1: int, d2: int) -> RecompressionReport:
    """Compare compress(compress(s, d1), d2) against compress(s, d1*d2)."""
    if d1 < 1 or d2 < 1:
        raise ValueError(f"interval lengths must be >= 1, got d1={d1}, d2={d2}")
    if d1 * d2 > len(train):
        raise ValueError(f"d1*d2={d1 * d2} exceeds train length {len(train)}")
    two_stage = compress_train(compress_train(train, d1), d2)
    direct = compress_train(train, d1 * d2)
    return RecompressionReport(
        d1=d1,
        d2=d2,
        num_steps=len(train),
        t_out=len(direct),
        hamming_distance=int(np.sum(two_stage.bits != direct.bits)),
        two_stage_prefix=np.cumsum(two_stage.bits, dtype=np.int64),
        direct_prefix=np.cumsum(direct.bits, dtype=np.int64),
    )

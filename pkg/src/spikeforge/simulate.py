"""Discrete-time integrate-and-fire camera simulation.

Each pixel accumulates charge alpha * intensity * tau per polling step and
emits a spike on every step whose post-accumulation membrane reaches the
firing threshold.  On a spike the membrane either resets to zero (the
hardware behaviour, default) or keeps the overshoot by subtracting the
threshold.  At most one spike is registered per polling step, which is all
the polled output can express.

Also provides exact constant-rate reference trains: a unit-threshold
subtract-reset accumulator driven by a constant rational input c fires
exactly floor(l * c) times over the first l steps.  These trains back the
compression oracles, so they are generated with integer arithmetic, never
floats.
"""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .stream import SpikeStream, SpikeTrain

RESET_MODES = ("zero", "subtract")


@dataclass
class CameraConfig:
    """Pixel-model constants.

    alpha and theta default to 1.0; the physical camera's values are not
    public, so treat these defaults as placeholders and calibrate per setup.
    tau_ns defaults to the camera's 50 us polling period (20 kHz).
    """

    alpha: float = 1.0
    theta: float = 1.0
    tau_ns: int = 50_000
    reset_mode: str = "zero"

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.theta <= 0:
            raise ValueError(f"theta must be positive, got {self.theta}")
        if self.tau_ns <= 0:
            raise ValueError(f"tau_ns must be positive, got {self.tau_ns}")
        if self.reset_mode not in RESET_MODES:
            raise ValueError(f"reset_mode must be one of {RESET_MODES}, got {self.reset_mode!r}")
        self.tau_ns = int(self.tau_ns)


@dataclass
class IntensityClip:
    """Nonnegative intensity frames, shape (num_frames, height, width)."""

    values: np.ndarray
    frame_interval_ns: int

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 3:
            raise ValueError(f"clip values must be (F, H, W), got shape {self.values.shape}")
        if self.values.size == 0:
            raise ValueError("clip must contain at least one frame and one pixel")
        if self.values.min() < 0:
            raise ValueError("intensities must be nonnegative")
        if self.frame_interval_ns <= 0:
            raise ValueError(f"frame_interval_ns must be positive, got {self.frame_interval_ns}")
        self.frame_interval_ns = int(self.frame_interval_ns)

    @property
    def num_frames(self) -> int:
        return self.values.shape[0]

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]


def simulate(clip: IntensityClip, config: CameraConfig) -> SpikeStream:
    """Convert an intensity clip into a spike stream.

    Intensity is held constant within each frame (zero-order hold), so the
    per-step charge for a pixel is alpha * I * (tau_ns * 1e-9).  The frame
    interval must be an integer multiple of the polling period; output length
    is num_frames * (frame_interval_ns // tau_ns) steps.  Deterministic:
    identical inputs give bit-identical outputs.
    """
    steps_per_frame, remainder = divmod(clip.frame_interval_ns, config.tau_ns)
    if remainder != 0 or steps_per_frame < 1:
        raise ValueError(
            f"frame interval {clip.frame_interval_ns} ns is not an integer multiple "
            f"of the polling period {config.tau_ns} ns"
        )
    height, width = clip.height, clip.width
    num_steps = clip.num_frames * steps_per_frame
    tau_s = config.tau_ns * 1e-9
    # (F, H*W) charge gained per polling step while each frame is held
    charge = (config.alpha * clip.values.reshape(clip.num_frames, -1)) * tau_s

    membrane = np.zeros(height * width, dtype=np.float64)
    planes = np.empty((num_steps, (height * width + 7) // 8), dtype=np.uint8)
    subtract = config.reset_mode == "subtract"
    k = 0
    for f in range(clip.num_frames):
        step_charge = charge[f]
        for _ in range(steps_per_frame):
            membrane += step_charge
            fired = membrane >= config.theta
            planes[k] = np.packbits(fired, bitorder="little")
            if subtract:
                membrane[fired] -= config.theta
            else:
                membrane[fired] = 0.0
            k += 1
    return SpikeStream(height, width, num_steps, config.tau_ns, planes)


def _as_fraction(value) -> Fraction:
    """Exact rational from int/float/str/Fraction (floats convert exactly)."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"cannot parse rational {value!r}: {exc}") from None
    return Fraction(value)


def constant_rate_train(c, num_steps: int) -> SpikeTrain:
    """Spike train of an accumulator fed the constant input c each step.

    The prefix counts are exact: count_prefix(result, l) == floor(l * c) for
    every l.  c may be an int, float, Fraction, or a "p/q" string; it is
    handled as an exact rational throughout.  c > 1 saturates to all ones
    (one spike per step is the ceiling of the polled output).
    """
    if num_steps < 1:
        raise ValueError(f"num_steps must be >= 1, got {num_steps}")
    c = _as_fraction(c)
    if c < 0:
        raise ValueError(f"constant input must be nonnegative, got {c}")
    if c >= 1:
        return SpikeTrain(np.ones(num_steps, dtype=np.uint8))
    p, q = c.numerator, c.denominator
    if p * num_steps <= 2**62:
        scaled = np.arange(0, num_steps + 1, dtype=np.int64) * p
        counts = scaled // q
        return SpikeTrain(np.diff(counts).astype(np.uint8))
    # huge numerators (e.g. exact binary fractions of floats) overflow int64
    bits = np.empty(num_steps, dtype=np.uint8)
    prev = 0
    for l in range(1, num_steps + 1):
        cur = (l * p) // q
        bits[l - 1] = cur - prev
        prev = cur
    return SpikeTrain(bits)

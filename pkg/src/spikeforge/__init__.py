"""spikeforge: a toolkit for spike-camera data.

Simulates integrate-and-fire spike streams from intensity video, compresses
them with an exact rate-preserving interval algorithm, rate-encodes and
TFP-reconstructs them, stores everything in a bit-exact packed container,
and manages subject-wise dataset splits.
"""

__version__ = "0.1.0"

from .compress import (
    RatePreservationReport,
    RecompressionReport,
    compress_stream,
    compress_train,
    recompress_comparison,
    verify_rate_preservation,
)
from .dataset import (
    ACTIVITIES,
    DatasetStats,
    SampleRecord,
    SplitAssignment,
    dataset_stats,
    load_manifest,
    save_manifest,
    split_subjects,
    write_split_csv,
)
from .encode import RateTensor, rate_encode, tfp_reconstruct
from .simulate import CameraConfig, IntensityClip, constant_rate_train, simulate
from .storage import (
    CorruptionError,
    FormatError,
    import_raw_stream,
    load_pgm_clip,
    load_stream,
    load_tensor,
    read_pgm,
    save_stream,
    save_tensor,
    write_pgm,
)
from .stream import RateMap, SpikeStream, SpikeTrain

__all__ = [
    "__version__",
    "ACTIVITIES",
    "CameraConfig",
    "CorruptionError",
    "DatasetStats",
    "FormatError",
    "IntensityClip",
    "RateMap",
    "RatePreservationReport",
    "RateTensor",
    "RecompressionReport",
    "SampleRecord",
    "SpikeStream",
    "SpikeTrain",
    "SplitAssignment",
    "compress_stream",
    "compress_train",
    "constant_rate_train",
    "dataset_stats",
    "import_raw_stream",
    "load_manifest",
    "load_pgm_clip",
    "load_stream",
    "load_tensor",
    "rate_encode",
    "read_pgm",
    "recompress_comparison",
    "save_manifest",
    "save_stream",
    "save_tensor",
    "simulate",
    "split_subjects",
    "tfp_reconstruct",
    "verify_rate_preservation",
    "write_pgm",
    "write_split_csv",
]

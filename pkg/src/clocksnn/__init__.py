"""Internal-clock spiking network toolkit for motion speed recognition."""

__version__ = "0.1.0"

from .clock import (
    ClockBand,
    SimilarityMatrix,
    assign_band,
    estimate_clock_repetitions,
    similarity_index,
    similarity_matrix,
)
from .datasets import FrameSequence, MotionSpec, load_frames, store_frames, synthesize_motion
from .encoder import EncoderConfig, EncodingReport, encode, information_content
from .inference import ClassBoundaries, classify, derive_boundaries, evaluate
from .network import (
    MotionMeasurement,
    Network,
    NetworkConfig,
    build_network,
    configure_band,
    gate,
    mean_firing_rate,
    respond,
    simulate,
)
from .raster import SpikeRaster, read_raster, write_raster
from .seeding import derive_seed
from .training import (
    TeachingSignal,
    TrainingConfig,
    TrainingTrace,
    classify_band,
    nddp_step,
    rank_error,
    train,
    validate_teaching,
)

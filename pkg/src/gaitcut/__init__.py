"""Gait-cycle segmentation and cycle-based person identification."""

from .distance import average_pair, merge_and_interpolate, signal_distance
from .errors import GaitError
from .identification import (
    ArchetypeSet,
    binary_authenticate,
    classify_cycle,
    classify_cycle_multiaxis,
    cluster_archetypes,
    load_archetypes,
    save_archetypes,
)
from .segmentation import (
    HyperParams,
    Segmentation,
    SegmentationGrid,
    apply_cuts,
    iterative_segment,
    segment,
    segmentation_score,
    tune,
)
from .signal_core import NormalizedSignal, PeakSet, Signal, detect_minimal_peaks, peak_angle

__version__ = "0.1.0"

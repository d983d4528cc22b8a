"""Logits redistribution toolkit.

Modulates model behavior by perturbing logits between the feature
extractor and the output mapping: Gaussian *utility* noise for graded
quality control, signed folded-normal *focus* noise for class emphasis.
Ships closed-form order-preservation probabilities, Monte Carlo oracles
with Wilson intervals, classification/segmentation metrics, interchange
formats, and sigma-sweep protocols.
"""

from .stats import (
    RngStream,
    folded_normal_cdf,
    sample_gaussian,
    std_normal_cdf,
    std_normal_pdf,
)
from .modulate import (
    MODES,
    ModulationSpec,
    apply_focus,
    apply_to_tensor,
    apply_utility,
    as_logits_tensor,
    as_logits_vector,
)
from .theory import (
    GapProfile,
    TheoryResult,
    focus_preservation_prob,
    gap_profile,
    order_preservation_prob,
    order_preservation_rate,
    order_theory,
)
from .mc import (
    MIN_TRIALS,
    McEstimate,
    mc_argmax_flip_rate,
    mc_focus_preservation,
    mc_order_preservation,
    wilson_interval,
)
from .metrics import (
    IGNORE_LABEL,
    ClassificationDataset,
    SegmentationInstance,
    SegMetrics,
    argmax_predict,
    predict_map,
    segmentation_metrics,
    top1_accuracy,
)
from .dataio import (
    DatasetManifest,
    ParseError,
    SyntheticSpec,
    load_classification_manifest,
    load_segmentation_manifest,
    read_classification,
    read_label_map,
    read_logits_tensor,
    read_manifest,
    read_segmentation,
    synth_classification,
    synth_segmentation,
    write_classification,
    write_label_map,
    write_logits_tensor,
    write_manifest,
    write_segmentation,
)
from .sweep import (
    FocusSweepConfig,
    SweepConfig,
    SweepRecord,
    SweepResult,
    sigma_grid,
    sweep_focus,
    sweep_utility,
    write_sweep_csv,
)

__version__ = "0.1.0"

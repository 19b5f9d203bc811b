"""Fake colorized image detection: histogram and Fisher-vector detectors."""

from ._fcid import (
    FcidError,
    GmmModel,
    Model,
    SvmModel,
    average_thresholds,
    encode_fisher,
    evaluate,
    extract_channel_planes,
    fisher_gradients,
    fit_gmm,
    hist_feature,
    hsv_to_rgb,
    hter,
    k_fold_split,
    load_model,
    log_density,
    most_distinctive_bin,
    normalized_histogram,
    posteriors,
    power_grid,
    read_image,
    rgb_to_hsv,
    roc_auc,
    sliding_extremum,
    synth,
    threshold_sweep,
    total_variation,
    train,
    train_svm,
)

__all__ = [name for name in dir() if not name.startswith("_")]

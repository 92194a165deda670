"""Chlorophyll forecasting core: series decomposition, adaptive graph
convolution and temporal convolution, backed by the C++ engine."""

from ._agtcnsd import (
    Forecaster,
    adaptive_adjacency,
    compute_metrics,
    default_config_json,
    dilated_causal_conv,
    fft_topk_filter,
    generate_synthetic,
    moving_average_decompose,
    pearson,
    softmax_rows,
    train_on_csv,
)

__all__ = [
    "Forecaster",
    "adaptive_adjacency",
    "compute_metrics",
    "default_config_json",
    "dilated_causal_conv",
    "fft_topk_filter",
    "generate_synthetic",
    "moving_average_decompose",
    "pearson",
    "softmax_rows",
    "train_on_csv",
]

"""Python access to the faultloc C++ core."""

from ._core import (
    BoostedModel,
    FaultlocError,
    default_config,
    default_network,
    emit_plots,
    fingerprint,
    fit_boosted,
    generate_scenarios,
    impedance_locate,
    knn_fit_predict,
    loss,
    loss_gradient,
    mae,
    ols_fit_predict,
    read_csv,
    simulate,
    standardize,
)

__all__ = [
    "BoostedModel",
    "FaultlocError",
    "default_config",
    "default_network",
    "emit_plots",
    "fingerprint",
    "fit_boosted",
    "generate_scenarios",
    "impedance_locate",
    "knn_fit_predict",
    "loss",
    "loss_gradient",
    "mae",
    "ols_fit_predict",
    "read_csv",
    "simulate",
    "standardize",
]

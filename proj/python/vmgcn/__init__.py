"""Traffic forecasting with variational mode decomposition and graph convolution."""

from ._core import (
    AlignmentError,
    Error,
    InvalidConfig,
    InvalidInput,
    MissingArtifact,
    ModeSelectConfig,
    ModeSet,
    NonConvergence,
    NonFiniteLoss,
    OmegaInit,
    ParseError,
    ShapeMismatch,
    UndefinedMetric,
    VmdConfig,
    build_adjacency,
    chebyshev_basis,
    decompose,
    distance_sigma,
    historical_last_baseline,
    mae,
    mape,
    max_eigenvalue,
    normalized_laplacian,
    reconstruction_loss,
    redemption,
    ring_traffic,
    rmse,
    run_experiment,
    scaled_laplacian,
    select_num_modes,
    validate_config,
)


def vmd(signal, num_modes=4, alpha=2000.0, tau=0.0, epsilon=1e-7, max_iter=500):
    """Keyword shortcut for decompose()."""
    cfg = VmdConfig()
    cfg.num_modes = num_modes
    cfg.alpha = alpha
    cfg.tau = tau
    cfg.epsilon = epsilon
    cfg.max_iter = max_iter
    return decompose(signal, cfg)


__version__ = "0.1.0"

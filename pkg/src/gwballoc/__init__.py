"""Black-Litterman and barycentric (GWB) view updates for long-only mean-variance allocation."""

from .gaussian import GaussianMeasure, gwb_lagrangian, pushforward, wasserstein2_sq
from .linalg import clip_to_psd, pseudo_det, pseudo_inverse, sym_sqrt
from .mvo import MvoProblem, Weights, min_vol_weights, solve_mvo
from .updates import (
    Method,
    PosteriorUpdate,
    bl1_update,
    bl2_update,
    equilibrium_drift,
    gwb1_update,
    gwb2_update,
    gwb_core_update,
    gwb_cross_checks,
)
from .views import PriorSpec, Target, ViewSet, confidence_to_lambda, validate

__version__ = "0.1.0"

__all__ = [
    "GaussianMeasure",
    "Method",
    "MvoProblem",
    "PosteriorUpdate",
    "PriorSpec",
    "Target",
    "ViewSet",
    "Weights",
    "bl1_update",
    "bl2_update",
    "clip_to_psd",
    "confidence_to_lambda",
    "equilibrium_drift",
    "gwb1_update",
    "gwb2_update",
    "gwb_core_update",
    "gwb_cross_checks",
    "gwb_lagrangian",
    "min_vol_weights",
    "pseudo_det",
    "pseudo_inverse",
    "pushforward",
    "solve_mvo",
    "sym_sqrt",
    "validate",
    "wasserstein2_sq",
]

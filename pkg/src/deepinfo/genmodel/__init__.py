"""Desk-scale generative model of face-like stimuli."""
from .design import DESK_FACTORS, PAPER_FACTORS, FactorSpec, balanced_levels, build_design_matrix
from .glm import (
    CHANNELS,
    GenerativeModel,
    GlmIdentityModel,
    build_generative_model,
    fit_glm,
    fit_identity_model,
    residual_pca,
    synthetic_database,
)
from .identity import (
    Identity,
    NoiseSpec,
    inject_noise,
    noise_std,
    population_std,
    sample_identity,
    sample_population,
)
from .render import (
    IMAGE_SIZE,
    VIEWPOINTS,
    RenderedStimulus,
    StimulusSpec,
    control_point_position,
    pixel_coords,
    render_coefficients,
    render_stimulus,
)
from .trials import generate_trialset, noisy_coefficients

__all__ = [
    "CHANNELS",
    "DESK_FACTORS",
    "IMAGE_SIZE",
    "PAPER_FACTORS",
    "VIEWPOINTS",
    "FactorSpec",
    "GenerativeModel",
    "GlmIdentityModel",
    "Identity",
    "NoiseSpec",
    "RenderedStimulus",
    "StimulusSpec",
    "balanced_levels",
    "build_design_matrix",
    "build_generative_model",
    "control_point_position",
    "fit_glm",
    "fit_identity_model",
    "generate_trialset",
    "inject_noise",
    "noise_std",
    "noisy_coefficients",
    "pixel_coords",
    "population_std",
    "render_coefficients",
    "render_stimulus",
    "residual_pca",
    "sample_identity",
    "sample_population",
    "synthetic_database",
]

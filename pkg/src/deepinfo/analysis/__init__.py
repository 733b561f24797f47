"""Information maps, representational geometry and robustness tests."""
from ..trialset import TrialSet
from .capture import capture_trialset
from .maps import (
    FeatureMap,
    decision_redundancy_maps,
    diagnostic_map,
    layer_and_redundancy_maps,
    layer_pc_maps,
    layer_pca,
    viewpoint_consistency,
)
from .planted import PlantedConfig, PlantedResult, run_planted, stage_seeds, train_planted
from .representation import rdm_pipeline
from .robustness import RobustnessReport, noise_robustness_test

__all__ = [
    "FeatureMap",
    "PlantedConfig",
    "PlantedResult",
    "RobustnessReport",
    "TrialSet",
    "capture_trialset",
    "decision_redundancy_maps",
    "diagnostic_map",
    "layer_and_redundancy_maps",
    "layer_pc_maps",
    "layer_pca",
    "noise_robustness_test",
    "rdm_pipeline",
    "run_planted",
    "stage_seeds",
    "train_planted",
    "viewpoint_consistency",
]

"""Cooperative BS-UE MIMO-OFDM sensing simulator with IRLS data fusion."""
from .estimators import BistaticSensor, BsEstimate, ClutterFilter, MonostaticSensor, UeEstimate, sense_bs, sense_ue
from .fusion import CooperativeFusion, FusedEstimate, FusionOptions, fuse_all, fuse_observation, irls_fuse
from .geometry import Scenario, ScattererTruth, TargetTruth
from .harness import run_montecarlo, run_pipeline
from .metrics import compute_rmse
from .ofdm import OfdmConfig, build_frame, default_config

__version__ = "0.1.0"

__all__ = [
    "BistaticSensor", "BsEstimate", "ClutterFilter", "CooperativeFusion", "FusedEstimate",
    "FusionOptions", "MonostaticSensor", "OfdmConfig", "Scenario", "ScattererTruth",
    "TargetTruth", "UeEstimate", "build_frame", "compute_rmse", "default_config", "fuse_all",
    "fuse_observation", "irls_fuse", "run_montecarlo", "run_pipeline", "sense_bs", "sense_ue",
]

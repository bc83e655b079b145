"""Robust homography estimation from affine-aware correspondences."""

from ._hsolo import (
    Correspondence,
    EstimationResult,
    Homography,
    NoModelFound,
    dlt_solve,
    generate_scene,
    hsolo_estimate,
    load_correspondences,
    ransac,
    required_iterations,
    save_correspondences,
    single_match_homography,
    theory_curves,
)

__all__ = [
    "Correspondence",
    "EstimationResult",
    "Homography",
    "NoModelFound",
    "dlt_solve",
    "generate_scene",
    "hsolo_estimate",
    "load_correspondences",
    "ransac",
    "required_iterations",
    "save_correspondences",
    "single_match_homography",
    "theory_curves",
]

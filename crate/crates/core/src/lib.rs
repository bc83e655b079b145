//! Robust homography estimation for inlier-poor correspondence sets.
//!
//! Affine-aware detectors (SIFT, SURF, ...) report a scale and an
//! orientation with every keypoint. One match therefore already pins down a
//! similarity transform between the two images, which is accurate enough
//! near the match to pick out other inliers. [`hsolo::hsolo_estimate`]
//! builds on that: single-match seeding, filtering to an inlier-rich subset,
//! and a four-point RANSAC over the subset. [`robust::ransac_baseline`] is
//! the plain four-point RANSAC it is compared against.
//!
//! ```
//! use hsolo::{generate_scene, hsolo_estimate, HsoloConfig, SceneSpec};
//!
//! let scene = generate_scene(&SceneSpec::new(300, 0.1, 7)).unwrap();
//! let result = hsolo_estimate(&scene.correspondences, &HsoloConfig::default()).unwrap();
//! assert!(result.support >= 30);
//! ```

pub mod bench;
pub mod error;
pub mod geometry;
pub mod hsolo;
pub mod robust;
pub mod solvers;
pub mod synthetic;

pub use error::{Error, Result};
pub use geometry::{AffineFeature, Correspondence, Homography, Point2};
pub use hsolo::{hsolo_estimate, HsoloConfig, HsoloSearch};
pub use robust::{ransac_baseline, ransac_homography, required_iterations, EstimationResult, RansacConfig};
pub use solvers::{dlt_solve, single_match_homography};
pub use synthetic::{generate_scene, Scene, SceneSpec};

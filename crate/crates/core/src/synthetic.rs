//! Ground-truth scenes: candidate correspondence sets with a known
//! homography, a prescribed inlier rate and synthetic detector byproducts.
//!
//! Inlier byproducts model an ideal affine-aware detector: the scale ratio
//! and rotation between the two features are read off the local Jacobian of
//! the true homography, then optionally perturbed. Outliers get unrelated
//! locations and byproducts.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AffineFeature, Correspondence, Homography, Point2};

/// Fraction of each image dimension, centred, that inlier sources come from.
const CENTRAL_REGION: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub truth: Homography,
    /// `(width, height)` in pixels, shared by both images.
    pub image_bounds: (f64, f64),
    pub n_total: usize,
    pub inlier_rate: f64,
    pub pixel_noise_sigma: f64,
    /// Standard deviation of the log of the multiplicative scale noise.
    pub scale_noise_sigma: f64,
    pub angle_noise_sigma: f64,
    /// Range for log-uniform feature scales.
    pub scale_range: (f64, f64),
    pub seed: u64,
}

impl SceneSpec {
    /// A moderate perspective warp between two 640x480 views: a few degrees
    /// of rotation, mild anisotropic scaling and a weak perspective term.
    pub fn default_truth() -> Homography {
        Homography::new([
            1.0299, -0.1341, 35.0, 0.1180, 0.9950, -12.0, 6.0e-5, -4.0e-5, 1.0,
        ])
        .expect("default truth is invertible")
    }

    pub fn new(n_total: usize, inlier_rate: f64, seed: u64) -> Self {
        Self {
            truth: Self::default_truth(),
            image_bounds: (640.0, 480.0),
            n_total,
            inlier_rate,
            pixel_noise_sigma: 0.0,
            scale_noise_sigma: 0.0,
            angle_noise_sigma: 0.0,
            scale_range: (0.5, 2.0),
            seed,
        }
    }

    pub fn inlier_count(&self) -> usize {
        (self.n_total as f64 * self.inlier_rate).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.inlier_rate > 0.0 && self.inlier_rate <= 1.0) {
            return bad(format!("inlier rate must be in (0, 1], got {}", self.inlier_rate));
        }
        if self.n_total < 8 {
            return bad(format!("n_total must be at least 8, got {}", self.n_total));
        }
        let sigmas = [
            self.pixel_noise_sigma,
            self.scale_noise_sigma,
            self.angle_noise_sigma,
        ];
        if sigmas.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return bad("noise sigmas must be non-negative".into());
        }
        let (w, h) = self.image_bounds;
        if !(w > 0.0 && h > 0.0 && w.is_finite() && h.is_finite()) {
            return bad("image bounds must be positive".into());
        }
        let (lo, hi) = self.scale_range;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return bad("scale range must be positive and ordered".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub correspondences: Vec<Correspondence>,
    /// `true` marks a correspondence generated from the truth.
    pub inlier_mask: Vec<bool>,
}

impl Scene {
    pub fn inlier_count(&self) -> usize {
        self.inlier_mask.iter().filter(|m| **m).count()
    }

    pub fn inliers(&self) -> impl Iterator<Item = &Correspondence> {
        self.correspondences
            .iter()
            .zip(&self.inlier_mask)
            .filter(|(_, m)| **m)
            .map(|(c, _)| c)
    }
}

/// Scale change and rotation an ideal detector would report at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalByproducts {
    /// Geometric mean of the Jacobian's singular values, `sqrt(|det J|)`.
    pub scale_ratio: f64,
    /// Rotation angle of the orthogonal polar factor of `J`.
    pub angle_delta: f64,
    /// `false` when `det J < 0`; the polar factor is then a reflection and
    /// `angle_delta` is the direction its first column points.
    pub orientation_preserving: bool,
}

/// Analytic 2x2 Jacobian of `h` at `p`, row-major `[[dx/du, dx/dv], [dy/du, dy/dv]]`.
pub fn jacobian_at(h: &Homography, p: Point2) -> Result<[[f64; 2]; 2]> {
    let q = h.project(p)?;
    let m = h.entries();
    let w = m[6] * p.u + m[7] * p.v + m[8];
    Ok([
        [(m[0] - q.u * m[6]) / w, (m[1] - q.u * m[7]) / w],
        [(m[3] - q.v * m[6]) / w, (m[4] - q.v * m[7]) / w],
    ])
}

pub fn jacobian_byproducts(truth: &Homography, p: Point2) -> Result<LocalByproducts> {
    let j = jacobian_at(truth, p)?;
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let scale_ratio = det.abs().sqrt();
    let (angle, preserving) = if det > 0.0 {
        ((j[1][0] - j[0][1]).atan2(j[0][0] + j[1][1]), true)
    } else {
        ((j[1][0] + j[0][1]).atan2(j[0][0] - j[1][1]), false)
    };
    Ok(LocalByproducts {
        scale_ratio,
        angle_delta: crate::geometry::normalize_angle(angle),
        orientation_preserving: preserving,
    })
}

fn log_uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        return lo;
    }
    rng.random_range(lo.ln()..hi.ln()).exp()
}

fn uniform_angle(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(-PI..PI)
}

fn uniform_point(rng: &mut ChaCha8Rng, (w, h): (f64, f64)) -> Point2 {
    Point2::new(rng.random_range(0.0..w), rng.random_range(0.0..h))
}

pub fn generate_scene(spec: &SceneSpec) -> Result<Scene> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (w, h) = spec.image_bounds;
    let margin = 0.5 * (1.0 - CENTRAL_REGION);
    let pixel = Normal::new(0.0, spec.pixel_noise_sigma).unwrap();
    let log_scale = Normal::new(0.0, spec.scale_noise_sigma).unwrap();
    let angle = Normal::new(0.0, spec.angle_noise_sigma).unwrap();

    let n_in = spec.inlier_count();
    let mut items = Vec::with_capacity(spec.n_total);
    let (mut attempts, mut rejected) = (0usize, 0usize);
    while items.len() < n_in {
        attempts += 1;
        let src = Point2::new(
            rng.random_range(margin * w..(1.0 - margin) * w),
            rng.random_range(margin * h..(1.0 - margin) * h),
        );
        let dst = spec
            .truth
            .project(src)
            .ok()
            .filter(|q| (0.0..=w).contains(&q.u) && (0.0..=h).contains(&q.v));
        let local = dst.and_then(|_| jacobian_byproducts(&spec.truth, src).ok());
        let (Some(dst), Some(local)) = (dst, local) else {
            rejected += 1;
            if attempts >= 64 && 2 * rejected > attempts {
                return Err(Error::InfeasibleSpec(format!(
                    "truth maps {rejected} of {attempts} sampled points outside image 2"
                )));
            }
            continue;
        };
        let s1 = log_uniform(&mut rng, spec.scale_range);
        let t1 = uniform_angle(&mut rng);
        let s2 = s1 * local.scale_ratio * log_scale.sample(&mut rng).exp();
        let t2 = t1 + local.angle_delta + angle.sample(&mut rng);
        let noisy = Point2::new(dst.u + pixel.sample(&mut rng), dst.v + pixel.sample(&mut rng));
        items.push((
            Correspondence::new(AffineFeature::new(src, s1, t1)?, AffineFeature::new(noisy, s2, t2)?),
            true,
        ));
    }
    while items.len() < spec.n_total {
        let a = uniform_point(&mut rng, spec.image_bounds);
        let b = uniform_point(&mut rng, spec.image_bounds);
        let fa = AffineFeature::new(a, log_uniform(&mut rng, spec.scale_range), uniform_angle(&mut rng))?;
        let fb = AffineFeature::new(b, log_uniform(&mut rng, spec.scale_range), uniform_angle(&mut rng))?;
        items.push((Correspondence::new(fa, fb), false));
    }
    items.shuffle(&mut rng);
    let (correspondences, inlier_mask) = items.into_iter().unzip();
    Ok(Scene {
        correspondences,
        inlier_mask,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::{similarity_to_matrix, single_match_homography, SimilarityParts};

    #[test]
    fn identity_scene_is_trivial() {
        let spec = SceneSpec {
            truth: Homography::identity(),
            ..SceneSpec::new(40, 1.0, 3)
        };
        let scene = generate_scene(&spec).unwrap();
        assert_eq!(scene.inlier_count(), 40);
        for c in &scene.correspondences {
            assert_eq!(c.a.p(), c.b.p());
            assert!((c.b.scale() / c.a.scale() - 1.0).abs() < 1e-15);
            let d = crate::geometry::normalize_angle(c.b.angle() - c.a.angle());
            assert!(d.abs() < 1e-12);
        }
    }

    #[test]
    fn rotation_scene_reports_rotation() {
        let theta = 0.3;
        let rot = similarity_to_matrix(&SimilarityParts::new(1.0, theta, 0.0, 0.0).unwrap());
        // rotate about the image centre
        let centre = Homography::translation(320.0, 240.0);
        let truth = centre
            .compose(&rot)
            .unwrap()
            .compose(&centre.invert().unwrap())
            .unwrap();
        let scene = generate_scene(&SceneSpec {
            truth,
            ..SceneSpec::new(50, 1.0, 8)
        })
        .unwrap();
        for c in scene.inliers() {
            let d = crate::geometry::normalize_angle(c.b.angle() - c.a.angle());
            assert!((d - theta).abs() < 1e-12);
            assert!((c.b.scale() / c.a.scale() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn generic_scene_is_locally_similar() {
        let spec = SceneSpec::new(200, 0.5, 21);
        let scene = generate_scene(&spec).unwrap();
        assert_eq!(scene.inlier_count(), 100);
        for c in scene.inliers() {
            assert_eq!(spec.truth.reprojection_error(c).unwrap(), 0.0);
            let approx = single_match_homography(c);
            for k in 0..16 {
                let a = k as f64 * PI / 8.0;
                let p = Point2::new(c.a.p().u + 10.0 * a.cos(), c.a.p().v + 10.0 * a.sin());
                let err = approx
                    .project(p)
                    .unwrap()
                    .distance(&spec.truth.project(p).unwrap());
                assert!(err < 2.0, "err {err}");
            }
        }
    }

    #[test]
    fn byproduct_examples() {
        let id = jacobian_byproducts(&Homography::identity(), Point2::new(3.0, 9.0)).unwrap();
        assert_eq!((id.scale_ratio, id.angle_delta), (1.0, 0.0));
        let sim = similarity_to_matrix(&SimilarityParts::new(2.0, PI / 6.0, 4.0, -1.0).unwrap());
        for p in [Point2::new(0.0, 0.0), Point2::new(300.0, -20.0)] {
            let b = jacobian_byproducts(&sim, p).unwrap();
            assert!((b.scale_ratio - 2.0).abs() < 1e-12);
            assert!((b.angle_delta - PI / 6.0).abs() < 1e-12);
            assert!(b.orientation_preserving);
        }
        let mirror = Homography::new([-1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let b = jacobian_byproducts(&mirror, Point2::new(1.0, 1.0)).unwrap();
        assert!(!b.orientation_preserving);
        assert!((b.scale_ratio - 1.0).abs() < 1e-15);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let h = SceneSpec::default_truth();
        let p = Point2::new(412.0, 133.0);
        let j = jacobian_at(&h, p).unwrap();
        let step = 1e-4;
        let at = |du: f64, dv: f64| h.project(Point2::new(p.u + du, p.v + dv)).unwrap();
        let fd_u = ((at(step, 0.0).u - at(-step, 0.0).u) / (2.0 * step), (at(step, 0.0).v - at(-step, 0.0).v) / (2.0 * step));
        let fd_v = ((at(0.0, step).u - at(0.0, -step).u) / (2.0 * step), (at(0.0, step).v - at(0.0, -step).v) / (2.0 * step));
        assert!((j[0][0] - fd_u.0).abs() < 1e-6);
        assert!((j[1][0] - fd_u.1).abs() < 1e-6);
        assert!((j[0][1] - fd_v.0).abs() < 1e-6);
        assert!((j[1][1] - fd_v.1).abs() < 1e-6);
    }

    #[test]
    fn realized_rate_and_determinism() {
        for (n, w) in [(500, 0.03), (500, 0.1), (101, 0.33), (8, 1.0)] {
            let spec = SceneSpec::new(n, w, 77);
            let scene = generate_scene(&spec).unwrap();
            assert_eq!(scene.correspondences.len(), n);
            assert_eq!(scene.inlier_count(), (n as f64 * w).round() as usize);
            assert_eq!(scene, generate_scene(&spec).unwrap());
        }
    }

    #[test]
    fn infeasible_truth_is_reported() {
        let spec = SceneSpec {
            truth: Homography::translation(5000.0, 0.0),
            ..SceneSpec::new(100, 0.5, 1)
        };
        assert!(matches!(generate_scene(&spec), Err(Error::InfeasibleSpec(_))));
    }

    #[test]
    fn invalid_specs() {
        assert!(generate_scene(&SceneSpec::new(7, 0.5, 0)).is_err());
        assert!(generate_scene(&SceneSpec::new(100, 0.0, 0)).is_err());
        let spec = SceneSpec {
            pixel_noise_sigma: -1.0,
            ..SceneSpec::new(100, 0.5, 0)
        };
        assert!(generate_scene(&spec).is_err());
    }
}

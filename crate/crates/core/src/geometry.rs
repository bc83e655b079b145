//! Projective-geometry primitives: points, affine-aware features,
//! correspondences and canonically scaled homographies.
//!
//! Pixel coordinates use the usual image convention: origin at the top-left
//! corner, `u` to the right and `v` downwards. Nothing in the crate depends on
//! that choice; it only matters when interpreting generated scenes.

use std::f64::consts::PI;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for the singularity and line-at-infinity tests.
pub const SINGULAR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub u: f64,
    pub v: f64,
}

impl Point2 {
    pub const fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        (self.u - other.u).hypot(self.v - other.v)
    }
}

/// Wraps an angle into `[-pi, pi)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut r = (theta + PI).rem_euclid(two_pi);
    if r >= two_pi {
        r = 0.0;
    }
    r - PI
}

/// A keypoint together with the scale and orientation its detector reported.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineFeature {
    p: Point2,
    scale: f64,
    angle: f64,
}

impl AffineFeature {
    pub fn new(p: Point2, scale: f64, angle: f64) -> Result<Self> {
        if !p.is_finite() {
            return Err(Error::NonFinite("feature location"));
        }
        if !angle.is_finite() {
            return Err(Error::NonFinite("feature angle"));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidFeature(format!(
                "scale must be positive and finite, got {scale}"
            )));
        }
        Ok(Self {
            p,
            scale,
            angle: normalize_angle(angle),
        })
    }

    /// A feature with unit scale and zero orientation, for point-only data.
    pub fn at(p: Point2) -> Result<Self> {
        Self::new(p, 1.0, 0.0)
    }

    pub fn p(&self) -> Point2 {
        self.p
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }
}

/// A putative match between a feature in the first image (`a`) and one in
/// the second image (`b`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence {
    pub a: AffineFeature,
    pub b: AffineFeature,
}

impl Correspondence {
    pub fn new(a: AffineFeature, b: AffineFeature) -> Self {
        Self { a, b }
    }

    pub fn from_points(src: Point2, dst: Point2) -> Result<Self> {
        Ok(Self::new(AffineFeature::at(src)?, AffineFeature::at(dst)?))
    }

    pub fn swapped(&self) -> Self {
        Self {
            a: self.b,
            b: self.a,
        }
    }
}

fn frobenius(m: &[f64; 9]) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn det3(m: &[f64; 9]) -> f64 {
    m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6])
        + m[2] * (m[3] * m[7] - m[4] * m[6])
}

/// Rescales a 3x3 matrix to canonical form: `h9 = 1` when `h9` is
/// non-negligible, otherwise unit Frobenius norm with the first nonzero entry
/// positive. Returns `None` for the zero matrix.
pub fn canonicalize(m: &[f64; 9]) -> Option<[f64; 9]> {
    let norm = frobenius(m);
    if norm == 0.0 || !norm.is_finite() {
        return None;
    }
    let mut out = *m;
    if m[8].abs() > SINGULAR_TOL * norm {
        let h9 = m[8];
        out.iter_mut().for_each(|x| *x /= h9);
        return Some(out);
    }
    if (norm - 1.0).abs() > 4.0 * f64::EPSILON {
        out.iter_mut().for_each(|x| *x /= norm);
    }
    if let Some(first) = out.iter().find(|x| **x != 0.0) {
        if *first < 0.0 {
            out.iter_mut().for_each(|x| *x = -*x);
        }
    }
    Some(out)
}

/// An invertible 3x3 projective transform mapping image-1 points to
/// image-2 points, stored row-major in canonical scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 9]", into = "[f64; 9]")]
pub struct Homography {
    m: [f64; 9],
}

impl Homography {
    pub fn new(m: [f64; 9]) -> Result<Self> {
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("homography entry"));
        }
        let m = canonicalize(&m).ok_or(Error::ZeroMatrix)?;
        // Hadamard bound: |det| <= product of column norms.
        let col = |j: usize| (m[j] * m[j] + m[j + 3] * m[j + 3] + m[j + 6] * m[j + 6]).sqrt();
        let bound = col(0) * col(1) * col(2);
        if det3(&m).abs() <= SINGULAR_TOL * bound {
            return Err(Error::SingularMatrix);
        }
        Ok(Self { m })
    }

    pub fn identity() -> Self {
        Self {
            m: [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
        }
    }

    pub fn translation(tx: f64, ty: f64) -> Self {
        Self {
            m: [1.0, 0.0, tx, 0.0, 1.0, ty, 0.0, 0.0, 1.0],
        }
    }

    pub fn from_matrix3(m: &Matrix3<f64>) -> Result<Self> {
        Self::new([
            m[(0, 0)],
            m[(0, 1)],
            m[(0, 2)],
            m[(1, 0)],
            m[(1, 1)],
            m[(1, 2)],
            m[(2, 0)],
            m[(2, 1)],
            m[(2, 2)],
        ])
    }

    pub fn to_matrix3(&self) -> Matrix3<f64> {
        Matrix3::from_row_slice(&self.m)
    }

    /// Row-major entries `h1..h9`.
    pub fn entries(&self) -> &[f64; 9] {
        &self.m
    }

    pub fn determinant(&self) -> f64 {
        det3(&self.m)
    }

    pub fn project(&self, p: Point2) -> Result<Point2> {
        let m = &self.m;
        let x = m[0] * p.u + m[1] * p.v + m[2];
        let y = m[3] * p.u + m[4] * p.v + m[5];
        let w = m[6] * p.u + m[7] * p.v + m[8];
        let scale = (m[6] * p.u).abs() + (m[7] * p.v).abs() + m[8].abs();
        if w.abs() <= SINGULAR_TOL * scale || w == 0.0 {
            return Err(Error::DegenerateProjection);
        }
        Ok(Point2::new(x / w, y / w))
    }

    /// Distance in image 2 between the projection of `c.a` and `c.b`.
    pub fn reprojection_error(&self, c: &Correspondence) -> Result<f64> {
        Ok(self.project(c.a.p())?.distance(&c.b.p()))
    }

    /// Reprojection error for scoring loops: degenerate projections count as
    /// infinitely wrong.
    pub fn scoring_error(&self, c: &Correspondence) -> f64 {
        self.reprojection_error(c).unwrap_or(f64::INFINITY)
    }

    /// Whether `c` is supported within `epsilon` pixels. Agrees with
    /// `scoring_error(c) <= epsilon` up to the rounding of the square root.
    pub fn supports(&self, c: &Correspondence, epsilon: f64) -> bool {
        match self.project(c.a.p()) {
            Ok(q) => {
                let (du, dv) = (q.u - c.b.p().u, q.v - c.b.p().v);
                du * du + dv * dv <= epsilon * epsilon
            }
            Err(_) => false,
        }
    }

    /// `self ∘ other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &Homography) -> Result<Homography> {
        let a = &self.m;
        let b = &other.m;
        let mut out = [0.0; 9];
        for r in 0..3 {
            for c in 0..3 {
                out[r * 3 + c] = (0..3).map(|k| a[r * 3 + k] * b[k * 3 + c]).sum();
            }
        }
        Homography::new(out)
    }

    pub fn invert(&self) -> Result<Homography> {
        let m = &self.m;
        let det = det3(m);
        if det == 0.0 {
            return Err(Error::SingularMatrix);
        }
        let adj = [
            m[4] * m[8] - m[5] * m[7],
            m[2] * m[7] - m[1] * m[8],
            m[1] * m[5] - m[2] * m[4],
            m[5] * m[6] - m[3] * m[8],
            m[0] * m[8] - m[2] * m[6],
            m[2] * m[3] - m[0] * m[5],
            m[3] * m[7] - m[4] * m[6],
            m[1] * m[6] - m[0] * m[7],
            m[0] * m[4] - m[1] * m[3],
        ];
        Homography::new(adj.map(|x| x / det))
    }

    /// Largest absolute entrywise difference between canonical forms.
    pub fn max_abs_diff(&self, other: &Homography) -> f64 {
        self.m
            .iter()
            .zip(other.m.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl From<Homography> for [f64; 9] {
    fn from(h: Homography) -> Self {
        h.m
    }
}

impl TryFrom<[f64; 9]> for Homography {
    type Error = Error;

    fn try_from(m: [f64; 9]) -> Result<Self> {
        Homography::new(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn feature(u: f64, v: f64) -> AffineFeature {
        AffineFeature::at(Point2::new(u, v)).unwrap()
    }

    fn mild(h7: f64, h8: f64, a: f64, tx: f64) -> Homography {
        Homography::new([1.0 + a, 0.1, tx, -0.05, 0.9, 3.0, h7, h8, 1.0]).unwrap()
    }

    #[test]
    fn project_identity_and_translation() {
        let p = Homography::identity().project(Point2::new(3.0, 4.0)).unwrap();
        assert_eq!(p, Point2::new(3.0, 4.0));
        let p = Homography::translation(5.0, -2.0)
            .project(Point2::new(0.0, 0.0))
            .unwrap();
        assert_eq!(p, Point2::new(5.0, -2.0));
    }

    #[test]
    fn project_perspective_divides_by_w() {
        let h = Homography::new([1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.001, 0.0, 1.0]).unwrap();
        let p = h.project(Point2::new(100.0, 0.0)).unwrap();
        // w = 0.001 * 100 + 1 = 1.1
        assert!((p.u - 100.0 / 1.1).abs() < 1e-12);
        assert_eq!(p.v, 0.0);
    }

    #[test]
    fn project_on_vanishing_line_fails() {
        let h = Homography::new([1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.01, 0.0, 1.0]).unwrap();
        assert_eq!(
            h.project(Point2::new(-100.0, 7.0)),
            Err(Error::DegenerateProjection)
        );
        let c = Correspondence::new(feature(-100.0, 7.0), feature(0.0, 0.0));
        assert_eq!(h.scoring_error(&c), f64::INFINITY);
    }

    #[test]
    fn reprojection_error_examples() {
        let id = Homography::identity();
        let c = Correspondence::new(feature(1.0, 1.0), feature(1.0, 1.0));
        assert_eq!(id.reprojection_error(&c).unwrap(), 0.0);
        let c = Correspondence::new(feature(0.0, 0.0), feature(3.0, 4.0));
        assert_eq!(id.reprojection_error(&c).unwrap(), 5.0);
    }

    #[test]
    fn reprojection_error_matches_scalar_arithmetic() {
        let raw = [1.2, -0.3, 14.0, 0.25, 0.8, -6.0, 2e-4, -1e-4, 1.0];
        let h = Homography::new(raw).unwrap();
        let (u, v, u2, v2) = (123.0, 45.5, 170.0, 60.0);
        let w = raw[6] * u + raw[7] * v + raw[8];
        let x = (raw[0] * u + raw[1] * v + raw[2]) / w;
        let y = (raw[3] * u + raw[4] * v + raw[5]) / w;
        let expected = ((x - u2).powi(2) + (y - v2).powi(2)).sqrt();
        let c = Correspondence::new(feature(u, v), feature(u2, v2));
        assert!((h.reprojection_error(&c).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn compose_and_invert_examples() {
        let h = mild(1e-4, -2e-4, 0.1, 7.0);
        assert_eq!(Homography::identity().compose(&h).unwrap(), h);
        let inv = Homography::translation(5.0, -2.0).invert().unwrap();
        assert!(inv.max_abs_diff(&Homography::translation(-5.0, 2.0)) < 1e-15);
        let round = h.compose(&h.invert().unwrap()).unwrap();
        assert!(round.max_abs_diff(&Homography::identity()) < 1e-12);
    }

    #[test]
    fn rejects_bad_matrices() {
        assert_eq!(Homography::new([0.0; 9]), Err(Error::ZeroMatrix));
        assert_eq!(
            Homography::new([1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 0.0, 0.0, 1.0]),
            Err(Error::SingularMatrix)
        );
        assert!(matches!(
            Homography::new([f64::NAN, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn large_translations_are_not_singular() {
        assert!(Homography::new([1.0, 0.0, 1e5, 0.0, 1.0, -1e5, 0.0, 0.0, 1.0]).is_ok());
    }

    #[test]
    fn zero_h9_canonical_form() {
        let h = Homography::new([0.0, -2.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        // det = 0 here, so singular; use a genuinely invertible h9 = 0 matrix
        assert!(h.is_err());
        let h = Homography::new([0.0, -3.0, 1.0, 3.0, 0.0, 0.0, 0.0, 1.0, 0.0]).unwrap();
        let m = h.entries();
        assert!((frobenius(m) - 1.0).abs() < 1e-15);
        assert!(m[1] > 0.0);
        assert_eq!(m[8], 0.0);
    }

    #[test]
    fn feature_validation_and_angle_wrapping() {
        assert!(AffineFeature::new(Point2::new(0.0, 0.0), 0.0, 0.0).is_err());
        assert!(AffineFeature::new(Point2::new(0.0, 0.0), -1.0, 0.0).is_err());
        assert!(AffineFeature::new(Point2::new(f64::INFINITY, 0.0), 1.0, 0.0).is_err());
        let f = AffineFeature::new(Point2::new(0.0, 0.0), 1.0, PI).unwrap();
        assert_eq!(f.angle(), -PI);
        let f = AffineFeature::new(Point2::new(0.0, 0.0), 1.0, 3.0 * PI / 2.0).unwrap();
        assert!((f.angle() + PI / 2.0).abs() < 1e-15);
    }

    fn entries() -> impl Strategy<Value = [f64; 9]> {
        prop::array::uniform9(-2.0f64..2.0)
    }

    proptest! {
        #[test]
        fn canonicalize_is_idempotent(m in entries(), zero_h9 in any::<bool>()) {
            let mut m = m;
            if zero_h9 { m[8] = 0.0; }
            if let Some(once) = canonicalize(&m) {
                prop_assert_eq!(canonicalize(&once).unwrap(), once);
            }
        }

        #[test]
        fn projection_is_scale_invariant(
            a in -0.2f64..0.2, h7 in -1e-3f64..1e-3, h8 in -1e-3f64..1e-3,
            lambda in prop_oneof![-50.0f64..-0.01, 0.01f64..50.0],
            u in 0.0f64..640.0, v in 0.0f64..480.0,
        ) {
            let h = mild(h7, h8, a, 4.0);
            let scaled = Homography::new(h.entries().map(|x| x * lambda)).unwrap();
            let p = Point2::new(u, v);
            let (p1, p2) = (h.project(p).unwrap(), scaled.project(p).unwrap());
            prop_assert!((p1.u - p2.u).abs() < 1e-12 * p1.u.abs().max(1.0));
            prop_assert!((p1.v - p2.v).abs() < 1e-12 * p1.v.abs().max(1.0));
        }

        #[test]
        fn composition_is_associative(
            params in prop::array::uniform12(-0.3f64..0.3),
        ) {
            let make = |k: usize| mild(params[k] * 1e-3, params[k + 1] * 1e-3, params[k + 2], params[k + 3] * 10.0);
            let (a, b, c) = (make(0), make(4), make(8));
            let left = a.compose(&b).unwrap().compose(&c).unwrap();
            let right = a.compose(&b.compose(&c).unwrap()).unwrap();
            prop_assert!(left.max_abs_diff(&right) < 1e-9);
            let p = Point2::new(37.0, 91.0);
            let direct = a.project(b.project(p).unwrap()).unwrap();
            let composed = a.compose(&b).unwrap().project(p).unwrap();
            prop_assert!(direct.distance(&composed) < 1e-9);
        }

        #[test]
        fn supports_matches_scoring_error(
            du in -10.0f64..10.0, dv in -10.0f64..10.0, eps in 0.1f64..8.0,
        ) {
            let h = mild(1e-4, -2e-4, 0.1, 5.0);
            let a = Point2::new(120.0, 80.0);
            let q = h.project(a).unwrap();
            let c = Correspondence::from_points(a, Point2::new(q.u + du, q.v + dv)).unwrap();
            let e = h.scoring_error(&c);
            if (e - eps).abs() > 1e-9 {
                prop_assert_eq!(h.supports(&c, eps), e <= eps);
            }
        }
    }
}

//! Homography solvers: the normalized least-squares DLT and the
//! single-correspondence similarity built from detector scale and rotation.

use std::ops::IndexMut;

use nalgebra::{DMatrix, DVector, Matrix3, SMatrix, SVector};

use crate::error::{Error, Result};
use crate::geometry::{normalize_angle, Correspondence, Homography, Point2};

/// Minimum triangle area, relative to the bounding-box area, for a triple of
/// points to count as non-collinear.
pub const COLLINEAR_TOL: f64 = 1e-6;

/// Largest accepted singular-value ratio of the normalized DLT system.
pub const MAX_CONDITION: f64 = 1e10;

fn triangle_area(a: Point2, b: Point2, c: Point2) -> f64 {
    0.5 * ((b.u - a.u) * (c.v - a.v) - (b.v - a.v) * (c.u - a.u)).abs()
}

fn bbox_area(points: &[Point2]) -> f64 {
    let (mut lo_u, mut hi_u, mut lo_v, mut hi_v) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in points {
        lo_u = lo_u.min(p.u);
        hi_u = hi_u.max(p.u);
        lo_v = lo_v.min(p.v);
        hi_v = hi_v.max(p.v);
    }
    (hi_u - lo_u) * (hi_v - lo_v)
}

/// True when some triple of `points` is (nearly) collinear. Only minimal
/// four-point sets are tested triple by triple; larger sets only need to
/// span the plane.
pub fn is_degenerate(points: &[Point2]) -> bool {
    let bbox = bbox_area(points);
    if !(bbox > 0.0) {
        return true;
    }
    let min_area = COLLINEAR_TOL * bbox;
    if points.len() <= 4 {
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                for k in j + 1..points.len() {
                    if triangle_area(points[i], points[j], points[k]) <= min_area {
                        return true;
                    }
                }
            }
        }
        return false;
    }
    // Farthest point from the first, then farthest from that chord.
    let p0 = points[0];
    let p1 = points
        .iter()
        .copied()
        .max_by(|a, b| p0.distance(a).total_cmp(&p0.distance(b)))
        .unwrap();
    let widest = points
        .iter()
        .map(|&p| triangle_area(p0, p1, p))
        .fold(0.0, f64::max);
    widest <= min_area
}

/// Similarity taking points to centroid zero and RMS radius sqrt(2).
fn hartley(points: &[Point2]) -> Result<Matrix3<f64>> {
    let n = points.len() as f64;
    let cu = points.iter().map(|p| p.u).sum::<f64>() / n;
    let cv = points.iter().map(|p| p.v).sum::<f64>() / n;
    let ms = points
        .iter()
        .map(|p| (p.u - cu).powi(2) + (p.v - cv).powi(2))
        .sum::<f64>()
        / n;
    if !(ms > 0.0) {
        return Err(Error::DegenerateConfiguration("coincident points"));
    }
    let s = (2.0 / ms).sqrt();
    Ok(Matrix3::new(s, 0.0, -s * cu, 0.0, s, -s * cv, 0.0, 0.0, 1.0))
}

fn apply(t: &Matrix3<f64>, p: Point2) -> (f64, f64) {
    (t[(0, 0)] * p.u + t[(0, 2)], t[(1, 1)] * p.v + t[(1, 2)])
}

fn fill_rows<A, B>(a: &mut A, b: &mut B, r: usize, (x, y): (f64, f64), (xp, yp): (f64, f64))
where
    A: IndexMut<(usize, usize), Output = f64>,
    B: IndexMut<usize, Output = f64>,
{
    a[(r, 0)] = x;
    a[(r, 1)] = y;
    a[(r, 2)] = 1.0;
    a[(r, 6)] = -x * xp;
    a[(r, 7)] = -y * xp;
    b[r] = xp;
    a[(r + 1, 3)] = x;
    a[(r + 1, 4)] = y;
    a[(r + 1, 5)] = 1.0;
    a[(r + 1, 6)] = -x * yp;
    a[(r + 1, 7)] = -y * yp;
    b[r + 1] = yp;
}

fn check_condition(singular_values: &[f64]) -> Result<()> {
    let smax = singular_values.iter().copied().fold(0.0, f64::max);
    let smin = singular_values.iter().copied().fold(f64::INFINITY, f64::min);
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if cond <= MAX_CONDITION {
        Ok(())
    } else {
        Err(Error::IllConditioned(cond))
    }
}

/// Least-squares homography from four or more correspondences with the gauge
/// `h9 = 1`, solved on Hartley-normalized coordinates by SVD.
pub fn dlt_solve(correspondences: &[Correspondence]) -> Result<Homography> {
    let n = correspondences.len();
    if n < 4 {
        return Err(Error::TooFewCorrespondences { needed: 4, got: n });
    }
    let src: Vec<Point2> = correspondences.iter().map(|c| c.a.p()).collect();
    let dst: Vec<Point2> = correspondences.iter().map(|c| c.b.p()).collect();
    if is_degenerate(&src) || is_degenerate(&dst) {
        return Err(Error::DegenerateConfiguration("collinear points"));
    }
    let t_src = hartley(&src)?;
    let t_dst = hartley(&dst)?;

    let rows = src.iter().zip(dst.iter()).map(|(s, d)| (apply(&t_src, *s), apply(&t_dst, *d)));
    let h = if n == 4 {
        // Minimal samples dominate RANSAC time; keep them on the stack.
        let mut a = SMatrix::<f64, 8, 8>::zeros();
        let mut b = SVector::<f64, 8>::zeros();
        for (k, (s, d)) in rows.enumerate() {
            fill_rows(&mut a, &mut b, 2 * k, s, d);
        }
        let svd = a.svd(true, true);
        check_condition(svd.singular_values.as_slice())?;
        svd.solve(&b, 0.0).map_err(|_| Error::IllConditioned(f64::INFINITY))?.as_slice().to_vec()
    } else {
        let mut a = DMatrix::<f64>::zeros(2 * n, 8);
        let mut b = DVector::<f64>::zeros(2 * n);
        for (k, (s, d)) in rows.enumerate() {
            fill_rows(&mut a, &mut b, 2 * k, s, d);
        }
        let svd = a.svd(true, true);
        check_condition(svd.singular_values.as_slice())?;
        svd.solve(&b, 0.0).map_err(|_| Error::IllConditioned(f64::INFINITY))?.as_slice().to_vec()
    };
    let hn = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], 1.0);
    let t_dst_inv = t_dst.try_inverse().ok_or(Error::SingularMatrix)?;
    Homography::from_matrix3(&(t_dst_inv * hn * t_src))
        .map_err(|_| Error::DegenerateConfiguration("solution is singular"))
}

/// Scale, rotation and translation of a similarity transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityParts {
    scale: f64,
    angle: f64,
    tx: f64,
    ty: f64,
}

impl SimilarityParts {
    pub fn new(scale: f64, angle: f64, tx: f64, ty: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidFeature(format!(
                "similarity scale must be positive, got {scale}"
            )));
        }
        if !(angle.is_finite() && tx.is_finite() && ty.is_finite()) {
            return Err(Error::NonFinite("similarity parameter"));
        }
        Ok(Self {
            scale,
            angle,
            tx,
            ty,
        })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn translation(&self) -> (f64, f64) {
        (self.tx, self.ty)
    }
}

/// `T(t) · R(angle) · S(scale)`: scales and rotates about the origin, then
/// translates.
pub fn similarity_to_matrix(parts: &SimilarityParts) -> Homography {
    let (s, c) = parts.angle.sin_cos();
    let k = parts.scale;
    Homography::new([k * c, -k * s, parts.tx, k * s, k * c, parts.ty, 0.0, 0.0, 1.0])
        .expect("a similarity with positive scale is invertible")
}

/// The similarity consistent with one affine-aware match.
///
/// Each feature defines a map from a canonical unit patch into its image,
/// `T(p) · R(theta) · S(s)`. Chaining the first feature's inverse with the
/// second's gives an image-1 to image-2 transform that fixes the matched
/// point exactly, scales by `s2 / s1` and rotates by `theta2 - theta1`.
pub fn single_match_homography(c: &Correspondence) -> Homography {
    let ratio = c.b.scale() / c.a.scale();
    let delta = normalize_angle(c.b.angle() - c.a.angle());
    let (s, co) = delta.sin_cos();
    let (l00, l01, l10, l11) = (ratio * co, -ratio * s, ratio * s, ratio * co);
    let (p1, p2) = (c.a.p(), c.b.p());
    let tx = p2.u - (l00 * p1.u + l01 * p1.v);
    let ty = p2.v - (l10 * p1.u + l11 * p1.v);
    Homography::new([l00, l01, tx, l10, l11, ty, 0.0, 0.0, 1.0])
        .expect("a similarity with positive scale is invertible")
}

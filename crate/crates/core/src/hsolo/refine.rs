//! Levenberg-Marquardt polish of a homography over its inliers.
//!
//! The model is parameterized by `h1..h8` with `h9 = 1`; the cost is the sum
//! of squared reprojection errors.

use nalgebra::{SMatrix, SVector};

use crate::error::{Error, Result};
use crate::geometry::{Correspondence, Homography};

pub const MAX_ITERATIONS: usize = 100;
pub const COST_TOL: f64 = 1e-10;
pub const STEP_TOL: f64 = 1e-12;
const INITIAL_DAMPING: f64 = 1e-3;
const MAX_DAMPING: f64 = 1e16;

type Params = SVector<f64, 8>;
type Normal = SMatrix<f64, 8, 8>;

#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub model: Homography,
    pub initial_cost: f64,
    pub final_cost: f64,
    pub iterations: usize,
    /// The normal equations could not be solved; `model` is the input.
    pub degraded: bool,
}

/// Residual `project(h, a) - b` and its Jacobian with respect to `h1..h8`.
/// `None` when the point projects to infinity.
pub fn residual_jacobian(params: &[f64; 8], c: &Correspondence) -> Option<([f64; 2], [[f64; 8]; 2])> {
    let (p, q) = (c.a.p(), c.b.p());
    let (u, v) = (p.u, p.v);
    let w = params[6] * u + params[7] * v + 1.0;
    if w.abs() <= 1e-12 * ((params[6] * u).abs() + (params[7] * v).abs() + 1.0) {
        return None;
    }
    let x = (params[0] * u + params[1] * v + params[2]) / w;
    let y = (params[3] * u + params[4] * v + params[5]) / w;
    let iw = 1.0 / w;
    let jx = [u * iw, v * iw, iw, 0.0, 0.0, 0.0, -x * u * iw, -x * v * iw];
    let jy = [0.0, 0.0, 0.0, u * iw, v * iw, iw, -y * u * iw, -y * v * iw];
    Some(([x - q.u, y - q.v], [jx, jy]))
}

/// Sum of squared reprojection errors; infinite if any point degenerates.
pub fn cost(params: &[f64; 8], inliers: &[Correspondence]) -> f64 {
    inliers
        .iter()
        .map(|c| match residual_jacobian(params, c) {
            Some((r, _)) => r[0] * r[0] + r[1] * r[1],
            None => f64::INFINITY,
        })
        .sum()
}

fn normal_equations(params: &[f64; 8], inliers: &[Correspondence]) -> (Normal, Params) {
    let mut jtj = Normal::zeros();
    let mut jtr = Params::zeros();
    for c in inliers {
        if let Some((r, j)) = residual_jacobian(params, c) {
            for (row, res) in j.iter().zip(r) {
                let row = Params::from_row_slice(row);
                jtj += row * row.transpose();
                jtr += row * res;
            }
        }
    }
    (jtj, jtr)
}

fn unchanged(h: &Homography, cost: f64, degraded: bool) -> Refinement {
    Refinement {
        model: *h,
        initial_cost: cost,
        final_cost: cost,
        iterations: 0,
        degraded,
    }
}

/// Damped Gauss-Newton over `h1..h8`. The returned cost never exceeds the
/// starting cost: only strictly improving steps are taken.
pub fn refine_model(h: &Homography, inliers: &[Correspondence]) -> Result<Refinement> {
    if inliers.len() < 4 {
        return Err(Error::TooFewCorrespondences {
            needed: 4,
            got: inliers.len(),
        });
    }
    let m = h.entries();
    if m[8] != 1.0 {
        // Canonical form with h9 = 0 cannot be expressed in this gauge.
        return Ok(unchanged(h, f64::NAN, true));
    }
    let mut params: [f64; 8] = m[..8].try_into().unwrap();
    let initial_cost = cost(&params, inliers);
    if !initial_cost.is_finite() {
        return Ok(unchanged(h, initial_cost, true));
    }

    let mut current = initial_cost;
    let mut damping = INITIAL_DAMPING;
    let mut iterations = 0;
    let mut degraded = false;

    'outer: while iterations < MAX_ITERATIONS && current > 0.0 {
        iterations += 1;
        let (jtj, jtr) = normal_equations(&params, inliers);
        if jtr.iter().all(|g| *g == 0.0) {
            break;
        }
        loop {
            let mut a = jtj;
            for i in 0..8 {
                a[(i, i)] += damping * jtj[(i, i)];
            }
            let Some(chol) = a.cholesky() else {
                damping *= 10.0;
                if damping > MAX_DAMPING {
                    degraded = true;
                    break 'outer;
                }
                continue;
            };
            let step = chol.solve(&(-jtr));
            let mut trial = params;
            for (t, s) in trial.iter_mut().zip(step.iter()) {
                *t += s;
            }
            let trial_cost = cost(&trial, inliers);
            if trial_cost < current {
                let decrease = (current - trial_cost) / current;
                let size = Params::from_row_slice(&params).norm();
                params = trial;
                current = trial_cost;
                damping = (damping / 10.0).max(1e-12);
                if decrease < COST_TOL || step.norm() <= STEP_TOL * (size + STEP_TOL) {
                    break 'outer;
                }
                break;
            }
            damping *= 10.0;
            if damping > MAX_DAMPING {
                break 'outer;
            }
        }
    }

    let mut full = [0.0; 9];
    full[..8].copy_from_slice(&params);
    full[8] = 1.0;
    match Homography::new(full) {
        Ok(model) if !degraded => Ok(Refinement {
            model,
            initial_cost,
            final_cost: current,
            iterations,
            degraded,
        }),
        _ => Ok(Refinement {
            iterations,
            ..unchanged(h, initial_cost, true)
        }),
    }
}

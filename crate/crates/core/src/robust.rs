//! Four-point RANSAC with adaptive termination.
//!
//! Samples are drawn from a *sample pool* (a list of indices) while support
//! is counted over the whole *score pool*. Plain RANSAC uses the same set for
//! both; the filtered inner loop of [`crate::hsolo`] does not.

use std::time::Instant;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Correspondence, Homography};
use crate::solvers::{dlt_solve, is_degenerate};

/// Iteration count that draws at least one all-inlier sample of size `n`
/// with probability `p` when the inlier rate is `w`.
///
/// Saturates at `u64::MAX` as `w^n` vanishes; `w >= 1` needs one draw.
pub fn required_iterations(w: f64, n: u32, p: f64) -> u64 {
    if w >= 1.0 {
        return 1;
    }
    if !(w > 0.0) {
        return u64::MAX;
    }
    let all_inlier = w.powi(n as i32);
    // ln(1 - w^n) without cancellation for small w^n.
    let denom = (-all_inlier).ln_1p();
    if denom == 0.0 {
        return u64::MAX;
    }
    let k = ((1.0 - p).ln() / denom).ceil();
    if k >= u64::MAX as f64 {
        u64::MAX
    } else {
        (k as u64).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RansacConfig {
    /// Inlier threshold in pixels.
    pub epsilon: f64,
    /// Target probability of drawing one all-inlier sample.
    pub p: f64,
    pub sample_size: usize,
    pub max_iterations: u64,
    pub seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            epsilon: 4.0,
            p: 0.95,
            sample_size: 4,
            max_iterations: 10_000_000,
            seed: 0,
        }
    }
}

impl RansacConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::InvalidConfig(format!("p must be in (0, 1), got {}", self.p)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.sample_size < 4 {
            return Err(Error::InvalidConfig(format!(
                "sample_size must be at least 4, got {}",
                self.sample_size
            )));
        }
        if self.max_iterations < 1 {
            return Err(Error::InvalidConfig("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// Outcome of the final nonlinear refinement, when one ran.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinementSummary {
    /// Model before refinement (the consensus refit).
    pub unrefined: Homography,
    pub initial_cost: f64,
    pub final_cost: f64,
    pub iterations: usize,
    /// Set when the normal equations were singular and the input model was
    /// kept unchanged.
    pub degraded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimationResult {
    pub model: Homography,
    /// Ascending indices into the scoring pool.
    pub inlier_indices: Vec<usize>,
    pub support: usize,
    pub iterations_run: u64,
    pub k_final: u64,
    /// Wall-clock seconds.
    pub elapsed: f64,
    /// Sum of inner RANSAC iterations (HSolo only).
    pub inner_iterations: u64,
    pub refinement: Option<RefinementSummary>,
}

impl EstimationResult {
    pub fn inlier_rate(&self, pool_size: usize) -> f64 {
        self.support as f64 / pool_size as f64
    }
}

/// Indices of `pool` whose reprojection error under `h` is at most `epsilon`.
pub fn support_indices(h: &Homography, pool: &[Correspondence], epsilon: f64) -> Vec<usize> {
    pool.iter()
        .enumerate()
        .filter(|(_, c)| h.supports(c, epsilon))
        .map(|(i, _)| i)
        .collect()
}

fn support_count(h: &Homography, pool: &[Correspondence], epsilon: f64) -> usize {
    pool.iter().filter(|c| h.supports(c, epsilon)).count()
}

/// RANSAC over `score_pool`, drawing minimal samples only from the entries
/// named by `sample_pool`.
///
/// The iteration budget starts at `required_iterations(w_init, 4, p)` and
/// shrinks whenever a model with larger support appears, using the fraction
/// of the sample pool that model explains. Degenerate samples consume an
/// iteration. The winning model is refit on all of its inliers.
pub fn ransac_homography(
    sample_pool: &[usize],
    score_pool: &[Correspondence],
    w_init: f64,
    config: &RansacConfig,
) -> Result<EstimationResult> {
    let start = Instant::now();
    config.validate()?;
    let n = config.sample_size;
    if sample_pool.len() < n {
        return Err(Error::TooFewCorrespondences {
            needed: n,
            got: sample_pool.len(),
        });
    }
    if let Some(&bad) = sample_pool.iter().find(|&&i| i >= score_pool.len()) {
        return Err(Error::InvalidConfig(format!(
            "sample index {bad} outside scoring pool of {}",
            score_pool.len()
        )));
    }
    if !(w_init > 0.0 && w_init <= 1.0) {
        return Err(Error::InvalidConfig(format!("w_init must be in (0, 1], got {w_init}")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut k = required_iterations(w_init, n as u32, config.p).min(config.max_iterations);
    let mut best: Option<(Homography, usize)> = None;
    let mut iterations = 0u64;
    let mut sample = Vec::with_capacity(n);

    while iterations < k {
        iterations += 1;
        sample.clear();
        sample.extend(
            index::sample(&mut rng, sample_pool.len(), n)
                .iter()
                .map(|j| score_pool[sample_pool[j]]),
        );
        let src: Vec<_> = sample.iter().map(|c| c.a.p()).collect();
        let dst: Vec<_> = sample.iter().map(|c| c.b.p()).collect();
        if is_degenerate(&src) || is_degenerate(&dst) {
            continue;
        }
        let Ok(model) = dlt_solve(&sample) else {
            continue;
        };
        let support = support_count(&model, score_pool, config.epsilon);
        if best.is_none_or(|(_, s)| support > s) {
            best = Some((model, support));
            let explained = sample_pool
                .iter()
                .filter(|&&i| model.supports(&score_pool[i], config.epsilon))
                .count();
            let w_hat = explained as f64 / sample_pool.len() as f64;
            k = k.min(required_iterations(w_hat, n as u32, config.p));
        }
    }

    let (model, support) = best.ok_or(Error::NoModelFound)?;
    if support < 4 {
        return Err(Error::NoModelFound);
    }
    let mut inliers = support_indices(&model, score_pool, config.epsilon);
    let mut model = model;
    let members: Vec<_> = inliers.iter().map(|&i| score_pool[i]).collect();
    if let Ok(refit) = dlt_solve(&members) {
        let refit_inliers = support_indices(&refit, score_pool, config.epsilon);
        if refit_inliers.len() >= inliers.len() {
            model = refit;
            inliers = refit_inliers;
        }
    }

    Ok(EstimationResult {
        model,
        support: inliers.len(),
        inlier_indices: inliers,
        iterations_run: iterations,
        k_final: k,
        elapsed: start.elapsed().as_secs_f64(),
        inner_iterations: 0,
        refinement: None,
    })
}

/// Plain RANSAC over the whole pool. The budget starts at
/// `config.max_iterations` and adapts downward as support is found.
pub fn ransac_baseline(pool: &[Correspondence], config: &RansacConfig) -> Result<EstimationResult> {
    let all: Vec<usize> = (0..pool.len()).collect();
    let w_init = 1.0 / pool.len().max(1) as f64;
    ransac_homography(&all, pool, w_init, config)
}

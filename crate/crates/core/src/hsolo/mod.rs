//! Single-correspondence initialization, filtering and inner RANSAC.
//!
//! Each outer iteration takes one correspondence, builds the similarity its
//! detector byproducts imply, keeps the `n_f` candidates that similarity
//! explains best, and, if their median error is small enough, runs a
//! four-point RANSAC that samples from those candidates but scores on the
//! whole pool. The outer budget adapts to the best support seen so far.

mod filter;
mod refine;

pub use filter::{
    estimate_epsilon_r, filter_by_model, median_gate, median_sorted, percentile_sorted,
    FilteredSet,
};
pub use refine::{cost, refine_model, residual_jacobian, Refinement};

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Correspondence;
use crate::robust::{
    ransac_homography, required_iterations, support_indices, EstimationResult, RansacConfig,
    RefinementSummary,
};
use crate::solvers::single_match_homography;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HsoloConfig {
    /// Size of the filtered candidate set.
    pub n_f: usize,
    /// Inlier rate assumed for the filtered set.
    pub w_f: f64,
    /// Median-error gate, pixels.
    pub epsilon_r: f64,
    /// Support threshold, pixels.
    pub epsilon: f64,
    pub p: f64,
    pub seed: u64,
    /// Factor applied to the observed inlier rate when sizing the outer loop.
    pub inlier_scaling: f64,
    pub max_outer_iterations: u64,
}

impl Default for HsoloConfig {
    fn default() -> Self {
        Self {
            n_f: 21,
            w_f: 0.7,
            epsilon_r: 20.0,
            epsilon: 4.0,
            p: 0.95,
            seed: 0,
            inlier_scaling: 0.7,
            max_outer_iterations: 10_000_000,
        }
    }
}

impl HsoloConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_f < 5 {
            return bad(format!("n_f must be at least 5, got {}", self.n_f));
        }
        if !(self.w_f > 0.0 && self.w_f < 1.0) {
            return bad(format!("w_f must be in (0, 1), got {}", self.w_f));
        }
        if !(self.epsilon_r > 0.0) {
            return bad(format!("epsilon_r must be positive, got {}", self.epsilon_r));
        }
        if !(self.inlier_scaling > 0.0 && self.inlier_scaling <= 1.0) {
            return bad(format!(
                "inlier_scaling must be in (0, 1], got {}",
                self.inlier_scaling
            ));
        }
        if self.max_outer_iterations < 1 {
            return bad("max_outer_iterations must be at least 1".into());
        }
        self.inner().validate()
    }

    fn inner(&self) -> RansacConfig {
        RansacConfig {
            epsilon: self.epsilon,
            p: self.p,
            seed: self.seed,
            ..RansacConfig::default()
        }
    }
}

/// What happened during one outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterStep {
    /// 0-based outer iteration number.
    pub iteration: usize,
    /// Pool index of the seeding correspondence.
    pub seed_index: usize,
    pub median_error: f64,
    pub gate_passed: bool,
    /// Inner RANSAC output, when the gate passed and a model was found.
    pub inner: Option<EstimationResult>,
    /// Whether `inner` became the new best model.
    pub improved: bool,
}

/// Incremental driver for the outer loop.
///
/// [`hsolo_estimate`] runs it to its adaptive budget; experiments that want
/// to keep going past that budget can call [`HsoloSearch::step`] directly.
pub struct HsoloSearch<'a> {
    pool: &'a [Correspondence],
    config: HsoloConfig,
    order: Vec<usize>,
    rng: ChaCha8Rng,
    iteration: usize,
    k: u64,
    best: Option<EstimationResult>,
    inner_iterations: u64,
    started: Instant,
}

impl<'a> HsoloSearch<'a> {
    pub fn new(pool: &'a [Correspondence], config: &HsoloConfig) -> Result<Self> {
        config.validate()?;
        if pool.len() < 5 {
            return Err(Error::TooFewCorrespondences {
                needed: 5,
                got: pool.len(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut order: Vec<usize> = (0..pool.len()).collect();
        order.shuffle(&mut rng);
        let w = 1.0 / pool.len() as f64;
        Ok(Self {
            pool,
            config: *config,
            order,
            rng,
            iteration: 0,
            k: required_iterations(w * config.inlier_scaling, 1, config.p),
            best: None,
            inner_iterations: 0,
            started: Instant::now(),
        })
    }

    /// Outer iterations allowed under the current estimate of `w`.
    pub fn budget(&self) -> u64 {
        self.k
            .min(self.pool.len() as u64)
            .min(self.config.max_outer_iterations)
    }

    pub fn iterations(&self) -> usize {
        self.iteration
    }

    pub fn is_done(&self) -> bool {
        self.iteration as u64 >= self.budget()
    }

    pub fn best(&self) -> Option<&EstimationResult> {
        self.best.as_ref()
    }

    /// Runs the next outer iteration regardless of the budget. Returns
    /// `None` once every correspondence has seeded an iteration.
    pub fn step(&mut self) -> Option<OuterStep> {
        if self.iteration >= self.pool.len() {
            return None;
        }
        let seed_index = self.order[self.iteration];
        let inner_seed = self.rng.next_u64();
        let coarse = single_match_homography(&self.pool[seed_index]);
        let filtered = filter_by_model(&coarse, self.pool, self.config.n_f);
        let gate_passed = median_gate(&filtered, self.config.epsilon_r);

        let mut inner = None;
        let mut improved = false;
        if gate_passed {
            let cfg = RansacConfig {
                seed: inner_seed,
                ..self.config.inner()
            };
            if let Ok(result) =
                ransac_homography(&filtered.indices, self.pool, self.config.w_f, &cfg)
            {
                self.inner_iterations += result.iterations_run;
                if self.best.as_ref().is_none_or(|b| result.support > b.support) {
                    let w = result.support as f64 / self.pool.len() as f64;
                    self.k = required_iterations(
                        w * self.config.inlier_scaling,
                        1,
                        self.config.p,
                    );
                    self.best = Some(result.clone());
                    improved = true;
                }
                inner = Some(result);
            }
        }
        let step = OuterStep {
            iteration: self.iteration,
            seed_index,
            median_error: filtered.median_error,
            gate_passed,
            inner,
            improved,
        };
        self.iteration += 1;
        Some(step)
    }

    /// Refines the best model over its inliers and packages the result.
    pub fn finish(self) -> Result<EstimationResult> {
        let best = self.best.ok_or(Error::NoModelFound)?;
        let eps = self.config.epsilon;
        let members: Vec<_> = best.inlier_indices.iter().map(|&i| self.pool[i]).collect();
        let mut model = best.model;
        let mut inliers = best.inlier_indices.clone();
        let mut summary = None;
        if let Ok(r) = refine_model(&best.model, &members) {
            if !r.degraded {
                let refined_inliers = support_indices(&r.model, self.pool, eps);
                if refined_inliers.len() >= 4 {
                    model = r.model;
                    inliers = refined_inliers;
                }
            }
            summary = Some(RefinementSummary {
                unrefined: best.model,
                initial_cost: r.initial_cost,
                final_cost: r.final_cost,
                iterations: r.iterations,
                degraded: r.degraded,
            });
        }
        Ok(EstimationResult {
            model,
            support: inliers.len(),
            inlier_indices: inliers,
            iterations_run: self.iteration as u64,
            k_final: self.k,
            elapsed: self.started.elapsed().as_secs_f64(),
            inner_iterations: self.inner_iterations,
            refinement: summary,
        })
    }
}

/// Full estimator: outer loop to its adaptive budget, then refinement.
pub fn hsolo_estimate(pool: &[Correspondence], config: &HsoloConfig) -> Result<EstimationResult> {
    let mut search = HsoloSearch::new(pool, config)?;
    while !search.is_done() {
        if search.step().is_none() {
            break;
        }
    }
    search.finish()
}

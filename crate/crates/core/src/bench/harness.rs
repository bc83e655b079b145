//! Monte-Carlo comparison of the two estimators across inlier rates.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use super::dbscan::{dbscan_1d, ClusterResult};
use super::io::CorrespondenceSet;
use crate::error::{Error, Result};
use crate::geometry::{Correspondence, Homography};
use crate::hsolo::{hsolo_estimate, HsoloConfig, HsoloSearch};
use crate::robust::{ransac_baseline, EstimationResult, RansacConfig};
use crate::synthetic::{generate_scene, Scene, SceneSpec};

/// Mean ground-truth reprojection error below which a trial counts as a
/// success.
pub const SUCCESS_THRESHOLD: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Hsolo,
    Ransac,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Hsolo => "hsolo",
            Method::Ransac => "ransac",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "hsolo" => Ok(Method::Hsolo),
            "ransac" => Ok(Method::Ransac),
            other => Err(format!("unknown method {other:?} (expected hsolo or ransac)")),
        }
    }
}

/// Where trial data comes from.
#[derive(Debug, Clone)]
pub enum BenchInput {
    /// A fresh scene per trial from this template, at each listed inlier rate.
    Synthetic {
        template: SceneSpec,
        inlier_rates: Vec<f64>,
    },
    /// The same labelled correspondence set for every trial.
    File(CorrespondenceSet),
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub input: BenchInput,
    pub methods: Vec<Method>,
    pub trials: usize,
    pub hsolo: HsoloConfig,
    pub ransac: RansacConfig,
    /// Cap on RANSAC iterations and on HSolo outer iterations.
    pub max_iterations: u64,
    pub seed: u64,
    /// Worker threads; 0 lets rayon decide.
    pub threads: usize,
    pub timing: bool,
    pub dbscan_eps: f64,
    /// Defaults to `max(5, 2% of trials)`.
    pub dbscan_min_pts: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub method: Method,
    /// Index into the group list (inlier rate for synthetic input).
    pub group: usize,
    pub trial: usize,
    pub w_true: f64,
    pub skipped: bool,
    pub success: bool,
    /// Mean error of the ground-truth inliers under the estimate; infinite
    /// when no model was found.
    pub mean_reproj_error: f64,
    pub iterations: u64,
    pub inner_iterations: u64,
    pub support: usize,
    pub elapsed: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub method: Method,
    pub w_true: f64,
    pub trials: usize,
    pub skipped: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub median_iterations: f64,
    pub median_elapsed: Option<f64>,
    /// Mean ground-truth error over successful trials.
    pub mean_error_success: Option<f64>,
    /// Largest-cluster statistics of per-trial mean errors.
    pub cluster_success_rate: f64,
    pub cluster_mean_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub records: Vec<TrialRecord>,
    pub summaries: Vec<GroupSummary>,
    pub warnings: Vec<String>,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Mixes a base seed with a path of indices into an independent stream seed.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(base), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Mean reprojection error of the ground-truth inliers under `model`.
pub fn ground_truth_error<'a>(
    model: &Homography,
    inliers: impl IntoIterator<Item = &'a Correspondence>,
) -> f64 {
    let (sum, n) = inliers
        .into_iter()
        .fold((0.0, 0usize), |(s, n), c| (s + model.scoring_error(c), n + 1));
    if n == 0 {
        f64::INFINITY
    } else {
        sum / n as f64
    }
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    Some(crate::hsolo::median_sorted(values))
}

/// Runs `method` once on `pool`.
pub fn run_method(
    method: Method,
    pool: &[Correspondence],
    hsolo: &HsoloConfig,
    ransac: &RansacConfig,
    cap: u64,
    seed: u64,
) -> Result<EstimationResult> {
    match method {
        Method::Hsolo => {
            let cfg = HsoloConfig {
                seed,
                max_outer_iterations: cap,
                ..*hsolo
            };
            hsolo_estimate(pool, &cfg)
        }
        Method::Ransac => {
            let cfg = RansacConfig {
                seed,
                max_iterations: cap,
                ..*ransac
            };
            ransac_baseline(pool, &cfg)
        }
    }
}

/// Outer iterations until the best model so far first explains the
/// ground-truth inliers (mean error below [`SUCCESS_THRESHOLD`]), ignoring
/// the adaptive budget. `None` if no seed up to `limit` succeeds.
pub fn outer_iterations_to_success(scene: &Scene, config: &HsoloConfig, limit: usize) -> Result<Option<usize>> {
    let mut search = HsoloSearch::new(&scene.correspondences, config)?;
    while search.iterations() < limit {
        let Some(step) = search.step() else { break };
        if step.improved {
            let model = search.best().expect("improved implies a best model").model;
            if ground_truth_error(&model, scene.inliers()) < SUCCESS_THRESHOLD {
                return Ok(Some(step.iteration + 1));
            }
        }
    }
    Ok(None)
}

struct Group {
    pool: Option<Scene>,
    template: Option<SceneSpec>,
}

fn groups(input: &BenchInput) -> Result<Vec<Group>> {
    match input {
        BenchInput::Synthetic {
            template,
            inlier_rates,
        } => Ok(inlier_rates
            .iter()
            .map(|&w| Group {
                pool: None,
                template: Some(SceneSpec {
                    inlier_rate: w,
                    ..*template
                }),
            })
            .collect()),
        BenchInput::File(set) => {
            let mask = set.inlier_mask.clone().ok_or_else(|| {
                Error::InvalidConfig("benchmark input needs the ground-truth inlier column".into())
            })?;
            Ok(vec![Group {
                pool: Some(Scene {
                    correspondences: set.correspondences.clone(),
                    inlier_mask: mask,
                }),
                template: None,
            }])
        }
    }
}

pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchReport> {
    if cfg.trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    if cfg.methods.is_empty() {
        return Err(Error::InvalidConfig("no methods selected".into()));
    }
    if let BenchInput::File(set) = &cfg.input {
        if !set.has_byproducts && cfg.methods.contains(&Method::Hsolo) {
            return Err(Error::InvalidConfig(
                "point-only input has no scale/angle byproducts; hsolo needs them (use --methods ransac)"
                    .into(),
            ));
        }
    }
    cfg.hsolo.validate()?;
    cfg.ransac.validate()?;
    let groups = groups(&cfg.input)?;

    let jobs: Vec<(usize, usize)> = (0..groups.len())
        .flat_map(|g| (0..cfg.trials).map(move |t| (g, t)))
        .collect();
    let run_job = |&(g, t): &(usize, usize)| -> Result<Vec<TrialRecord>> {
        let group = &groups[g];
        let scene = match (&group.pool, &group.template) {
            (Some(scene), _) => scene.clone(),
            (None, Some(spec)) => generate_scene(&SceneSpec {
                seed: derive_seed(cfg.seed, &[g as u64, t as u64, 0]),
                ..*spec
            })?,
            _ => unreachable!(),
        };
        let c = scene.inlier_count();
        let w_true = c as f64 / scene.correspondences.len() as f64;
        let skipped = (c as f64) / (cfg.hsolo.n_f as f64) < cfg.hsolo.w_f;
        let mut out = Vec::with_capacity(cfg.methods.len());
        for (m, &method) in cfg.methods.iter().enumerate() {
            let seed = derive_seed(cfg.seed, &[g as u64, t as u64, 1 + m as u64]);
            let mut record = TrialRecord {
                method,
                group: g,
                trial: t,
                w_true,
                skipped,
                success: false,
                mean_reproj_error: f64::INFINITY,
                iterations: 0,
                inner_iterations: 0,
                support: 0,
                elapsed: None,
                seed,
            };
            if !skipped {
                let started = std::time::Instant::now();
                let result = run_method(
                    method,
                    &scene.correspondences,
                    &cfg.hsolo,
                    &cfg.ransac,
                    cfg.max_iterations,
                    seed,
                );
                if cfg.timing {
                    record.elapsed = Some(started.elapsed().as_secs_f64());
                }
                if let Ok(r) = result {
                    record.mean_reproj_error = ground_truth_error(&r.model, scene.inliers());
                    record.success = record.mean_reproj_error < SUCCESS_THRESHOLD;
                    record.iterations = r.iterations_run;
                    record.inner_iterations = r.inner_iterations;
                    record.support = r.support;
                }
            }
            out.push(record);
        }
        Ok(out)
    };

    let nested: Vec<Result<Vec<TrialRecord>>> = if cfg.threads == 1 {
        jobs.iter().map(run_job).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
        pool.install(|| jobs.par_iter().map(run_job).collect())
    };
    let mut records = Vec::with_capacity(jobs.len() * cfg.methods.len());
    for r in nested {
        records.extend(r?);
    }
    records.sort_by_key(|r| (r.group, r.trial, cfg.methods.iter().position(|m| *m == r.method)));

    let mut warnings = Vec::new();
    let mut summaries = Vec::new();
    for g in 0..groups.len() {
        let skipped_trials = records
            .iter()
            .filter(|r| r.group == g && r.skipped && r.method == cfg.methods[0])
            .count();
        if skipped_trials > 0 {
            let w = records.iter().find(|r| r.group == g).map_or(f64::NAN, |r| r.w_true);
            warnings.push(format!(
                "group {g} (w_true {w}): skipped {skipped_trials} of {} trials with \
                 true inliers / n_f < w_f (n_f = {}, w_f = {})",
                cfg.trials, cfg.hsolo.n_f, cfg.hsolo.w_f
            ));
        }
        for &method in &cfg.methods {
            let group: Vec<&TrialRecord> = records
                .iter()
                .filter(|r| r.group == g && r.method == method)
                .collect();
            summaries.push(summarize(method, &group, cfg));
        }
    }
    Ok(BenchReport {
        records,
        summaries,
        warnings,
    })
}

fn summarize(method: Method, group: &[&TrialRecord], cfg: &BenchConfig) -> GroupSummary {
    let ran: Vec<&&TrialRecord> = group.iter().filter(|r| !r.skipped).collect();
    let successes = ran.iter().filter(|r| r.success).count();
    let mut iterations: Vec<f64> = ran.iter().map(|r| r.iterations as f64).collect();
    let mut elapsed: Vec<f64> = ran.iter().filter_map(|r| r.elapsed).collect();
    let success_errors: Vec<f64> = ran
        .iter()
        .filter(|r| r.success)
        .map(|r| r.mean_reproj_error)
        .collect();
    let finite: Vec<f64> = ran
        .iter()
        .map(|r| r.mean_reproj_error)
        .filter(|e| e.is_finite())
        .collect();
    let min_pts = cfg
        .dbscan_min_pts
        .unwrap_or_else(|| 5.max((0.02 * cfg.trials as f64).ceil() as usize));
    let clusters: ClusterResult = dbscan_1d(&finite, cfg.dbscan_eps, min_pts);
    let n_ran = ran.len();
    GroupSummary {
        method,
        w_true: group.first().map_or(f64::NAN, |r| r.w_true),
        trials: group.len(),
        skipped: group.len() - n_ran,
        successes,
        success_rate: if n_ran == 0 {
            0.0
        } else {
            successes as f64 / n_ran as f64
        },
        median_iterations: median(&mut iterations).unwrap_or(f64::NAN),
        median_elapsed: median(&mut elapsed),
        mean_error_success: (!success_errors.is_empty())
            .then(|| success_errors.iter().sum::<f64>() / success_errors.len() as f64),
        cluster_success_rate: if n_ran == 0 {
            0.0
        } else {
            clusters.largest_cluster_size as f64 / n_ran as f64
        },
        cluster_mean_error: clusters.cluster_mean_error,
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

pub fn records_csv(records: &[TrialRecord], timing: bool) -> String {
    let mut out = String::from(
        "method,group,trial,w_true,skipped,success,mean_reproj_error,iterations,inner_iterations,support,seed",
    );
    out.push_str(if timing { ",elapsed_s\n" } else { "\n" });
    for r in records {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.method.name(),
            r.group,
            r.trial,
            r.w_true,
            u8::from(r.skipped),
            u8::from(r.success),
            r.mean_reproj_error,
            r.iterations,
            r.inner_iterations,
            r.support,
            r.seed
        );
        if timing {
            let _ = write!(out, ",{}", opt(r.elapsed));
        }
        out.push('\n');
    }
    out
}

pub fn summary_csv(summaries: &[GroupSummary], timing: bool) -> String {
    let mut out = String::from(
        "method,w_true,trials,skipped,successes,success_rate,median_iterations,mean_error_success,cluster_success_rate,cluster_mean_error",
    );
    out.push_str(if timing { ",median_elapsed_s\n" } else { "\n" });
    for s in summaries {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            s.method.name(),
            s.w_true,
            s.trials,
            s.skipped,
            s.successes,
            s.success_rate,
            s.median_iterations,
            opt(s.mean_error_success),
            s.cluster_success_rate,
            opt(s.cluster_mean_error)
        );
        if timing {
            let _ = write!(out, ",{}", opt(s.median_elapsed));
        }
        out.push('\n');
    }
    out
}

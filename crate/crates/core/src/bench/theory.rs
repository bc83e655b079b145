//! Iteration-count model comparing plain RANSAC with the filtered estimator.

use serde::Serialize;

use crate::robust::required_iterations;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoryRow {
    pub w: f64,
    /// RANSAC sample size this row compares against.
    pub n: u32,
    pub k_ransac: u64,
    /// Outer iterations (single-match samples).
    pub k_hsolo_outer: u64,
    /// Inner four-point iterations on the filtered set.
    pub k_hsolo_inner: u64,
    /// `k_outer * (ln n_f + k_inner)`, comparable to `k_ransac` up to the
    /// common per-iteration O(n) scoring cost.
    pub hsolo_cost: f64,
    /// `k_ransac / hsolo_cost`; above 1 the filtered estimator is cheaper.
    pub speedup: f64,
}

/// `count` evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![lo],
        _ => (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

pub fn theory_curves(w_values: &[f64], n_values: &[u32], p: f64, n_f: usize, w_f: f64) -> Vec<TheoryRow> {
    let k_inner = required_iterations(w_f, 4, p);
    let mut rows = Vec::with_capacity(w_values.len() * n_values.len());
    for &w in w_values {
        let k_outer = required_iterations(w, 1, p);
        let hsolo_cost = k_outer as f64 * ((n_f as f64).ln() + k_inner as f64);
        for &n in n_values {
            let k_ransac = required_iterations(w, n, p);
            rows.push(TheoryRow {
                w,
                n,
                k_ransac,
                k_hsolo_outer: k_outer,
                k_hsolo_inner: k_inner,
                hsolo_cost,
                speedup: k_ransac as f64 / hsolo_cost,
            });
        }
    }
    rows
}

pub fn theory_csv(rows: &[TheoryRow]) -> String {
    let mut out = String::from("w,n,k_ransac,k_hsolo_outer,k_hsolo_inner,hsolo_cost,speedup\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.w, r.n, r.k_ransac, r.k_hsolo_outer, r.k_hsolo_inner, r.hsolo_cost, r.speedup
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_inlier_ransac_cost() {
        let rows = theory_curves(&[0.03], &[4], 0.95, 21, 0.7);
        let k = rows[0].k_ransac as f64;
        assert!((3.6e6..=3.8e6).contains(&k));
        assert!(rows[0].speedup > 1000.0);
    }

    #[test]
    fn ransac_wins_near_full_inliers() {
        for w in [0.95, 0.99, 1.0] {
            let rows = theory_curves(&[w], &[4], 0.95, 21, 0.7);
            assert!(rows[0].speedup < 1.0, "w = {w}");
        }
    }

    #[test]
    fn spot_values() {
        // k_inner = ceil(ln 0.05 / ln(1 - 0.7^4)) = ceil(10.94) = 11
        // k_outer(0.5) = 5, cost = 5 * (ln 21 + 11)
        let rows = theory_curves(&[0.5], &[4], 0.95, 21, 0.7);
        assert_eq!(rows[0].k_hsolo_inner, 11);
        assert_eq!(rows[0].k_hsolo_outer, 5);
        assert!((rows[0].hsolo_cost - 5.0 * (21f64.ln() + 11.0)).abs() < 1e-12);
        // k_ransac(0.5, 4) = ceil(ln 0.05 / ln(15/16)) = ceil(46.42) = 47
        assert_eq!(rows[0].k_ransac, 47);
    }

    #[test]
    fn linspace_endpoints() {
        assert_eq!(linspace(0.1, 0.5, 5), vec![0.1, 0.2, 0.30000000000000004, 0.4, 0.5]);
        assert!(linspace(0.0, 1.0, 0).is_empty());
    }
}

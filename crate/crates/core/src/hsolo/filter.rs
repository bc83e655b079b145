//! Selecting the correspondences a coarse model explains best, and the
//! statistics used to decide whether that selection is worth pursuing.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::geometry::{Correspondence, Homography};

/// The `n_f` lowest-error correspondences under a coarse model.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredSet {
    pub indices: Vec<usize>,
    /// Ascending; same order as `indices`.
    pub errors: Vec<f64>,
    pub median_error: f64,
}

struct Ranked(f64, usize);

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Ranked {}
impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Median of an ascending slice; mean of the middle pair for even lengths.
pub fn median_sorted(values: &[f64]) -> f64 {
    let n = values.len();
    if n == 0 {
        return f64::INFINITY;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Keeps the `n_f` smallest reprojection errors with a bounded max-heap.
/// Ties go to the lower pool index; degenerate projections rank last.
pub fn filter_by_model(h: &Homography, pool: &[Correspondence], n_f: usize) -> FilteredSet {
    let cap = n_f.min(pool.len());
    let mut heap = BinaryHeap::with_capacity(cap + 1);
    for (i, c) in pool.iter().enumerate() {
        let entry = Ranked(h.scoring_error(c), i);
        if heap.len() < cap {
            heap.push(entry);
        } else if let Some(worst) = heap.peek() {
            if entry < *worst {
                heap.pop();
                heap.push(entry);
            }
        }
    }
    let (errors, indices): (Vec<f64>, Vec<usize>) =
        heap.into_sorted_vec().into_iter().map(|r| (r.0, r.1)).unzip();
    let median_error = median_sorted(&errors);
    FilteredSet {
        indices,
        errors,
        median_error,
    }
}

/// Whether a filtered set is promising enough for the inner RANSAC.
pub fn median_gate(fs: &FilteredSet, epsilon_r: f64) -> bool {
    fs.median_error <= epsilon_r
}

/// Percentile of ascending data with linear interpolation between order
/// statistics (`q` in `[0, 1]`).
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Upper fence `Q3 + 3 (Q3 - Q1)` of an error sample, a data-driven choice
/// for the median gate threshold.
pub fn estimate_epsilon_r(errors: &[f64]) -> Result<f64> {
    if errors.len() < 4 {
        return Err(Error::InsufficientData {
            needed: 4,
            got: errors.len(),
        });
    }
    if errors.iter().any(|e| !e.is_finite()) {
        return Err(Error::NonFinite("error sample"));
    }
    let mut sorted = errors.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = percentile_sorted(&sorted, 0.25);
    let q3 = percentile_sorted(&sorted, 0.75);
    Ok(q3 + 3.0 * (q3 - q1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point2;
    use proptest::prelude::*;

    fn pair(u: f64, v: f64, du: f64) -> Correspondence {
        Correspondence::from_points(Point2::new(u, v), Point2::new(u + du, v)).unwrap()
    }

    #[test]
    fn picks_exact_matches() {
        let mut pool: Vec<_> = (0..20).map(|i| pair(i as f64, 0.0, 3.0 + i as f64)).collect();
        for (k, i) in [2usize, 5, 11, 17, 19].iter().enumerate() {
            pool[*i] = pair(k as f64, 1.0, 0.0);
        }
        let fs = filter_by_model(&Homography::identity(), &pool, 5);
        assert_eq!(fs.indices, vec![2, 5, 11, 17, 19]);
        assert!(fs.errors.iter().all(|&e| e == 0.0));
        assert_eq!(fs.median_error, 0.0);
    }

    #[test]
    fn oversized_request_returns_everything_sorted() {
        let pool: Vec<_> = [4.0, 1.0, 3.0, 2.0].iter().map(|&d| pair(0.0, 0.0, d)).collect();
        let fs = filter_by_model(&Homography::identity(), &pool, 10);
        assert_eq!(fs.indices, vec![1, 3, 2, 0]);
        assert_eq!(fs.errors, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(fs.median_error, 2.5);
    }

    #[test]
    fn ties_prefer_lower_index() {
        let pool: Vec<_> = (0..6).map(|_| pair(0.0, 0.0, 1.0)).collect();
        let fs = filter_by_model(&Homography::identity(), &pool, 3);
        assert_eq!(fs.indices, vec![0, 1, 2]);
    }

    #[test]
    fn gate_examples() {
        let set = |errors: Vec<f64>| FilteredSet {
            indices: (0..errors.len()).collect(),
            median_error: median_sorted(&errors),
            errors,
        };
        assert!(median_gate(&set(vec![0.0; 21]), 20.0));
        assert!(!median_gate(&set(vec![100.0; 21]), 20.0));
        let ramp = set((1..=21).map(f64::from).collect());
        assert_eq!(ramp.median_error, 11.0);
        assert!(median_gate(&ramp, 20.0));
        assert!(!median_gate(&ramp, 10.0));
    }

    #[test]
    fn epsilon_r_examples() {
        assert_eq!(estimate_epsilon_r(&[5.0; 4]).unwrap(), 5.0);
        assert_eq!(estimate_epsilon_r(&[0.0, 1.0, 2.0, 3.0]).unwrap(), 6.75);
        // Q1 = 1.75, Q3 = 27.25
        let e = estimate_epsilon_r(&[1.0, 2.0, 3.0, 100.0]).unwrap();
        assert!((e - (27.25 + 3.0 * 25.5)).abs() < 1e-12);
        assert!(matches!(
            estimate_epsilon_r(&[1.0, 2.0, 3.0]),
            Err(Error::InsufficientData { needed: 4, got: 3 })
        ));
    }

    proptest! {
        #[test]
        fn matches_full_sort(
            shifts in prop::collection::vec(0.0f64..50.0, 1..80),
            n_f in 1usize..30,
        ) {
            let pool: Vec<_> = shifts.iter().enumerate()
                .map(|(i, &d)| pair(i as f64, 0.0, (d * 4.0).round() / 4.0))
                .collect();
            let fs = filter_by_model(&Homography::identity(), &pool, n_f);
            let mut all: Vec<(f64, usize)> = pool.iter().enumerate()
                .map(|(i, c)| (Homography::identity().scoring_error(c), i)).collect();
            all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let expected: Vec<usize> = all.iter().take(n_f).map(|x| x.1).collect();
            prop_assert_eq!(fs.indices, expected);
        }
    }
}

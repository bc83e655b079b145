//! Density clustering of scalar values (per-trial mean errors).

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterResult {
    /// Cluster id per input value (ids ascend with value), `None` for noise.
    pub labels: Vec<Option<usize>>,
    pub largest_cluster_size: usize,
    pub success_rate: f64,
    /// Mean of the values in the largest cluster; `None` if all are noise.
    pub cluster_mean_error: Option<f64>,
}

/// DBSCAN on the real line.
///
/// A value is a core point when at least `min_pts` values (itself included)
/// lie within `eps`. Cores chain into clusters through gaps of at most
/// `eps`; a non-core value within `eps` of a core joins the nearest core's
/// cluster, preferring the lower one on a tie. The largest cluster is
/// taken to hold the successful trials, with ties going to the cluster with
/// the smaller mean.
pub fn dbscan_1d(values: &[f64], eps: f64, min_pts: usize) -> ClusterResult {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();

    // Neighbourhood sizes with two pointers over the sorted values.
    let mut core = vec![false; n];
    let (mut lo, mut hi) = (0, 0);
    for i in 0..n {
        while sorted[i] - sorted[lo] > eps {
            lo += 1;
        }
        while hi < n && sorted[hi] - sorted[i] <= eps {
            hi += 1;
        }
        core[i] = hi - lo >= min_pts;
    }

    let mut sorted_labels: Vec<Option<usize>> = vec![None; n];
    let mut next = 0;
    let mut prev_core: Option<usize> = None;
    for i in 0..n {
        if !core[i] {
            continue;
        }
        let id = match prev_core {
            Some(p) if sorted[i] - sorted[p] <= eps => sorted_labels[p].unwrap(),
            _ => {
                next += 1;
                next - 1
            }
        };
        sorted_labels[i] = Some(id);
        prev_core = Some(i);
    }

    // Border points: nearest core on either side.
    let mut left: Option<usize> = None;
    let mut left_of = vec![None; n];
    for i in 0..n {
        if core[i] {
            left = Some(i);
        }
        left_of[i] = left;
    }
    let mut right: Option<usize> = None;
    for i in (0..n).rev() {
        if core[i] {
            right = Some(i);
            continue;
        }
        let dl = left_of[i].map(|l| sorted[i] - sorted[l]).filter(|d| *d <= eps);
        let dr = right.map(|r| sorted[r] - sorted[i]).filter(|d| *d <= eps);
        sorted_labels[i] = match (dl, dr) {
            (Some(a), Some(b)) if b < a => sorted_labels[right.unwrap()],
            (Some(_), _) => sorted_labels[left_of[i].unwrap()],
            (None, Some(_)) => sorted_labels[right.unwrap()],
            (None, None) => None,
        };
    }

    let mut labels = vec![None; n];
    for (k, &i) in order.iter().enumerate() {
        labels[i] = sorted_labels[k];
    }

    let mut sizes = vec![0usize; next];
    let mut sums = vec![0.0f64; next];
    for (k, l) in sorted_labels.iter().enumerate() {
        if let Some(id) = l {
            sizes[*id] += 1;
            sums[*id] += sorted[k];
        }
    }
    let best = (0..next).max_by(|&a, &b| {
        sizes[a]
            .cmp(&sizes[b])
            .then((sums[b] / sizes[b] as f64).total_cmp(&(sums[a] / sizes[a] as f64)))
    });
    let (largest, mean) = match best {
        Some(id) => (sizes[id], Some(sums[id] / sizes[id] as f64)),
        None => (0, None),
    };
    ClusterResult {
        labels,
        largest_cluster_size: largest,
        success_rate: if n == 0 { 0.0 } else { largest as f64 / n as f64 },
        cluster_mean_error: mean,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_groups() {
        let r = dbscan_1d(&[1.0, 1.1, 1.2, 50.0, 51.0], 0.5, 2);
        assert_eq!(r.labels, vec![Some(0), Some(0), Some(0), None, None]);
        assert_eq!(r.largest_cluster_size, 3);
        assert!((r.success_rate - 0.6).abs() < 1e-15);
        assert!((r.cluster_mean_error.unwrap() - 1.1).abs() < 1e-12);

        let r = dbscan_1d(&[1.0, 1.1, 1.2, 50.0, 50.4], 0.5, 2);
        assert_eq!(r.labels[3..], [Some(1), Some(1)]);
    }

    #[test]
    fn identical_values_form_one_cluster() {
        let r = dbscan_1d(&[0.7; 12], 0.5, 5);
        assert_eq!(r.largest_cluster_size, 12);
        assert_eq!(r.success_rate, 1.0);
    }

    #[test]
    fn sparse_values_are_noise() {
        let r = dbscan_1d(&[0.0, 1.0, 2.0, 3.0], 0.5, 2);
        assert!(r.labels.iter().all(Option::is_none));
        assert_eq!(r.success_rate, 0.0);
        assert_eq!(r.cluster_mean_error, None);
    }

    #[test]
    fn size_tie_prefers_lower_mean() {
        let r = dbscan_1d(&[9.0, 9.1, 1.0, 1.1], 0.5, 2);
        assert_eq!(r.cluster_mean_error.map(|m| (m * 100.0).round()), Some(105.0));
    }

    #[test]
    fn border_points_join_nearest_core() {
        // 0.0 and 0.4 are cores (min_pts 3 via 0.2); 0.85 is a border of 0.4 only
        let r = dbscan_1d(&[0.0, 0.2, 0.4, 0.85], 0.5, 3);
        assert_eq!(r.labels, vec![Some(0); 4]);
    }
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calib::CalibrationVector;
use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 100;

/// Non-negative per-field weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    pub w: Vec<f64>,
}

/// `|Pearson(C[:, j], p)|` per column; 0 when either side has no spread.
pub fn correlation_weights(c: &[Vec<f64>], p: &[f64]) -> Result<WeightVector> {
    let n = c.len();
    if n < 2 {
        return Err(Error::Clustering(format!("need at least 2 samples, got {n}")));
    }
    if p.len() != n {
        return Err(Error::Dimension(format!("{n} calibration rows but {} accuracies", p.len())));
    }
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::Clustering("accuracies must be finite".into()));
    }
    let d = c[0].len();
    if c.iter().any(|row| row.len() != d) {
        return Err(Error::Dimension("calibration rows differ in length".into()));
    }
    let p_const = p.iter().all(|&y| y == p[0]);
    let mp = p.iter().sum::<f64>() / n as f64;
    let syy: f64 = p.iter().map(|y| (y - mp).powi(2)).sum();
    let w = (0..d)
        .map(|j| {
            if p_const || c.iter().all(|r| r[j] == c[0][j]) {
                return 0.0;
            }
            let mx = c.iter().map(|r| r[j]).sum::<f64>() / n as f64;
            let (mut sxx, mut sxy) = (0.0, 0.0);
            for (r, y) in c.iter().zip(p) {
                let dx = r[j] - mx;
                sxx += dx * dx;
                sxy += dx * (y - mp);
            }
            let denom = (sxx * syy).sqrt();
            if denom > 0.0 {
                (sxy / denom).abs().min(1.0)
            } else {
                0.0
            }
        })
        .collect();
    Ok(WeightVector { w })
}

pub(crate) fn wl1(a: &[f64], b: &[f64], w: &[f64]) -> f64 {
    a.iter().zip(b).zip(w).map(|((x, y), w)| w * (x - y).abs()).sum()
}

/// `Σ_j w_j |a_j − b_j|`.
pub fn weighted_distance(a: &CalibrationVector, b: &CalibrationVector, w: &WeightVector) -> Result<f64> {
    if !a.same_schema(b) {
        return Err(Error::SchemaMismatch("calibration vectors use different schemas".into()));
    }
    if w.w.len() != a.dim() {
        return Err(Error::SchemaMismatch(format!(
            "{} weights for {} fields",
            w.w.len(),
            a.dim()
        )));
    }
    Ok(wl1(&a.values, &b.values, &w.w))
}

/// Result of weighted L1 k-medians.
#[derive(Debug, Clone, PartialEq)]
pub struct KMedians {
    pub centroids: Vec<Vec<f64>>,
    pub assignment: Vec<usize>,
    /// Objective after every assignment step.
    pub wsae_trace: Vec<f64>,
    pub iterations: usize,
}

impl KMedians {
    pub fn wsae(&self) -> f64 {
        *self.wsae_trace.last().expect("non-empty trace")
    }
}

fn nearest(x: &[f64], centroids: &[Vec<f64>], w: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = wl1(x, c, w);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Minimizes `Σ_i Σ_{c ∈ g_i} Σ_j w_j |r_ij − c_j|` with k-means++ style
/// seeding (probability proportional to the weighted L1 distance),
/// nearest-centroid assignment (ties to the lowest index) and
/// per-dimension median updates. Empty clusters move to the point farthest
/// from its centroid when that distance is positive.
pub fn kmedians(points: &[Vec<f64>], w: &[f64], k: usize, seed: u64) -> Result<KMedians> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::Clustering(format!("K = {k} must be in 1..={n}")));
    }
    let d = w.len();
    if points.iter().any(|p| p.len() != d) {
        return Err(Error::Dimension("points and weights differ in length".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = vec![rng.random_range(0..n)];
    let mut dist: Vec<f64> = points.iter().map(|p| wl1(p, &points[chosen[0]], w)).collect();
    while chosen.len() < k {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &di) in dist.iter().enumerate() {
                if di > 0.0 {
                    pick = Some(i);
                    if r < di {
                        break;
                    }
                    r -= di;
                }
            }
            pick.expect("positive total has a positive entry")
        } else {
            let rest: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            rest[rng.random_range(0..rest.len())]
        };
        chosen.push(pick);
        for (di, p) in dist.iter_mut().zip(points) {
            *di = di.min(wl1(p, &points[pick], w));
        }
    }
    let mut centroids: Vec<Vec<f64>> = chosen.iter().map(|&i| points[i].clone()).collect();

    let assign = |centroids: &[Vec<f64>]| -> (Vec<usize>, Vec<f64>) {
        points.iter().map(|p| nearest(p, centroids, w)).unzip()
    };
    let (mut assignment, mut costs) = assign(&centroids);
    let mut trace = vec![costs.iter().sum::<f64>()];
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut column = Vec::with_capacity(n);
        for (ci, c) in centroids.iter_mut().enumerate() {
            let members: Vec<usize> = (0..n).filter(|&i| assignment[i] == ci).collect();
            if members.is_empty() {
                continue;
            }
            for j in 0..d {
                column.clear();
                column.extend(members.iter().map(|&i| points[i][j]));
                c[j] = median(&mut column);
            }
        }
        // distances to the updated centroids under the current assignment
        for (i, p) in points.iter().enumerate() {
            costs[i] = wl1(p, &centroids[assignment[i]], w);
        }
        for ci in 0..k {
            if assignment.contains(&ci) {
                continue;
            }
            let (far, &far_d) = costs
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
                .expect("n ≥ 1");
            if far_d > 0.0 {
                centroids[ci] = points[far].clone();
                assignment[far] = ci;
                costs[far] = 0.0;
            }
        }
        let (next, next_costs) = assign(&centroids);
        trace.push(next_costs.iter().sum());
        let stable = next == assignment;
        assignment = next;
        costs = next_costs;
        if stable {
            break;
        }
    }
    Ok(KMedians {
        centroids,
        assignment,
        wsae_trace: trace,
        iterations,
    })
}

/// Clustering of calibration days with per-cluster statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    pub k: usize,
    pub centroids: Vec<CalibrationVector>,
    pub assignment: Vec<usize>,
    pub mean_acc: Vec<f64>,
    pub mean_dist: Vec<f64>,
    pub weights: WeightVector,
    pub wsae_trace: Vec<f64>,
}

/// Weights from `correlation_weights(vectors, p)`, then k-medians.
pub fn weighted_kmeans(vectors: &[CalibrationVector], p: &[f64], k: usize, seed: u64) -> Result<ClusterModel> {
    let first = vectors
        .first()
        .ok_or_else(|| Error::Clustering("no calibration vectors".into()))?;
    if let Some(v) = vectors.iter().find(|v| !v.same_schema(first)) {
        return Err(Error::SchemaMismatch(format!("vector of dim {} differs in schema", v.dim())));
    }
    let rows: Vec<Vec<f64>> = vectors.iter().map(|v| v.values.clone()).collect();
    let weights = correlation_weights(&rows, p)?;
    let km = kmedians(&rows, &weights.w, k, seed)?;
    let centroids: Vec<CalibrationVector> = km
        .centroids
        .iter()
        .map(|c| CalibrationVector {
            values: c.clone(),
            schema: first.schema.clone(),
        })
        .collect();
    let (mean_acc, mean_dist) = cluster_stats(&rows, p, &km.assignment, &km.centroids, &weights.w);
    Ok(ClusterModel {
        k,
        centroids,
        assignment: km.assignment,
        mean_acc,
        mean_dist,
        weights,
        wsae_trace: km.wsae_trace,
    })
}

/// Mean accuracy and mean weighted distance per cluster (0 when empty).
pub(crate) fn cluster_stats(
    rows: &[Vec<f64>],
    p: &[f64],
    assignment: &[usize],
    centroids: &[Vec<f64>],
    w: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let k = centroids.len();
    let mut acc = vec![0.0; k];
    let mut dist = vec![0.0; k];
    let mut count = vec![0usize; k];
    for ((r, &a), &c) in rows.iter().zip(p).zip(assignment) {
        acc[c] += a;
        dist[c] += wl1(r, &centroids[c], w);
        count[c] += 1;
    }
    for c in 0..k {
        if count[c] > 0 {
            acc[c] /= count[c] as f64;
            dist[c] /= count[c] as f64;
        }
    }
    (acc, dist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calib::Schema;
    use std::sync::Arc;

    #[test]
    fn correlation_examples() {
        let p = vec![0.9, 0.5, 0.7, 0.2, 0.6];
        let c: Vec<Vec<f64>> = p.iter().map(|&y| vec![y, 3.0, -2.0 * y + 1.0]).collect();
        let w = correlation_weights(&c, &p).unwrap().w;
        assert_eq!(w[0], 1.0);
        assert_eq!(w[1], 0.0);
        assert!((w[2] - 1.0).abs() < 1e-12);
        assert!(correlation_weights(&c[..1], &p[..1]).is_err());
    }

    #[test]
    fn negative_correlation_with_tiny_noise() {
        let p: Vec<f64> = (0..10).map(|i| 0.5 + 0.03 * i as f64).collect();
        let c: Vec<Vec<f64>> = p
            .iter()
            .enumerate()
            .map(|(i, y)| vec![-y + 1e-9 * ((i * 7 % 5) as f64)])
            .collect();
        let w = correlation_weights(&c, &p).unwrap().w;
        assert!((w[0] - 1.0).abs() < 1e-6);
    }

    fn vector(values: Vec<f64>, schema: &Arc<Schema>) -> CalibrationVector {
        CalibrationVector {
            values,
            schema: schema.clone(),
        }
    }

    #[test]
    fn distance_examples() {
        let schema = Arc::new(Schema {
            labels: vec![crate::calib::Label::Sq(0), crate::calib::Label::Sq(1)],
        });
        let a = vector(vec![0.0, 0.0], &schema);
        let b = vector(vec![1.0, 1.0], &schema);
        let w = WeightVector { w: vec![1.0, 2.0] };
        assert_eq!(weighted_distance(&a, &b, &w).unwrap(), 3.0);
        assert_eq!(weighted_distance(&a, &a, &w).unwrap(), 0.0);
        let zero = WeightVector { w: vec![0.0, 0.0] };
        assert_eq!(weighted_distance(&a, &b, &zero).unwrap(), 0.0);
        let other = Arc::new(Schema {
            labels: vec![crate::calib::Label::Sq(0), crate::calib::Label::Sq(2)],
        });
        assert!(weighted_distance(&a, &vector(vec![0.0, 0.0], &other), &w).is_err());
    }

    #[test]
    fn k_equals_n_is_exact() {
        let pts: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let km = kmedians(&pts, &[1.0, 0.5], 6, 3).unwrap();
        assert_eq!(km.wsae(), 0.0);
        let mut seen = km.assignment.clone();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 6);
    }

    #[test]
    fn identical_points_collapse() {
        let pts = vec![vec![0.5, 0.1]; 5];
        let km = kmedians(&pts, &[1.0, 1.0], 3, 0).unwrap();
        assert!(km.assignment.iter().all(|&a| a == 0));
        assert_eq!(km.wsae(), 0.0);
    }

    #[test]
    fn k_out_of_range() {
        assert!(kmedians(&[vec![1.0]], &[1.0], 2, 0).is_err());
        assert!(kmedians(&[vec![1.0]], &[1.0], 0, 0).is_err());
    }

    #[test]
    fn even_median_averages_middle() {
        assert_eq!(median(&mut [4.0, 1.0, 3.0, 2.0]), 2.5);
        assert_eq!(median(&mut [4.0, 1.0, 3.0]), 3.0);
    }
}

//! Seeded k-means (k-means++ seeding, Lloyd iterations) on 2-D points.

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    pub centroids: Vec<[f64; 2]>,
    /// Cluster index of every input point.
    pub assignments: Vec<usize>,
    pub iterations: usize,
}

fn dist2(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

fn nearest(p: &[f64; 2], centroids: &[[f64; 2]]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centroids.iter().enumerate() {
        let d = dist2(p, c);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

fn plus_plus_init(points: &[[f64; 2]], k: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; 2]> {
    let mut centroids = vec![points[rng.gen_range(0..points.len())]];
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        if total <= 0.0 {
            warn!(
                "only {} distinct point(s) for {k} clusters; using fewer clusters",
                centroids.len()
            );
            break;
        }
        let mut target = rng.gen::<f64>() * total;
        let mut chosen = points.len() - 1;
        for (i, d) in d2.iter().enumerate() {
            if target < *d {
                chosen = i;
                break;
            }
            target -= d;
        }
        let c = points[chosen];
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(dist2(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Clusters `points` into at most `k` groups. Clusters that lose all their
/// members are dropped with a warning, so fewer than `k` centroids may come
/// back.
pub fn kmeans(points: &[[f64; 2]], k: usize, seed: u64, max_iters: usize) -> Result<KMeans> {
    if k == 0 {
        return Err(Error::InvalidArgument("cluster count must be >= 1".into()));
    }
    if points.is_empty() {
        return Err(Error::InvalidArgument("k-means needs at least one point".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_init(points, k, &mut rng);
    let mut assignments: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
    let mut iterations = 0;

    while iterations < max_iters {
        iterations += 1;
        let mut sums = vec![[0.0f64; 3]; centroids.len()];
        for (p, a) in points.iter().zip(&assignments) {
            sums[*a][0] += p[0];
            sums[*a][1] += p[1];
            sums[*a][2] += 1.0;
        }
        let before = centroids.len();
        centroids = sums
            .iter()
            .filter(|s| s[2] > 0.0)
            .map(|s| [s[0] / s[2], s[1] / s[2]])
            .collect();
        if centroids.len() < before {
            warn!(
                "dropped {} empty cluster(s); continuing with {}",
                before - centroids.len(),
                centroids.len()
            );
        }
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
        let converged = next == assignments && centroids.len() == before;
        assignments = next;
        if converged {
            break;
        }
    }

    Ok(KMeans {
        centroids,
        assignments,
        iterations,
    })
}

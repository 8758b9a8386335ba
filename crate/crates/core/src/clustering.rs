//! Per-beam user clustering: the partition type, the two feature spaces
//! users can be clustered in, and the four grouping strategies the
//! simulator compares.
//!
//! Tie-breaking is deterministic everywhere — equal distances resolve to
//! the lowest user index — so every algorithm is a pure function of its
//! inputs (plus, where applicable, an injected RNG or reference picker).
//! Clusters are recorded in creation order and that order is meaningful
//! downstream: frame scheduling pairs the c-th cluster of every beam.
//!
//! The fully degenerate request (every user its own cluster, i.e. a
//! target size of one or a cluster count equal to the user count) has
//! exactly one valid answer, so all covering algorithms return it in
//! canonical user-index order without consuming randomness.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelVector;
use crate::error::{Error, Result};
use crate::geometry::{tangent_offset_km, GeoPos};

// ---------- Identifiers ----------

/// The four grouping strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// One cluster per beam around a random reference user; the remaining
    /// users are left unserved, making this an optimistic bound.
    UpperBound,
    /// Repeatedly pick a random reference among unserved users and group
    /// it with its nearest unserved neighbours.
    Random,
    /// Like `Random`, but the reference is the unserved user farthest
    /// from the barycentre of the unserved set, so outliers go first.
    MaxDist,
    /// Standard k-means++ seeding followed by Lloyd refinement; cluster
    /// sizes are variable with a controlled average.
    KMeansPP,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Algorithm::UpperBound => "upperbound",
            Algorithm::Random => "random",
            Algorithm::MaxDist => "maxdist",
            Algorithm::KMeansPP => "kmeanspp",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "upperbound" => Ok(Algorithm::UpperBound),
            "random" => Ok(Algorithm::Random),
            "maxdist" => Ok(Algorithm::MaxDist),
            "kmeanspp" => Ok(Algorithm::KMeansPP),
            other => Err(Error::config(format!(
                "unknown clustering algorithm `{other}` (expected upperbound|random|maxdist|kmeanspp)"
            ))),
        }
    }
}

/// Space in which user similarity is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureMetric {
    /// Tangent-plane east/north offsets from the beam centre, km.
    Euclidean,
    /// Concatenated real and imaginary parts of the channel coefficients.
    Channel,
}

impl std::fmt::Display for FeatureMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FeatureMetric::Euclidean => "euclidean",
            FeatureMetric::Channel => "channel",
        })
    }
}

impl std::str::FromStr for FeatureMetric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(FeatureMetric::Euclidean),
            "channel" => Ok(FeatureMetric::Channel),
            other => Err(Error::config(format!(
                "unknown clustering metric `{other}` (expected euclidean|channel)"
            ))),
        }
    }
}

// ---------- Features ----------

/// Builds the per-user feature vectors for one beam.
///
/// The euclidean space is two-dimensional (east/north km relative to the
/// beam centre); the channel space has dimension `2 * n_feeds` (all real
/// parts followed by all imaginary parts). With `normalize` set, every
/// dimension is scaled to unit variance over the beam's users (constant
/// dimensions are left alone).
pub fn feature_vectors(
    metric: FeatureMetric,
    users: &[GeoPos],
    beam_center: GeoPos,
    channels: &[ChannelVector],
    normalize: bool,
) -> Vec<Vec<f64>> {
    let mut features: Vec<Vec<f64>> = match metric {
        FeatureMetric::Euclidean => users
            .iter()
            .map(|&u| tangent_offset_km(beam_center, u).to_vec())
            .collect(),
        FeatureMetric::Channel => {
            assert_eq!(
                channels.len(),
                users.len(),
                "channel metric needs one coefficient row per user"
            );
            channels
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|c| c.re)
                        .chain(row.iter().map(|c| c.im))
                        .collect()
                })
                .collect()
        }
    };
    if normalize && !features.is_empty() {
        let dim = features[0].len();
        for d in 0..dim {
            let col: Vec<f64> = features.iter().map(|f| f[d]).collect();
            let sd = crate::math::std_population(&col);
            if sd > 0.0 {
                for f in &mut features {
                    f[d] /= sd;
                }
            }
        }
    }
    features
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Component-wise mean of the selected feature vectors.
pub fn barycentre(features: &[Vec<f64>], indices: &[usize]) -> Result<Vec<f64>> {
    if indices.is_empty() {
        return Err(Error::numerical("barycentre of an empty set"));
    }
    let dim = features[indices[0]].len();
    let mut mean = vec![0.0; dim];
    for &i in indices {
        for (m, v) in mean.iter_mut().zip(&features[i]) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= indices.len() as f64;
    }
    Ok(mean)
}

// ---------- Partitions ----------

/// A beam's users grouped into clusters of local user indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub algorithm: Algorithm,
    /// Clusters in creation order; members in selection order.
    pub clusters: Vec<Vec<usize>>,
    /// True when the algorithm deliberately serves only part of the users
    /// (the optimistic single-cluster bound).
    pub partial: bool,
    /// False only when iterative refinement stopped at its iteration cap.
    pub converged: bool,
}

impl Partition {
    pub fn n_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        self.clusters.iter().map(Vec::len).collect()
    }

    /// Checks the partition contract: clusters non-empty and pairwise
    /// disjoint, indices in range, and — unless `partial` — every user in
    /// exactly one cluster.
    pub fn validate(&self, n_users: usize) -> Result<()> {
        let mut seen = vec![false; n_users];
        for (c, cluster) in self.clusters.iter().enumerate() {
            if cluster.is_empty() {
                return Err(Error::numerical(format!("cluster {c} is empty")));
            }
            for &u in cluster {
                if u >= n_users {
                    return Err(Error::numerical(format!(
                        "cluster {c} contains out-of-range user {u}"
                    )));
                }
                if seen[u] {
                    return Err(Error::numerical(format!(
                        "user {u} appears in more than one cluster"
                    )));
                }
                seen[u] = true;
            }
        }
        if !self.partial {
            if let Some(missing) = seen.iter().position(|&s| !s) {
                return Err(Error::numerical(format!(
                    "user {missing} is not covered by any cluster"
                )));
            }
        }
        Ok(())
    }
}

/// Sum of squared distances of every member to its cluster mean.
///
/// Only defined for covering partitions; the partial single-cluster bound
/// is rejected.
pub fn sse_cost(features: &[Vec<f64>], partition: &Partition) -> Result<f64> {
    if partition.partial {
        return Err(Error::numerical(
            "sum-of-squares cost is undefined for a partial partition",
        ));
    }
    let mut total = 0.0;
    for cluster in &partition.clusters {
        let centre = barycentre(features, cluster)?;
        for &u in cluster {
            total += sq_dist(&features[u], &centre);
        }
    }
    Ok(total)
}

/// All-singletons partition in user-index order — the unique covering
/// partition with one user per cluster.
fn singleton_partition(algorithm: Algorithm, n: usize) -> Partition {
    Partition {
        algorithm,
        clusters: (0..n).map(|u| vec![u]).collect(),
        partial: false,
        converged: true,
    }
}

fn check_nonempty_and_k(features: &[Vec<f64>], k: usize) -> Result<()> {
    if features.is_empty() {
        return Err(Error::numerical("cannot cluster zero users"));
    }
    if k == 0 {
        return Err(Error::config("cluster size must be at least 1"));
    }
    Ok(())
}

/// Indices of the reference user plus its `take - 1` nearest candidates,
/// ties broken by lowest index; the reference comes first.
fn nearest_group(features: &[Vec<f64>], candidates: &[usize], q: usize, take: usize) -> Vec<usize> {
    let mut others: Vec<(f64, usize)> = candidates
        .iter()
        .filter(|&&u| u != q)
        .map(|&u| (sq_dist(&features[u], &features[q]), u))
        .collect();
    others.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut cluster = vec![q];
    cluster.extend(others.iter().take(take - 1).map(|&(_, u)| u));
    cluster
}

// ---------- Upper-bound strategy ----------

/// One cluster per beam: a random reference user and its `k - 1` nearest
/// neighbours. Everyone else stays unserved (`partial` is set).
pub fn cluster_upperbound(
    features: &[Vec<f64>],
    k: usize,
    rng: &mut impl Rng,
) -> Result<Partition> {
    check_nonempty_and_k(features, k)?;
    let q = rng.gen_range(0..features.len());
    cluster_upperbound_at(features, k, q)
}

/// Deterministic core of [`cluster_upperbound`] with the reference user
/// fixed, used directly by trace tests.
pub fn cluster_upperbound_at(features: &[Vec<f64>], k: usize, q: usize) -> Result<Partition> {
    check_nonempty_and_k(features, k)?;
    if q >= features.len() {
        return Err(Error::config(format!(
            "reference user {q} out of range ({} users)",
            features.len()
        )));
    }
    let all: Vec<usize> = (0..features.len()).collect();
    let take = k.min(features.len());
    Ok(Partition {
        algorithm: Algorithm::UpperBound,
        clusters: vec![nearest_group(features, &all, q, take)],
        partial: true,
        converged: true,
    })
}

// ---------- Random-reference strategy ----------

/// Covering fixed-size clustering with uniformly random reference picks.
///
/// While unserved users remain: pick a reference uniformly among them,
/// group it with its `k - 1` nearest unserved users, remove the group.
/// All clusters have `k` members except possibly the last, which takes
/// the remainder.
pub fn cluster_random(features: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> Result<Partition> {
    cluster_random_with(features, k, |remaining| rng.gen_range(0..remaining.len()))
}

/// [`cluster_random`] with the reference choice injected: `picker`
/// receives the unserved users (ascending index order) and returns a
/// position in that slice. Trace tests use this to force pick sequences.
pub fn cluster_random_with(
    features: &[Vec<f64>],
    k: usize,
    mut picker: impl FnMut(&[usize]) -> usize,
) -> Result<Partition> {
    check_nonempty_and_k(features, k)?;
    if k == 1 {
        return Ok(singleton_partition(Algorithm::Random, features.len()));
    }
    let mut remaining: Vec<usize> = (0..features.len()).collect();
    let mut clusters = Vec::new();
    while !remaining.is_empty() {
        let pos = picker(&remaining);
        let q = remaining[pos];
        let take = k.min(remaining.len());
        let cluster = nearest_group(features, &remaining, q, take);
        remaining.retain(|u| !cluster.contains(u));
        clusters.push(cluster);
    }
    Ok(Partition {
        algorithm: Algorithm::Random,
        clusters,
        partial: false,
        converged: true,
    })
}

// ---------- Farthest-reference strategy ----------

/// Covering fixed-size clustering that serves outliers first: the
/// reference is always the unserved user farthest from the barycentre of
/// the unserved set (ties to the lowest index). Fully deterministic.
pub fn cluster_maxdist(features: &[Vec<f64>], k: usize) -> Result<Partition> {
    check_nonempty_and_k(features, k)?;
    if k == 1 {
        return Ok(singleton_partition(Algorithm::MaxDist, features.len()));
    }
    let mut remaining: Vec<usize> = (0..features.len()).collect();
    let mut clusters = Vec::new();
    while !remaining.is_empty() {
        let centre = barycentre(features, &remaining)?;
        let mut q = remaining[0];
        let mut best = -1.0;
        for &u in &remaining {
            let d = sq_dist(&features[u], &centre);
            if d > best {
                best = d;
                q = u;
            }
        }
        let take = k.min(remaining.len());
        let cluster = nearest_group(features, &remaining, q, take);
        remaining.retain(|u| !cluster.contains(u));
        clusters.push(cluster);
    }
    Ok(Partition {
        algorithm: Algorithm::MaxDist,
        clusters,
        partial: false,
        converged: true,
    })
}

// ---------- k-means++ strategy ----------

/// Lloyd-refinement controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KmeansParams {
    /// Refinement stops when no centroid moves farther than this.
    pub tol: f64,
    /// Hard cap on Lloyd iterations; hitting it clears `converged`.
    pub max_iter: usize,
}

impl Default for KmeansParams {
    fn default() -> Self {
        KmeansParams {
            tol: 1e-6,
            max_iter: 300,
        }
    }
}

/// Number of clusters the k-means strategy aims for at target average
/// size `k`: `floor(n / k)`, never below one.
pub fn kmeans_cluster_count(n_users: usize, k: usize) -> usize {
    (n_users / k.max(1)).max(1)
}

/// k-means++ seeding: the first centroid is uniform over the users, each
/// further centroid is drawn among the not-yet-chosen users with
/// probability proportional to the squared distance to the nearest
/// already-chosen centroid. Returns the chosen user indices in order.
pub fn kmeanspp_init(
    features: &[Vec<f64>],
    n_clusters: usize,
    rng: &mut impl Rng,
) -> Result<Vec<usize>> {
    let n = features.len();
    if n == 0 {
        return Err(Error::numerical("cannot seed centroids over zero users"));
    }
    if n_clusters == 0 || n_clusters > n {
        return Err(Error::config(format!(
            "centroid count must be in 1..={n}, got {n_clusters}"
        )));
    }
    let mut chosen = vec![rng.gen_range(0..n)];
    let mut taken = vec![false; n];
    taken[chosen[0]] = true;
    let mut d2 = vec![f64::INFINITY; n];
    while chosen.len() < n_clusters {
        let last = *chosen.last().unwrap();
        for u in 0..n {
            if !taken[u] {
                d2[u] = d2[u].min(sq_dist(&features[u], &features[last]));
            }
        }
        let total: f64 = (0..n).filter(|&u| !taken[u]).map(|u| d2[u]).sum();
        let next = if total > 0.0 {
            // Inverse-CDF walk over the remaining users in index order.
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for u in 0..n {
                if taken[u] {
                    continue;
                }
                acc += d2[u];
                if acc > target {
                    pick = Some(u);
                    break;
                }
            }
            // Rounding can leave the walk just short; fall back to the
            // last remaining user.
            pick.unwrap_or_else(|| (0..n).rev().find(|&u| !taken[u]).unwrap())
        } else {
            // All remaining users coincide with a centroid; pick uniformly.
            let remaining: Vec<usize> = (0..n).filter(|&u| !taken[u]).collect();
            remaining[rng.gen_range(0..remaining.len())]
        };
        taken[next] = true;
        chosen.push(next);
    }
    Ok(chosen)
}

/// k-means++ clustering into `n_clusters` groups of variable size.
pub fn cluster_kmeanspp(
    features: &[Vec<f64>],
    n_clusters: usize,
    params: KmeansParams,
    rng: &mut impl Rng,
) -> Result<Partition> {
    cluster_kmeanspp_traced(features, n_clusters, params, rng).map(|(p, _)| p)
}

/// Like [`cluster_kmeanspp`] but also returns the cost after every Lloyd
/// update step, which refinement-monotonicity tests inspect.
pub fn cluster_kmeanspp_traced(
    features: &[Vec<f64>],
    n_clusters: usize,
    params: KmeansParams,
    rng: &mut impl Rng,
) -> Result<(Partition, Vec<f64>)> {
    let n = features.len();
    if n_clusters == n {
        // Unique zero-cost answer; skip seeding and refinement entirely.
        return Ok((singleton_partition(Algorithm::KMeansPP, n), vec![0.0]));
    }
    if params.max_iter == 0 {
        return Err(Error::config("refinement needs at least one iteration"));
    }
    let seeds = kmeanspp_init(features, n_clusters, rng)?;
    let dim = features[0].len();
    let mut centroids: Vec<Vec<f64>> = seeds.iter().map(|&u| features[u].clone()).collect();
    let mut assign = vec![0usize; n];
    let mut converged = false;
    let mut sse_trace = Vec::new();
    for _ in 0..params.max_iter {
        // Assignment: nearest centroid, ties to the lowest centroid index.
        let mut counts = vec![0usize; n_clusters];
        for u in 0..n {
            let mut best_c = 0;
            let mut best_d = f64::INFINITY;
            for (c, centroid) in centroids.iter().enumerate() {
                let d = sq_dist(&features[u], centroid);
                if d < best_d {
                    best_d = d;
                    best_c = c;
                }
            }
            assign[u] = best_c;
            counts[best_c] += 1;
        }
        // Repair: reseed each empty cluster at the point farthest from its
        // current centroid, never draining a singleton cluster.
        for c in 0..n_clusters {
            if counts[c] > 0 {
                continue;
            }
            let mut worst: Option<(f64, usize)> = None;
            for u in 0..n {
                if counts[assign[u]] < 2 {
                    continue;
                }
                let d = sq_dist(&features[u], &centroids[assign[u]]);
                if worst.map_or(true, |(wd, _)| d > wd) {
                    worst = Some((d, u));
                }
            }
            let (_, u) = worst.expect("a multi-member cluster always exists while one is empty");
            counts[assign[u]] -= 1;
            assign[u] = c;
            counts[c] = 1;
            centroids[c] = features[u].clone();
        }
        // Update: means of the new assignment; track the largest move.
        let mut movement: f64 = 0.0;
        let mut new_centroids = vec![vec![0.0; dim]; n_clusters];
        for u in 0..n {
            for (acc, v) in new_centroids[assign[u]].iter_mut().zip(&features[u]) {
                *acc += v;
            }
        }
        for c in 0..n_clusters {
            for v in &mut new_centroids[c] {
                *v /= counts[c] as f64;
            }
            movement = movement.max(sq_dist(&new_centroids[c], &centroids[c]).sqrt());
        }
        centroids = new_centroids;
        sse_trace.push(
            (0..n)
                .map(|u| sq_dist(&features[u], &centroids[assign[u]]))
                .sum(),
        );
        if movement < params.tol {
            converged = true;
            break;
        }
    }
    let mut clusters = vec![Vec::new(); n_clusters];
    for u in 0..n {
        clusters[assign[u]].push(u);
    }
    Ok((
        Partition {
            algorithm: Algorithm::KMeansPP,
            clusters,
            partial: false,
            converged,
        },
        sse_trace,
    ))
}

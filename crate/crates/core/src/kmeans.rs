//! Seeded multi-restart k-means and an exhaustive partition oracle.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureMatrix;
use crate::rng::{self, domain, StreamRng};

/// Largest Stirling-number search space the oracle will enumerate.
/// Admits every M ≤ 12 with k ≤ 3.
pub const DEFAULT_PARTITION_CAP: u128 = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KMeansError {
    #[error("k must be at least 1")]
    ZeroClusters,
    #[error("k = {k} exceeds the {rows} rows available")]
    TooManyClusters { k: usize, rows: usize },
    #[error("invalid k-means configuration: {0}")]
    InvalidConfig(String),
    #[error("{partitions} partitions exceed the enumeration cap of {cap}")]
    InstanceTooLarge { partitions: u128, cap: u128 },
    #[error("invalid assignment: {0}")]
    InvalidAssignment(String),
}

impl KMeansError {
    pub fn name(&self) -> &'static str {
        match self {
            KMeansError::ZeroClusters => "ZeroClusters",
            KMeansError::TooManyClusters { .. } => "TooManyClusters",
            KMeansError::InvalidConfig(_) => "InvalidConfig",
            KMeansError::InstanceTooLarge { .. } => "InstanceTooLarge",
            KMeansError::InvalidAssignment(_) => "InvalidAssignment",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub restarts: usize,
    pub max_iterations: usize,
    /// Stop once no centre moves further than this.
    pub tolerance: f64,
    pub seed: u64,
    /// Clusters smaller than this are merged into their nearest neighbour
    /// after fitting. 0 disables the repair.
    pub min_cluster_size: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            restarts: 25,
            max_iterations: 100,
            tolerance: 1e-9,
            seed: 0,
            min_cluster_size: 0,
        }
    }
}

impl KMeansConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), KMeansError> {
        if self.restarts == 0 {
            return Err(KMeansError::InvalidConfig("restarts must be at least 1".into()));
        }
        if self.max_iterations == 0 {
            return Err(KMeansError::InvalidConfig("max_iterations must be at least 1".into()));
        }
        if self.tolerance.is_nan() || self.tolerance < 0.0 {
            return Err(KMeansError::InvalidConfig("tolerance must be non-negative".into()));
        }
        Ok(())
    }
}

/// A partition of the matrix rows into `k` clusters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub k: usize,
    /// Cluster label per row, in `0..k`.
    pub assignments: Vec<usize>,
    /// Attribute-wise member means.
    pub centres: Vec<Vec<f64>>,
    pub sizes: Vec<usize>,
    /// Sum of squared Euclidean member-to-centre distances.
    pub wcss: f64,
    /// Number of undersized clusters merged away by the `min_cluster_size` repair.
    #[serde(default)]
    pub merged_clusters: usize,
}

impl Clustering {
    /// Builds a clustering from labels, with centres as member means.
    pub fn from_assignments(rows: &[Vec<f64>], assignments: Vec<usize>, k: usize) -> Result<Self, KMeansError> {
        if assignments.len() != rows.len() {
            return Err(KMeansError::InvalidAssignment(format!(
                "{} labels for {} rows",
                assignments.len(),
                rows.len()
            )));
        }
        if let Some(bad) = assignments.iter().find(|&&a| a >= k) {
            return Err(KMeansError::InvalidAssignment(format!("label {bad} outside 0..{k}")));
        }
        let (centres, sizes) = member_means(rows, &assignments, k);
        if let Some(empty) = sizes.iter().position(|&s| s == 0) {
            return Err(KMeansError::InvalidAssignment(format!("cluster {empty} has no members")));
        }
        let wcss = wcss(rows, &assignments, &centres);
        Ok(Self {
            k,
            assignments,
            centres,
            sizes,
            wcss,
            merged_clusters: 0,
        })
    }

    /// Row indices of cluster `label`.
    pub fn members(&self, label: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == label)
            .collect()
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn member_means(rows: &[Vec<f64>], assignments: &[usize], k: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let h = rows.first().map_or(0, Vec::len);
    let mut sums = vec![vec![0.0; h]; k];
    let mut sizes = vec![0usize; k];
    for (row, &a) in rows.iter().zip(assignments) {
        sizes[a] += 1;
        for (s, v) in sums[a].iter_mut().zip(row) {
            *s += v;
        }
    }
    for (sum, &n) in sums.iter_mut().zip(&sizes) {
        if n > 0 {
            sum.iter_mut().for_each(|s| *s /= n as f64);
        }
    }
    (sums, sizes)
}

fn wcss(rows: &[Vec<f64>], assignments: &[usize], centres: &[Vec<f64>]) -> f64 {
    rows.iter()
        .zip(assignments)
        .map(|(r, &a)| squared_distance(r, &centres[a]))
        .sum()
}

fn nearest_centre(row: &[f64], centres: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, centre) in centres.iter().enumerate() {
        let d = squared_distance(row, centre);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

fn assign_nearest(rows: &[Vec<f64>], centres: &[Vec<f64>]) -> Vec<usize> {
    rows.iter().map(|r| nearest_centre(r, centres)).collect()
}

/// Recomputes member means, refilling any empty cluster with the point
/// farthest from its own centre (taken from a cluster with ≥ 2 members).
fn update_centres(rows: &[Vec<f64>], assignments: &mut [usize], k: usize) -> Vec<Vec<f64>> {
    loop {
        let (centres, sizes) = member_means(rows, assignments, k);
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return centres;
        };
        let mut farthest = None;
        let mut farthest_d = f64::NEG_INFINITY;
        for (i, row) in rows.iter().enumerate() {
            let a = assignments[i];
            if sizes[a] < 2 {
                continue;
            }
            let d = squared_distance(row, &centres[a]);
            if d > farthest_d {
                farthest_d = d;
                farthest = Some(i);
            }
        }
        let donor = farthest.expect("k <= rows guarantees a cluster with two members");
        assignments[donor] = empty;
    }
}

fn plus_plus_seeds(rows: &[Vec<f64>], k: usize, rng: &mut StreamRng) -> Vec<Vec<f64>> {
    let m = rows.len();
    let mut centres = Vec::with_capacity(k);
    centres.push(rows[rng.random_range(0..m)].clone());
    let mut d2: Vec<f64> = rows.iter().map(|r| squared_distance(r, &centres[0])).collect();
    while centres.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                acc += w;
                pick = Some(i);
                if acc > target {
                    break;
                }
            }
            pick.expect("positive total has a positive weight")
        } else {
            rng.random_range(0..m)
        };
        let centre = rows[pick].clone();
        for (d, r) in d2.iter_mut().zip(rows) {
            *d = d.min(squared_distance(r, &centre));
        }
        centres.push(centre);
    }
    centres
}

/// One seeded Lloyd run. Returns the clustering and the WCSS after each
/// centre update.
fn lloyd_run(rows: &[Vec<f64>], k: usize, config: &KMeansConfig, restart: u64) -> (Clustering, Vec<f64>) {
    let mut rng = rng::stream(config.seed, domain::KMEANS_RESTART, restart);
    let mut centres = plus_plus_seeds(rows, k, &mut rng);
    let mut assignments = assign_nearest(rows, &centres);
    let mut history = Vec::new();

    for _ in 0..config.max_iterations {
        let updated = update_centres(rows, &mut assignments, k);
        history.push(wcss(rows, &assignments, &updated));
        let shift = updated
            .iter()
            .zip(&centres)
            .map(|(a, b)| squared_distance(a, b))
            .fold(0.0, f64::max)
            .sqrt();
        centres = updated;
        let next = assign_nearest(rows, &centres);
        if next == assignments || shift < config.tolerance {
            break;
        }
        assignments = next;
    }

    let centres = update_centres(rows, &mut assignments, k);
    let (_, sizes) = member_means(rows, &assignments, k);
    let total = wcss(rows, &assignments, &centres);
    let clustering = Clustering {
        k,
        assignments,
        centres,
        sizes,
        wcss: total,
        merged_clusters: 0,
    };
    (clustering, history)
}

fn check_k(m: usize, k: usize) -> Result<(), KMeansError> {
    if k == 0 {
        return Err(KMeansError::ZeroClusters);
    }
    if k > m {
        return Err(KMeansError::TooManyClusters { k, rows: m });
    }
    Ok(())
}

/// Lloyd's algorithm from k-means++ seeds, best of `config.restarts` by WCSS.
///
/// Restart `r` draws from its own `(seed, r)` stream and ties keep the lowest
/// restart, so the result does not depend on thread scheduling. The result is
/// returned in canonical label order.
pub fn kmeans(matrix: &FeatureMatrix, k: usize, config: &KMeansConfig) -> Result<Clustering, KMeansError> {
    config.validate()?;
    let rows = matrix.rows();
    check_k(rows.len(), k)?;

    let runs: Vec<Clustering> = (0..config.restarts as u64)
        .into_par_iter()
        .map(|r| lloyd_run(rows, k, config, r).0)
        .collect();
    let mut best = runs
        .into_iter()
        .reduce(|best, c| if c.wcss < best.wcss { c } else { best })
        .expect("restarts >= 1");

    if config.min_cluster_size > 1 {
        best = merge_small_clusters(rows, best, config.min_cluster_size);
    }
    Ok(relabel_canonical(&best))
}

/// Folds clusters with fewer than `min_size` members into the cluster with
/// the nearest centre until none remain or one cluster is left.
pub fn merge_small_clusters(rows: &[Vec<f64>], mut clustering: Clustering, min_size: usize) -> Clustering {
    loop {
        let small = (0..clustering.k)
            .filter(|&c| clustering.sizes[c] < min_size)
            .min_by_key(|&c| clustering.sizes[c]);
        let (Some(small), true) = (small, clustering.k > 1) else {
            return clustering;
        };
        let target = (0..clustering.k)
            .filter(|&c| c != small)
            .map(|c| (c, squared_distance(&clustering.centres[small], &clustering.centres[c])))
            .fold((usize::MAX, f64::INFINITY), |best, (c, d)| if d < best.1 { (c, d) } else { best })
            .0;
        let k = clustering.k - 1;
        let assignments = clustering
            .assignments
            .iter()
            .map(|&a| {
                let a = if a == small { target } else { a };
                if a > small {
                    a - 1
                } else {
                    a
                }
            })
            .collect::<Vec<_>>();
        let (centres, sizes) = member_means(rows, &assignments, k);
        let merged = clustering.merged_clusters + 1;
        clustering = Clustering {
            k,
            wcss: wcss(rows, &assignments, &centres),
            assignments,
            centres,
            sizes,
            merged_clusters: merged,
        };
    }
}

/// Renumbers clusters by ascending index of their first member.
///
/// Empty clusters keep their relative order after all non-empty ones.
pub fn relabel_canonical(clustering: &Clustering) -> Clustering {
    let k = clustering.k;
    let mut order: Vec<usize> = Vec::with_capacity(k);
    for &a in &clustering.assignments {
        if !order.contains(&a) {
            order.push(a);
        }
    }
    order.extend((0..k).filter(|c| !order.contains(c)).collect::<Vec<_>>());
    let mut new_label = vec![0; k];
    for (new, &old) in order.iter().enumerate() {
        new_label[old] = new;
    }
    Clustering {
        k,
        assignments: clustering.assignments.iter().map(|&a| new_label[a]).collect(),
        centres: order.iter().map(|&old| clustering.centres[old].clone()).collect(),
        sizes: order.iter().map(|&old| clustering.sizes[old]).collect(),
        wcss: clustering.wcss,
        merged_clusters: clustering.merged_clusters,
    }
}

/// Stirling number of the second kind, saturating at `u128::MAX`.
pub fn stirling2(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let mut row = vec![0u128; k + 1];
    row[0] = 1;
    for i in 1..=n {
        for j in (1..=k.min(i)).rev() {
            row[j] = (j as u128)
                .saturating_mul(row[j])
                .saturating_add(row[j - 1]);
        }
        row[0] = 0;
    }
    row[k]
}

/// Globally WCSS-optimal partition by enumeration, capped at [`DEFAULT_PARTITION_CAP`].
pub fn exhaustive_oracle(matrix: &FeatureMatrix, k: usize) -> Result<Clustering, KMeansError> {
    exhaustive_oracle_with_cap(matrix, k, DEFAULT_PARTITION_CAP)
}

/// Enumerates every partition of the rows into exactly `k` non-empty,
/// unlabelled groups. The first partition found wins ties.
pub fn exhaustive_oracle_with_cap(matrix: &FeatureMatrix, k: usize, cap: u128) -> Result<Clustering, KMeansError> {
    let rows = matrix.rows();
    check_k(rows.len(), k)?;
    let partitions = stirling2(rows.len(), k);
    if partitions > cap {
        return Err(KMeansError::InstanceTooLarge { partitions, cap });
    }

    struct Search<'a> {
        rows: &'a [Vec<f64>],
        k: usize,
        labels: Vec<usize>,
        best: Option<(f64, Vec<usize>)>,
    }

    impl Search<'_> {
        // Restricted growth strings: row i joins an existing block or opens block `used`.
        fn visit(&mut self, i: usize, used: usize) {
            let m = self.rows.len();
            if m - i < self.k - used {
                return;
            }
            if i == m {
                let (centres, _) = member_means(self.rows, &self.labels, self.k);
                let cost = wcss(self.rows, &self.labels, &centres);
                if self.best.as_ref().is_none_or(|(b, _)| cost < *b) {
                    self.best = Some((cost, self.labels.clone()));
                }
                return;
            }
            for block in 0..used {
                self.labels[i] = block;
                self.visit(i + 1, used);
            }
            if used < self.k {
                self.labels[i] = used;
                self.visit(i + 1, used + 1);
            }
        }
    }

    let mut search = Search {
        rows,
        k,
        labels: vec![0; rows.len()],
        best: None,
    };
    search.visit(0, 0);
    let (_, labels) = search.best.expect("k <= rows admits a partition");
    Clustering::from_assignments(rows, labels, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn matrix(rows: Vec<Vec<f64>>) -> FeatureMatrix {
        FeatureMatrix::from_rows(rows).unwrap()
    }

    fn four_points() -> FeatureMatrix {
        matrix(vec![vec![0.0, 0.0], vec![0.0, 0.1], vec![1.0, 1.0], vec![1.0, 0.9]])
    }

    fn cfg(seed: u64) -> KMeansConfig {
        KMeansConfig::with_seed(seed)
    }

    #[test]
    fn single_cluster_is_the_mean() {
        let m = matrix(vec![vec![0.0, 1.0], vec![2.0, 3.0], vec![4.0, 8.0]]);
        let c = kmeans(&m, 1, &cfg(1)).unwrap();
        assert_eq!(c.centres, vec![vec![2.0, 4.0]]);
        // (4 + 9) + (0 + 1) + (4 + 16)
        assert!((c.wcss - 34.0).abs() < 1e-12);
        assert_eq!(c.sizes, vec![3]);
    }

    #[test]
    fn k_equals_m_is_zero_wcss() {
        let m = matrix(vec![vec![0.3], vec![0.1], vec![0.9], vec![0.5]]);
        let c = kmeans(&m, 4, &cfg(2)).unwrap();
        assert_eq!(c.wcss, 0.0);
        assert_eq!(c.sizes, vec![1; 4]);
        assert_eq!(c.assignments, vec![0, 1, 2, 3]);
    }

    #[test]
    fn four_point_split() {
        let c = kmeans(&four_points(), 2, &cfg(3)).unwrap();
        assert_eq!(c.assignments, vec![0, 0, 1, 1]);
        let o = exhaustive_oracle(&four_points(), 2).unwrap();
        assert_eq!(o.assignments, c.assignments);
        assert!((o.wcss - c.wcss).abs() < 1e-15);
        // 2 · 0.05² per pair
        assert!((o.wcss - 0.01).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        let m = four_points();
        assert_eq!(kmeans(&m, 5, &cfg(0)).unwrap_err(), KMeansError::TooManyClusters { k: 5, rows: 4 });
        assert_eq!(kmeans(&m, 0, &cfg(0)).unwrap_err(), KMeansError::ZeroClusters);
        let bad = KMeansConfig { restarts: 0, ..cfg(0) };
        assert!(matches!(kmeans(&m, 2, &bad), Err(KMeansError::InvalidConfig(_))));
        let bad = KMeansConfig { tolerance: f64::NAN, ..cfg(0) };
        assert!(matches!(kmeans(&m, 2, &bad), Err(KMeansError::InvalidConfig(_))));
    }

    #[test]
    fn oracle_cap() {
        let big = matrix((0..20).map(|i| vec![i as f64]).collect());
        assert!(matches!(exhaustive_oracle(&big, 3), Err(KMeansError::InstanceTooLarge { .. })));
        let c = exhaustive_oracle(&big, 20).unwrap();
        assert_eq!(c.wcss, 0.0);
        let twelve = matrix((0..12).map(|i| vec![i as f64]).collect());
        assert!(exhaustive_oracle(&twelve, 3).is_ok());
    }

    #[test]
    fn stirling_values() {
        assert_eq!(stirling2(4, 2), 7);
        assert_eq!(stirling2(12, 3), 86_526);
        assert_eq!(stirling2(5, 5), 1);
        assert_eq!(stirling2(3, 4), 0);
        assert_eq!(stirling2(20, 3), 580_606_446);
    }

    #[test]
    fn oracle_enumerates_every_partition() {
        // Count the partitions visited by brute force over all labelings.
        let m = 6usize;
        let k = 3usize;
        let mut seen = std::collections::BTreeSet::new();
        for code in 0..k.pow(m as u32) {
            let labels: Vec<usize> = (0..m).map(|i| (code / k.pow(i as u32)) % k).collect();
            if (0..k).all(|c| labels.contains(&c)) {
                let canonical = relabel_canonical(&Clustering {
                    k,
                    assignments: labels,
                    centres: vec![vec![]; k],
                    sizes: vec![0; k],
                    wcss: 0.0,
                    merged_clusters: 0,
                });
                seen.insert(canonical.assignments);
            }
        }
        assert_eq!(seen.len() as u128, stirling2(m, k));
    }

    #[test]
    fn relabel_examples() {
        let rows = vec![vec![0.0], vec![5.0], vec![0.1], vec![5.1]];
        let a = Clustering::from_assignments(&rows, vec![1, 0, 1, 0], 2).unwrap();
        let b = Clustering::from_assignments(&rows, vec![0, 1, 0, 1], 2).unwrap();
        let ca = relabel_canonical(&a);
        assert_eq!(ca, relabel_canonical(&b));
        assert_eq!(relabel_canonical(&ca), ca);
        assert_eq!(ca.assignments, vec![0, 1, 0, 1]);
        assert_eq!(ca.wcss, a.wcss);
        assert_eq!(ca.centres[0], vec![0.05]);
    }

    #[test]
    fn from_assignments_validation() {
        let rows = vec![vec![0.0], vec![1.0]];
        assert!(Clustering::from_assignments(&rows, vec![0], 1).is_err());
        assert!(Clustering::from_assignments(&rows, vec![0, 2], 2).is_err());
        assert!(Clustering::from_assignments(&rows, vec![0, 0], 2).is_err());
    }

    #[test]
    fn empty_cluster_repair() {
        // Duplicate points make k-means++ fall back to uniform picks and
        // force empty clusters that must be refilled.
        let m = matrix(vec![vec![1.0]; 5].into_iter().chain([vec![2.0]]).collect());
        let c = kmeans(&m, 3, &cfg(9)).unwrap();
        assert!(c.sizes.iter().all(|&s| s > 0));
        assert_eq!(c.sizes.iter().sum::<usize>(), 6);
        assert_eq!(c.wcss, 0.0);
    }

    #[test]
    fn min_cluster_size_merges_singletons() {
        let m = matrix(vec![vec![0.0], vec![0.1], vec![5.0], vec![5.1], vec![100.0]]);
        let plain = kmeans(&m, 3, &cfg(4)).unwrap();
        assert_eq!(plain.sizes, vec![2, 2, 1]);
        let repaired = kmeans(&m, 3, &KMeansConfig { min_cluster_size: 2, ..cfg(4) }).unwrap();
        assert_eq!(repaired.k, 2);
        assert_eq!(repaired.merged_clusters, 1);
        assert_eq!(repaired.assignments, vec![0, 0, 1, 1, 1]);
        assert!(repaired.sizes.iter().all(|&s| s >= 2));
    }

    fn arb_rows() -> impl Strategy<Value = Vec<Vec<f64>>> {
        (1usize..4, 3usize..25).prop_flat_map(|(h, m)| prop::collection::vec(prop::collection::vec(0.0f64..1.0, h), m))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn clustering_invariants(rows in arb_rows(), k in 1usize..5, seed: u64) {
            let k = k.min(rows.len());
            let m = matrix(rows.clone());
            let c = kmeans(&m, k, &KMeansConfig { restarts: 4, ..cfg(seed) }).unwrap();
            prop_assert_eq!(c.sizes.iter().sum::<usize>(), rows.len());
            prop_assert!(c.assignments.iter().all(|&a| a < k));
            prop_assert!(c.wcss >= 0.0);
            let (means, sizes) = member_means(&rows, &c.assignments, k);
            prop_assert_eq!(&sizes, &c.sizes);
            for (a, b) in means.iter().flatten().zip(c.centres.iter().flatten()) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
            prop_assert_eq!(relabel_canonical(&c), c.clone());
        }

        #[test]
        fn lloyd_wcss_never_increases(rows in arb_rows(), k in 1usize..5, seed: u64) {
            let k = k.min(rows.len());
            let (_, history) = lloyd_run(&rows, k, &cfg(seed), 0);
            for w in history.windows(2) {
                prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-15, "{:?}", history);
            }
        }

        #[test]
        fn deterministic_across_thread_counts(rows in arb_rows(), k in 1usize..4, seed: u64) {
            let k = k.min(rows.len());
            let m = matrix(rows);
            let config = KMeansConfig { restarts: 6, ..cfg(seed) };
            let parallel = kmeans(&m, k, &config).unwrap();
            let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap()
                .install(|| kmeans(&m, k, &config).unwrap());
            prop_assert_eq!(parallel, single);
        }

        #[test]
        fn translation_moves_centres_only(rows in arb_rows(), k in 1usize..4, seed: u64, shift in -8.0f64..8.0) {
            let k = k.min(rows.len());
            let moved: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|v| v + shift).collect()).collect();
            let config = KMeansConfig { restarts: 3, ..cfg(seed) };
            let a = kmeans(&matrix(rows), k, &config).unwrap();
            let b = kmeans(&matrix(moved), k, &config).unwrap();
            prop_assert_eq!(&a.assignments, &b.assignments);
            prop_assert!((a.wcss - b.wcss).abs() <= 1e-9);
            for (ca, cb) in a.centres.iter().flatten().zip(b.centres.iter().flatten()) {
                prop_assert!((ca + shift - cb).abs() <= 1e-9);
            }
        }

        #[test]
        fn never_beats_oracle(rows in (1usize..3, 3usize..9).prop_flat_map(|(h, m)| prop::collection::vec(prop::collection::vec(0.0f64..1.0, h), m)), k in 1usize..4, seed: u64) {
            let k = k.min(rows.len());
            let m = matrix(rows);
            let oracle = exhaustive_oracle(&m, k).unwrap();
            let fitted = kmeans(&m, k, &KMeansConfig { restarts: 5, ..cfg(seed) }).unwrap();
            prop_assert!(fitted.wcss >= oracle.wcss * (1.0 - 1e-12) - 1e-15);
        }
    }
}

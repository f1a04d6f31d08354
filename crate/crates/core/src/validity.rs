//! Internal cluster validity indexes: MIA, CDI, SMI, DBI and Ball–Hall.
//!
//! Every index measures distance with the attribute-averaged profile
//! distance `d(a, b) = sqrt(Σ_h (a_h − b_h)² / H)`. The exception is the
//! cluster scatter used by DBI, which sums squared differences over
//! attributes without the `1/H` factor.
//!
//! With the member sum written `S = Σ_k Σ_r d²(r, C_k)`, MIA is `sqrt(S/K)`
//! and Ball–Hall is `S/K`, so `ball == mia²` for every clustering.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureMatrix;
use crate::kmeans::Clustering;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValidityError {
    #[error("vectors have different lengths ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("distance between zero-length vectors is undefined")]
    EmptyVector,
    #[error("infra-set distance of an empty set is undefined")]
    EmptySet,
    #[error("cluster {0} has no members")]
    EmptyCluster(usize),
    #[error("index needs at least two clusters")]
    SingleCluster,
    #[error("cluster centres coincide")]
    CoincidentCentres,
    #[error("fewer than two clusters with at least two members")]
    FewerThanTwoEligibleClusters,
    #[error("clustering does not match matrix: {0}")]
    ClusteringMismatch(String),
}

impl ValidityError {
    pub fn name(&self) -> &'static str {
        match self {
            ValidityError::LengthMismatch { .. } => "LengthMismatch",
            ValidityError::EmptyVector => "EmptyVector",
            ValidityError::EmptySet => "EmptySet",
            ValidityError::EmptyCluster(_) => "EmptyCluster",
            ValidityError::SingleCluster => "SingleCluster",
            ValidityError::CoincidentCentres => "CoincidentCentres",
            ValidityError::FewerThanTwoEligibleClusters => "FewerThanTwoEligibleClusters",
            ValidityError::ClusteringMismatch(_) => "ClusteringMismatch",
        }
    }
}

/// How DBI treats clusters with a single member.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DbiPolicy {
    /// Drop singleton clusters as outliers and average over the rest.
    #[default]
    Exclude,
    /// Report no DBI at all.
    Suppress,
}

impl std::str::FromStr for DbiPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exclude" => Ok(DbiPolicy::Exclude),
            "suppress" => Ok(DbiPolicy::Suppress),
            other => Err(format!("unknown DBI policy {other:?} (expected exclude or suppress)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IndexFlag {
    SingletonClusterPresent,
    CoincidentCentres,
    DbiSuppressed,
    /// A centre pair lies further apart than 1, outside SMI's intended domain.
    OutOfRangeDistance,
    /// K < 2: CDI, SMI and DBI are undefined.
    SingleCluster,
    FewerThanTwoEligibleClusters,
}

/// The five indexes for one clustering. Undefined indexes are `None` and
/// explained by `flags`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexReport {
    pub mia: f64,
    pub cdi: Option<f64>,
    pub smi: Option<f64>,
    pub dbi: Option<f64>,
    pub ball: f64,
    pub k: usize,
    pub h: usize,
    pub flags: BTreeSet<IndexFlag>,
}

/// Root-mean-square attribute difference.
pub fn profile_distance(a: &[f64], b: &[f64]) -> Result<f64, ValidityError> {
    Ok(squared_profile_distance(a, b)?.sqrt())
}

fn squared_profile_distance(a: &[f64], b: &[f64]) -> Result<f64, ValidityError> {
    if a.len() != b.len() {
        return Err(ValidityError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(ValidityError::EmptyVector);
    }
    let ss: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(ss / a.len() as f64)
}

/// `sqrt(Σ_n Σ_p d²(s_n, s_p) / 2N)` over all ordered pairs, self-pairs included.
pub fn infra_set_distance<V: AsRef<[f64]>>(members: &[V]) -> Result<f64, ValidityError> {
    let n = members.len();
    if n == 0 {
        return Err(ValidityError::EmptySet);
    }
    let mut total = 0.0;
    for a in members {
        for b in members {
            total += squared_profile_distance(a.as_ref(), b.as_ref())?;
        }
    }
    Ok((total / (2 * n) as f64).sqrt())
}

/// `sqrt(Σ_r Σ_h (r_h − C_h)² / R)`, with no division by H.
pub fn scatter<V: AsRef<[f64]>>(members: &[V], centre: &[f64]) -> Result<f64, ValidityError> {
    if members.is_empty() {
        return Err(ValidityError::EmptySet);
    }
    let mut total = 0.0;
    for m in members {
        let m = m.as_ref();
        if m.len() != centre.len() {
            return Err(ValidityError::LengthMismatch {
                left: m.len(),
                right: centre.len(),
            });
        }
        total += m.iter().zip(centre).map(|(x, c)| (x - c) * (x - c)).sum::<f64>();
    }
    Ok((total / members.len() as f64).sqrt())
}

/// Similarity of two centres at profile distance `d`: `1 / (1 − 1/ln d)`.
///
/// Takes its limits at the singular points: 1 at `d = 0`, 0 at `d = 1`.
pub fn smi_alpha(d: f64) -> f64 {
    if d == 0.0 {
        1.0
    } else if d == 1.0 {
        0.0
    } else {
        1.0 / (1.0 - 1.0 / d.ln())
    }
}

/// Member rows grouped by cluster label.
fn groups<'a>(clustering: &Clustering, matrix: &'a FeatureMatrix) -> Result<Vec<Vec<&'a [f64]>>, ValidityError> {
    let rows = matrix.rows();
    if clustering.assignments.len() != rows.len() {
        return Err(ValidityError::ClusteringMismatch(format!(
            "{} labels for {} rows",
            clustering.assignments.len(),
            rows.len()
        )));
    }
    if clustering.centres.len() != clustering.k {
        return Err(ValidityError::ClusteringMismatch(format!(
            "{} centres for k = {}",
            clustering.centres.len(),
            clustering.k
        )));
    }
    let mut out = vec![Vec::new(); clustering.k];
    for (row, &a) in rows.iter().zip(&clustering.assignments) {
        out.get_mut(a)
            .ok_or_else(|| ValidityError::ClusteringMismatch(format!("label {a} outside 0..{}", clustering.k)))?
            .push(row.as_slice());
    }
    Ok(out)
}

/// `(1/K) Σ_k Σ_r d²(r, C_k)`, shared by MIA and Ball–Hall.
fn mean_member_sum(clustering: &Clustering, matrix: &FeatureMatrix) -> Result<f64, ValidityError> {
    let groups = groups(clustering, matrix)?;
    let mut total = 0.0;
    for (members, centre) in groups.iter().zip(&clustering.centres) {
        for m in members {
            total += squared_profile_distance(m, centre)?;
        }
    }
    Ok(total / clustering.k as f64)
}

/// Mean index adequacy. Lower is more compact.
pub fn mia(clustering: &Clustering, matrix: &FeatureMatrix) -> Result<f64, ValidityError> {
    Ok(mean_member_sum(clustering, matrix)?.sqrt())
}

/// Ball–Hall index.
pub fn ball(clustering: &Clustering, matrix: &FeatureMatrix) -> Result<f64, ValidityError> {
    mean_member_sum(clustering, matrix)
}

/// Cluster dispersion indicator: RMS member infra-set distance over the
/// infra-set distance of the centres.
pub fn cdi(clustering: &Clustering, matrix: &FeatureMatrix) -> Result<f64, ValidityError> {
    let groups = groups(clustering, matrix)?;
    if clustering.k < 2 {
        return Err(ValidityError::SingleCluster);
    }
    let spread = infra_set_distance(&clustering.centres)?;
    if spread == 0.0 {
        return Err(ValidityError::CoincidentCentres);
    }
    let mut total = 0.0;
    for (k, members) in groups.iter().enumerate() {
        if members.is_empty() {
            return Err(ValidityError::EmptyCluster(k));
        }
        total += infra_set_distance(members)?.powi(2);
    }
    Ok((total / clustering.k as f64).sqrt() / spread)
}

/// Similarity matrix indicator: the largest centre-pair similarity.
pub fn smi(clustering: &Clustering) -> Result<f64, ValidityError> {
    if clustering.k < 2 {
        return Err(ValidityError::SingleCluster);
    }
    let mut best = f64::NEG_INFINITY;
    for i in 1..clustering.k {
        for j in 0..i {
            let d = profile_distance(&clustering.centres[i], &clustering.centres[j])?;
            best = best.max(smi_alpha(d));
        }
    }
    Ok(best)
}

/// Davies–Bouldin indicator. `None` when singletons are present under
/// [`DbiPolicy::Suppress`].
pub fn dbi(clustering: &Clustering, matrix: &FeatureMatrix, policy: DbiPolicy) -> Result<Option<f64>, ValidityError> {
    let groups = groups(clustering, matrix)?;
    if clustering.k < 2 {
        return Err(ValidityError::SingleCluster);
    }
    if let Some(k) = groups.iter().position(Vec::is_empty) {
        return Err(ValidityError::EmptyCluster(k));
    }
    let has_singleton = groups.iter().any(|g| g.len() == 1);
    let eligible: Vec<usize> = match (has_singleton, policy) {
        (true, DbiPolicy::Suppress) => return Ok(None),
        (true, DbiPolicy::Exclude) => (0..clustering.k).filter(|&k| groups[k].len() >= 2).collect(),
        (false, _) => (0..clustering.k).collect(),
    };
    if eligible.len() < 2 {
        return Err(ValidityError::FewerThanTwoEligibleClusters);
    }
    let scat = eligible
        .iter()
        .map(|&k| scatter(&groups[k], &clustering.centres[k]))
        .collect::<Result<Vec<_>, _>>()?;

    let mut total = 0.0;
    for (a, &j) in eligible.iter().enumerate() {
        let mut worst = f64::NEG_INFINITY;
        for (b, &i) in eligible.iter().enumerate() {
            if i == j {
                continue;
            }
            let d = profile_distance(&clustering.centres[i], &clustering.centres[j])?;
            if d == 0.0 {
                return Err(ValidityError::CoincidentCentres);
            }
            worst = worst.max((scat[a] + scat[b]) / d);
        }
        total += worst;
    }
    Ok(Some(total / eligible.len() as f64))
}

/// Divides every index by the attribute count.
pub fn adjust_for_attribute_count(report: &IndexReport) -> IndexReport {
    let h = report.h.max(1) as f64;
    IndexReport {
        mia: report.mia / h,
        cdi: report.cdi.map(|v| v / h),
        smi: report.smi.map(|v| v / h),
        dbi: report.dbi.map(|v| v / h),
        ball: report.ball / h,
        ..report.clone()
    }
}

/// All five indexes. Undefined indexes are reported through flags; only a
/// clustering that does not fit the matrix is an error.
pub fn index_report(clustering: &Clustering, matrix: &FeatureMatrix, policy: DbiPolicy) -> Result<IndexReport, ValidityError> {
    let mut flags = BTreeSet::new();
    let groups = groups(clustering, matrix)?;
    if let Some(k) = groups.iter().position(Vec::is_empty) {
        return Err(ValidityError::EmptyCluster(k));
    }
    if groups.iter().any(|g| g.len() == 1) {
        flags.insert(IndexFlag::SingletonClusterPresent);
    }
    let member_sum = mean_member_sum(clustering, matrix)?;

    let soft = |result: Result<f64, ValidityError>, flags: &mut BTreeSet<IndexFlag>| match result {
        Ok(v) => Ok(Some(v)),
        Err(ValidityError::SingleCluster) => {
            flags.insert(IndexFlag::SingleCluster);
            Ok(None)
        }
        Err(ValidityError::CoincidentCentres) => {
            flags.insert(IndexFlag::CoincidentCentres);
            Ok(None)
        }
        Err(ValidityError::FewerThanTwoEligibleClusters) => {
            flags.insert(IndexFlag::FewerThanTwoEligibleClusters);
            Ok(None)
        }
        Err(e) => Err(e),
    };

    let cdi = soft(cdi(clustering, matrix), &mut flags)?;
    let smi = soft(smi(clustering), &mut flags)?;
    let dbi = match dbi(clustering, matrix, policy) {
        Ok(Some(v)) => Some(v),
        Ok(None) => {
            flags.insert(IndexFlag::DbiSuppressed);
            None
        }
        Err(e) => soft(Err(e), &mut flags)?,
    };

    for i in 1..clustering.k {
        for j in 0..i {
            if profile_distance(&clustering.centres[i], &clustering.centres[j])? > 1.0 {
                flags.insert(IndexFlag::OutOfRangeDistance);
            }
        }
    }

    Ok(IndexReport {
        mia: member_sum.sqrt(),
        cdi,
        smi,
        dbi,
        ball: member_sum,
        k: clustering.k,
        h: matrix.n_attributes(),
        flags,
    })
}

//! Sorted-ℓ1 norm primitives.
//!
//! The sorted-ℓ1 norm pairs the non-increasingly sorted absolute values of a
//! coefficient vector with a non-increasing weight sequence. This module holds
//! the norm itself, the ordering/rank/cluster bookkeeping around it, its
//! proximal operator, and a membership test for its subdifferential. Everything
//! here is a pure function; nothing holds shared state.

use serde::Serialize;

use crate::error::{Result, SlopeError};

/// Two coefficients are treated as equal in magnitude when their absolute
/// difference is below this tolerance relative to max(1, magnitude). The prox
/// produces exactly tied values, but values assembled through longer chains of
/// arithmetic need the slack.
pub const CLUSTER_TOL: f64 = 1e-10;

/// Default absolute tolerance for certifying subgradient membership.
pub const CERTIFY_TOL: f64 = 1e-9;

/// Non-increasing, nonnegative penalty weights.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct LambdaSeq {
    weights: Vec<f64>,
}

impl LambdaSeq {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(SlopeError::InvalidLambda("empty sequence".into()));
        }
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(SlopeError::InvalidLambda(format!(
                    "non-finite weight at position {i}"
                )));
            }
            if w < 0.0 {
                return Err(SlopeError::InvalidLambda(format!(
                    "negative weight {w} at position {i}"
                )));
            }
            if i > 0 && w > weights[i - 1] {
                return Err(SlopeError::InvalidLambda(format!(
                    "weights increase at position {i} ({} -> {w})",
                    weights[i - 1]
                )));
            }
        }
        Ok(Self { weights })
    }

    /// All weights equal; the penalty then reduces to a plain ℓ1 norm.
    pub fn constant(value: f64, len: usize) -> Result<Self> {
        Self::new(vec![value; len])
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Multiplies every weight by a nonnegative scale factor.
    pub fn scaled(&self, sigma: f64) -> Result<Self> {
        if !sigma.is_finite() || sigma < 0.0 {
            return Err(SlopeError::InvalidParameter(format!(
                "lambda scale must be finite and nonnegative, got {sigma}"
            )));
        }
        Ok(Self {
            weights: self.weights.iter().map(|w| w * sigma).collect(),
        })
    }

    /// The first (largest) `m` weights. When a problem is restricted to a
    /// subset of m predictors, the restricted penalty keeps the top weights:
    /// inactive predictors sort last, so the active problem sees the head of
    /// the sequence.
    pub fn truncated(&self, m: usize) -> Self {
        debug_assert!(m <= self.weights.len());
        Self {
            weights: self.weights[..m.min(self.weights.len())].to_vec(),
        }
    }
}

impl std::ops::Index<usize> for LambdaSeq {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.weights[i]
    }
}

/// Ordering, ranks, and magnitude clusters of a coefficient vector.
///
/// `ordering[r]` is the index of the r-th largest absolute value (ties broken
/// by ascending original index); `ranks` is its inverse. Clusters are maximal
/// groups of indices with equal magnitude; they occupy contiguous rank ranges,
/// stored as offsets into `ordering`.
#[derive(Debug, Clone)]
pub struct Clustering {
    ordering: Vec<usize>,
    ranks: Vec<usize>,
    bounds: Vec<usize>,
}

impl Clustering {
    pub fn len(&self) -> usize {
        self.ordering.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ordering.is_empty()
    }

    pub fn ordering(&self) -> &[usize] {
        &self.ordering
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn num_clusters(&self) -> usize {
        self.bounds.len().saturating_sub(1)
    }

    /// Member indices of cluster `i`, largest magnitudes first.
    pub fn cluster(&self, i: usize) -> &[usize] {
        &self.ordering[self.bounds[i]..self.bounds[i + 1]]
    }

    /// Rank range `[start, end)` occupied by cluster `i`.
    pub fn cluster_range(&self, i: usize) -> (usize, usize) {
        (self.bounds[i], self.bounds[i + 1])
    }

    pub fn clusters(&self) -> impl Iterator<Item = &[usize]> + '_ {
        (0..self.num_clusters()).map(move |i| self.cluster(i))
    }
}

/// Running sums: `out[i] = x[0] + … + x[i]`.
pub fn cumsum(x: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    let mut acc = 0.0;
    for &v in x {
        acc += v;
        out.push(acc);
    }
    out
}

fn magnitudes_tie(larger: f64, smaller: f64) -> bool {
    (larger - smaller).abs() <= CLUSTER_TOL * larger.max(1.0)
}

/// Sorts indices by descending absolute value (stable, so exact ties keep
/// ascending index order) and groups indices of equal magnitude into clusters.
pub fn ordering_and_ranks(beta: &[f64]) -> Clustering {
    let p = beta.len();
    let mut ordering: Vec<usize> = (0..p).collect();
    ordering.sort_by(|&a, &b| beta[b].abs().total_cmp(&beta[a].abs()));

    let mut ranks = vec![0usize; p];
    for (r, &j) in ordering.iter().enumerate() {
        ranks[j] = r;
    }

    let mut bounds = Vec::with_capacity(8);
    bounds.push(0);
    for r in 1..p {
        let prev = beta[ordering[r - 1]].abs();
        let cur = beta[ordering[r]].abs();
        if !magnitudes_tie(prev, cur) {
            bounds.push(r);
        }
    }
    if p > 0 {
        bounds.push(p);
    }

    Clustering {
        ordering,
        ranks,
        bounds,
    }
}

/// Evaluates Σ λ_r |β|_(r).
pub fn sorted_l1_norm(beta: &[f64], lambda: &LambdaSeq) -> Result<f64> {
    if beta.len() != lambda.len() {
        return Err(SlopeError::DimensionMismatch {
            context: "sorted_l1_norm",
            expected: lambda.len(),
            got: beta.len(),
        });
    }
    let mut mags: Vec<f64> = beta.iter().map(|b| b.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    Ok(mags
        .iter()
        .zip(lambda.weights())
        .map(|(m, w)| m * w)
        .sum())
}

/// Proximal operator of the sorted-ℓ1 norm: argmin_x ½‖x−v‖² + J(x;λ).
///
/// Sorts |v| non-increasingly, subtracts λ, pools adjacent blocks that violate
/// non-increasing order (weighted averages on a stack), clips at zero, then
/// restores the original order and signs. Zeros in the output are exact.
pub fn prox_sorted_l1(v: &[f64], lambda: &LambdaSeq) -> Result<Vec<f64>> {
    if v.len() != lambda.len() {
        return Err(SlopeError::DimensionMismatch {
            context: "prox_sorted_l1",
            expected: lambda.len(),
            got: v.len(),
        });
    }
    let p = v.len();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| v[b].abs().total_cmp(&v[a].abs()));

    // Blocks of (sum, count); averages must end up non-increasing.
    let mut sums = Vec::with_capacity(p);
    let mut counts: Vec<usize> = Vec::with_capacity(p);
    for (r, &j) in order.iter().enumerate() {
        sums.push(v[j].abs() - lambda[r]);
        counts.push(1);
        while sums.len() > 1 {
            let top = sums.len() - 1;
            if sums[top] / counts[top] as f64 > sums[top - 1] / counts[top - 1] as f64 {
                let s = sums.pop().unwrap();
                let c = counts.pop().unwrap();
                sums[top - 1] += s;
                counts[top - 1] += c;
            } else {
                break;
            }
        }
    }

    let mut out = vec![0.0; p];
    let mut r = 0;
    for (s, c) in sums.iter().zip(&counts) {
        let value = (s / *c as f64).max(0.0);
        for _ in 0..*c {
            let j = order[r];
            out[j] = v[j].signum() * value;
            r += 1;
        }
    }
    Ok(out)
}

/// Outcome of the subdifferential membership test.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SubgradientVerdict {
    pub feasible: bool,
    /// Largest positive cumulative-sum excess over all clusters (0 when none).
    pub worst_excess: f64,
    /// Largest-magnitude per-cluster sum residual over nonzero clusters.
    pub equality_residual: f64,
    pub sign_mismatch: bool,
}

/// Tests whether `s` belongs to the subdifferential of the sorted-ℓ1 norm at
/// `beta`.
///
/// Per magnitude cluster of `beta`, the sorted |s| values restricted to the
/// cluster are paired with the λ entries at the cluster's rank positions and
/// the running sums of the difference must stay below `tol`. Nonzero clusters
/// additionally need the full cluster sum to vanish (within `tol`) and the
/// signs of `s` to match `beta` — except where `s` itself is exactly zero,
/// which only passes the remaining conditions when the paired weights allow it
/// (zero-weight tails make a zero subgradient component legitimate).
pub fn subdiff_feasible(
    beta: &[f64],
    s: &[f64],
    lambda: &LambdaSeq,
    tol: f64,
) -> Result<SubgradientVerdict> {
    if beta.len() != lambda.len() {
        return Err(SlopeError::DimensionMismatch {
            context: "subdiff_feasible",
            expected: lambda.len(),
            got: beta.len(),
        });
    }
    if s.len() != beta.len() {
        return Err(SlopeError::DimensionMismatch {
            context: "subdiff_feasible",
            expected: beta.len(),
            got: s.len(),
        });
    }
    if tol < 0.0 {
        return Err(SlopeError::InvalidParameter(format!(
            "tolerance must be nonnegative, got {tol}"
        )));
    }

    let clustering = ordering_and_ranks(beta);
    let mut worst_excess = 0.0f64;
    let mut equality_residual = 0.0f64;
    let mut sign_mismatch = false;

    for i in 0..clustering.num_clusters() {
        let members = clustering.cluster(i);
        let (start, _) = clustering.cluster_range(i);
        let mut mags: Vec<f64> = members.iter().map(|&j| s[j].abs()).collect();
        mags.sort_by(|a, b| b.total_cmp(a));

        let mut running = 0.0;
        for (t, &m) in mags.iter().enumerate() {
            running += m - lambda[start + t];
            worst_excess = worst_excess.max(running);
        }

        let zero_cluster = beta[members[0]].abs() <= CLUSTER_TOL;
        if !zero_cluster {
            if running.abs() > equality_residual.abs() {
                equality_residual = running;
            }
            for &j in members {
                if s[j] != 0.0 && s[j].signum() != beta[j].signum() {
                    sign_mismatch = true;
                }
            }
        }
    }

    let feasible = worst_excess <= tol && equality_residual.abs() <= tol && !sign_mismatch;
    Ok(SubgradientVerdict {
        feasible,
        worst_excess,
        equality_residual,
        sign_mismatch,
    })
}

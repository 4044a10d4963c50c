//! Predictor screening: support prediction from a sorted gradient surrogate,
//! the strong rule for the sorted-ℓ1 penalty, its lasso specialization, and
//! the KKT safeguard that finds predictors a heuristic rule discarded wrongly.

use serde::Serialize;

use crate::error::{Result, SlopeError};
use crate::sorted_l1::{cumsum, ordering_and_ranks, LambdaSeq, CLUSTER_TOL};

/// A set of predictor (or flattened coefficient) indices retained by a rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScreenSet {
    /// Retained indices, ascending.
    pub indices: Vec<usize>,
    /// Predicted number of active predictors.
    pub predicted_count: usize,
}

impl ScreenSet {
    pub fn contains(&self, j: usize) -> bool {
        self.indices.binary_search(&j).is_ok()
    }
}

fn check_screen_input(c: &[f64], lambda: &LambdaSeq) -> Result<()> {
    if c.len() != lambda.len() {
        return Err(SlopeError::DimensionMismatch {
            context: "screen_support",
            expected: lambda.len(),
            got: c.len(),
        });
    }
    for (i, &v) in c.iter().enumerate() {
        if v < 0.0 {
            return Err(SlopeError::InvalidParameter(format!(
                "screening input must be nonnegative, got {v} at {i}"
            )));
        }
        if i > 0 && v > c[i - 1] {
            return Err(SlopeError::InvalidParameter(format!(
                "screening input must be sorted non-increasing, rises at {i}"
            )));
        }
    }
    Ok(())
}

/// Predicts the support from a non-increasing surrogate `c`: indices
/// accumulate into a batch, and whenever the batch sum of c - lambda reaches
/// zero the whole batch is flushed into the result. The result is always a
/// prefix of the positions of `c`.
pub fn screen_support(c: &[f64], lambda: &LambdaSeq) -> Result<ScreenSet> {
    check_screen_input(c, lambda)?;
    let mut kept: Vec<usize> = Vec::new();
    let mut batch: Vec<usize> = Vec::new();
    for i in 0..c.len() {
        batch.push(i);
        let sum: f64 = batch.iter().map(|&j| c[j] - lambda[j]).sum();
        if sum >= 0.0 {
            kept.append(&mut batch);
        }
    }
    let predicted_count = kept.len();
    Ok(ScreenSet {
        indices: kept,
        predicted_count,
    })
}

/// Single-pass version of [`screen_support`] that stores only a running
/// scalar; returns the predicted support size k, with the retained set being
/// the first k positions.
pub fn screen_support_fast(c: &[f64], lambda: &LambdaSeq) -> Result<usize> {
    check_screen_input(c, lambda)?;
    let p = c.len();
    let mut i = 1usize;
    let mut k = 0usize;
    let mut s = 0.0f64;
    while i + k <= p {
        s += c[i + k - 1] - lambda[i + k - 1];
        if s >= 0.0 {
            k += i;
            i = 1;
            s = 0.0;
        } else {
            i += 1;
        }
    }
    Ok(k)
}

/// How the weight decrement is paired with the gradient when forming the
/// strong-rule input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairingRule {
    /// Sort |gradient| non-increasing first, add the (rank-aligned) weight
    /// decrement positionwise, then re-sort.
    #[default]
    MagnitudeRank,
    /// Add the weight decrement at original coordinate positions, then sort.
    OriginalCoordinates,
}

/// The strong rule: keeps the predictors selected by the support predictor
/// run on c = (|gradient at the previous solution| + previous weights - next
/// weights), sorted non-increasing, against the next weights.
pub fn strong_rule_slope(
    grad_prev: &[f64],
    lambda_prev: &LambdaSeq,
    lambda_next: &LambdaSeq,
    pairing: PairingRule,
) -> Result<ScreenSet> {
    let p = grad_prev.len();
    if lambda_prev.len() != p || lambda_next.len() != p {
        return Err(SlopeError::DimensionMismatch {
            context: "strong_rule_slope",
            expected: p,
            got: lambda_prev.len().min(lambda_next.len()),
        });
    }
    for i in 0..p {
        if lambda_next[i] > lambda_prev[i] {
            return Err(SlopeError::InvalidParameter(format!(
                "next weights must not exceed previous weights (position {i})"
            )));
        }
    }

    // candidate[t] = (value, original predictor index)
    let mut candidate: Vec<(f64, usize)> = match pairing {
        PairingRule::MagnitudeRank => {
            let mut order: Vec<usize> = (0..p).collect();
            order.sort_by(|&a, &b| grad_prev[b].abs().total_cmp(&grad_prev[a].abs()));
            order
                .iter()
                .enumerate()
                .map(|(r, &j)| (grad_prev[j].abs() + lambda_prev[r] - lambda_next[r], j))
                .collect()
        }
        PairingRule::OriginalCoordinates => (0..p)
            .map(|j| (grad_prev[j].abs() + lambda_prev[j] - lambda_next[j], j))
            .collect(),
    };
    candidate.sort_by(|a, b| b.0.total_cmp(&a.0));

    let c: Vec<f64> = candidate.iter().map(|(v, _)| *v).collect();
    let k = screen_support_fast(&c, lambda_next)?;
    let mut indices: Vec<usize> = candidate[..k].iter().map(|(_, j)| *j).collect();
    indices.sort_unstable();
    Ok(ScreenSet {
        indices,
        predicted_count: k,
    })
}

/// The strong rule for the lasso: keep predictor j when |gradient_j| exceeds
/// twice the next penalty minus the previous one. Reference implementation
/// for the equal-weights equivalence checks.
pub fn strong_rule_lasso(grad_prev: &[f64], lambda_prev: f64, lambda_next: f64) -> ScreenSet {
    debug_assert!(lambda_next <= lambda_prev);
    let threshold = 2.0 * lambda_next - lambda_prev;
    let indices: Vec<usize> = grad_prev
        .iter()
        .enumerate()
        .filter(|(_, g)| g.abs() > threshold)
        .map(|(j, _)| j)
        .collect();
    let predicted_count = indices.len();
    ScreenSet {
        indices,
        predicted_count,
    }
}

/// Checks full stationarity of `beta` (s = -gradient must lie in the
/// subdifferential at `beta`, within `tol * lambda[0]` absolute slack per
/// cumulative-sum element) and returns the predictors to add when it fails:
/// the minimal flagged prefix of the zero set, plus any whole nonzero cluster
/// that fails its own conditions. An empty result means KKT-optimal.
pub fn detect_violations(
    beta: &[f64],
    grad_full: &[f64],
    lambda: &LambdaSeq,
    tol: f64,
) -> Result<Vec<usize>> {
    let p = beta.len();
    if grad_full.len() != p || lambda.len() != p {
        return Err(SlopeError::DimensionMismatch {
            context: "detect_violations",
            expected: p,
            got: grad_full.len().min(lambda.len()),
        });
    }
    let tol_abs = tol * lambda[0];
    let clustering = ordering_and_ranks(beta);
    let mut violations: Vec<usize> = Vec::new();

    for i in 0..clustering.num_clusters() {
        let members = clustering.cluster(i);
        let (start, _) = clustering.cluster_range(i);
        let zero_cluster = beta[members[0]].abs() <= CLUSTER_TOL;

        let mut order: Vec<usize> = members.to_vec();
        order.sort_by(|&a, &b| grad_full[b].abs().total_cmp(&grad_full[a].abs()));
        let mags: Vec<f64> = order.iter().map(|&j| grad_full[j].abs()).collect();

        let partials = cumsum(
            &mags
                .iter()
                .enumerate()
                .map(|(t, m)| m - lambda[start + t])
                .collect::<Vec<f64>>(),
        );
        let max_partial = partials.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

        if zero_cluster {
            if max_partial > tol_abs {
                // Attribute the failure to the smallest prefix of zero-set
                // predictors the support predictor selects against the tail
                // weights; the safeguard loop grows the set to a fixed point.
                let tail = LambdaSeq::new(lambda.weights()[start..].to_vec())
                    .expect("tail of a valid sequence is valid");
                let k = screen_support_fast(&mags, &tail)?.max(1);
                violations.extend_from_slice(&order[..k.min(order.len())]);
            }
        } else {
            let total = *partials.last().unwrap_or(&0.0);
            let sign_bad = members
                .iter()
                .any(|&j| grad_full[j] != 0.0 && (-grad_full[j]).signum() != beta[j].signum());
            if max_partial > tol_abs || total.abs() > tol_abs || sign_bad {
                violations.extend_from_slice(members);
            }
        }
    }

    violations.sort_unstable();
    Ok(violations)
}

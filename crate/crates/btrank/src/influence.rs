//! First-order prediction of how the fitted strengths move when votes are
//! flipped, without refitting: solve `H delta_theta = -delta_g` at the
//! current solution, where `H` is the log-likelihood Hessian and `delta_g`
//! the exact gradient change caused by the flips. `H` is singular along the
//! all-ones direction (a common shift of log-strengths changes nothing), so
//! the solve is pinned to the zero-sum subspace.
//!
//! Diagnostic only: the subset search attacks never consult these estimates.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::mle::{self, check_connectivity, FitError};
use crate::model::{kendall_tau, ranking_from_strengths, CountMatrix, Ranking, StrengthVector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InfluenceError {
    #[error("flip winner and loser are both candidate {0}")]
    SelfFlip(usize),
    #[error("candidate {candidate} out of range for {m} candidates")]
    CandidateOutOfRange { candidate: usize, m: usize },
    #[error("no {winner}-over-{loser} count available to flip")]
    NothingToFlip { winner: usize, loser: usize },
    #[error(
        "Hessian is singular beyond its translation null space (residual {residual:.3e}); \
         the comparison graph is too weakly connected: {components:?}"
    )]
    IllConditioned {
        residual: f64,
        components: Vec<Vec<usize>>,
    },
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// Predicted effect of a flip set on the fitted solution.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceEstimate {
    /// Predicted shift of the log-strengths; components sum to zero.
    pub delta_theta: Vec<f64>,
    /// Ranking implied by the shifted log-strengths.
    pub predicted_ranking: Ranking,
}

/// Exact change of [`mle::gradient`] caused by moving one count from
/// `winner`-beats-`loser` to the reverse direction. The expectation terms of
/// the gradient depend only on pair totals, which a flip preserves, so the
/// change is `-1` at `winner`, `+1` at `loser`, zero elsewhere — independent
/// of `p`.
pub fn flip_gradient_delta(
    counts: &CountMatrix,
    p: &StrengthVector,
    winner: usize,
    loser: usize,
) -> Result<Vec<f64>, InfluenceError> {
    let m = counts.m();
    if p.len() != m {
        return Err(FitError::DimensionMismatch {
            counts: m,
            strengths: p.len(),
        }
        .into());
    }
    validate_flip(counts, winner, loser)?;
    let mut delta = vec![0.0; m];
    delta[winner] = -1.0;
    delta[loser] = 1.0;
    Ok(delta)
}

fn validate_flip(counts: &CountMatrix, winner: usize, loser: usize) -> Result<(), InfluenceError> {
    let m = counts.m();
    for candidate in [winner, loser] {
        if candidate >= m {
            return Err(InfluenceError::CandidateOutOfRange { candidate, m });
        }
    }
    if winner == loser {
        return Err(InfluenceError::SelfFlip(winner));
    }
    if counts.get(winner, loser) == 0 {
        return Err(InfluenceError::NothingToFlip { winner, loser });
    }
    Ok(())
}

/// Predicts the log-strength shift caused by flipping the given
/// `(winner, loser)` counts, at a fitted solution `p_hat`.
///
/// The prediction is linear in the flip list: the estimate for a multi-flip
/// set is exactly the sum of its single-flip estimates.
pub fn influence_of_flips(
    counts: &CountMatrix,
    p_hat: &StrengthVector,
    flips: &[(usize, usize)],
) -> Result<InfluenceEstimate, InfluenceError> {
    let m = counts.m();
    if p_hat.len() != m {
        return Err(FitError::DimensionMismatch {
            counts: m,
            strengths: p_hat.len(),
        }
        .into());
    }
    if flips.is_empty() {
        return Ok(InfluenceEstimate {
            delta_theta: vec![0.0; m],
            predicted_ranking: ranking_from_strengths(p_hat),
        });
    }

    // Walk the flips on a scratch copy so repeated flips of the same pair
    // are validated against the counts actually remaining.
    let mut scratch = counts.clone();
    let mut delta_g = DVector::zeros(m);
    for &(winner, loser) in flips {
        validate_flip(&scratch, winner, loser)?;
        scratch
            .flip_one(winner, loser)
            .expect("validated flip cannot fail");
        delta_g[winner] -= 1.0;
        delta_g[loser] += 1.0;
    }

    let h = mle::hessian(counts, p_hat)?;
    let delta_theta = solve_in_zero_sum_subspace(counts, &h, &delta_g)?;

    let theta: Vec<f64> = p_hat
        .log()
        .iter()
        .zip(delta_theta.iter())
        .map(|(t, d)| t + d)
        .collect();
    let predicted_ranking = ranking_from_strengths(&softmax(&theta));
    Ok(InfluenceEstimate {
        delta_theta,
        predicted_ranking,
    })
}

/// Solves `H x = -rhs` for the unique `x` with zero component sum. Since
/// `-H` is positive semidefinite with null space spanned by the all-ones
/// vector, `-H + (s/m) * 11^T` is positive definite whenever the comparison
/// graph is connected, and its solution for a zero-sum right-hand side is
/// exactly the projected solve.
fn solve_in_zero_sum_subspace(
    counts: &CountMatrix,
    h: &DMatrix<f64>,
    rhs: &DVector<f64>,
) -> Result<Vec<f64>, InfluenceError> {
    let m = h.nrows();
    let scale = -h.trace() / m as f64;
    let ill_conditioned = |residual: f64| InfluenceError::IllConditioned {
        residual,
        components: check_connectivity(counts).members(),
    };
    if scale.is_nan() || scale <= 0.0 {
        return Err(ill_conditioned(f64::INFINITY));
    }
    let shift = scale / m as f64;
    let mut a = -h;
    for i in 0..m {
        for j in 0..m {
            a[(i, j)] += shift;
        }
    }
    let chol = a.cholesky().ok_or_else(|| ill_conditioned(f64::INFINITY))?;
    let x = chol.solve(rhs);
    let residual = (h * &x + rhs).amax();
    let tolerance = 1e-7 * rhs.amax().max(1.0);
    if residual > tolerance {
        return Err(ill_conditioned(residual));
    }
    Ok(x.iter().copied().collect())
}

/// Orders candidate flips by how far their predicted first-order effect
/// moves the ranking toward `target` (most effective first; ties keep the
/// input order). An optional pre-ordering hook for callers that want an
/// influence-guided search; the subset attacks do not consume it, so their
/// behavior stays purely empirical by default.
pub fn rank_flips_by_target_alignment(
    counts: &CountMatrix,
    p_hat: &StrengthVector,
    target: &Ranking,
    flips: &[(usize, usize)],
) -> Result<Vec<usize>, InfluenceError> {
    let current = ranking_from_strengths(p_hat);
    let baseline = kendall_tau(target, &current).map_err(FitError::from)?;
    let mut scored = Vec::with_capacity(flips.len());
    for (index, &flip) in flips.iter().enumerate() {
        let estimate = influence_of_flips(counts, p_hat, &[flip])?;
        let predicted = kendall_tau(target, &estimate.predicted_ranking)
            .map_err(FitError::from)?;
        let gain = baseline as i64 - predicted as i64;
        scored.push((index, gain));
    }
    scored.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(scored.into_iter().map(|(index, _)| index).collect())
}

fn softmax(theta: &[f64]) -> StrengthVector {
    let max = theta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    StrengthVector::normalized(theta.iter().map(|t| (t - max).exp()).collect())
        .expect("softmax output is positive")
}

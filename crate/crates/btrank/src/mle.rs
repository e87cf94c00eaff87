//! Maximum-likelihood estimation of candidate strengths from aggregate win
//! counts, via the minorization-maximization fixed point
//! `p_i <- W_i / sum_j (n_ij + n_ji) / (p_i + p_j)`, renormalized each
//! iteration. The update is derivative-free and the log-likelihood is
//! non-decreasing across iterations.
//!
//! Also provides the log-likelihood, its gradient and Hessian in the
//! log-parameterization `theta_i = ln p_i`, and a strong-connectivity check
//! on the comparison graph (edge `i -> j` when `i` has beaten `j` at least
//! once). Without strong connectivity the likelihood has no finite
//! maximizer and [`fit`] refuses to run unless a positive regularization
//! pseudo-count is configured.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::model::{CountMatrix, ModelError, StrengthVector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("invalid fit configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: counts are {counts}x{counts} but strengths have length {strengths}")]
    DimensionMismatch { counts: usize, strengths: usize },
    #[error(
        "comparison graph is not strongly connected, so the likelihood has no \
         finite maximizer; candidate groups, sources first: {components:?}"
    )]
    NonIdentifiable { components: Vec<Vec<usize>> },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Solver controls for [`fit`].
#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    /// Convergence tolerance on the max absolute change in `p` per iteration.
    pub tol: f64,
    /// Iteration cap. Hitting it yields `converged = false`, not an error.
    pub max_iters: usize,
    /// Pseudo-count added to every off-diagonal count. Zero keeps the exact
    /// MLE; positive values make any instance identifiable.
    pub regularization: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iters: 10_000,
            regularization: 0.0,
        }
    }
}

impl FitConfig {
    fn validate(&self) -> Result<(), FitError> {
        if !self.tol.is_finite() || self.tol <= 0.0 {
            return Err(FitError::InvalidConfig(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iters == 0 {
            return Err(FitError::InvalidConfig("max_iters must be at least 1".into()));
        }
        if !self.regularization.is_finite() || self.regularization < 0.0 {
            return Err(FitError::InvalidConfig(format!(
                "regularization must be non-negative, got {}",
                self.regularization
            )));
        }
        Ok(())
    }
}

/// Outcome of a fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub strengths: StrengthVector,
    /// Log-likelihood of the raw counts at the fitted strengths.
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Log-likelihood of the counts under strengths `p`:
/// `sum_{i<j} [n_ij ln(p_i/(p_i+p_j)) + n_ji ln(p_j/(p_i+p_j))]`.
/// Always non-positive; zero for an all-zero count matrix.
pub fn log_likelihood(counts: &CountMatrix, p: &StrengthVector) -> Result<f64, FitError> {
    check_dims(counts, p)?;
    Ok(ll_inner(counts, 0.0, p.as_slice()))
}

fn ll_inner(counts: &CountMatrix, eps: f64, p: &[f64]) -> f64 {
    let m = counts.m();
    let mut ll = 0.0;
    for i in 0..m {
        for j in (i + 1)..m {
            let n_ij = counts.get(i, j) as f64 + eps;
            let n_ji = counts.get(j, i) as f64 + eps;
            let sum = p[i] + p[j];
            if n_ij > 0.0 {
                ll += n_ij * (p[i] / sum).ln();
            }
            if n_ji > 0.0 {
                ll += n_ji * (p[j] / sum).ln();
            }
        }
    }
    ll
}

fn check_dims(counts: &CountMatrix, p: &StrengthVector) -> Result<(), FitError> {
    if counts.m() != p.len() {
        return Err(FitError::DimensionMismatch {
            counts: counts.m(),
            strengths: p.len(),
        });
    }
    Ok(())
}

/// Fits strengths by MLE starting from the uniform vector.
pub fn fit(counts: &CountMatrix, config: &FitConfig) -> Result<FitResult, FitError> {
    fit_with_init(counts, config, &StrengthVector::uniform(counts.m()))
}

/// Fits strengths starting from `init`. On a strongly connected instance the
/// stationary point is unique, so the start affects iteration count only;
/// warm-starting from a nearby solution is the intended use.
pub fn fit_with_init(
    counts: &CountMatrix,
    config: &FitConfig,
    init: &StrengthVector,
) -> Result<FitResult, FitError> {
    fit_inner(counts, config, init, None)
}

/// Like [`fit`], but also returns the log-likelihood after every iteration
/// (of the regularized counts when `regularization > 0`). The sequence is
/// non-decreasing; exposed for diagnostics and tests.
pub fn fit_trace(counts: &CountMatrix, config: &FitConfig) -> Result<(FitResult, Vec<f64>), FitError> {
    let mut trace = Vec::new();
    let result = fit_inner(
        counts,
        config,
        &StrengthVector::uniform(counts.m()),
        Some(&mut trace),
    )?;
    Ok((result, trace))
}

fn fit_inner(
    counts: &CountMatrix,
    config: &FitConfig,
    init: &StrengthVector,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<FitResult, FitError> {
    config.validate()?;
    let m = counts.m();
    if m < 2 {
        return Err(FitError::InvalidConfig(format!(
            "need at least two candidates, got {m}"
        )));
    }
    check_dims(counts, init)?;
    let eps = config.regularization;
    if eps == 0.0 {
        let report = check_connectivity(counts);
        if !report.strongly_connected {
            return Err(FitError::NonIdentifiable {
                components: report.members(),
            });
        }
    }

    let mut wins = vec![0.0; m];
    let mut totals = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            if i == j {
                continue;
            }
            let n_ij = counts.get(i, j) as f64 + eps;
            wins[i] += n_ij;
            totals[i * m + j] = n_ij + counts.get(j, i) as f64 + eps;
        }
    }

    let mut p = init.as_slice().to_vec();
    let mut iterations = 0;
    let mut converged = false;
    for iter in 1..=config.max_iters {
        iterations = iter;
        let mut next = vec![0.0; m];
        for i in 0..m {
            let mut denom = 0.0;
            for j in 0..m {
                if j != i {
                    denom += totals[i * m + j] / (p[i] + p[j]);
                }
            }
            next[i] = wins[i] / denom;
        }
        let sum: f64 = next.iter().sum();
        for x in next.iter_mut() {
            *x /= sum;
        }
        let change = p
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        p = next;
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(ll_inner(counts, eps, &p));
        }
        if change <= config.tol {
            converged = true;
            break;
        }
    }

    let strengths = StrengthVector::new(p).map_err(FitError::Model)?;
    let log_likelihood = ll_inner(counts, 0.0, strengths.as_slice());
    Ok(FitResult {
        strengths,
        log_likelihood,
        iterations,
        converged,
    })
}

/// Gradient of the log-likelihood in `theta_i = ln p_i`: component `i` is
/// `sum_{j != i} [n_ij - (n_ij + n_ji) p_i / (p_i + p_j)]`. Components sum
/// to zero (the likelihood is invariant under a common shift of `theta`).
pub fn gradient(counts: &CountMatrix, p: &StrengthVector) -> Result<Vec<f64>, FitError> {
    check_dims(counts, p)?;
    let m = counts.m();
    let mut g = vec![0.0; m];
    for (i, g_i) in g.iter_mut().enumerate() {
        for j in 0..m {
            if j == i {
                continue;
            }
            let n_ij = counts.get(i, j) as f64;
            let total = counts.pair_total(i, j) as f64;
            *g_i += n_ij - total * p.get(i) / (p.get(i) + p.get(j));
        }
    }
    Ok(g)
}

/// Hessian of the log-likelihood in `theta`. Off-diagonal `(i, j)` is
/// `(n_ij + n_ji) p_i p_j / (p_i + p_j)^2`; the diagonal makes every row sum
/// to zero. Symmetric and negative semidefinite, with the all-ones vector in
/// its null space.
pub fn hessian(counts: &CountMatrix, p: &StrengthVector) -> Result<DMatrix<f64>, FitError> {
    check_dims(counts, p)?;
    let m = counts.m();
    let mut h = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            if j == i {
                continue;
            }
            let total = counts.pair_total(i, j) as f64;
            let sum = p.get(i) + p.get(j);
            let v = total * p.get(i) * p.get(j) / (sum * sum);
            h[(i, j)] = v;
            h[(i, i)] -= v;
        }
    }
    Ok(h)
}

/// One strongly connected group of candidates in the comparison graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectivityComponent {
    /// Candidate indices in the group, ascending.
    pub members: Vec<usize>,
    /// No other group ever beat anyone in this group.
    pub is_source: bool,
    /// This group never beat anyone outside it. A candidate with zero wins
    /// always shows up as (part of) a sink.
    pub is_sink: bool,
}

/// Strong-connectivity diagnosis of the comparison graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectivityReport {
    pub strongly_connected: bool,
    /// Condensation components in topological order, sources first. A single
    /// component means the instance is identifiable.
    pub components: Vec<ConnectivityComponent>,
}

impl ConnectivityReport {
    /// Just the member lists, in the same order as `components`.
    pub fn members(&self) -> Vec<Vec<usize>> {
        self.components.iter().map(|c| c.members.clone()).collect()
    }
}

/// Reports whether the directed graph with an edge `i -> j` whenever
/// `n_ij > 0` is strongly connected, and lists its condensation otherwise.
pub fn check_connectivity(counts: &CountMatrix) -> ConnectivityReport {
    let m = counts.m();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (i, out) in adj.iter_mut().enumerate() {
        for j in 0..m {
            if i != j && counts.get(i, j) > 0 {
                out.push(j);
            }
        }
    }
    let mut sccs = tarjan_scc(&adj);
    sccs.reverse(); // Tarjan emits reverse topological order

    let mut comp_of = vec![0usize; m];
    for (k, comp) in sccs.iter().enumerate() {
        for &v in comp {
            comp_of[v] = k;
        }
    }
    let mut has_in = vec![false; sccs.len()];
    let mut has_out = vec![false; sccs.len()];
    for (i, out) in adj.iter().enumerate() {
        for &j in out {
            if comp_of[i] != comp_of[j] {
                has_out[comp_of[i]] = true;
                has_in[comp_of[j]] = true;
            }
        }
    }
    let components = sccs
        .into_iter()
        .enumerate()
        .map(|(k, members)| ConnectivityComponent {
            members,
            is_source: !has_in[k],
            is_sink: !has_out[k],
        })
        .collect::<Vec<_>>();
    ConnectivityReport {
        strongly_connected: components.len() == 1 && m > 0,
        components,
    }
}

/// Iterative Tarjan; returns strongly connected components in reverse
/// topological order, members sorted ascending.
fn tarjan_scc(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    const UNVISITED: usize = usize::MAX;
    let n = adj.len();
    let mut index = vec![UNVISITED; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut next_index = 0usize;
    let mut components = Vec::new();

    for start in 0..n {
        if index[start] != UNVISITED {
            continue;
        }
        let mut frames: Vec<(usize, usize)> = vec![(start, 0)];
        while let Some(frame) = frames.last_mut() {
            let v = frame.0;
            if index[v] == UNVISITED {
                index[v] = next_index;
                low[v] = next_index;
                next_index += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            if frame.1 < adj[v].len() {
                let w = adj[v][frame.1];
                frame.1 += 1;
                if index[w] == UNVISITED {
                    frames.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                frames.pop();
                if let Some(parent) = frames.last() {
                    let pv = parent.0;
                    low[pv] = low[pv].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("Tarjan stack underflow");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    components.push(comp);
                }
            }
        }
    }
    components
}

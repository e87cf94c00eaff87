//! The adversary's side: given a target ranking, a flip budget, and a
//! coalition of controllable voters, search for a flip set that pulls the
//! fitted ranking toward the target. Four strategies:
//!
//! - [`random_flip`]: flip a random budget-sized subset of the coalition's
//!   comparisons, keep it only if it helps.
//! - [`greedy_flip`]: repeatedly commit the single flip with the largest
//!   immediate Kendall-tau reduction, one refit per candidate flip.
//! - [`rsa`]: repeatedly shuffle the coalition pool into `b` subsets and
//!   flip each subset tentatively, accepting any that strictly reduce the
//!   distance.
//! - [`assa`]: like [`rsa`], but after each round only the accepted subsets
//!   survive as the next round's search pool, narrowing onto the
//!   high-influence comparisons.
//!
//! Shared rules: the flip set is accounted as a symmetric difference (a
//! position flipped twice is back to normal and costs nothing), a tentative
//! subset is skipped when applying it would push the flip set past the
//! budget, every candidate state is re-ranked by a fresh MLE fit, and a
//! flip that would disconnect the comparison graph is rejected outright
//! since it leaves the MLE undefined. Tentative fits start from the uniform
//! vector, not the incumbent solution: a warm start can settle on the other
//! side of a near-tie and report a ranking that an independent refit would
//! not reproduce. Tentative refits within one partition may run in
//! parallel; acceptance is applied strictly in partition order, so results
//! are identical with and without parallelism.

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec;
use crate::mle::{self, FitConfig, FitError};
use crate::model::{
    aggregate, flip, kendall_tau, ranking_from_strengths, ComparisonDataset, CountMatrix, FlipSet,
    ModelError, Ranking, StrengthVector,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AttackError {
    #[error("coalition must not be empty")]
    EmptyCoalition,
    #[error("coalition voter {voter} out of range for {n_voters} voters")]
    UnknownVoter { voter: usize, n_voters: usize },
    #[error("target ranks {target} candidates but the dataset has {dataset}")]
    TargetDimensionMismatch { target: usize, dataset: usize },
    #[error("subset count must be at least 1")]
    ZeroSubsets,
    #[error("iteration count must be at least 1")]
    ZeroIterations,
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Which manipulation strategy to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AttackAlgorithm {
    #[serde(rename = "RF")]
    RandomFlip,
    #[serde(rename = "GF")]
    GreedyFlip,
    #[serde(rename = "RSA")]
    Rsa,
    #[serde(rename = "ASSA")]
    Assa,
}

impl AttackAlgorithm {
    pub const ALL: [AttackAlgorithm; 4] = [
        AttackAlgorithm::RandomFlip,
        AttackAlgorithm::GreedyFlip,
        AttackAlgorithm::Rsa,
        AttackAlgorithm::Assa,
    ];
}

impl fmt::Display for AttackAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let code = match self {
            AttackAlgorithm::RandomFlip => "RF",
            AttackAlgorithm::GreedyFlip => "GF",
            AttackAlgorithm::Rsa => "RSA",
            AttackAlgorithm::Assa => "ASSA",
        };
        f.write_str(code)
    }
}

impl std::str::FromStr for AttackAlgorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rf" | "random-flip" | "random_flip" => Ok(Self::RandomFlip),
            "gf" | "greedy-flip" | "greedy_flip" => Ok(Self::GreedyFlip),
            "rsa" => Ok(Self::Rsa),
            "assa" => Ok(Self::Assa),
            other => Err(format!(
                "unknown algorithm {other:?}, expected one of RF, GF, RSA, ASSA"
            )),
        }
    }
}

/// Adversary parameters shared by all four strategies.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackConfig {
    /// The ranking the adversary wants, best first.
    pub target: Ranking,
    /// Maximum flip-set size. Hard: never exceeded, not even transiently.
    pub budget: usize,
    /// Voters whose comparisons may be flipped.
    pub coalition: BTreeSet<usize>,
    pub seed: u64,
    /// Number of subsets per partition round (RSA and ASSA).
    pub subsets: usize,
    /// Partition rounds (RSA) or pruning rounds (ASSA).
    pub iterations: usize,
    pub fit: FitConfig,
}

impl AttackConfig {
    /// A config targeting `target` with every voter in the coalition.
    pub fn new(target: Ranking, budget: usize, dataset: &ComparisonDataset, seed: u64) -> Self {
        Self {
            target,
            budget,
            coalition: (0..dataset.n_voters()).collect(),
            seed,
            subsets: 5,
            iterations: 50,
            fit: FitConfig::default(),
        }
    }
}

/// What an attack did and achieved. `flips` is relative to the original
/// dataset and `manipulated` equals the original with exactly those
/// positions flipped; `trajectory` records `(flips in use, distance)` after
/// each event, starting from `(0, initial_distance)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackResult {
    pub flips: FlipSet,
    pub manipulated: ComparisonDataset,
    pub trajectory: Vec<(usize, u64)>,
    pub final_distance: u64,
    pub initial_distance: u64,
}

/// Positions of the comparisons cast by coalition voters, in dataset order.
/// An empty coalition is permitted here (yielding an empty pool); the
/// attacks themselves reject it.
pub fn coalition_pool(
    dataset: &ComparisonDataset,
    coalition: &BTreeSet<usize>,
) -> Result<Vec<usize>, AttackError> {
    for &voter in coalition {
        if voter >= dataset.n_voters() {
            return Err(AttackError::UnknownVoter {
                voter,
                n_voters: dataset.n_voters(),
            });
        }
    }
    Ok(dataset
        .comparisons()
        .iter()
        .enumerate()
        .filter(|(_, c)| coalition.contains(&c.voter))
        .map(|(i, _)| i)
        .collect())
}

/// Runs the chosen strategy.
pub fn run(
    algorithm: AttackAlgorithm,
    dataset: &ComparisonDataset,
    config: &AttackConfig,
) -> Result<AttackResult, AttackError> {
    match algorithm {
        AttackAlgorithm::RandomFlip => random_flip(dataset, config),
        AttackAlgorithm::GreedyFlip => greedy_flip(dataset, config),
        AttackAlgorithm::Rsa => rsa(dataset, config),
        AttackAlgorithm::Assa => assa(dataset, config),
    }
}

pub fn random_flip(
    dataset: &ComparisonDataset,
    config: &AttackConfig,
) -> Result<AttackResult, AttackError> {
    random_flip_opts(dataset, config, false, exec::parallel_enabled())
}

pub fn greedy_flip(
    dataset: &ComparisonDataset,
    config: &AttackConfig,
) -> Result<AttackResult, AttackError> {
    greedy_flip_opts(dataset, config, false, exec::parallel_enabled())
}

pub fn rsa(dataset: &ComparisonDataset, config: &AttackConfig) -> Result<AttackResult, AttackError> {
    rsa_opts(dataset, config, false, exec::parallel_enabled())
}

pub fn assa(
    dataset: &ComparisonDataset,
    config: &AttackConfig,
) -> Result<AttackResult, AttackError> {
    assa_opts(dataset, config, false, exec::parallel_enabled())
}

pub(crate) fn random_flip_opts(
    dataset: &ComparisonDataset,
    config: &AttackConfig,
    warm_start: bool,
    parallel: bool,
) -> Result<AttackResult, AttackError> {
    let mut state = SearchState::new(dataset, config, warm_start, parallel)?;
    let pool = coalition_pool(dataset, &config.coalition)?;
    let take = config.budget.min(pool.len());
    if take == 0 {
        return state.into_result();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut chosen: Vec<usize> = rand::seq::index::sample(&mut rng, pool.len(), take)
        .iter()
        .map(|i| pool[i])
        .collect();
    chosen.sort_unstable();
    if let Some(eval) = state.evaluate(&chosen)? {
        if eval.distance < state.distance {
            state.accept(&chosen, eval);
        } else {
            // The attempt stays visible in the trajectory but the flips are
            // reverted, so the result never ends worse than it started.
            state.trajectory.push((take, eval.distance));
        }
    }
    state.into_result()
}

pub(crate) fn greedy_flip_opts(
    dataset: &ComparisonDataset,
    config: &AttackConfig,
    warm_start: bool,
    parallel: bool,
) -> Result<AttackResult, AttackError> {
    let mut state = SearchState::new(dataset, config, warm_start, parallel)?;
    let pool = coalition_pool(dataset, &config.coalition)?;
    while state.delta.len() < config.budget {
        // Ascending position order; strict improvement below means ties
        // break toward the lowest position.
        let candidates: Vec<Vec<usize>> = pool
            .iter()
            .filter(|pos| !state.delta.contains(pos))
            .map(|&pos| vec![pos])
            .collect();
        if candidates.is_empty() {
            break;
        }
        let evals = state.evaluate_chunks(&candidates)?;
        let mut best: Option<(u64, usize, Evaluation)> = None;
        for (chunk, eval) in candidates.iter().zip(evals) {
            if let Some(eval) = eval {
                if best.as_ref().is_none_or(|(d, _, _)| eval.distance < *d) {
                    best = Some((eval.distance, chunk[0], eval));
                }
            }
        }
        match best {
            Some((distance, pos, eval)) if distance < state.distance => {
                state.accept(&[pos], eval);
            }
            _ => break,
        }
    }
    state.into_result()
}

pub(crate) fn rsa_opts(
    dataset: &ComparisonDataset,
    config: &AttackConfig,
    warm_start: bool,
    parallel: bool,
) -> Result<AttackResult, AttackError> {
    let mut state = SearchState::new(dataset, config, warm_start, parallel)?;
    let pool = coalition_pool(dataset, &config.coalition)?;
    if pool.is_empty() || config.budget == 0 {
        return state.into_result();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for _ in 0..config.iterations {
        let mut perm = pool.clone();
        perm.shuffle(&mut rng);
        let chunks = split_into_chunks(&perm, config.subsets);
        state.sweep_chunks(&chunks)?;
    }
    state.into_result()
}

pub(crate) fn assa_opts(
    dataset: &ComparisonDataset,
    config: &AttackConfig,
    warm_start: bool,
    parallel: bool,
) -> Result<AttackResult, AttackError> {
    let mut state = SearchState::new(dataset, config, warm_start, parallel)?;
    let mut search_pool = coalition_pool(dataset, &config.coalition)?;
    if search_pool.is_empty() || config.budget == 0 {
        return state.into_result();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for _ in 0..config.iterations {
        if state.delta.len() >= config.budget {
            break;
        }
        let mut perm = search_pool.clone();
        perm.shuffle(&mut rng);
        let chunks = split_into_chunks(&perm, config.subsets);
        let accepted = state.sweep_chunks(&chunks)?;
        // A productive round prunes the pool to the accepted subsets; a
        // fruitless round keeps it for a fresh shuffle. The pool can shrink
        // but never grow.
        if !accepted.is_empty() {
            let mut next: Vec<usize> = accepted
                .iter()
                .flat_map(|&k| chunks[k].iter().copied())
                .collect();
            next.sort_unstable();
            debug_assert!(next.len() <= search_pool.len());
            search_pool = next;
        }
    }
    state.into_result()
}

/// Shuffled pool split into `b` contiguous chunks whose sizes differ by at
/// most one. Chunks beyond the pool size come out empty.
fn split_into_chunks(perm: &[usize], b: usize) -> Vec<Vec<usize>> {
    let base = perm.len() / b;
    let rem = perm.len() % b;
    let mut chunks = Vec::with_capacity(b);
    let mut start = 0;
    for k in 0..b {
        let size = base + usize::from(k < rem);
        chunks.push(perm[start..start + size].to_vec());
        start += size;
    }
    chunks
}

struct Evaluation {
    counts: CountMatrix,
    strengths: StrengthVector,
    distance: u64,
}

/// Rolling attack state: the current flip set (vs. the original dataset),
/// the matching count matrix, and the incumbent fit.
struct SearchState<'a> {
    dataset: &'a ComparisonDataset,
    config: &'a AttackConfig,
    counts: CountMatrix,
    delta: BTreeSet<usize>,
    strengths: StrengthVector,
    distance: u64,
    trajectory: Vec<(usize, u64)>,
    warm_start: bool,
    parallel: bool,
}

impl<'a> SearchState<'a> {
    fn new(
        dataset: &'a ComparisonDataset,
        config: &'a AttackConfig,
        warm_start: bool,
        parallel: bool,
    ) -> Result<Self, AttackError> {
        if config.subsets == 0 {
            return Err(AttackError::ZeroSubsets);
        }
        if config.iterations == 0 {
            return Err(AttackError::ZeroIterations);
        }
        if config.target.len() != dataset.num_candidates() {
            return Err(AttackError::TargetDimensionMismatch {
                target: config.target.len(),
                dataset: dataset.num_candidates(),
            });
        }
        if config.coalition.is_empty() {
            return Err(AttackError::EmptyCoalition);
        }
        if let Some(&voter) = config.coalition.iter().find(|&&v| v >= dataset.n_voters()) {
            return Err(AttackError::UnknownVoter {
                voter,
                n_voters: dataset.n_voters(),
            });
        }
        let counts = aggregate(dataset);
        let fitted = mle::fit(&counts, &config.fit)?;
        let ranking = ranking_from_strengths(&fitted.strengths);
        let distance = kendall_tau(&config.target, &ranking)?;
        Ok(Self {
            dataset,
            config,
            counts,
            delta: BTreeSet::new(),
            strengths: fitted.strengths,
            distance,
            trajectory: vec![(0, distance)],
            warm_start,
            parallel,
        })
    }

    /// Current orientation of the comparison at `pos`, accounting for flips
    /// already committed.
    fn orientation(&self, pos: usize) -> (usize, usize) {
        let c = self.dataset.comparisons()[pos];
        if self.delta.contains(&pos) {
            (c.loser, c.winner)
        } else {
            (c.winner, c.loser)
        }
    }

    /// Flip-set size if `subset` were applied on top of the current state
    /// (symmetric-difference accounting).
    fn prospective_size(&self, subset: &[usize]) -> usize {
        let mut size = self.delta.len();
        for pos in subset {
            if self.delta.contains(pos) {
                size -= 1;
            } else {
                size += 1;
            }
        }
        size
    }

    /// Tentatively flips `subset` on top of the current state and refits.
    /// Returns `None` when the flipped counts are non-identifiable: such a
    /// perturbation yields no MLE ranking, so it can never be accepted.
    fn evaluate(&self, subset: &[usize]) -> Result<Option<Evaluation>, AttackError> {
        let mut counts = self.counts.clone();
        for &pos in subset {
            let (winner, loser) = self.orientation(pos);
            counts
                .flip_one(winner, loser)
                .expect("count matrix tracks the dataset");
        }
        let init = if self.warm_start {
            self.strengths.clone()
        } else {
            StrengthVector::uniform(counts.m())
        };
        match mle::fit_with_init(&counts, &self.config.fit, &init) {
            Ok(fitted) => {
                let ranking = ranking_from_strengths(&fitted.strengths);
                let distance = kendall_tau(&self.config.target, &ranking)?;
                Ok(Some(Evaluation {
                    counts,
                    strengths: fitted.strengths,
                    distance,
                }))
            }
            Err(FitError::NonIdentifiable { .. }) => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    fn evaluate_chunks(
        &self,
        chunks: &[Vec<usize>],
    ) -> Result<Vec<Option<Evaluation>>, AttackError> {
        // Fanning out only pays when the batch carries real work; a handful
        // of microsecond fits is cheaper inline than scheduled. The result
        // is identical either way.
        let m = self.counts.m();
        let parallel = self.parallel && chunks.len() * m * m >= 1024;
        exec::run_map(parallel, chunks, |chunk| self.evaluate(chunk))
            .into_iter()
            .collect()
    }

    fn accept(&mut self, subset: &[usize], eval: Evaluation) {
        for &pos in subset {
            if !self.delta.remove(&pos) {
                self.delta.insert(pos);
            }
        }
        self.counts = eval.counts;
        self.strengths = eval.strengths;
        self.distance = eval.distance;
        self.trajectory.push((self.delta.len(), self.distance));
    }

    /// Processes one partition: all chunks are evaluated (possibly in
    /// parallel) against the state at the start, then visited in partition
    /// order. An acceptance changes the state, so evaluations of the
    /// remaining chunks are recomputed; the outcome is exactly the
    /// sequential one. Chunks that are empty or would break the budget are
    /// skipped. Returns the indices of accepted chunks.
    fn sweep_chunks(&mut self, chunks: &[Vec<usize>]) -> Result<Vec<usize>, AttackError> {
        let mut results = self.evaluate_chunks(chunks)?;
        let mut accepted = Vec::new();
        let mut k = 0;
        while k < chunks.len() {
            let chunk = &chunks[k];
            if !chunk.is_empty() && self.prospective_size(chunk) <= self.config.budget {
                if let Some(eval) = results[k].take() {
                    if eval.distance < self.distance {
                        self.accept(chunk, eval);
                        accepted.push(k);
                        if k + 1 < chunks.len() {
                            let tail = self.evaluate_chunks(&chunks[k + 1..])?;
                            results.truncate(k + 1);
                            results.extend(tail);
                        }
                    }
                }
            }
            k += 1;
        }
        Ok(accepted)
    }

    fn into_result(self) -> Result<AttackResult, AttackError> {
        let flips = FlipSet::from(self.delta);
        let manipulated = flip(self.dataset, &flips)?;
        let initial_distance = self.trajectory[0].1;
        Ok(AttackResult {
            flips,
            manipulated,
            trajectory: self.trajectory,
            final_distance: self.distance,
            initial_distance,
        })
    }
}

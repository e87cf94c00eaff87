//! Bradley-Terry ranking from pairwise comparison data, and stress-testing
//! of the fitted ranking under adversarial vote flips.
//!
//! The pipeline: a [`model::ComparisonDataset`] of voter-attributed pairwise
//! preferences is aggregated into a win-count matrix, [`mle::fit`] estimates
//! latent candidate strengths by maximum likelihood, and the global ranking
//! is the descending order of those strengths. The [`attacks`] module then
//! asks how fragile that ranking is: given a flip budget and a coalition of
//! controllable voters, how close can an adversary push the fitted ranking
//! to a chosen target? Four strategies are provided (random flip, greedy
//! flip, randomized subset search, and adaptive subset search), plus
//! first-order [`influence`] diagnostics and an [`experiments`] harness for
//! budget sweeps and collusion-threshold estimation.
//!
//! With the default `parallel` feature the per-flip refit scans and sweep
//! trials run on a rayon pool; results are identical to the sequential
//! fallback (`--no-default-features`).

pub mod attacks;
pub mod data;
pub mod exec;
pub mod experiments;
pub mod influence;
pub mod mle;
pub mod model;

pub use model::{
    aggregate, bt_probability, flip, kendall_tau, ranking_from_strengths, CandidateSet,
    Comparison, ComparisonDataset, CountMatrix, FlipSet, Ranking, StrengthVector,
};

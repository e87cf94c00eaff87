//! Dataset tooling: synthetic electorate generation under the Bradley-Terry
//! model, ranked-ballot ingestion with incomplete-ballot handling, and a
//! line-oriented text format for comparison datasets.
//!
//! Both text formats are UTF-8 and order-preserving (flip sets address
//! comparisons by position, so serialization must be exact):
//!
//! Ballot files:
//! ```text
//! candidates: Alice,Bob,Carol
//! 2: Alice,Bob
//! Carol,Alice
//! ```
//! The header lists candidate names; each body line is one ballot, ranked
//! best first, with an optional `COUNT:` multiplicity prefix (default 1).
//! Candidate names may not contain commas or newlines.
//!
//! Dataset files:
//! ```text
//! m=3
//! n_voters=5
//! candidates=Alice,Bob,Carol
//! 0,0,1
//! ```
//! Three header lines, then one `voter,winner,loser` index triple per line.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{CandidateSet, Comparison, ComparisonDataset, ModelError, StrengthVector};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("ballot {index}: {message}")]
    InvalidBallot { index: usize, message: String },
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn parse_err(line: usize, message: impl Into<String>) -> DataError {
    DataError::Parse {
        line,
        message: message.into(),
    }
}

/// Generator family for ground-truth strengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StrengthLaw {
    /// Independent draws from the open unit interval, then normalized.
    Uniform,
    /// `p_i` proportional to `ratio^i`, `ratio` in `(0, 1]`.
    Geometric { ratio: f64 },
}

/// Parameters for [`generate_synthetic`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub m: usize,
    pub n_voters: usize,
    /// Distinct unordered pairs each voter judges.
    pub comparisons_per_voter: usize,
    pub strength_law: StrengthLaw,
    pub seed: u64,
}

impl SyntheticSpec {
    fn validate(&self) -> Result<(), DataError> {
        if self.m < 2 {
            return Err(DataError::InvalidSpec(format!(
                "need at least two candidates, got {}",
                self.m
            )));
        }
        let num_pairs = self.m * (self.m - 1) / 2;
        if self.comparisons_per_voter > num_pairs {
            return Err(DataError::InvalidSpec(format!(
                "comparisons_per_voter {} exceeds the {} distinct pairs of {} candidates",
                self.comparisons_per_voter, num_pairs, self.m
            )));
        }
        if let StrengthLaw::Geometric { ratio } = self.strength_law {
            if !(ratio > 0.0 && ratio <= 1.0) {
                return Err(DataError::InvalidSpec(format!(
                    "geometric ratio must lie in (0, 1], got {ratio}"
                )));
            }
        }
        Ok(())
    }
}

/// Unordered pair with lexicographic index `k` among the `m(m-1)/2` pairs.
fn pair_from_index(mut k: usize, m: usize) -> (usize, usize) {
    for i in 0..m {
        let row = m - 1 - i;
        if k < row {
            return (i, i + 1 + k);
        }
        k -= row;
    }
    unreachable!("pair index out of range")
}

/// Draws a synthetic electorate: each voter judges `comparisons_per_voter`
/// distinct pairs sampled uniformly, and each pair's winner is drawn with
/// probability `p_i / (p_i + p_j)` from the ground truth. Deterministic
/// given the seed. Returns the dataset and the ground-truth strengths.
pub fn generate_synthetic(
    spec: &SyntheticSpec,
) -> Result<(ComparisonDataset, StrengthVector), DataError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let truth = match spec.strength_law {
        StrengthLaw::Uniform => {
            let raw: Vec<f64> = (0..spec.m)
                .map(|_| loop {
                    let x: f64 = rng.gen();
                    if x > 0.0 {
                        break x;
                    }
                })
                .collect();
            StrengthVector::normalized(raw)?
        }
        StrengthLaw::Geometric { ratio } => {
            StrengthVector::normalized((0..spec.m).map(|i| ratio.powi(i as i32)).collect())?
        }
    };

    let num_pairs = spec.m * (spec.m - 1) / 2;
    let mut comparisons = Vec::with_capacity(spec.n_voters * spec.comparisons_per_voter);
    for voter in 0..spec.n_voters {
        let mut picks =
            rand::seq::index::sample(&mut rng, num_pairs, spec.comparisons_per_voter).into_vec();
        picks.sort_unstable();
        for k in picks {
            let (i, j) = pair_from_index(k, spec.m);
            let p_win = truth.get(i) / (truth.get(i) + truth.get(j));
            let (winner, loser) = if rng.gen_bool(p_win) { (i, j) } else { (j, i) };
            comparisons.push(Comparison {
                voter,
                winner,
                loser,
            });
        }
    }
    let candidates = CandidateSet::with_generic_names(spec.m)?;
    let dataset = ComparisonDataset::new(candidates, spec.n_voters, comparisons)?;
    Ok((dataset, truth))
}

/// One ranked ballot: distinct candidate indices best first, possibly a
/// strict prefix of the candidates, with a multiplicity `weight`. A weighted
/// ballot replicates its comparisons under the same voter index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankedBallot {
    pub voter: usize,
    pub ranking: Vec<usize>,
    pub weight: u64,
}

/// How to expand an incomplete ballot into pairwise comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IncompletePolicy {
    /// Emit only pairs among the ranked candidates (the assumption-free
    /// default).
    RankedOnly,
    /// Additionally count every ranked candidate as beating every unranked
    /// one.
    RankedOverUnranked,
}

impl std::str::FromStr for IncompletePolicy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ranked-only" => Ok(Self::RankedOnly),
            "ranked-over-unranked" => Ok(Self::RankedOverUnranked),
            other => Err(format!(
                "unknown policy {other:?}, expected ranked-only or ranked-over-unranked"
            )),
        }
    }
}

/// Parsed ballot file: raw candidate names plus the ballots, with voters
/// numbered by ballot order. An empty input yields empty lists.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BallotFile {
    pub candidate_names: Vec<String>,
    pub ballots: Vec<RankedBallot>,
}

impl BallotFile {
    pub fn to_dataset(&self, policy: IncompletePolicy) -> Result<ComparisonDataset, DataError> {
        let candidates = CandidateSet::new(self.candidate_names.clone())?;
        ballots_to_pairwise(&candidates, &self.ballots, policy)
    }
}

/// Parses a ballot file (format at the module level). Errors carry 1-based
/// line numbers.
pub fn parse_ballots(reader: impl BufRead) -> Result<BallotFile, DataError> {
    let mut names: Option<Vec<String>> = None;
    let mut ballots = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let names = match &names {
            Some(n) => n,
            None => {
                let rest = trimmed.strip_prefix("candidates:").ok_or_else(|| {
                    parse_err(line_no, "expected a 'candidates:' header line")
                })?;
                let parsed: Vec<String> =
                    rest.split(',').map(|s| s.trim().to_string()).collect();
                if parsed.iter().any(|n| n.is_empty()) {
                    return Err(parse_err(line_no, "empty candidate name in header"));
                }
                names = Some(parsed);
                continue;
            }
        };

        let (weight, body) = match trimmed.split_once(':') {
            Some((count, rest)) => {
                let weight: u64 = count.trim().parse().map_err(|_| {
                    parse_err(line_no, format!("malformed count {:?}", count.trim()))
                })?;
                if weight == 0 {
                    return Err(parse_err(line_no, "count must be at least 1"));
                }
                (weight, rest)
            }
            None => (1, trimmed),
        };

        let mut ranking = Vec::new();
        let mut seen = BTreeSet::new();
        for raw in body.split(',') {
            let name = raw.trim();
            if name.is_empty() {
                return Err(parse_err(line_no, "empty candidate name in ballot"));
            }
            let index = names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| parse_err(line_no, format!("unknown candidate {name:?}")))?;
            if !seen.insert(index) {
                return Err(parse_err(
                    line_no,
                    format!("candidate {name:?} listed twice in one ballot"),
                ));
            }
            ranking.push(index);
        }
        ballots.push(RankedBallot {
            voter: ballots.len(),
            ranking,
            weight,
        });
    }
    Ok(BallotFile {
        candidate_names: names.unwrap_or_default(),
        ballots,
    })
}

/// Expands ranked ballots into a pairwise comparison dataset. A ballot of
/// length `l` emits its `l(l-1)/2` ordered pairs in ballot order, replicated
/// `weight` times; under [`IncompletePolicy::RankedOverUnranked`] each
/// ranked candidate additionally beats every unranked one.
pub fn ballots_to_pairwise(
    candidates: &CandidateSet,
    ballots: &[RankedBallot],
    policy: IncompletePolicy,
) -> Result<ComparisonDataset, DataError> {
    let m = candidates.len();
    let mut comparisons = Vec::new();
    let mut n_voters = 0usize;
    for (index, ballot) in ballots.iter().enumerate() {
        if ballot.weight == 0 {
            return Err(DataError::InvalidBallot {
                index,
                message: "weight must be at least 1".into(),
            });
        }
        let mut ranked = vec![false; m];
        for &c in &ballot.ranking {
            if c >= m {
                return Err(DataError::InvalidBallot {
                    index,
                    message: format!("candidate index {c} out of range for {m} candidates"),
                });
            }
            if ranked[c] {
                return Err(DataError::InvalidBallot {
                    index,
                    message: format!("candidate {c} appears twice"),
                });
            }
            ranked[c] = true;
        }
        n_voters = n_voters.max(ballot.voter + 1);
        let unranked: Vec<usize> = (0..m).filter(|&c| !ranked[c]).collect();
        for _ in 0..ballot.weight {
            for (pos, &winner) in ballot.ranking.iter().enumerate() {
                for &loser in &ballot.ranking[pos + 1..] {
                    comparisons.push(Comparison {
                        voter: ballot.voter,
                        winner,
                        loser,
                    });
                }
            }
            if policy == IncompletePolicy::RankedOverUnranked {
                for &winner in &ballot.ranking {
                    for &loser in &unranked {
                        comparisons.push(Comparison {
                            voter: ballot.voter,
                            winner,
                            loser,
                        });
                    }
                }
            }
        }
    }
    Ok(ComparisonDataset::new(
        candidates.clone(),
        n_voters,
        comparisons,
    )?)
}

/// Writes a dataset in the line-oriented text format. Exact and
/// order-preserving: `load_dataset` returns an equal dataset.
pub fn serialize_dataset(dataset: &ComparisonDataset, mut w: impl Write) -> Result<(), DataError> {
    writeln!(w, "m={}", dataset.num_candidates())?;
    writeln!(w, "n_voters={}", dataset.n_voters())?;
    writeln!(w, "candidates={}", dataset.candidates().names().join(","))?;
    for c in dataset.comparisons() {
        writeln!(w, "{},{},{}", c.voter, c.winner, c.loser)?;
    }
    Ok(())
}

/// Reads a dataset written by [`serialize_dataset`]. Errors carry 1-based
/// line numbers.
pub fn load_dataset(reader: impl BufRead) -> Result<ComparisonDataset, DataError> {
    let mut lines = reader.lines().enumerate();
    let mut header = |prefix: &str| -> Result<String, DataError> {
        match lines.next() {
            Some((idx, line)) => {
                let line = line?;
                line.strip_prefix(prefix)
                    .map(str::to_string)
                    .ok_or_else(|| parse_err(idx + 1, format!("expected {prefix:?} header")))
            }
            None => Err(parse_err(0, format!("missing {prefix:?} header"))),
        }
    };
    let m: usize = header("m=")?
        .parse()
        .map_err(|_| parse_err(1, "malformed candidate count"))?;
    let n_voters: usize = header("n_voters=")?
        .parse()
        .map_err(|_| parse_err(2, "malformed voter count"))?;
    let names: Vec<String> = header("candidates=")?
        .split(',')
        .map(str::to_string)
        .collect();
    if names.len() != m {
        return Err(parse_err(
            3,
            format!("expected {m} candidate names, found {}", names.len()),
        ));
    }
    let candidates = CandidateSet::new(names)?;

    let mut comparisons = Vec::new();
    for (idx, line) in lines {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut fields = trimmed.split(',');
        let mut next_field = |what: &str| -> Result<usize, DataError> {
            fields
                .next()
                .ok_or_else(|| parse_err(idx + 1, format!("missing {what}")))?
                .trim()
                .parse()
                .map_err(|_| parse_err(idx + 1, format!("malformed {what}")))
        };
        let voter = next_field("voter id")?;
        let winner = next_field("winner id")?;
        let loser = next_field("loser id")?;
        if fields.next().is_some() {
            return Err(parse_err(idx + 1, "trailing fields after voter,winner,loser"));
        }
        comparisons.push(Comparison {
            voter,
            winner,
            loser,
        });
    }
    Ok(ComparisonDataset::new(candidates, n_voters, comparisons)?)
}

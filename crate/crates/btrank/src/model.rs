//! Core domain types: candidates, pairwise comparisons, aggregate win
//! counts, strength vectors, rankings, and flip sets, together with the
//! operations that connect them (aggregation, the Bradley-Terry win
//! probability, ranking derivation, Kendall tau, and the flip operator).

use std::collections::BTreeSet;

use thiserror::Error;

/// Strength vectors must sum to one within this tolerance.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("candidate set needs at least two candidates, got {0}")]
    TooFewCandidates(usize),
    #[error("duplicate candidate name {0:?}")]
    DuplicateName(String),
    #[error("candidate name {0:?} is empty or contains a comma or newline")]
    InvalidName(String),
    #[error("comparison {index}: winner and loser are both candidate {candidate}")]
    SelfComparison { index: usize, candidate: usize },
    #[error("comparison {index}: candidate {candidate} out of range for {m} candidates")]
    CandidateOutOfRange {
        index: usize,
        candidate: usize,
        m: usize,
    },
    #[error("comparison {index}: voter {voter} out of range for {n_voters} voters")]
    VoterOutOfRange {
        index: usize,
        voter: usize,
        n_voters: usize,
    },
    #[error("strengths must be positive and finite, got {0}")]
    NonPositiveStrength(f64),
    #[error("strength vector sums to {0}, expected 1")]
    NotNormalized(f64),
    #[error("empty strength vector")]
    EmptyStrengths,
    #[error("{0:?} is not a permutation of 0..{1}")]
    NotAPermutation(Vec<usize>, usize),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("flip index {index} out of range, dataset has {len} comparisons")]
    FlipIndexOutOfRange { index: usize, len: usize },
    #[error("matrix has no {winner}-over-{loser} count left to flip")]
    NothingToFlip { winner: usize, loser: usize },
    #[error("count matrix must be square with a zero diagonal")]
    MalformedCounts,
}

/// The candidates under comparison, indexed `0..m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSet {
    names: Vec<String>,
}

impl CandidateSet {
    /// Builds a candidate set. Names must be unique, non-empty, and free of
    /// commas and newlines (they appear verbatim in text formats).
    pub fn new(names: Vec<String>) -> Result<Self, ModelError> {
        if names.len() < 2 {
            return Err(ModelError::TooFewCandidates(names.len()));
        }
        let mut seen = BTreeSet::new();
        for name in &names {
            if name.is_empty() || name.contains(',') || name.contains('\n') {
                return Err(ModelError::InvalidName(name.clone()));
            }
            if !seen.insert(name.as_str()) {
                return Err(ModelError::DuplicateName(name.clone()));
            }
        }
        Ok(Self { names })
    }

    /// Candidate set with placeholder names `c0..c{m-1}`.
    pub fn with_generic_names(m: usize) -> Result<Self, ModelError> {
        Self::new((0..m).map(|i| format!("c{i}")).collect())
    }

    /// Number of candidates, `m`.
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        false // m >= 2 by construction
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, candidate: usize) -> &str {
        &self.names[candidate]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// One pairwise preference: `voter` prefers `winner` over `loser`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Comparison {
    pub voter: usize,
    pub winner: usize,
    pub loser: usize,
}

impl Comparison {
    /// The same ballot with winner and loser exchanged.
    pub fn flipped(self) -> Self {
        Self {
            voter: self.voter,
            winner: self.loser,
            loser: self.winner,
        }
    }
}

/// An ordered collection of voter-attributed pairwise preferences.
///
/// Order matters: flip sets address comparisons by position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComparisonDataset {
    candidates: CandidateSet,
    n_voters: usize,
    comparisons: Vec<Comparison>,
}

impl ComparisonDataset {
    pub fn new(
        candidates: CandidateSet,
        n_voters: usize,
        comparisons: Vec<Comparison>,
    ) -> Result<Self, ModelError> {
        let m = candidates.len();
        for (index, c) in comparisons.iter().enumerate() {
            if c.winner == c.loser {
                return Err(ModelError::SelfComparison {
                    index,
                    candidate: c.winner,
                });
            }
            for candidate in [c.winner, c.loser] {
                if candidate >= m {
                    return Err(ModelError::CandidateOutOfRange {
                        index,
                        candidate,
                        m,
                    });
                }
            }
            if c.voter >= n_voters {
                return Err(ModelError::VoterOutOfRange {
                    index,
                    voter: c.voter,
                    n_voters,
                });
            }
        }
        Ok(Self {
            candidates,
            n_voters,
            comparisons,
        })
    }

    pub fn candidates(&self) -> &CandidateSet {
        &self.candidates
    }

    /// Number of candidates, `m`.
    pub fn num_candidates(&self) -> usize {
        self.candidates.len()
    }

    pub fn n_voters(&self) -> usize {
        self.n_voters
    }

    pub fn comparisons(&self) -> &[Comparison] {
        &self.comparisons
    }

    pub fn len(&self) -> usize {
        self.comparisons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.comparisons.is_empty()
    }
}

/// `m x m` matrix of aggregate win counts: entry `(i, j)` is the number of
/// comparisons in which `i` beat `j`. This is the sufficient statistic for
/// all likelihood work; fitting cost depends on `m`, not on the number of
/// raw comparisons.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountMatrix {
    m: usize,
    counts: Vec<u64>,
}

impl CountMatrix {
    pub fn zeros(m: usize) -> Self {
        Self {
            m,
            counts: vec![0; m * m],
        }
    }

    /// Builds a count matrix from rows, validating squareness and the zero
    /// diagonal.
    pub fn from_rows(rows: Vec<Vec<u64>>) -> Result<Self, ModelError> {
        let m = rows.len();
        let mut counts = Vec::with_capacity(m * m);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != m || row[i] != 0 {
                return Err(ModelError::MalformedCounts);
            }
            counts.extend_from_slice(row);
        }
        Ok(Self { m, counts })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn get(&self, winner: usize, loser: usize) -> u64 {
        self.counts[winner * self.m + loser]
    }

    /// Total number of comparisons aggregated into the matrix.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `n_ij + n_ji`: how often the pair was compared, in either direction.
    pub fn pair_total(&self, i: usize, j: usize) -> u64 {
        self.get(i, j) + self.get(j, i)
    }

    /// Moves one count from `winner`-beats-`loser` to the reverse direction,
    /// i.e. applies a single vote flip to the aggregate.
    pub fn flip_one(&mut self, winner: usize, loser: usize) -> Result<(), ModelError> {
        let forward = winner * self.m + loser;
        if winner == loser || self.counts[forward] == 0 {
            return Err(ModelError::NothingToFlip { winner, loser });
        }
        self.counts[forward] -= 1;
        self.counts[loser * self.m + winner] += 1;
        Ok(())
    }

    fn increment(&mut self, winner: usize, loser: usize) {
        self.counts[winner * self.m + loser] += 1;
    }
}

/// Tallies the dataset into its aggregate count matrix.
pub fn aggregate(dataset: &ComparisonDataset) -> CountMatrix {
    let mut counts = CountMatrix::zeros(dataset.num_candidates());
    for c in dataset.comparisons() {
        counts.increment(c.winner, c.loser);
    }
    counts
}

/// Probability that a candidate with strength `p_i` beats one with strength
/// `p_j`: `p_i / (p_i + p_j)`.
pub fn bt_probability(p_i: f64, p_j: f64) -> Result<f64, ModelError> {
    for p in [p_i, p_j] {
        if !p.is_finite() || p <= 0.0 {
            return Err(ModelError::NonPositiveStrength(p));
        }
    }
    Ok(p_i / (p_i + p_j))
}

/// Latent candidate strengths: positive, normalized to sum 1.
#[derive(Debug, Clone, PartialEq)]
pub struct StrengthVector {
    p: Vec<f64>,
}

impl StrengthVector {
    /// Accepts an already-normalized positive vector.
    pub fn new(p: Vec<f64>) -> Result<Self, ModelError> {
        if p.is_empty() {
            return Err(ModelError::EmptyStrengths);
        }
        for &x in &p {
            if !x.is_finite() || x <= 0.0 {
                return Err(ModelError::NonPositiveStrength(x));
            }
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(ModelError::NotNormalized(sum));
        }
        Ok(Self { p })
    }

    /// Normalizes an arbitrary positive vector to sum 1.
    pub fn normalized(raw: Vec<f64>) -> Result<Self, ModelError> {
        if raw.is_empty() {
            return Err(ModelError::EmptyStrengths);
        }
        for &x in &raw {
            if !x.is_finite() || x <= 0.0 {
                return Err(ModelError::NonPositiveStrength(x));
            }
        }
        let sum: f64 = raw.iter().sum();
        Ok(Self {
            p: raw.into_iter().map(|x| x / sum).collect(),
        })
    }

    /// The uniform vector `(1/m, ..., 1/m)`.
    pub fn uniform(m: usize) -> Self {
        Self {
            p: vec![1.0 / m as f64; m],
        }
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    pub fn get(&self, candidate: usize) -> f64 {
        self.p[candidate]
    }

    /// Log-strengths `theta_i = ln p_i`.
    pub fn log(&self) -> Vec<f64> {
        self.p.iter().map(|&x| x.ln()).collect()
    }
}

/// A total order over candidates, best first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Ranking {
    order: Vec<usize>,
}

impl Ranking {
    pub fn new(order: Vec<usize>) -> Result<Self, ModelError> {
        let m = order.len();
        let mut seen = vec![false; m];
        for &c in &order {
            if c >= m || seen[c] {
                return Err(ModelError::NotAPermutation(order.clone(), m));
            }
            seen[c] = true;
        }
        Ok(Self { order })
    }

    pub fn identity(m: usize) -> Self {
        Self {
            order: (0..m).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Candidate indices, best first.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// 0-based rank of a candidate (0 = best).
    pub fn position_of(&self, candidate: usize) -> usize {
        self.order
            .iter()
            .position(|&c| c == candidate)
            .expect("candidate out of range for ranking")
    }
}

/// Ranks candidates by descending strength; ties break toward the lower
/// candidate index so the result is deterministic.
pub fn ranking_from_strengths(p: &StrengthVector) -> Ranking {
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| {
        p.get(b)
            .partial_cmp(&p.get(a))
            .expect("strengths are finite")
            .then(a.cmp(&b))
    });
    Ranking { order }
}

/// Kendall tau distance: the number of candidate pairs the two rankings
/// order oppositely. Unnormalized; ranges over `0..=m(m-1)/2`.
pub fn kendall_tau(a: &Ranking, b: &Ranking) -> Result<u64, ModelError> {
    let m = a.len();
    if b.len() != m {
        return Err(ModelError::DimensionMismatch {
            left: m,
            right: b.len(),
        });
    }
    let mut pos_a = vec![0usize; m];
    let mut pos_b = vec![0usize; m];
    for (rank, &c) in a.order.iter().enumerate() {
        pos_a[c] = rank;
    }
    for (rank, &c) in b.order.iter().enumerate() {
        pos_b[c] = rank;
    }
    let mut discordant = 0;
    for i in 0..m {
        for j in (i + 1)..m {
            if (pos_a[i] < pos_a[j]) != (pos_b[i] < pos_b[j]) {
                discordant += 1;
            }
        }
    }
    Ok(discordant)
}

/// A set of positions into a dataset's comparison sequence, marking the
/// comparisons an adversary flips.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FlipSet {
    indices: BTreeSet<usize>,
}

impl FlipSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.contains(&index)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    pub fn as_set(&self) -> &BTreeSet<usize> {
        &self.indices
    }
}

impl FromIterator<usize> for FlipSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Self {
            indices: iter.into_iter().collect(),
        }
    }
}

impl From<BTreeSet<usize>> for FlipSet {
    fn from(indices: BTreeSet<usize>) -> Self {
        Self { indices }
    }
}

/// Applies a flip set: each addressed comparison has winner and loser
/// exchanged, everything else is untouched. Flipping twice restores the
/// original dataset.
pub fn flip(dataset: &ComparisonDataset, delta: &FlipSet) -> Result<ComparisonDataset, ModelError> {
    let len = dataset.len();
    let mut comparisons = dataset.comparisons().to_vec();
    for index in delta.iter() {
        if index >= len {
            return Err(ModelError::FlipIndexOutOfRange { index, len });
        }
        comparisons[index] = comparisons[index].flipped();
    }
    Ok(ComparisonDataset {
        candidates: dataset.candidates.clone(),
        n_voters: dataset.n_voters,
        comparisons,
    })
}

//! Opinion state and the single-step averaging update.
//!
//! An [`OpinionProfile`] is an `m x n` matrix of scores: rows are agents,
//! columns are candidates. One step of the dynamics picks a pair of agents
//! and a subject set of candidates; on every subject column the two agents
//! replace their scores by the midpoint of their current scores. Everything
//! else is unchanged.
//!
//! All indices in this crate are 0-based. Text formats and the CLI are
//! 1-based; conversion happens at those boundaries only.

use std::fmt;

use crate::error::{Error, Result};

/// The `m x n` score matrix, stored row-major.
#[derive(Clone, PartialEq)]
pub struct OpinionProfile {
    agents: usize,
    candidates: usize,
    scores: Vec<f64>,
}

impl fmt::Debug for OpinionProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OpinionProfile")
            .field("agents", &self.agents)
            .field("candidates", &self.candidates)
            .finish_non_exhaustive()
    }
}

impl OpinionProfile {
    /// Builds a profile from row-major data. Requires `m >= 2`, `n >= 1`
    /// and every entry finite.
    pub fn new(agents: usize, candidates: usize, scores: Vec<f64>) -> Result<Self> {
        if agents < 2 {
            return Err(Error::Dimension(format!("need at least 2 agents, got {agents}")));
        }
        if candidates < 1 {
            return Err(Error::Dimension("need at least 1 candidate".into()));
        }
        if scores.len() != agents * candidates {
            return Err(Error::Dimension(format!(
                "expected {} entries for a {}x{} profile, got {}",
                agents * candidates,
                agents,
                candidates,
                scores.len()
            )));
        }
        if let Some(bad) = scores.iter().position(|x| !x.is_finite()) {
            return Err(Error::Dimension(format!(
                "non-finite score at agent {}, candidate {}",
                bad / candidates,
                bad % candidates
            )));
        }
        Ok(Self { agents, candidates, scores })
    }

    /// Builds a profile from explicit rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::new(m, n, rows.concat())
    }

    pub fn agents(&self) -> usize {
        self.agents
    }

    pub fn candidates(&self) -> usize {
        self.candidates
    }

    pub fn get(&self, agent: usize, candidate: usize) -> f64 {
        self.scores[agent * self.candidates + candidate]
    }

    pub fn row(&self, agent: usize) -> &[f64] {
        &self.scores[agent * self.candidates..(agent + 1) * self.candidates]
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn column(&self, candidate: usize) -> Vec<f64> {
        (0..self.agents).map(|i| self.get(i, candidate)).collect()
    }

    pub(crate) fn set(&mut self, agent: usize, candidate: usize, value: f64) {
        self.scores[agent * self.candidates + candidate] = value;
    }

    fn check_pair(&self, pair: PairEvent) -> Result<()> {
        if pair.high() >= self.agents {
            return Err(Error::Dimension(format!(
                "pair {:?} out of range for {} agents",
                pair, self.agents
            )));
        }
        Ok(())
    }

    fn check_subjects(&self, subjects: &SubjectSet) -> Result<()> {
        if let Some(&j) = subjects.members().last() {
            if j >= self.candidates {
                return Err(Error::Dimension(format!(
                    "candidate {} out of range for {} candidates",
                    j, self.candidates
                )));
            }
        }
        Ok(())
    }

    /// In-place variant of [`apply_step`]. Observationally identical.
    pub fn apply_step_mut(&mut self, pair: PairEvent, subjects: &SubjectSet) -> Result<()> {
        self.check_pair(pair)?;
        self.check_subjects(subjects)?;
        let (a, b) = (pair.low(), pair.high());
        for &j in subjects.members() {
            let mid = (self.get(a, j) + self.get(b, j)) / 2.0;
            self.set(a, j, mid);
            self.set(b, j, mid);
        }
        Ok(())
    }
}

/// One averaging step: on every subject column, both agents of the pair move
/// to the midpoint of their current scores. All other entries are unchanged.
pub fn apply_step(
    profile: &OpinionProfile,
    pair: PairEvent,
    subjects: &SubjectSet,
) -> Result<OpinionProfile> {
    let mut next = profile.clone();
    next.apply_step_mut(pair, subjects)?;
    Ok(next)
}

/// An unordered pair of distinct agents, stored with the smaller index first.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PairEvent {
    a: usize,
    b: usize,
}

impl PairEvent {
    pub fn new(a: usize, b: usize) -> Result<Self> {
        if a == b {
            return Err(Error::Parameter(format!("pair must have distinct agents, got {{{a},{a}}}")));
        }
        Ok(Self { a: a.min(b), b: a.max(b) })
    }

    pub fn low(&self) -> usize {
        self.a
    }

    pub fn high(&self) -> usize {
        self.b
    }

    pub fn contains(&self, agent: usize) -> bool {
        self.a == agent || self.b == agent
    }
}

impl fmt::Debug for PairEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{},{}}}", self.a, self.b)
    }
}

/// The set of candidates discussed at one step. May be empty, in which case
/// the step is a no-op.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct SubjectSet {
    members: Vec<usize>,
}

impl SubjectSet {
    pub fn new(members: impl IntoIterator<Item = usize>) -> Self {
        let mut members: Vec<usize> = members.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        Self { members }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// The whole candidate set `{0, .., n-1}`.
    pub fn full(n: usize) -> Self {
        Self { members: (0..n).collect() }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn contains(&self, candidate: usize) -> bool {
        self.members.binary_search(&candidate).is_ok()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn union(&self, other: &SubjectSet) -> SubjectSet {
        SubjectSet::new(self.members.iter().chain(other.members.iter()).copied())
    }
}

impl fmt::Debug for SubjectSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.members.iter()).finish()
    }
}

/// Per-candidate society mean, `(1/m) e^T X`.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregateProfile {
    averages: Vec<f64>,
}

impl AggregateProfile {
    pub fn averages(&self) -> &[f64] {
        &self.averages
    }
}

/// Column means, summed in ascending agent order then divided once.
pub fn column_average(profile: &OpinionProfile) -> AggregateProfile {
    let m = profile.agents();
    let n = profile.candidates();
    let mut averages = vec![0.0; n];
    for i in 0..m {
        let row = profile.row(i);
        for j in 0..n {
            averages[j] += row[j];
        }
    }
    for avg in &mut averages {
        *avg /= m as f64;
    }
    AggregateProfile { averages }
}

/// Borda aggregate ordering: a permutation sorting the averages in
/// non-increasing order, ties broken by ascending candidate index.
pub fn borda_ranking(aggregate: &AggregateProfile) -> Vec<usize> {
    let mut order: Vec<usize> = (0..aggregate.averages.len()).collect();
    order.sort_by(|&a, &b| {
        aggregate.averages[b]
            .partial_cmp(&aggregate.averages[a])
            .expect("averages are finite")
            .then(a.cmp(&b))
    });
    order
}

/// The top-k threshold set `T_k(v) = { j : v[j] >= v_(k) }` where `v_(k)` is
/// the k-th largest entry. Ties at the threshold are included, so the result
/// can have more than `k` members.
pub fn top_k_set(values: &[f64], k: usize) -> Result<SubjectSet> {
    let n = values.len();
    if k == 0 || k > n {
        return Err(Error::Parameter(format!("k must be in 1..={n}, got {k}")));
    }
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("values are finite"));
    let threshold = sorted[k - 1];
    Ok(SubjectSet::new(
        (0..n).filter(|&j| values[j] >= threshold),
    ))
}

/// The doubly stochastic matrix realizing one step of candidate `j`'s column
/// dynamics: the identity unless `j` is a subject, in which case the pair's
/// rows and columns are mixed at 1/2. Diagnostic only; `apply_step` must
/// agree with left-multiplication by this matrix on every column.
pub fn mixing_matrix(
    pair: PairEvent,
    subjects: &SubjectSet,
    candidate: usize,
    m: usize,
) -> Result<Vec<Vec<f64>>> {
    if pair.high() >= m {
        return Err(Error::Dimension(format!("pair {pair:?} out of range for {m} agents")));
    }
    let mut w: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..m).map(|l| if i == l { 1.0 } else { 0.0 }).collect())
        .collect();
    if subjects.contains(candidate) {
        let (a, b) = (pair.low(), pair.high());
        w[a][a] = 0.5;
        w[b][b] = 0.5;
        w[a][b] = 0.5;
        w[b][a] = 0.5;
    }
    Ok(w)
}

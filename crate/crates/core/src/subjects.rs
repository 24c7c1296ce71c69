//! Subject processes: which candidates an activated pair discusses.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::profile::{top_k_set, OpinionProfile, PairEvent, SubjectSet};

/// The four built-in selection regimes plus scripted sequences.
#[derive(Clone, Debug, PartialEq)]
pub enum SubjectPolicy {
    /// Every candidate, every step. With `n = 1` this is the classical
    /// gossip model.
    Full,
    /// Union of both agents' top-k threshold sets.
    TopK { k: usize },
    /// Each candidate independently with probability `p`.
    Binomial { p: f64 },
    /// Candidates on which the pair's opinions are within `eps` (inclusive).
    /// With `eps = 0` only exactly-agreeing candidates are selected.
    Hk { eps: f64 },
    /// A pre-generated sequence, one set per step. Realizes subject
    /// processes that depend on history, the future, or external
    /// disturbances; exhausting the sequence ends the run.
    Scripted(Vec<SubjectSet>),
}

impl SubjectPolicy {
    pub fn validate(&self, candidates: usize) -> Result<()> {
        match self {
            SubjectPolicy::Full => Ok(()),
            SubjectPolicy::TopK { k } => {
                if *k == 0 || *k > candidates {
                    Err(Error::Parameter(format!("k must be in 1..={candidates}, got {k}")))
                } else {
                    Ok(())
                }
            }
            SubjectPolicy::Binomial { p } => {
                if *p > 0.0 && *p <= 1.0 {
                    Ok(())
                } else {
                    Err(Error::Parameter("p must be in (0,1]".into()))
                }
            }
            SubjectPolicy::Hk { eps } => {
                if *eps >= 0.0 && eps.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Parameter("eps must be non-negative".into()))
                }
            }
            SubjectPolicy::Scripted(sets) => {
                for (t, s) in sets.iter().enumerate() {
                    if let Some(&j) = s.members().last() {
                        if j >= candidates {
                            return Err(Error::Parameter(format!(
                                "scripted set at step {t} mentions candidate {} (only {candidates})",
                                j + 1
                            )));
                        }
                    }
                }
                Ok(())
            }
        }
    }

    /// The subject set for step `t`. Randomized policies advance `rng`;
    /// the others leave it untouched.
    pub fn select(
        &self,
        t: u64,
        profile: &OpinionProfile,
        pair: PairEvent,
        rng: &mut ChaCha8Rng,
    ) -> Result<SubjectSet> {
        match self {
            SubjectPolicy::Full => Ok(full_subjects(profile.candidates())),
            SubjectPolicy::TopK { k } => topk_subjects(profile, pair, *k),
            SubjectPolicy::Binomial { p } => binomial_subjects(profile.candidates(), *p, rng),
            SubjectPolicy::Hk { eps } => Ok(hk_subjects(profile, pair, *eps)),
            SubjectPolicy::Scripted(sets) => sets
                .get(t as usize)
                .cloned()
                .ok_or(Error::ScheduleExhausted(t)),
        }
    }
}

/// The entire candidate set.
pub fn full_subjects(n: usize) -> SubjectSet {
    SubjectSet::full(n)
}

/// Union of the two agents' top-k threshold sets over their current rows.
pub fn topk_subjects(profile: &OpinionProfile, pair: PairEvent, k: usize) -> Result<SubjectSet> {
    let sa = top_k_set(profile.row(pair.low()), k)?;
    let sb = top_k_set(profile.row(pair.high()), k)?;
    Ok(sa.union(&sb))
}

/// Each candidate independently with probability `p`. Draws one uniform per
/// candidate in index order, so the result is seed-reproducible.
pub fn binomial_subjects(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Result<SubjectSet> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Parameter("p must be in (0,1]".into()));
    }
    Ok(SubjectSet::new((0..n).filter(|_| rng.random::<f64>() < p)))
}

/// Candidates on which the pair's scores differ by at most `eps`.
pub fn hk_subjects(profile: &OpinionProfile, pair: PairEvent, eps: f64) -> SubjectSet {
    let ra = profile.row(pair.low());
    let rb = profile.row(pair.high());
    SubjectSet::new(
        (0..profile.candidates()).filter(|&j| (ra[j] - rb[j]).abs() <= eps),
    )
}

/// Parses scripted subject sequences: one line per step, space-separated
/// 1-based candidate indices, blank line = empty set.
pub fn parse_scripted(text: &str) -> Result<Vec<SubjectSet>> {
    let mut sets = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('#') {
            continue;
        }
        let mut members = Vec::new();
        for tok in line.split_whitespace() {
            let idx: usize = tok.parse().map_err(|_| {
                Error::Parameter(format!("line {}: bad candidate index {tok:?}", lineno + 1))
            })?;
            if idx == 0 {
                return Err(Error::Parameter(format!(
                    "line {}: candidate indices are 1-based",
                    lineno + 1
                )));
            }
            members.push(idx - 1);
        }
        sets.push(SubjectSet::new(members));
    }
    Ok(sets)
}

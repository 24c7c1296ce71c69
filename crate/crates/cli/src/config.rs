//! TOML run configuration: flat top-level keys plus `[init]`, `[pairs]`,
//! and `[subjects]` policy sections.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use vote_diffuse::{
    Error, InitialProfile, OpinionProfile, PairDistribution, PairSchedule, PairSourceSpec,
    Result, SimulationConfig, SubjectPolicy,
};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub m: usize,
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    pub max_steps: u64,
    pub snapshot_every: Option<u64>,
    pub convergence_tol: Option<f64>,
    pub convergence_window: Option<u64>,
    pub init: InitSection,
    pub pairs: PairsSection,
    pub subjects: SubjectsSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSection {
    pub kind: String,
    pub seed: Option<u64>,
    pub rows: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairsSection {
    pub kind: String,
    pub weights: Option<Vec<Vec<f64>>>,
    pub file: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubjectsSection {
    pub kind: String,
    pub k: Option<usize>,
    pub p: Option<f64>,
    pub eps: Option<f64>,
    pub file: Option<PathBuf>,
}

/// Loads and validates a config file. `seed_override` comes from `--seed`.
/// Relative file references resolve against the config file's directory.
pub fn load(path: &Path, seed_override: Option<u64>) -> Result<SimulationConfig> {
    let text = fs::read_to_string(path)?;
    let file: FileConfig = toml::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    build(&file, base, seed_override)
}

pub fn build(
    file: &FileConfig,
    base: &Path,
    seed_override: Option<u64>,
) -> Result<SimulationConfig> {
    let seed = seed_override.unwrap_or(file.seed);

    let initial = match file.init.kind.as_str() {
        "uniform" => InitialProfile::Uniform { seed: file.init.seed.unwrap_or(seed) },
        "gaussian" => InitialProfile::Gaussian { seed: file.init.seed.unwrap_or(seed) },
        "matrix" => {
            let rows = file
                .init
                .rows
                .as_ref()
                .ok_or_else(|| Error::Config("init.rows required for kind=\"matrix\"".into()))?;
            InitialProfile::Matrix(
                OpinionProfile::from_rows(rows)
                    .map_err(|e| Error::Config(format!("init.rows: {e}")))?,
            )
        }
        other => return Err(Error::Config(format!("unknown init.kind {other:?}"))),
    };

    let pairs = match file.pairs.kind.as_str() {
        "uniform" => PairSourceSpec::Distribution(
            PairDistribution::uniform_complete(file.m)
                .map_err(|e| Error::Config(format!("pairs: {e}")))?,
        ),
        "weights" => {
            let rows = file
                .pairs
                .weights
                .as_ref()
                .ok_or_else(|| Error::Config("pairs.weights required for kind=\"weights\"".into()))?;
            if rows.len() != file.m || rows.iter().any(|r| r.len() != file.m) {
                return Err(Error::Config(format!("pairs.weights must be {0}x{0}", file.m)));
            }
            PairSourceSpec::Distribution(
                PairDistribution::normalized(file.m, rows.concat())
                    .map_err(|e| Error::Config(format!("pairs.weights: {e}")))?,
            )
        }
        "schedule" => {
            let rel = file
                .pairs
                .file
                .as_ref()
                .ok_or_else(|| Error::Config("pairs.file required for kind=\"schedule\"".into()))?;
            let text = fs::read_to_string(base.join(rel))?;
            PairSourceSpec::Schedule(
                PairSchedule::parse(&text)
                    .map_err(|e| Error::Config(format!("pairs.file: {e}")))?,
            )
        }
        other => return Err(Error::Config(format!("unknown pairs.kind {other:?}"))),
    };

    let subjects = match file.subjects.kind.as_str() {
        "full" => SubjectPolicy::Full,
        "top_k" => SubjectPolicy::TopK {
            k: file
                .subjects
                .k
                .ok_or_else(|| Error::Config("subjects.k required for kind=\"top_k\"".into()))?,
        },
        "binomial" => SubjectPolicy::Binomial {
            p: file
                .subjects
                .p
                .ok_or_else(|| Error::Config("subjects.p required for kind=\"binomial\"".into()))?,
        },
        "hk" => SubjectPolicy::Hk {
            eps: file
                .subjects
                .eps
                .ok_or_else(|| Error::Config("subjects.eps required for kind=\"hk\"".into()))?,
        },
        "scripted" => {
            let rel = file
                .subjects
                .file
                .as_ref()
                .ok_or_else(|| Error::Config("subjects.file required for kind=\"scripted\"".into()))?;
            let text = fs::read_to_string(base.join(rel))?;
            SubjectPolicy::Scripted(
                vote_diffuse::parse_scripted(&text)
                    .map_err(|e| Error::Config(format!("subjects.file: {e}")))?,
            )
        }
        other => return Err(Error::Config(format!("unknown subjects.kind {other:?}"))),
    };

    let max_steps = file.max_steps;
    let config = SimulationConfig {
        agents: file.m,
        candidates: file.n,
        initial,
        pairs,
        subjects,
        max_steps,
        seed,
        snapshot_every: file.snapshot_every.unwrap_or_else(|| (max_steps / 100).max(1)),
        convergence_tol: file.convergence_tol.unwrap_or(1e-12),
        convergence_window: file.convergence_window.unwrap_or(1_000),
    };
    config.validate()?;
    Ok(config)
}

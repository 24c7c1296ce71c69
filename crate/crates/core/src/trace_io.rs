//! Line-delimited text serialization of traces.
//!
//! Layout: a header block of `key=value` lines, the initial profile as a
//! CSV block, one event per line (`t i j |S| s1 s2 ...`, agents and
//! candidates 1-based), snapshot CSV blocks tagged with their step, and the
//! final profile. Floats are written in exponent form with the shortest
//! round-tripping digits, so parsing reproduces every value bit-for-bit.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::engine::{PolicySummary, StepRecord, StopReason, Trace};
use crate::error::{Error, Result};
use crate::profile::{OpinionProfile, PairEvent, SubjectSet};

const MAGIC: &str = "# vote-diffuse trace v1";

pub fn write_trace<W: Write>(trace: &Trace, mut w: W) -> Result<()> {
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "m={}", trace.agents)?;
    writeln!(w, "n={}", trace.candidates)?;
    writeln!(w, "seed={}", trace.seed)?;
    writeln!(w, "max_steps={}", trace.max_steps)?;
    writeln!(w, "snapshot_every={}", trace.snapshot_every)?;
    writeln!(w, "convergence_tol={:e}", trace.convergence_tol)?;
    writeln!(w, "convergence_window={}", trace.convergence_window)?;
    writeln!(w, "policy={}", policy_str(trace.policy))?;
    writeln!(w, "stopped_at={}", trace.stopped_at)?;
    writeln!(w, "stop_reason={}", stop_reason_str(trace.stop_reason))?;
    writeln!(w, "[initial]")?;
    write_profile(&trace.initial, &mut w)?;
    writeln!(w, "[events]")?;
    for ev in &trace.events {
        write!(w, "{} {} {} {}", ev.t, ev.pair.low() + 1, ev.pair.high() + 1, ev.subjects.len())?;
        for &s in ev.subjects.members() {
            write!(w, " {}", s + 1)?;
        }
        writeln!(w)?;
    }
    for (&step, profile) in &trace.snapshots {
        writeln!(w, "[snapshot {step}]")?;
        write_profile(profile, &mut w)?;
    }
    writeln!(w, "[final]")?;
    write_profile(&trace.final_profile, &mut w)?;
    Ok(())
}

pub fn trace_to_string(trace: &Trace) -> String {
    let mut buf = Vec::new();
    write_trace(trace, &mut buf).expect("in-memory write cannot fail");
    String::from_utf8(buf).expect("trace text is ascii")
}

pub fn save_trace(trace: &Trace, path: &Path) -> Result<()> {
    let mut file = fs::File::create(path)?;
    write_trace(trace, &mut file)?;
    file.flush()?;
    Ok(())
}

pub fn load_trace(path: &Path) -> Result<Trace> {
    read_trace(BufReader::new(fs::File::open(path)?))
}

fn write_profile<W: Write>(profile: &OpinionProfile, w: &mut W) -> Result<()> {
    for i in 0..profile.agents() {
        let row: Vec<String> = profile.row(i).iter().map(|v| format!("{v:e}")).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

fn policy_str(policy: PolicySummary) -> String {
    match policy {
        PolicySummary::Full => "full".into(),
        PolicySummary::TopK { k } => format!("top_k:{k}"),
        PolicySummary::Binomial { p } => format!("binomial:{p:e}"),
        PolicySummary::Hk { eps } => format!("hk:{eps:e}"),
        PolicySummary::Scripted => "scripted".into(),
    }
}

fn stop_reason_str(reason: StopReason) -> &'static str {
    match reason {
        StopReason::Converged => "converged",
        StopReason::MaxSteps => "max_steps",
        StopReason::ScheduleExhausted => "schedule_exhausted",
    }
}

struct Lines<R: BufRead> {
    reader: R,
    lineno: usize,
    peeked: Option<String>,
}

impl<R: BufRead> Lines<R> {
    fn next_line(&mut self) -> Result<Option<String>> {
        if let Some(line) = self.peeked.take() {
            return Ok(Some(line));
        }
        let mut buf = String::new();
        if self.reader.read_line(&mut buf)? == 0 {
            return Ok(None);
        }
        self.lineno += 1;
        Ok(Some(buf.trim_end_matches(['\n', '\r']).to_string()))
    }

    fn expect_line(&mut self, what: &str) -> Result<String> {
        self.next_line()?
            .ok_or_else(|| self.corrupt(format!("unexpected end of file, expected {what}")))
    }

    fn corrupt(&self, msg: impl std::fmt::Display) -> Error {
        Error::CorruptTrace(format!("line {}: {}", self.lineno, msg))
    }
}

pub fn read_trace<R: BufRead>(reader: R) -> Result<Trace> {
    let mut lines = Lines { reader, lineno: 0, peeked: None };

    let magic = lines.expect_line("magic header")?;
    if magic != MAGIC {
        return Err(lines.corrupt(format!("bad magic {magic:?}")));
    }

    let mut header: BTreeMap<String, String> = BTreeMap::new();
    loop {
        let line = lines.expect_line("header or [initial]")?;
        if line == "[initial]" {
            break;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| lines.corrupt(format!("expected key=value, got {line:?}")))?;
        header.insert(key.to_string(), value.to_string());
    }

    let get = |key: &str| -> Result<&String> {
        header.get(key).ok_or_else(|| Error::CorruptTrace(format!("missing header key {key}")))
    };
    let agents: usize = parse_num(get("m")?, "m")?;
    let candidates: usize = parse_num(get("n")?, "n")?;
    let seed: u64 = parse_num(get("seed")?, "seed")?;
    let max_steps: u64 = parse_num(get("max_steps")?, "max_steps")?;
    let snapshot_every: u64 = parse_num(get("snapshot_every")?, "snapshot_every")?;
    let convergence_tol: f64 = parse_num(get("convergence_tol")?, "convergence_tol")?;
    let convergence_window: u64 = parse_num(get("convergence_window")?, "convergence_window")?;
    let policy = parse_policy(get("policy")?)?;
    let stopped_at: u64 = parse_num(get("stopped_at")?, "stopped_at")?;
    let stop_reason = match get("stop_reason")?.as_str() {
        "converged" => StopReason::Converged,
        "max_steps" => StopReason::MaxSteps,
        "schedule_exhausted" => StopReason::ScheduleExhausted,
        other => return Err(Error::CorruptTrace(format!("unknown stop_reason {other:?}"))),
    };

    let initial = read_profile(&mut lines, agents, candidates)?;

    let marker = lines.expect_line("[events]")?;
    if marker != "[events]" {
        return Err(lines.corrupt(format!("expected [events], got {marker:?}")));
    }

    let mut events = Vec::new();
    let mut snapshots = BTreeMap::new();
    let final_profile;
    loop {
        let Some(line) = lines.next_line()? else {
            return Err(lines.corrupt("missing [final] block"));
        };
        if line == "[final]" {
            final_profile = read_profile(&mut lines, agents, candidates)?;
            break;
        }
        if let Some(tag) = line.strip_prefix("[snapshot ").and_then(|s| s.strip_suffix(']')) {
            let step: u64 = tag
                .parse()
                .map_err(|_| lines.corrupt(format!("bad snapshot step {tag:?}")))?;
            snapshots.insert(step, read_profile(&mut lines, agents, candidates)?);
            continue;
        }
        events.push(parse_event(&lines, &line, agents, candidates)?);
    }

    if let Some(extra) = lines.next_line()? {
        if !extra.trim().is_empty() {
            return Err(lines.corrupt(format!("trailing content {extra:?}")));
        }
    }

    Ok(Trace {
        agents,
        candidates,
        seed,
        max_steps,
        snapshot_every,
        convergence_tol,
        convergence_window,
        policy,
        initial,
        events,
        snapshots,
        final_profile,
        stopped_at,
        stop_reason,
    })
}

fn parse_num<T: std::str::FromStr>(value: &str, key: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::CorruptTrace(format!("bad value {value:?} for header key {key}")))
}

fn parse_policy(value: &str) -> Result<PolicySummary> {
    let (kind, param) = match value.split_once(':') {
        Some((k, p)) => (k, Some(p)),
        None => (value, None),
    };
    match (kind, param) {
        ("full", None) => Ok(PolicySummary::Full),
        ("scripted", None) => Ok(PolicySummary::Scripted),
        ("top_k", Some(p)) => Ok(PolicySummary::TopK { k: parse_num(p, "policy k")? }),
        ("binomial", Some(p)) => Ok(PolicySummary::Binomial { p: parse_num(p, "policy p")? }),
        ("hk", Some(p)) => Ok(PolicySummary::Hk { eps: parse_num(p, "policy eps")? }),
        _ => Err(Error::CorruptTrace(format!("unknown policy {value:?}"))),
    }
}

fn read_profile<R: BufRead>(
    lines: &mut Lines<R>,
    agents: usize,
    candidates: usize,
) -> Result<OpinionProfile> {
    let mut scores = Vec::with_capacity(agents * candidates);
    for _ in 0..agents {
        let line = lines.expect_line("profile row")?;
        let row: Vec<&str> = line.split(',').collect();
        if row.len() != candidates {
            return Err(lines.corrupt(format!("expected {candidates} columns, got {}", row.len())));
        }
        for cell in row {
            let v: f64 = cell
                .parse()
                .map_err(|_| lines.corrupt(format!("bad score {cell:?}")))?;
            scores.push(v);
        }
    }
    OpinionProfile::new(agents, candidates, scores)
        .map_err(|e| Error::CorruptTrace(e.to_string()))
}

fn parse_event<R: BufRead>(
    lines: &Lines<R>,
    line: &str,
    agents: usize,
    candidates: usize,
) -> Result<StepRecord> {
    let toks: Vec<&str> = line.split_whitespace().collect();
    if toks.len() < 4 {
        return Err(lines.corrupt(format!("short event line {line:?}")));
    }
    let t: u64 = toks[0].parse().map_err(|_| lines.corrupt("bad step index"))?;
    let one_based = |tok: &str, limit: usize, what: &str| -> Result<usize> {
        let idx: usize = tok
            .parse()
            .map_err(|_| lines.corrupt(format!("bad {what} index {tok:?}")))?;
        if idx == 0 || idx > limit {
            return Err(lines.corrupt(format!("{what} index {idx} out of range 1..={limit}")));
        }
        Ok(idx - 1)
    };
    let a = one_based(toks[1], agents, "agent")?;
    let b = one_based(toks[2], agents, "agent")?;
    let pair = PairEvent::new(a, b).map_err(|e| lines.corrupt(e.to_string()))?;
    let count: usize = toks[3].parse().map_err(|_| lines.corrupt("bad subject count"))?;
    if toks.len() != 4 + count {
        return Err(lines.corrupt(format!(
            "event says {count} subjects but carries {}",
            toks.len() - 4
        )));
    }
    let mut members = Vec::with_capacity(count);
    for tok in &toks[4..] {
        members.push(one_based(tok, candidates, "candidate")?);
    }
    Ok(StepRecord { t, pair, subjects: SubjectSet::new(members) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run, InitialProfile, PairSourceSpec, SimulationConfig};
    use crate::pairs::PairDistribution;
    use crate::subjects::SubjectPolicy;

    fn sample_trace() -> Trace {
        run(&SimulationConfig {
            agents: 4,
            candidates: 2,
            initial: InitialProfile::Gaussian { seed: 3 },
            pairs: PairSourceSpec::Distribution(PairDistribution::uniform_complete(4).unwrap()),
            subjects: SubjectPolicy::Binomial { p: 0.7 },
            max_steps: 200,
            seed: 8,
            snapshot_every: 50,
            convergence_tol: 1e-300,
            convergence_window: u64::MAX,
        })
        .unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let trace = sample_trace();
        let text = trace_to_string(&trace);
        let back = read_trace(text.as_bytes()).unwrap();
        assert_eq!(trace, back);
    }

    #[test]
    fn serialization_is_deterministic() {
        let trace = sample_trace();
        assert_eq!(trace_to_string(&trace), trace_to_string(&trace));
    }

    #[test]
    fn policy_round_trip() {
        for policy in [
            PolicySummary::Full,
            PolicySummary::TopK { k: 3 },
            PolicySummary::Binomial { p: 0.25 },
            PolicySummary::Hk { eps: 1e-3 },
            PolicySummary::Scripted,
        ] {
            assert_eq!(parse_policy(&policy_str(policy)).unwrap(), policy);
        }
    }

    #[test]
    fn corrupt_inputs_name_the_line() {
        let trace = sample_trace();
        let mut text = trace_to_string(&trace);
        text = text.replacen("[events]", "[events]\n0 1 9 0", 1);
        let err = read_trace(text.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("line"), "{err}");
        assert!(err.contains("out of range"), "{err}");

        let err = read_trace("not a trace\n".as_bytes()).unwrap_err().to_string();
        assert!(err.contains("bad magic"), "{err}");
    }
}

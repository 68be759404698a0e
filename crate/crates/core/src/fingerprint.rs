//! Template-based workload fingerprinting through LLC occupancy.
//!
//! Offline, the attacker fills a fixed share of the cache, lets a known
//! workload run, re-probes and records its own misses; online it matches a
//! fresh miss count against the per-workload means.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cachecore::{AccessKind, Cache};
use crate::error::{Error, Result};
use crate::harness::seed::{component_rng, sub_seed};
use crate::harness::trace::{Trace, TraceEntry};
use crate::randfunc::SecurityDomain;
use crate::stats::{mean, std_dev};

pub const ATTACKER: SecurityDomain = SecurityDomain::ATTACKER;
pub const WORKLOAD: SecurityDomain = SecurityDomain::VICTIM;
pub const DEFAULT_OCCUPANCY_PCT: f64 = 15.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Uniform,
    FrontLoaded,
    BackLoaded,
}

impl Phase {
    /// Share of accesses issued in the first half of the lifetime.
    pub fn first_half_share(self) -> f64 {
        match self {
            Phase::Uniform => 0.5,
            Phase::FrontLoaded => 0.85,
            Phase::BackLoaded => 0.15,
        }
    }
}

impl FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(Phase::Uniform),
            "front-loaded" | "front" => Ok(Phase::FrontLoaded),
            "back-loaded" | "back" => Ok(Phase::BackLoaded),
            _ => Err(Error::InvalidParam(format!("unknown phase {s:?}"))),
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Uniform => "uniform",
            Phase::FrontLoaded => "front-loaded",
            Phase::BackLoaded => "back-loaded",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub id: String,
    pub accesses: usize,
    pub working_set_lines: usize,
    /// Bytes between consecutive working-set lines.
    pub stride: u64,
    /// Fraction of accesses that are loads.
    pub load_store_mix: f64,
    pub phase: Phase,
}

impl WorkloadSpec {
    pub fn validate(&self) -> Result<()> {
        if self.working_set_lines == 0 && self.accesses > 0 {
            return Err(Error::InvalidParam(format!("{}: empty working set", self.id)));
        }
        if self.stride == 0 {
            return Err(Error::InvalidParam(format!("{}: stride must be positive", self.id)));
        }
        if !(0.0..=1.0).contains(&self.load_store_mix) {
            return Err(Error::InvalidParam(format!("{}: mix must be in [0,1]", self.id)));
        }
        Ok(())
    }

    /// Parses `id accesses working_set stride mix phase`.
    pub fn parse_line(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 6 {
            return Err(Error::InvalidParam(format!(
                "workload line needs 6 fields (id accesses working_set stride mix phase), got {line:?}"
            )));
        }
        let num = |s: &str, what: &str| -> Result<u64> {
            s.parse().map_err(|e| Error::InvalidParam(format!("bad {what} {s:?}: {e}")))
        };
        let spec = WorkloadSpec {
            id: f[0].to_string(),
            accesses: num(f[1], "accesses")? as usize,
            working_set_lines: num(f[2], "working set")? as usize,
            stride: num(f[3], "stride")?,
            load_store_mix: f[4].parse().map_err(|e| Error::InvalidParam(format!("bad mix {:?}: {e}", f[4])))?,
            phase: f[5].parse()?,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_line(&self) -> String {
        format!(
            "{} {} {} {} {} {}",
            self.id, self.accesses, self.working_set_lines, self.stride, self.load_store_mix, self.phase
        )
    }
}

/// The default 8-workload suite: working sets 1k..8k lines, four passes
/// over each, phases rotating.
pub fn synthetic_suite() -> Vec<WorkloadSpec> {
    let phases = [Phase::Uniform, Phase::FrontLoaded, Phase::BackLoaded];
    (0..8)
        .map(|k| {
            let ws = 1_000 * (k + 1);
            WorkloadSpec {
                id: format!("w{k}"),
                accesses: 4 * ws,
                working_set_lines: ws,
                stride: 64,
                load_store_mix: 0.7,
                phase: phases[k % 3],
            }
        })
        .collect()
}

/// Parses a workload file, one spec per line, `#` comments allowed.
pub fn parse_workloads(text: &str) -> Result<Vec<WorkloadSpec>> {
    let specs: Vec<WorkloadSpec> = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(WorkloadSpec::parse_line)
        .collect::<Result<_>>()?;
    if specs.is_empty() {
        return Err(Error::InvalidParam("workload file lists no workloads".into()));
    }
    Ok(specs)
}

/// Deterministic trace for `spec` issued by `domain`.
///
/// Line k of the working set is visited `accesses / W` times (one more for
/// the first `accesses % W` lines). The visit list is split between the two
/// halves of a lifetime of `2 * accesses` cycles according to the phase,
/// shuffled within each half, and given sorted random issue times.
pub fn gen_workload_trace(spec: &WorkloadSpec, domain: SecurityDomain, seed: u64) -> Trace {
    let n = spec.accesses;
    let span = 2 * n as u64;
    if n == 0 {
        return Trace { entries: Vec::new(), span };
    }
    let mut rng = component_rng(seed, "workload", 0);
    let base = domain.region_base();
    let w = spec.working_set_lines;
    let visits: Vec<u64> = (0..n).map(|i| (i % w) as u64).collect();
    let first = ((n as f64) * spec.phase.first_half_share()).round() as usize;
    let (a, b) = visits.split_at(first);
    let half = n as u64;
    let mut entries = Vec::with_capacity(n);
    for (lines, lo) in [(a, 0u64), (b, half)] {
        let mut lines = lines.to_vec();
        lines.shuffle(&mut rng);
        let mut times: Vec<u64> = (0..lines.len()).map(|_| lo + rng.gen_range(0..half)).collect();
        times.sort_unstable();
        for (line, at) in lines.into_iter().zip(times) {
            let kind = if rng.gen_bool(spec.load_store_mix) { AccessKind::Load } else { AccessKind::Store };
            entries.push(TraceEntry { kind, addr: base + line * spec.stride, domain, at });
        }
    }
    Trace { entries, span }
}

/// Attacker lines for `occupancy_pct` percent of the data store.
pub fn attacker_lines(cache: &Cache, occupancy_pct: f64) -> Result<usize> {
    if !(occupancy_pct > 0.0 && occupancy_pct < 100.0) {
        return Err(Error::InvalidParam(format!("occupancy must be in (0,100), got {occupancy_pct}")));
    }
    Ok((cache.data_capacity() as f64 * occupancy_pct / 100.0).round() as usize)
}

/// One offline/online measurement: prime, run the workload, re-probe.
/// Returns the attacker's probe misses.
pub fn observe(snapshot: &Cache, spec: &WorkloadSpec, occupancy_pct: f64, seed: u64) -> Result<u64> {
    let lines = attacker_lines(snapshot, occupancy_pct)? as u64;
    let mut cache = snapshot.clone();
    cache.reseed(sub_seed(seed, "cache", 0));
    let base = ATTACKER.region_base();
    for i in 0..lines {
        cache.access(base + (i << 6), ATTACKER, AccessKind::Load);
    }
    gen_workload_trace(spec, WORKLOAD, sub_seed(seed, "trace", 0)).replay(&mut cache);
    let mut misses = 0;
    for i in 0..lines {
        if !cache.access(base + (i << 6), ATTACKER, AccessKind::Load).hit {
            misses += 1;
        }
    }
    Ok(misses)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Template {
    pub id: String,
    pub mean: f64,
    pub std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemplateSet {
    pub occupancy_pct: f64,
    pub reps: usize,
    pub entries: Vec<Template>,
}

pub fn build_templates(
    snapshot: &Cache,
    workloads: &[WorkloadSpec],
    occupancy_pct: f64,
    reps: usize,
    seed: u64,
) -> Result<TemplateSet> {
    if reps == 0 {
        return Err(Error::InvalidParam("need at least one repetition".into()));
    }
    let mut entries = Vec::with_capacity(workloads.len());
    for (k, w) in workloads.iter().enumerate() {
        w.validate()?;
        let xs: Vec<f64> = (0..reps)
            .map(|r| observe(snapshot, w, occupancy_pct, sub_seed(seed, &format!("template/{k}"), r as u64)).map(|m| m as f64))
            .collect::<Result<_>>()?;
        entries.push(Template {
            id: w.id.clone(),
            mean: mean(&xs),
            std: std_dev(&xs),
        });
    }
    Ok(TemplateSet { occupancy_pct, reps, entries })
}

/// Index of the nearest template mean; ties go to the earlier template.
pub fn classify_index(observed: u64, templates: &TemplateSet) -> Result<usize> {
    if templates.entries.is_empty() {
        return Err(Error::InvalidParam("no templates".into()));
    }
    let x = observed as f64;
    let mut best = 0;
    for (i, t) in templates.entries.iter().enumerate().skip(1) {
        if (x - t.mean).abs() < (x - templates.entries[best].mean).abs() {
            best = i;
        }
    }
    Ok(best)
}

pub fn classify(observed: u64, templates: &TemplateSet) -> Result<&str> {
    Ok(&templates.entries[classify_index(observed, templates)?].id)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub sample: usize,
    pub truth: usize,
    pub predicted: usize,
    pub misses: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub templates: TemplateSet,
    pub predictions: Vec<Prediction>,
    pub accuracy: f64,
}

/// Builds templates, then classifies `n` uniformly sampled workload runs.
pub fn accuracy_experiment(
    snapshot: &Cache,
    workloads: &[WorkloadSpec],
    occupancy_pct: f64,
    reps: usize,
    n: usize,
    seed: u64,
) -> Result<AccuracyReport> {
    let templates = build_templates(snapshot, workloads, occupancy_pct, reps, sub_seed(seed, "offline", 0))?;
    let mut pick = component_rng(seed, "online-pick", 0);
    let mut predictions = Vec::with_capacity(n);
    for sample in 0..n {
        let truth = pick.gen_range(0..workloads.len());
        let misses = observe(snapshot, &workloads[truth], occupancy_pct, sub_seed(seed, "online", sample as u64))?;
        let predicted = classify_index(misses, &templates)?;
        predictions.push(Prediction { sample, truth, predicted, misses });
    }
    let correct = predictions.iter().filter(|p| p.truth == p.predicted).count();
    let accuracy = if n == 0 { 0.0 } else { correct as f64 / n as f64 };
    Ok(AccuracyReport { templates, predictions, accuracy })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cachecore::{CacheConfig, DesignKind};
    use crate::harness::prefill::{warm_up, Warmup};
    use std::collections::BTreeMap;

    fn spec(accesses: usize, phase: Phase) -> WorkloadSpec {
        WorkloadSpec {
            id: "t".into(),
            accesses,
            working_set_lines: 300,
            stride: 64,
            load_store_mix: 0.5,
            phase,
        }
    }

    fn snapshot(design: DesignKind) -> Cache {
        let mut c = Cache::new(CacheConfig::new(design).with_llc_bytes(1 << 20)).unwrap();
        warm_up(&mut c, Warmup::DataStoreOnly, 1);
        c
    }

    #[test]
    fn empty_spec_empty_trace() {
        assert!(gen_workload_trace(&spec(0, Phase::Uniform), WORKLOAD, 1).is_empty());
    }

    #[test]
    fn front_loaded_is_front_heavy() {
        let t = gen_workload_trace(&spec(10_000, Phase::FrontLoaded), WORKLOAD, 3);
        let early = t.entries.iter().filter(|e| e.at < t.span / 2).count();
        assert!(early as f64 >= 0.8 * t.len() as f64);
        assert!(t.entries.windows(2).all(|w| w[0].at <= w[1].at));
    }

    #[test]
    fn seeds_change_order_not_visits() {
        let s = spec(5_000, Phase::BackLoaded);
        let count = |t: &Trace| {
            let mut m: BTreeMap<(bool, u64), usize> = BTreeMap::new();
            for e in &t.entries {
                *m.entry((e.at < t.span / 2, e.addr)).or_default() += 1;
            }
            m
        };
        let a = gen_workload_trace(&s, WORKLOAD, 1);
        let b = gen_workload_trace(&s, WORKLOAD, 2);
        assert_eq!(a.len(), b.len());
        assert_eq!(count(&a), count(&b));
        assert_ne!(a, b);
    }

    #[test]
    fn workload_line_round_trip() {
        for w in synthetic_suite() {
            assert_eq!(WorkloadSpec::parse_line(&w.to_line()).unwrap(), w);
        }
        assert!(WorkloadSpec::parse_line("a 1 2 3").is_err());
        assert!(parse_workloads("# nothing\n").is_err());
    }

    #[test]
    fn classify_exact_and_ties() {
        let t = TemplateSet {
            occupancy_pct: 15.0,
            reps: 1,
            entries: vec![
                Template { id: "a".into(), mean: 10.0, std: 0.0 },
                Template { id: "b".into(), mean: 20.0, std: 0.0 },
            ],
        };
        assert_eq!(classify(20, &t).unwrap(), "b");
        assert_eq!(classify(15, &t).unwrap(), "a");
        let empty = TemplateSet { occupancy_pct: 15.0, reps: 1, entries: vec![] };
        assert!(classify(1, &empty).is_err());
    }

    #[test]
    fn single_rep_has_zero_std() {
        let snap = snapshot(DesignKind::Mirage);
        let t = build_templates(&snap, &[spec(1_000, Phase::Uniform)], 15.0, 1, 4).unwrap();
        assert_eq!(t.entries[0].std, 0.0);
    }

    #[test]
    fn single_workload_is_always_right() {
        let snap = snapshot(DesignKind::Baseline);
        let r = accuracy_experiment(&snap, &[spec(500, Phase::Uniform)], 15.0, 2, 10, 5).unwrap();
        assert_eq!(r.accuracy, 1.0);
    }

    #[test]
    fn mirage_template_means_ordered_by_volume() {
        let snap = snapshot(DesignKind::Mirage);
        let mut small = spec(10_000, Phase::Uniform);
        small.working_set_lines = 3_000;
        let mut big = small.clone();
        big.accesses = 40_000;
        let t = build_templates(&snap, &[small, big], 15.0, 8, 6).unwrap();
        assert!(t.entries[0].mean < t.entries[1].mean, "{:?}", t.entries);
    }

    #[test]
    fn rejects_bad_occupancy() {
        let snap = snapshot(DesignKind::Baseline);
        assert!(observe(&snap, &spec(10, Phase::Uniform), 0.0, 1).is_err());
        assert!(observe(&snap, &spec(10, Phase::Uniform), 100.0, 1).is_err());
    }
}

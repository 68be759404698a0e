//! Flat `key = value` experiment files with `[section]` headers.
//!
//! ```text
//! [cache]
//! design = mirage
//! policy = random
//! llc_bytes = 16777216
//!
//! [experiment]
//! kind = covert
//! master_seed = 7
//!
//! [covert]
//! l = 10000
//! ```
//!
//! Every key has a default; unknown sections and keys are rejected.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::prefill::Warmup;
use crate::cachecore::{CacheConfig, DesignKind, MirageDataLayout};
use crate::error::{Error, Result};
use crate::occchannel::ChannelParams;
use crate::randfunc::PresentKey;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::InvalidParam(format!("unknown output format {s:?}"))),
        }
    }
}

impl std::fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub designs: Vec<DesignKind>,
    pub from_pct: f64,
    pub to_pct: f64,
    pub step: usize,
    pub channel: ChannelParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FingerprintSpec {
    /// Workload file; the built-in suite when absent.
    pub workloads: Option<PathBuf>,
    pub occupancy_pct: f64,
    pub reps: usize,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AesSpec {
    pub occupancy_pct: f64,
    pub observations: usize,
    /// Directory for `known.csv` / `unknown.csv` observation logs.
    pub observations_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchSpec {
    pub trace: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Covert(ChannelParams),
    Sweep(SweepSpec),
    Fingerprint(FingerprintSpec),
    Aes(AesSpec),
    Bench(BenchSpec),
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Covert(_) => "covert",
            ExperimentKind::Sweep(_) => "sweep",
            ExperimentKind::Fingerprint(_) => "fingerprint",
            ExperimentKind::Aes(_) => "aes",
            ExperimentKind::Bench(_) => "bench",
        }
    }

    /// Channel experiments prefill MIRAGE only; the others start every
    /// design from a spuriously full cache.
    pub fn default_warmup(&self) -> Warmup {
        match self {
            ExperimentKind::Covert(_) | ExperimentKind::Sweep(_) => Warmup::DataStoreOnly,
            _ => Warmup::Full,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub cache: CacheConfig,
    pub kind: ExperimentKind,
    pub master_seed: u64,
    pub warmup: Warmup,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
}

impl ExperimentConfig {
    pub fn new(cache: CacheConfig, kind: ExperimentKind) -> Self {
        ExperimentConfig {
            cache,
            warmup: kind.default_warmup(),
            kind,
            master_seed: 0,
            output: None,
            format: OutputFormat::Csv,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.cache.validate()?;
        crate::randfunc::IndexFunction::new(self.cache.design, &self.cache.keys, self.cache.sets_per_skew(), self.cache.skews)?;
        match &self.kind {
            ExperimentKind::Covert(p) => p.validate(self.cache.line_bytes),
            ExperimentKind::Sweep(s) => {
                if s.designs.is_empty() {
                    return Err(Error::InvalidParam("sweep needs at least one design".into()));
                }
                if !(s.from_pct > 0.0 && s.from_pct <= s.to_pct && s.to_pct <= 100.0) {
                    return Err(Error::InvalidParam(format!("bad sweep range {}%..{}%", s.from_pct, s.to_pct)));
                }
                s.channel.validate(self.cache.line_bytes)
            }
            ExperimentKind::Fingerprint(f) => check_pct(f.occupancy_pct),
            ExperimentKind::Aes(a) => check_pct(a.occupancy_pct),
            ExperimentKind::Bench(_) => Ok(()),
        }
    }

    pub fn to_text(&self) -> String {
        let c = &self.cache;
        let mut s = String::new();
        let keys: Vec<String> = c.keys.iter().map(|k| k.to_string()).collect();
        let _ = writeln!(s, "[cache]");
        let _ = writeln!(s, "design = {}", c.design);
        let _ = writeln!(s, "policy = {}", c.policy);
        let _ = writeln!(s, "llc_bytes = {}", c.llc_bytes);
        let _ = writeln!(s, "line_bytes = {}", c.line_bytes);
        let _ = writeln!(s, "skews = {}", c.skews);
        let _ = writeln!(s, "ways_per_set = {}", c.ways_per_set);
        let _ = writeln!(s, "extra_tags_per_set = {}", c.extra_tags_per_set);
        let _ = writeln!(s, "mirage_data = {}", c.mirage_data);
        let _ = writeln!(s, "encryption_latency = {}", c.encryption_latency);
        let _ = writeln!(s, "keys = {}", keys.join(","));
        let _ = writeln!(s, "seed = {}", c.seed);
        let _ = writeln!(s, "\n[experiment]");
        let _ = writeln!(s, "kind = {}", self.kind.name());
        let _ = writeln!(s, "master_seed = {}", self.master_seed);
        let _ = writeln!(s, "warmup = {}", self.warmup);
        let _ = writeln!(s, "\n[output]");
        if let Some(p) = &self.output {
            let _ = writeln!(s, "path = {}", p.display());
        }
        let _ = writeln!(s, "format = {}", self.format);
        let channel = |s: &mut String, p: &ChannelParams| {
            let _ = writeln!(s, "l = {}", p.l);
            let _ = writeln!(s, "x = {}", p.x);
            let _ = writeln!(s, "y = {}", p.y);
            let _ = writeln!(s, "stride = {}", p.stride);
            let _ = writeln!(s, "trials = {}", p.trials);
            let _ = writeln!(s, "noise = {}", p.noise);
        };
        match &self.kind {
            ExperimentKind::Covert(p) => {
                let _ = writeln!(s, "\n[covert]");
                channel(&mut s, p);
            }
            ExperimentKind::Sweep(sw) => {
                let _ = writeln!(s, "\n[sweep]");
                let names: Vec<&str> = sw.designs.iter().map(|d| d.name()).collect();
                let _ = writeln!(s, "designs = {}", names.join(","));
                let _ = writeln!(s, "from_pct = {}", sw.from_pct);
                let _ = writeln!(s, "to_pct = {}", sw.to_pct);
                let _ = writeln!(s, "step = {}", sw.step);
                channel(&mut s, &sw.channel);
            }
            ExperimentKind::Fingerprint(f) => {
                let _ = writeln!(s, "\n[fingerprint]");
                if let Some(p) = &f.workloads {
                    let _ = writeln!(s, "workloads = {}", p.display());
                }
                let _ = writeln!(s, "occupancy_pct = {}", f.occupancy_pct);
                let _ = writeln!(s, "reps = {}", f.reps);
                let _ = writeln!(s, "n = {}", f.n);
            }
            ExperimentKind::Aes(a) => {
                let _ = writeln!(s, "\n[aes]");
                let _ = writeln!(s, "occupancy_pct = {}", a.occupancy_pct);
                let _ = writeln!(s, "observations = {}", a.observations);
                if let Some(p) = &a.observations_dir {
                    let _ = writeln!(s, "observations_dir = {}", p.display());
                }
            }
            ExperimentKind::Bench(b) => {
                let _ = writeln!(s, "\n[bench]");
                let _ = writeln!(s, "trace = {}", b.trace.display());
            }
        }
        s
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut secs = Sections::read(text, path)?;
        let design: DesignKind = secs.take("cache", "design")?.unwrap_or(DesignKind::Mirage);
        let mut cache = CacheConfig::new(design);
        if let Some(v) = secs.take("cache", "policy")? {
            cache.policy = v;
        }
        if let Some(v) = secs.take("cache", "llc_bytes")? {
            cache.llc_bytes = v;
        }
        if let Some(v) = secs.take("cache", "line_bytes")? {
            cache.line_bytes = v;
        }
        if let Some(v) = secs.take("cache", "skews")? {
            cache.skews = v;
        }
        if let Some(v) = secs.take("cache", "ways_per_set")? {
            cache.ways_per_set = v;
        }
        if let Some(v) = secs.take("cache", "extra_tags_per_set")? {
            cache.extra_tags_per_set = v;
        }
        if let Some(v) = secs.take::<MirageDataLayout>("cache", "mirage_data")? {
            cache.mirage_data = v;
        }
        if let Some(v) = secs.take("cache", "encryption_latency")? {
            cache.encryption_latency = v;
        }
        if let Some(v) = secs.take_raw("cache", "keys") {
            cache.keys = v
                .split(',')
                .map(|k| k.trim().parse::<PresentKey>())
                .collect::<Result<_>>()?;
        }
        if let Some(v) = secs.take("cache", "seed")? {
            cache.seed = v;
        }

        let kind_name = secs.take_raw("experiment", "kind").unwrap_or_else(|| "covert".into());
        let master_seed = secs.take("experiment", "master_seed")?.unwrap_or(0);
        let warmup: Option<Warmup> = secs.take("experiment", "warmup")?;
        let output = secs.take_raw("output", "path").map(PathBuf::from);
        let format = secs.take("output", "format")?.unwrap_or(OutputFormat::Csv);

        let channel = |secs: &mut Sections, sec: &str| -> Result<ChannelParams> {
            let d = ChannelParams::default();
            Ok(ChannelParams {
                l: secs.take(sec, "l")?.unwrap_or(d.l),
                x: secs.take(sec, "x")?.unwrap_or(d.x),
                y: secs.take(sec, "y")?.unwrap_or(d.y),
                stride: secs.take(sec, "stride")?.unwrap_or(d.stride),
                trials: secs.take(sec, "trials")?.unwrap_or(d.trials),
                noise: secs.take(sec, "noise")?.unwrap_or(d.noise),
            })
        };
        let kind = match kind_name.as_str() {
            "covert" => ExperimentKind::Covert(channel(&mut secs, "covert")?),
            "sweep" => {
                let designs = match secs.take_raw("sweep", "designs") {
                    Some(v) => v.split(',').map(|d| d.trim().parse()).collect::<Result<Vec<DesignKind>>>()?,
                    None => DesignKind::ALL.to_vec(),
                };
                ExperimentKind::Sweep(SweepSpec {
                    designs,
                    from_pct: secs.take("sweep", "from_pct")?.unwrap_or(1.0),
                    to_pct: secs.take("sweep", "to_pct")?.unwrap_or(40.0),
                    step: secs.take("sweep", "step")?.unwrap_or(2_500),
                    channel: channel(&mut secs, "sweep")?,
                })
            }
            "fingerprint" => ExperimentKind::Fingerprint(FingerprintSpec {
                workloads: secs.take_raw("fingerprint", "workloads").map(PathBuf::from),
                occupancy_pct: secs.take("fingerprint", "occupancy_pct")?.unwrap_or(15.0),
                reps: secs.take("fingerprint", "reps")?.unwrap_or(20),
                n: secs.take("fingerprint", "n")?.unwrap_or(500),
            }),
            "aes" => ExperimentKind::Aes(AesSpec {
                occupancy_pct: secs.take("aes", "occupancy_pct")?.unwrap_or(50.0),
                observations: secs.take("aes", "observations")?.unwrap_or(20_000),
                observations_dir: secs.take_raw("aes", "observations_dir").map(PathBuf::from),
            }),
            "bench" => ExperimentKind::Bench(BenchSpec {
                trace: secs
                    .take_raw("bench", "trace")
                    .map(PathBuf::from)
                    .ok_or_else(|| Error::InvalidParam("bench needs [bench] trace = <path>".into()))?,
            }),
            other => return Err(Error::UnknownExperiment(other.to_string())),
        };
        secs.finish()?;
        let warmup = warmup.unwrap_or_else(|| kind.default_warmup());
        let cfg = ExperimentConfig { cache, kind, master_seed, warmup, output, format };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }
}

fn check_pct(p: f64) -> Result<()> {
    if p > 0.0 && p < 100.0 {
        Ok(())
    } else {
        Err(Error::InvalidParam(format!("occupancy must be in (0,100), got {p}")))
    }
}

/// Raw `section -> key -> (value, line)` map with consumption tracking.
struct Sections {
    path: PathBuf,
    map: BTreeMap<String, BTreeMap<String, (String, usize)>>,
}

impl Sections {
    fn read(text: &str, path: &Path) -> Result<Self> {
        let mut map: BTreeMap<String, BTreeMap<String, (String, usize)>> = BTreeMap::new();
        let mut current = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse { path: path.to_path_buf(), line: i + 1, msg };
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| err(format!("unterminated section header {line:?}")))?;
                current = name.trim().to_string();
                map.entry(current.clone()).or_default();
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| err(format!("expected key = value, got {line:?}")))?;
            if current.is_empty() {
                return Err(err("key outside any section".into()));
            }
            let prev = map.entry(current.clone()).or_default().insert(k.trim().to_string(), (v.trim().to_string(), i + 1));
            if prev.is_some() {
                return Err(err(format!("duplicate key {:?}", k.trim())));
            }
        }
        Ok(Sections { path: path.to_path_buf(), map })
    }

    fn take_raw(&mut self, sec: &str, key: &str) -> Option<String> {
        self.map.get_mut(sec)?.remove(key).map(|(v, _)| v)
    }

    fn take<T: FromStr>(&mut self, sec: &str, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        let Some((v, line)) = self.map.get_mut(sec).and_then(|m| m.remove(key)) else {
            return Ok(None);
        };
        v.parse::<T>().map(Some).map_err(|e| Error::Parse {
            path: self.path.clone(),
            line,
            msg: format!("{sec}.{key}: {e}"),
        })
    }

    fn finish(self) -> Result<()> {
        for (sec, keys) in &self.map {
            if let Some((k, (_, line))) = keys.iter().next() {
                return Err(Error::Parse {
                    path: self.path.clone(),
                    line: *line,
                    msg: format!("unknown key {sec}.{k}"),
                });
            }
        }
        Ok(())
    }
}

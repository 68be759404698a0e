//! Single entry point behind the CLI and the FFI: config in, rows out.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::{ExperimentConfig, ExperimentKind, OutputFormat};
use super::prefill::{warm_up, Warmup};
use super::seed::sub_seed;
use super::trace::{load_trace, Trace};
use crate::aesattack::{self, AesReport};
use crate::cachecore::{Cache, CacheConfig, CacheStats};
use crate::error::{Error, Result};
use crate::fingerprint::{self, AccuracyReport};
use crate::occchannel::{self, SweepReport, TrialRow};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentOutput {
    Covert(Vec<TrialRow>),
    Sweep(SweepReport),
    Fingerprint(AccuracyReport),
    Aes(AesReport),
    Bench(CacheStats),
}

/// Replays `trace` on a fresh cache after `warmup`. Stats cover the trace
/// only.
pub fn bench(cfg: &CacheConfig, trace: &Trace, warmup: Warmup, seed: u64) -> Result<CacheStats> {
    let mut cache = Cache::new(cfg.clone())?;
    warm_up(&mut cache, warmup, sub_seed(seed, "warmup", 0));
    trace.replay(&mut cache);
    Ok(cache.stats().clone())
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let seed = cfg.master_seed;
    Ok(match &cfg.kind {
        ExperimentKind::Covert(p) => {
            let snap = occchannel::prepared_cache(&cfg.cache, cfg.warmup, seed)?;
            ExperimentOutput::Covert(occchannel::run_trials(&snap, p, seed)?)
        }
        ExperimentKind::Sweep(s) => {
            let configs: Vec<CacheConfig> = s
                .designs
                .iter()
                .map(|&d| {
                    let mut c = CacheConfig::new(d).with_llc_bytes(cfg.cache.llc_bytes).with_policy(cfg.cache.policy);
                    c.seed = cfg.cache.seed;
                    c.keys = cfg.cache.keys.clone();
                    c.mirage_data = cfg.cache.mirage_data;
                    c
                })
                .collect();
            let grid = occchannel::ell_grid(configs[0].total_lines(), s.from_pct, s.to_pct, s.step);
            ExperimentOutput::Sweep(occchannel::sweep_occupancy(&configs, &grid, &s.channel, cfg.warmup, seed)?)
        }
        ExperimentKind::Fingerprint(f) => {
            let workloads = match &f.workloads {
                Some(p) => {
                    let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                    fingerprint::parse_workloads(&text)?
                }
                None => fingerprint::synthetic_suite(),
            };
            let snap = occchannel::prepared_cache(&cfg.cache, cfg.warmup, seed)?;
            ExperimentOutput::Fingerprint(fingerprint::accuracy_experiment(&snap, &workloads, f.occupancy_pct, f.reps, f.n, seed)?)
        }
        ExperimentKind::Aes(a) => {
            let snap = occchannel::prepared_cache(&cfg.cache, cfg.warmup, seed)?;
            let run = aesattack::aes_experiment(&snap, a.occupancy_pct, a.observations, seed)?;
            if let Some(dir) = &a.observations_dir {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                aesattack::write_observations(&dir.join("known.csv"), &run.known)?;
                aesattack::write_observations(&dir.join("unknown.csv"), &run.unknown)?;
            }
            ExperimentOutput::Aes(run.report)
        }
        ExperimentKind::Bench(b) => ExperimentOutput::Bench(bench(&cfg.cache, &load_trace(&b.trace)?, cfg.warmup, seed)?),
    })
}

/// Hex SHA-256 of the canonical config text.
pub fn config_digest(cfg: &ExperimentConfig) -> String {
    Sha256::digest(cfg.to_text().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Serialize)]
struct Meta {
    tool: &'static str,
    version: &'static str,
    experiment: &'static str,
    config_sha256: String,
}

fn meta(cfg: &ExperimentConfig) -> Meta {
    Meta {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        experiment: cfg.kind.name(),
        config_sha256: config_digest(cfg),
    }
}

#[derive(Serialize)]
struct JsonDoc<'a> {
    meta: Meta,
    config: &'a ExperimentConfig,
    result: &'a ExperimentOutput,
}

/// Renders a result. CSV output starts with `#` comment lines carrying the
/// run metadata and the full config; no timestamps, so reruns are
/// byte-identical.
pub fn render(cfg: &ExperimentConfig, out: &ExperimentOutput, format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Json => {
            let doc = JsonDoc { meta: meta(cfg), config: cfg, result: out };
            let mut s = serde_json::to_string_pretty(&doc)?;
            s.push('\n');
            Ok(s)
        }
        OutputFormat::Csv => {
            let m = meta(cfg);
            let mut head = String::new();
            let _ = writeln!(head, "# {} {} {} config_sha256={}", m.tool, m.version, m.experiment, m.config_sha256);
            for line in cfg.to_text().lines().filter(|l| !l.is_empty()) {
                let _ = writeln!(head, "# {line}");
            }
            let mut w = csv::Writer::from_writer(Vec::new());
            match out {
                ExperimentOutput::Covert(rows) => {
                    for r in rows {
                        w.serialize(r)?;
                    }
                }
                ExperimentOutput::Sweep(rep) => {
                    for r in &rep.rows {
                        w.serialize(r)?;
                    }
                }
                ExperimentOutput::Fingerprint(rep) => {
                    w.write_record(["sample", "truth", "predicted", "misses"])?;
                    for p in &rep.predictions {
                        w.write_record([
                            p.sample.to_string(),
                            rep.templates.entries[p.truth].id.clone(),
                            rep.templates.entries[p.predicted].id.clone(),
                            p.misses.to_string(),
                        ])?;
                    }
                }
                ExperimentOutput::Aes(rep) => {
                    w.write_record(["position", "rank"])?;
                    for (i, r) in rep.ranks.iter().enumerate() {
                        w.write_record([i.to_string(), r.to_string()])?;
                    }
                }
                ExperimentOutput::Bench(s) => {
                    w.write_record(["accesses", "hits", "misses", "sae", "gle", "coldfill", "setfill"])?;
                    w.write_record(
                        [s.accesses, s.hits, s.misses, s.sae_count, s.gle_count, s.coldfill_count, s.setfill_count].map(|v| v.to_string()),
                    )?;
                }
            }
            let body = w.into_inner().map_err(|e| Error::InvalidParam(e.to_string()))?;
            head.push_str(&String::from_utf8(body).map_err(|e| Error::InvalidParam(e.to_string()))?);
            Ok(head)
        }
    }
}

/// Runs `cfg` and writes the rendered result to `cfg.output`, or returns it
/// for the caller to print when no path is set.
pub fn run_and_write(cfg: &ExperimentConfig) -> Result<(ExperimentOutput, String)> {
    let out = run_experiment(cfg)?;
    let text = render(cfg, &out, cfg.format)?;
    if let Some(p) = &cfg.output {
        write_file(p, &text)?;
    }
    Ok((out, text))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cachecore::DesignKind;
    use crate::harness::config::BenchSpec;
    use crate::occchannel::ChannelParams;

    fn small_covert() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(
            CacheConfig::new(DesignKind::Mirage).with_llc_bytes(1 << 20),
            ExperimentKind::Covert(ChannelParams { l: 2_000, x: 100, y: 300, trials: 3, ..Default::default() }),
        );
        cfg.master_seed = 11;
        cfg
    }

    #[test]
    fn rerun_is_byte_identical() {
        let cfg = small_covert();
        for fmt in [OutputFormat::Csv, OutputFormat::Json] {
            let a = render(&cfg, &run_experiment(&cfg).unwrap(), fmt).unwrap();
            let b = render(&cfg, &run_experiment(&cfg).unwrap(), fmt).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn csv_header_echoes_config() {
        let cfg = small_covert();
        let text = render(&cfg, &run_experiment(&cfg).unwrap(), OutputFormat::Csv).unwrap();
        assert!(text.starts_with("# occlab "));
        assert!(text.contains(&config_digest(&cfg)));
        assert!(text.contains("# design = mirage"));
        let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data[0], "design,l,bit,trial,misses,evictions");
        assert_eq!(data.len(), 1 + 6);
    }

    #[test]
    fn bench_reads_trace_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.trace");
        std::fs::write(&p, "L 0x1000\nL 0x1000\nS 0x2000 D0\n").unwrap();
        let mut cfg = ExperimentConfig::new(
            CacheConfig::new(DesignKind::Baseline).with_llc_bytes(1 << 20),
            ExperimentKind::Bench(BenchSpec { trace: p }),
        );
        cfg.warmup = Warmup::None;
        match run_experiment(&cfg).unwrap() {
            ExperimentOutput::Bench(s) => {
                assert_eq!((s.accesses, s.hits, s.misses), (3, 1, 2));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn output_written_to_path() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small_covert();
        cfg.output = Some(dir.path().join("nested/out.json"));
        cfg.format = OutputFormat::Json;
        let (_, text) = run_and_write(&cfg).unwrap();
        assert_eq!(std::fs::read_to_string(cfg.output.as_ref().unwrap()).unwrap(), text);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["meta"]["experiment"], "covert");
    }
}

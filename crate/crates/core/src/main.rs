use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use occlab::cachecore::{MirageDataLayout, DEFAULT_LLC_BYTES};
use occlab::harness::{
    run_and_write, AesSpec, BenchSpec, ExperimentConfig, ExperimentKind, ExperimentOutput, FingerprintSpec, OutputFormat,
    SweepSpec, Warmup,
};
use occlab::occchannel::ChannelParams;
use occlab::{CacheConfig, DesignKind, PolicyKind};

#[derive(Parser)]
#[command(name = "occlab", version, about = "Randomized LLC simulator and occupancy-attack experiments")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Global {
    #[arg(long, global = true, default_value = "mirage")]
    design: DesignKind,
    #[arg(long, global = true, default_value = "random")]
    policy: PolicyKind,
    /// LLC capacity, e.g. 16M, 1MiB, 262144. Defaults to 1M for `aes`,
    /// 16M otherwise.
    #[arg(long = "llc-size", global = true, value_parser = parse_size)]
    llc_size: Option<u64>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Seed of the cache's own randomness (skew choice, global eviction).
    #[arg(long = "cache-seed", global = true, default_value_t = 0)]
    cache_seed: u64,
    #[arg(long = "mirage-data", global = true, default_value = "shared")]
    mirage_data: MirageDataLayout,
    /// none, full or data-store-only; by default channel experiments warm
    /// MIRAGE only and the rest fill every design.
    #[arg(long, global = true)]
    warmup: Option<Warmup>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value = "csv")]
    format: OutputFormat,
    /// Print the resolved config file instead of running.
    #[arg(long = "dump-config", global = true)]
    dump_config: bool,
}

#[derive(Args, Clone)]
struct Channel {
    #[arg(long, default_value_t = 10_000)]
    l: usize,
    #[arg(long, default_value_t = 1_000)]
    x: usize,
    #[arg(long, default_value_t = 2_000)]
    y: usize,
    #[arg(long, default_value_t = 64_000)]
    stride: u64,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    noise: usize,
}

impl From<Channel> for ChannelParams {
    fn from(c: Channel) -> Self {
        ChannelParams { l: c.l, x: c.x, y: c.y, stride: c.stride, trials: c.trials, noise: c.noise }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Bit transmissions at one receiver size.
    Covert(Channel),
    /// Receiver-size sweep across designs.
    Sweep {
        /// Comma-separated designs; all when omitted.
        #[arg(long, value_delimiter = ',')]
        designs: Vec<DesignKind>,
        #[arg(long = "from-pct", default_value_t = 1.0)]
        from_pct: f64,
        #[arg(long = "to-pct", default_value_t = 40.0)]
        to_pct: f64,
        #[arg(long, default_value_t = 2_500)]
        step: usize,
        #[command(flatten)]
        channel: Channel,
    },
    /// Workload classification by occupancy templates.
    Fingerprint {
        /// Workload description file; built-in suite when omitted.
        #[arg(long)]
        workloads: Option<PathBuf>,
        #[arg(long, default_value_t = 15.0)]
        occupancy: f64,
        #[arg(long, default_value_t = 20)]
        reps: usize,
        #[arg(long, default_value_t = 500)]
        n: usize,
    },
    /// Last-round key ranking of a T-table AES victim.
    Aes {
        #[arg(long, default_value_t = 50.0)]
        occupancy: f64,
        #[arg(long, default_value_t = 20_000)]
        observations: usize,
        /// Write known.csv / unknown.csv observation logs here.
        #[arg(long = "observations-dir")]
        observations_dir: Option<PathBuf>,
    },
    /// Replay a trace file and report hit/miss/eviction counts.
    Bench {
        trace: PathBuf,
        /// Replay on a cold cache; same as --warmup none.
        #[arg(long)]
        cold: bool,
    },
    /// Run an experiment config file.
    Run { config: PathBuf },
}

fn parse_size(s: &str) -> Result<u64, String> {
    let t = s.trim();
    let split = t.find(|c: char| !c.is_ascii_digit()).unwrap_or(t.len());
    let (num, unit) = t.split_at(split);
    let n: u64 = num.parse().map_err(|_| format!("bad size {s:?}"))?;
    let mult = match unit.to_ascii_lowercase().as_str() {
        "" | "b" => 1,
        "k" | "kb" | "kib" => 1 << 10,
        "m" | "mb" | "mib" => 1 << 20,
        "g" | "gb" | "gib" => 1 << 30,
        _ => return Err(format!("bad size unit in {s:?}")),
    };
    Ok(n * mult)
}

fn build(cli: Cli) -> occlab::Result<ExperimentConfig> {
    let g = cli.global;
    if let Cmd::Run { config } = &cli.cmd {
        return ExperimentConfig::load(config);
    }
    let default_llc = if matches!(cli.cmd, Cmd::Aes { .. }) { 1 << 20 } else { DEFAULT_LLC_BYTES };
    let cache = CacheConfig::new(g.design)
        .with_llc_bytes(g.llc_size.unwrap_or(default_llc))
        .with_policy(g.policy)
        .with_mirage_data(g.mirage_data)
        .with_seed(g.cache_seed);
    cache.validate()?;
    let mut forced_warmup = g.warmup;
    let kind = match cli.cmd {
        Cmd::Covert(c) => ExperimentKind::Covert(c.into()),
        Cmd::Sweep { designs, from_pct, to_pct, step, channel } => ExperimentKind::Sweep(SweepSpec {
            designs: if designs.is_empty() { DesignKind::ALL.to_vec() } else { designs },
            from_pct,
            to_pct,
            step,
            channel: channel.into(),
        }),
        Cmd::Fingerprint { workloads, occupancy, reps, n } => {
            ExperimentKind::Fingerprint(FingerprintSpec { workloads, occupancy_pct: occupancy, reps, n })
        }
        Cmd::Aes { occupancy, observations, observations_dir } => {
            ExperimentKind::Aes(AesSpec { occupancy_pct: occupancy, observations, observations_dir })
        }
        Cmd::Bench { trace, cold } => {
            if cold {
                forced_warmup = Some(Warmup::None);
            }
            ExperimentKind::Bench(BenchSpec { trace })
        }
        Cmd::Run { .. } => unreachable!(),
    };
    let mut cfg = ExperimentConfig::new(cache, kind);
    cfg.master_seed = g.seed;
    if let Some(w) = forced_warmup {
        cfg.warmup = w;
    }
    cfg.output = g.out;
    cfg.format = g.format;
    cfg.validate()?;
    Ok(cfg)
}

fn summary(out: &ExperimentOutput) -> String {
    match out {
        ExperimentOutput::Covert(rows) => {
            let m = |b: u8| {
                let v: Vec<f64> = rows.iter().filter(|r| r.bit == b).map(|r| r.misses as f64).collect();
                occlab::stats::mean(&v)
            };
            format!("covert: mean misses bit0 {:.1}, bit1 {:.1}", m(0), m(1))
        }
        ExperimentOutput::Sweep(r) => r
            .onsets
            .iter()
            .map(|(d, o)| format!("{d}: onset {}", o.map_or("none".into(), |l| l.to_string())))
            .collect::<Vec<_>>()
            .join("\n"),
        ExperimentOutput::Fingerprint(r) => format!("fingerprint: accuracy {:.3}", r.accuracy),
        ExperimentOutput::Aes(r) => format!("aes: GE {:.2} bits, ranks {:?}", r.ge, r.ranks),
        ExperimentOutput::Bench(s) => format!("bench: {} accesses, {} hits, {} misses", s.accesses, s.hits, s.misses),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let dump = cli.global.dump_config;
    let cfg = match build(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if dump {
        print!("{}", cfg.to_text());
        return ExitCode::SUCCESS;
    }
    match run_and_write(&cfg) {
        Ok((out, text)) => {
            if cfg.output.is_some() {
                eprintln!("{}", summary(&out));
            } else {
                print!("{text}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

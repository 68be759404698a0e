//! Occupancy covert channel: receiver prime, sender modulation, receiver
//! probe, plus the occupancy sweep and the 8-symbol byte channel.
//!
//! CSV columns written by the harness for single-point runs:
//! `design,l,bit,trial,misses,evictions`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cachecore::{AccessKind, Cache, CacheConfig, DesignKind};
use crate::error::{Error, Result};
use crate::harness::prefill::{warm_up, Warmup};
use crate::harness::seed::{component_rng, sub_seed};
use crate::randfunc::SecurityDomain;
use crate::stats::{mean, welch_t};

pub const RECEIVER: SecurityDomain = SecurityDomain::ATTACKER;
pub const SENDER: SecurityDomain = SecurityDomain::VICTIM;

/// Distinguishability threshold for the Welch test.
pub const ALPHA: f64 = 0.01;

/// Start offsets are drawn on the stride grid from this many positions.
const START_POSITIONS: u64 = 1 << 20;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Receiver lines primed and probed.
    pub l: usize,
    /// Sender accesses for a 0.
    pub x: usize,
    /// Sender accesses for a 1.
    pub y: usize,
    /// Byte distance between consecutive addresses of one party.
    pub stride: u64,
    pub trials: usize,
    /// Third-party accesses between sender and probe.
    pub noise: usize,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            l: 10_000,
            x: 1_000,
            y: 2_000,
            stride: 64_000,
            trials: 100,
            noise: 0,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self, line_bytes: u64) -> Result<()> {
        if self.stride <= line_bytes {
            return Err(Error::InvalidParam(format!(
                "stride {} must exceed the {line_bytes}-byte line",
                self.stride
            )));
        }
        if self.x >= self.y {
            return Err(Error::InvalidParam(format!("need x < y, got {} and {}", self.x, self.y)));
        }
        Ok(())
    }

    pub fn sender_accesses(&self, bit: u8) -> usize {
        if bit == 0 {
            self.x
        } else {
            self.y
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelTrialResult {
    pub bit: u8,
    pub receiver_misses: u64,
    pub sender_evictions_of_receiver: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Exchange {
    misses: u64,
    evictions: u64,
}

/// One prime / send / probe round with `sender_accesses` sender lines.
fn exchange(cache: &mut Cache, p: &ChannelParams, sender_accesses: usize, seed: u64) -> Result<Exchange> {
    if p.l > cache.data_capacity() {
        return Err(Error::InvalidParam(format!(
            "l = {} exceeds the data capacity of {} lines",
            p.l,
            cache.data_capacity()
        )));
    }
    cache.reseed(sub_seed(seed, "cache", 0));
    let mut rng = component_rng(seed, "channel", 0);
    let r_base = RECEIVER.region_base() + rng.gen_range(0..START_POSITIONS) * p.stride;
    let s_base = SENDER.region_base() + rng.gen_range(0..START_POSITIONS) * p.stride;

    for i in 0..p.l as u64 {
        cache.access(r_base + i * p.stride, RECEIVER, AccessKind::Load);
    }
    let mut evictions = 0;
    for j in 0..sender_accesses as u64 {
        let o = cache.access(s_base + j * p.stride, SENDER, AccessKind::Load);
        if o.eviction.victim().is_some_and(|v| v.domain == RECEIVER) {
            evictions += 1;
        }
    }
    let noise_base = SecurityDomain::NOISE.region_base();
    for _ in 0..p.noise {
        let line: u64 = rng.gen_range(0..1u64 << 32);
        cache.access(noise_base + (line << 6), SecurityDomain::NOISE, AccessKind::Load);
    }
    let mut misses = 0;
    for i in 0..p.l as u64 {
        if !cache.access(r_base + i * p.stride, RECEIVER, AccessKind::Load).hit {
            misses += 1;
        }
    }
    Ok(Exchange { misses, evictions })
}

/// Runs one bit transmission on `cache`, which should already be warmed up.
pub fn run_bit_trial(cache: &mut Cache, params: &ChannelParams, bit: u8, seed: u64) -> Result<ChannelTrialResult> {
    if bit > 1 {
        return Err(Error::InvalidParam(format!("bit must be 0 or 1, got {bit}")));
    }
    params.validate(cache.config().line_bytes)?;
    let e = exchange(cache, params, params.sender_accesses(bit), seed)?;
    Ok(ChannelTrialResult {
        bit,
        receiver_misses: e.misses,
        sender_evictions_of_receiver: e.evictions,
    })
}

/// Builds and warms a cache once so trials can start from clones of it.
pub fn prepared_cache(cfg: &CacheConfig, warmup: Warmup, seed: u64) -> Result<Cache> {
    let mut cache = Cache::new(cfg.clone())?;
    warm_up(&mut cache, warmup, sub_seed(seed, "warmup", 0));
    Ok(cache)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub design: DesignKind,
    pub l: usize,
    pub bit: u8,
    pub trial: usize,
    pub misses: u64,
    pub evictions: u64,
}

/// `params.trials` transmissions of each bit, each from a copy of `snapshot`.
pub fn run_trials(snapshot: &Cache, params: &ChannelParams, seed: u64) -> Result<Vec<TrialRow>> {
    params.validate(snapshot.config().line_bytes)?;
    let design = snapshot.design();
    let mut rows = Vec::with_capacity(2 * params.trials);
    for bit in 0..2u8 {
        for trial in 0..params.trials {
            let mut cache = snapshot.clone();
            let s = sub_seed(seed, &format!("covert/{design}/{}/{bit}", params.l), trial as u64);
            let r = run_bit_trial(&mut cache, params, bit, s)?;
            rows.push(TrialRow {
                design,
                l: params.l,
                bit,
                trial,
                misses: r.receiver_misses,
                evictions: r.sender_evictions_of_receiver,
            });
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub design: DesignKind,
    pub l: usize,
    pub mean0: f64,
    pub mean1: f64,
    pub p_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// Smallest swept `l` with p < ALPHA, per design.
    pub onsets: Vec<(DesignKind, Option<usize>)>,
}

impl SweepReport {
    pub fn onset(&self, design: DesignKind) -> Option<usize> {
        self.onsets.iter().find(|(d, _)| *d == design).and_then(|&(_, o)| o)
    }
}

/// Multiples of `step` between `from_pct` and `to_pct` percent of
/// `total_lines`, inclusive.
pub fn ell_grid(total_lines: u64, from_pct: f64, to_pct: f64, step: usize) -> Vec<usize> {
    let lo = (total_lines as f64 * from_pct / 100.0).ceil() as usize;
    let hi = (total_lines as f64 * to_pct / 100.0).floor() as usize;
    let step = step.max(1);
    let first = lo.div_ceil(step) * step;
    (first..=hi).step_by(step).filter(|&l| l > 0).collect()
}

/// Summarizes bit-0 / bit-1 miss counts at one `l`.
pub fn summarize(design: DesignKind, l: usize, rows: &[TrialRow]) -> Result<SweepRow> {
    let m0: Vec<f64> = rows.iter().filter(|r| r.bit == 0).map(|r| r.misses as f64).collect();
    let m1: Vec<f64> = rows.iter().filter(|r| r.bit == 1).map(|r| r.misses as f64).collect();
    Ok(SweepRow {
        design,
        l,
        mean0: mean(&m0),
        mean1: mean(&m1),
        p_value: welch_t(&m0, &m1)?,
    })
}

pub fn sweep_occupancy(
    configs: &[CacheConfig],
    ells: &[usize],
    params: &ChannelParams,
    warmup: Warmup,
    seed: u64,
) -> Result<SweepReport> {
    let mut rows = Vec::new();
    let mut onsets = Vec::new();
    for cfg in configs {
        let snapshot = prepared_cache(cfg, warmup, seed)?;
        let mut onset = None;
        for &l in ells {
            let row = if l == 0 {
                SweepRow { design: cfg.design, l, mean0: 0.0, mean1: 0.0, p_value: 1.0 }
            } else {
                let p = ChannelParams { l, ..params.clone() };
                summarize(cfg.design, l, &run_trials(&snapshot, &p, seed)?)?
            };
            if onset.is_none() && row.p_value < ALPHA {
                onset = Some(l);
            }
            rows.push(row);
        }
        onsets.push((cfg.design, onset));
    }
    Ok(SweepReport { rows, onsets })
}

/// Symbols of the byte channel; value v is sent with 1000·(v+1) accesses.
pub const BYTE_SYMBOLS: usize = 8;

pub fn byte_sender_accesses(value: u8) -> usize {
    1_000 * (value as usize + 1)
}

/// Noise accesses paired with a receiver footprint of `l` lines.
pub fn noise_schedule(l: usize) -> usize {
    l / 10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ByteTemplates {
    pub l: usize,
    pub noise: usize,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl ByteTemplates {
    /// Nearest template mean; ties go to the lower value.
    pub fn decode(&self, misses: u64) -> u8 {
        let m = misses as f64;
        let mut best = 0usize;
        for v in 1..self.means.len() {
            if (m - self.means[v]).abs() < (m - self.means[best]).abs() {
                best = v;
            }
        }
        best as u8
    }
}

fn byte_params(l: usize, noise: usize) -> ChannelParams {
    ChannelParams { l, noise, ..ChannelParams::default() }
}

/// Calibration pass: `reps` transmissions of every symbol from copies of
/// `snapshot`.
pub fn calibrate_byte_templates(snapshot: &Cache, l: usize, noise: usize, reps: usize, seed: u64) -> Result<ByteTemplates> {
    let p = byte_params(l, noise);
    let mut means = Vec::with_capacity(BYTE_SYMBOLS);
    let mut stds = Vec::with_capacity(BYTE_SYMBOLS);
    for v in 0..BYTE_SYMBOLS as u8 {
        let mut xs = Vec::with_capacity(reps);
        for r in 0..reps {
            let mut cache = snapshot.clone();
            let s = sub_seed(seed, &format!("byte-template/{v}"), r as u64);
            xs.push(exchange(&mut cache, &p, byte_sender_accesses(v), s)?.misses as f64);
        }
        means.push(mean(&xs));
        stds.push(crate::stats::std_dev(&xs));
    }
    Ok(ByteTemplates { l, noise, means, stds })
}

/// Sends `value` once over `cache` and decodes it with `templates`.
pub fn run_byte_channel(cache: &mut Cache, value: u8, templates: &ByteTemplates, seed: u64) -> Result<u8> {
    if value as usize >= BYTE_SYMBOLS {
        return Err(Error::InvalidParam(format!("byte channel value must be < 8, got {value}")));
    }
    let p = byte_params(templates.l, templates.noise);
    let e = exchange(cache, &p, byte_sender_accesses(value), seed)?;
    Ok(templates.decode(e.misses))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cachecore::CacheConfig;

    fn small(design: DesignKind) -> CacheConfig {
        CacheConfig::new(design).with_llc_bytes(1 << 20)
    }

    #[test]
    fn misses_bounded_by_l() {
        let snap = prepared_cache(&small(DesignKind::Mirage), Warmup::Full, 1).unwrap();
        let p = ChannelParams { l: 2_000, trials: 3, ..Default::default() };
        for r in run_trials(&snap, &p, 7).unwrap() {
            assert!(r.misses <= 2_000);
        }
    }

    #[test]
    fn rejects_oversized_l() {
        let mut c = prepared_cache(&small(DesignKind::Baseline), Warmup::None, 1).unwrap();
        let p = ChannelParams { l: c.data_capacity() + 1, ..Default::default() };
        assert!(run_bit_trial(&mut c, &p, 0, 0).is_err());
    }

    #[test]
    fn rejects_bad_params() {
        let mut c = prepared_cache(&small(DesignKind::Baseline), Warmup::None, 1).unwrap();
        let p = ChannelParams { stride: 64, ..Default::default() };
        assert!(run_bit_trial(&mut c, &p, 0, 0).is_err());
        let p = ChannelParams { x: 2_000, y: 1_000, ..Default::default() };
        assert!(run_bit_trial(&mut c, &p, 0, 0).is_err());
    }

    #[test]
    fn zero_l_is_indistinguishable() {
        let r = sweep_occupancy(&[small(DesignKind::Mirage)], &[0], &ChannelParams::default(), Warmup::Full, 1).unwrap();
        assert_eq!(r.rows[0].mean0, 0.0);
        assert_eq!(r.rows[0].mean1, 0.0);
        assert_eq!(r.onset(DesignKind::Mirage), None);
    }

    #[test]
    fn grid_bounds() {
        let g = ell_grid(262_144, 1.0, 40.0, 2_500);
        assert_eq!(g.first(), Some(&5_000));
        assert_eq!(g.last(), Some(&102_500));
    }

    #[test]
    fn decode_ties_go_low() {
        let t = ByteTemplates { l: 1, noise: 0, means: vec![10.0, 20.0, 30.0], stds: vec![0.0; 3] };
        assert_eq!(t.decode(15), 0);
        assert_eq!(t.decode(20), 1);
        assert_eq!(t.decode(26), 2);
    }

    #[test]
    fn trials_are_reproducible() {
        let snap = prepared_cache(&small(DesignKind::Mirage), Warmup::Full, 2).unwrap();
        let p = ChannelParams { l: 1_000, trials: 4, ..Default::default() };
        assert_eq!(run_trials(&snap, &p, 11).unwrap(), run_trials(&snap, &p, 11).unwrap());
    }
}

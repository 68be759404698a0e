//! AES T-table key recovery through the attacker's own LLC occupancy.
//!
//! The target is the round-10 key: observation labels are
//! InvSBox(C_i ^ K10_i), the index of the final-round table lookup that
//! produced ciphertext byte i. The master key follows by inverting the key
//! schedule.
//!
//! Observation CSV columns: `plaintext,ciphertext,probe_cost` (hex, hex,
//! decimal).

pub mod aes;
mod bruteforce;
mod profile;
mod rank;

pub use aes::{aes128_encrypt_traced, touched_lines, AesKey};
pub use bruteforce::{brute_force_finish, BruteForceOutcome};
pub use profile::{build_guess_profiles, build_known_profile, GuessProfiles, ObservationTuple, ProfileTable};
pub use rank::{candidate_lists, guessing_entropy, masked_correlation, rank_and_ge, ranked_guesses, RankReport};

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cachecore::{AccessKind, Cache, DesignKind};
use crate::error::{Error, Result};
use crate::harness::seed::{component_rng, sub_seed};
use crate::randfunc::SecurityDomain;

pub const ATTACKER: SecurityDomain = SecurityDomain::ATTACKER;
pub const VICTIM: SecurityDomain = SecurityDomain::VICTIM;

/// One attack round on a copy of `snapshot`: prime `occupancy_pct` percent
/// of the data store, one victim encryption of a random plaintext, re-probe.
pub fn collect_observation(snapshot: &Cache, key: &AesKey, occupancy_pct: f64, seed: u64) -> Result<ObservationTuple> {
    if !(occupancy_pct > 0.0 && occupancy_pct < 100.0) {
        return Err(Error::InvalidParam(format!("occupancy must be in (0,100), got {occupancy_pct}")));
    }
    let lines = (snapshot.data_capacity() as f64 * occupancy_pct / 100.0).round() as u64;
    let mut cache = snapshot.clone();
    cache.reseed(sub_seed(seed, "cache", 0));
    let plaintext: [u8; 16] = component_rng(seed, "plaintext", 0).gen();
    let base = ATTACKER.region_base();
    for i in 0..lines {
        cache.access(base + (i << 6), ATTACKER, AccessKind::Load);
    }
    let ciphertext = aes128_encrypt_traced(plaintext, key, Some(&mut cache), VICTIM);
    let mut probe_cost = 0;
    for i in 0..lines {
        if !cache.access(base + (i << 6), ATTACKER, AccessKind::Load).hit {
            probe_cost += 1;
        }
    }
    Ok(ObservationTuple { plaintext, ciphertext, probe_cost })
}

pub fn collect_observations(snapshot: &Cache, key: &AesKey, occupancy_pct: f64, n: usize, seed: u64, stream: &str) -> Result<Vec<ObservationTuple>> {
    (0..n)
        .map(|i| collect_observation(snapshot, key, occupancy_pct, sub_seed(seed, stream, i as u64)))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AesReport {
    pub design: DesignKind,
    pub llc_bytes: u64,
    pub occupancy_pct: f64,
    pub observations: usize,
    pub known_observations: usize,
    pub ranks: Vec<u16>,
    pub ge: f64,
    pub mean_probe_cost: f64,
}

#[derive(Clone, Debug)]
pub struct AesRun {
    pub report: AesReport,
    pub known: Vec<ObservationTuple>,
    pub unknown: Vec<ObservationTuple>,
    pub victim_key: AesKey,
    pub profiling_key: AesKey,
}

/// Full attack: profile under a fresh known key, observe the victim under
/// an unknown key, rank every byte guess.
pub fn aes_experiment(snapshot: &Cache, occupancy_pct: f64, n_obs: usize, seed: u64) -> Result<AesRun> {
    let mut keys = component_rng(seed, "aes-keys", 0);
    let victim_key = AesKey::new(keys.gen());
    let profiling_key = AesKey::new(keys.gen());
    let known = collect_observations(snapshot, &profiling_key, occupancy_pct, n_obs, seed, "aes-known")?;
    let unknown = collect_observations(snapshot, &victim_key, occupancy_pct, n_obs, seed, "aes-unknown")?;
    let report = analyze(snapshot.design(), snapshot.config().llc_bytes, occupancy_pct, &known, &profiling_key, &unknown, &victim_key);
    Ok(AesRun { report, known, unknown, victim_key, profiling_key })
}

/// Ranking and GE from persisted observation sets.
pub fn analyze(
    design: DesignKind,
    llc_bytes: u64,
    occupancy_pct: f64,
    known: &[ObservationTuple],
    profiling_key: &AesKey,
    unknown: &[ObservationTuple],
    victim_key: &AesKey,
) -> AesReport {
    let known_profile = build_known_profile(known, &profiling_key.last_round_key());
    let guesses = build_guess_profiles(unknown);
    let r = rank_and_ge(&guesses, &known_profile, &victim_key.last_round_key());
    let mean_probe_cost = if unknown.is_empty() {
        0.0
    } else {
        unknown.iter().map(|o| o.probe_cost as f64).sum::<f64>() / unknown.len() as f64
    };
    AesReport {
        design,
        llc_bytes,
        occupancy_pct,
        observations: unknown.len(),
        known_observations: known.len(),
        ranks: r.ranks,
        ge: r.ge,
        mean_probe_cost,
    }
}

/// GE when probe costs carry no information: random ciphertexts paired with
/// random costs.
pub fn null_ge(n_obs: usize, seed: u64) -> f64 {
    let mut rng = component_rng(seed, "null-ge", 0);
    let mut draw = |n: usize| -> Vec<ObservationTuple> {
        (0..n)
            .map(|_| ObservationTuple { plaintext: rng.gen(), ciphertext: rng.gen(), probe_cost: rng.gen_range(0..1_000) })
            .collect()
    };
    let known = draw(n_obs);
    let unknown = draw(n_obs);
    let k_known: [u8; 16] = rng.gen();
    let k_true: [u8; 16] = rng.gen();
    rank_and_ge(&build_guess_profiles(&unknown), &build_known_profile(&known, &k_known), &k_true).ge
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn unhex16(s: &str) -> std::result::Result<[u8; 16], String> {
    if s.len() != 32 {
        return Err(format!("expected 32 hex digits, got {s:?}"));
    }
    let mut out = [0u8; 16];
    for i in 0..16 {
        out[i] = u8::from_str_radix(&s[2 * i..2 * i + 2], 16).map_err(|e| format!("{s:?}: {e}"))?;
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct ObsRow {
    plaintext: String,
    ciphertext: String,
    probe_cost: u64,
}

pub fn write_observations(path: &Path, obs: &[ObservationTuple]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for o in obs {
        w.serialize(ObsRow { plaintext: hex(&o.plaintext), ciphertext: hex(&o.ciphertext), probe_cost: o.probe_cost })?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_observations(path: &Path) -> Result<Vec<ObservationTuple>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for (i, row) in r.deserialize::<ObsRow>().enumerate() {
        let row = row?;
        let bad = |msg: String| Error::Parse { path: path.to_path_buf(), line: i + 2, msg };
        out.push(ObservationTuple {
            plaintext: unhex16(&row.plaintext).map_err(bad)?,
            ciphertext: unhex16(&row.ciphertext).map_err(bad)?,
            probe_cost: row.probe_cost,
        });
    }
    Ok(out)
}

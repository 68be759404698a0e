use serde::{Deserialize, Serialize};

use super::aes::{INV_SBOX, SBOX};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationTuple {
    pub plaintext: [u8; 16],
    pub ciphertext: [u8; 16],
    pub probe_cost: u64,
}

/// label -> (sum of probe costs, count) for one key-byte position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileTable {
    pub sums: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Default for ProfileTable {
    fn default() -> Self {
        ProfileTable {
            sums: vec![0.0; 256],
            counts: vec![0; 256],
        }
    }
}

impl ProfileTable {
    pub fn add(&mut self, label: u8, cost: f64) {
        self.sums[label as usize] += cost;
        self.counts[label as usize] += 1;
    }

    pub fn mean(&self, label: u8) -> Option<f64> {
        let c = self.counts[label as usize];
        (c > 0).then(|| self.sums[label as usize] / c as f64)
    }

    pub fn means(&self) -> Vec<Option<f64>> {
        (0..=255u8).map(|l| self.mean(l)).collect()
    }

    pub fn total_count(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn labels_seen(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }
}

/// Profiles under a known round-10 key: label = InvSBox(C_i ^ K_i).
pub fn build_known_profile(obs: &[ObservationTuple], last_round_key: &[u8; 16]) -> Vec<ProfileTable> {
    let mut tables = vec![ProfileTable::default(); 16];
    for o in obs {
        for (i, t) in tables.iter_mut().enumerate() {
            let label = INV_SBOX[(o.ciphertext[i] ^ last_round_key[i]) as usize];
            t.add(label, o.probe_cost as f64);
        }
    }
    tables
}

/// Profiles for all 256 guesses of every byte position.
///
/// Only per-(position, ciphertext byte) accumulators are stored. Guess j
/// labels an observation with ciphertext byte c as InvSBox(c ^ j), so the
/// table of guess j is a permutation of the accumulators: label l maps to
/// c = SBox(l) ^ j.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GuessProfiles {
    by_ct: Vec<ProfileTable>,
    observations: u64,
}

impl GuessProfiles {
    pub fn table(&self, position: usize, guess: u8) -> ProfileTable {
        let src = &self.by_ct[position];
        let mut out = ProfileTable::default();
        for (l, &s) in SBOX.iter().enumerate() {
            let c = (s ^ guess) as usize;
            out.sums[l] = src.sums[c];
            out.counts[l] = src.counts[c];
        }
        out
    }

    pub fn observations(&self) -> u64 {
        self.observations
    }

    /// Mean vector of guess `guess` at `position`, indexed by label.
    pub fn means(&self, position: usize, guess: u8) -> Vec<Option<f64>> {
        let src = &self.by_ct[position];
        (0..256)
            .map(|l| {
                let c = (SBOX[l] ^ guess) as usize;
                (src.counts[c] > 0).then(|| src.sums[c] / src.counts[c] as f64)
            })
            .collect()
    }
}

pub fn build_guess_profiles(obs: &[ObservationTuple]) -> GuessProfiles {
    let mut by_ct = vec![ProfileTable::default(); 16];
    for o in obs {
        for (i, t) in by_ct.iter_mut().enumerate() {
            t.add(o.ciphertext[i], o.probe_cost as f64);
        }
    }
    GuessProfiles {
        by_ct,
        observations: obs.len() as u64,
    }
}

use serde::{Deserialize, Serialize};

use super::aes::AesKey;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BruteForceOutcome {
    Found { last_round_key: [u8; 16], master_key: [u8; 16], trials: u64 },
    Exhausted { trials: u64 },
}

/// Calls `visit` on every index vector with `Σ idx = total`, each entry
/// below its list length, in lexicographic order. Stops when `visit`
/// returns true.
fn for_each_with_sum(lens: &[usize], total: usize, idx: &mut Vec<usize>, visit: &mut impl FnMut(&[usize]) -> bool) -> bool {
    let pos = idx.len();
    if pos == lens.len() {
        return total == 0 && visit(idx);
    }
    let rest_max: usize = lens[pos + 1..].iter().map(|l| l - 1).sum();
    let lo = total.saturating_sub(rest_max);
    let hi = total.min(lens[pos] - 1);
    if lo > hi {
        return false;
    }
    for i in lo..=hi {
        idx.push(i);
        let stop = for_each_with_sum(lens, total - i, idx, visit);
        idx.pop();
        if stop {
            return true;
        }
    }
    false
}

/// Enumerates round-10 key candidates in non-decreasing total rank and
/// tests each against one known (plaintext, ciphertext) pair.
///
/// `candidates[i]` lists byte i's guesses best first; a single-element
/// list pins a known byte.
pub fn brute_force_finish(candidates: &[Vec<u8>], pt: [u8; 16], ct: [u8; 16], budget: u64) -> Result<BruteForceOutcome> {
    if candidates.len() != 16 || candidates.iter().any(|c| c.is_empty()) {
        return Err(Error::InvalidParam("need 16 non-empty candidate lists".into()));
    }
    let lens: Vec<usize> = candidates.iter().map(Vec::len).collect();
    let max_total: usize = lens.iter().map(|l| l - 1).sum();
    let mut trials = 0u64;
    let mut found = None;
    for total in 0..=max_total {
        let mut idx = Vec::with_capacity(16);
        let stop = for_each_with_sum(&lens, total, &mut idx, &mut |ix| {
            if trials >= budget {
                return true;
            }
            trials += 1;
            let mut k10 = [0u8; 16];
            for (i, &r) in ix.iter().enumerate() {
                k10[i] = candidates[i][r];
            }
            let key = AesKey::from_last_round_key(k10);
            if key.encrypt(pt) == ct {
                found = Some((k10, key.master()));
                return true;
            }
            false
        });
        if stop {
            break;
        }
    }
    Ok(match found {
        Some((last_round_key, master_key)) => BruteForceOutcome::Found { last_round_key, master_key, trials },
        None => BruteForceOutcome::Exhausted { trials },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (AesKey, [u8; 16], [u8; 16]) {
        let key = AesKey::new(*b"occupancy-leaks!");
        let pt = *b"sixteen byte msg";
        let ct = key.encrypt(pt);
        (key, pt, ct)
    }

    fn pinned(k10: [u8; 16]) -> Vec<Vec<u8>> {
        k10.iter().map(|&b| vec![b]).collect()
    }

    #[test]
    fn rank_one_everywhere_takes_one_trial() {
        let (key, pt, ct) = setup();
        match brute_force_finish(&pinned(key.last_round_key()), pt, ct, 10).unwrap() {
            BruteForceOutcome::Found { master_key, trials, .. } => {
                assert_eq!(trials, 1);
                assert_eq!(master_key, key.master());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn exhausts_budget() {
        let (key, pt, ct) = setup();
        let mut c = pinned(key.last_round_key());
        c[0] = vec![key.last_round_key()[0] ^ 1, key.last_round_key()[0] ^ 2, key.last_round_key()[0]];
        assert_eq!(brute_force_finish(&c, pt, ct, 2).unwrap(), BruteForceOutcome::Exhausted { trials: 2 });
    }

    #[test]
    fn order_is_by_total_rank() {
        let mut seen = Vec::new();
        let lens = [3usize, 3];
        for t in 0..=4 {
            for_each_with_sum(&lens, t, &mut Vec::new(), &mut |ix| {
                seen.push(ix.to_vec());
                false
            });
        }
        let sums: Vec<usize> = seen.iter().map(|v| v.iter().sum()).collect();
        assert!(sums.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(seen.len(), 9);
    }
}

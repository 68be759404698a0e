use serde::{Deserialize, Serialize};

use super::profile::{GuessProfiles, ProfileTable};
use crate::stats::pearson;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    /// 1-based rank of the true byte per position.
    pub ranks: Vec<u16>,
    pub ge: f64,
}

/// Pearson correlation over labels present on both sides; `None` with fewer
/// than two shared labels or a constant side.
pub fn masked_correlation(a: &[Option<f64>], b: &[Option<f64>]) -> Option<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = a
        .iter()
        .zip(b)
        .filter_map(|(x, y)| Some(((*x)?, (*y)?)))
        .unzip();
    if xs.len() < 2 {
        return None;
    }
    pearson(&xs, &ys).ok().flatten()
}

/// Guesses at `position` ordered by descending correlation with the known
/// profile; undefined correlations sort last, ties by guess value.
pub fn ranked_guesses(guesses: &GuessProfiles, known: &ProfileTable, position: usize) -> Vec<(u8, Option<f64>)> {
    let k = known.means();
    let mut scored: Vec<(u8, Option<f64>)> = (0..=255u8)
        .map(|j| (j, masked_correlation(&guesses.means(position, j), &k)))
        .collect();
    scored.sort_by(|a, b| match (a.1, b.1) {
        (Some(x), Some(y)) => y.total_cmp(&x).then(a.0.cmp(&b.0)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.0.cmp(&b.0),
    });
    scored
}

pub fn guessing_entropy(ranks: &[u16]) -> f64 {
    ranks.iter().map(|&r| (r as f64).log2()).sum()
}

pub fn rank_and_ge(guesses: &GuessProfiles, known: &[ProfileTable], true_key: &[u8; 16]) -> RankReport {
    let ranks: Vec<u16> = (0..16)
        .map(|i| {
            let order = ranked_guesses(guesses, &known[i], i);
            match order.iter().position(|&(j, _)| j == true_key[i]) {
                Some(p) if order[p].1.is_some() => p as u16 + 1,
                _ => 256,
            }
        })
        .collect();
    let ge = guessing_entropy(&ranks);
    RankReport { ranks, ge }
}

/// Candidate lists per position, best first.
pub fn candidate_lists(guesses: &GuessProfiles, known: &[ProfileTable]) -> Vec<Vec<u8>> {
    (0..16)
        .map(|i| ranked_guesses(guesses, &known[i], i).into_iter().map(|(j, _)| j).collect())
        .collect()
}

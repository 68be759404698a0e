//! Statistics helpers shared by the experiments.

use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; 0 for fewer than two samples.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn std_dev(xs: &[f64]) -> f64 {
    variance(xs).sqrt()
}

/// Two-tailed Welch t-test p-value with Welch–Satterthwaite degrees of
/// freedom.
///
/// When both samples have zero variance the test degenerates: p is 1 if
/// the means are equal and 0 otherwise.
pub fn welch_t(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InvalidParam(format!(
            "welch_t needs at least 2 samples per group, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (ma, mb) = (mean(a), mean(b));
    let (va, vb) = (variance(a) / a.len() as f64, variance(b) / b.len() as f64);
    let se2 = va + vb;
    if se2 == 0.0 {
        return Ok(if ma == mb { 1.0 } else { 0.0 });
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2
        / (va * va / (a.len() - 1) as f64 + vb * vb / (b.len() - 1) as f64);
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    Ok((2.0 * dist.cdf(-t.abs())).clamp(0.0, 1.0))
}

/// Pearson correlation. Returns `None` when either side is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    if x.len() != y.len() {
        return Err(Error::InvalidParam(format!(
            "pearson: length mismatch {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::InvalidParam("pearson needs at least 2 points".into()));
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    Ok(Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)))
}

/// Chi-square goodness of fit against the uniform distribution over the
/// bins; returns the upper-tail p-value.
pub fn chi_square_uniform(counts: &[u64]) -> Result<f64> {
    if counts.len() < 2 {
        return Err(Error::InvalidParam("chi-square needs at least 2 bins".into()));
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::InvalidParam("chi-square over empty histogram".into()));
    }
    let expected = total as f64 / counts.len() as f64;
    let stat: f64 = counts
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum();
    let dist = ChiSquared::new((counts.len() - 1) as f64).expect("positive dof");
    Ok(dist.sf(stat))
}

/// Chi-square goodness of fit against bin probabilities `probs` (need not
/// be normalized). Zero-probability bins are dropped; a count in one gives
/// p = 0.
pub fn chi_square_gof(counts: &[u64], probs: &[f64]) -> Result<f64> {
    if counts.len() != probs.len() {
        return Err(Error::InvalidParam(format!(
            "chi-square: {} counts vs {} probabilities",
            counts.len(),
            probs.len()
        )));
    }
    let total: u64 = counts.iter().sum();
    let mass: f64 = probs.iter().sum();
    if total == 0 || mass <= 0.0 || probs.iter().any(|&p| p < 0.0) {
        return Err(Error::InvalidParam("chi-square needs counts and positive mass".into()));
    }
    let mut stat = 0.0;
    let mut bins = 0usize;
    for (&c, &p) in counts.iter().zip(probs) {
        if p == 0.0 {
            if c > 0 {
                return Ok(0.0);
            }
            continue;
        }
        let e = total as f64 * p / mass;
        let d = c as f64 - e;
        stat += d * d / e;
        bins += 1;
    }
    if bins < 2 {
        return Err(Error::InvalidParam("chi-square needs at least 2 bins".into()));
    }
    Ok(ChiSquared::new((bins - 1) as f64).expect("positive dof").sf(stat))
}

/// Chi-square test of independence on a contingency table (rows × cols);
/// returns the upper-tail p-value. Empty rows and columns are dropped.
pub fn chi_square_independence(table: &[Vec<u64>]) -> Result<f64> {
    let rows: Vec<&Vec<u64>> = table.iter().filter(|r| r.iter().sum::<u64>() > 0).collect();
    if rows.len() < 2 {
        return Err(Error::InvalidParam("independence test needs 2 non-empty rows".into()));
    }
    let ncols = rows[0].len();
    let col_tot: Vec<u64> = (0..ncols).map(|c| rows.iter().map(|r| r[c]).sum()).collect();
    let cols: Vec<usize> = (0..ncols).filter(|&c| col_tot[c] > 0).collect();
    if cols.len() < 2 {
        return Err(Error::InvalidParam("independence test needs 2 non-empty columns".into()));
    }
    let total: u64 = col_tot.iter().sum();
    let mut stat = 0.0;
    for r in &rows {
        let rt: u64 = r.iter().sum();
        for &c in &cols {
            let e = rt as f64 * col_tot[c] as f64 / total as f64;
            let d = r[c] as f64 - e;
            stat += d * d / e;
        }
    }
    let dof = ((rows.len() - 1) * (cols.len() - 1)) as f64;
    Ok(ChiSquared::new(dof).expect("positive dof").sf(stat))
}

/// One-sample Kolmogorov–Smirnov statistic against U(0,1).
pub fn ks_uniform_statistic(samples: &[f64]) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let lo = x - i as f64 / n;
            let hi = (i + 1) as f64 / n - x;
            lo.max(hi)
        })
        .fold(0.0, f64::max)
}

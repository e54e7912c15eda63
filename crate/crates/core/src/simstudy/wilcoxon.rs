use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Largest number of nonzero differences handled by exact enumeration.
pub const EXACT_LIMIT: usize = 25;

/// Two-sided p-value of the Wilcoxon signed-rank test on the paired
/// differences `x - y`.
///
/// Zero differences are dropped and tied magnitudes get mid-ranks. Up to
/// [`EXACT_LIMIT`] nonzero differences the null distribution of the
/// positive-rank sum is enumerated exactly (conditional on the tie
/// pattern); beyond that a tie-corrected normal approximation with
/// continuity correction is used.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "paired samples differ in length ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 5 {
        return Err(Error::InvalidArgument("signed-rank test needs at least 5 pairs".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite value in paired samples".into()));
    }
    let diffs: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|d| *d != 0.0).collect();
    if diffs.is_empty() {
        return Ok(1.0);
    }
    let doubled = doubled_midranks(&diffs);
    let w2: u64 = diffs
        .iter()
        .zip(&doubled)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| *r)
        .sum();
    let n = diffs.len();
    let p = if n <= EXACT_LIMIT {
        exact_p(&doubled, w2)
    } else {
        normal_p(&doubled, w2, n)
    };
    Ok(p.min(1.0))
}

/// Twice the mid-ranks of `|d|`, which are always integers.
fn doubled_midranks(diffs: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..diffs.len()).collect();
    order.sort_by(|&i, &j| diffs[i].abs().total_cmp(&diffs[j].abs()));
    let mut ranks = vec![0u64; diffs.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && diffs[order[end]].abs() == diffs[order[start]].abs() {
            end += 1;
        }
        // ranks start+1..=end share (start + 1 + end) / 2
        let twice_mid = (start + 1 + end) as u64;
        for &k in &order[start..end] {
            ranks[k] = twice_mid;
        }
        start = end;
    }
    ranks
}

fn exact_p(doubled: &[u64], w2: u64) -> f64 {
    let total: u64 = doubled.iter().sum();
    let mut ways = vec![0f64; total as usize + 1];
    ways[0] = 1.0;
    let mut reach = 0usize;
    for &r in doubled {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if ways[s] != 0.0 {
                ways[s + r] += ways[s];
            }
        }
        reach += r;
    }
    let all = 2f64.powi(doubled.len() as i32);
    let lower: f64 = ways[..=w2 as usize].iter().sum::<f64>() / all;
    let upper: f64 = ways[w2 as usize..].iter().sum::<f64>() / all;
    2.0 * lower.min(upper)
}

fn normal_p(doubled: &[u64], w2: u64, n: usize) -> f64 {
    let nf = n as f64;
    let w = w2 as f64 / 2.0;
    let mean = nf * (nf + 1.0) / 4.0;
    let mut ties = 0.0;
    let mut sorted = doubled.to_vec();
    sorted.sort_unstable();
    for group in sorted.chunk_by(|a, b| a == b) {
        let t = group.len() as f64;
        ties += t * t * t - t;
    }
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - ties / 48.0;
    if var <= 0.0 {
        return 1.0;
    }
    let dev = w - mean;
    let z = (dev.abs() - 0.5).max(0.0) / var.sqrt();
    let std = Normal::standard();
    2.0 * (1.0 - std.cdf(z))
}

//! Agreement and rank statistics.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::{Error, Result};

/// Bland-Altman summary of paired measurements `a - b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgreementStats {
    pub n: usize,
    /// Mean difference.
    pub bias: f64,
    /// Sample standard deviation of the differences.
    pub sd: f64,
    pub lower: f64,
    pub upper: f64,
    /// Pearson correlation between the two raw series.
    pub r: f64,
    /// Set when either series is constant and `r` was defined as 1.
    pub r_degenerate: bool,
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample standard deviation (n - 1 denominator).
pub fn sample_sd(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64).sqrt()
}

fn check_pairs(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::InvalidStatistics(format!(
            "series lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::InvalidStatistics("need at least two pairs".into()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::InvalidStatistics("non-finite value".into()));
    }
    Ok(())
}

/// Pearson correlation, `None` when either series has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let (ma, mb) = (mean(a), mean(b));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Midranks (1-based) of `x`; tied values share the mean of their ranks.
pub fn midranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&i, &j| x[i].total_cmp(&x[j]));
    let mut ranks = vec![0.0; x.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && x[order[end]] == x[order[start]] {
            end += 1;
        }
        let r = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = r;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation, `None` for a constant series.
pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    pearson(&midranks(a), &midranks(b))
}

/// Bland-Altman agreement of `a` against `b`.
pub fn bland_altman(a: &[f64], b: &[f64]) -> Result<AgreementStats> {
    check_pairs(a, b)?;
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let bias = mean(&d);
    let sd = sample_sd(&d);
    let (r, r_degenerate) = match pearson(a, b) {
        Some(r) => (r, false),
        None => (1.0, true),
    };
    Ok(AgreementStats {
        n: d.len(),
        bias,
        sd,
        lower: bias - 1.96 * sd,
        upper: bias + 1.96 * sd,
        r,
        r_degenerate,
    })
}

/// Sample size bound below which the rank-sum null distribution is
/// enumerated exactly.
pub const EXACT_MAX_N: usize = 10;

/// Two-sided Wilcoxon rank-sum p-value for `x` against `y`.
///
/// When the smaller sample has at most [`EXACT_MAX_N`] values the p-value
/// comes from the exact permutation distribution of the midrank sum, which
/// stays exact in the presence of ties. Larger samples use the normal
/// approximation with tie and continuity corrections.
pub fn wilcoxon_ranksum(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::InvalidStatistics("empty sample".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidStatistics("non-finite value".into()));
    }
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let ranks = midranks(&pooled);
    if x.len().min(y.len()) <= EXACT_MAX_N {
        Ok(exact_p(&ranks, x.len()))
    } else {
        Ok(normal_p(&ranks, x.len()))
    }
}

/// Exact two-sided p: twice the smaller tail of the rank-sum distribution
/// over all `C(N, nx)` equally likely assignments, capped at 1.
fn exact_p(ranks: &[f64], nx: usize) -> f64 {
    // Doubled midranks are integers.
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let observed: usize = doubled[..nx].iter().sum();
    let total: usize = doubled.iter().sum();
    // counts[k][s]: subsets of size k with doubled-rank sum s.
    let mut counts = vec![vec![0u128; total + 1]; nx + 1];
    counts[0][0] = 1;
    for &r in &doubled {
        for k in (1..=nx).rev() {
            let (lower, upper) = counts.split_at_mut(k);
            let (src, dst) = (&lower[k - 1], &mut upper[0]);
            for s in (r..=total).rev() {
                dst[s] += src[s - r];
            }
        }
    }
    let dist = &counts[nx];
    let all: u128 = dist.iter().sum();
    let below: u128 = dist[..=observed].iter().sum();
    let above: u128 = dist[observed..].iter().sum();
    let p = 2.0 * below.min(above) as f64 / all as f64;
    p.min(1.0)
}

fn normal_p(ranks: &[f64], nx: usize) -> f64 {
    let n = ranks.len() as f64;
    let (nxf, nyf) = (nx as f64, n - nx as f64);
    let w: f64 = ranks[..nx].iter().sum();
    let mu = nxf * (n + 1.0) / 2.0;
    // Tie correction from the multiplicity of each distinct midrank.
    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut ties = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        ties += t * t * t - t;
        i = j;
    }
    let var = nxf * nyf / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
    if var <= 0.0 {
        return 1.0;
    }
    let dev = (w - mu).abs();
    let z = (dev - 0.5).max(0.0) / var.sqrt();
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    (2.0 * std_normal.sf(z)).min(1.0)
}

/// Intraclass correlation of paired repeat measurements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Icc {
    pub value: f64,
    /// Set when all values are equal and the value was defined as 1.
    pub degenerate: bool,
}

/// ICC(2,1): two-way random effects, absolute agreement, single measures.
pub fn icc(pairs: &[(f64, f64)]) -> Result<Icc> {
    let n = pairs.len();
    if n < 2 {
        return Err(Error::InvalidStatistics("need at least two pairs".into()));
    }
    if pairs.iter().any(|(a, b)| !a.is_finite() || !b.is_finite()) {
        return Err(Error::InvalidStatistics("non-finite value".into()));
    }
    let k = 2.0;
    let nf = n as f64;
    let grand = pairs.iter().map(|(a, b)| a + b).sum::<f64>() / (k * nf);
    let rows: Vec<f64> = pairs.iter().map(|(a, b)| (a + b) / k).collect();
    let cols = [
        pairs.iter().map(|p| p.0).sum::<f64>() / nf,
        pairs.iter().map(|p| p.1).sum::<f64>() / nf,
    ];
    let ss_total: f64 = pairs
        .iter()
        .map(|(a, b)| (a - grand).powi(2) + (b - grand).powi(2))
        .sum();
    let ss_rows = k * rows.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let ss_cols = nf * cols.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let ss_err = (ss_total - ss_rows - ss_cols).max(0.0);
    if ss_total == 0.0 {
        return Ok(Icc {
            value: 1.0,
            degenerate: true,
        });
    }
    let msr = ss_rows / (nf - 1.0);
    let msc = ss_cols / (k - 1.0);
    let mse = ss_err / ((nf - 1.0) * (k - 1.0));
    let denom = msr + (k - 1.0) * mse + k * (msc - mse) / nf;
    Ok(Icc {
        value: (msr - mse) / denom,
        degenerate: false,
    })
}

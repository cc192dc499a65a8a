//! Nonparametric comparison statistics: Vargha-Delaney A12, Mann-Whitney U, Spearman rho.

use crate::error::{Error, Result};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};
use std::cmp::Ordering;
use std::fmt;

/// Below this per-side size the exact null distribution is used.
pub const EXACT_BELOW: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Magnitude {
    Negligible,
    Small,
    Medium,
    Large,
}

impl fmt::Display for Magnitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

fn check_sample(x: &[f64], name: &str) -> Result<()> {
    if x.is_empty() {
        return Err(Error::Stats(format!("sample {name} is empty")));
    }
    if x.iter().any(|v| v.is_nan()) {
        return Err(Error::Stats(format!("sample {name} contains NaN")));
    }
    Ok(())
}

/// Pairwise (greater, equal) counts of `x` against `y`.
fn dominance(x: &[f64], y: &[f64]) -> (u64, u64) {
    let (mut gt, mut eq) = (0u64, 0u64);
    for a in x {
        for b in y {
            match a.total_cmp(b) {
                Ordering::Greater => gt += 1,
                Ordering::Equal => eq += 1,
                Ordering::Less => {}
            }
        }
    }
    (gt, eq)
}

/// Probability that a draw from `x` exceeds one from `y`, ties counted half.
pub fn a12(x: &[f64], y: &[f64]) -> Result<f64> {
    check_sample(x, "x")?;
    check_sample(y, "y")?;
    let (gt, eq) = dominance(x, y);
    Ok((2 * gt + eq) as f64 / (2 * x.len() * y.len()) as f64)
}

pub fn magnitude(a12: f64) -> Result<Magnitude> {
    if !(0.0..=1.0).contains(&a12) {
        return Err(Error::Stats(format!("A12 {a12} outside [0, 1]")));
    }
    let m = if a12 > 0.444 && a12 < 0.556 {
        Magnitude::Negligible
    } else if (0.556..0.638).contains(&a12) || (a12 > 0.362 && a12 <= 0.444) {
        Magnitude::Small
    } else if (0.638..0.714).contains(&a12) || (a12 > 0.286 && a12 <= 0.362) {
        Magnitude::Medium
    } else {
        Magnitude::Large
    };
    Ok(m)
}

/// Doubled midranks (1-based), so tied ranks stay integral.
pub fn doubled_midranks(v: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0u64; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]].total_cmp(&v[order[i]]) == Ordering::Equal {
            j += 1;
        }
        // positions i..=j share rank (i+1 + j+1)/2
        let twice = (i + 1 + j + 1) as u64;
        for &k in &order[i..=j] {
            ranks[k] = twice;
        }
        i = j + 1;
    }
    ranks
}

fn tie_sizes(v: &[f64]) -> Vec<u64> {
    let mut s: Vec<f64> = v.to_vec();
    s.sort_by(f64::total_cmp);
    let mut out = Vec::new();
    let mut i = 0;
    while i < s.len() {
        let mut j = i;
        while j + 1 < s.len() && s[j + 1] == s[i] {
            j += 1;
        }
        out.push((j - i + 1) as u64);
        i = j + 1;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MannWhitney {
    /// U for the first sample.
    pub u: f64,
    /// Two-sided p from the method chosen by sample size.
    pub p: f64,
    /// Exact permutation p, when the null distribution was enumerable.
    pub p_exact: Option<f64>,
    /// Normal approximation with tie-corrected variance and continuity correction.
    pub p_normal: f64,
}

/// Exact two-sided p by counting rank-sum subsets as extreme as observed.
fn exact_p(ranks: &[u64], n: usize, observed: u64) -> Option<f64> {
    let total_n = ranks.len();
    let max_sum: u64 = ranks.iter().sum();
    if (max_sum as usize + 1).saturating_mul(n + 1) > 50_000_000 {
        return None;
    }
    // counts[k][s]: subsets of size k with doubled-rank sum s
    let width = max_sum as usize + 1;
    let mut counts = vec![vec![0u128; width]; n + 1];
    counts[0][0] = 1;
    for &r in ranks {
        let r = r as usize;
        for k in (1..=n).rev() {
            let (lo, hi) = counts.split_at_mut(k);
            let prev = &lo[k - 1];
            let cur = &mut hi[0];
            for s in (r..width).rev() {
                if prev[s - r] != 0 {
                    cur[s] += prev[s - r];
                }
            }
        }
    }
    let centre2 = (n * (total_n + 1)) as i128;
    let dev = |s: i128| (s - centre2).abs();
    let obs_dev = dev(observed as i128);
    let mut extreme = 0u128;
    let mut total = 0u128;
    for (s, &c) in counts[n].iter().enumerate() {
        total += c;
        if dev(s as i128) >= obs_dev {
            extreme += c;
        }
    }
    Some(extreme as f64 / total as f64)
}

pub fn mann_whitney_u(x: &[f64], y: &[f64]) -> Result<MannWhitney> {
    check_sample(x, "x")?;
    check_sample(y, "y")?;
    let (n, m) = (x.len(), y.len());
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let ranks = doubled_midranks(&pooled);
    let rx2: u64 = ranks[..n].iter().sum();
    let u = (rx2 as f64 - (n * (n + 1)) as f64) / 2.0;

    let big_n = (n + m) as f64;
    let ties: f64 = tie_sizes(&pooled)
        .iter()
        .map(|&t| (t * t * t - t) as f64)
        .sum();
    let nm = (n * m) as f64;
    let var = nm / 12.0 * ((big_n + 1.0) - ties / (big_n * (big_n - 1.0)).max(1.0));
    let p_normal = if var <= 0.0 {
        1.0
    } else {
        let z = ((u - nm / 2.0).abs() - 0.5).max(0.0) / var.sqrt();
        let std = Normal::standard();
        (2.0 * (1.0 - std.cdf(z))).min(1.0)
    };
    let p_exact = exact_p(&ranks, n, rx2);
    let p = match p_exact {
        Some(pe) if n.min(m) < EXACT_BELOW => pe,
        _ => p_normal,
    };
    Ok(MannWhitney {
        u,
        p,
        p_exact,
        p_normal,
    })
}

/// Pearson correlation of integer rank vectors, from exact integer sums.
pub fn rank_correlation(rx: &[u64], ry: &[u64]) -> Option<f64> {
    let n = rx.len() as i128;
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0i128, 0i128, 0i128, 0i128, 0i128);
    for (&a, &b) in rx.iter().zip(ry) {
        let (a, b) = (a as i128, b as i128);
        sx += a;
        sy += b;
        sxx += a * a;
        syy += b * b;
        sxy += a * b;
    }
    let num = n * sxy - sx * sy;
    let dx = n * sxx - sx * sx;
    let dy = n * syy - sy * sy;
    if dx == 0 || dy == 0 {
        return None;
    }
    Some(num as f64 / ((dx as f64) * (dy as f64)).sqrt())
}

/// Spearman's rho with a two-sided t-approximation p-value.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() {
        return Err(Error::Stats(format!("length mismatch {} vs {}", x.len(), y.len())));
    }
    if x.len() < 3 {
        return Err(Error::Stats("need at least 3 pairs".into()));
    }
    check_sample(x, "x")?;
    check_sample(y, "y")?;
    let rho = rank_correlation(&doubled_midranks(x), &doubled_midranks(y))
        .ok_or_else(|| Error::Stats("constant input has no rank correlation".into()))?;
    let rho = rho.clamp(-1.0, 1.0);
    let df = (x.len() - 2) as f64;
    let p = if rho.abs() >= 1.0 {
        0.0
    } else {
        let t = rho * (df / (1.0 - rho * rho)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
        (2.0 * (1.0 - dist.cdf(t.abs()))).min(1.0)
    };
    Ok((rho, p))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonResult {
    pub a12: f64,
    pub p_value: f64,
    pub magnitude: Magnitude,
    pub u_statistic: f64,
}

pub fn compare(x: &[f64], y: &[f64]) -> Result<ComparisonResult> {
    let a = a12(x, y)?;
    let mw = mann_whitney_u(x, y)?;
    Ok(ComparisonResult {
        a12: a,
        p_value: mw.p,
        magnitude: magnitude(a)?,
        u_statistic: mw.u,
    })
}

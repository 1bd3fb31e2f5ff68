//! Two-sided Mann-Whitney U test.
//!
//! Ranks are computed in doubled integer units so midranks stay exact. Small
//! samples get an exact p-value: a counting recursion without ties, full
//! enumeration of group assignments with ties. Larger samples use the normal
//! approximation with tie-corrected variance and a continuity correction.

use serde::{Deserialize, Serialize};

/// Exact p-values are used when both samples are smaller than this.
pub const EXACT_BELOW: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// `min(U_a, U_b)`.
    pub u: f64,
    pub u_a: f64,
    pub p: f64,
    pub exact: bool,
}

/// Doubled midranks of the pooled sample, in input order (`a` then `b`).
fn doubled_midranks(pooled: &[f64]) -> (Vec<i64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&i, &j| pooled[i].total_cmp(&pooled[j]));
    let mut ranks = vec![0i64; pooled.len()];
    let mut ties = Vec::new();
    let mut k = 0;
    while k < order.len() {
        let mut e = k + 1;
        while e < order.len() && pooled[order[e]] == pooled[order[k]] {
            e += 1;
        }
        // ranks k+1..=e average to (k+1+e)/2
        let r2 = (k + 1 + e) as i64;
        for &i in &order[k..e] {
            ranks[i] = r2;
        }
        ties.push(e - k);
        k = e;
    }
    (ranks, ties)
}

pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> MannWhitney {
    assert!(!a.is_empty() && !b.is_empty(), "both samples must be non-empty");
    assert!(a.iter().chain(b).all(|v| !v.is_nan()), "samples must not contain NaN");
    let (n, m) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = doubled_midranks(&pooled);
    let ra2: i64 = ranks[..n].iter().sum();
    // doubled U_a
    let ua2 = ra2 - (n * (n + 1)) as i64;
    let nm2 = (2 * n * m) as i64;
    let u_a = ua2 as f64 / 2.0;
    let u = (ua2.min(nm2 - ua2)) as f64 / 2.0;

    if n < EXACT_BELOW && m < EXACT_BELOW {
        let (le, ge, total) = if ties.iter().all(|&t| t == 1) {
            exact_tail_no_ties(n, m, (ua2 / 2) as usize)
        } else {
            exact_tail_enumerated(&ranks, n, ua2)
        };
        let p = (2.0 * le.min(ge) as f64 / total as f64).min(1.0);
        return MannWhitney { u, u_a, p, exact: true };
    }

    let big_n = (n + m) as f64;
    let tie_term: f64 = ties.iter().map(|&t| (t as f64).powi(3) - t as f64).sum::<f64>() / (big_n * (big_n - 1.0));
    let var = (n * m) as f64 / 12.0 * ((big_n + 1.0) - tie_term);
    let p = if var <= 0.0 {
        1.0
    } else {
        let z = (((u_a - (n * m) as f64 / 2.0).abs() - 0.5).max(0.0)) / var.sqrt();
        libm::erfc(z / std::f64::consts::SQRT_2).min(1.0)
    };
    MannWhitney { u, u_a, p, exact: false }
}

/// Counts of arrangements with `U_a ≤ u` and `U_a ≥ u`, and the total, for untied data.
fn exact_tail_no_ties(n: usize, m: usize, u: usize) -> (u128, u128, u128) {
    // f[i][j][k]: arrangements of i a-values and j b-values with U = k
    let max_u = n * m;
    let mut f = vec![vec![vec![0u128; max_u + 1]; m + 1]; n + 1];
    for row in f.iter_mut() {
        row[0][0] = 1;
    }
    for j in 0..=m {
        f[0][j][0] = 1;
    }
    for i in 1..=n {
        for j in 1..=m {
            for k in 0..=i * j {
                // the largest value is an a (it beats all j b-values) or a b
                let from_a = if k >= j { f[i - 1][j][k - j] } else { 0 };
                f[i][j][k] = from_a + f[i][j - 1][k];
            }
        }
    }
    let dist = &f[n][m];
    let total: u128 = dist.iter().sum();
    let le: u128 = dist[..=u].iter().sum();
    let ge: u128 = dist[u..].iter().sum();
    (le, ge, total)
}

/// Tail counts by enumerating every choice of `n` pooled positions as group a.
fn exact_tail_enumerated(ranks: &[i64], n: usize, ua2: i64) -> (u128, u128, u128) {
    let total_n = ranks.len();
    let offset = (n * (n + 1)) as i64;
    let (mut le, mut ge, mut total) = (0u128, 0u128, 0u128);
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        let s: i64 = idx.iter().map(|&i| ranks[i]).sum::<i64>() - offset;
        total += 1;
        if s <= ua2 {
            le += 1;
        }
        if s >= ua2 {
            ge += 1;
        }
        // next combination in lexicographic order
        let mut k = n;
        while k > 0 && idx[k - 1] == total_n - n + k - 1 {
            k -= 1;
        }
        if k == 0 {
            return (le, ge, total);
        }
        k -= 1;
        idx[k] += 1;
        for t in k + 1..n {
            idx[t] = idx[t - 1] + 1;
        }
    }
}

//! Stirling numbers of the second kind, Bell numbers, and their
//! r-generalizations, exact and in log space.
//!
//! r-Stirling numbers use Broder's convention: `r_stirling2(n, k, r)` counts
//! partitions of `n` labeled elements into `k` non-empty blocks such that the
//! first `r` elements sit in distinct blocks. With that convention
//! `r_stirling2(n, k, 1) == stirling2(n, k)` and `r_stirling2(n, k, 0) ==
//! stirling2(n, k)`. The r-Bell number `r_bell(n, r)` counts partitions of
//! `n + r` elements whose first `r` elements are in distinct blocks, so
//! `r_bell(n, 0) == bell(n)`.
//!
//! Exact values are tabulated up to `n = 64`; log-space values up to `n = 512`.

use std::fmt;
use std::sync::OnceLock;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::math::log_sum_exp;

/// Largest `n` accepted by the exact routines.
pub const MAX_EXACT_N: usize = 64;
/// Largest `n` accepted by the log-space routines.
pub const MAX_LOG_N: usize = 512;

/// An exact non-negative count.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BigCount(pub BigUint);

impl BigCount {
    pub fn zero() -> Self {
        BigCount(BigUint::zero())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::INFINITY)
    }

    /// Natural logarithm; `-inf` for zero.
    pub fn ln(&self) -> f64 {
        if self.0.is_zero() {
            return f64::NEG_INFINITY;
        }
        let bits = self.0.bits();
        if bits <= 1000 {
            return self.to_f64().ln();
        }
        let shift = bits - 1000;
        let top = (&self.0 >> shift).to_f64().unwrap_or(f64::INFINITY);
        top.ln() + shift as f64 * std::f64::consts::LN_2
    }

    pub fn to_log(&self) -> LogCount {
        LogCount::from_ln(self.ln())
    }
}

impl From<u64> for BigCount {
    fn from(v: u64) -> Self {
        BigCount(BigUint::from(v))
    }
}

impl PartialEq<u64> for BigCount {
    fn eq(&self, other: &u64) -> bool {
        self.0 == BigUint::from(*other)
    }
}

impl fmt::Display for BigCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Logarithm of a count, with an explicit zero flag.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogCount {
    pub log_value: f64,
    pub is_zero: bool,
}

impl LogCount {
    pub const ZERO: LogCount = LogCount {
        log_value: f64::NEG_INFINITY,
        is_zero: true,
    };

    pub fn from_ln(log_value: f64) -> Self {
        if log_value == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            LogCount {
                log_value,
                is_zero: false,
            }
        }
    }

    /// The log value, `-inf` when the count is zero.
    pub fn ln(&self) -> f64 {
        if self.is_zero {
            f64::NEG_INFINITY
        } else {
            self.log_value
        }
    }
}

fn check_exact(n: usize) -> Result<()> {
    if n > MAX_EXACT_N {
        return Err(Error::domain(format!(
            "n = {n} exceeds the exact limit {MAX_EXACT_N}"
        )));
    }
    Ok(())
}

fn check_log(n: usize) -> Result<()> {
    if n > MAX_LOG_N {
        return Err(Error::domain(format!(
            "n = {n} exceeds the log-space limit {MAX_LOG_N}"
        )));
    }
    Ok(())
}

fn stirling_table() -> &'static Vec<Vec<BigUint>> {
    static TABLE: OnceLock<Vec<Vec<BigUint>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut rows: Vec<Vec<BigUint>> = Vec::with_capacity(MAX_EXACT_N + 1);
        rows.push(vec![BigUint::one()]);
        for n in 1..=MAX_EXACT_N {
            let prev = &rows[n - 1];
            let mut row = vec![BigUint::zero(); n + 1];
            for k in 1..=n {
                let mut v = if k < n {
                    &prev[k] * BigUint::from(k)
                } else {
                    BigUint::zero()
                };
                v += &prev[k - 1];
                row[k] = v;
            }
            rows.push(row);
        }
        rows
    })
}

fn binomial_table() -> &'static Vec<Vec<BigUint>> {
    static TABLE: OnceLock<Vec<Vec<BigUint>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut rows: Vec<Vec<BigUint>> = Vec::with_capacity(MAX_EXACT_N + 1);
        for n in 0..=MAX_EXACT_N {
            let mut row = vec![BigUint::one(); n + 1];
            for k in 1..n {
                row[k] = &rows[n - 1][k - 1] + &rows[n - 1][k];
            }
            rows.push(row);
        }
        rows
    })
}

fn log_stirling_table() -> &'static Vec<Vec<f64>> {
    static TABLE: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(MAX_LOG_N + 1);
        rows.push(vec![0.0]);
        for n in 1..=MAX_LOG_N {
            let prev = &rows[n - 1];
            let mut row = vec![f64::NEG_INFINITY; n + 1];
            for k in 1..=n {
                let stay = if k < n {
                    prev[k] + (k as f64).ln()
                } else {
                    f64::NEG_INFINITY
                };
                row[k] = crate::math::log_add_exp(stay, prev[k - 1]);
            }
            rows.push(row);
        }
        rows
    })
}

fn ln_factorial_table() -> &'static Vec<f64> {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = vec![0.0; MAX_LOG_N + 1];
        for i in 1..=MAX_LOG_N {
            t[i] = t[i - 1] + (i as f64).ln();
        }
        t
    })
}

fn ln_choose(n: usize, k: usize) -> f64 {
    let t = ln_factorial_table();
    t[n] - t[k] - t[n - k]
}

/// Binomial coefficient `C(n, k)` for `n ≤ 64`.
pub fn binomial(n: usize, k: usize) -> Result<BigCount> {
    check_exact(n)?;
    if k > n {
        return Ok(BigCount::zero());
    }
    Ok(BigCount(binomial_table()[n][k].clone()))
}

/// Number of partitions of `n` elements into exactly `k` non-empty blocks.
pub fn stirling2(n: usize, k: usize) -> Result<BigCount> {
    check_exact(n)?;
    if k > n {
        return Err(Error::domain(format!("stirling2 requires k ≤ n, got k = {k}, n = {n}")));
    }
    Ok(BigCount(stirling_table()[n][k].clone()))
}

/// Total number of partitions of `n` elements.
pub fn bell(n: usize) -> Result<BigCount> {
    check_exact(n)?;
    let sum = stirling_table()[n]
        .iter()
        .fold(BigUint::zero(), |acc, v| acc + v);
    Ok(BigCount(sum))
}

fn check_r(n: usize, r: usize) -> Result<()> {
    if r > n {
        return Err(Error::domain(format!(
            "r-Stirling numbers require r ≤ n, got r = {r}, n = {n}"
        )));
    }
    Ok(())
}

/// r-Stirling number by the explicit sum
/// `Σ_i C(n−r, i) · S(i, k−r) · r^(n−r−i)`.
pub fn r_stirling2(n: usize, k: usize, r: usize) -> Result<BigCount> {
    check_exact(n)?;
    check_r(n, r)?;
    if k < r || k > n {
        return Ok(BigCount::zero());
    }
    let free = n - r;
    let target = k - r;
    let stirling = stirling_table();
    let binom = binomial_table();
    let rr = BigUint::from(r);
    let mut total = BigUint::zero();
    for i in target..=free {
        let s = &stirling[i][target];
        if s.is_zero() {
            continue;
        }
        let exp = (free - i) as u32;
        let power = if r == 0 {
            if exp == 0 {
                BigUint::one()
            } else {
                continue;
            }
        } else {
            rr.pow(exp)
        };
        total += &binom[free][i] * s * power;
    }
    Ok(BigCount(total))
}

/// r-Stirling number by Broder's recurrence
/// `R(n, k) = k·R(n−1, k) + R(n−1, k−1)` for `n > r`, with `R(r, k) = [k = r]`.
pub fn r_stirling2_recurrence(n: usize, k: usize, r: usize) -> Result<BigCount> {
    check_exact(n)?;
    check_r(n, r)?;
    if k > n {
        return Ok(BigCount::zero());
    }
    let mut row = vec![BigUint::zero(); n + 1];
    row[r] = BigUint::one();
    for m in (r + 1)..=n {
        let mut next = vec![BigUint::zero(); n + 1];
        for j in r..=m {
            let mut v = &row[j] * BigUint::from(j);
            if j > 0 {
                v += &row[j - 1];
            }
            next[j] = v;
        }
        row = next;
    }
    Ok(BigCount(row[k].clone()))
}

/// r-Bell number: `Σ_{i=0}^{n} r_stirling2(n + r, i + r, r)`.
pub fn r_bell(n: usize, r: usize) -> Result<BigCount> {
    check_exact(n + r)?;
    let mut total = BigUint::zero();
    for i in 0..=n {
        total += r_stirling2(n + r, i + r, r)?.0;
    }
    Ok(BigCount(total))
}

/// `ln S(n, k)`.
pub fn log_stirling2(n: usize, k: usize) -> Result<LogCount> {
    check_log(n)?;
    if k > n {
        return Err(Error::domain(format!("stirling2 requires k ≤ n, got k = {k}, n = {n}")));
    }
    Ok(LogCount::from_ln(log_stirling_table()[n][k]))
}

/// `ln B_n`.
pub fn log_bell(n: usize) -> Result<LogCount> {
    check_log(n)?;
    Ok(LogCount::from_ln(log_sum_exp(&log_stirling_table()[n])))
}

/// Log-space r-Stirling number by log-sum-exp over the explicit sum.
pub fn log_r_stirling2(n: usize, k: usize, r: usize) -> Result<LogCount> {
    check_log(n)?;
    check_r(n, r)?;
    if k < r || k > n {
        return Ok(LogCount::ZERO);
    }
    let free = n - r;
    let target = k - r;
    let table = log_stirling_table();
    let ln_r = (r as f64).ln();
    let terms: Vec<f64> = (target..=free)
        .filter_map(|i| {
            let exp = free - i;
            let power = match (r, exp) {
                (0, 0) => 0.0,
                (0, _) => return None,
                _ => exp as f64 * ln_r,
            };
            Some(ln_choose(free, i) + table[i][target] + power)
        })
        .collect();
    Ok(LogCount::from_ln(log_sum_exp(&terms)))
}

/// Log-space r-Bell number.
pub fn log_r_bell(n: usize, r: usize) -> Result<LogCount> {
    check_log(n + r)?;
    let terms = (0..=n)
        .map(|i| log_r_stirling2(n + r, i + r, r).map(|c| c.ln()))
        .collect::<Result<Vec<_>>>()?;
    Ok(LogCount::from_ln(log_sum_exp(&terms)))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Counts restricted-growth strings of length `n` with `k` blocks whose
    /// first `r` entries are pairwise distinct.
    fn brute_force(n: usize, k: Option<usize>, r: usize) -> u64 {
        fn rec(prefix: &mut Vec<usize>, n: usize, k: Option<usize>, r: usize, count: &mut u64) {
            if prefix.len() == n {
                let blocks = prefix.iter().max().map_or(0, |m| m + 1);
                if k.is_none_or(|k| k == blocks) {
                    *count += 1;
                }
                return;
            }
            let next_new = prefix.iter().max().map_or(0, |m| m + 1);
            let i = prefix.len();
            let choices: Vec<usize> = if i < r { vec![next_new] } else { (0..=next_new).collect() };
            for c in choices {
                prefix.push(c);
                rec(prefix, n, k, r, count);
                prefix.pop();
            }
        }
        let mut count = 0;
        if n == 0 {
            return u64::from(k.is_none_or(|k| k == 0));
        }
        rec(&mut Vec::new(), n, k, r, &mut count);
        count
    }

    #[test]
    fn stirling_examples() {
        assert_eq!(stirling2(0, 0).unwrap(), 1);
        assert_eq!(stirling2(3, 2).unwrap(), 3);
        assert_eq!(stirling2(5, 3).unwrap(), brute_force(5, Some(3), 0));
        assert_eq!(stirling2(5, 3).unwrap(), 25);
    }

    #[test]
    fn bell_examples() {
        assert_eq!(bell(1).unwrap(), 1);
        assert_eq!(bell(5).unwrap(), 52);
        assert_eq!(bell(10).unwrap(), 115_975);
        assert_eq!(bell(0).unwrap(), 1);
    }

    #[test]
    fn out_of_range_is_domain_error() {
        assert!(matches!(stirling2(65, 3), Err(Error::Domain(_))));
        assert!(matches!(stirling2(3, 4), Err(Error::Domain(_))));
        assert!(matches!(bell(65), Err(Error::Domain(_))));
        assert!(matches!(r_stirling2(3, 2, 4), Err(Error::Domain(_))));
        assert!(matches!(log_bell(513), Err(Error::Domain(_))));
    }

    #[test]
    fn normalization_over_sizes() {
        for n in 0..=20 {
            let sum = (0..=n).fold(BigUint::zero(), |acc, k| acc + stirling2(n, k).unwrap().0);
            assert_eq!(BigCount(sum), bell(n).unwrap());
        }
    }

    #[test]
    fn r_stirling_identities() {
        for n in 1..=10 {
            for k in 0..=n {
                assert_eq!(r_stirling2(n, k, 1).unwrap(), stirling2(n, k).unwrap());
                assert_eq!(r_stirling2(n, k, 0).unwrap(), stirling2(n, k).unwrap());
            }
            assert_eq!(r_bell(n, 0).unwrap(), bell(n).unwrap());
        }
        assert_eq!(r_stirling2(3, 0, 0).unwrap(), 0);
        assert_eq!(r_bell(0, 3).unwrap(), 1);
    }

    #[test]
    fn r_stirling_against_enumeration() {
        for n in 0..=8 {
            for r in 0..=n {
                for k in 0..=n {
                    let got = r_stirling2(n, k, r).unwrap();
                    assert_eq!(got, brute_force(n, Some(k), r), "n={n} k={k} r={r}");
                }
            }
        }
        assert_eq!(r_stirling2(2, 2, 2).unwrap(), 1);
        // Elements 1 and 2 of five kept apart: 52 − 15 = 37.
        assert_eq!(r_bell(3, 2).unwrap(), brute_force(5, None, 2));
        assert_eq!(r_bell(3, 2).unwrap(), 37);
    }

    #[test]
    fn recurrence_matches_explicit_sum() {
        for n in 0..=20 {
            for r in 0..=n {
                for k in 0..=n {
                    assert_eq!(
                        r_stirling2(n, k, r).unwrap(),
                        r_stirling2_recurrence(n, k, r).unwrap(),
                        "n={n} k={k} r={r}"
                    );
                }
            }
        }
    }

    fn rel_err(log: LogCount, exact: &BigCount) -> f64 {
        if exact.is_zero() {
            return if log.is_zero { 0.0 } else { f64::INFINITY };
        }
        (log.ln() - exact.ln()).exp_m1().abs()
    }

    #[test]
    fn log_variants_match_exact() {
        for n in 0..=MAX_EXACT_N {
            assert!(rel_err(log_bell(n).unwrap(), &bell(n).unwrap()) <= 1e-12);
            for k in 0..=n {
                assert!(rel_err(log_stirling2(n, k).unwrap(), &stirling2(n, k).unwrap()) <= 1e-12);
            }
        }
        for n in (0..=40).step_by(3) {
            for r in 0..=n.min(6) {
                for k in 0..=n {
                    let e = rel_err(log_r_stirling2(n, k, r).unwrap(), &r_stirling2(n, k, r).unwrap());
                    assert!(e <= 1e-12, "n={n} k={k} r={r} err={e}");
                }
                if n + r <= MAX_EXACT_N {
                    assert!(rel_err(log_r_bell(n, r).unwrap(), &r_bell(n, r).unwrap()) <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn log_variants_reach_512() {
        let b = log_bell(512).unwrap();
        // ln B(512) computed independently with arbitrary-precision integers.
        assert!((b.ln() - 1997.743120385547).abs() < 1e-9);
        assert!(log_r_stirling2(512, 100, 3).unwrap().ln().is_finite());
        assert!(log_stirling2(512, 0).unwrap().is_zero);
    }
}

//! Priors over partitions: uniform, beta-binomial, and Dirichlet process.
//!
//! Each prior is characterized three ways: its mass function over partitions,
//! the induced distribution over the number of blocks, and a sequential
//! prediction rule giving the probability that the next group opens a new
//! block. Sampling uses the prediction rule; the rule's step probabilities
//! multiply out to the mass function exactly.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::combinatorics::{log_bell, log_r_bell, log_r_stirling2, log_stirling2};
use crate::error::{Error, Result};
use crate::math::{ln_binomial, ln_factorial, ln_falling, ln_rising, log_sum_exp, sample_log_categorical};
use crate::partition::{
    canonicalize, canonicalize_labels, enumerate_partitions, MembershipVector, Partition,
    DEFAULT_ENUMERATION_CAP,
};

/// Largest `K` for the exhaustive monotonicity check.
pub const MONOTONICITY_CHECK_CAP: usize = 10;

/// Log-scale slack when comparing masses that are equal in exact arithmetic.
const MONOTONE_LOG_TOL: f64 = 1e-12;

/// A fully specified partition prior.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Prior {
    Uniform,
    BetaBinomial { alpha: f64, beta: f64 },
    DirichletProcess { alpha: f64 },
}

/// Prior family without parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PriorKind {
    Uniform,
    BetaBinomial,
    DirichletProcess,
}

/// The `β` of a beta-binomial prior, possibly tied to the number of groups.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BetaParam {
    Value(f64),
    /// `β = K`
    Groups,
    /// `β = C(K, 2)`
    Pairs,
}

/// How the Dirichlet process concentration is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DpAlpha {
    Fixed(f64),
    /// Solved so the null and full partitions are equally likely.
    Symmetric,
}

/// A prior configuration that may still depend on `K`.
///
/// Text grammar: `uniform | bb:A,B | bb:A,k | bb:A,k2 | dp:A | dp:symmetric`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PriorSpec {
    Uniform,
    BetaBinomial { alpha: f64, beta: BetaParam },
    DirichletProcess(DpAlpha),
}

impl PriorSpec {
    /// Fixes any `K`-dependent parameter.
    pub fn resolve(&self, k: usize) -> Result<Prior> {
        if k == 0 {
            return Err(Error::domain("k must be positive"));
        }
        let prior = match *self {
            PriorSpec::Uniform => Prior::Uniform,
            PriorSpec::BetaBinomial { alpha, beta } => {
                let beta = match beta {
                    BetaParam::Value(b) => b,
                    BetaParam::Groups => k as f64,
                    BetaParam::Pairs => (k * (k - 1) / 2) as f64,
                };
                Prior::BetaBinomial { alpha, beta }
            }
            PriorSpec::DirichletProcess(DpAlpha::Fixed(alpha)) => Prior::DirichletProcess { alpha },
            PriorSpec::DirichletProcess(DpAlpha::Symmetric) => {
                if k == 1 {
                    Prior::DirichletProcess { alpha: 1.0 }
                } else {
                    elicit(PriorKind::DirichletProcess, k, ElicitTarget::NullFullRatio, 1.0)?
                }
            }
        };
        prior.validate()?;
        Ok(prior)
    }
}

impl FromStr for PriorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::domain(format!("unrecognized prior spec {s:?}"));
        let num = |t: &str| -> Result<f64> {
            let v: f64 = t.trim().parse().map_err(|_| bad())?;
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(format!("prior parameter must be positive, got {t}")));
            }
            Ok(v)
        };
        if s == "uniform" {
            return Ok(PriorSpec::Uniform);
        }
        if let Some(rest) = s.strip_prefix("bb:") {
            let (a, b) = rest.split_once(',').ok_or_else(bad)?;
            let alpha = num(a)?;
            let beta = match b.trim() {
                "k" | "K" => BetaParam::Groups,
                "k2" | "K2" => BetaParam::Pairs,
                other => BetaParam::Value(num(other)?),
            };
            return Ok(PriorSpec::BetaBinomial { alpha, beta });
        }
        if let Some(rest) = s.strip_prefix("dp:") {
            if rest.trim() == "symmetric" {
                return Ok(PriorSpec::DirichletProcess(DpAlpha::Symmetric));
            }
            return Ok(PriorSpec::DirichletProcess(DpAlpha::Fixed(num(rest)?)));
        }
        Err(bad())
    }
}

impl fmt::Display for PriorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PriorSpec::Uniform => f.write_str("uniform"),
            PriorSpec::BetaBinomial { alpha, beta } => match beta {
                BetaParam::Value(b) => write!(f, "bb:{alpha},{b}"),
                BetaParam::Groups => write!(f, "bb:{alpha},k"),
                BetaParam::Pairs => write!(f, "bb:{alpha},k2"),
            },
            PriorSpec::DirichletProcess(DpAlpha::Fixed(a)) => write!(f, "dp:{a}"),
            PriorSpec::DirichletProcess(DpAlpha::Symmetric) => f.write_str("dp:symmetric"),
        }
    }
}

impl fmt::Display for Prior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Prior::Uniform => f.write_str("uniform"),
            Prior::BetaBinomial { alpha, beta } => write!(f, "bb:{alpha},{beta}"),
            Prior::DirichletProcess { alpha } => write!(f, "dp:{alpha}"),
        }
    }
}

/// Distribution over the number of blocks `d = 1..=K`; `probs[d - 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SizeDistribution {
    pub probs: Vec<f64>,
}

/// Quantity fixed during elicitation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ElicitTarget {
    NullProb,
    FullProb,
    NullFullRatio,
}

impl Prior {
    pub fn kind(&self) -> PriorKind {
        match self {
            Prior::Uniform => PriorKind::Uniform,
            Prior::BetaBinomial { .. } => PriorKind::BetaBinomial,
            Prior::DirichletProcess { .. } => PriorKind::DirichletProcess,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        match *self {
            Prior::Uniform => Ok(()),
            Prior::BetaBinomial { alpha, beta } if ok(alpha) && ok(beta) => Ok(()),
            Prior::DirichletProcess { alpha } if ok(alpha) => Ok(()),
            _ => Err(Error::domain(format!("invalid prior parameters: {self:?}"))),
        }
    }

    /// Log mass of a partition of `k` groups with `d` blocks, given
    /// `Σ ln Γ(|c|)` over its blocks. Only the DP uses the block sizes.
    pub(crate) fn log_pmf_parts(&self, k: usize, d: usize, sum_ln_gamma_sizes: f64) -> f64 {
        match *self {
            Prior::Uniform => -log_bell(k).map(|b| b.ln()).unwrap_or(f64::INFINITY),
            Prior::BetaBinomial { alpha, beta } => {
                bb_log_size_prob(alpha, beta, k, d)
                    - log_stirling2(k, d).map(|s| s.ln()).unwrap_or(f64::INFINITY)
            }
            Prior::DirichletProcess { alpha } => {
                d as f64 * alpha.ln() - ln_rising(alpha, k) + sum_ln_gamma_sizes
            }
        }
    }

    /// Log prior mass of a partition.
    pub fn log_pmf(&self, p: &Partition) -> f64 {
        let sum_lg = match self {
            Prior::DirichletProcess { .. } => p.block_sizes().iter().map(|&s| ln_factorial(s - 1)).sum(),
            _ => 0.0,
        };
        self.log_pmf_parts(p.k(), p.n_blocks(), sum_lg)
    }

    /// Log prior mass of a membership vector: the partition's mass split
    /// evenly over its `K!/(K−d)!` label vectors.
    pub fn log_pmf_membership(&self, gamma: &MembershipVector) -> f64 {
        let p = canonicalize(gamma);
        self.log_pmf(&p) - ln_falling(p.k(), p.n_blocks())
    }

    /// Log probability that a partition of `k` groups has `d` blocks.
    pub fn log_pmf_size(&self, d: usize, k: usize) -> Result<f64> {
        if k == 0 || d == 0 || d > k {
            return Err(Error::domain(format!("block count {d} outside 1..={k}")));
        }
        match *self {
            Prior::Uniform => Ok(log_stirling2(k, d)?.ln() - log_bell(k)?.ln()),
            Prior::BetaBinomial { alpha, beta } => Ok(bb_log_size_prob(alpha, beta, k, d)),
            Prior::DirichletProcess { .. } => Ok(self.size_distribution(k)?.probs[d - 1].ln()),
        }
    }

    /// Distribution of the number of blocks. The DP case sums the mass
    /// function over an enumeration, so it is limited to `k ≤ 12`.
    pub fn size_distribution(&self, k: usize) -> Result<SizeDistribution> {
        if k == 0 {
            return Err(Error::domain("k must be positive"));
        }
        let probs = match self {
            Prior::DirichletProcess { .. } => {
                let mut logs: Vec<Vec<f64>> = vec![Vec::new(); k];
                for p in enumerate_partitions(k)? {
                    logs[p.n_blocks() - 1].push(self.log_pmf(&p));
                }
                logs.iter().map(|l| log_sum_exp(l).exp()).collect()
            }
            _ => (1..=k)
                .map(|d| self.log_pmf_size(d, k).map(f64::exp))
                .collect::<Result<Vec<_>>>()?,
        };
        Ok(SizeDistribution { probs })
    }

    /// Probability that group `j + 1` opens a new block, given that the first
    /// `j` groups occupy `b` blocks.
    pub fn prediction_new_prob(&self, k: usize, j: usize, b: usize) -> Result<f64> {
        if !(1 <= b && b <= j && j < k) {
            return Err(Error::domain(format!(
                "prediction rule needs 1 ≤ b ≤ j < K, got b = {b}, j = {j}, K = {k}"
            )));
        }
        match *self {
            Prior::DirichletProcess { alpha } => Ok(alpha / (alpha + j as f64)),
            Prior::Uniform => uniform_new_prob(k, j, b),
            Prior::BetaBinomial { .. } => self.size_only_new_prob(k, j, b),
        }
    }

    /// New-block probability for priors whose mass depends only on the block
    /// count: completions of the remaining groups are counted with r-Stirling
    /// numbers and weighted by the per-partition mass of their final size.
    fn size_only_new_prob(&self, k: usize, j: usize, b: usize) -> Result<f64> {
        let remaining = k - j - 1;
        let mut open = Vec::with_capacity(k);
        let mut join = Vec::with_capacity(k);
        for d in b..=k {
            let w = self.log_pmf_parts(k, d, 0.0);
            open.push(w + log_r_stirling2(remaining + b + 1, d, b + 1)?.ln());
            join.push(w + log_r_stirling2(remaining + b, d, b)?.ln());
        }
        let log_open = log_sum_exp(&open);
        let log_join_all = log_sum_exp(&join) + (b as f64).ln();
        Ok(1.0 / (1.0 + (log_join_all - log_open).exp()))
    }

    /// Log weights over `[existing blocks..., new block]` for the next group.
    fn step_log_weights(&self, k: usize, j: usize, sizes: &[usize], out: &mut Vec<f64>) -> Result<()> {
        let b = sizes.len();
        let p_new = self.prediction_new_prob(k, j, b)?;
        out.clear();
        let log_old = (-p_new).ln_1p();
        match self {
            Prior::DirichletProcess { .. } => {
                for &s in sizes {
                    out.push(log_old + (s as f64 / j as f64).ln());
                }
            }
            _ => {
                let share = log_old - (b as f64).ln();
                out.extend(std::iter::repeat_n(share, b));
            }
        }
        out.push(p_new.ln());
        Ok(())
    }

    /// Log probability of building `p` group by group with the prediction rule.
    pub fn sequential_log_prob(&self, p: &Partition) -> Result<f64> {
        let k = p.k();
        let mut sizes: Vec<usize> = vec![1];
        let mut total = 0.0;
        let mut weights = Vec::new();
        for j in 1..k {
            self.step_log_weights(k, j, &sizes, &mut weights)?;
            let l = p.label(j);
            total += weights[l];
            if l == sizes.len() {
                sizes.push(1);
            } else {
                sizes[l] += 1;
            }
        }
        Ok(total)
    }

    /// Draws a partition from the prior by sequential construction.
    pub fn sample_partition<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Result<Partition> {
        if k == 0 {
            return Err(Error::domain("k must be positive"));
        }
        self.validate()?;
        let mut labels = vec![0usize; k];
        let mut sizes: Vec<usize> = vec![1];
        let mut weights = Vec::new();
        for (j, label) in labels.iter_mut().enumerate().skip(1) {
            self.step_log_weights(k, j, &sizes, &mut weights)?;
            let choice = sample_log_categorical(&weights, rng);
            *label = choice;
            if choice == sizes.len() {
                sizes.push(1);
            } else {
                sizes[choice] += 1;
            }
        }
        Ok(canonicalize_labels(&labels))
    }

    /// Prior probability of the single-block partition.
    pub fn null_prob(&self, k: usize) -> f64 {
        self.log_null_prob(k).exp()
    }

    /// Prior probability of the all-distinct partition.
    pub fn full_prob(&self, k: usize) -> f64 {
        self.log_full_prob(k).exp()
    }

    /// Ratio of null to full prior probability.
    pub fn null_full_ratio(&self, k: usize) -> f64 {
        (self.log_null_prob(k) - self.log_full_prob(k)).exp()
    }

    fn log_null_prob(&self, k: usize) -> f64 {
        match *self {
            Prior::Uniform => -log_bell(k).map(|b| b.ln()).unwrap_or(f64::INFINITY),
            Prior::BetaBinomial { alpha, beta } => ln_rising(beta, k - 1) - ln_rising(alpha + beta, k - 1),
            Prior::DirichletProcess { alpha } => ln_factorial(k - 1) - ln_rising(alpha + 1.0, k - 1),
        }
    }

    fn log_full_prob(&self, k: usize) -> f64 {
        match *self {
            Prior::Uniform => self.log_null_prob(k),
            Prior::BetaBinomial { alpha, beta } => ln_rising(alpha, k - 1) - ln_rising(alpha + beta, k - 1),
            Prior::DirichletProcess { alpha } => {
                (k - 1) as f64 * alpha.ln() - ln_rising(alpha + 1.0, k - 1)
            }
        }
    }

    /// Per-size minimum and maximum log mass over all partitions of `k`.
    fn size_extremes(&self, k: usize) -> Result<Vec<(f64, f64)>> {
        if k > MONOTONICITY_CHECK_CAP {
            return Err(Error::capacity("k for the monotonicity check", k, MONOTONICITY_CHECK_CAP));
        }
        let mut ext = vec![(f64::INFINITY, f64::NEG_INFINITY); k];
        for p in enumerate_partitions(k)? {
            let v = self.log_pmf(&p);
            let e = &mut ext[p.n_blocks() - 1];
            e.0 = e.0.min(v);
            e.1 = e.1.max(v);
        }
        Ok(ext)
    }

    /// True iff every partition is at least as likely as every partition with
    /// more blocks. Exhaustive for `k ≤ 10`.
    pub fn is_monotone_decreasing(&self, k: usize) -> Result<bool> {
        Ok(check_monotone(&self.size_extremes(k)?, false))
    }

    /// True iff every partition is strictly more likely than every partition
    /// with more blocks. Exhaustive for `k ≤ 10`.
    pub fn is_strictly_decreasing(&self, k: usize) -> Result<bool> {
        Ok(check_monotone(&self.size_extremes(k)?, true))
    }
}

fn check_monotone(ext: &[(f64, f64)], strict: bool) -> bool {
    let mut running_min = f64::INFINITY;
    for w in ext.windows(2) {
        running_min = running_min.min(w[0].0);
        let next_max = w[1].1;
        let ok = if strict {
            next_max < running_min - MONOTONE_LOG_TOL
        } else {
            next_max <= running_min + MONOTONE_LOG_TOL
        };
        if !ok {
            return false;
        }
    }
    true
}

/// `ln BetaBinomial(d − 1 | K − 1, α, β)`.
fn bb_log_size_prob(alpha: f64, beta: f64, k: usize, d: usize) -> f64 {
    ln_binomial(k - 1, d - 1) + ln_rising(alpha, d - 1) + ln_rising(beta, k - d)
        - ln_rising(alpha + beta, k - 1)
}

/// Uniform-prior rule via r-Bell numbers: opening a new block leaves
/// `B(m, b + 1)` completions, joining any one block leaves `B(m, b)`.
fn uniform_new_prob(k: usize, j: usize, b: usize) -> Result<f64> {
    let remaining = k - j - 1;
    let open = log_r_bell(remaining, b + 1)?.ln();
    let join = log_r_bell(remaining, b)?.ln() + (b as f64).ln();
    Ok(1.0 / (1.0 + (join - open).exp()))
}

/// Solves for the free parameter of a prior family so that `target` equals
/// `value`: `α` for the DP, `β` (with `α = 1`) for the beta-binomial.
pub fn elicit(kind: PriorKind, k: usize, target: ElicitTarget, value: f64) -> Result<Prior> {
    if k < 2 {
        return Err(Error::domain("elicitation needs at least two groups"));
    }
    if !(value.is_finite() && value > 0.0) || (target != ElicitTarget::NullFullRatio && value >= 1.0) {
        return Err(Error::Infeasible(format!("target value {value} outside the attainable range")));
    }
    let make: fn(f64) -> Prior = match kind {
        PriorKind::Uniform => {
            return Err(Error::Infeasible("the uniform prior has no free parameter".into()));
        }
        PriorKind::DirichletProcess => |x| Prior::DirichletProcess { alpha: x },
        PriorKind::BetaBinomial => |x| Prior::BetaBinomial { alpha: 1.0, beta: x },
    };
    let eval = |x: f64| -> f64 {
        let p = make(x);
        match target {
            ElicitTarget::NullProb => p.log_null_prob(k),
            ElicitTarget::FullProb => p.log_full_prob(k),
            ElicitTarget::NullFullRatio => p.log_null_prob(k) - p.log_full_prob(k),
        }
    };
    let goal = value.ln();
    let (mut lo, mut hi) = (1e-8f64.ln(), 1e8f64.ln());
    let (f_lo, f_hi) = (eval(lo.exp()) - goal, eval(hi.exp()) - goal);
    if f_lo.signum() == f_hi.signum() && f_lo != 0.0 && f_hi != 0.0 {
        return Err(Error::Infeasible(format!(
            "no parameter in [1e-8, 1e8] attains {target:?} = {value} for K = {k}"
        )));
    }
    let increasing = f_hi > f_lo;
    let tol = 1e-10 * value.max(1.0);
    let mut x = 0.5 * (lo + hi);
    while hi - lo > 1e-15 * hi.abs().max(1.0) {
        x = 0.5 * (lo + hi);
        let f = eval(x.exp()) - goal;
        if f == 0.0 {
            break;
        }
        if (f > 0.0) == increasing {
            hi = x;
        } else {
            lo = x;
        }
    }
    let prior = make(x.exp());
    let achieved = eval(x.exp()).exp();
    if (achieved - value).abs() > tol {
        return Err(Error::Numerical(format!(
            "elicitation reached {achieved} for target {value}"
        )));
    }
    Ok(prior)
}

/// Number of groups above which [`Prior::size_distribution`] fails for the DP.
pub const DP_SIZE_DISTRIBUTION_CAP: usize = DEFAULT_ENUMERATION_CAP;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::stirling2;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    fn all_priors(k: usize) -> Vec<Prior> {
        let c2 = (k * (k - 1) / 2) as f64;
        vec![
            Prior::Uniform,
            Prior::BetaBinomial { alpha: 1.0, beta: 1.0 },
            Prior::BetaBinomial { alpha: 1.0, beta: k as f64 },
            Prior::BetaBinomial { alpha: 1.0, beta: c2.max(0.5) },
            Prior::BetaBinomial { alpha: 2.5, beta: 0.7 },
            Prior::DirichletProcess { alpha: 0.5 },
            Prior::DirichletProcess { alpha: 1.0 },
            Prior::DirichletProcess { alpha: 3.3 },
        ]
    }

    fn p(labels: &[usize]) -> Partition {
        Partition::from_rgs(labels).unwrap()
    }

    #[test]
    fn pmf_examples() {
        let u = Prior::Uniform;
        for q in enumerate_partitions(5).unwrap() {
            assert_abs_diff_eq!(u.log_pmf(&q), (1.0f64 / 52.0).ln(), epsilon = 1e-13);
        }
        // DP α = 1, K = 3: Γ(1)/Γ(4) = 1/6; null: α·Γ(3) = 2 → 1/3; (0,0,1): α²·Γ(2)Γ(1) = 1 → 1/6.
        let dp = Prior::DirichletProcess { alpha: 1.0 };
        assert_abs_diff_eq!(dp.log_pmf(&p(&[0, 0, 0])), (1.0f64 / 3.0).ln(), epsilon = 1e-13);
        assert_abs_diff_eq!(dp.log_pmf(&p(&[0, 0, 1])), (1.0f64 / 6.0).ln(), epsilon = 1e-13);
        let bb = Prior::BetaBinomial { alpha: 1.0, beta: 1.0 };
        assert_abs_diff_eq!(bb.log_pmf(&p(&[0, 0, 0])), (1.0f64 / 3.0).ln(), epsilon = 1e-13);
        assert_abs_diff_eq!(bb.log_pmf(&p(&[0, 1, 1])), (1.0f64 / 9.0).ln(), epsilon = 1e-13);
    }

    #[test]
    fn size_pmf_examples() {
        let bb11 = Prior::BetaBinomial { alpha: 1.0, beta: 1.0 };
        for d in 1..=3 {
            assert_abs_diff_eq!(bb11.log_pmf_size(d, 3).unwrap().exp(), 1.0 / 3.0, epsilon = 1e-14);
        }
        let bb13 = Prior::BetaBinomial { alpha: 1.0, beta: 3.0 };
        let expect = [0.6, 0.3, 0.1];
        for d in 1..=3 {
            assert_abs_diff_eq!(bb13.log_pmf_size(d, 3).unwrap().exp(), expect[d - 1], epsilon = 1e-14);
        }
        assert_abs_diff_eq!(Prior::Uniform.log_pmf_size(2, 5).unwrap().exp(), 15.0 / 52.0, epsilon = 1e-14);
        assert!(bb11.log_pmf_size(0, 3).is_err());
        assert!(bb11.log_pmf_size(4, 3).is_err());
    }

    #[test]
    fn normalization() {
        for k in 1..=8 {
            for prior in all_priors(k) {
                let lps: Vec<f64> = enumerate_partitions(k).unwrap().map(|q| prior.log_pmf(&q)).collect();
                assert_abs_diff_eq!(log_sum_exp(&lps).exp(), 1.0, epsilon = 1e-10);
                let sizes = prior.size_distribution(k).unwrap();
                assert_abs_diff_eq!(sizes.probs.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
            }
        }
    }

    /// Unsigned Stirling numbers of the first kind, as an independent route to
    /// the DP size distribution.
    fn stirling1_unsigned(n: usize) -> Vec<f64> {
        let mut row = vec![1.0];
        for m in 0..n {
            let mut next = vec![0.0; row.len() + 1];
            for (d, &v) in row.iter().enumerate() {
                next[d] += m as f64 * v;
                next[d + 1] += v;
            }
            row = next;
        }
        row
    }

    #[test]
    fn dp_size_distribution_matches_stirling_first_kind() {
        for k in 1..=9 {
            let c = stirling1_unsigned(k);
            for alpha in [0.3, 1.0, 4.0] {
                let dp = Prior::DirichletProcess { alpha };
                let sizes = dp.size_distribution(k).unwrap();
                let norm: f64 = (0..k).map(|i| alpha + i as f64).product();
                for d in 1..=k {
                    let expect = c[d] * alpha.powi(d as i32) / norm;
                    assert_abs_diff_eq!(sizes.probs[d - 1], expect, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn prediction_examples() {
        assert_abs_diff_eq!(Prior::Uniform.prediction_new_prob(3, 1, 1).unwrap(), 0.6, epsilon = 1e-14);
        let dp = Prior::DirichletProcess { alpha: 1.0 };
        assert_abs_diff_eq!(dp.prediction_new_prob(2, 1, 1).unwrap(), 0.5, epsilon = 1e-15);
        assert!(dp.prediction_new_prob(3, 0, 1).is_err());
        assert!(dp.prediction_new_prob(3, 3, 1).is_err());
        assert!(dp.prediction_new_prob(3, 1, 2).is_err());
    }

    /// New-block probability by summing the mass of every completion.
    fn brute_new_prob(prior: &Prior, prefix: &Partition, k: usize) -> f64 {
        let j = prefix.k();
        let b = prefix.n_blocks();
        let (mut open, mut total) = (0.0, 0.0);
        for q in enumerate_partitions(k).unwrap() {
            if q.rgs()[..j] != *prefix.rgs() {
                continue;
            }
            let m = prior.log_pmf(&q).exp();
            total += m;
            if q.label(j) == b {
                open += m;
            }
        }
        open / total
    }

    #[test]
    fn prediction_rule_matches_completion_sums() {
        for k in 2..=6 {
            for prior in all_priors(k) {
                for j in 1..k {
                    for prefix in enumerate_partitions(j).unwrap() {
                        let got = prior.prediction_new_prob(k, j, prefix.n_blocks()).unwrap();
                        let want = brute_new_prob(&prior, &prefix, k);
                        assert_abs_diff_eq!(got, want, epsilon = 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn uniform_rule_agrees_with_generic_completion_count() {
        for k in 2..=30 {
            for j in 1..k {
                for b in 1..=j {
                    let a = uniform_new_prob(k, j, b).unwrap();
                    let g = Prior::Uniform.size_only_new_prob(k, j, b).unwrap();
                    assert_abs_diff_eq!(a, g, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn sequential_consistency() {
        for k in 1..=6 {
            for prior in all_priors(k) {
                for q in enumerate_partitions(k).unwrap() {
                    let seq = prior.sequential_log_prob(&q).unwrap().exp();
                    assert_abs_diff_eq!(seq, prior.log_pmf(&q).exp(), epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn sampling_matches_pmf() {
        let k = 4;
        let draws = 200_000;
        for prior in all_priors(k) {
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            let mut counts: HashMap<Partition, usize> = HashMap::new();
            for _ in 0..draws {
                *counts.entry(prior.sample_partition(k, &mut rng).unwrap()).or_default() += 1;
            }
            let tv: f64 = 0.5
                * enumerate_partitions(k)
                    .unwrap()
                    .map(|q| {
                        let emp = *counts.get(&q).unwrap_or(&0) as f64 / draws as f64;
                        (emp - prior.log_pmf(&q).exp()).abs()
                    })
                    .sum::<f64>();
            assert!(tv < 0.01, "{prior}: tv = {tv}");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(Prior::Uniform.sample_partition(1, &mut rng).unwrap(), Partition::null(1));
        let tiny = Prior::DirichletProcess { alpha: 1e-8 };
        let nulls = (0..10_000)
            .filter(|_| tiny.sample_partition(5, &mut rng).unwrap() == Partition::null(5))
            .count();
        assert!(nulls as f64 / 10_000.0 >= 0.999);
    }

    #[test]
    fn membership_pmf() {
        for prior in all_priors(3) {
            let mut total = 0.0;
            for code in 0..27 {
                let labels = vec![code % 3, (code / 3) % 3, code / 9];
                total += prior.log_pmf_membership(&MembershipVector::new(labels).unwrap()).exp();
            }
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
            let a = prior.log_pmf_membership(&MembershipVector::new(vec![0, 0, 0]).unwrap());
            let b = prior.log_pmf_membership(&MembershipVector::new(vec![1, 1, 1]).unwrap());
            assert_eq!(a, b);
        }
        let u = Prior::Uniform.log_pmf_membership(&MembershipVector::new(vec![0, 1, 1]).unwrap());
        assert_abs_diff_eq!(u, (1.0f64 / 5.0 / 6.0).ln(), epsilon = 1e-13);
    }

    #[test]
    fn table_formulas_match_pmf() {
        for k in 2..=7 {
            for prior in all_priors(k) {
                assert_abs_diff_eq!(prior.null_prob(k), prior.log_pmf(&Partition::null(k)).exp(), epsilon = 1e-13);
                assert_abs_diff_eq!(prior.full_prob(k), prior.log_pmf(&Partition::full(k)).exp(), epsilon = 1e-13);
            }
            // DP ratio α(K−1)!/α^K.
            let alpha: f64 = 1.7;
            let dp = Prior::DirichletProcess { alpha };
            let fact: f64 = (1..k).map(|i| i as f64).product();
            assert_abs_diff_eq!(
                dp.null_full_ratio(k),
                alpha * fact / alpha.powi(k as i32),
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn elicitation() {
        let sym = elicit(PriorKind::DirichletProcess, 5, ElicitTarget::NullFullRatio, 1.0).unwrap();
        let Prior::DirichletProcess { alpha } = sym else { panic!() };
        assert!((alpha - 2.213).abs() < 1e-3, "alpha = {alpha}");
        // Closed form: α^(K−1) = (K−1)!.
        assert_abs_diff_eq!(alpha, 24f64.powf(0.25), epsilon = 1e-9);
        let bb = elicit(PriorKind::BetaBinomial, 3, ElicitTarget::NullProb, 0.6).unwrap();
        assert_eq!(bb.kind(), PriorKind::BetaBinomial);
        let Prior::BetaBinomial { beta, .. } = bb else { panic!() };
        assert_abs_diff_eq!(beta, 3.0, epsilon = 1e-8);
        assert_abs_diff_eq!(Prior::BetaBinomial { alpha: 1.0, beta: 3.0 }.null_prob(3), 0.6, epsilon = 1e-14);

        for k in [2, 3, 5, 8] {
            for (kind, target, value) in [
                (PriorKind::DirichletProcess, ElicitTarget::NullProb, 0.3),
                (PriorKind::DirichletProcess, ElicitTarget::FullProb, 0.05),
                (PriorKind::DirichletProcess, ElicitTarget::NullFullRatio, 7.5),
                (PriorKind::BetaBinomial, ElicitTarget::NullProb, 0.4),
                (PriorKind::BetaBinomial, ElicitTarget::FullProb, 0.02),
                (PriorKind::BetaBinomial, ElicitTarget::NullFullRatio, 3.0),
            ] {
                let prior = elicit(kind, k, target, value).unwrap();
                let got = match target {
                    ElicitTarget::NullProb => prior.null_prob(k),
                    ElicitTarget::FullProb => prior.full_prob(k),
                    ElicitTarget::NullFullRatio => prior.null_full_ratio(k),
                };
                assert!((got - value).abs() <= 1e-8, "{kind:?} {target:?} K={k}: {got} vs {value}");
            }
        }
        assert!(matches!(
            elicit(PriorKind::DirichletProcess, 5, ElicitTarget::NullProb, 1.5),
            Err(Error::Infeasible(_))
        ));
        assert!(matches!(
            elicit(PriorKind::Uniform, 5, ElicitTarget::NullProb, 0.5),
            Err(Error::Infeasible(_))
        ));
        // BB(α=1) null probability is β/(K−1+β) < 1 − 1e-9 within the bracket.
        assert!(matches!(
            elicit(PriorKind::BetaBinomial, 5, ElicitTarget::NullProb, 1.0 - 1e-12),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn monotonicity() {
        let c2 = |k: usize| (k * (k - 1) / 2) as f64;
        let at = |beta| Prior::BetaBinomial { alpha: 1.0, beta };
        assert!(at(c2(5)).is_monotone_decreasing(5).unwrap());
        assert!(!at(c2(5)).is_strictly_decreasing(5).unwrap());
        assert!(at(c2(5) + 1.0).is_strictly_decreasing(5).unwrap());
        assert!(!at(1.0).is_monotone_decreasing(5).unwrap());
        assert!(Prior::DirichletProcess { alpha: 0.5 }.is_monotone_decreasing(5).unwrap());
        assert!(Prior::DirichletProcess { alpha: 1.0 }.is_monotone_decreasing(5).unwrap());
        assert!(!Prior::DirichletProcess { alpha: 1.01 }.is_monotone_decreasing(5).unwrap());
        // β = K: block-count distribution nonincreasing, partition mass not.
        let bk = at(5.0);
        let sizes = bk.size_distribution(5).unwrap().probs;
        assert!(sizes.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        assert!(!bk.is_monotone_decreasing(5).unwrap());
        assert!(matches!(bk.is_monotone_decreasing(11), Err(Error::Capacity { .. })));
    }

    #[test]
    fn exchangeability() {
        let perm = [3, 0, 4, 1, 2];
        for prior in all_priors(5) {
            for q in enumerate_partitions(5).unwrap() {
                let moved = q.permute(&perm);
                assert_abs_diff_eq!(prior.log_pmf(&q), prior.log_pmf(&moved), epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn dp_prefers_larger_clusters_bb_does_not() {
        let big = p(&[0, 0, 0, 1, 2]);
        let even = p(&[0, 0, 1, 1, 2]);
        let dp = Prior::DirichletProcess { alpha: 1.0 };
        assert!(dp.log_pmf(&big) > dp.log_pmf(&even));
        let bb = Prior::BetaBinomial { alpha: 1.0, beta: 5.0 };
        assert_eq!(bb.log_pmf(&big), bb.log_pmf(&even));
        assert_eq!(stirling2(5, 3).unwrap(), 25);
    }

    #[test]
    fn spec_parsing_and_resolution() {
        let cases = [
            ("uniform", Prior::Uniform),
            ("bb:1,5", Prior::BetaBinomial { alpha: 1.0, beta: 5.0 }),
            ("bb:1,k", Prior::BetaBinomial { alpha: 1.0, beta: 5.0 }),
            ("bb:1,k2", Prior::BetaBinomial { alpha: 1.0, beta: 10.0 }),
            ("dp:0.5", Prior::DirichletProcess { alpha: 0.5 }),
        ];
        for (s, want) in cases {
            let spec: PriorSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
            assert_eq!(spec.resolve(5).unwrap(), want);
        }
        let sym: PriorSpec = "dp:symmetric".parse().unwrap();
        let Prior::DirichletProcess { alpha } = sym.resolve(5).unwrap() else { panic!() };
        assert!((alpha - 2.213).abs() < 1e-3);
        for bad in ["", "bb:1", "bb:-1,2", "dp:x", "dp:0", "gauss"] {
            assert!(bad.parse::<PriorSpec>().is_err(), "{bad}");
        }
    }
}

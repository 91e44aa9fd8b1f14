//! Marginal likelihoods of partitions.
//!
//! Groups that share a block share one parameter drawn from the model's base
//! prior, so conjugate models factor over blocks. The g-prior ANOVA couples
//! blocks through the common variance and is evaluated by quadrature.

pub mod data;
pub mod jzs;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, RngCore};
use rand_distr::{Beta, Distribution, Gamma, Normal};
use statrs::function::beta::ln_beta;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::math::ln_binomial;
use crate::partition::Partition;

pub use data::{GroupedCounts, GroupedData, GroupedGaussian};
pub use jzs::QuadratureOptions;

/// Model family and hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ModelSpec {
    /// Binomial counts, block chance `~ Beta(a0, b0)`.
    BinomialBeta { a0: f64, b0: f64 },
    /// Gaussian data with known variance, block mean `~ N(m0, v0)`.
    NormalKnownVar { sigma2: f64, m0: f64, v0: f64 },
    /// Gaussian data, block mean and variance from a normal-inverse-gamma prior.
    NormalNig { m0: f64, kappa0: f64, a0: f64, b0: f64 },
    /// One-way ANOVA with a g-prior on effects and `g ~ IG(1/2, r²/2)`.
    Jzs { r_scale: f64 },
}

impl ModelSpec {
    pub fn binomial() -> Self {
        ModelSpec::BinomialBeta { a0: 1.0, b0: 1.0 }
    }

    pub fn jzs() -> Self {
        ModelSpec::Jzs { r_scale: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        let ok = match *self {
            ModelSpec::BinomialBeta { a0, b0 } => pos(a0) && pos(b0),
            ModelSpec::NormalKnownVar { sigma2, m0, v0 } => pos(sigma2) && m0.is_finite() && pos(v0),
            ModelSpec::NormalNig { m0, kappa0, a0, b0 } => m0.is_finite() && pos(kappa0) && pos(a0) && pos(b0),
            ModelSpec::Jzs { r_scale } => pos(r_scale),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!("invalid model hyperparameters: {self:?}")))
        }
    }

    pub fn is_additive(&self) -> bool {
        !matches!(self, ModelSpec::Jzs { .. })
    }

    fn wants_counts(&self) -> bool {
        matches!(self, ModelSpec::BinomialBeta { .. })
    }
}

/// Grammar: `beta[:A,B] | normal[:SIGMA2[,M0,V0]] | nig[:M0,KAPPA0,A0,B0] | jzs[:R]`.
impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, rest) = match s.trim().split_once(':') {
            Some((n, r)) => (n, Some(r)),
            None => (s.trim(), None),
        };
        let nums: Vec<f64> = match rest {
            Some(r) => r
                .split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|_| Error::domain(format!("bad number {t:?} in model spec"))))
                .collect::<Result<_>>()?,
            None => Vec::new(),
        };
        let spec = match (name, nums.as_slice()) {
            ("beta" | "binomial", []) => ModelSpec::binomial(),
            ("beta" | "binomial", &[a0, b0]) => ModelSpec::BinomialBeta { a0, b0 },
            ("normal", []) => ModelSpec::NormalKnownVar { sigma2: 1.0, m0: 0.0, v0: 1.0 },
            ("normal", &[sigma2]) => ModelSpec::NormalKnownVar { sigma2, m0: 0.0, v0: 1.0 },
            ("normal", &[sigma2, m0, v0]) => ModelSpec::NormalKnownVar { sigma2, m0, v0 },
            ("nig", []) => ModelSpec::NormalNig { m0: 0.0, kappa0: 1.0, a0: 1.0, b0: 1.0 },
            ("nig", &[m0, kappa0, a0, b0]) => ModelSpec::NormalNig { m0, kappa0, a0, b0 },
            ("jzs", []) => ModelSpec::jzs(),
            ("jzs", &[r_scale]) => ModelSpec::Jzs { r_scale },
            _ => return Err(Error::domain(format!("unrecognized model spec {s:?}"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::BinomialBeta { a0, b0 } => write!(f, "beta:{a0},{b0}"),
            ModelSpec::NormalKnownVar { sigma2, m0, v0 } => write!(f, "normal:{sigma2},{m0},{v0}"),
            ModelSpec::NormalNig { m0, kappa0, a0, b0 } => write!(f, "nig:{m0},{kappa0},{a0},{b0}"),
            ModelSpec::Jzs { r_scale } => write!(f, "jzs:{r_scale}"),
        }
    }
}

/// Additive sufficient statistics of a block.
///
/// Counts: `n` trials, `sum` successes, `log_base = Σ ln C(n_j, e_j)`.
/// Gaussian: `n` observations with `sum` and `sumsq` of centered values.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SuffStats {
    pub n: f64,
    pub sum: f64,
    pub sumsq: f64,
    pub log_base: f64,
}

impl std::ops::Add for SuffStats {
    type Output = SuffStats;
    fn add(self, o: SuffStats) -> SuffStats {
        SuffStats { n: self.n + o.n, sum: self.sum + o.sum, sumsq: self.sumsq + o.sumsq, log_base: self.log_base + o.log_base }
    }
}

impl std::ops::AddAssign for SuffStats {
    fn add_assign(&mut self, o: SuffStats) {
        *self = *self + o;
    }
}

impl std::ops::Sub for SuffStats {
    type Output = SuffStats;
    fn sub(self, o: SuffStats) -> SuffStats {
        SuffStats { n: self.n - o.n, sum: self.sum - o.sum, sumsq: self.sumsq - o.sumsq, log_base: self.log_base - o.log_base }
    }
}

impl std::ops::SubAssign for SuffStats {
    fn sub_assign(&mut self, o: SuffStats) {
        *self = *self - o;
    }
}

/// Log evidence of one block for a conjugate model. Gaussian statistics are
/// taken on the raw scale; [`Likelihood`] shifts them internally.
pub fn block_log_marginal(spec: &ModelSpec, s: &SuffStats) -> f64 {
    kernel(spec, s, 0.0)
}

/// Conjugate block evidence with Gaussian data centered at `center`.
fn kernel(spec: &ModelSpec, s: &SuffStats, center: f64) -> f64 {
    if s.n == 0.0 {
        return 0.0;
    }
    match *spec {
        ModelSpec::BinomialBeta { a0, b0 } => s.log_base + ln_beta(s.sum + a0, s.n - s.sum + b0) - ln_beta(a0, b0),
        ModelSpec::NormalKnownVar { sigma2, m0, v0 } => {
            let n = s.n;
            let mean = s.sum / n;
            let sse = (s.sumsq - s.sum * mean).max(0.0);
            let dev = mean - (m0 - center);
            -0.5 * n * (2.0 * std::f64::consts::PI * sigma2).ln() - sse / (2.0 * sigma2)
                - 0.5 * (n * v0 / sigma2).ln_1p()
                - n * dev * dev / (2.0 * (sigma2 + n * v0))
        }
        ModelSpec::NormalNig { m0, kappa0, a0, b0 } => {
            let n = s.n;
            let mean = s.sum / n;
            let sse = (s.sumsq - s.sum * mean).max(0.0);
            let dev = mean - (m0 - center);
            let kn = kappa0 + n;
            let an = a0 + 0.5 * n;
            let bn = b0 + 0.5 * sse + kappa0 * n * dev * dev / (2.0 * kn);
            ln_gamma(an) - ln_gamma(a0) + a0 * b0.ln() - an * bn.ln() + 0.5 * (kappa0 / kn).ln()
                - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
        }
        ModelSpec::Jzs { .. } => unreachable!("the g-prior model is not block additive"),
    }
}

/// A likelihood over partitions of a fixed set of groups.
pub trait PartitionLikelihood: Sync {
    fn n_groups(&self) -> usize;
    fn log_marginal(&self, p: &Partition) -> Result<f64>;

    /// Block-additive structure, when the model has one.
    fn additive(&self) -> Option<&dyn AdditiveLikelihood> {
        None
    }

    /// Posterior mean of each group's parameter given `p`, if the model has parameters.
    fn parameter_means(&self, _p: &Partition) -> Option<Result<Vec<f64>>> {
        None
    }

    /// One posterior draw of each group's parameter given `p`.
    fn draw_parameters(&self, _p: &Partition, _rng: &mut dyn RngCore) -> Option<Result<Vec<f64>>> {
        None
    }
}

/// Likelihoods that are a sum of per-block terms of pooled statistics.
pub trait AdditiveLikelihood: Sync {
    fn group_stats(&self) -> &[SuffStats];
    fn block_log_marginal(&self, s: &SuffStats) -> f64;
}

/// Constant likelihood; the posterior equals the prior.
#[derive(Clone, Copy, Debug)]
pub struct FlatLikelihood {
    pub k: usize,
}

impl PartitionLikelihood for FlatLikelihood {
    fn n_groups(&self) -> usize {
        self.k
    }

    fn log_marginal(&self, p: &Partition) -> Result<f64> {
        check_len(p, self.k)?;
        Ok(0.0)
    }
}

fn check_len(p: &Partition, k: usize) -> Result<()> {
    if p.k() != k {
        return Err(Error::domain(format!("partition has {} groups, data has {k}", p.k())));
    }
    Ok(())
}

/// A model bound to a data set.
#[derive(Clone, Debug)]
pub struct Likelihood {
    spec: ModelSpec,
    k: usize,
    center: f64,
    stats: Vec<SuffStats>,
    jzs: Option<jzs::JzsData>,
    quadrature: QuadratureOptions,
}

impl Likelihood {
    pub fn new(spec: ModelSpec, data: &GroupedData) -> Result<Self> {
        spec.validate()?;
        let k = data.k();
        match (data, spec.wants_counts()) {
            (GroupedData::Counts(c), true) => {
                let stats = c
                    .successes
                    .iter()
                    .zip(&c.trials)
                    .map(|(&e, &n)| SuffStats {
                        n: n as f64,
                        sum: e as f64,
                        sumsq: 0.0,
                        log_base: ln_binomial(n as usize, e as usize),
                    })
                    .collect();
                Ok(Likelihood { spec, k, center: 0.0, stats, jzs: None, quadrature: QuadratureOptions::default() })
            }
            (GroupedData::Gaussian(g), false) => {
                let jd = jzs::JzsData::new(g);
                let stats = (0..k)
                    .map(|j| {
                        let n = g.n[j] as f64;
                        let dev = g.mean[j] - jd.center;
                        SuffStats { n, sum: n * dev, sumsq: g.sse[j] + n * dev * dev, log_base: 0.0 }
                    })
                    .collect();
                let center = jd.center;
                let jzs = matches!(spec, ModelSpec::Jzs { .. }).then_some(jd);
                Ok(Likelihood { spec, k, center, stats, jzs, quadrature: QuadratureOptions::default() })
            }
            _ => Err(Error::Data(format!("model {spec} does not match the data type"))),
        }
    }

    pub fn with_quadrature(mut self, opts: QuadratureOptions) -> Self {
        self.quadrature = opts;
        self
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    fn block_stats(&self, p: &Partition) -> Vec<SuffStats> {
        let mut out = vec![SuffStats::default(); p.n_blocks()];
        for (j, s) in self.stats.iter().enumerate() {
            out[p.label(j)] += *s;
        }
        out
    }

    fn r_scale(&self) -> f64 {
        match self.spec {
            ModelSpec::Jzs { r_scale } => r_scale,
            _ => 1.0,
        }
    }

    /// One draw of every group's parameter given the partition: a chance for
    /// counts, a mean for Gaussian data. Groups in one block get one value.
    pub fn draw_block_parameters<R: Rng + ?Sized>(&self, p: &Partition, rng: &mut R) -> Result<Vec<f64>> {
        check_len(p, self.k)?;
        let blocks: Vec<f64> = if let Some(jd) = &self.jzs {
            jzs::check_size(jd, p)?;
            let sys = jzs::BlockSystem::new(jd, p);
            sys.draw(self.r_scale(), rng)?.into_iter().map(|v| v + self.center).collect()
        } else {
            self.block_stats(p)
                .iter()
                .map(|s| self.draw_conjugate(s, rng))
                .collect::<Result<_>>()?
        };
        Ok(p.labels().map(|l| blocks[l]).collect())
    }

    fn draw_conjugate<R: Rng + ?Sized>(&self, s: &SuffStats, rng: &mut R) -> Result<f64> {
        let err = |e: String| Error::Numerical(format!("posterior draw failed: {e}"));
        match self.spec {
            ModelSpec::BinomialBeta { a0, b0 } => {
                let d = Beta::new(a0 + s.sum, b0 + s.n - s.sum).map_err(|e| err(e.to_string()))?;
                Ok(d.sample(rng))
            }
            ModelSpec::NormalKnownVar { sigma2, m0, v0 } => {
                let prec = 1.0 / v0 + s.n / sigma2;
                let mean = ((m0 - self.center) / v0 + s.sum / sigma2) / prec;
                let d = Normal::new(mean, prec.recip().sqrt()).map_err(|e| err(e.to_string()))?;
                Ok(d.sample(rng) + self.center)
            }
            ModelSpec::NormalNig { m0, kappa0, a0, b0 } => {
                let (mn, kn, an, bn) = nig_posterior(s, m0 - self.center, kappa0, a0, b0);
                let precision = Gamma::new(an, 1.0 / bn).map_err(|e| err(e.to_string()))?.sample(rng);
                let d = Normal::new(mn, (1.0 / (kn * precision)).sqrt()).map_err(|e| err(e.to_string()))?;
                Ok(d.sample(rng) + self.center)
            }
            ModelSpec::Jzs { .. } => unreachable!(),
        }
    }

    /// Posterior mean of every group's parameter given the partition. Exact
    /// for conjugate models; for the g-prior model the conditional mean is
    /// averaged over a grid on `g`.
    pub fn posterior_means(&self, p: &Partition) -> Result<Vec<f64>> {
        check_len(p, self.k)?;
        let blocks: Vec<f64> = if let Some(jd) = &self.jzs {
            jzs::check_size(jd, p)?;
            let sys = jzs::BlockSystem::new(jd, p);
            sys.posterior_mean(self.r_scale())?.into_iter().map(|v| v + self.center).collect()
        } else {
            self.block_stats(p)
                .iter()
                .map(|s| match self.spec {
                    ModelSpec::BinomialBeta { a0, b0 } => (a0 + s.sum) / (a0 + b0 + s.n),
                    ModelSpec::NormalKnownVar { sigma2, m0, v0 } => {
                        let prec = 1.0 / v0 + s.n / sigma2;
                        ((m0 - self.center) / v0 + s.sum / sigma2) / prec + self.center
                    }
                    ModelSpec::NormalNig { m0, kappa0, a0, b0 } => {
                        nig_posterior(s, m0 - self.center, kappa0, a0, b0).0 + self.center
                    }
                    ModelSpec::Jzs { .. } => unreachable!(),
                })
                .collect()
        };
        Ok(p.labels().map(|l| blocks[l]).collect())
    }
}

fn nig_posterior(s: &SuffStats, m0: f64, kappa0: f64, a0: f64, b0: f64) -> (f64, f64, f64, f64) {
    let n = s.n;
    let kn = kappa0 + n;
    if n == 0.0 {
        return (m0, kn, a0, b0);
    }
    let mean = s.sum / n;
    let sse = (s.sumsq - s.sum * mean).max(0.0);
    let dev = mean - m0;
    let mn = (kappa0 * m0 + s.sum) / kn;
    (mn, kn, a0 + 0.5 * n, b0 + 0.5 * sse + kappa0 * n * dev * dev / (2.0 * kn))
}

impl PartitionLikelihood for Likelihood {
    fn n_groups(&self) -> usize {
        self.k
    }

    fn log_marginal(&self, p: &Partition) -> Result<f64> {
        check_len(p, self.k)?;
        let v = match &self.jzs {
            Some(jd) => jzs::log_marginal(jd, p, self.r_scale(), &self.quadrature)?,
            None => self.block_stats(p).iter().map(|s| kernel(&self.spec, s, self.center)).sum(),
        };
        if !v.is_finite() {
            return Err(Error::Numerical(format!("log marginal likelihood of {p} is {v}")));
        }
        Ok(v)
    }

    fn additive(&self) -> Option<&dyn AdditiveLikelihood> {
        if self.jzs.is_none() {
            Some(self)
        } else {
            None
        }
    }

    fn parameter_means(&self, p: &Partition) -> Option<Result<Vec<f64>>> {
        Some(self.posterior_means(p))
    }

    fn draw_parameters(&self, p: &Partition, mut rng: &mut dyn RngCore) -> Option<Result<Vec<f64>>> {
        Some(self.draw_block_parameters(p, &mut rng))
    }
}

impl AdditiveLikelihood for Likelihood {
    fn group_stats(&self) -> &[SuffStats] {
        &self.stats
    }

    fn block_log_marginal(&self, s: &SuffStats) -> f64 {
        kernel(&self.spec, s, self.center)
    }
}

/// Log marginal likelihood of `p` for `data` under `spec`.
pub fn log_marginal(spec: &ModelSpec, p: &Partition, data: &GroupedData) -> Result<f64> {
    Likelihood::new(*spec, data)?.log_marginal(p)
}

/// Pairwise log Bayes factors, equal versus unequal, each computed on the
/// data of the two groups alone.
#[derive(Clone, Debug, PartialEq)]
pub struct PairwiseBayesFactors {
    /// Symmetric; the diagonal is undefined and set to 0.
    pub log_bf: DMatrix<f64>,
    pub diagonal_defined: bool,
}

impl PairwiseBayesFactors {
    /// Claims "different" wherever the equal-versus-unequal Bayes factor is below 1.
    pub fn claims_different(&self) -> DMatrix<bool> {
        let k = self.log_bf.nrows();
        DMatrix::from_fn(k, k, |i, j| i != j && self.log_bf[(i, j)] < 0.0)
    }
}

pub fn pairwise_bayes_factors(spec: &ModelSpec, data: &GroupedData) -> Result<PairwiseBayesFactors> {
    let k = data.k();
    let mut log_bf = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in i + 1..k {
            let pair = data.subset(&[i, j]);
            let lik = Likelihood::new(*spec, &pair)?;
            let v = lik.log_marginal(&Partition::null(2))? - lik.log_marginal(&Partition::full(2))?;
            log_bf[(i, j)] = v;
            log_bf[(j, i)] = v;
        }
    }
    Ok(PairwiseBayesFactors { log_bf, diagonal_defined: false })
}

//! Simulation harness for error rates of pairwise equality decisions.
//!
//! Each replication draws a true partition with a given number of
//! equalities, simulates unit-variance Gaussian groups, and scores the
//! "different" claims of every prior (and of uncorrected pairwise Bayes
//! factors) against the truth.

use std::io::Write;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::inference::{gibbs::chain_rng, gibbs_run, MarginalTable, SamplerConfig};
use crate::model::{pairwise_bayes_factors, GroupedData, GroupedGaussian, Likelihood, ModelSpec};
use crate::partition::{sample_uniform_partition_with_blocks, Partition};
use crate::prior::PriorSpec;

/// Label of the uncorrected pairwise Bayes factor baseline.
pub const PAIRWISE: &str = "pairwise";

/// Largest failed-replication share tolerated before a study is flagged.
pub const MAX_FAILURE_RATE: f64 = 0.02;

#[derive(Clone, Debug, PartialEq)]
pub struct StudyConfig {
    pub k: usize,
    pub n_per_group: usize,
    pub reps: usize,
    /// Share of the `K − 1` possible equalities that hold in the truth.
    pub equality_fraction: f64,
    /// Gap between successive distinct block means.
    pub effect_step: f64,
    pub priors: Vec<PriorSpec>,
    pub model: ModelSpec,
    /// Claim "different" when the posterior probability of a difference exceeds this.
    pub decision_threshold: f64,
    pub seed: u64,
    /// Largest `K` analyzed by exact enumeration; larger `K` uses the sampler.
    pub exact_cap: usize,
    pub sampler: SamplerConfig,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            k: 5,
            n_per_group: 100,
            reps: 100,
            equality_fraction: 1.0,
            effect_step: 0.2,
            priors: vec![PriorSpec::Uniform],
            model: ModelSpec::jzs(),
            decision_threshold: 0.5,
            seed: 1,
            exact_cap: 8,
            sampler: SamplerConfig { iterations: 6000, burnin: 1000, chains: 2, seed: 1, thin: 1, draw_parameters: false },
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::domain("a study needs at least two groups"));
        }
        if self.reps == 0 {
            return Err(Error::domain("reps must be at least 1"));
        }
        if self.n_per_group < 2 {
            return Err(Error::domain("n per group must be at least 2"));
        }
        if !(0.0..=1.0).contains(&self.equality_fraction) {
            return Err(Error::domain("equality fraction must lie in [0, 1]"));
        }
        if !(self.decision_threshold > 0.0 && self.decision_threshold < 1.0) {
            return Err(Error::domain("decision threshold must lie in (0, 1)"));
        }
        self.sampler.validate()
    }
}

/// A simulated truth.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Truth {
    #[serde(serialize_with = "ser_display")]
    pub partition: Partition,
    pub means: Vec<f64>,
    pub equalities: usize,
    /// True when `fraction · (K − 1)` was not an integer and got rounded.
    pub rounded: bool,
}

fn ser_display<S: serde::Serializer>(p: &Partition, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(p)
}

/// Draws a partition with `round(fraction · (K − 1))` equalities uniformly,
/// then assigns block means `0, step, 2·step, …` to blocks in order of their
/// smallest member and centers the group means to sum to zero.
pub fn make_truth<R: Rng + ?Sized>(k: usize, equality_fraction: f64, step: f64, rng: &mut R) -> Result<Truth> {
    if k == 0 || !(0.0..=1.0).contains(&equality_fraction) {
        return Err(Error::domain("need K ≥ 1 and a fraction in [0, 1]"));
    }
    let exact = equality_fraction * (k - 1) as f64;
    let equalities = exact.round() as usize;
    let partition = sample_uniform_partition_with_blocks(k, k - equalities, rng)?;
    let means = truth_means(&partition, step);
    Ok(Truth { partition, means, equalities, rounded: (exact - exact.round()).abs() > 1e-9 })
}

/// Centered group means for a partition with successive block gaps of `step`.
pub fn truth_means(p: &Partition, step: f64) -> Vec<f64> {
    let raw: Vec<f64> = p.labels().map(|l| step * l as f64).collect();
    let center = raw.iter().sum::<f64>() / raw.len() as f64;
    raw.iter().map(|m| m - center).collect()
}

/// Unit-variance Gaussian samples around `means`.
pub fn simulate_gaussian<R: Rng + ?Sized>(means: &[f64], n: usize, rng: &mut R) -> Result<GroupedGaussian> {
    let groups: Vec<Vec<f64>> = means
        .iter()
        .map(|&m| {
            (0..n)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(rng);
                    m + z
                })
                .collect()
        })
        .collect();
    GroupedGaussian::from_samples(&groups)
}

/// Claims "different" where the probability of a difference exceeds `threshold`.
pub fn claims_from_pairwise_equal(pairwise_equal: &DMatrix<f64>, threshold: f64) -> DMatrix<bool> {
    let k = pairwise_equal.nrows();
    DMatrix::from_fn(k, k, |i, j| i != j && 1.0 - pairwise_equal[(i, j)] > threshold)
}

/// Claims from pairwise Bayes factors with even prior odds per pair.
pub fn claims_from_log_bf(log_bf01: &DMatrix<f64>, threshold: f64) -> DMatrix<bool> {
    let k = log_bf01.nrows();
    DMatrix::from_fn(k, k, |i, j| i != j && 1.0 / (1.0 + log_bf01[(i, j)].exp()) > threshold)
}

/// Triples `(i, j, l)` claimed `i = j`, `j = l` but `i ≠ l`.
pub fn transitivity_violations(different: &DMatrix<bool>) -> Vec<(usize, usize, usize)> {
    let k = different.nrows();
    let mut out = Vec::new();
    for j in 0..k {
        for i in 0..k {
            for l in i + 1..k {
                if i != j && l != j && !different[(i, j)] && !different[(j, l)] && different[(i, l)] {
                    out.push((i, j, l));
                }
            }
        }
    }
    out
}

/// Scores of one method on one replication.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RepRecord {
    pub k: usize,
    pub n_per_group: usize,
    pub equality_fraction: f64,
    pub rep: usize,
    pub method: String,
    pub truth: String,
    pub equalities: usize,
    pub claimed_differences: usize,
    pub false_differences: usize,
    pub true_difference_pairs: usize,
    pub missed_differences: usize,
    pub failed: bool,
    pub error: String,
    pub runtime_ms: f64,
}

impl RepRecord {
    pub fn any_false_difference(&self) -> bool {
        self.false_differences > 0
    }

    /// Share of truly different pairs claimed equal; `None` when there are none.
    pub fn missed_share(&self) -> Option<f64> {
        (self.true_difference_pairs > 0).then(|| self.missed_differences as f64 / self.true_difference_pairs as f64)
    }
}

/// Aggregate error rates of one method.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: String,
    /// Share of replications with at least one false difference claim.
    pub fwer: f64,
    /// Mean share of truly different pairs claimed equal; `None` under the null truth.
    pub false_null_rate: Option<f64>,
    pub reps_ok: usize,
    pub reps_failed: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyResult {
    pub truths: Vec<Truth>,
    pub records: Vec<RepRecord>,
    pub summaries: Vec<MethodSummary>,
    pub failed_reps: usize,
    /// False when more than 2% of replications failed.
    pub passed: bool,
}

impl StudyResult {
    pub fn summary(&self, method: &str) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.method == method)
    }

    /// Writes one CSV row per (replication, method).
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        for r in &self.records {
            wtr.serialize(r).map_err(|e| Error::Data(format!("writing results: {e}")))?;
        }
        wtr.flush().map_err(|e| Error::Data(format!("writing results: {e}")))?;
        Ok(())
    }
}

fn score(cfg: &StudyConfig, rep: usize, method: &str, truth: &Truth, different: &DMatrix<bool>, runtime_ms: f64) -> RepRecord {
    let k = cfg.k;
    let (mut claimed, mut false_diff, mut true_pairs, mut missed) = (0, 0, 0, 0);
    for i in 0..k {
        for j in i + 1..k {
            let equal = truth.partition.same_block(i, j);
            let diff = different[(i, j)];
            claimed += usize::from(diff);
            false_diff += usize::from(equal && diff);
            true_pairs += usize::from(!equal);
            missed += usize::from(!equal && !diff);
        }
    }
    RepRecord {
        k: cfg.k,
        n_per_group: cfg.n_per_group,
        equality_fraction: cfg.equality_fraction,
        rep,
        method: method.to_string(),
        truth: truth.partition.to_string(),
        equalities: truth.equalities,
        claimed_differences: claimed,
        false_differences: false_diff,
        true_difference_pairs: true_pairs,
        missed_differences: missed,
        failed: false,
        error: String::new(),
        runtime_ms,
    }
}

fn failed_record(cfg: &StudyConfig, rep: usize, method: &str, truth: &Truth, err: &Error) -> RepRecord {
    RepRecord {
        k: cfg.k,
        n_per_group: cfg.n_per_group,
        equality_fraction: cfg.equality_fraction,
        rep,
        method: method.to_string(),
        truth: truth.partition.to_string(),
        equalities: truth.equalities,
        claimed_differences: 0,
        false_differences: 0,
        true_difference_pairs: 0,
        missed_differences: 0,
        failed: true,
        error: err.to_string(),
        runtime_ms: 0.0,
    }
}

/// SplitMix64 finalizer, used to derive per-replication sampler seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn method_names(cfg: &StudyConfig) -> Vec<String> {
    cfg.priors.iter().map(|p| p.to_string()).chain(std::iter::once(PAIRWISE.to_string())).collect()
}

fn run_rep(cfg: &StudyConfig, rep: usize) -> Result<(Truth, Vec<RepRecord>)> {
    let mut rng = chain_rng(cfg.seed, rep as u64);
    let truth = make_truth(cfg.k, cfg.equality_fraction, cfg.effect_step, &mut rng)?;
    let names = method_names(cfg);
    let data: GroupedData = match simulate_gaussian(&truth.means, cfg.n_per_group, &mut rng) {
        Ok(g) => g.into(),
        Err(e) => return Ok((truth.clone(), names.iter().map(|m| failed_record(cfg, rep, m, &truth, &e)).collect())),
    };
    let mut records = Vec::with_capacity(names.len());
    let lik = Likelihood::new(cfg.model, &data)?;
    let table = if cfg.k <= cfg.exact_cap {
        let start = Instant::now();
        match MarginalTable::new(&lik, cfg.exact_cap) {
            Ok(t) => Some((t, start.elapsed().as_secs_f64() * 1e3)),
            Err(e) => {
                records.extend(names.iter().map(|m| failed_record(cfg, rep, m, &truth, &e)));
                return Ok((truth, records));
            }
        }
    } else {
        None
    };
    for (idx, spec) in cfg.priors.iter().enumerate() {
        let name = &names[idx];
        let start = Instant::now();
        let outcome = spec.resolve(cfg.k).and_then(|prior| match &table {
            Some((t, _)) => t.posterior(&prior),
            None => {
                let sampler = SamplerConfig {
                    seed: mix(cfg.seed ^ mix(rep as u64) ^ mix((idx as u64 + 1) << 32)),
                    draw_parameters: false,
                    ..cfg.sampler.clone()
                };
                gibbs_run(&prior, &lik, &sampler)
            }
        });
        let shared = table.as_ref().map_or(0.0, |(_, ms)| *ms);
        match outcome {
            Ok(post) => {
                let claims = claims_from_pairwise_equal(&post.pairwise_equal, cfg.decision_threshold);
                records.push(score(cfg, rep, name, &truth, &claims, shared + start.elapsed().as_secs_f64() * 1e3));
            }
            Err(e @ Error::Numerical(_)) => records.push(failed_record(cfg, rep, name, &truth, &e)),
            Err(e) => return Err(e),
        }
    }
    let start = Instant::now();
    match pairwise_bayes_factors(&cfg.model, &data) {
        Ok(bf) => {
            let claims = claims_from_log_bf(&bf.log_bf, cfg.decision_threshold);
            records.push(score(cfg, rep, PAIRWISE, &truth, &claims, start.elapsed().as_secs_f64() * 1e3));
        }
        Err(e @ Error::Numerical(_)) => records.push(failed_record(cfg, rep, PAIRWISE, &truth, &e)),
        Err(e) => return Err(e),
    }
    Ok((truth, records))
}

/// Runs all replications (in parallel) and aggregates per method.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyResult> {
    cfg.validate()?;
    for p in &cfg.priors {
        p.resolve(cfg.k)?;
    }
    let reps = (0..cfg.reps)
        .into_par_iter()
        .map(|rep| run_rep(cfg, rep))
        .collect::<Result<Vec<_>>>()?;
    let mut truths = Vec::with_capacity(cfg.reps);
    let mut records = Vec::new();
    for (t, r) in reps {
        truths.push(t);
        records.extend(r);
    }
    let failed_reps = (0..cfg.reps).filter(|&rep| records.iter().any(|r| r.rep == rep && r.failed)).count();
    let summaries = method_names(cfg)
        .into_iter()
        .map(|method| {
            let ok: Vec<&RepRecord> = records.iter().filter(|r| r.method == method && !r.failed).collect();
            let n_ok = ok.len();
            let fwer = if n_ok == 0 { f64::NAN } else { ok.iter().filter(|r| r.any_false_difference()).count() as f64 / n_ok as f64 };
            let shares: Vec<f64> = ok.iter().filter_map(|r| r.missed_share()).collect();
            let false_null_rate = (!shares.is_empty()).then(|| shares.iter().sum::<f64>() / shares.len() as f64);
            let reps_failed = records.iter().filter(|r| r.method == method && r.failed).count();
            MethodSummary { method, fwer, false_null_rate, reps_ok: n_ok, reps_failed }
        })
        .collect();
    let passed = failed_reps as f64 <= MAX_FAILURE_RATE * cfg.reps as f64;
    Ok(StudyResult { truths, records, summaries, failed_reps, passed })
}

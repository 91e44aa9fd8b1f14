//! Posterior inference over partitions: exact enumeration for small `K` and
//! collapsed Gibbs sampling otherwise.

pub mod diagnostics;
pub mod gibbs;

use std::collections::HashMap;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::math::log_sum_exp;
use crate::model::PartitionLikelihood;
use crate::partition::{enumerate_partitions_capped, Partition, DEFAULT_ENUMERATION_CAP};
use crate::prior::Prior;

pub use diagnostics::{effective_sample_size, split_rhat};
pub use gibbs::GibbsChain;

/// Retained parameter draws across all chains.
pub const MAX_PARAM_DRAWS: usize = 10_000;

#[derive(Clone, Debug, PartialEq)]
pub struct SamplerConfig {
    /// Sweeps per chain, burn-in included.
    pub iterations: usize,
    pub burnin: usize,
    pub chains: usize,
    pub seed: u64,
    pub thin: usize,
    /// Draw group parameters alongside partitions.
    pub draw_parameters: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig { iterations: 12_000, burnin: 2_000, chains: 4, seed: 1, thin: 1, draw_parameters: true }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations <= self.burnin {
            return Err(Error::domain("iterations must exceed burnin"));
        }
        if self.chains == 0 || self.thin == 0 {
            return Err(Error::domain("chains and thin must be at least 1"));
        }
        Ok(())
    }

    fn kept_per_chain(&self) -> usize {
        (self.iterations - self.burnin).div_ceil(self.thin)
    }
}

/// Convergence diagnostics of a sampler run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostics {
    pub ess_logpost: Vec<f64>,
    pub ess_d: Vec<f64>,
    pub rhat_logpost: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Exact,
    Gibbs,
}

/// Posterior over partitions and derived quantities.
#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorSummary {
    pub k: usize,
    pub method: Method,
    /// Partitions with positive probability, most probable first.
    pub partition_probs: Vec<(Partition, f64)>,
    /// `pairwise_equal[(i, j)]` is the probability that groups `i` and `j` share a block.
    pub pairwise_equal: DMatrix<f64>,
    /// Probability of `d` blocks at index `d − 1`.
    pub size_probs: Vec<f64>,
    /// Model-averaged posterior means of the group parameters.
    pub param_means: Option<Vec<f64>>,
    pub param_draws: Option<Vec<Vec<f64>>>,
    pub diagnostics: Option<Diagnostics>,
    pub seeds: Vec<u64>,
}

impl PosteriorSummary {
    /// Builds the summary from weighted partitions; weights need not be normalized.
    fn from_weights(k: usize, method: Method, weights: Vec<(Partition, f64)>) -> Self {
        let total: f64 = weights.iter().map(|(_, w)| w).sum();
        let mut probs: Vec<(Partition, f64)> = weights
            .into_iter()
            .filter(|(_, w)| *w > 0.0)
            .map(|(p, w)| (p, w / total))
            .collect();
        probs.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let mut pairwise = DMatrix::zeros(k, k);
        let mut size_probs = vec![0.0; k];
        for (p, w) in &probs {
            size_probs[p.n_blocks() - 1] += w;
            for i in 0..k {
                for j in i + 1..k {
                    if p.same_block(i, j) {
                        pairwise[(i, j)] += w;
                    }
                }
            }
        }
        for i in 0..k {
            pairwise[(i, i)] = 1.0;
            for j in i + 1..k {
                pairwise[(j, i)] = pairwise[(i, j)];
            }
        }
        PosteriorSummary {
            k,
            method,
            partition_probs: probs,
            pairwise_equal: pairwise,
            size_probs,
            param_means: None,
            param_draws: None,
            diagnostics: None,
            seeds: Vec::new(),
        }
    }

    pub fn prob(&self, p: &Partition) -> f64 {
        self.partition_probs.iter().find(|(q, _)| q == p).map_or(0.0, |(_, w)| *w)
    }

    pub fn top(&self, m: usize) -> &[(Partition, f64)] {
        &self.partition_probs[..m.min(self.partition_probs.len())]
    }

    /// Total-variation distance between two partition distributions.
    pub fn tv_distance(&self, other: &PosteriorSummary) -> f64 {
        let mut all: HashMap<&Partition, (f64, f64)> = HashMap::new();
        for (p, w) in &self.partition_probs {
            all.entry(p).or_default().0 = *w;
        }
        for (p, w) in &other.partition_probs {
            all.entry(p).or_default().1 = *w;
        }
        0.5 * all.values().map(|(a, b)| (a - b).abs()).sum::<f64>()
    }
}

/// Log marginal likelihoods of every partition of `K` groups, reusable across priors.
#[derive(Clone, Debug)]
pub struct MarginalTable {
    k: usize,
    partitions: Vec<Partition>,
    log_marginals: Vec<f64>,
}

impl MarginalTable {
    pub fn new(lik: &dyn PartitionLikelihood, cap: usize) -> Result<Self> {
        let k = lik.n_groups();
        let partitions: Vec<Partition> = enumerate_partitions_capped(k, cap)
            .map_err(|e| match e {
                Error::Capacity { requested, limit, .. } => Error::capacity(
                    "groups for exact enumeration (use the Gibbs sampler instead)",
                    requested,
                    limit,
                ),
                other => other,
            })?
            .collect();
        let log_marginals = partitions
            .par_iter()
            .map(|p| lik.log_marginal(p))
            .collect::<Result<Vec<_>>>()?;
        Ok(MarginalTable { k, partitions, log_marginals })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn partitions(&self) -> &[Partition] {
        &self.partitions
    }

    pub fn log_marginals(&self) -> &[f64] {
        &self.log_marginals
    }

    /// Exact posterior under `prior`.
    pub fn posterior(&self, prior: &Prior) -> Result<PosteriorSummary> {
        prior.validate()?;
        let logs: Vec<f64> = self
            .partitions
            .iter()
            .zip(&self.log_marginals)
            .map(|(p, lm)| prior.log_pmf(p) + lm)
            .collect();
        let norm = log_sum_exp(&logs);
        if !norm.is_finite() {
            return Err(Error::Numerical("posterior normalizer is not finite".into()));
        }
        let weights = self.partitions.iter().cloned().zip(logs.iter().map(|l| (l - norm).exp())).collect();
        Ok(PosteriorSummary::from_weights(self.k, Method::Exact, weights))
    }
}

/// Exact posterior by enumerating all partitions (`K ≤ 12`).
pub fn exact_posterior(prior: &Prior, lik: &dyn PartitionLikelihood) -> Result<PosteriorSummary> {
    exact_posterior_capped(prior, lik, DEFAULT_ENUMERATION_CAP)
}

pub fn exact_posterior_capped(prior: &Prior, lik: &dyn PartitionLikelihood, cap: usize) -> Result<PosteriorSummary> {
    let table = MarginalTable::new(lik, cap)?;
    let mut summary = table.posterior(prior)?;
    summary.param_means = model_averaged_means(&summary, lik)?;
    Ok(summary)
}

fn model_averaged_means(summary: &PosteriorSummary, lik: &dyn PartitionLikelihood) -> Result<Option<Vec<f64>>> {
    let parts: Vec<Option<Vec<f64>>> = summary
        .partition_probs
        .par_iter()
        .filter(|(_, w)| *w > 1e-15)
        .map(|(p, w)| lik.parameter_means(p).transpose().map(|m| m.map(|v| v.into_iter().map(|x| x * w).collect())))
        .collect::<Result<_>>()?;
    let mut acc: Option<Vec<f64>> = None;
    for part in parts {
        let Some(v) = part else { return Ok(None) };
        match &mut acc {
            Some(a) => a.iter_mut().zip(v).for_each(|(x, y)| *x += y),
            None => acc = Some(v),
        }
    }
    let mass: f64 = summary.partition_probs.iter().filter(|(_, w)| *w > 1e-15).map(|(_, w)| w).sum();
    Ok(acc.map(|a| a.into_iter().map(|x| x / mass).collect()))
}

/// Output of one chain before merging.
#[derive(Clone, Debug)]
pub struct ChainOutput {
    pub counts: HashMap<Partition, u64>,
    pub trace_logpost: Vec<f64>,
    pub trace_d: Vec<f64>,
    pub param_draws: Vec<Vec<f64>>,
}

fn run_chain(prior: &Prior, lik: &dyn PartitionLikelihood, cfg: &SamplerConfig, chain: usize) -> Result<ChainOutput> {
    let mut gc = GibbsChain::from_prior(*prior, lik, cfg.seed, chain as u64)?;
    let kept = cfg.kept_per_chain();
    let draw_cap = MAX_PARAM_DRAWS.div_ceil(cfg.chains);
    let draw_stride = kept.div_ceil(draw_cap).max(1);
    let mut out = ChainOutput {
        counts: HashMap::new(),
        trace_logpost: Vec::with_capacity(kept),
        trace_d: Vec::with_capacity(kept),
        param_draws: Vec::new(),
    };
    let mut kept_index = 0;
    for it in 0..cfg.iterations {
        gc.sweep()?;
        if it < cfg.burnin || !(it - cfg.burnin).is_multiple_of(cfg.thin) {
            continue;
        }
        let p = gc.partition();
        out.trace_logpost.push(gc.log_posterior());
        out.trace_d.push(p.n_blocks() as f64);
        if cfg.draw_parameters && kept_index % draw_stride == 0 && out.param_draws.len() < draw_cap {
            let rng: &mut dyn rand::RngCore = gc.rng();
            if let Some(draw) = lik.draw_parameters(&p, rng) {
                out.param_draws.push(draw?);
            }
        }
        kept_index += 1;
        *out.counts.entry(p).or_default() += 1;
    }
    Ok(out)
}

/// Runs the collapsed Gibbs sampler with `cfg.chains` independent chains in
/// parallel and merges them.
pub fn gibbs_run(prior: &Prior, lik: &dyn PartitionLikelihood, cfg: &SamplerConfig) -> Result<PosteriorSummary> {
    cfg.validate()?;
    prior.validate()?;
    let k = lik.n_groups();
    if k == 0 {
        return Err(Error::domain("no groups"));
    }
    if k == 1 {
        let mut s = PosteriorSummary::from_weights(1, Method::Gibbs, vec![(Partition::null(1), 1.0)]);
        s.seeds = vec![cfg.seed];
        return Ok(s);
    }
    let chains = (0..cfg.chains)
        .into_par_iter()
        .map(|c| run_chain(prior, lik, cfg, c))
        .collect::<Result<Vec<_>>>()?;
    let mut s = summarize(k, &chains);
    s.seeds = vec![cfg.seed];
    Ok(s)
}

/// Merges chain outputs in chain order.
pub fn summarize(k: usize, chains: &[ChainOutput]) -> PosteriorSummary {
    let mut merged: HashMap<Partition, u64> = HashMap::new();
    for c in chains {
        for (p, n) in &c.counts {
            *merged.entry(p.clone()).or_default() += n;
        }
    }
    // Fixed order so the normalizing sum is reproducible.
    let mut weights: Vec<(Partition, f64)> = merged.into_iter().map(|(p, n)| (p, n as f64)).collect();
    weights.sort_by(|a, b| a.0.cmp(&b.0));
    let mut s = PosteriorSummary::from_weights(k, Method::Gibbs, weights);
    let draws: Vec<Vec<f64>> = chains.iter().flat_map(|c| c.param_draws.iter().cloned()).collect();
    if !draws.is_empty() {
        let mut means = vec![0.0; k];
        for d in &draws {
            for (m, v) in means.iter_mut().zip(d) {
                *m += v / draws.len() as f64;
            }
        }
        s.param_means = Some(means);
        s.param_draws = Some(draws);
    }
    let logpost: Vec<Vec<f64>> = chains.iter().map(|c| c.trace_logpost.clone()).collect();
    s.diagnostics = Some(Diagnostics {
        ess_logpost: chains.iter().map(|c| effective_sample_size(&c.trace_logpost)).collect(),
        ess_d: chains.iter().map(|c| effective_sample_size(&c.trace_d)).collect(),
        rhat_logpost: split_rhat(&logpost),
    });
    s
}

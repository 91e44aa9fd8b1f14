//! Collapsed Gibbs sampling over membership vectors.
//!
//! Each site update holds the other labels fixed and considers every label in
//! `0..K`, so an element can join any block or open a new one. For
//! block-additive models the likelihood change of a move touches one block
//! and costs O(1); otherwise marginals are cached by canonical partition.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::math::{ln_falling, sample_log_categorical};
use crate::model::{PartitionLikelihood, SuffStats};
use crate::partition::{canonicalize_labels, Partition};
use crate::prior::Prior;

/// Entries kept in a chain's marginal-likelihood cache before it is cleared.
const CACHE_LIMIT: usize = 1 << 18;

/// One chain of the sampler.
pub struct GibbsChain<'a> {
    prior: Prior,
    lik: &'a dyn PartitionLikelihood,
    k: usize,
    labels: Vec<usize>,
    sizes: Vec<usize>,
    n_blocks: usize,
    /// `Σ ln Γ(|c|)` over non-empty blocks.
    sum_ln_gamma: f64,
    /// Membership-vector prior by block count, excluding the size term.
    prior_by_d: Vec<f64>,
    ln_int: Vec<f64>,
    stats: Vec<SuffStats>,
    block_lm: Vec<f64>,
    cache: HashMap<Partition, f64>,
    current_lm: f64,
    rng: ChaCha8Rng,
    weights: Vec<f64>,
}

impl<'a> GibbsChain<'a> {
    /// Starts from a prior draw with labels assigned by a random injection.
    pub fn from_prior(prior: Prior, lik: &'a dyn PartitionLikelihood, seed: u64, stream: u64) -> Result<Self> {
        let mut rng = chain_rng(seed, stream);
        let k = lik.n_groups();
        let p = prior.sample_partition(k, &mut rng)?;
        let mut perm: Vec<usize> = (0..k).collect();
        perm.shuffle(&mut rng);
        let labels = p.labels().map(|l| perm[l]).collect();
        Self::build(prior, lik, labels, rng)
    }

    /// Starts from the given membership labels (each in `0..K`).
    pub fn with_labels(
        prior: Prior,
        lik: &'a dyn PartitionLikelihood,
        labels: Vec<usize>,
        seed: u64,
        stream: u64,
    ) -> Result<Self> {
        let k = lik.n_groups();
        if labels.len() != k || labels.iter().any(|&l| l >= k) {
            return Err(Error::domain("initial labels must be K values in 0..K"));
        }
        Self::build(prior, lik, labels, chain_rng(seed, stream))
    }

    fn build(prior: Prior, lik: &'a dyn PartitionLikelihood, labels: Vec<usize>, rng: ChaCha8Rng) -> Result<Self> {
        prior.validate()?;
        let k = labels.len();
        let mut prior_by_d = vec![f64::NEG_INFINITY; k + 1];
        for (d, slot) in prior_by_d.iter_mut().enumerate().skip(1) {
            *slot = prior.log_pmf_parts(k, d, 0.0) - ln_falling(k, d);
        }
        let ln_int: Vec<f64> = (0..=k).map(|i| (i as f64).ln()).collect();
        let mut chain = GibbsChain {
            prior,
            lik,
            k,
            labels,
            sizes: vec![0; k],
            n_blocks: 0,
            sum_ln_gamma: 0.0,
            prior_by_d,
            ln_int,
            stats: vec![SuffStats::default(); k],
            block_lm: vec![0.0; k],
            cache: HashMap::new(),
            current_lm: 0.0,
            rng,
            weights: vec![0.0; k],
        };
        chain.refresh()?;
        Ok(chain)
    }

    /// Recomputes block bookkeeping from the labels.
    fn refresh(&mut self) -> Result<()> {
        self.sizes.iter_mut().for_each(|s| *s = 0);
        for &l in &self.labels {
            self.sizes[l] += 1;
        }
        self.n_blocks = self.sizes.iter().filter(|&&s| s > 0).count();
        self.sum_ln_gamma = self.sizes.iter().filter(|&&s| s > 1).map(|&s| (1..s).map(|i| self.ln_int[i]).sum::<f64>()).sum();
        if let Some(add) = self.lik.additive() {
            let gs = add.group_stats();
            self.stats.iter_mut().for_each(|s| *s = SuffStats::default());
            for (j, &l) in self.labels.iter().enumerate() {
                self.stats[l] += gs[j];
            }
            for l in 0..self.k {
                self.block_lm[l] = if self.sizes[l] > 0 { add.block_log_marginal(&self.stats[l]) } else { 0.0 };
            }
            self.current_lm = self.block_lm.iter().sum();
        } else {
            let p = self.partition();
            self.current_lm = self.cached_marginal(p)?;
        }
        Ok(())
    }

    fn cached_marginal(&mut self, p: Partition) -> Result<f64> {
        if let Some(&v) = self.cache.get(&p) {
            return Ok(v);
        }
        let v = self.lik.log_marginal(&p)?;
        if self.cache.len() >= CACHE_LIMIT {
            self.cache.clear();
        }
        self.cache.insert(p, v);
        Ok(v)
    }

    pub fn partition(&self) -> Partition {
        canonicalize_labels(&self.labels)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn log_marginal(&self) -> f64 {
        self.current_lm
    }

    /// Log posterior of the current partition, up to a constant.
    pub fn log_posterior(&self) -> f64 {
        let prior = self.prior.log_pmf_parts(self.k, self.n_blocks, self.sum_ln_gamma);
        prior + self.current_lm
    }

    pub(crate) fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// One systematic scan over all sites.
    pub fn sweep(&mut self) -> Result<()> {
        for j in 0..self.k {
            self.update_site(j)?;
        }
        // Additive statistics drift slightly under repeated add/subtract.
        if self.lik.additive().is_some() {
            self.refresh()?;
        }
        Ok(())
    }

    fn update_site(&mut self, j: usize) -> Result<()> {
        let old = self.labels[j];
        let is_dp = matches!(self.prior, Prior::DirichletProcess { .. });
        // Remove j.
        let s_old = self.sizes[old];
        self.sizes[old] -= 1;
        if s_old == 1 {
            self.n_blocks -= 1;
        } else {
            self.sum_ln_gamma -= self.ln_int[s_old - 1];
        }
        let additive = self.lik.additive();
        if let Some(add) = additive {
            let sj = add.group_stats()[j];
            self.stats[old] -= sj;
            self.block_lm[old] = if self.sizes[old] > 0 { add.block_log_marginal(&self.stats[old]) } else { 0.0 };
            let alone = add.block_log_marginal(&sj);
            for c in 0..self.k {
                let sz = self.sizes[c];
                let d = self.n_blocks + usize::from(sz == 0);
                let mut w = self.prior_by_d[d];
                if is_dp {
                    w += self.sum_ln_gamma + if sz > 0 { self.ln_int[sz] } else { 0.0 };
                }
                w += if sz == 0 { alone } else { add.block_log_marginal(&(self.stats[c] + sj)) - self.block_lm[c] };
                self.weights[c] = w;
            }
        } else {
            let mut empty_value: Option<f64> = None;
            for c in 0..self.k {
                let sz = self.sizes[c];
                let d = self.n_blocks + usize::from(sz == 0);
                let mut w = self.prior_by_d[d];
                if is_dp {
                    w += self.sum_ln_gamma + if sz > 0 { self.ln_int[sz] } else { 0.0 };
                }
                let lm = match (sz, empty_value) {
                    (0, Some(v)) => v,
                    _ => {
                        self.labels[j] = c;
                        let p = self.partition();
                        let v = self.cached_marginal(p)?;
                        if sz == 0 {
                            empty_value = Some(v);
                        }
                        v
                    }
                };
                self.weights[c] = w + lm;
            }
        }
        if self.weights.iter().any(|w| w.is_nan() || *w == f64::INFINITY) || self.weights.iter().all(|w| *w == f64::NEG_INFINITY) {
            return Err(Error::Numerical(format!(
                "non-finite Gibbs weights at site {j} with labels {:?}: {:?}",
                self.labels, self.weights
            )));
        }
        let c = sample_log_categorical(&self.weights, &mut self.rng);
        self.labels[j] = c;
        let s_new = self.sizes[c];
        self.sizes[c] += 1;
        if s_new == 0 {
            self.n_blocks += 1;
        } else {
            self.sum_ln_gamma += self.ln_int[s_new];
        }
        if let Some(add) = additive {
            self.stats[c] += add.group_stats()[j];
            self.block_lm[c] = add.block_log_marginal(&self.stats[c]);
            self.current_lm = self.block_lm.iter().sum();
        } else {
            let p = self.partition();
            self.current_lm = self.cached_marginal(p)?;
        }
        Ok(())
    }
}

pub(crate) fn chain_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

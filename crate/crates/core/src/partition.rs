//! Canonical set partitions of `K` groups and the non-canonical membership
//! vectors used by the Gibbs sampler.
//!
//! A [`Partition`] stores its restricted-growth string: the first label is 0
//! and every later label is at most one more than the running maximum. Two
//! groups are in the same block iff their labels agree. The text form is the
//! comma-separated label list, e.g. `0,1,1,0`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::combinatorics::{log_bell, log_r_bell, log_r_stirling2, BigCount};
use crate::error::{Error, Result};
use crate::math::sample_log_categorical;

/// Default cap on the number of groups for exhaustive enumeration.
pub const DEFAULT_ENUMERATION_CAP: usize = 12;

/// Largest number of groups a partition may have (labels are stored as `u8`).
pub const MAX_GROUPS: usize = 255;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    rgs: Box<[u8]>,
    n_blocks: usize,
}

impl Partition {
    /// Builds a partition from a label vector that must already be a
    /// restricted-growth string.
    pub fn from_rgs(labels: &[usize]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::domain("a partition needs at least one group"));
        }
        if labels.len() > MAX_GROUPS {
            return Err(Error::capacity("number of groups", labels.len(), MAX_GROUPS));
        }
        let mut next = 0usize;
        for (i, &l) in labels.iter().enumerate() {
            if l > next {
                return Err(Error::domain(format!(
                    "label {l} at position {i} breaks restricted growth"
                )));
            }
            if l == next {
                next += 1;
            }
        }
        Ok(Partition {
            rgs: labels.iter().map(|&l| l as u8).collect(),
            n_blocks: next,
        })
    }

    fn from_raw(rgs: Box<[u8]>, n_blocks: usize) -> Self {
        debug_assert!(is_restricted_growth(&rgs));
        Partition { rgs, n_blocks }
    }

    /// The single-block partition.
    pub fn null(k: usize) -> Self {
        Partition::from_raw(vec![0u8; k].into_boxed_slice(), 1)
    }

    /// Every group in its own block.
    pub fn full(k: usize) -> Self {
        Partition::from_raw((0..k).map(|i| i as u8).collect(), k)
    }

    pub fn k(&self) -> usize {
        self.rgs.len()
    }

    pub fn n_blocks(&self) -> usize {
        self.n_blocks
    }

    pub fn label(&self, group: usize) -> usize {
        self.rgs[group] as usize
    }

    pub fn labels(&self) -> impl Iterator<Item = usize> + '_ {
        self.rgs.iter().map(|&l| l as usize)
    }

    pub fn rgs(&self) -> &[u8] {
        &self.rgs
    }

    pub fn same_block(&self, i: usize, j: usize) -> bool {
        self.rgs[i] == self.rgs[j]
    }

    /// Block sizes indexed by block label.
    pub fn block_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_blocks];
        for &l in self.rgs.iter() {
            sizes[l as usize] += 1;
        }
        sizes
    }

    /// Members of each block, in block-label order.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut blocks = vec![Vec::new(); self.n_blocks];
        for (i, &l) in self.rgs.iter().enumerate() {
            blocks[l as usize].push(i);
        }
        blocks
    }

    /// Applies a permutation of groups: group `i` of the result takes the
    /// label group `perm[i]` had here. The result is canonicalized.
    pub fn permute(&self, perm: &[usize]) -> Partition {
        let labels: Vec<usize> = perm.iter().map(|&p| self.rgs[p] as usize).collect();
        canonicalize(&MembershipVector { labels })
    }

    /// Restricts the partition to a subset of groups, canonicalizing the result.
    pub fn restrict(&self, groups: &[usize]) -> Partition {
        self.permute(groups)
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, l) in self.rgs.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl FromStr for Partition {
    type Err = Error;

    /// Parses the comma-separated text form; the labels are canonicalized.
    fn from_str(s: &str) -> Result<Self> {
        let labels = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|e| Error::Data(format!("bad partition label {t:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let gamma = MembershipVector::new(labels)?;
        Ok(canonicalize(&gamma))
    }
}

fn is_restricted_growth(labels: &[u8]) -> bool {
    let mut next = 0u8;
    for &l in labels {
        if l > next {
            return false;
        }
        if l == next {
            next += 1;
        }
    }
    true
}

/// A label vector whose entries lie in `0..K`, not necessarily canonical.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MembershipVector {
    pub labels: Vec<usize>,
}

impl MembershipVector {
    pub fn new(labels: Vec<usize>) -> Result<Self> {
        let k = labels.len();
        if k == 0 {
            return Err(Error::domain("membership vector must be non-empty"));
        }
        if k > MAX_GROUPS {
            return Err(Error::capacity("number of groups", k, MAX_GROUPS));
        }
        if let Some(bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::domain(format!("label {bad} is outside 0..{k}")));
        }
        Ok(MembershipVector { labels })
    }

    pub fn k(&self) -> usize {
        self.labels.len()
    }
}

/// First-occurrence relabeling of a membership vector.
pub fn canonicalize(gamma: &MembershipVector) -> Partition {
    canonicalize_labels(&gamma.labels)
}

pub(crate) fn canonicalize_labels(labels: &[usize]) -> Partition {
    let k = labels.len();
    let max_label = labels.iter().copied().max().unwrap_or(0);
    let mut map = vec![u8::MAX; max_label.max(k) + 1];
    let mut next = 0u8;
    let rgs: Box<[u8]> = labels
        .iter()
        .map(|&l| {
            if map[l] == u8::MAX {
                map[l] = next;
                next += 1;
            }
            map[l]
        })
        .collect();
    Partition::from_raw(rgs, next as usize)
}

/// Number of label vectors over `0..K` inducing `p`: `K! / (K − d)!`.
pub fn count_representations(p: &Partition) -> BigCount {
    let k = p.k() as u64;
    let d = p.n_blocks() as u64;
    let mut acc = num_bigint::BigUint::from(1u32);
    for i in 0..d {
        acc *= k - i;
    }
    BigCount(acc)
}

/// `ln(K! / (K − d)!)`.
pub fn log_count_representations(p: &Partition) -> f64 {
    crate::math::ln_falling(p.k(), p.n_blocks())
}

/// Iterator over partitions of `K` groups in lexicographic restricted-growth
/// order, optionally restricted to exactly `d` blocks.
#[derive(Clone, Debug)]
pub struct PartitionIter {
    rgs: Vec<u8>,
    /// `prefix_max[i]` = max of `rgs[0..=i]`.
    prefix_max: Vec<u8>,
    blocks: Option<usize>,
    started: bool,
    done: bool,
}

impl PartitionIter {
    fn new(k: usize, blocks: Option<usize>) -> Self {
        let mut it = PartitionIter {
            rgs: vec![0; k],
            prefix_max: vec![0; k],
            blocks,
            started: false,
            done: false,
        };
        match blocks {
            Some(d) if d == 0 || d > k => it.done = true,
            Some(d) => it.fill_min(1, 0, d),
            None => {}
        }
        it
    }

    /// Lexicographically smallest valid suffix starting at `from`, given the
    /// running maximum before it, such that exactly `d` blocks are used.
    fn fill_min(&mut self, from: usize, mut max: u8, d: usize) {
        let k = self.rgs.len();
        let have = max as usize + 1;
        let need = d - have;
        let zeros_until = k - need;
        for i in from..k {
            if i >= zeros_until {
                max += 1;
                self.rgs[i] = max;
            } else {
                self.rgs[i] = 0;
            }
            self.prefix_max[i] = max;
        }
    }

    fn advance(&mut self) -> bool {
        let k = self.rgs.len();
        for i in (1..k).rev() {
            let prev_max = self.prefix_max[i - 1];
            let cur = self.rgs[i];
            let limit = match self.blocks {
                Some(d) => (prev_max + 1).min(d as u8 - 1),
                None => prev_max + 1,
            };
            if cur >= limit {
                continue;
            }
            let new = cur + 1;
            let new_max = prev_max.max(new);
            if let Some(d) = self.blocks {
                let remaining = k - i - 1;
                if d > new_max as usize + 1 + remaining {
                    continue;
                }
            }
            self.rgs[i] = new;
            self.prefix_max[i] = new_max;
            match self.blocks {
                Some(d) => self.fill_min(i + 1, new_max, d),
                None => {
                    for j in (i + 1)..k {
                        self.rgs[j] = 0;
                        self.prefix_max[j] = new_max;
                    }
                }
            }
            return true;
        }
        false
    }
}

impl Iterator for PartitionIter {
    type Item = Partition;

    fn next(&mut self) -> Option<Partition> {
        if self.done {
            return None;
        }
        if self.started {
            if !self.advance() {
                self.done = true;
                return None;
            }
        } else {
            self.started = true;
        }
        let n_blocks = *self.prefix_max.last().unwrap() as usize + 1;
        Some(Partition::from_raw(self.rgs.clone().into_boxed_slice(), n_blocks))
    }
}

fn check_enumeration(k: usize, cap: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::domain("cannot enumerate partitions of zero groups"));
    }
    if k > cap {
        return Err(Error::capacity("number of groups for enumeration", k, cap));
    }
    Ok(())
}

/// All partitions of `k` groups, each exactly once, in lexicographic order.
pub fn enumerate_partitions(k: usize) -> Result<PartitionIter> {
    enumerate_partitions_capped(k, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_partitions_capped(k: usize, cap: usize) -> Result<PartitionIter> {
    check_enumeration(k, cap)?;
    Ok(PartitionIter::new(k, None))
}

/// All partitions of `k` groups into exactly `d` blocks.
pub fn enumerate_partitions_with_blocks(k: usize, d: usize) -> Result<PartitionIter> {
    check_enumeration(k, DEFAULT_ENUMERATION_CAP)?;
    if d == 0 || d > k {
        return Err(Error::domain(format!("block count {d} outside 1..={k}")));
    }
    Ok(PartitionIter::new(k, Some(d)))
}

/// Draws a partition uniformly from all partitions of `k` groups.
///
/// Element `j + 1` opens a new block with weight `B(m, b + 1)` and joins
/// each existing block with weight `B(m, b)`, where `B` is the r-Bell number,
/// `b` the current block count and `m` the number of elements still to place.
pub fn sample_uniform_partition<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Result<Partition> {
    if k == 0 {
        return Err(Error::domain("k must be positive"));
    }
    log_bell(k)?;
    let mut labels = vec![0usize; k];
    let mut blocks = 1usize;
    let mut weights = Vec::with_capacity(k + 1);
    for j in 1..k {
        let remaining = k - j - 1;
        let join = log_r_bell(remaining, blocks)?.ln();
        let open = log_r_bell(remaining, blocks + 1)?.ln();
        weights.clear();
        weights.extend(std::iter::repeat_n(join, blocks));
        weights.push(open);
        let choice = sample_log_categorical(&weights, rng);
        labels[j] = choice;
        if choice == blocks {
            blocks += 1;
        }
    }
    Ok(canonicalize_labels(&labels))
}

/// Draws a partition uniformly from the `S(k, d)` partitions with `d` blocks.
pub fn sample_uniform_partition_with_blocks<R: Rng + ?Sized>(
    k: usize,
    d: usize,
    rng: &mut R,
) -> Result<Partition> {
    if k == 0 || d == 0 || d > k {
        return Err(Error::domain(format!("need 1 ≤ d ≤ k, got d = {d}, k = {k}")));
    }
    // Completions of `m` elements onto `b` labeled blocks ending with `d`
    // blocks number R(m + b, d, b) in r-Stirling terms.
    let mut labels = vec![0usize; k];
    let mut blocks = 1usize;
    let mut weights = Vec::with_capacity(k + 1);
    for j in 1..k {
        let remaining = k - j - 1;
        let join = log_r_stirling2(remaining + blocks, d, blocks)?.ln();
        let open = if blocks < d {
            log_r_stirling2(remaining + blocks + 1, d, blocks + 1)?.ln()
        } else {
            f64::NEG_INFINITY
        };
        weights.clear();
        weights.extend(std::iter::repeat_n(join, blocks));
        weights.push(open);
        let choice = sample_log_categorical(&weights, rng);
        labels[j] = choice;
        if choice == blocks {
            blocks += 1;
        }
    }
    Ok(canonicalize_labels(&labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::{bell, stirling2};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    fn mv(labels: &[usize]) -> MembershipVector {
        MembershipVector::new(labels.to_vec()).unwrap()
    }

    #[test]
    fn canonicalize_examples() {
        // (3,1,1) in 1-based labels, shifted to 0-based.
        assert_eq!(canonicalize(&mv(&[2, 0, 0])).to_string(), "0,1,1");
        assert_eq!(canonicalize(&mv(&[0, 0, 0])).to_string(), "0,0,0");
        assert_eq!(canonicalize(&mv(&[2, 0, 1])).to_string(), "0,1,2");
    }

    #[test]
    fn membership_vector_rejects_out_of_range() {
        assert!(MembershipVector::new(vec![0, 3, 1]).is_err());
        assert!(MembershipVector::new(vec![]).is_err());
        assert!(Partition::from_rgs(&[0, 2]).is_err());
        assert!(Partition::from_rgs(&[1]).is_err());
    }

    #[test]
    fn text_form_round_trip() {
        let p: Partition = "0,1,1,0".parse().unwrap();
        assert_eq!(p.to_string(), "0,1,1,0");
        assert_eq!(p.n_blocks(), 2);
        let q: Partition = "3,1,1,3".parse().unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn representation_counts() {
        let p = Partition::from_rgs(&[0, 0, 1]).unwrap();
        assert_eq!(count_representations(&p), 6);
        // Brute force: label vectors over 0..3 inducing {{1,2},{3}}.
        let mut hits = 0;
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    if canonicalize(&mv(&[a, b, c])) == p {
                        hits += 1;
                    }
                }
            }
        }
        assert_eq!(hits, 6);
        assert_eq!(count_representations(&Partition::full(3)), 6);
        assert_eq!(count_representations(&Partition::null(5)), 5);
    }

    #[test]
    fn representation_counts_cover_all_label_vectors() {
        for k in 1..=5usize {
            let mut by_partition: HashMap<Partition, u64> = HashMap::new();
            let total = k.pow(k as u32);
            for code in 0..total {
                let mut c = code;
                let labels: Vec<usize> = (0..k)
                    .map(|_| {
                        let l = c % k;
                        c /= k;
                        l
                    })
                    .collect();
                *by_partition.entry(canonicalize(&mv(&labels))).or_default() += 1;
            }
            assert_eq!(by_partition.len() as u64, bell(k).unwrap().to_f64() as u64);
            for p in enumerate_partitions(k).unwrap() {
                assert_eq!(count_representations(&p), by_partition[&p]);
            }
        }
    }

    #[test]
    fn enumeration_counts_and_order() {
        assert_eq!(enumerate_partitions(5).unwrap().count(), 52);
        assert_eq!(enumerate_partitions(1).unwrap().count(), 1);
        assert_eq!(enumerate_partitions(4).unwrap().count(), 15);
        for k in 1..=9 {
            let all: Vec<Partition> = enumerate_partitions(k).unwrap().collect();
            assert_eq!(all.len() as f64, bell(k).unwrap().to_f64());
            for w in all.windows(2) {
                assert!(w[0].rgs() < w[1].rgs(), "not strictly increasing");
            }
        }
        let first: Vec<String> = enumerate_partitions(3).unwrap().map(|p| p.to_string()).collect();
        assert_eq!(first, ["0,0,0", "0,0,1", "0,1,0", "0,1,1", "0,1,2"]);
    }

    #[test]
    fn enumeration_with_blocks() {
        assert_eq!(enumerate_partitions_with_blocks(3, 2).unwrap().count(), 3);
        assert_eq!(enumerate_partitions_with_blocks(6, 6).unwrap().count(), 1);
        let filtered: Vec<Partition> = enumerate_partitions(5)
            .unwrap()
            .filter(|p| p.n_blocks() == 3)
            .collect();
        let direct: Vec<Partition> = enumerate_partitions_with_blocks(5, 3).unwrap().collect();
        assert_eq!(direct.len(), 25);
        assert_eq!(direct, filtered);
        for k in 1..=9 {
            for d in 1..=k {
                let n = enumerate_partitions_with_blocks(k, d).unwrap().count();
                assert_eq!(n as f64, stirling2(k, d).unwrap().to_f64(), "k={k} d={d}");
            }
        }
    }

    #[test]
    fn enumeration_cap() {
        assert!(matches!(enumerate_partitions(13), Err(Error::Capacity { .. })));
        assert!(enumerate_partitions_capped(13, 13).is_ok());
    }

    #[test]
    fn uniform_sampling_frequencies() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let draws = 100_000;
        let mut counts: HashMap<Partition, usize> = HashMap::new();
        for _ in 0..draws {
            *counts.entry(sample_uniform_partition(3, &mut rng).unwrap()).or_default() += 1;
        }
        assert_eq!(counts.len(), 5);
        // Chi-square against the uniform law on 5 cells, 4 degrees of freedom.
        let expected = draws as f64 / 5.0;
        let chi2: f64 = counts
            .values()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        assert!(chi2 < 18.47, "chi2 = {chi2}"); // 0.999 quantile
        for &c in counts.values() {
            assert!((c as f64 / draws as f64 - 0.2).abs() < 0.01);
        }
    }

    #[test]
    fn constrained_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            assert_eq!(sample_uniform_partition_with_blocks(6, 6, &mut rng).unwrap(), Partition::full(6));
            assert_eq!(sample_uniform_partition_with_blocks(6, 1, &mut rng).unwrap(), Partition::null(6));
        }
        let draws = 75_000;
        let mut counts: HashMap<Partition, usize> = HashMap::new();
        for _ in 0..draws {
            let p = sample_uniform_partition_with_blocks(5, 3, &mut rng).unwrap();
            assert_eq!(p.n_blocks(), 3);
            *counts.entry(p).or_default() += 1;
        }
        assert_eq!(counts.len(), 25);
        let expected = draws as f64 / 25.0;
        let chi2: f64 = counts
            .values()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        assert!(chi2 < 51.18, "chi2 = {chi2}"); // 0.999 quantile, 24 df
    }

    #[test]
    fn permutation_invariance_of_canonical_form() {
        let gamma = mv(&[4, 4, 1, 0, 1]);
        let p = canonicalize(&gamma);
        let relabel = [3, 0, 4, 2, 1];
        let moved = MembershipVector::new(gamma.labels.iter().map(|&l| relabel[l]).collect()).unwrap();
        assert_eq!(canonicalize(&moved), p);
        assert_eq!(canonicalize(&mv(&p.labels().collect::<Vec<_>>())), p);
    }
}

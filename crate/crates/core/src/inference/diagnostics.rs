//! Effective sample size and split R-hat for scalar traces.

/// ESS by Geyer's initial monotone sequence estimator. A constant trace
/// returns its length.
pub fn effective_sample_size(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 4 {
        return n as f64;
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let autocov = |lag: usize| -> f64 {
        centered[..n - lag].iter().zip(&centered[lag..]).map(|(a, b)| a * b).sum::<f64>() / n as f64
    };
    let c0 = autocov(0);
    if !(c0 > 0.0) {
        return n as f64;
    }
    // Sums of adjacent autocorrelation pairs, truncated at the first
    // non-positive pair and forced to be nonincreasing.
    let mut tau = -1.0;
    let mut prev_pair = f64::INFINITY;
    let mut lag = 0;
    while lag + 1 < n {
        let pair = (autocov(lag) + autocov(lag + 1)) / c0;
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev_pair);
        tau += 2.0 * pair;
        prev_pair = pair;
        lag += 2;
    }
    // Antithetic traces are capped at n·log10(n).
    let tau = tau.max(1.0 / (n as f64).log10());
    n as f64 / tau
}

/// Split-chain potential scale reduction. Each chain is cut in half.
pub fn split_rhat(chains: &[Vec<f64>]) -> f64 {
    let halves: Vec<&[f64]> = chains
        .iter()
        .filter(|c| c.len() >= 4)
        .flat_map(|c| {
            let h = c.len() / 2;
            [&c[..h], &c[c.len() - h..]]
        })
        .collect();
    if halves.len() < 2 {
        return f64::NAN;
    }
    let n = halves.iter().map(|h| h.len()).min().unwrap_or(0) as f64;
    let means: Vec<f64> = halves.iter().map(|h| h.iter().sum::<f64>() / h.len() as f64).collect();
    let vars: Vec<f64> = halves
        .iter()
        .zip(&means)
        .map(|(h, m)| h.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (h.len() as f64 - 1.0))
        .collect();
    let m = halves.len() as f64;
    let grand = means.iter().sum::<f64>() / m;
    let b = n / (m - 1.0) * means.iter().map(|mu| (mu - grand).powi(2)).sum::<f64>();
    let w = vars.iter().sum::<f64>() / m;
    if w == 0.0 {
        return if b == 0.0 { 1.0 } else { f64::INFINITY };
    }
    let var_plus = (n - 1.0) / n * w + b / n;
    (var_plus / w).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn ar1(phi: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = 0.0;
        (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                x = phi * x + z;
                x
            })
            .collect()
    }

    #[test]
    fn ess_of_ar1_matches_theory() {
        // Integrated autocorrelation time (1 + φ) / (1 − φ).
        for phi in [0.0, 0.5, 0.9] {
            let n = 200_000;
            let ess = effective_sample_size(&ar1(phi, n, 4));
            let want = n as f64 * (1.0 - phi) / (1.0 + phi);
            assert!((ess / want - 1.0).abs() < 0.1, "phi {phi}: {ess} vs {want}");
        }
        assert_eq!(effective_sample_size(&[2.0; 100]), 100.0);
    }

    #[test]
    fn rhat_detects_disagreement() {
        let a = ar1(0.3, 5000, 1);
        let b = ar1(0.3, 5000, 2);
        let r = split_rhat(&[a.clone(), b]);
        assert!((r - 1.0).abs() < 0.01, "{r}");
        let shifted: Vec<f64> = a.iter().map(|v| v + 3.0).collect();
        assert!(split_rhat(&[a, shifted]) > 1.5);
        assert_eq!(split_rhat(&[vec![1.0; 10], vec![1.0; 10]]), 1.0);
    }
}

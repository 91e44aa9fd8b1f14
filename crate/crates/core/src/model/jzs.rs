//! One-way ANOVA marginal likelihood with a g-prior on block effects.
//!
//! Groups in one block share an effect. Effects live in the space of
//! block-constant vectors summing to zero over groups, with
//! `η ~ N(0, g σ² I)` on an orthonormal basis of that space. The grand mean
//! and `log σ` get flat priors and are integrated analytically; `g ~ IG(1/2, r²/2)`
//! is integrated numerically on `u = g / (1 + g)`.
//!
//! Everything reduces to `d × d` algebra: with `C` the block indicators
//! scaled to unit norm, the effect basis is `C H` where `H` spans the
//! complement of `(√|b|)_b` inside `R^d`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::math::sample_log_categorical;
use crate::partition::Partition;

use super::data::GroupedGaussian;

/// Adaptive quadrature settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureOptions {
    /// Error bound relative to a coarse estimate of the integral.
    pub tol: f64,
    pub max_panels: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions { tol: 1e-8, max_panels: 1 << 20 }
    }
}

/// Points on the `u` grid used when drawing `g`.
const G_GRID: usize = 256;

/// Group-level data centered at the grand mean.
#[derive(Clone, Debug)]
pub(crate) struct JzsData {
    pub n_total: f64,
    pub n: Vec<f64>,
    pub sums: Vec<f64>,
    pub sst: f64,
    pub center: f64,
}

impl JzsData {
    pub fn new(g: &GroupedGaussian) -> Self {
        let n_total = g.total_n() as f64;
        let center = g.n.iter().zip(&g.mean).map(|(&n, &m)| n as f64 * m).sum::<f64>() / n_total;
        let sums: Vec<f64> = g.n.iter().zip(&g.mean).map(|(&n, &m)| n as f64 * (m - center)).collect();
        let sst = g.sse.iter().sum::<f64>()
            + g.n.iter().zip(&g.mean).map(|(&n, &m)| n as f64 * (m - center).powi(2)).sum::<f64>();
        JzsData { n_total, n: g.n.iter().map(|&n| n as f64).collect(), sums, sst, center }
    }
}

/// Orthonormal basis of the complement of `w` (a positive vector) in `R^d`,
/// as the last `d − 1` columns of a Householder reflection.
pub(crate) fn complement_basis(w: &DVector<f64>) -> DMatrix<f64> {
    let d = w.len();
    let mut v = w / w.norm();
    v[0] += 1.0;
    let vv = v.dot(&v);
    let h = DMatrix::identity(d, d) - (&v * v.transpose()) * (2.0 / vv);
    h.columns(1, d - 1).into_owned()
}

/// The partition-specific pieces of the marginal.
#[derive(Clone, Debug)]
pub(crate) struct BlockSystem {
    m: usize,
    n_total: f64,
    sst: f64,
    /// Effect-space Gram matrix eigenvalues and rotated projections of `1` and `y`.
    lambda: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
    basis: DMatrix<f64>,
    block_scale: Vec<f64>,
    block_n: Vec<f64>,
    block_sum: Vec<f64>,
}

impl BlockSystem {
    pub fn new(data: &JzsData, p: &Partition) -> Self {
        let d = p.n_blocks();
        let mut sizes = vec![0.0; d];
        let mut block_n = vec![0.0; d];
        let mut block_sum = vec![0.0; d];
        for j in 0..p.k() {
            let l = p.label(j);
            sizes[l] += 1.0;
            block_n[l] += data.n[j];
            block_sum[l] += data.sums[j];
        }
        let w = DVector::from_iterator(d, sizes.iter().map(|s: &f64| s.sqrt()));
        let basis = if d > 1 { complement_basis(&w) } else { DMatrix::zeros(1, 0) };
        Self::with_basis(data, sizes, block_n, block_sum, basis)
    }

    fn with_basis(data: &JzsData, sizes: Vec<f64>, block_n: Vec<f64>, block_sum: Vec<f64>, basis: DMatrix<f64>) -> Self {
        let d = sizes.len();
        let m = basis.ncols();
        let scale: Vec<f64> = sizes.iter().map(|s| s.sqrt()).collect();
        let (mut lambda, mut a, mut b) = (Vec::new(), Vec::new(), Vec::new());
        if m > 0 {
            let diag = DVector::from_iterator(d, (0..d).map(|i| block_n[i] / sizes[i]));
            let gram = basis.transpose() * DMatrix::from_diagonal(&diag) * &basis;
            let qn = basis.transpose() * DVector::from_iterator(d, (0..d).map(|i| block_n[i] / scale[i]));
            let qs = basis.transpose() * DVector::from_iterator(d, (0..d).map(|i| block_sum[i] / scale[i]));
            let eig = SymmetricEigen::new(gram);
            let va = eig.eigenvectors.transpose() * qn;
            let vb = eig.eigenvectors.transpose() * qs;
            lambda = eig.eigenvalues.iter().copied().collect();
            a = va.iter().copied().collect();
            b = vb.iter().copied().collect();
        }
        BlockSystem {
            m,
            n_total: data.n_total,
            sst: data.sst,
            lambda,
            a,
            b,
            basis,
            block_scale: scale,
            block_n,
            block_sum,
        }
    }

    /// `(ln|Σ| − m ln g, 1ᵀΣ⁻¹1, residual quadratic form S)` at `t = 1/g`.
    fn pieces(&self, t: f64) -> (f64, f64, f64) {
        let mut logdet = 0.0;
        let (mut aa, mut ab, mut bb) = (0.0, 0.0, 0.0);
        for i in 0..self.m {
            let den = t + self.lambda[i];
            logdet += den.ln();
            aa += self.a[i] * self.a[i] / den;
            ab += self.a[i] * self.b[i] / den;
            bb += self.b[i] * self.b[i] / den;
        }
        let one = self.n_total - aa;
        let s = self.sst - bb - ab * ab / one;
        (logdet, one, s)
    }

    fn log_const(&self) -> f64 {
        let h = 0.5 * (self.n_total - 1.0);
        ln_gamma(h) - h * std::f64::consts::PI.ln()
    }

    /// `ln p(y | g)` up to the `−(m/2) ln g` term, at `t = 1/g`.
    fn log_lik_core(&self, t: f64) -> f64 {
        let (logdet, one, s) = self.pieces(t);
        if !(s > 0.0 && one > 0.0) {
            return f64::NEG_INFINITY;
        }
        self.log_const() - 0.5 * logdet - 0.5 * one.ln() - 0.5 * (self.n_total - 1.0) * s.ln()
    }

    /// `ln p(y | g)` including all terms.
    #[cfg(test)]
    pub fn log_lik_g(&self, g: f64) -> f64 {
        self.log_lik_core(1.0 / g) - 0.5 * self.m as f64 * g.ln()
    }

    /// Null-model evidence (no effects).
    fn log_null(&self) -> f64 {
        self.log_const() - 0.5 * self.n_total.ln() - 0.5 * (self.n_total - 1.0) * self.sst.ln()
    }

    /// Log integrand on `u`, including the prior on `g` and the Jacobian.
    fn log_integrand(&self, u: f64, r: f64) -> f64 {
        if u <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let m = self.m as f64;
        let prior_const = 0.5 * (0.5 * r * r).ln() - ln_gamma(0.5);
        if u >= 1.0 {
            return if self.m == 1 { self.log_lik_core(0.0) + prior_const } else { f64::NEG_INFINITY };
        }
        let t = (1.0 - u) / u;
        let tail = if self.m == 1 { 0.0 } else { 0.5 * (m - 1.0) * (1.0 - u).ln() };
        self.log_lik_core(t) - 0.5 * (m + 3.0) * u.ln() + tail + prior_const - 0.5 * r * r * t
    }

    pub fn log_marginal(&self, r: f64, opts: &QuadratureOptions) -> Result<f64> {
        if self.m == 0 {
            let v = self.log_null();
            return if v.is_finite() { Ok(v) } else { Err(Error::Numerical("null evidence is not finite".into())) };
        }
        let edges: Vec<f64> = std::iter::once(0.0)
            .chain((-32..=40).map(|e| {
                let g = 10f64.powf(e as f64 / 4.0);
                g / (1.0 + g)
            }))
            .chain(std::iter::once(1.0))
            .collect();
        let peak = edges
            .windows(2)
            .flat_map(|w| [w[0], 0.5 * (w[0] + w[1])])
            .chain(std::iter::once(1.0))
            .map(|u| self.log_integrand(u, r))
            .fold(f64::NEG_INFINITY, f64::max);
        if !peak.is_finite() {
            return Err(Error::Numerical("marginal likelihood integrand is not finite".into()));
        }
        let f = |u: f64| (self.log_integrand(u, r) - peak).exp();
        let integral = adaptive_simpson(&f, &edges, opts)?;
        if !(integral > 0.0) {
            return Err(Error::Numerical("marginal likelihood integral vanished".into()));
        }
        Ok(peak + integral.ln())
    }

    /// Group-space mean of `(μ, η)` given `g` and the precision factor.
    fn conditional(&self, g: f64) -> (DMatrix<f64>, DVector<f64>) {
        let m = self.m;
        let d = self.block_scale.len();
        let diag = DVector::from_iterator(d, (0..d).map(|i| self.block_n[i] / (self.block_scale[i] * self.block_scale[i])));
        let gram = self.basis.transpose() * DMatrix::from_diagonal(&diag) * &self.basis;
        let qn = self.basis.transpose()
            * DVector::from_iterator(d, (0..d).map(|i| self.block_n[i] / self.block_scale[i]));
        let qs = self.basis.transpose()
            * DVector::from_iterator(d, (0..d).map(|i| self.block_sum[i] / self.block_scale[i]));
        let mut prec = DMatrix::zeros(m + 1, m + 1);
        prec[(0, 0)] = self.n_total;
        for i in 0..m {
            prec[(0, i + 1)] = qn[i];
            prec[(i + 1, 0)] = qn[i];
            for j in 0..m {
                prec[(i + 1, j + 1)] = gram[(i, j)];
            }
            prec[(i + 1, i + 1)] += 1.0 / g;
        }
        let mut rhs = DVector::zeros(m + 1);
        rhs[0] = self.block_sum.iter().sum();
        for i in 0..m {
            rhs[i + 1] = qs[i];
        }
        (prec, rhs)
    }

    /// Maps `(μ, η)` to block values.
    fn block_values(&self, coef: &DVector<f64>) -> Vec<f64> {
        let d = self.block_scale.len();
        let eta = coef.rows(1, self.m);
        let effect = &self.basis * eta;
        (0..d).map(|i| coef[0] + effect[i] / self.block_scale[i]).collect()
    }

    fn g_grid_weights(&self, r: f64) -> (Vec<f64>, Vec<f64>) {
        let us: Vec<f64> = (0..G_GRID).map(|i| (i as f64 + 0.5) / G_GRID as f64).collect();
        let w = us.iter().map(|&u| self.log_integrand(u, r)).collect();
        (us, w)
    }

    /// One posterior draw of the block values (centered scale).
    pub fn draw<R: Rng + ?Sized>(&self, r: f64, rng: &mut R) -> Result<Vec<f64>> {
        let half = 0.5 * (self.n_total - 1.0);
        if self.m == 0 {
            let sigma2 = draw_inv_gamma(half, 0.5 * self.sst, rng)?;
            let mean = self.block_sum[0] / self.n_total;
            let z: f64 = StandardNormal.sample(rng);
            return Ok(vec![mean + (sigma2 / self.n_total).sqrt() * z]);
        }
        let (us, w) = self.g_grid_weights(r);
        if !w.iter().any(|v| v.is_finite()) {
            return Err(Error::Numerical("g grid weights are all zero".into()));
        }
        let u = us[sample_log_categorical(&w, rng)];
        let g = u / (1.0 - u);
        let (_, _, s) = self.pieces(1.0 / g);
        let sigma2 = draw_inv_gamma(half, 0.5 * s, rng)?;
        let (prec, rhs) = self.conditional(g);
        let chol = prec
            .cholesky()
            .ok_or_else(|| Error::Numerical("conditional precision is not positive definite".into()))?;
        let mean = chol.solve(&rhs);
        let z = DVector::from_iterator(self.m + 1, (0..=self.m).map(|_| StandardNormal.sample(rng)));
        let l_t = chol.l().transpose();
        let noise = l_t
            .solve_upper_triangular(&z)
            .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
        Ok(self.block_values(&(mean + noise * sigma2.sqrt())))
    }

    /// Posterior mean of the block values, averaging the conditional mean
    /// over the `g` grid.
    pub fn posterior_mean(&self, r: f64) -> Result<Vec<f64>> {
        if self.m == 0 {
            return Ok(vec![self.block_sum[0] / self.n_total]);
        }
        let (us, mut w) = self.g_grid_weights(r);
        crate::math::normalize_log_weights(&mut w);
        let d = self.block_scale.len();
        let mut acc = vec![0.0; d];
        for (u, wi) in us.iter().zip(&w) {
            if *wi == 0.0 || !wi.is_finite() {
                continue;
            }
            let (prec, rhs) = self.conditional(u / (1.0 - u));
            let chol = prec
                .cholesky()
                .ok_or_else(|| Error::Numerical("conditional precision is not positive definite".into()))?;
            for (a, v) in acc.iter_mut().zip(self.block_values(&chol.solve(&rhs))) {
                *a += wi * v;
            }
        }
        Ok(acc)
    }
}

fn draw_inv_gamma<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> Result<f64> {
    let gamma = Gamma::new(shape, 1.0 / scale)
        .map_err(|e| Error::Numerical(format!("inverse gamma({shape}, {scale}): {e}")))?;
    Ok(1.0 / gamma.sample(rng))
}

/// Adaptive Simpson over consecutive panels `[edges[i], edges[i+1]]`.
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, edges: &[f64], opts: &QuadratureOptions) -> Result<f64> {
    struct Seg {
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    }
    let simpson = |a: f64, b: f64, fa: f64, fm: f64, fb: f64| (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut stack = Vec::new();
    let mut coarse = 0.0;
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
        let whole = simpson(a, b, fa, fm, fb);
        coarse += whole;
        stack.push(Seg { a, b, fa, fm, fb, whole, tol: b - a, depth: 0 });
    }
    let abs_tol = opts.tol * coarse.abs().max(f64::MIN_POSITIVE);
    for s in stack.iter_mut() {
        s.tol *= abs_tol;
    }
    let mut total = 0.0;
    let mut err_bound = 0.0;
    let mut panels = stack.len();
    while let Some(s) = stack.pop() {
        let m = 0.5 * (s.a + s.b);
        let (lm, rm) = (0.5 * (s.a + m), 0.5 * (m + s.b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(s.a, m, s.fa, flm, s.fm);
        let right = simpson(m, s.b, s.fm, frm, s.fb);
        let diff = left + right - s.whole;
        if diff.abs() <= 15.0 * s.tol || s.depth >= 50 {
            total += left + right + diff / 15.0;
            err_bound += diff.abs() / 15.0;
            continue;
        }
        panels += 1;
        if panels > opts.max_panels {
            let pending: f64 = stack.iter().map(|q| q.whole.abs()).sum::<f64>() + s.whole.abs();
            return Err(Error::Numerical(format!(
                "quadrature did not converge within {} panels; achieved error bound {:.3e}",
                opts.max_panels,
                err_bound + pending
            )));
        }
        let tol = 0.5 * s.tol;
        stack.push(Seg { a: s.a, b: m, fa: s.fa, fm: flm, fb: s.fm, whole: left, tol, depth: s.depth + 1 });
        stack.push(Seg { a: m, b: s.b, fa: s.fm, fm: frm, fb: s.fb, whole: right, tol, depth: s.depth + 1 });
    }
    Ok(total)
}

/// Log marginal likelihood of `p` under the g-prior ANOVA.
pub(crate) fn log_marginal(data: &JzsData, p: &Partition, r: f64, opts: &QuadratureOptions) -> Result<f64> {
    check_size(data, p)?;
    BlockSystem::new(data, p).log_marginal(r, opts)
}

pub(crate) fn check_size(data: &JzsData, p: &Partition) -> Result<()> {
    if data.n_total <= (p.n_blocks() + 1) as f64 {
        return Err(Error::domain(format!(
            "{} observations cannot support {} blocks (need N > d + 1)",
            data.n_total,
            p.n_blocks()
        )));
    }
    if !(data.sst > 0.0) {
        return Err(Error::Data("observations have zero variance".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn samples(rng: &mut ChaCha8Rng, sizes: &[usize], means: &[f64]) -> Vec<Vec<f64>> {
        sizes
            .iter()
            .zip(means)
            .map(|(&n, &m)| (0..n).map(|_| { let z: f64 = StandardNormal.sample(rng); m + z }).collect::<Vec<f64>>())
            .collect()
    }

    /// `ln p(y | g)` with dense `N × N` matrices.
    fn dense_log_lik(groups: &[Vec<f64>], p: &Partition, g: f64) -> f64 {
        let k = groups.len();
        let d = p.n_blocks();
        let y: Vec<f64> = groups.iter().flatten().copied().collect();
        let n = y.len();
        // Group-space basis: block-constant, unweighted sum zero, orthonormal via QR.
        let mut raw = DMatrix::zeros(k, d);
        for j in 0..k {
            raw[(j, p.label(j))] = 1.0;
        }
        let mut cand = DMatrix::zeros(k, d);
        for j in 0..k {
            cand[(j, 0)] = 1.0;
        }
        for c in 1..d {
            cand.set_column(c, &raw.column(c));
        }
        let q = cand.qr().q();
        let basis = q.columns(1, d - 1).into_owned();
        let mut z = DMatrix::zeros(n, d - 1);
        let mut row = 0;
        for (j, grp) in groups.iter().enumerate() {
            for _ in grp {
                z.set_row(row, &basis.row(j));
                row += 1;
            }
        }
        let sigma = DMatrix::identity(n, n) + &z * z.transpose() * g;
        let inv = sigma.clone().try_inverse().unwrap();
        let one = DVector::from_element(n, 1.0);
        let yv = DVector::from_vec(y);
        let a = (one.transpose() * &inv * &one)[0];
        let b = (one.transpose() * &inv * &yv)[0];
        let s = (yv.transpose() * &inv * &yv)[0] - b * b / a;
        let h = 0.5 * (n as f64 - 1.0);
        let logdet = sigma.determinant().ln();
        -h * (2.0 * std::f64::consts::PI).ln() - 0.5 * logdet - 0.5 * a.ln() + ln_gamma(h) - h * (0.5 * s).ln()
    }

    #[test]
    fn block_algebra_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let groups = samples(&mut rng, &[4, 6, 3, 5], &[0.0, 1.0, 0.5, -0.3]);
        let data = JzsData::new(&GroupedGaussian::from_samples(&groups).unwrap());
        for rgs in [[0, 1, 2, 3], [0, 1, 1, 2], [0, 1, 0, 1], [0, 0, 0, 1]] {
            let p = Partition::from_rgs(&rgs).unwrap();
            let sys = BlockSystem::new(&data, &p);
            for g in [0.01, 0.7, 5.0, 300.0] {
                assert_abs_diff_eq!(sys.log_lik_g(g), dense_log_lik(&groups, &p, g), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn basis_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let groups = samples(&mut rng, &[7, 5, 9, 6, 4], &[0.2, -0.1, 0.5, 0.0, 0.3]);
        let data = JzsData::new(&GroupedGaussian::from_samples(&groups).unwrap());
        let opts = QuadratureOptions::default();
        for rgs in [vec![0, 1, 2, 3, 4], vec![0, 1, 1, 2, 0], vec![0, 1, 2, 2, 1]] {
            let p = Partition::from_rgs(&rgs).unwrap();
            let sys = BlockSystem::new(&data, &p);
            let m = sys.m;
            // Rotate the basis by a random orthogonal matrix.
            let raw = DMatrix::from_fn(m, m, |_, _| StandardNormal.sample(&mut rng));
            let rot = raw.qr().q();
            let rotated = &sys.basis * rot;
            let other = BlockSystem::with_basis(
                &data,
                sys.block_scale.iter().map(|s| s * s).collect(),
                sys.block_n.clone(),
                sys.block_sum.clone(),
                rotated,
            );
            let a = sys.log_marginal(1.0, &opts).unwrap();
            let b = other.log_marginal(1.0, &opts).unwrap();
            assert!((a - b).abs() <= 1e-8, "{rgs:?}: {a} vs {b}");
        }
    }

    #[test]
    fn complement_basis_is_orthonormal() {
        let w = DVector::from_vec(vec![1.0, 2f64.sqrt(), 3f64.sqrt()]);
        let h = complement_basis(&w);
        let gram = h.transpose() * &h;
        assert_abs_diff_eq!((gram - DMatrix::<f64>::identity(2, 2)).norm(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!((h.transpose() * w).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn integrand_endpoints_are_finite() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let groups = samples(&mut rng, &[5, 5, 5], &[0.0, 0.0, 1.0]);
        let data = JzsData::new(&GroupedGaussian::from_samples(&groups).unwrap());
        let two = BlockSystem::new(&data, &Partition::from_rgs(&[0, 0, 1]).unwrap());
        assert!(two.log_integrand(1.0, 1.0).is_finite());
        assert_eq!(two.log_integrand(0.0, 1.0), f64::NEG_INFINITY);
        let three = BlockSystem::new(&data, &Partition::full(3));
        assert_eq!(three.log_integrand(1.0, 1.0), f64::NEG_INFINITY);
        assert!(three.log_integrand(1.0 - 1e-12, 1.0).is_finite());
    }

    #[test]
    fn quadrature_cap_reports_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let groups = samples(&mut rng, &[5, 5, 5], &[0.0, 0.0, 1.0]);
        let data = JzsData::new(&GroupedGaussian::from_samples(&groups).unwrap());
        let sys = BlockSystem::new(&data, &Partition::full(3));
        let opts = QuadratureOptions { tol: 1e-14, max_panels: 80 };
        match sys.log_marginal(1.0, &opts) {
            Err(Error::Numerical(msg)) => assert!(msg.contains("error bound"), "{msg}"),
            other => panic!("expected a numerical error, got {other:?}"),
        }
    }

    #[test]
    fn draws_center_on_block_means() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let groups = samples(&mut rng, &[40, 40, 40], &[0.0, 0.0, 2.0]);
        let gg = GroupedGaussian::from_samples(&groups).unwrap();
        let data = JzsData::new(&gg);
        let p = Partition::from_rgs(&[0, 0, 1]).unwrap();
        let sys = BlockSystem::new(&data, &p);
        let reps = 4000;
        let mut acc = [0.0; 2];
        for _ in 0..reps {
            let v = sys.draw(1.0, &mut rng).unwrap();
            acc[0] += v[0] / reps as f64;
            acc[1] += v[1] / reps as f64;
        }
        let mean = sys.posterior_mean(1.0).unwrap();
        for i in 0..2 {
            assert!((acc[i] - mean[i]).abs() < 0.02, "{acc:?} vs {mean:?}");
        }
        let pooled = (gg.mean[0] + gg.mean[1]) / 2.0 - data.center;
        assert!((mean[0] - pooled).abs() < 0.1);
        assert!((mean[1] - (gg.mean[2] - data.center)).abs() < 0.1);
    }
}

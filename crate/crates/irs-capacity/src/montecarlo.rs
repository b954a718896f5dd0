//! Monte-Carlo sampling of the effective model and the full cascaded channel.
//!
//! Trial `t` of a run with seed `s` draws from ChaCha8 seeded with `s` on
//! stream `t`. Results are therefore identical for any thread count.

use nalgebra::{Cholesky, Complex, DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::channel::{CorrelationSet, EnsembleDims, GainVector};
use crate::error::{Error, Result};
use crate::phase::{amplitude, PhaseShiftProfile, PhaseVector};

type Complex64 = Complex<f64>;

/// Sample mean with a 99 % confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub half_width_99: f64,
    pub trials: usize,
    pub seed: u64,
}

/// How the effective sampler forms the inner gain matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EffectiveSampler {
    /// `L = Γ^{1/2} Y^H Y Γ^{1/2}`, the ensemble the analytic density describes.
    #[default]
    Gram,
    /// `L = diag(γ_i σ_i²)` from the squared singular values `σ_i²` of `Y`.
    /// Kept to measure how far this simplification sits from the analytic density.
    DiagonalPairing,
}

/// The random stream for one trial.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn cn(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
    // Column-major fill keeps the draw order fixed.
    DMatrix::from_fn(rows, cols, |_, _| cn(rng))
}

/// `B = Y Γ^{1/2} X^H` (or the diagonal-pairing analogue), `p × a`; the
/// nonzero eigenvalues of `X L X^H` are those of `B^H B`.
fn effective_factor(dims: &EnsembleDims, gammas: &[f64], sampler: EffectiveSampler, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
    let (a, q, p) = (dims.a, dims.q, dims.p);
    let y = gaussian(p, q, rng);
    let x = gaussian(a, q, rng);
    match sampler {
        EffectiveSampler::Gram => {
            let mut yg = y;
            for (j, g) in gammas.iter().enumerate() {
                let r = g.sqrt();
                yg.column_mut(j).iter_mut().for_each(|v| *v *= r);
            }
            yg * x.adjoint()
        }
        EffectiveSampler::DiagonalPairing => {
            let gram = y.adjoint() * &y;
            let mut sv: Vec<f64> = SymmetricEigen::new(gram).eigenvalues.iter().map(|v| v.max(0.0)).collect();
            sv.sort_by(|u, v| v.total_cmp(u));
            let mut xs = x.adjoint(); // q × a
            for (i, (g, s)) in gammas.iter().zip(&sv).enumerate() {
                let r = (g * s).sqrt();
                xs.row_mut(i).iter_mut().for_each(|v| *v *= r);
            }
            xs
        }
    }
}

/// Hermitian Gram matrix `B^H B` or `B B^H`, whichever is smaller.
fn small_gram(b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    if b.ncols() <= b.nrows() { b.adjoint() * b } else { b * b.adjoint() }
}

fn descending_eigenvalues(h: DMatrix<Complex64>, keep: usize) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().map(|v| v.max(0.0)).collect();
    ev.sort_by(|u, v| v.total_cmp(u));
    ev.truncate(keep);
    ev
}

/// `log2 det(I + c·G)` for a Hermitian PSD `G`.
fn log2_det_shifted(g: DMatrix<Complex64>, c: f64) -> Result<f64> {
    let n = g.nrows();
    let m = DMatrix::<Complex64>::identity(n, n) + g * Complex64::new(c, 0.0);
    let chol = Cholesky::new(m).ok_or_else(|| Error::Numerical("I + cG is not positive definite".into()))?;
    let l = chol.l_dirty();
    Ok(2.0 * (0..n).map(|i| l[(i, i)].re.ln()).sum::<f64>() / std::f64::consts::LN_2)
}

/// One draw of the `s` nonzero eigenvalues, descending.
pub fn sample_effective_eigenvalues(
    dims: &EnsembleDims,
    gains: &GainVector,
    sampler: EffectiveSampler,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    if gains.len() != dims.q {
        return Err(Error::Domain(format!("expected {} gains, got {}", dims.q, gains.len())));
    }
    let b = effective_factor(dims, gains.gammas(), sampler, rng);
    Ok(descending_eigenvalues(small_gram(&b), dims.s))
}

/// Unordered eigenvalues pooled over `trials` draws, in trial order.
pub fn effective_eigenvalue_samples(
    dims: &EnsembleDims,
    gains: &GainVector,
    sampler: EffectiveSampler,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let per: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|t| sample_effective_eigenvalues(dims, gains, sampler, &mut trial_rng(seed, t as u64)))
        .collect::<Result<_>>()?;
    Ok(per.into_iter().flatten().collect())
}

/// Mean and 99 % half-width, accumulated in trial order.
fn estimate(values: &[f64], seed: u64) -> McEstimate {
    let n = values.len() as f64;
    let mean = pairwise_sum(values) / n;
    let centered: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&centered) / (n - 1.0);
    McEstimate { mean, half_width_99: 2.576 * (var / n).sqrt(), trials: values.len(), seed }
}

fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 64 {
        v.iter().sum()
    } else {
        let (l, r) = v.split_at(v.len() / 2);
        pairwise_sum(l) + pairwise_sum(r)
    }
}

fn check_trials(trials: usize, min: usize) -> Result<()> {
    if trials < min {
        return Err(Error::Domain(format!("at least {min} trials required, got {trials}")));
    }
    Ok(())
}

/// Ergodic capacity of the effective model by simulation.
pub fn mc_capacity_effective(
    dims: &EnsembleDims,
    gains: &GainVector,
    snr: f64,
    m_tx: usize,
    trials: usize,
    seed: u64,
) -> Result<McEstimate> {
    mc_capacity_effective_with(dims, gains, EffectiveSampler::Gram, snr, m_tx, trials, seed)
}

pub fn mc_capacity_effective_with(
    dims: &EnsembleDims,
    gains: &GainVector,
    sampler: EffectiveSampler,
    snr: f64,
    m_tx: usize,
    trials: usize,
    seed: u64,
) -> Result<McEstimate> {
    check_trials(trials, 2)?;
    if gains.len() != dims.q {
        return Err(Error::Domain(format!("expected {} gains, got {}", dims.q, gains.len())));
    }
    let c = snr / m_tx as f64;
    let values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t as u64);
            let b = effective_factor(dims, gains.gammas(), sampler, &mut rng);
            log2_det_shifted(small_gram(&b), c)
        })
        .collect::<Result<_>>()?;
    Ok(estimate(&values, seed))
}

/// Hermitian PSD square root; tiny negative eigenvalues are clamped.
fn psd_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(m.clone());
    let scale = m.amax().max(1.0);
    let mut d = eig.eigenvalues.clone();
    for v in d.iter_mut() {
        if *v < -1e-10 * scale {
            return Err(Error::Domain(format!("correlation matrix is not PSD (eigenvalue {v})")));
        }
        *v = v.max(0.0).sqrt();
    }
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose())
}

fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|v| Complex64::new(v, 0.0))
}

/// Ergodic capacity of the full Kronecker-correlated cascade
/// `H = R2^{1/2} X2 T2^{1/2} Θ R1^{1/2} X1 T1^{1/2}`.
#[allow(clippy::too_many_arguments)]
pub fn mc_capacity_full(
    corr: &CorrelationSet,
    profile: &PhaseShiftProfile,
    phases: &PhaseVector,
    snr: f64,
    m_tx: usize,
    beta_product: f64,
    trials: usize,
    seed: u64,
) -> Result<McEstimate> {
    check_trials(trials, 2)?;
    let n = corr.r1.nrows();
    let m = corr.t1.nrows();
    let k = corr.r2.nrows();
    if corr.t2.nrows() != n || phases.len() != n || m != m_tx {
        return Err(Error::Domain("inconsistent correlation, phase or antenna dimensions".into()));
    }
    let r1 = to_complex(&psd_sqrt(&corr.r1)?);
    let t1 = to_complex(&psd_sqrt(&corr.t1)?);
    let r2 = to_complex(&psd_sqrt(&corr.r2)?);
    let t2 = to_complex(&psd_sqrt(&corr.t2)?);
    let theta: Vec<Complex64> = phases
        .as_slice()
        .iter()
        .map(|&p| Complex64::from_polar(amplitude(p, profile), p))
        .collect();
    let c = snr * beta_product / m_tx as f64;
    let values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t as u64);
            let x1 = gaussian(n, m, &mut rng);
            let x2 = gaussian(k, n, &mut rng);
            let h1 = &r1 * x1 * &t1;
            let mut h2 = &r2 * x2 * &t2;
            for (j, th) in theta.iter().enumerate() {
                h2.column_mut(j).iter_mut().for_each(|v| *v *= th);
            }
            let h = h2 * h1;
            log2_det_shifted(small_gram(&h), c)
        })
        .collect::<Result<_>>()?;
    Ok(estimate(&values, seed))
}

/// Ergodic capacity of an uncorrelated `k × m` Rayleigh link, the
/// reference line when no IRS is deployed.
pub fn mc_capacity_direct(m_tx: usize, k_rx: usize, snr: f64, trials: usize, seed: u64) -> Result<McEstimate> {
    check_trials(trials, 2)?;
    let c = snr / m_tx as f64;
    let values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let h = gaussian(k_rx, m_tx, &mut trial_rng(seed, t as u64));
            log2_det_shifted(small_gram(&h), c)
        })
        .collect::<Result<_>>()?;
    Ok(estimate(&values, seed))
}

/// Density-normalised histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub densities: Vec<f64>,
}

/// Histogram over `[min, max]` of the samples with `bins` equal bins.
pub fn empirical_pdf(samples: &[f64], bins: usize) -> Result<Histogram> {
    if samples.is_empty() || bins == 0 {
        return Err(Error::Domain("empirical_pdf needs samples and at least one bin".into()));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("samples must be finite".into()));
    }
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        hi = lo + 1.0;
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in samples {
        let i = (((v - lo) / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    let n = samples.len() as f64;
    let edges = (0..=bins).map(|i| if i == bins { hi } else { lo + width * i as f64 }).collect();
    let densities = counts.iter().map(|&c| c as f64 / (n * width)).collect();
    Ok(Histogram { edges, densities })
}

impl Histogram {
    /// `Σ density · width`.
    pub fn integral(&self) -> f64 {
        self.densities.iter().zip(self.edges.windows(2)).map(|(d, e)| d * (e[1] - e[0])).sum()
    }
}

/// Kolmogorov–Smirnov distance between the samples and a CDF.
pub fn ks_statistic<F>(samples: &[f64], cdf: F) -> f64
where
    F: Fn(f64) -> f64,
{
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

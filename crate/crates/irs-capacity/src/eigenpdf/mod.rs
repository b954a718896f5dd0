//! Eigenvalue densities of the effective cascaded channel.
//!
//! The effective model draws `Y` (`p × q`) and `X` (`a × q`) with iid
//! `CN(0, 1)` entries, sets `L = Γ^{1/2} Y^H Y Γ^{1/2}` with `Γ = diag(γ)`, and
//! studies the `s = min(a, q)` nonzero eigenvalues of `X L X^H`.

mod kernel;

use crate::channel::{EnsembleDims, GainVector};
use crate::error::{Error, Result};
use crate::phase::{PhaseShiftProfile, PhaseVector};
use crate::specfun::{ln_gamma, log_bessel_k_seq, signed_logsumexp, CofactorTable, SignedLog};

use kernel::Kernel;

/// `ln 𝒦` with `𝒦 = 1/∏_{i=1}^{q} Γ(q−i+1) Γ(p−i+1)`.
pub fn log_normalizer(q: usize, p: usize) -> f64 {
    -(1..=q).map(|i| ln_gamma((q - i + 1) as f64) + ln_gamma((p - i + 1) as f64)).sum::<f64>()
}

/// Log joint density of the eigenvalues `c` of `Y Γ Y^H`-type Wishart
/// matrices with per-column scales `γ`, on the chamber where `c_i/γ_i`
/// increases strictly.
pub fn joint_pdf_log(c: &[f64], gains: &[f64], p: usize) -> Result<f64> {
    let q = c.len();
    if q == 0 || gains.len() != q || p < q {
        return Err(Error::Domain(format!("need {q} gains and p >= q, got {} and p={p}", gains.len())));
    }
    if c.iter().any(|x| !(x.is_finite() && *x > 0.0)) || gains.iter().any(|g| g.is_nan() || *g <= 0.0) {
        return Err(Error::Domain("eigenvalues and gains must be positive".into()));
    }
    let z: Vec<f64> = c.iter().zip(gains).map(|(c, g)| c / g).collect();
    if z.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("c_i / gamma_i must be strictly increasing".into()));
    }
    let off = (p - q) as f64;
    let mut acc = log_normalizer(q, p);
    for i in 0..q {
        acc += off * c[i].ln() - z[i] - (off + 1.0) * gains[i].ln();
        for j in i + 1..q {
            acc += 2.0 * (z[j] - z[i]).ln();
        }
    }
    Ok(acc)
}

/// Density of an unordered nonzero eigenvalue of the effective model.
#[derive(Debug, Clone)]
pub struct MarginalEigenPDF {
    dims: EnsembleDims,
    gammas: Vec<f64>,
    kernel: Kernel,
}

impl MarginalEigenPDF {
    pub fn new(dims: EnsembleDims, gains: &GainVector) -> Result<Self> {
        Self::from_gammas(dims, gains.gammas())
    }

    /// Repeated gains are allowed; the evaluation handles them exactly.
    pub fn from_gammas(dims: EnsembleDims, gammas: &[f64]) -> Result<Self> {
        if gammas.len() != dims.q {
            return Err(Error::Domain(format!("expected {} gains, got {}", dims.q, gammas.len())));
        }
        if gammas.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
            return Err(Error::Domain("gains must be positive and finite".into()));
        }
        let kernel = Kernel { a: dims.a, q: dims.q, p: dims.p, s: dims.s };
        Ok(MarginalEigenPDF { dims, gammas: gammas.to_vec(), kernel })
    }

    pub fn dims(&self) -> EnsembleDims {
        self.dims
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    /// Mean of the unordered eigenvalue, `a p Σγ / s`.
    pub fn mean(&self) -> f64 {
        let d = self.dims;
        (d.a * d.p) as f64 * self.gammas.iter().sum::<f64>() / d.s as f64
    }

    pub fn density(&self, lambda: f64) -> Result<f64> {
        check_lambda(lambda)?;
        Ok(self.kernel.density(lambda, &self.gammas))
    }

    /// `(f(λ), bound)` where `bound` is a running estimate of the absolute
    /// rounding error in `f(λ)`.
    pub fn density_with_error(&self, lambda: f64) -> Result<(f64, f64)> {
        check_lambda(lambda)?;
        Ok(self.kernel.density_with_bound(lambda, &self.gammas))
    }

    /// `(f(λ), ∂f/∂γ_n for every n)`.
    pub fn density_dgamma(&self, lambda: f64) -> Result<(f64, Vec<f64>)> {
        check_lambda(lambda)?;
        Ok(self.kernel.density_and_grad(lambda, &self.gammas))
    }

    /// `(f(λ), ∂f/∂γ_n, error bound of f)`.
    pub(crate) fn density_dgamma_with_error(&self, lambda: f64) -> Result<(f64, Vec<f64>, f64)> {
        check_lambda(lambda)?;
        Ok(self.kernel.density_grad_bound(lambda, &self.gammas))
    }

    /// `∂f/∂γ_n` for a single zero-based index.
    pub fn density_dgamma_at(&self, lambda: f64, n: usize) -> Result<f64> {
        if n >= self.dims.q {
            return Err(Error::Domain(format!("gain index {n} out of range")));
        }
        Ok(self.density_dgamma(lambda)?.1[n])
    }

    /// `(f(λ), ∂f/∂φ_n for every n)` given the gains' phase dependence.
    pub fn density_dphi(
        &self,
        lambda: f64,
        gains: &GainVector,
        profile: &PhaseShiftProfile,
        phases: &PhaseVector,
    ) -> Result<(f64, Vec<f64>)> {
        if profile.is_ideal() {
            return Ok((self.density(lambda)?, vec![0.0; self.dims.q]));
        }
        let (f, dg) = self.density_dgamma(lambda)?;
        let dphi = dg
            .iter()
            .enumerate()
            .map(|(n, d)| {
                let chain = gains.dgamma_dphi(n, phases.as_slice()[n], profile);
                if chain == 0.0 { 0.0 } else { chain * d }
            })
            .collect();
        Ok((f, dphi))
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::Domain(format!("lambda must be positive and finite, got {lambda}")));
    }
    Ok(())
}

/// Density when every gain equals `gamma`, written as a Bessel expansion
/// weighted by cofactors of the Hankel matrix `Γ(p − q + m + n − 1)`:
///
/// ```text
/// f(λ) = 2𝒦/s Σ_k Σ_l λ^{a−q+k−1}/Γ(a−q+k) · γ^{q−a−k} · E_{p−a+l−1}(λ/γ) · G_{l,k}
/// ```
///
/// with `E_μ(x) = x^{μ/2} K_μ(2√x)`. This route shares nothing with the
/// general evaluator beyond the Bessel functions.
pub fn equal_gain_density(dims: &EnsembleDims, gamma: f64, lambda: f64, cof: &CofactorTable) -> Result<f64> {
    check_lambda(lambda)?;
    if cof.q != dims.q {
        return Err(Error::Domain("cofactor table size does not match q".into()));
    }
    let (a, q, p, s) = (dims.a as i64, dims.q as i64, dims.p as i64, dims.s as i64);
    let x = lambda / gamma;
    let max_order = ((p - a).abs() + q) as usize;
    let lk = log_bessel_k_seq(max_order, 2.0 * x.sqrt());
    let ln_e = |mu: i64| 0.5 * mu as f64 * x.ln() + lk[mu.unsigned_abs() as usize];
    let mut terms = Vec::new();
    for k in (q - s + 1)..=q {
        let lk_part = (a - q + k - 1) as f64 * lambda.ln() - ln_gamma((a - q + k) as f64) + (q - a - k) as f64 * gamma.ln();
        for l in 1..=q {
            let g = cof.get((l - 1) as usize, (k - 1) as usize);
            terms.push(g.scale(lk_part + ln_e(p - a + l - 1)));
        }
    }
    let sum = signed_logsumexp(terms).scale(std::f64::consts::LN_2 + log_normalizer(dims.q, dims.p) - (s as f64).ln());
    Ok(sum.to_real().max(0.0))
}

/// `2/(Γ(a)Γ(p)γ) · (λ/γ)^{(a+p)/2−1} K_{p−a}(2√(λ/γ))`, the density of a
/// single gain times two independent Gamma variables.
pub fn single_gain_density(a: usize, p: usize, gamma: f64, lambda: f64) -> f64 {
    let x = lambda / gamma;
    let nu = a.abs_diff(p);
    let lk = *log_bessel_k_seq(nu, 2.0 * x.sqrt()).last().unwrap();
    let l = std::f64::consts::LN_2 - ln_gamma(a as f64) - ln_gamma(p as f64) - gamma.ln()
        + (0.5 * (a + p) as f64 - 1.0) * x.ln()
        + lk;
    SignedLog::new(1, l).to_real()
}

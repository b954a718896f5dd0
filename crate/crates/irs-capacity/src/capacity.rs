//! Ergodic capacity as a one-dimensional integral over the eigenvalue density.
//!
//! `C = s ∫_0^∞ log2(1 + (snr/M) λ) f(λ) dλ`, integrated in `u = √λ`, where
//! the Bessel tail decays exponentially in `u`.

use crate::channel::{EnsembleDims, GainVector};
use crate::eigenpdf::MarginalEigenPDF;
use crate::error::{Error, Result};
use crate::phase::{PhaseShiftProfile, PhaseVector};
use crate::quadrature::integrate_noisy;
#[cfg(test)]
use crate::quadrature::integrate;

pub const DEFAULT_TOL: f64 = 1e-8;
const INITIAL_PANELS: usize = 8;
const MAX_PANELS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityResult {
    /// Ergodic capacity in bit/s/Hz.
    pub ec_bits: f64,
    pub quad_abs_err: f64,
    /// Upper integration limit in `λ`.
    pub truncation_point: f64,
}

fn check_inputs(snr: f64, m_tx: usize, tol: f64) -> Result<()> {
    if !(snr.is_finite() && snr > 0.0) {
        return Err(Error::Domain(format!("snr must be positive, got {snr}")));
    }
    if m_tx == 0 {
        return Err(Error::Domain("M must be positive".into()));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Domain(format!("tol must be positive, got {tol}")));
    }
    Ok(())
}

/// Upper limit in `u` beyond which the integrand's tail mass is below
/// `1e−3 · tol`.
fn truncation_u<F>(pdf: &MarginalEigenPDF, weight: F, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let gmax = pdf.gammas().iter().copied().fold(0.0, f64::max);
    let scale = gmax.sqrt();
    let mut u = 4.0 * pdf.mean().sqrt().max(scale);
    for _ in 0..200 {
        let lam = u * u;
        let h = weight(lam) * pdf.density(lam)? * 2.0 * u;
        // The tail decays like e^{−2u/√γmax}, so its mass is about h·√γmax.
        if h.abs() * scale.max(1.0) * u.max(1.0) <= 1e-3 * tol {
            return Ok(u);
        }
        u *= 1.25;
    }
    Err(Error::Numerical("could not locate the integrand's tail".into()))
}

/// Ergodic capacity from a density object.
pub fn ergodic_capacity(pdf: &MarginalEigenPDF, snr: f64, m_tx: usize, tol: f64) -> Result<CapacityResult> {
    check_inputs(snr, m_tx, tol)?;
    let rho = snr / m_tx as f64;
    let s = pdf.dims().s as f64;
    let weight = |lam: f64| s * (rho * lam).ln_1p() / std::f64::consts::LN_2;
    let u_max = truncation_u(pdf, weight, tol)?;
    let r = integrate_noisy(
        |u, out| {
            let lam = u * u;
            if lam > 0.0 {
                let (f, err) = pdf.density_with_error(lam)?;
                let w = weight(lam) * 2.0 * u;
                out[0] = w * f;
                out[1] = w * err;
            } else {
                out[0] = 0.0;
                out[1] = 0.0;
            }
            Ok(())
        },
        0.0,
        u_max,
        1,
        tol,
        INITIAL_PANELS,
        MAX_PANELS,
    )?;
    Ok(CapacityResult { ec_bits: r.value[0].max(0.0), quad_abs_err: r.abs_err, truncation_point: u_max * u_max })
}

/// Capacity and its gradient with respect to every phase.
pub fn capacity_gradient(
    dims: &EnsembleDims,
    gains: &GainVector,
    profile: &PhaseShiftProfile,
    phases: &PhaseVector,
    snr: f64,
    m_tx: usize,
    tol: f64,
) -> Result<(CapacityResult, Vec<f64>)> {
    check_inputs(snr, m_tx, tol)?;
    let pdf = MarginalEigenPDF::new(*dims, gains)?;
    if profile.is_ideal() {
        return Ok((ergodic_capacity(&pdf, snr, m_tx, tol)?, vec![0.0; dims.q]));
    }
    let q = dims.q;
    let rho = snr / m_tx as f64;
    let s = dims.s as f64;
    let weight = |lam: f64| s * (rho * lam).ln_1p() / std::f64::consts::LN_2;
    let chain: Vec<f64> = (0..q).map(|n| gains.dgamma_dphi(n, phases.as_slice()[n], profile)).collect();
    let u_max = truncation_u(&pdf, weight, tol)?;
    let r = integrate_noisy(
        |u, out| {
            let lam = u * u;
            if lam <= 0.0 {
                out.iter_mut().for_each(|v| *v = 0.0);
                return Ok(());
            }
            let w = weight(lam) * 2.0 * u;
            let (f, dg, err) = pdf.density_dgamma_with_error(lam)?;
            out[0] = w * f;
            for n in 0..q {
                out[n + 1] = if chain[n] == 0.0 { 0.0 } else { w * chain[n] * dg[n] };
            }
            out[q + 1] = w * err;
            Ok(())
        },
        0.0,
        u_max,
        q + 1,
        tol,
        INITIAL_PANELS,
        MAX_PANELS,
    )?;
    let result = CapacityResult { ec_bits: r.value[0].max(0.0), quad_abs_err: r.abs_err, truncation_point: u_max * u_max };
    Ok((result, r.value[1..].to_vec()))
}

/// Linear SNR from transmit power and noise power in dBm.
pub fn snr_from_dbm(tx_power_dbm: f64, noise_dbm: f64) -> f64 {
    10f64.powf((tx_power_dbm - noise_dbm) / 10.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

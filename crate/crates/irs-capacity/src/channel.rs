//! Correlation matrices, path loss and the composite per-stream gains.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase::{amplitude, amplitude_derivative, PhaseShiftProfile, PhaseVector};

/// Antenna and IRS sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SystemDims {
    pub m: usize,
    pub k: usize,
    pub n_h: usize,
    pub n_v: usize,
}

impl SystemDims {
    pub fn new(m: usize, k: usize, n_h: usize, n_v: usize) -> Result<Self> {
        if m == 0 || k == 0 || n_h == 0 || n_v == 0 {
            return Err(Error::Domain("all system dimensions must be positive".into()));
        }
        Ok(SystemDims { m, k, n_h, n_v })
    }

    pub fn n(&self) -> usize {
        self.n_h * self.n_v
    }
}

/// Which side of the cascade is taken as uncorrelated when reducing to the
/// effective model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ReductionCase {
    /// Receiver uncorrelated; gains pair T1, R1 and T2.
    #[default]
    #[serde(rename = "case-1", alias = "case1")]
    Case1,
    /// Transmitter uncorrelated; gains pair R1, R2 and T2.
    #[serde(rename = "case-2", alias = "case2")]
    Case2,
}

/// Random-matrix dimensions of the effective model: an `a × q` outer Gaussian
/// factor, a `p × q` inner one, and `s = min(a, q)` nonzero eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnsembleDims {
    pub a: usize,
    pub q: usize,
    pub p: usize,
    pub s: usize,
}

impl EnsembleDims {
    pub fn new(a: usize, q: usize, p: usize) -> Result<Self> {
        if a == 0 || q == 0 || p < q {
            return Err(Error::Domain(format!(
                "ensemble needs a >= 1 and p >= q >= 1, got a={a}, q={q}, p={p}"
            )));
        }
        Ok(EnsembleDims { a, q, p, s: a.min(q) })
    }

    pub fn for_case(case: ReductionCase, dims: &SystemDims) -> Self {
        let n = dims.n();
        let (a, other) = match case {
            ReductionCase::Case1 => (dims.k, dims.m),
            ReductionCase::Case2 => (dims.m, dims.k),
        };
        EnsembleDims { a, q: other.min(n), p: other.max(n), s: a.min(other.min(n)) }
    }
}

/// The four Kronecker correlation matrices, all real symmetric with unit
/// diagonal. `r1` and `t2` describe the IRS and are normally equal.
#[derive(Debug, Clone)]
pub struct CorrelationSet {
    pub r1: DMatrix<f64>,
    pub t1: DMatrix<f64>,
    pub r2: DMatrix<f64>,
    pub t2: DMatrix<f64>,
}

/// Descending eigenvalues of each correlation matrix.
#[derive(Debug, Clone)]
pub struct CorrelationSpectra {
    pub r1: Vec<f64>,
    pub t1: Vec<f64>,
    pub r2: Vec<f64>,
    pub t2: Vec<f64>,
}

impl CorrelationSet {
    pub fn spectra(&self) -> Result<CorrelationSpectra> {
        Ok(CorrelationSpectra {
            r1: eigen_spectrum(&self.r1)?,
            t1: eigen_spectrum(&self.t1)?,
            r2: eigen_spectrum(&self.r2)?,
            t2: eigen_spectrum(&self.t2)?,
        })
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Spatial correlation of a uniform planar IRS: `sinc(2‖u_m − u_n‖/λ)`.
///
/// Element `k` sits at column `k mod N_H`, row `k div N_H`.
pub fn irs_correlation(n_h: usize, n_v: usize, d_h: f64, d_v: f64, wavelength: f64) -> Result<DMatrix<f64>> {
    if n_h == 0 || n_v == 0 || !(d_h > 0.0 && d_v > 0.0 && wavelength > 0.0) {
        return Err(Error::Domain("IRS geometry must be positive".into()));
    }
    let n = n_h * n_v;
    let pos = |k: usize| ((k % n_h) as f64 * d_h, (k / n_h) as f64 * d_v);
    Ok(DMatrix::from_fn(n, n, |i, j| {
        let (xi, yi) = pos(i);
        let (xj, yj) = pos(j);
        sinc(2.0 * (xi - xj).hypot(yi - yj) / wavelength)
    }))
}

/// Exponential correlation `ρ^{|i−j|}` of a uniform linear array.
pub fn ula_correlation(n: usize, rho: f64) -> Result<DMatrix<f64>> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::Domain(format!("rho must lie in [0, 1), got {rho}")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rho.powi(i.abs_diff(j) as i32)))
}

/// Linear path gain `β = 10^{−C/10} · d^{−ν}` for attenuation `C` dB at 1 m.
pub fn path_loss(c_db: f64, nu: f64, d: f64) -> Result<f64> {
    if d.is_nan() || d <= 0.0 {
        return Err(Error::Domain(format!("distance must be positive, got {d}")));
    }
    Ok(10f64.powf(-c_db / 10.0) * d.powf(-nu))
}

/// Eigenvalues of a symmetric PSD matrix in descending order. Round-off
/// negatives above `−1e−10` are clamped to zero.
pub fn eigen_spectrum(matrix: &DMatrix<f64>) -> Result<Vec<f64>> {
    if !matrix.is_square() {
        return Err(Error::Domain("correlation matrix must be square".into()));
    }
    let scale = matrix.amax().max(1.0);
    if (matrix - matrix.transpose()).amax() > 1e-12 * scale {
        return Err(Error::Domain("correlation matrix is not symmetric".into()));
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(matrix.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    if let Some(&min) = ev.last() {
        if min < -1e-10 * scale {
            return Err(Error::Domain(format!("matrix is not PSD (eigenvalue {min})")));
        }
    }
    Ok(ev.into_iter().map(|v| v.max(0.0)).collect())
}

/// Per-stream gains `γ_i = base_i · α²(φ_i)`, where `base_i` collects power,
/// path loss and the paired correlation eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct GainVector {
    gammas: Vec<f64>,
    base: Vec<f64>,
    alpha: Vec<f64>,
}

impl GainVector {
    /// Gains with no phase dependence.
    pub fn from_gammas(gammas: Vec<f64>) -> Result<Self> {
        if gammas.is_empty() || gammas.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
            return Err(Error::Domain("gains must be positive and finite".into()));
        }
        Ok(GainVector { base: gammas.clone(), alpha: vec![1.0; gammas.len()], gammas })
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn len(&self) -> usize {
        self.gammas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gammas.is_empty()
    }

    /// `dγ_n/dφ_n = 2 γ_n α'(φ_n)/α(φ_n)`.
    pub fn dgamma_dphi(&self, n: usize, phi: f64, profile: &PhaseShiftProfile) -> f64 {
        2.0 * self.gammas[n] * amplitude_derivative(phi, profile) / self.alpha[n]
    }
}

/// Assembles the gains of the effective model.
///
/// Spectra are paired by descending index. `power` holds `p_i` per stream,
/// and `beta_product` multiplies every gain.
pub fn assemble_gains(
    case: ReductionCase,
    dims: &EnsembleDims,
    spectra: &CorrelationSpectra,
    profile: &PhaseShiftProfile,
    phases: &PhaseVector,
    power: &[f64],
    beta_product: f64,
) -> Result<GainVector> {
    let q = dims.q;
    if phases.len() != q || power.len() != q {
        return Err(Error::Domain(format!(
            "expected {q} phases and powers, got {} and {}",
            phases.len(),
            power.len()
        )));
    }
    let parts: [&[f64]; 3] = match case {
        ReductionCase::Case1 => [&spectra.t1, &spectra.r1, &spectra.t2],
        ReductionCase::Case2 => [&spectra.r2, &spectra.r1, &spectra.t2],
    };
    if parts.iter().any(|s| s.len() < q) {
        return Err(Error::Domain(format!("every participating spectrum needs at least {q} eigenvalues")));
    }
    let mut base = Vec::with_capacity(q);
    let mut alpha = Vec::with_capacity(q);
    let mut gammas = Vec::with_capacity(q);
    for i in 0..q {
        let b = beta_product * power[i] * parts.iter().map(|s| s[i]).product::<f64>();
        let a = amplitude(phases.as_slice()[i], profile);
        let g = b * a * a;
        if !(g.is_finite() && g > 0.0) {
            return Err(Error::Domain(format!("gain {i} is not positive ({g})")));
        }
        base.push(b);
        alpha.push(a);
        gammas.push(g);
    }
    Ok(GainVector { gammas, base, alpha })
}

impl GainVector {
    /// Recomputes the gains for new phases, keeping the base factors.
    pub fn with_phases(&self, phases: &[f64], profile: &PhaseShiftProfile) -> GainVector {
        let alpha: Vec<f64> = phases.iter().map(|&p| amplitude(p, profile)).collect();
        let gammas = self.base.iter().zip(&alpha).map(|(b, a)| b * a * a).collect();
        GainVector { gammas, base: self.base.clone(), alpha }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn identity_spectra(n: usize) -> CorrelationSpectra {
        CorrelationSpectra { r1: vec![1.0; n], t1: vec![1.0; n], r2: vec![1.0; n], t2: vec![1.0; n] }
    }

    #[test]
    fn irs_correlation_entries() {
        let r = irs_correlation(4, 4, 0.5, 0.5, 1.0).unwrap();
        assert_eq!(r[(3, 3)], 1.0);
        assert!(r[(0, 1)].abs() < 1e-15);
        let r = irs_correlation(4, 4, 0.25, 0.25, 1.0).unwrap();
        let ev = eigen_spectrum(&r).unwrap();
        assert!(*ev.last().unwrap() >= -1e-10);
        assert!((ev.iter().sum::<f64>() - 16.0).abs() < 1e-10 * 16.0);
        assert!(ev.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn ula_examples() {
        assert_eq!(ula_correlation(3, 0.0).unwrap(), DMatrix::identity(3, 3));
        let r = ula_correlation(2, 0.5).unwrap();
        assert_eq!(r, DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]));
        let ev = eigen_spectrum(&r).unwrap();
        assert!((ev[0] - 1.5).abs() < 1e-14 && (ev[1] - 0.5).abs() < 1e-14);
        assert!(ula_correlation(2, 1.0).is_err());
    }

    #[test]
    fn path_loss_values() {
        let b1 = path_loss(26.0, 2.2, 8.0).unwrap();
        assert!((b1 - 10f64.powf(-2.6) * 8f64.powf(-2.2)).abs() < 1e-20);
        assert!((b1 - 2.59e-5).abs() < 5e-8);
        assert_eq!(path_loss(0.0, 3.0, 1.0).unwrap(), 1.0);
        let b2 = path_loss(28.0, 3.67, 60.0).unwrap();
        assert!((b2 / (10f64.powf(-2.8) * 60f64.powf(-3.67)) - 1.0).abs() < 1e-14);
        assert!(path_loss(0.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn spectrum_rejects_asymmetric() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.1, 1.0]);
        assert!(eigen_spectrum(&m).is_err());
        assert_eq!(eigen_spectrum(&DMatrix::identity(3, 3)).unwrap(), vec![1.0; 3]);
    }

    #[test]
    fn ensemble_cases() {
        let d = SystemDims::new(2, 3, 2, 2).unwrap();
        assert_eq!(EnsembleDims::for_case(ReductionCase::Case1, &d), EnsembleDims { a: 3, q: 2, p: 4, s: 2 });
        assert_eq!(EnsembleDims::for_case(ReductionCase::Case2, &d), EnsembleDims { a: 2, q: 3, p: 4, s: 2 });
        assert!(EnsembleDims::new(1, 3, 2).is_err());
    }

    #[test]
    fn gains_identity_and_trough() {
        let dims = EnsembleDims::new(4, 4, 4).unwrap();
        let ideal = assemble_gains(
            ReductionCase::Case1,
            &dims,
            &identity_spectra(4),
            &PhaseShiftProfile::ideal(),
            &PhaseVector::constant(4, 0.3),
            &[1.0; 4],
            1.0,
        )
        .unwrap();
        assert_eq!(ideal.gammas(), &[1.0; 4]);
        let prof = PhaseShiftProfile::default();
        let trough = assemble_gains(
            ReductionCase::Case1,
            &dims,
            &identity_spectra(4),
            &prof,
            &PhaseVector::constant(4, prof.vartheta() - PI / 2.0),
            &[1.0; 4],
            1.0,
        )
        .unwrap();
        for g in trough.gammas() {
            assert!((g - 0.64).abs() < 1e-14);
        }
    }

    #[test]
    fn gains_case1_hand_product() {
        // M=2, N=4: q=2, pairing T1, R1, T2 by descending index
        let spectra = CorrelationSpectra {
            t1: vec![1.5, 0.5],
            r1: vec![2.0, 1.2, 0.5, 0.3],
            t2: vec![2.0, 1.2, 0.5, 0.3],
            r2: vec![1.0; 3],
        };
        let dims = EnsembleDims::for_case(ReductionCase::Case1, &SystemDims::new(2, 3, 2, 2).unwrap());
        let g = assemble_gains(
            ReductionCase::Case1,
            &dims,
            &spectra,
            &PhaseShiftProfile::ideal(),
            &PhaseVector::constant(2, 0.0),
            &[1.0, 1.0],
            0.5,
        )
        .unwrap();
        assert!((g.gammas()[0] - 0.5 * 1.5 * 4.0).abs() < 1e-14);
        assert!((g.gammas()[1] - 0.5 * 0.5 * 1.44).abs() < 1e-14);
    }

    #[test]
    fn gain_phase_derivative_matches_difference() {
        let prof = PhaseShiftProfile::default();
        let g = GainVector::from_gammas(vec![1.3, 0.4]).unwrap().with_phases(&[0.2, -1.0], &prof);
        let h = 1e-6;
        let up = g.with_phases(&[0.2 + h, -1.0], &prof).gammas()[0];
        let dn = g.with_phases(&[0.2 - h, -1.0], &prof).gammas()[0];
        assert!((g.dgamma_dphi(0, 0.2, &prof) - (up - dn) / (2.0 * h)).abs() < 1e-8);
    }

    proptest! {
        #[test]
        fn irs_correlation_is_unit_diagonal_psd(nh in 1usize..6, nv in 1usize..6, dh in 0.05f64..1.0, dv in 0.05f64..1.0) {
            let r = irs_correlation(nh, nv, dh, dv, 1.0).unwrap();
            for i in 0..r.nrows() { prop_assert_eq!(r[(i, i)], 1.0); }
            let ev = eigen_spectrum(&r).unwrap();
            prop_assert!((ev.iter().sum::<f64>() - r.nrows() as f64).abs() < 1e-9 * r.nrows() as f64);
        }

        #[test]
        fn gains_monotone_in_eigenvalue(e in 0.1f64..5.0, bump in 1e-3f64..1.0, phi in -PI..PI) {
            let dims = EnsembleDims::new(2, 1, 2).unwrap();
            let prof = PhaseShiftProfile::default();
            let mk = |v: f64| CorrelationSpectra { t1: vec![1.0], r1: vec![v], t2: vec![1.0], r2: vec![1.0] };
            let g0 = assemble_gains(ReductionCase::Case1, &dims, &mk(e), &prof, &PhaseVector::new([phi]), &[1.0], 1.0).unwrap();
            let g1 = assemble_gains(ReductionCase::Case1, &dims, &mk(e + bump), &prof, &PhaseVector::new([phi]), &[1.0], 1.0).unwrap();
            prop_assert!(g1.gammas()[0] > g0.gammas()[0]);
        }
    }
}

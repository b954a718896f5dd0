//! Experiment configuration and the batch computations behind the CLI.
//!
//! An empty JSON object is a valid configuration: every field defaults to the
//! urban-micro reference setup (M = K = 4, a 4 × 4 IRS at quarter-wavelength
//! spacing, κ_min = 0.8, ξ = 1.6, ϑ = 0.43π, 10 dB SNR).

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize};

use crate::capacity::{db_to_linear, ergodic_capacity};
use crate::channel::{
    assemble_gains, irs_correlation, path_loss, ula_correlation, CorrelationSet, EnsembleDims, GainVector,
    ReductionCase, SystemDims,
};
use crate::eigenpdf::MarginalEigenPDF;
use crate::error::{Error, Result};
use crate::montecarlo::{mc_capacity_direct, mc_capacity_effective};
use crate::optimizer::{
    optimize_multistart, optimize_phases, random_phases, CapacityProblem, OptimizationOutcome, OptimizerConfig,
};
use crate::phase::{wrap_phase, PhaseShiftProfile, PhaseVector};
use crate::svg;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileConfig {
    pub kappa_min: f64,
    pub xi: f64,
    pub vartheta: f64,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig { kappa_min: 0.8, xi: 1.6, vartheta: 0.43 * PI }
    }
}

/// Element spacings and carrier wavelength, in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Geometry {
    pub d_h: f64,
    pub d_v: f64,
    pub wavelength: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry { d_h: 0.25, d_v: 0.25, wavelength: 1.0 }
    }
}

/// One link of the path-loss law `β = 10^{−C/10} d^{−ν}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Link {
    pub c_db: f64,
    pub nu: f64,
    pub d: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathLossConfig {
    /// Transmitter to IRS.
    pub link1: Link,
    /// IRS to receiver.
    pub link2: Link,
    /// When false the SNR is taken as already including the path loss and
    /// `β1 β2` is not applied to the gains.
    pub apply: bool,
}

impl Default for PathLossConfig {
    fn default() -> Self {
        PathLossConfig {
            link1: Link { c_db: 26.0, nu: 2.2, d: 8.0 },
            link2: Link { c_db: 28.0, nu: 3.67, d: 60.0 },
            apply: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseRule {
    /// `random_phases(q, seed)`.
    Random,
    /// Every element at the amplitude peak `ϑ + π/2`.
    Optimal,
    Zero,
}

/// Phases used by `pdf` and `capacity`, and the start of `optimize`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PhaseChoice {
    Rule(PhaseRule),
    Explicit(Vec<f64>),
}

impl Default for PhaseChoice {
    fn default() -> Self {
        PhaseChoice::Rule(PhaseRule::Random)
    }
}

/// Grid for the `pdf` command. Explicit `lambdas` win; otherwise `points`
/// values between the bounds, which default to `1e−3` and `12` times the
/// eigenvalue mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PdfGrid {
    pub lambdas: Option<Vec<f64>>,
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
    pub points: usize,
    pub log_spacing: bool,
}

impl Default for PdfGrid {
    fn default() -> Self {
        PdfGrid { lambdas: None, lambda_min: None, lambda_max: None, points: 400, log_spacing: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    /// Total IRS elements, arranged as the most nearly square grid.
    #[serde(rename = "N")]
    N,
    /// Element spacing in wavelengths, both directions.
    #[serde(rename = "d_spacing")]
    DSpacing,
    #[serde(rename = "kappa_min")]
    KappaMin,
    #[serde(rename = "xi")]
    Xi,
    /// SNR in dB.
    #[serde(rename = "snr")]
    Snr,
}

impl SweepAxis {
    pub fn label(&self) -> &'static str {
        match self {
            SweepAxis::N => "N",
            SweepAxis::DSpacing => "d_spacing",
            SweepAxis::KappaMin => "kappa_min",
            SweepAxis::Xi => "xi",
            SweepAxis::Snr => "snr",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Series {
    #[serde(rename = "optimized")]
    Optimized,
    #[serde(rename = "random")]
    Random,
    #[serde(rename = "no-irs")]
    NoIrs,
    #[serde(rename = "ideal")]
    Ideal,
}

impl Series {
    pub fn label(&self) -> &'static str {
        match self {
            Series::Optimized => "optimized",
            Series::Random => "random",
            Series::NoIrs => "no-irs",
            Series::Ideal => "ideal",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub series: Vec<Series>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            axis: SweepAxis::N,
            values: vec![16.0, 36.0, 64.0],
            series: vec![Series::Optimized, Series::Random, Series::NoIrs, Series::Ideal],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    pub trials: usize,
    pub seed: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig { trials: 20_000, seed: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSettings {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub initial_step: f64,
    pub backtrack_factor: f64,
    pub armijo_c: f64,
    pub starts: usize,
    /// Quadrature tolerance in bits for objective and gradient. Tighter than
    /// the capacity default so the line search sees a smooth objective.
    pub tol: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        let c = OptimizerConfig::default();
        OptimizerSettings {
            max_iters: c.max_iters,
            grad_tol: c.grad_tol,
            initial_step: c.initial_step,
            backtrack_factor: c.backtrack_factor,
            armijo_c: c.armijo_c,
            starts: 4,
            tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    pub csv: Option<String>,
    pub svg: Option<String>,
    /// Final phases of `optimize`.
    pub phases: Option<String>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(v) => vec![v],
        OneOrMany::Many(v) => v,
    })
}

fn opt_one_or_many<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Vec<f64>>, D::Error> {
    one_or_many(d).map(Some)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub m: usize,
    pub k: usize,
    pub n_h: usize,
    pub n_v: usize,
    pub case: ReductionCase,
    pub profile: ProfileConfig,
    pub geometry: Geometry,
    pub path_loss: PathLossConfig,
    /// Exponential correlation coefficient of the transmit array.
    pub rho_tx: f64,
    pub rho_rx: f64,
    #[serde(deserialize_with = "one_or_many")]
    pub snr_db: Vec<f64>,
    /// Linear SNR values; replace `snr_db` when present.
    #[serde(deserialize_with = "opt_one_or_many", skip_serializing_if = "Option::is_none")]
    pub snr_linear: Option<Vec<f64>>,
    pub phases: PhaseChoice,
    pub pdf: PdfGrid,
    pub sweep: SweepConfig,
    pub mc: McConfig,
    pub optimizer: OptimizerSettings,
    pub output: OutputPaths,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            m: 4,
            k: 4,
            n_h: 4,
            n_v: 4,
            case: ReductionCase::Case1,
            profile: ProfileConfig::default(),
            geometry: Geometry::default(),
            path_loss: PathLossConfig::default(),
            rho_tx: 0.0,
            rho_rx: 0.0,
            snr_db: vec![10.0],
            snr_linear: None,
            phases: PhaseChoice::default(),
            pdf: PdfGrid::default(),
            sweep: SweepConfig::default(),
            mc: McConfig::default(),
            optimizer: OptimizerSettings::default(),
            output: OutputPaths::default(),
        }
    }
}

fn config_err(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Config(msg()))
    }
}

/// The most nearly square `n_h × n_v` factorisation of `n`, with `n_h ≥ n_v`.
pub fn grid_shape(n: usize) -> (usize, usize) {
    let mut v = (n as f64).sqrt().floor() as usize;
    while v > 1 && !n.is_multiple_of(v) {
        v -= 1;
    }
    let v = v.max(1);
    (n / v, v)
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.m > 0 && self.k > 0 && self.n_h > 0 && self.n_v > 0, || {
            "m, k, n_h and n_v must be positive".into()
        })?;
        self.practical_profile()?;
        let g = &self.geometry;
        ensure([g.d_h, g.d_v, g.wavelength].iter().all(|v| v.is_finite() && *v > 0.0), || {
            "geometry entries must be positive".into()
        })?;
        for (name, r) in [("rho_tx", self.rho_tx), ("rho_rx", self.rho_rx)] {
            ensure((0.0..1.0).contains(&r), || format!("{name} must lie in [0, 1), got {r}"))?;
        }
        self.beta_product()?;
        let snr = self.snr_values();
        ensure(!snr.is_empty() && snr.iter().all(|v| v.is_finite() && *v > 0.0), || {
            "snr values must be positive and finite".into()
        })?;
        let q = self.ensemble_dims().q;
        if let PhaseChoice::Explicit(p) = &self.phases {
            ensure(p.len() == q, || format!("expected {q} explicit phases, got {}", p.len()))?;
            ensure(p.iter().all(|v| v.is_finite()), || "phases must be finite".into())?;
        }
        let pdf = &self.pdf;
        match &pdf.lambdas {
            Some(l) => ensure(!l.is_empty() && l.iter().all(|v| v.is_finite() && *v > 0.0), || {
                "pdf.lambdas must be positive".into()
            })?,
            None => {
                ensure(pdf.points >= 2, || "pdf.points must be at least 2".into())?;
                let lo = pdf.lambda_min.unwrap_or(1.0);
                let hi = pdf.lambda_max.unwrap_or(f64::MAX);
                ensure(lo > 0.0 && lo.is_finite() && hi > 0.0, || "pdf bounds must be positive".into())?;
                if let (Some(a), Some(b)) = (pdf.lambda_min, pdf.lambda_max) {
                    ensure(b > a, || "pdf.lambda_max must exceed pdf.lambda_min".into())?;
                }
            }
        }
        ensure(!self.sweep.values.is_empty() && !self.sweep.series.is_empty(), || {
            "sweep needs at least one value and one series".into()
        })?;
        for &v in &self.sweep.values {
            self.with_axis(self.sweep.axis, v)?;
        }
        ensure(self.mc.trials >= 2, || "mc.trials must be at least 2".into())?;
        self.optimizer_config().validate().map_err(config_err)?;
        ensure(self.optimizer.starts >= 1, || "optimizer.starts must be at least 1".into())?;
        ensure(self.optimizer.tol > 0.0, || "optimizer.tol must be positive".into())?;
        Ok(())
    }

    /// A copy with one sweep coordinate replaced.
    pub fn with_axis(&self, axis: SweepAxis, value: f64) -> Result<ExperimentConfig> {
        let mut c = self.clone();
        ensure(value.is_finite(), || format!("sweep value {value} is not finite"))?;
        match axis {
            SweepAxis::N => {
                ensure(value >= 1.0 && value.fract() == 0.0, || format!("N must be a positive integer, got {value}"))?;
                let (h, v) = grid_shape(value as usize);
                c.n_h = h;
                c.n_v = v;
            }
            SweepAxis::DSpacing => {
                ensure(value > 0.0, || format!("d_spacing must be positive, got {value}"))?;
                c.geometry.d_h = value * c.geometry.wavelength;
                c.geometry.d_v = value * c.geometry.wavelength;
            }
            SweepAxis::KappaMin => c.profile.kappa_min = value,
            SweepAxis::Xi => c.profile.xi = value,
            SweepAxis::Snr => {
                c.snr_db = vec![value];
                c.snr_linear = None;
            }
        }
        c.practical_profile()?;
        Ok(c)
    }

    pub fn system_dims(&self) -> SystemDims {
        SystemDims { m: self.m, k: self.k, n_h: self.n_h, n_v: self.n_v }
    }

    pub fn ensemble_dims(&self) -> EnsembleDims {
        EnsembleDims::for_case(self.case, &self.system_dims())
    }

    pub fn practical_profile(&self) -> Result<PhaseShiftProfile> {
        let p = &self.profile;
        PhaseShiftProfile::new(p.kappa_min, p.xi, p.vartheta).map_err(config_err)
    }

    pub fn correlations(&self) -> Result<CorrelationSet> {
        let g = &self.geometry;
        let irs = irs_correlation(self.n_h, self.n_v, g.d_h, g.d_v, g.wavelength)?;
        Ok(CorrelationSet {
            t1: ula_correlation(self.m, self.rho_tx)?,
            r1: irs.clone(),
            t2: irs,
            r2: ula_correlation(self.k, self.rho_rx)?,
        })
    }

    /// `β1 β2` when path loss is applied, else 1.
    pub fn beta_product(&self) -> Result<f64> {
        if !self.path_loss.apply {
            return Ok(1.0);
        }
        let (l1, l2) = (self.path_loss.link1, self.path_loss.link2);
        let b = path_loss(l1.c_db, l1.nu, l1.d).map_err(config_err)? * path_loss(l2.c_db, l2.nu, l2.d).map_err(config_err)?;
        Ok(b)
    }

    /// Gains at unit amplitude; the phase profile is applied by
    /// [`GainVector::with_phases`].
    pub fn base_gains(&self) -> Result<GainVector> {
        let dims = self.ensemble_dims();
        let spectra = self.correlations()?.spectra()?;
        let q = dims.q;
        assemble_gains(
            self.case,
            &dims,
            &spectra,
            &PhaseShiftProfile::ideal(),
            &PhaseVector::constant(q, 0.0),
            &vec![1.0; q],
            self.beta_product()?,
        )
    }

    /// Linear SNR values.
    pub fn snr_values(&self) -> Vec<f64> {
        match &self.snr_linear {
            Some(v) => v.clone(),
            None => self.snr_db.iter().map(|&d| db_to_linear(d)).collect(),
        }
    }

    pub fn phases(&self) -> PhaseVector {
        let q = self.ensemble_dims().q;
        match &self.phases {
            PhaseChoice::Rule(PhaseRule::Random) => random_phases(q, self.mc.seed),
            PhaseChoice::Rule(PhaseRule::Optimal) => PhaseVector::constant(q, wrap_phase(self.profile.vartheta + 0.5 * PI)),
            PhaseChoice::Rule(PhaseRule::Zero) => PhaseVector::constant(q, 0.0),
            PhaseChoice::Explicit(v) => PhaseVector::new(v.iter().copied()),
        }
    }

    /// Gains at the configured phases and profile.
    pub fn gains(&self) -> Result<GainVector> {
        Ok(self.base_gains()?.with_phases(self.phases().as_slice(), &self.practical_profile()?))
    }

    pub fn optimizer_config(&self) -> OptimizerConfig {
        let o = &self.optimizer;
        OptimizerConfig {
            max_iters: o.max_iters,
            grad_tol: o.grad_tol,
            initial_step: o.initial_step,
            backtrack_factor: o.backtrack_factor,
            armijo_c: o.armijo_c,
        }
    }

    pub fn problem(&self, snr: f64, profile: PhaseShiftProfile) -> Result<CapacityProblem> {
        let mut p = CapacityProblem::new(self.ensemble_dims(), self.base_gains()?, profile, snr, self.m);
        p.tol = self.optimizer.tol;
        Ok(p)
    }

    pub fn lambda_grid(&self) -> Result<Vec<f64>> {
        if let Some(l) = &self.pdf.lambdas {
            return Ok(l.clone());
        }
        let pdf = MarginalEigenPDF::new(self.ensemble_dims(), &self.gains()?)?;
        let mean = pdf.mean();
        let lo = self.pdf.lambda_min.unwrap_or(1e-3 * mean);
        let hi = self.pdf.lambda_max.unwrap_or(12.0 * mean);
        ensure(hi > lo, || format!("empty lambda range [{lo}, {hi}]"))?;
        let n = self.pdf.points;
        Ok((0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                if self.pdf.log_spacing {
                    (lo.ln() + t * (hi / lo).ln()).exp()
                } else {
                    lo + t * (hi - lo)
                }
            })
            .collect())
    }
}

/// Formats a value for CSV: plain decimals in the usual range, exponent
/// notation otherwise. Both parse as `f64` and round-trip exactly.
pub fn fmt_num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn pdf_rows(cfg: &ExperimentConfig) -> Result<Vec<(f64, f64)>> {
    let pdf = MarginalEigenPDF::new(cfg.ensemble_dims(), &cfg.gains()?)?;
    cfg.lambda_grid()?.into_iter().map(|l| Ok((l, pdf.density(l)?))).collect()
}

pub fn pdf_csv(rows: &[(f64, f64)]) -> String {
    let mut s = String::from("lambda,density\n");
    for (l, d) in rows {
        let _ = writeln!(s, "{},{}", fmt_num(*l), fmt_num(*d));
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityRow {
    pub snr_db: f64,
    pub ec_analytic: f64,
    pub ec_mc_mean: f64,
    pub ec_mc_ci99: f64,
    pub gap: f64,
}

/// Analytic capacity and its Monte-Carlo check at every configured SNR.
pub fn capacity_rows(cfg: &ExperimentConfig) -> Result<Vec<CapacityRow>> {
    let dims = cfg.ensemble_dims();
    let gains = cfg.gains()?;
    let pdf = MarginalEigenPDF::new(dims, &gains)?;
    cfg.snr_values()
        .into_iter()
        .map(|snr| {
            let a = ergodic_capacity(&pdf, snr, cfg.m, crate::capacity::DEFAULT_TOL)?;
            let mc = mc_capacity_effective(&dims, &gains, snr, cfg.m, cfg.mc.trials, cfg.mc.seed)?;
            Ok(CapacityRow {
                snr_db: 10.0 * snr.log10(),
                ec_analytic: a.ec_bits,
                ec_mc_mean: mc.mean,
                ec_mc_ci99: mc.half_width_99,
                gap: (a.ec_bits - mc.mean).abs(),
            })
        })
        .collect()
}

pub fn capacity_csv(rows: &[CapacityRow]) -> String {
    let mut s = String::from("snr_db,ec_analytic,ec_mc_mean,ec_mc_ci99,gap\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            fmt_num(r.snr_db),
            fmt_num(r.ec_analytic),
            fmt_num(r.ec_mc_mean),
            fmt_num(r.ec_mc_ci99),
            fmt_num(r.gap)
        );
    }
    s
}

/// Runs the optimizer at the first configured SNR. Random starting phases
/// use `optimizer.starts` seeds from `mc.seed`; any other choice is a single
/// start.
pub fn run_optimize(cfg: &ExperimentConfig) -> Result<OptimizationOutcome> {
    let snr = cfg.snr_values()[0];
    optimize_with(cfg, snr, cfg.practical_profile()?)
}

fn optimize_with(cfg: &ExperimentConfig, snr: f64, profile: PhaseShiftProfile) -> Result<OptimizationOutcome> {
    let problem = cfg.problem(snr, profile)?;
    let oc = cfg.optimizer_config();
    match cfg.phases {
        PhaseChoice::Rule(PhaseRule::Random) => optimize_multistart(&problem, &oc, cfg.optimizer.starts, cfg.mc.seed),
        _ => optimize_phases(&cfg.phases(), &problem, &oc),
    }
}

pub fn trace_csv(outcome: &OptimizationOutcome) -> String {
    let mut s = String::from("iteration,objective,grad_norm,step\n");
    for r in &outcome.trace {
        let _ = writeln!(s, "{},{},{},{}", r.iteration, fmt_num(r.objective), fmt_num(r.grad_norm), fmt_num(r.step));
    }
    s
}

pub fn phases_csv(phases: &PhaseVector) -> String {
    let mut s = String::from("element,phase\n");
    for (i, p) in phases.as_slice().iter().enumerate() {
        let _ = writeln!(s, "{i},{}", fmt_num(*p));
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub axis_value: f64,
    pub series: Series,
    pub ec: f64,
}

/// Capacity of one series at one configuration, at its first SNR.
pub fn series_value(cfg: &ExperimentConfig, series: Series) -> Result<f64> {
    let snr = cfg.snr_values()[0];
    let dims = cfg.ensemble_dims();
    let tol = crate::capacity::DEFAULT_TOL;
    match series {
        Series::Optimized => Ok(optimize_with(cfg, snr, cfg.practical_profile()?)?.objective),
        Series::Random => {
            let g = cfg.base_gains()?.with_phases(random_phases(dims.q, cfg.mc.seed).as_slice(), &cfg.practical_profile()?);
            Ok(ergodic_capacity(&MarginalEigenPDF::new(dims, &g)?, snr, cfg.m, tol)?.ec_bits)
        }
        Series::Ideal => Ok(ergodic_capacity(&MarginalEigenPDF::new(dims, &cfg.base_gains()?)?, snr, cfg.m, tol)?.ec_bits),
        Series::NoIrs => Ok(mc_capacity_direct(cfg.m, cfg.k, snr, cfg.mc.trials, cfg.mc.seed)?.mean),
    }
}

/// Every `(axis value, series)` pair, in axis order then series order.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepPoint>> {
    let sw = &cfg.sweep;
    let per_value: Vec<Vec<SweepPoint>> = sw
        .values
        .par_iter()
        .map(|&v| {
            let c = cfg.with_axis(sw.axis, v)?;
            sw.series
                .iter()
                .map(|&s| Ok(SweepPoint { axis_value: v, series: s, ec: series_value(&c, s)? }))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(per_value.into_iter().flatten().collect())
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut s = String::from("axis_value,series,ec\n");
    for p in points {
        let _ = writeln!(s, "{},{},{}", fmt_num(p.axis_value), p.series.label(), fmt_num(p.ec));
    }
    s
}

pub fn sweep_svg(cfg: &ExperimentConfig, points: &[SweepPoint]) -> String {
    let lines: Vec<svg::Line> = cfg
        .sweep
        .series
        .iter()
        .map(|s| svg::Line {
            label: s.label().to_string(),
            points: points.iter().filter(|p| p.series == *s).map(|p| (p.axis_value, p.ec)).collect(),
        })
        .collect();
    svg::line_chart(&format!("Ergodic capacity vs {}", cfg.sweep.axis.label()), cfg.sweep.axis.label(), "EC (bit/s/Hz)", &lines)
}

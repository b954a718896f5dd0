//! Projected gradient ascent over IRS phases with Armijo backtracking.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::capacity::{capacity_gradient, ergodic_capacity, CapacityResult, DEFAULT_TOL};
use crate::channel::{EnsembleDims, GainVector};
use crate::eigenpdf::MarginalEigenPDF;
use crate::error::{Error, Result};
use crate::phase::{wrap_phase, PhaseShiftProfile, PhaseVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub initial_step: f64,
    pub backtrack_factor: f64,
    pub armijo_c: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig { max_iters: 1000, grad_tol: 1e-7, initial_step: 1.0, backtrack_factor: 0.5, armijo_c: 1e-4 }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_iters > 0
            && self.grad_tol > 0.0
            && self.initial_step > 0.0
            && self.backtrack_factor > 0.0
            && self.backtrack_factor < 1.0
            && self.armijo_c > 0.0
            && self.armijo_c < 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid optimizer config {self:?}")))
        }
    }
}

/// A smooth objective over a phase vector, maximised by [`optimize_phases`].
pub trait PhaseObjective {
    /// Number of phases.
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(value, absolute uncertainty)`.
    fn value(&self, phases: &[f64]) -> Result<(f64, f64)>;

    /// `(value, absolute uncertainty, gradient)`. Only the gradient is used
    /// by the optimiser; values always come from [`PhaseObjective::value`].
    fn value_and_gradient(&self, phases: &[f64]) -> Result<(f64, f64, Vec<f64>)>;
}

/// The capacity maximisation problem over the phases of the `q` paired
/// IRS elements.
#[derive(Debug, Clone)]
pub struct CapacityProblem {
    pub dims: EnsembleDims,
    /// Gains whose base factors (power, path loss, eigenvalues) are fixed.
    pub gains: GainVector,
    pub profile: PhaseShiftProfile,
    pub snr: f64,
    pub m_tx: usize,
    /// Quadrature tolerance in bits; defaults to a tenth of the capacity
    /// default so the line search sees a smoother objective.
    pub tol: f64,
}

impl CapacityProblem {
    pub fn new(dims: EnsembleDims, gains: GainVector, profile: PhaseShiftProfile, snr: f64, m_tx: usize) -> Self {
        CapacityProblem { dims, gains, profile, snr, m_tx, tol: 0.1 * DEFAULT_TOL }
    }

    pub fn objective(&self, phases: &[f64]) -> Result<f64> {
        Ok(self.evaluate(phases)?.ec_bits)
    }

    fn evaluate(&self, phases: &[f64]) -> Result<CapacityResult> {
        let g = self.gains.with_phases(phases, &self.profile);
        let pdf = MarginalEigenPDF::new(self.dims, &g)?;
        ergodic_capacity(&pdf, self.snr, self.m_tx, self.tol)
    }

    pub fn objective_and_gradient(&self, phases: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (r, grad) = self.evaluate_with_gradient(phases)?;
        Ok((r.ec_bits, grad))
    }

    fn evaluate_with_gradient(&self, phases: &[f64]) -> Result<(CapacityResult, Vec<f64>)> {
        let g = self.gains.with_phases(phases, &self.profile);
        let pv = PhaseVector::new(phases.iter().copied());
        capacity_gradient(&self.dims, &g, &self.profile, &pv, self.snr, self.m_tx, self.tol)
    }
}

impl PhaseObjective for CapacityProblem {
    fn len(&self) -> usize {
        self.dims.q
    }

    fn value(&self, phases: &[f64]) -> Result<(f64, f64)> {
        let r = self.evaluate(phases)?;
        Ok((r.ec_bits, r.quad_abs_err))
    }

    fn value_and_gradient(&self, phases: &[f64]) -> Result<(f64, f64, Vec<f64>)> {
        let (r, g) = self.evaluate_with_gradient(phases)?;
        Ok((r.ec_bits, r.quad_abs_err, g))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub phases: Vec<f64>,
    pub objective: f64,
    pub grad_norm: f64,
    /// Accepted step; zero for the starting point.
    pub step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIterations,
    /// The line search could not find an ascent step above `1e−12` although
    /// the predicted gain was resolvable.
    Stalled,
}

#[derive(Debug, Clone)]
pub struct OptimizationOutcome {
    pub phases: PhaseVector,
    pub objective: f64,
    pub trace: Vec<IterationRecord>,
    pub termination: Termination,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

const MIN_STEP: f64 = 1e-12;

pub fn optimize_phases<P>(initial: &PhaseVector, problem: &P, config: &OptimizerConfig) -> Result<OptimizationOutcome>
where
    P: PhaseObjective + ?Sized,
{
    config.validate()?;
    if initial.len() != problem.len() {
        return Err(Error::Domain(format!("expected {} phases, got {}", problem.len(), initial.len())));
    }
    let mut phi = initial.as_slice().to_vec();
    // Objective values all come from the scalar integral, so the Armijo test
    // compares like with like; the vector integral supplies only gradients.
    let (mut obj, mut resolution) = problem.value(&phi)?;
    let (_, _, mut grad) = problem.value_and_gradient(&phi)?;
    let mut trace = vec![IterationRecord { iteration: 0, phases: phi.clone(), objective: obj, grad_norm: inf_norm(&grad), step: 0.0 }];
    let mut termination = Termination::MaxIterations;
    for iteration in 1..=config.max_iters {
        if inf_norm(&grad) <= config.grad_tol {
            termination = Termination::Converged;
            break;
        }
        let sq: f64 = grad.iter().map(|g| g * g).sum();
        let mut mu = config.initial_step;
        let accepted = loop {
            let trial: Vec<f64> = phi.iter().zip(&grad).map(|(p, g)| wrap_phase(p + mu * g)).collect();
            let (value, err) = problem.value(&trial)?;
            resolution = resolution.max(err);
            // Strict increase: a step that leaves the value unchanged is noise.
            if value > obj && value >= obj + config.armijo_c * mu * sq {
                break Some((trial, value));
            }
            mu *= config.backtrack_factor;
            if mu < MIN_STEP {
                break None;
            }
        };
        let Some((next, next_obj)) = accepted else {
            // No step can gain more than about `initial_step·‖q‖²`; when that is
            // below the objective's own error the iterate is as good as it gets.
            let floor = resolution.max(64.0 * f64::EPSILON * obj.abs());
            termination = if config.initial_step * sq <= floor { Termination::Converged } else { Termination::Stalled };
            break;
        };
        let (_, n_err, n_grad) = problem.value_and_gradient(&next)?;
        resolution = n_err;
        phi = next;
        obj = next_obj;
        grad = n_grad;
        trace.push(IterationRecord { iteration, phases: phi.clone(), objective: obj, grad_norm: inf_norm(&grad), step: mu });
        if iteration == config.max_iters && inf_norm(&grad) <= config.grad_tol {
            termination = Termination::Converged;
        }
    }
    Ok(OptimizationOutcome { phases: PhaseVector::new(phi), objective: obj, trace, termination })
}

/// Best of several runs started from `random_phases(q, seed + i)`.
/// Ties keep the lowest start index.
pub fn optimize_multistart<P>(problem: &P, config: &OptimizerConfig, starts: usize, seed: u64) -> Result<OptimizationOutcome>
where
    P: PhaseObjective + Sync + ?Sized,
{
    let starts = starts.max(1);
    let runs: Vec<OptimizationOutcome> = (0..starts)
        .into_par_iter()
        .map(|i| optimize_phases(&random_phases(problem.len(), seed.wrapping_add(i as u64)), problem, config))
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.objective > runs[best].objective {
            best = i;
        }
    }
    Ok(runs.into_iter().nth(best).expect("at least one start"))
}

/// iid uniform phases on `[−π, π)`.
pub fn random_phases(q: usize, seed: u64) -> PhaseVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    PhaseVector::new((0..q).map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI)))
}

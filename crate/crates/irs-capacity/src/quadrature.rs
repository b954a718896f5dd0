//! Globally adaptive Gauss–Kronrod (7/15) quadrature for vector integrands.
#![allow(clippy::excessive_precision)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
/// Gauss weights for the odd-indexed Kronrod nodes `XGK[1], XGK[3], …`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Kronrod estimate and error estimate (max over components) on `[a, b]`.
pub fn gk15<F>(f: &mut F, a: f64, b: f64, dim: usize) -> Result<(Vec<f64>, f64)>
where
    F: FnMut(f64, &mut [f64]) -> Result<()>,
{
    gk15_partial(f, a, b, dim, dim)
}

/// As [`gk15`], with the error estimate taken over the first `err_dim`
/// components only.
fn gk15_partial<F>(f: &mut F, a: f64, b: f64, dim: usize, err_dim: usize) -> Result<(Vec<f64>, f64)>
where
    F: FnMut(f64, &mut [f64]) -> Result<()>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kron = vec![0.0; dim];
    let mut gauss = vec![0.0; dim];
    let mut buf = vec![0.0; dim];
    f(c, &mut buf)?;
    for d in 0..dim {
        kron[d] = WGK[7] * buf[d];
        gauss[d] = WG[3] * buf[d];
    }
    for j in 0..7 {
        let dx = h * XGK[j];
        for x in [c - dx, c + dx] {
            f(x, &mut buf)?;
            for d in 0..dim {
                kron[d] += WGK[j] * buf[d];
                if j % 2 == 1 {
                    gauss[d] += WG[j / 2] * buf[d];
                }
            }
        }
    }
    let mut err: f64 = 0.0;
    for d in 0..dim {
        kron[d] *= h;
        gauss[d] *= h;
        if d < err_dim {
            err = err.max((kron[d] - gauss[d]).abs());
        }
    }
    Ok((kron, err))
}

struct Panel {
    a: f64,
    b: f64,
    value: Vec<f64>,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone)]
pub struct Integral {
    pub value: Vec<f64>,
    pub abs_err: f64,
    pub evaluations: usize,
}

/// Integrates a vector-valued `f` over `[a, b]` split into `initial` equal
/// panels, bisecting the worst panel until the summed error estimate meets
/// `tol` or `max_panels` is exceeded.
///
/// Error estimates below `10⁴ ε Σ|I_k|` count as converged whatever `tol` asks
/// for, since no integrand is exact to the last bit.
pub fn integrate<F>(f: F, a: f64, b: f64, dim: usize, tol: f64, initial: usize, max_panels: usize) -> Result<Integral>
where
    F: FnMut(f64, &mut [f64]) -> Result<()>,
{
    adaptive(f, a, b, dim, false, tol, initial, max_panels)
}

/// As [`integrate`] for an integrand that also reports its own absolute
/// uncertainty: `f` fills `dim + 1` slots and the last one is the
/// uncertainty. Four times its integral is added to the convergence floor and
/// to the returned `abs_err`, so refinement stops where the integrand's noise
/// starts.
#[allow(clippy::too_many_arguments)]
pub fn integrate_noisy<F>(f: F, a: f64, b: f64, dim: usize, tol: f64, initial: usize, max_panels: usize) -> Result<Integral>
where
    F: FnMut(f64, &mut [f64]) -> Result<()>,
{
    adaptive(f, a, b, dim, true, tol, initial, max_panels)
}

#[allow(clippy::too_many_arguments)]
fn adaptive<F>(mut f: F, a: f64, b: f64, dim: usize, noisy: bool, tol: f64, initial: usize, max_panels: usize) -> Result<Integral>
where
    F: FnMut(f64, &mut [f64]) -> Result<()>,
{
    let width = if noisy { dim + 1 } else { dim };
    let mut heap = BinaryHeap::new();
    let n0 = initial.max(1);
    let mut evaluations = 0;
    for i in 0..n0 {
        let lo = a + (b - a) * i as f64 / n0 as f64;
        let hi = if i + 1 == n0 { b } else { a + (b - a) * (i + 1) as f64 / n0 as f64 };
        let (value, err) = gk15_partial(&mut f, lo, hi, width, dim)?;
        evaluations += 15;
        heap.push(Panel { a: lo, b: hi, value, err });
    }
    loop {
        let total_err: f64 = heap.iter().map(|p| p.err).sum();
        let magnitude: f64 = heap.iter().map(|p| p.value[..dim].iter().fold(0.0f64, |m, v| m.max(v.abs()))).sum();
        let noise: f64 = if noisy { 4.0 * heap.iter().map(|p| p.value[dim].abs()).sum::<f64>() } else { 0.0 };
        let target = tol.max(1e4 * f64::EPSILON * magnitude).max(noise);
        if total_err <= target || heap.len() >= max_panels {
            let mut panels = heap.into_vec();
            // Fixed summation order keeps results independent of heap layout.
            panels.sort_by(|x, y| x.a.total_cmp(&y.a));
            let mut value = vec![0.0; dim];
            for p in &panels {
                for (v, pv) in value.iter_mut().zip(&p.value[..dim]) {
                    *v += pv;
                }
            }
            if total_err > target {
                return Err(Error::Quadrature { estimate: value[0], error_estimate: total_err });
            }
            return Ok(Integral { value, abs_err: total_err + noise, evaluations });
        }
        let worst = heap.pop().expect("non-empty panel heap");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // Cannot split further; accept what we have.
            heap.push(Panel { err: 0.0, ..worst });
            continue;
        }
        for (lo, hi) in [(worst.a, mid), (mid, worst.b)] {
            let (value, err) = gk15_partial(&mut f, lo, hi, width, dim)?;
            evaluations += 15;
            heap.push(Panel { a: lo, b: hi, value, err });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_are_consistent() {
        let k: f64 = WGK[7] + 2.0 * WGK[..7].iter().sum::<f64>();
        let g: f64 = WG[3] + 2.0 * WG[..3].iter().sum::<f64>();
        assert!((k - 2.0).abs() < 1e-15);
        assert!((g - 2.0).abs() < 1e-15);
    }

    #[test]
    fn exact_for_high_degree_polynomials() {
        // Kronrod 15 integrates degree 22 exactly
        let mut f = |x: f64, out: &mut [f64]| {
            out[0] = x.powi(22);
            out[1] = x.powi(13) + 3.0;
            Ok(())
        };
        let (v, _) = gk15(&mut f, 0.0, 1.0, 2).unwrap();
        assert!((v[0] - 1.0 / 23.0).abs() < 1e-15);
        assert!((v[1] - (1.0 / 14.0 + 3.0)).abs() < 1e-15);
    }

    #[test]
    fn adaptive_handles_log_singularity() {
        let r = integrate(
            |x, out| {
                out[0] = if x > 0.0 { -x.ln() } else { 0.0 };
                Ok(())
            },
            0.0,
            1.0,
            1,
            1e-12,
            4,
            2000,
        )
        .unwrap();
        assert!((r.value[0] - 1.0).abs() < 1e-11);
    }

    #[test]
    fn noise_channel_sets_the_floor() {
        // A jittery integrand cannot reach 1e-14, but declares 1e-9 of noise.
        let jitter = |x: f64| x + 1e-9 * (1e6 * x).sin();
        assert!(integrate(|x, out| { out[0] = jitter(x); Ok(()) }, 0.0, 1.0, 1, 1e-14, 1, 50).is_err());
        let f = |x: f64, out: &mut [f64]| {
            out[0] = jitter(x);
            out[1] = 1e-9;
            Ok(())
        };
        let r = integrate_noisy(f, 0.0, 1.0, 1, 1e-14, 1, 50).unwrap();
        assert!((r.value[0] - 0.5).abs() < 1e-8);
        assert!(r.abs_err >= 4e-9);
    }

    #[test]
    fn reports_non_convergence() {
        let r = integrate(
            |x, out| {
                out[0] = (1.0 / x.max(1e-300)).sin() / x.max(1e-300).sqrt();
                Ok(())
            },
            0.0,
            1.0,
            1,
            1e-14,
            1,
            8,
        );
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }
}

//! Special functions and signed log-domain arithmetic.
//!
//! Densities of Wishart-type ensembles multiply Gamma factors, Bessel
//! functions and Vandermonde-like products whose magnitudes leave the `f64`
//! range for moderate dimensions. Everything here works with logarithms of
//! magnitudes and carries the sign separately.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// A real number stored as a sign and the natural log of its magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLog {
    pub sign: i8,
    pub log_mag: f64,
}

impl SignedLog {
    pub const ZERO: SignedLog = SignedLog {
        sign: 0,
        log_mag: f64::NEG_INFINITY,
    };
    pub const ONE: SignedLog = SignedLog {
        sign: 1,
        log_mag: 0.0,
    };

    pub fn new(sign: i8, log_mag: f64) -> Self {
        if sign == 0 || log_mag == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            SignedLog {
                sign: sign.signum(),
                log_mag,
            }
        }
    }

    pub fn from_real(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            SignedLog {
                sign: if x > 0.0 { 1 } else { -1 },
                log_mag: x.abs().ln(),
            }
        }
    }

    pub fn to_real(self) -> f64 {
        match self.sign {
            0 => 0.0,
            s => f64::from(s) * self.log_mag.exp(),
        }
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    /// Multiplies by `e^shift`.
    pub fn scale(self, shift: f64) -> SignedLog {
        SignedLog::new(self.sign, self.log_mag + shift)
    }
}

impl std::ops::Mul for SignedLog {
    type Output = SignedLog;
    fn mul(self, other: SignedLog) -> SignedLog {
        SignedLog::new(self.sign * other.sign, self.log_mag + other.log_mag)
    }
}

impl std::ops::Div for SignedLog {
    type Output = SignedLog;
    fn div(self, other: SignedLog) -> SignedLog {
        assert!(other.sign != 0, "division by signed-log zero");
        SignedLog::new(self.sign * other.sign, self.log_mag - other.log_mag)
    }
}

impl std::ops::Neg for SignedLog {
    type Output = SignedLog;
    fn neg(self) -> SignedLog {
        SignedLog::new(-self.sign, self.log_mag)
    }
}

/// Sums signed-log terms, exponentiating only relative to the largest one.
///
/// Exact cancellation yields [`SignedLog::ZERO`]; an empty input is zero.
pub fn signed_logsumexp<I>(terms: I) -> SignedLog
where
    I: IntoIterator<Item = SignedLog>,
{
    let terms: Vec<SignedLog> = terms.into_iter().filter(|t| t.sign != 0).collect();
    let Some(max) = terms
        .iter()
        .map(|t| t.log_mag)
        .max_by(|a, b| a.total_cmp(b))
    else {
        return SignedLog::ZERO;
    };
    if max == f64::INFINITY {
        let s: i32 = terms
            .iter()
            .filter(|t| t.log_mag == f64::INFINITY)
            .map(|t| i32::from(t.sign))
            .sum();
        return SignedLog::new(s.signum() as i8, if s == 0 { f64::NAN } else { max });
    }
    // Separate positive and negative parts so the final subtraction is the only
    // place cancellation can happen.
    let (mut pos, mut neg) = (0.0_f64, 0.0_f64);
    for t in &terms {
        let v = (t.log_mag - max).exp();
        if t.sign > 0 {
            pos += v;
        } else {
            neg += v;
        }
    }
    let diff = pos - neg;
    if diff == 0.0 {
        SignedLog::ZERO
    } else {
        SignedLog::new(if diff > 0.0 { 1 } else { -1 }, max + diff.abs().ln())
    }
}

/// `ln Γ(x)` for positive finite `x`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::Domain(format!("log_gamma requires x > 0, got {x}")));
    }
    Ok(ln_gamma(x))
}

/// Unchecked `ln Γ(x)`; callers guarantee `x > 0`.
pub(crate) fn ln_gamma(x: f64) -> f64 {
    // Exact small factorials avoid the Lanczos error near the roots at 1 and 2.
    if x == x.trunc() && x <= 30.0 {
        return ln_factorial(x as usize - 1);
    }
    statrs::function::gamma::ln_gamma(x)
}

/// `ln n!`, exact summation for small `n`.
pub(crate) fn ln_factorial(n: usize) -> f64 {
    if n <= 30 {
        (2..=n).map(|k| (k as f64).ln()).sum()
    } else {
        statrs::function::gamma::ln_gamma(n as f64 + 1.0)
    }
}

/// `ln K_ν(x)` for integer order `ν ≥ 0`.
///
/// Works from exponentially scaled `K_0`, `K_1` and the forward ratio
/// recurrence, so neither large `x` nor large orders overflow.
pub fn log_bessel_k(order: u32, x: f64) -> Result<f64> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::Domain(format!("log_bessel_k requires x > 0, got {x}")));
    }
    Ok(*log_bessel_k_seq(order as usize, x).last().unwrap())
}

/// `ln K_n(x)` for `n = 0..=nmax`.
pub(crate) fn log_bessel_k_seq(nmax: usize, x: f64) -> Vec<f64> {
    debug_assert!(x > 0.0);
    let (k0e, k1e) = bessel_k01_scaled(x);
    let mut out = Vec::with_capacity(nmax + 1);
    let l0 = k0e.ln() - x;
    out.push(l0);
    if nmax == 0 {
        return out;
    }
    // r_n = K_n / K_{n-1}; r_{n+1} = r_{n-1}^{-1}... written as 1/r_n + 2n/x
    let mut r = k1e / k0e;
    let mut acc = l0 + r.ln();
    out.push(acc);
    for n in 1..nmax {
        r = 1.0 / r + 2.0 * n as f64 / x;
        acc += r.ln();
        out.push(acc);
    }
    out
}

/// `(e^x K_0(x), e^x K_1(x))`.
pub(crate) fn bessel_k01_scaled(x: f64) -> (f64, f64) {
    if x <= 2.0 {
        let (k0, k1) = bessel_k01_series(x);
        let e = x.exp();
        (k0 * e, k1 * e)
    } else {
        bessel_k01_steed(x)
    }
}

fn bessel_k01_series(x: f64) -> (f64, f64) {
    let y = 0.25 * x * x;
    let lh = (0.5 * x).ln();
    // I_0, I_1 and the harmonic-number sums share the same power terms.
    let mut term0 = 1.0; // y^k / (k!)^2
    let mut term1 = 0.5 * x; // (x/2) y^k / (k!(k+1)!)
    let (mut i0, mut i1) = (0.0, 0.0);
    let mut s0 = 0.0; // Σ H_k y^k/(k!)^2
    let mut s1 = 0.0; // Σ (ψ(k+1)+ψ(k+2)) (x/2) y^k/(k!(k+1)!)
    let mut h = 0.0;
    for k in 0..60 {
        let kf = k as f64;
        if k > 0 {
            term0 *= y / (kf * kf);
            term1 *= y / (kf * (kf + 1.0));
            h += 1.0 / kf;
        }
        i0 += term0;
        i1 += term1;
        s0 += h * term0;
        let psi_sum = 2.0 * (h - EULER_GAMMA) + 1.0 / (kf + 1.0);
        s1 += psi_sum * term1;
        if term0 < 1e-18 * i0 && k > 2 {
            break;
        }
    }
    let k0 = -(lh + EULER_GAMMA) * i0 + s0;
    let k1 = 1.0 / x + lh * i1 - 0.5 * s1;
    (k0, k1)
}

/// Steed's continued fraction for `K_0`, `K_1`, valid for `x ≥ 2`.
fn bessel_k01_steed(x: f64) -> (f64, f64) {
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 1..10_000 {
        let fi = i as f64;
        a -= 2.0 * fi;
        c = -a * c / (fi + 1.0);
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    h *= a1;
    let k0e = (PI / (2.0 * x)).sqrt() / s;
    let k1e = k0e * (x + 0.5 - h) / x;
    (k0e, k1e)
}

/// Signed cofactors of the Hankel matrix `G[m][n] = Γ(p − q + m + n − 1)`.
#[derive(Debug, Clone)]
pub struct CofactorTable {
    pub q: usize,
    /// `entries[l][k]` is the cofactor of entry `(l, k)` (zero-based).
    pub entries: Vec<Vec<SignedLog>>,
    /// `ln |det G|`; the determinant is positive (a moment matrix).
    pub log_det: f64,
}

impl CofactorTable {
    pub fn get(&self, l: usize, k: usize) -> SignedLog {
        self.entries[l][k]
    }
}

/// All signed cofactors of the `q × q` Gamma Hankel matrix.
///
/// `G` is the moment matrix of the Laguerre weight `x^α e^{−x}` with
/// `α = p − q`, so `G^{-1} = Σ_k c_k c_kᵀ / h_k` over the monic Laguerre
/// polynomials `P_k(x) = Σ_j c_{k,j} x^j` with norms `h_k = k! Γ(k+α+1)`.
/// Every term of a given entry carries the sign `(−1)^{l+k}`, so the sums
/// are free of cancellation.
pub fn gamma_cofactors(q: usize, p: usize) -> Result<CofactorTable> {
    if q == 0 || p < q {
        return Err(Error::Domain(format!(
            "gamma_cofactors requires p >= q >= 1, got q={q}, p={p}"
        )));
    }
    let alpha = p - q;
    // ln |c_{k,j}| = ln k! − ln j! + ln C(k+α, k−j)
    let ln_c = |k: usize, j: usize| {
        ln_factorial(k) - ln_factorial(j) + ln_factorial(k + alpha)
            - ln_factorial(k - j)
            - ln_factorial(j + alpha)
    };
    let ln_h: Vec<f64> = (0..q).map(|k| ln_factorial(k) + ln_factorial(k + alpha)).collect();
    let log_det: f64 = ln_h.iter().sum();
    let entries = (0..q)
        .map(|l| {
            (0..q)
                .map(|k| {
                    let sign = if (l + k) % 2 == 0 { 1 } else { -1 };
                    let terms = (l.max(k)..q).map(|j| SignedLog::new(1, ln_c(j, l) + ln_c(j, k) - ln_h[j]));
                    let s = signed_logsumexp(terms);
                    SignedLog::new(sign, s.log_mag + log_det)
                })
                .collect()
        })
        .collect();
    Ok(CofactorTable {
        q,
        entries,
        log_det,
    })
}

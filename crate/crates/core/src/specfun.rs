//! Gamma, beta and digamma functions and the extended Mittag-Leffler series
//! `E_{α,β,p}(z) = Σ_n z^n / Γ(αn + β)^{1/p}`.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::extreal::ExtReal;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

// B_{2k} for k = 1..=10
const BERNOULLI: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} requires a positive finite argument, got {x}")))
    }
}

/// `ζ(k)` for `k = 2..=64` by Euler-Maclaurin summation.
fn zeta_table() -> &'static [f64; 65] {
    static TABLE: OnceLock<[f64; 65]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut z = [0.0; 65];
        let n = 12.0f64;
        for (k, slot) in z.iter_mut().enumerate().skip(2) {
            let s = k as f64;
            let mut acc: f64 = (1..12).rev().map(|i| (i as f64).powf(-s)).sum();
            acc += n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s);
            // Σ B_{2j}/(2j)! · s(s+1)…(s+2j-2) · n^{-s-2j+1}
            let mut rising = s;
            let mut fact = 2.0;
            for (j, b) in BERNOULLI.iter().enumerate().take(6) {
                let jj = j as f64 + 1.0;
                acc += b / fact * rising * n.powf(-s - 2.0 * jj + 1.0);
                rising *= (s + 2.0 * jj - 1.0) * (s + 2.0 * jj);
                fact *= (2.0 * jj + 1.0) * (2.0 * jj + 2.0);
            }
            *slot = acc;
        }
        z
    })
}

/// `ln Γ(1 + z)` for `|z| <= 1/2` from its Taylor series.
fn ln_gamma_1p(z: f64) -> f64 {
    let zeta = zeta_table();
    let mut acc = -EULER_GAMMA * z;
    let mut zk = -z;
    for (k, zk_coef) in zeta.iter().enumerate().skip(2) {
        zk *= -z;
        let term = zk_coef * zk / k as f64;
        acc += term;
        if term.abs() < 1e-18 * acc.abs().max(1e-300) {
            break;
        }
    }
    acc
}

fn ln_gamma_stirling(x: f64) -> f64 {
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut corr = 0.0;
    let mut pow = inv;
    for (k, b) in BERNOULLI.iter().enumerate().take(8) {
        let kk = 2.0 * (k as f64 + 1.0);
        corr += b / (kk * (kk - 1.0)) * pow;
        pow *= inv2;
    }
    (x - 0.5) * x.ln() - x + LN_SQRT_2PI + corr
}

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    check_positive("ln_gamma", x)?;
    Ok(ln_gamma_unchecked(x))
}

pub(crate) fn ln_gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        ln_gamma_1p(x) - x.ln()
    } else if x <= 1.5 {
        ln_gamma_1p(x - 1.0)
    } else if x <= 2.5 {
        // ln Γ(x) = ln(x-1) + ln Γ(x-1), no cancellation near x = 2
        (x - 1.0).ln() + ln_gamma_1p(x - 2.0)
    } else if x < 10.0 {
        let mut prod = 1.0;
        let mut y = x;
        while y < 10.0 {
            prod *= y;
            y += 1.0;
        }
        ln_gamma_stirling(y) - prod.ln()
    } else {
        ln_gamma_stirling(x)
    }
}

/// `Γ(x)` for `x > 0`; overflows to `+∞` beyond `x ≈ 171.6`.
pub fn gamma(x: f64) -> Result<f64> {
    Ok(ln_gamma(x)?.exp())
}

/// `B(a, b) = Γ(a)Γ(b)/Γ(a+b)`, evaluated in log space.
pub fn beta(a: f64, b: f64) -> Result<f64> {
    check_positive("beta", a)?;
    check_positive("beta", b)?;
    Ok((ln_gamma_unchecked(a) + ln_gamma_unchecked(b) - ln_gamma_unchecked(a + b)).exp())
}

/// `ψ(x) = Γ'(x)/Γ(x)` for `x > 0`.
pub fn digamma(x: f64) -> Result<f64> {
    check_positive("digamma", x)?;
    let mut acc = 0.0;
    let mut y = x;
    while y < 12.0 {
        acc -= 1.0 / y;
        y += 1.0;
    }
    let inv2 = 1.0 / (y * y);
    let mut pow = inv2;
    let mut series = 0.0;
    for (k, b) in BERNOULLI.iter().enumerate().take(8) {
        series += b / (2.0 * (k as f64 + 1.0)) * pow;
        pow *= inv2;
    }
    Ok(acc + y.ln() - 0.5 / y - series)
}

/// Location and value of the minimum of `Γ` on `(0, ∞)`, by bisection on the
/// sign change of `ψ` over `(1, 2)`.
pub fn gamma_min_point() -> (f64, f64) {
    static MIN: OnceLock<(f64, f64)> = OnceLock::new();
    *MIN.get_or_init(|| {
        let (mut lo, mut hi) = (1.0f64, 2.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if digamma(mid).unwrap() < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let x = 0.5 * (lo + hi);
        (x, gamma(x).unwrap())
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MLParams {
    pub alpha: f64,
    pub beta: f64,
    pub p: f64,
}

impl MLParams {
    pub fn new(alpha: f64, beta: f64, p: f64) -> Result<Self> {
        let params = MLParams { alpha, beta, p };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(invalid(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(invalid(format!("beta must be nonnegative, got {}", self.beta)));
        }
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return Err(invalid(format!("p must be at least 1, got {}", self.p)));
        }
        Ok(())
    }

    /// `ln(1/Γ(αn+β)^{1/p})`, or `-∞` for the `n = 0, β = 0` coefficient.
    pub fn ln_coefficient(&self, n: usize) -> f64 {
        let arg = self.alpha * n as f64 + self.beta;
        if arg == 0.0 {
            f64::NEG_INFINITY
        } else {
            -ln_gamma_unchecked(arg) / self.p
        }
    }
}

/// A truncated series of nonnegative terms.
///
/// When `converged` is set the exact value lies in `[sum, sum + tail_bound]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesValue {
    pub sum: ExtReal,
    pub tail_bound: ExtReal,
    pub terms_used: usize,
    pub converged: bool,
}

impl SeriesValue {
    pub fn exact(sum: f64, terms_used: usize) -> Self {
        SeriesValue { sum: ExtReal::saturating(sum), tail_bound: ExtReal::ZERO, terms_used, converged: true }
    }

    pub fn divergent(terms_used: usize) -> Self {
        SeriesValue { sum: ExtReal::Infinity, tail_bound: ExtReal::Infinity, terms_used, converged: false }
    }

    /// Upper end of the certified enclosure.
    pub fn upper(&self) -> ExtReal {
        self.sum + self.tail_bound
    }
}

pub(crate) const MAX_SERIES_TERMS: usize = 200_000;

/// Sums nonnegative terms `term(0), term(1), ...` whose consecutive ratios
/// are eventually nonincreasing.
///
/// Stops once a term is below `tol · max(1, sum)` and the last ratio is below
/// 1/2; with nonincreasing ratios the remaining tail is at most the last
/// term, and `2 · last` is reported.
pub(crate) fn sum_ratio_series(mut term: impl FnMut(usize) -> f64, tol: f64) -> SeriesValue {
    let mut sum = 0.0;
    let mut prev = 0.0;
    for n in 0..MAX_SERIES_TERMS {
        let t = term(n);
        if !t.is_finite() {
            return SeriesValue::divergent(n + 1);
        }
        sum += t;
        if !sum.is_finite() {
            return SeriesValue::divergent(n + 1);
        }
        let small = t < tol * sum.max(1.0);
        let decaying = (prev > 0.0 && t / prev < 0.5) || (t == 0.0 && prev == 0.0 && n > 0);
        if n > 0 && small && decaying {
            return SeriesValue {
                sum: ExtReal::saturating(sum),
                tail_bound: ExtReal::saturating(2.0 * t),
                terms_used: n + 1,
                converged: true,
            };
        }
        prev = t;
    }
    SeriesValue {
        sum: ExtReal::saturating(sum),
        tail_bound: ExtReal::Infinity,
        terms_used: MAX_SERIES_TERMS,
        converged: false,
    }
}

/// `E_{α,β,p}(z)` for `z >= 0`. With `β = 0` the `n = 0` term is 0.
pub fn mittag_leffler(params: MLParams, z: f64, tol: f64) -> Result<SeriesValue> {
    params.validate()?;
    if !(tol > 0.0) {
        return Err(invalid(format!("tolerance must be positive, got {tol}")));
    }
    if !(z >= 0.0) || z.is_infinite() {
        return Err(invalid(format!("argument must be finite and nonnegative, got {z}")));
    }
    if z == 0.0 {
        return Ok(SeriesValue::exact(params.ln_coefficient(0).exp(), 1));
    }
    let lz = z.ln();
    Ok(sum_ratio_series(|n| (n as f64 * lz + params.ln_coefficient(n)).exp(), tol))
}

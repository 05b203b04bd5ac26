//! Iterated kernels of `k(t, s) = (t - s)^{α-1} (s - t0)^{-β}`.
//!
//! `R_{k^p, n}(t, s) = f_{p,n}(t - s, s - t0)` with `f_1(x, y) = x^{α_p-1} y^{-βp}`
//! and
//!
//! ```text
//! f_{n+1}(x, y) = x^{α_p} ∫_0^1 (1-λ)^{α_p-1} (λx + y)^{-βp} f_n(λx, y) dλ,
//! ```
//!
//! where `α_p = (α - 1)p + 1`. For `β = 0` this is
//! `Γ(α_p)^n / Γ(α_p n) x^{α_p n - 1}`. For `β > 0` we write
//! `f_n(x, y) = x^{a n + βp - 1} y^{-βp} g_n(x / y)` with `a = α_p - βp`, which
//! turns the recursion into a one-variable one,
//!
//! ```text
//! g_{n+1}(ζ) = ∫_0^1 (1-λ)^{α_p-1} λ^{a n - 1} (λζ / (1 + λζ))^{βp} g_n(λζ) dλ,
//! ```
//!
//! tabulated on a logarithmic grid. `g_n` increases from `0` to
//! `g_n(∞) = Π_{i<n} B(a i, α_p)`, which is the closed-form bound.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::quadrature::singular_rule;
use crate::specfun::{gamma_min_point, ln_gamma};

/// Parameters of the fractional iterated kernels of `k^p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FractionalResolventParams {
    pub alpha: f64,
    pub beta: f64,
    pub p: f64,
    /// `(α - 1)p + 1`
    pub alpha_p: f64,
    /// `α_p - βp`
    pub a: f64,
    /// First `i` with `a i` beyond the minimum point of `Γ`.
    pub n_gamma: usize,
    /// `max_n ĉ_n`
    pub c_hat: f64,
}

impl FractionalResolventParams {
    pub fn new(alpha: f64, beta: f64, p: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite() && beta >= 0.0 && beta.is_finite()) {
            return Err(invalid(format!("need alpha > 0 and beta >= 0, got alpha = {alpha}, beta = {beta}")));
        }
        if !(p >= 1.0 && p.is_finite()) {
            return Err(invalid(format!("p must be at least 1, got {p}")));
        }
        let alpha_p = (alpha - 1.0) * p + 1.0;
        if !(beta * p < alpha_p) {
            return Err(invalid(format!(
                "fractional kernel with p = {p} needs beta * p < (alpha - 1) p + 1, got alpha = {alpha}, beta = {beta}"
            )));
        }
        let a = alpha_p - beta * p;
        let x_gamma = gamma_min_point().0;
        let n_gamma = ((x_gamma / a).ceil() as usize).max(1);
        let mut params = FractionalResolventParams { alpha, beta, p, alpha_p, a, n_gamma, c_hat: 1.0 };
        params.c_hat = (1..=n_gamma).map(|i| params.c_hat_n(i)).fold(1.0, f64::max);
        Ok(params)
    }

    pub fn beta_p(&self) -> f64 {
        self.beta * self.p
    }

    /// `ĉ_n = Π_{i=1}^{n-1} Γ(a i) / Γ(a i + βp)`
    pub fn c_hat_n(&self, n: usize) -> f64 {
        self.ln_c_hat_n(n).exp()
    }

    fn ln_c_hat_n(&self, n: usize) -> f64 {
        let bp = self.beta_p();
        (1..n)
            .map(|i| {
                let x = self.a * i as f64;
                ln_gamma(x).unwrap() - ln_gamma(x + bp).unwrap()
            })
            .sum()
    }

    /// `ln c_n` with `c_n = ĉ_n Γ(α_p)^n / Γ(a n + βp) = sup g_n`.
    pub fn ln_c_n(&self, n: usize) -> f64 {
        self.ln_c_hat_n(n) + n as f64 * ln_gamma(self.alpha_p).unwrap()
            - ln_gamma(self.a * n as f64 + self.beta_p()).unwrap()
    }

    /// Exponent of `x` in `f_n`: `a n + βp - 1`.
    pub fn x_exponent(&self, n: usize) -> f64 {
        self.a * n as f64 + self.beta_p() - 1.0
    }
}

/// Grid of `ln ζ` for the `g_n` tables.
const LN_ZETA_MAX: f64 = 28.0;
const PER_UNIT: usize = 12;
const INTERP_POINTS: usize = 6;
const RULE_LEVEL: u32 = 2;

/// Lazily extended tables of `ln g_n`.
pub struct FractionalIterates {
    params: FractionalResolventParams,
    ln_zeta: Vec<f64>,
    tables: Mutex<Vec<Arc<Vec<f64>>>>,
}

impl FractionalIterates {
    pub fn new(params: FractionalResolventParams) -> Self {
        let m = (2.0 * LN_ZETA_MAX) as usize * PER_UNIT;
        let ln_zeta = (0..=m).map(|i| -LN_ZETA_MAX + i as f64 / PER_UNIT as f64).collect();
        FractionalIterates { params, ln_zeta, tables: Mutex::new(vec![]) }
    }

    /// Shared instance for the given parameters.
    pub fn shared(params: FractionalResolventParams) -> Arc<Self> {
        type Key = (u64, u64, u64);
        static CACHE: OnceLock<Mutex<HashMap<Key, Arc<FractionalIterates>>>> = OnceLock::new();
        let key = (params.alpha.to_bits(), params.beta.to_bits(), params.p.to_bits());
        let mut map = CACHE.get_or_init(Default::default).lock().unwrap();
        map.entry(key).or_insert_with(|| Arc::new(FractionalIterates::new(params))).clone()
    }

    pub fn params(&self) -> &FractionalResolventParams {
        &self.params
    }

    fn table(&self, n: usize) -> Arc<Vec<f64>> {
        assert!(n >= 1);
        let mut tables = self.tables.lock().unwrap();
        while tables.len() < n {
            let k = tables.len();
            let next = if k == 0 {
                vec![0.0; self.ln_zeta.len()]
            } else {
                self.next_table(k, &tables[k - 1])
            };
            tables.push(Arc::new(next));
        }
        tables[n - 1].clone()
    }

    /// `ln g_{n+1}` from `ln g_n`.
    fn next_table(&self, n: usize, prev: &[f64]) -> Vec<f64> {
        let par = &self.params;
        let bp = par.beta_p();
        let rule = singular_rule(par.a * n as f64, par.alpha_p, RULE_LEVEL).expect("positive exponents");
        let ln_sup = par.ln_c_n(n);
        self.ln_zeta
            .iter()
            .map(|&lz| {
                let zeta = lz.exp();
                let mut acc = 0.0;
                for (&lam, &w) in rule.nodes.iter().zip(&rule.weights) {
                    let z = lam * zeta;
                    if z <= 0.0 {
                        continue;
                    }
                    let ln_g = self.interp(n, prev, ln_sup, z.ln());
                    acc += w * (bp * (z / (1.0 + z)).ln() + ln_g).exp();
                }
                acc.ln()
            })
            .collect()
    }

    /// `ln g_n` at `ln ζ` from its table, with power-law extrapolation below
    /// the grid and relaxation to the supremum above it.
    fn interp(&self, n: usize, table: &[f64], ln_sup: f64, lz: f64) -> f64 {
        let h = 1.0 / PER_UNIT as f64;
        let last = table.len() - 1;
        if lz <= self.ln_zeta[0] {
            let slope = (n as f64 - 1.0) * self.params.beta_p();
            return table[0] + slope * (lz - self.ln_zeta[0]);
        }
        if lz >= self.ln_zeta[last] {
            // g(∞) - g(ζ) decays like ζ^{-ν}
            let nu = (self.params.a * n as f64).min(1.0);
            let gap = (ln_sup.exp() - table[last].exp()).max(0.0);
            let gap = gap * (-(nu * (lz - self.ln_zeta[last]))).exp();
            return (ln_sup.exp() - gap).ln();
        }
        let pos = (lz - self.ln_zeta[0]) / h;
        let start = (pos.floor() as isize - (INTERP_POINTS as isize / 2 - 1))
            .clamp(0, (table.len() - INTERP_POINTS) as isize) as usize;
        let mut acc = 0.0;
        for j in 0..INTERP_POINTS {
            let mut l = 1.0;
            for k in 0..INTERP_POINTS {
                if k != j {
                    l *= (pos - (start + k) as f64) / (j as f64 - k as f64);
                }
            }
            acc += l * table[start + j];
        }
        acc
    }

    /// `g_n(ζ)`
    pub fn g(&self, n: usize, zeta: f64) -> f64 {
        if n == 1 {
            return 1.0;
        }
        if zeta <= 0.0 {
            return 0.0;
        }
        if zeta.is_infinite() {
            return self.params.ln_c_n(n).exp();
        }
        let t = self.table(n);
        self.interp(n, &t, self.params.ln_c_n(n), zeta.ln()).exp()
    }

    /// `f_{p,n}(x, y)`
    pub fn f(&self, n: usize, x: f64, y: f64) -> f64 {
        let par = &self.params;
        let bp = par.beta_p();
        let e = par.x_exponent(n);
        if bp == 0.0 {
            return closed_form(par, n, x);
        }
        if x <= 0.0 {
            return if e < 0.0 {
                f64::INFINITY
            } else if e == 0.0 && n == 1 {
                y.powf(-bp)
            } else {
                0.0
            };
        }
        if y <= 0.0 {
            return f64::INFINITY;
        }
        let ln = e * x.ln() - bp * y.ln() + self.g(n, x / y).ln();
        ln.exp()
    }

    /// `∫_0^1 λ^{-βp} (1-λ)^{a_n} g_n((1-λ)/λ) dλ`: the integral of
    /// `f_n(t - s, s - t0)` over `s ∈ [t0, t]` divided by `(t - t0)^{a n}`.
    pub fn integral_factor(&self, n: usize) -> f64 {
        let par = &self.params;
        let bp = par.beta_p();
        if bp == 0.0 {
            // ∫_0^T c_n x^{α_p n - 1} dx
            return (par.ln_c_n(n) - (par.alpha_p * n as f64).ln()).exp();
        }
        let rule = singular_rule(1.0 - bp, par.x_exponent(n) + 1.0, RULE_LEVEL + 1).expect("βp < 1");
        rule.apply(|lam| self.g(n, (1.0 - lam) / lam))
    }

    /// Same as [`Self::integral_factor`] against a weight `v(λ)`, where
    /// `s = t0 + λ (t - t0)`.
    pub fn weighted_integral_factor(&self, n: usize, v: &dyn Fn(f64) -> f64) -> f64 {
        let par = &self.params;
        let bp = par.beta_p();
        let rule = singular_rule(1.0 - bp, par.x_exponent(n) + 1.0, RULE_LEVEL + 1).expect("βp < 1");
        rule.apply(|lam| {
            let w = v(lam);
            if w == 0.0 {
                0.0
            } else {
                w * self.g(n, (1.0 - lam) / lam)
            }
        })
    }
}

fn closed_form(par: &FractionalResolventParams, n: usize, x: f64) -> f64 {
    let e = par.alpha_p * n as f64 - 1.0;
    if x <= 0.0 {
        return if e < 0.0 {
            f64::INFINITY
        } else if e == 0.0 {
            par.ln_c_n(n).exp()
        } else {
            0.0
        };
    }
    (par.ln_c_n(n) + e * x.ln()).exp()
}

/// `f_{p,n}(x, y)`
pub fn fractional_f(params: &FractionalResolventParams, n: usize, x: f64, y: f64) -> Result<f64> {
    if n == 0 {
        return Err(invalid("n must be at least 1"));
    }
    if !(x > 0.0 && y > 0.0) {
        return Err(invalid(format!("need x > 0 and y > 0, got x = {x}, y = {y}")));
    }
    if params.beta == 0.0 {
        return Ok(closed_form(params, n, x));
    }
    Ok(FractionalIterates::shared(*params).f(n, x, y))
}

/// `ĉ_n Γ(α_p)^n / Γ(a n + βp) · x^{a n + βp - 1} y^{-βp}`, an upper bound of
/// `f_{p,n}(x, y)` that is attained for `β = 0`.
pub fn fractional_f_bound(params: &FractionalResolventParams, n: usize, x: f64, y: f64) -> Result<f64> {
    if n == 0 {
        return Err(invalid("n must be at least 1"));
    }
    if !(x > 0.0 && y > 0.0) {
        return Err(invalid(format!("need x > 0 and y > 0, got x = {x}, y = {y}")));
    }
    let ln = params.ln_c_n(n) + params.x_exponent(n) * x.ln() - params.beta_p() * y.ln();
    Ok(ln.exp())
}

/// `ĉ_p Γ(1 - βp)`, the constant of the majorant
/// `∫_{t0}^t f_n(t - s, s - t0) ds <= ĉ_p Γ(1-βp) Γ(α_p)^n T^{a n} / Γ(a n + 1)`.
pub fn majorant_constant(params: &FractionalResolventParams) -> f64 {
    params.c_hat * ln_gamma(1.0 - params.beta_p()).map_or(f64::INFINITY, f64::exp)
}

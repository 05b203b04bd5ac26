//! Nonnegative kernels `k(t, s)` on the triangle `{ s <= t }`.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::DomainSpec;
use crate::error::{invalid, Error, Result};
use crate::extreal::ExtReal;
use crate::function::ScalarFn;
use crate::quadrature::uniform_rule;

pub const DEFAULT_SEED: u64 = 42;

pub type KernelFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

/// Direction in which the `t`-factor of a separable kernel is monotone.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    #[default]
    Increasing,
    Decreasing,
    /// No claim.
    Unknown,
}

/// The signed measure `ν` of a multiplicative kernel `exp(ν([s, t]))`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum NuSpec {
    /// `ν = c · Lebesgue`
    Scaled { c: f64 },
    /// `ν(ds) = density(s) ds`, the density may change sign.
    Density { density: ScalarFn },
}

impl NuSpec {
    /// `ν([s, t])`
    pub fn mass(&self, s: f64, t: f64) -> f64 {
        match self {
            NuSpec::Scaled { c } => c * (t - s),
            NuSpec::Density { density: ScalarFn::Poly(c) } => {
                let anti = |x: f64| {
                    c.iter().enumerate().rev().fold(0.0, |acc, (i, ci)| acc * x + ci / (i as f64 + 1.0)) * x
                };
                anti(t) - anti(s)
            }
            NuSpec::Density { density } => {
                if t <= s {
                    return 0.0;
                }
                uniform_rule(s, t, 3, 10).apply(|x| density.call(x))
            }
        }
    }

    fn is_nonnegative_hint(&self) -> bool {
        match self {
            NuSpec::Scaled { c } => *c >= 0.0,
            NuSpec::Density { .. } => false,
        }
    }
}

/// A kernel family.
///
/// Points are slices: one coordinate on an interval, `m` (or `m + 1` with a
/// tail coordinate) on a box, arbitrary labels on a void-ordered set.
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KernelSpec {
    /// `k(t, s) = c`
    Constant { c: f64 },
    /// `k(t, s) = k0(t) k1(s)`
    Separable {
        k0: ScalarFn,
        #[serde(default)]
        k0_trend: Trend,
        k1: ScalarFn,
    },
    /// `k(t, s) = (t - s)^{α-1} (s - t0)^{-β}`
    Fractional {
        alpha: f64,
        #[serde(default)]
        beta: f64,
        #[serde(default)]
        t0: f64,
    },
    /// `k(t, s) = Σ_j φ'(s) (φ(t) - φ(s))^{α_j - 1} (φ(s) - φ(t0))^{-β_j}`
    TransformedFractional {
        phi: ScalarFn,
        phi_dot: ScalarFn,
        alpha: Vec<f64>,
        beta: Vec<f64>,
        #[serde(default)]
        t0: f64,
    },
    /// `k = k_1 + ... + k_N`
    Sum { parts: Vec<KernelSpec> },
    /// `k(t, s) = k_1(t_1, s_1) ... k_m(t_m, s_m) · tail(s_{m+1})` on a box.
    Product {
        factors: Vec<KernelSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tail_factor: Option<ScalarFn>,
    },
    /// `k(t, s) = k1(s)` on a void-ordered set.
    Void { k1: ScalarFn },
    /// `k(t, s) = exp(ν([s, t]))`
    Multiplicative { nu: NuSpec },
    /// Arbitrary closure; not serializable.
    #[serde(skip)]
    Custom {
        f: KernelFn,
        /// Finite and continuous on the closed triangle.
        regular: bool,
        /// Satisfies `k(s̃, s) <= k(t, s)` for `s <= s̃ <= t`.
        monotone: bool,
    },
}

impl fmt::Debug for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Constant { c } => write!(f, "Constant({c})"),
            KernelSpec::Separable { k0, k0_trend, k1 } => {
                write!(f, "Separable({k0:?} [{k0_trend:?}], {k1:?})")
            }
            KernelSpec::Fractional { alpha, beta, t0 } => {
                write!(f, "Fractional(alpha = {alpha}, beta = {beta}, t0 = {t0})")
            }
            KernelSpec::TransformedFractional { phi, alpha, beta, t0, .. } => write!(
                f,
                "TransformedFractional(phi = {phi:?}, alpha = {alpha:?}, beta = {beta:?}, t0 = {t0})"
            ),
            KernelSpec::Sum { parts } => f.debug_tuple("Sum").field(parts).finish(),
            KernelSpec::Product { factors, tail_factor } => {
                f.debug_struct("Product").field("factors", factors).field("tail", tail_factor).finish()
            }
            KernelSpec::Void { k1 } => write!(f, "Void({k1:?})"),
            KernelSpec::Multiplicative { nu } => write!(f, "Multiplicative({nu:?})"),
            KernelSpec::Custom { regular, monotone, .. } => {
                write!(f, "Custom(regular = {regular}, monotone = {monotone})")
            }
        }
    }
}

/// `x^{a} y^{-b}` with the conventions of the fractional kernels at `x = 0`
/// or `y = 0`.
fn power_pair(x: f64, a: f64, y: f64, b: f64) -> ExtReal {
    let xa = if x <= 0.0 {
        if a < 0.0 {
            ExtReal::Infinity
        } else if a == 0.0 {
            ExtReal::ONE
        } else {
            ExtReal::ZERO
        }
    } else {
        ExtReal::saturating(x.powf(a))
    };
    let yb = if b == 0.0 {
        ExtReal::ONE
    } else if y <= 0.0 {
        ExtReal::Infinity
    } else {
        ExtReal::saturating(y.powf(-b))
    };
    xa * yb
}

/// Componentwise bounds of the exponents of a (sum of) fractional kernel(s).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaBetaBounds {
    pub alpha0: f64,
    pub alpha_inf: f64,
    pub beta0: f64,
    pub beta_inf: f64,
}

impl AlphaBetaBounds {
    pub fn new(alpha: &[f64], beta: &[f64]) -> Result<Self> {
        if alpha.is_empty() || alpha.len() != beta.len() {
            return Err(invalid("alpha and beta must be non-empty and of equal length"));
        }
        let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
        let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let b = AlphaBetaBounds { alpha0: min(alpha), alpha_inf: max(alpha), beta0: min(beta), beta_inf: max(beta) };
        if !(b.alpha0 > 0.0) || !(b.beta0 >= 0.0) {
            return Err(invalid("alpha must be positive and beta nonnegative"));
        }
        if !(b.beta_inf < b.alpha0) {
            return Err(invalid(format!(
                "every beta must be below min alpha = {}, got max beta = {}",
                b.alpha0, b.beta_inf
            )));
        }
        Ok(b)
    }
}

impl KernelSpec {
    pub fn constant(c: f64) -> Self {
        KernelSpec::Constant { c }
    }

    pub fn fractional(alpha: f64, beta: f64, t0: f64) -> Self {
        KernelSpec::Fractional { alpha, beta, t0 }
    }

    /// `k(t, s) = k1(s)`, the only monotone kernels on a void-ordered set.
    pub fn void(k1: impl Into<ScalarFn>) -> Self {
        KernelSpec::Void { k1: k1.into() }
    }

    pub fn separable(k0: impl Into<ScalarFn>, k0_trend: Trend, k1: impl Into<ScalarFn>) -> Self {
        KernelSpec::Separable { k0: k0.into(), k0_trend, k1: k1.into() }
    }

    /// `φ(t) = (t - t0)^γ` transformed fractional kernel.
    pub fn transformed_power(gamma: f64, alpha: Vec<f64>, beta: Vec<f64>, t0: f64) -> Self {
        KernelSpec::TransformedFractional {
            phi: ScalarFn::Power { coef: 1.0, exp: gamma, shift: t0 },
            phi_dot: ScalarFn::Power { coef: gamma, exp: gamma - 1.0, shift: t0 },
            alpha,
            beta,
            t0,
        }
    }

    pub fn custom(
        f: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
        regular: bool,
        monotone: bool,
    ) -> Self {
        KernelSpec::Custom { f: Arc::new(f), regular, monotone }
    }

    /// Parameter checks. With `p` given, also the integrability condition
    /// `β + 1 - 1/p < α` of the fractional families.
    pub fn validate(&self, p: Option<f64>) -> Result<()> {
        if let Some(p) = p {
            if !(p >= 1.0 && p.is_finite()) {
                return Err(invalid(format!("p must be at least 1, got {p}")));
            }
        }
        match self {
            KernelSpec::Constant { c } => {
                if !(*c >= 0.0 && c.is_finite()) {
                    return Err(invalid(format!("constant kernel needs c >= 0, got {c}")));
                }
            }
            KernelSpec::Fractional { alpha, beta, t0 } => {
                if !(*alpha > 0.0 && *beta >= 0.0 && t0.is_finite()) {
                    return Err(invalid(format!(
                        "fractional kernel needs alpha > 0 and beta >= 0, got alpha = {alpha}, beta = {beta}"
                    )));
                }
                if let Some(p) = p {
                    if !(beta + 1.0 - 1.0 / p < *alpha) {
                        return Err(invalid(format!(
                            "fractional kernel with p = {p} needs beta + 1 - 1/p < alpha, got alpha = {alpha}, beta = {beta}"
                        )));
                    }
                }
            }
            KernelSpec::TransformedFractional { alpha, beta, .. } => {
                let b = AlphaBetaBounds::new(alpha, beta)?;
                if let Some(p) = p {
                    if p != 1.0 && alpha.len() > 1 {
                        return Err(Error::Unsupported(
                            "sums of transformed fractional kernels are only handled for p = 1".into(),
                        ));
                    }
                    if !(b.beta_inf + 1.0 - 1.0 / p < b.alpha0) {
                        return Err(invalid("transformed fractional kernel violates beta + 1 - 1/p < alpha"));
                    }
                }
            }
            KernelSpec::Sum { parts } => {
                if parts.is_empty() {
                    return Err(invalid("sum kernel needs at least one part"));
                }
                for k in parts {
                    k.validate(p)?;
                }
            }
            KernelSpec::Product { factors, .. } => {
                if factors.is_empty() {
                    return Err(invalid("product kernel needs at least one factor"));
                }
                for k in factors {
                    if matches!(k, KernelSpec::Product { .. }) {
                        return Err(invalid("product kernel factors must be one-dimensional"));
                    }
                    k.validate(p)?;
                }
            }
            KernelSpec::Separable { .. }
            | KernelSpec::Void { .. }
            | KernelSpec::Multiplicative { .. }
            | KernelSpec::Custom { .. } => {}
        }
        Ok(())
    }

    /// Parameter checks plus a randomized spot check of the declared
    /// monotonicity on `domain`.
    pub fn validate_on(&self, domain: &DomainSpec, p: Option<f64>, seed: u64) -> Result<()> {
        self.validate(p)?;
        match (self, domain) {
            (KernelSpec::Product { factors, .. }, DomainSpec::ProductBox { factors: axes }) => {
                if factors.len() != axes.len() {
                    return Err(invalid(format!(
                        "product kernel has {} factors but the box has {} axes",
                        factors.len(),
                        axes.len()
                    )));
                }
            }
            (KernelSpec::Product { .. }, _) => return Err(invalid("product kernels need a box domain")),
            (_, DomainSpec::ProductBox { .. }) => {
                return Err(invalid("kernels on a box must be given as a product kernel"))
            }
            _ => {}
        }
        if self.declares_monotone() {
            let report = check_monotone(self, domain, 64, seed)?;
            if let Some(w) = report.counterexample {
                return Err(invalid(format!(
                    "kernel is declared monotone but k(s~, s) = {} > k(t, s) = {} at s = {:?}, s~ = {:?}, t = {:?}",
                    w.k_mid, w.k_t, w.s, w.s_mid, w.t
                )));
            }
        }
        Ok(())
    }

    /// Whether the monotonicity condition `k(s̃, s) <= k(t, s)` holds by
    /// construction.
    pub fn declares_monotone(&self) -> bool {
        match self {
            KernelSpec::Constant { .. } | KernelSpec::Void { .. } => true,
            KernelSpec::Separable { k0, k0_trend, .. } => {
                *k0_trend == Trend::Increasing || k0.constant_value().is_some()
            }
            KernelSpec::Fractional { alpha, .. } => *alpha >= 1.0,
            KernelSpec::TransformedFractional { alpha, .. } => alpha.iter().all(|a| *a >= 1.0),
            KernelSpec::Multiplicative { nu } => nu.is_nonnegative_hint(),
            KernelSpec::Sum { parts } => parts.iter().all(Self::declares_monotone),
            KernelSpec::Product { factors, .. } => factors.iter().all(Self::declares_monotone),
            KernelSpec::Custom { monotone, .. } => *monotone,
        }
    }

    /// Finite and continuous on the closed triangle.
    pub fn is_regular(&self) -> bool {
        match self {
            KernelSpec::Fractional { alpha, beta, .. } => *alpha >= 1.0 && *beta == 0.0,
            KernelSpec::TransformedFractional { alpha, beta, .. } => {
                alpha.iter().all(|a| *a >= 1.0) && beta.iter().all(|b| *b == 0.0)
            }
            KernelSpec::Sum { parts } => parts.iter().all(Self::is_regular),
            KernelSpec::Product { factors, .. } => factors.iter().all(Self::is_regular),
            KernelSpec::Custom { regular, .. } => *regular,
            _ => true,
        }
    }

    pub fn alpha_beta_bounds(&self) -> Option<AlphaBetaBounds> {
        match self {
            KernelSpec::Fractional { alpha, beta, .. } => AlphaBetaBounds::new(&[*alpha], &[*beta]).ok(),
            KernelSpec::TransformedFractional { alpha, beta, .. } => AlphaBetaBounds::new(alpha, beta).ok(),
            _ => None,
        }
    }

    /// Whether `s <= t` in the order this kernel is defined on.
    pub fn ordered(&self, s: &[f64], t: &[f64]) -> bool {
        match self {
            KernelSpec::Void { .. } => true,
            KernelSpec::Product { factors, .. } => (0..factors.len()).all(|i| s[i] <= t[i]),
            _ => s[0] <= t[0],
        }
    }

    /// `k(t, s)`; errors if `s` is not below `t` or lies before `t0`.
    pub fn eval(&self, t: &[f64], s: &[f64]) -> Result<ExtReal> {
        let dim = match self {
            KernelSpec::Product { factors, .. } => factors.len(),
            _ => 1,
        };
        if t.len() < dim || s.len() < dim || t.iter().chain(s).any(|x| !x.is_finite()) {
            return Err(invalid(format!("kernel needs {dim}-dimensional finite points")));
        }
        if !self.ordered(s, t) {
            return Err(Error::NotOrdered { s: s.to_vec(), t: t.to_vec() });
        }
        match self {
            KernelSpec::Fractional { t0, .. } | KernelSpec::TransformedFractional { t0, .. } if s[0] < *t0 => {
                return Err(Error::OutsideDomain { point: s.to_vec() });
            }
            _ => {}
        }
        Ok(self.value(t, s))
    }

    /// `k(t, s)` without order checks. Used inside quadrature loops.
    pub fn value(&self, t: &[f64], s: &[f64]) -> ExtReal {
        match self {
            KernelSpec::Product { factors, tail_factor } => {
                let mut acc = ExtReal::ONE;
                for (i, k) in factors.iter().enumerate() {
                    acc = acc * k.value1(t[i], s[i]);
                }
                if let Some(tail) = tail_factor {
                    acc = acc * tail.eval(s.get(factors.len()).copied().unwrap_or(0.0));
                }
                acc
            }
            KernelSpec::Custom { f, .. } => ExtReal::saturating(f(t, s)),
            KernelSpec::Sum { parts } => parts.iter().map(|k| k.value(t, s)).sum(),
            _ => self.value1(t[0], s[0]),
        }
    }

    /// `k(t, s)` for scalar points, unchecked.
    pub fn value1(&self, t: f64, s: f64) -> ExtReal {
        match self {
            KernelSpec::Constant { c } => ExtReal::saturating(*c),
            KernelSpec::Separable { k0, k1, .. } => k0.eval(t) * k1.eval(s),
            KernelSpec::Fractional { alpha, beta, t0 } => power_pair(t - s, alpha - 1.0, s - t0, *beta),
            KernelSpec::TransformedFractional { phi, phi_dot, alpha, beta, t0 } => {
                let (pt, ps, p0) = (phi.call(t), phi.call(s), phi.call(*t0));
                let d = phi_dot.eval(s);
                alpha
                    .iter()
                    .zip(beta)
                    .map(|(a, b)| d * power_pair(pt - ps, a - 1.0, ps - p0, *b))
                    .sum()
            }
            KernelSpec::Sum { parts } => parts.iter().map(|k| k.value1(t, s)).sum(),
            KernelSpec::Void { k1 } => k1.eval(s),
            KernelSpec::Multiplicative { nu } => ExtReal::saturating(nu.mass(s, t).exp()),
            KernelSpec::Product { .. } | KernelSpec::Custom { .. } => self.value(&[t], &[s]),
        }
    }

    /// `k(t, s)^p`, unchecked.
    pub fn value_pow(&self, t: &[f64], s: &[f64], p: f64) -> ExtReal {
        let v = self.value(t, s);
        if p == 1.0 {
            v
        } else if v.is_zero() {
            v
        } else {
            v.powf(p)
        }
    }

    pub fn value1_pow(&self, t: f64, s: f64, p: f64) -> ExtReal {
        let v = self.value1(t, s);
        if p == 1.0 || v.is_zero() {
            v
        } else {
            v.powf(p)
        }
    }
}

/// A sampled violation of the monotonicity condition.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonotoneWitness {
    pub s: Vec<f64>,
    pub s_mid: Vec<f64>,
    pub t: Vec<f64>,
    pub k_mid: ExtReal,
    pub k_t: ExtReal,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonotoneReport {
    pub passed: bool,
    pub samples: usize,
    pub counterexample: Option<MonotoneWitness>,
}

fn sorted3(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> [f64; 3] {
    let mut v = [rng.gen_range(lo..=hi), rng.gen_range(lo..=hi), rng.gen_range(lo..=hi)];
    v.sort_by(f64::total_cmp);
    v
}

/// Draws ordered triples `s <= s̃ <= t` from `domain` (for box domains the
/// triple is componentwise ordered).
pub fn sample_triples(domain: &DomainSpec, count: usize, seed: u64) -> Vec<[Vec<f64>; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| match domain {
            DomainSpec::Interval { lo, hi } => {
                let [a, b, c] = sorted3(&mut rng, *lo, *hi);
                [vec![a], vec![b], vec![c]]
            }
            DomainSpec::ProductBox { factors } => {
                let mut out = [Vec::new(), Vec::new(), Vec::new()];
                for f in factors {
                    let v = sorted3(&mut rng, f.lo, f.hi);
                    for k in 0..3 {
                        out[k].push(v[k]);
                    }
                }
                out
            }
            DomainSpec::VoidSet { support, .. } => {
                let (lo, hi) = support.map_or((0.0, 1.0), |iv| (iv.lo, iv.hi));
                // no ordering in a void set
                [vec![rng.gen_range(lo..=hi)], vec![rng.gen_range(lo..=hi)], vec![rng.gen_range(lo..=hi)]]
            }
        })
        .collect()
}

/// Randomized falsification of `k(s̃, s) <= k(t, s)` for `s <= s̃ <= t`.
pub fn check_monotone(kernel: &KernelSpec, domain: &DomainSpec, samples: usize, seed: u64) -> Result<MonotoneReport> {
    if samples == 0 {
        return Err(invalid("need at least one sample"));
    }
    let domain = clip_to_kernel(kernel, domain)?;
    for [s, s_mid, t] in sample_triples(&domain, samples, seed) {
        let k_mid = kernel.value(&s_mid, &s);
        let k_t = kernel.value(&t, &s);
        let violated = match (k_mid, k_t) {
            (_, ExtReal::Infinity) => false,
            (ExtReal::Infinity, _) => true,
            (ExtReal::Finite(a), ExtReal::Finite(b)) => a > b * (1.0 + 1e-12) + 1e-300,
        };
        if violated {
            return Ok(MonotoneReport {
                passed: false,
                samples,
                counterexample: Some(MonotoneWitness { s, s_mid, t, k_mid, k_t }),
            });
        }
    }
    Ok(MonotoneReport { passed: true, samples, counterexample: None })
}

/// Restricts an interval domain to `[t0, hi]` for kernels anchored at `t0`.
fn clip_to_kernel(kernel: &KernelSpec, domain: &DomainSpec) -> Result<DomainSpec> {
    match (kernel, domain) {
        (
            KernelSpec::Fractional { t0, .. } | KernelSpec::TransformedFractional { t0, .. },
            DomainSpec::Interval { lo, hi },
        ) if *lo < *t0 => DomainSpec::interval(*t0, *hi),
        _ => Ok(domain.clone()),
    }
}

/// `max k(t, s̃) k(s̃, s) - k(t, s)` over the given `(t, s̃, s)` triples.
///
/// `<= 0` for submultiplicative kernels and `= 0` for multiplicative ones.
pub fn submultiplicative_defect(kernel: &KernelSpec, triples: &[[Vec<f64>; 3]]) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for [t, s_mid, s] in triples {
        let lhs = kernel.value(t, s_mid) * kernel.value(s_mid, s);
        let rhs = kernel.value(t, s);
        let d = match (lhs, rhs) {
            (ExtReal::Infinity, ExtReal::Infinity) => 0.0,
            (l, r) => l.to_f64() - r.to_f64(),
        };
        worst = worst.max(d);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> DomainSpec {
        DomainSpec::interval(0.0, 1.0).unwrap()
    }

    #[test]
    fn fractional_values() {
        let k = KernelSpec::fractional(1.0, 0.0, 0.0);
        for (t, s) in [(1.0, 0.0), (0.5, 0.5), (0.9, 0.2)] {
            assert_eq!(k.eval(&[t], &[s]).unwrap(), ExtReal::ONE);
        }
        let k = KernelSpec::fractional(0.5, 0.0, 0.0);
        assert!((k.eval(&[1.0], &[0.75]).unwrap().to_f64() - 2.0).abs() < 1e-15);
        assert_eq!(k.eval(&[0.3], &[0.3]).unwrap(), ExtReal::Infinity);
        let kb = KernelSpec::fractional(1.5, 0.2, 0.0);
        assert_eq!(kb.eval(&[0.3], &[0.0]).unwrap(), ExtReal::Infinity);
        assert_eq!(kb.eval(&[0.3], &[0.3]).unwrap(), ExtReal::ZERO);
        assert!(matches!(k.eval(&[0.2], &[0.5]), Err(Error::NotOrdered { .. })));
        assert!(matches!(k.eval(&[0.2], &[-0.5]), Err(Error::OutsideDomain { .. })));
    }

    #[test]
    fn multiplicative_with_lebesgue_nu() {
        let k = KernelSpec::Multiplicative { nu: NuSpec::Scaled { c: 1.0 } };
        assert!((k.eval(&[1.0], &[0.0]).unwrap().to_f64() - std::f64::consts::E).abs() < 1e-15);
        let dens = KernelSpec::Multiplicative { nu: NuSpec::Density { density: ScalarFn::Poly(vec![1.0, 2.0]) } };
        // ν([0, 1]) = 1 + 1
        assert!((dens.value1(1.0, 0.0).to_f64() - 2f64.exp()).abs() < 1e-13);
        let cosine = KernelSpec::Multiplicative {
            nu: NuSpec::Density { density: ScalarFn::custom(|x: f64| x.cos()) },
        };
        assert!((cosine.value1(1.0, 0.0).to_f64() - 1f64.sin().exp()).abs() < 1e-13);
    }

    #[test]
    fn sum_and_product_evaluate_exactly() {
        let a = KernelSpec::constant(2.0);
        let b = KernelSpec::fractional(0.5, 0.0, 0.0);
        let sum = KernelSpec::Sum { parts: vec![a.clone(), b.clone()] };
        let v = sum.eval(&[1.0], &[0.75]).unwrap().to_f64();
        assert_eq!(v, 2.0 + b.value1(1.0, 0.75).to_f64());
        let prod = KernelSpec::Product { factors: vec![a, b], tail_factor: Some(ScalarFn::Const(3.0)) };
        let v = prod.eval(&[1.0, 1.0, 0.0], &[0.5, 0.75, 0.0]).unwrap().to_f64();
        assert!((v - 2.0 * 2.0 * 3.0).abs() < 1e-14);
        assert!(prod.eval(&[1.0, 0.5], &[0.5, 0.75]).is_err());
    }

    #[test]
    fn zero_times_singular_is_zero() {
        let k = KernelSpec::Product {
            factors: vec![KernelSpec::constant(0.0), KernelSpec::fractional(0.5, 0.0, 0.0)],
            tail_factor: None,
        };
        assert_eq!(k.value(&[1.0, 1.0], &[0.0, 1.0]), ExtReal::ZERO);
    }

    #[test]
    fn monotonicity_checks() {
        let sep = KernelSpec::separable(ScalarFn::Exp { coef: 1.0, rate: 1.0 }, Trend::Increasing, 2.0);
        assert!(check_monotone(&sep, &unit(), 500, DEFAULT_SEED).unwrap().passed);
        let frac = KernelSpec::fractional(0.5, 0.0, 0.0);
        let r = check_monotone(&frac, &unit(), 500, DEFAULT_SEED).unwrap();
        assert!(!r.passed);
        let w = r.counterexample.unwrap();
        assert!(w.k_mid > w.k_t);
        // the witness of the documentation: s = 0, s~ = 1/2, t = 1
        assert!(frac.value1(0.5, 0.0) > frac.value1(1.0, 0.0));
        let void = KernelSpec::void(ScalarFn::Poly(vec![0.1, 0.3]));
        let dom = DomainSpec::void("x");
        assert!(check_monotone(&void, &dom, 200, DEFAULT_SEED).unwrap().passed);
        assert!(check_monotone(&void, &dom, 0, DEFAULT_SEED).is_err());
        // a t-dependent kernel is never monotone on a void set
        let bad = KernelSpec::custom(|t, _| t[0], true, true);
        assert!(!check_monotone(&bad, &dom, 200, DEFAULT_SEED).unwrap().passed);
    }

    #[test]
    fn seeded_checks_are_reproducible() {
        let frac = KernelSpec::fractional(0.7, 0.0, 0.0);
        let a = check_monotone(&frac, &unit(), 50, 7).unwrap();
        let b = check_monotone(&frac, &unit(), 50, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn submultiplicative_examples() {
        let triples = sample_triples(&unit(), 100, DEFAULT_SEED)
            .into_iter()
            .map(|[s, m, t]| [t, m, s])
            .collect::<Vec<_>>();
        let mult = KernelSpec::Multiplicative { nu: NuSpec::Scaled { c: -0.7 } };
        assert!(submultiplicative_defect(&mult, &triples).abs() < 1e-14);
        assert_eq!(submultiplicative_defect(&KernelSpec::constant(1.0), &triples), 0.0);
        assert_eq!(submultiplicative_defect(&KernelSpec::constant(2.0), &triples), 2.0);
    }

    #[test]
    fn validation() {
        assert!(KernelSpec::fractional(0.75, 0.1, 0.0).validate(Some(1.0)).is_ok());
        // β + 1 - 1/p < α fails for p = 2: 0.3 + 0.5 = 0.8 > 0.75
        assert!(KernelSpec::fractional(0.75, 0.3, 0.0).validate(Some(2.0)).is_err());
        assert!(KernelSpec::fractional(-1.0, 0.0, 0.0).validate(None).is_err());
        assert!(KernelSpec::constant(-1.0).validate(None).is_err());
        let tf = KernelSpec::transformed_power(2.0, vec![0.5, 0.8], vec![0.1, 0.6], 0.0);
        assert!(tf.validate(None).is_err());
        let b = AlphaBetaBounds::new(&[0.5, 0.8], &[0.1, 0.2]).unwrap();
        assert_eq!((b.alpha0, b.alpha_inf, b.beta0, b.beta_inf), (0.5, 0.8, 0.1, 0.2));
        let bad = KernelSpec::separable(ScalarFn::Exp { coef: 1.0, rate: -1.0 }, Trend::Increasing, 1.0);
        assert!(bad.validate_on(&unit(), Some(1.0), DEFAULT_SEED).is_err());
    }

    #[test]
    fn transformed_power_matches_direct_formula() {
        let k = KernelSpec::transformed_power(2.0, vec![0.5], vec![0.0], 0.0);
        let (t, s): (f64, f64) = (0.9, 0.4);
        let direct = 2.0 * s * (t * t - s * s).powf(-0.5);
        assert!((k.value1(t, s).to_f64() - direct).abs() < 1e-14);
    }

    #[test]
    fn json_round_trip() {
        let k = KernelSpec::Sum {
            parts: vec![KernelSpec::fractional(0.75, 0.1, 0.0), KernelSpec::void(ScalarFn::Const(0.5))],
        };
        let s = serde_json::to_string(&k).unwrap();
        let back: KernelSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back.value1(0.8, 0.3), k.value1(0.8, 0.3));
        let parsed: KernelSpec =
            serde_json::from_str(r#"{"family": "fractional", "alpha": 0.5, "beta": 0.0, "t0": 0.0}"#).unwrap();
        assert!(matches!(parsed, KernelSpec::Fractional { .. }));
        assert!(serde_json::to_string(&KernelSpec::custom(|_, _| 1.0, true, true)).is_err());
    }
}

//! Right-hand sides of the resolvent and L^p-Gronwall inequalities.
//!
//! For `K(s, t) = ∫_{[s,t]} k(t,σ)^p μ(dσ)` and `v = v0 + (∫_{I(t)} l^p)^{1/p}`
//! the sharp form is
//! `v(t) + Σ_{n>=0} (n!)^{-m/p} (∫_{I(t)} k(t,s)^p K(s,t)^n v(s)^p μ(ds))^{1/p}`
//! and the sup form is
//! `sup v0 · Σ_n (n!)^{-m/p} K(t)^{n/p} + Σ_n (n!)^{-m/p} (∫ K(s,t)^n l(t,s)^p)^{1/p}`,
//! where `m` is the number of ordered interval axes (0 for a void order).

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::{lower_set, DomainSpec, MeasureSpace, MeasureSpec, Region};
use crate::error::{invalid, Error, Result};
use crate::extreal::ExtReal;
use crate::fractional::FractionalResolventParams;
use crate::function::ScalarFn;
use crate::kernels::KernelSpec;
use crate::quadrature::integrate_at_level;
use crate::resolvent::{fmt17, fmt_ext, ln_fact, ratio_tail, series_function_i, weighted_series};
use crate::specfun::{ln_gamma, sum_ratio_series, SeriesValue};

const DEFAULT_LEVEL_1D: u32 = 5;
const DEFAULT_LEVEL_BOX: u32 = 2;
const SUP_SAMPLES: usize = 257;

/// A function of a point of the domain.
#[derive(Clone)]
pub struct PointFn(pub Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>);

impl fmt::Debug for PointFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("PointFn(..)")
    }
}

/// Data of a Gronwall inequality `u <= v0 + (∫ l^p)^{1/p} + (∫ k^p u^p)^{1/p}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GronwallInput {
    /// Evaluated at the first coordinate unless `v0_point` is set.
    pub v0: ScalarFn,
    #[serde(skip)]
    pub v0_point: Option<PointFn>,
    #[serde(default)]
    pub l: Option<KernelSpec>,
    pub k: KernelSpec,
    pub space: MeasureSpace,
    pub p: f64,
    /// Quadrature level; defaults to 5 on intervals and 2 on boxes.
    #[serde(default)]
    pub level: Option<u32>,
}

impl GronwallInput {
    pub fn new(v0: ScalarFn, k: KernelSpec, space: MeasureSpace, p: f64) -> Self {
        GronwallInput { v0, v0_point: None, l: None, k, space, p, level: None }
    }

    pub fn with_l(mut self, l: KernelSpec) -> Self {
        self.l = Some(l);
        self
    }

    pub fn with_v0_point(mut self, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.v0_point = Some(PointFn(Arc::new(f)));
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 1.0) || !self.p.is_finite() {
            return Err(invalid(format!("p must be at least 1, got {}", self.p)));
        }
        self.space.validate()?;
        self.k.validate(Some(self.p))?;
        if let Some(l) = &self.l {
            l.validate(Some(self.p))?;
        }
        if let DomainSpec::VoidSet { .. } = self.space.domain {
            if !matches!(self.k, KernelSpec::Void { .. }) {
                return Err(invalid("a void order needs a kernel of the form k(t, s) = k1(s)"));
            }
            if let Some(l) = &self.l {
                if !matches!(l, KernelSpec::Void { .. }) {
                    return Err(invalid("a void order needs l of the form l(t, s) = l1(s)"));
                }
            }
        }
        Ok(())
    }

    /// Number of ordered interval axes; 0 for the void order.
    pub fn m(&self) -> usize {
        match &self.space.domain {
            DomainSpec::Interval { .. } => 1,
            DomainSpec::ProductBox { factors } => factors.len(),
            DomainSpec::VoidSet { .. } => 0,
        }
    }

    fn level(&self) -> u32 {
        self.level.unwrap_or(match self.space.domain {
            DomainSpec::ProductBox { .. } => DEFAULT_LEVEL_BOX,
            _ => DEFAULT_LEVEL_1D,
        })
    }

    pub fn v0_at(&self, t: &[f64]) -> f64 {
        match &self.v0_point {
            Some(f) => (f.0)(t),
            None => self.v0.call(t[0]),
        }
    }

    /// `v(t) = v0(t) + (∫_{I(t)} l(t,s)^p μ(ds))^{1/p}`.
    pub fn v(&self, t: &[f64]) -> Result<ExtReal> {
        let base = ExtReal::saturating(self.v0_at(t));
        let Some(l) = &self.l else { return Ok(base) };
        let region = lower_set(&self.space.domain, t)?;
        let p = self.p;
        let li = integrate_at_level(&|s| l.value_pow(t, s, p), &region, &self.space, self.level())?;
        Ok(base + li.root(p))
    }

    /// Grid supremum of `v0` over `I(t)`; a lower approximation of the
    /// essential supremum.
    pub fn sup_v0(&self, t: &[f64]) -> Result<f64> {
        let pts = sample_lower_set(&self.space, t)?;
        Ok(pts.iter().map(|s| self.v0_at(s)).fold(0.0, f64::max))
    }
}

fn sample_lower_set(space: &MeasureSpace, t: &[f64]) -> Result<Vec<Vec<f64>>> {
    let region = lower_set(&space.domain, t)?;
    let axis = |a: f64, b: f64, n: usize| -> Vec<f64> {
        (0..n).map(|i| if n == 1 { b } else { a + (b - a) * i as f64 / (n - 1) as f64 }).collect()
    };
    Ok(match region {
        Region::Segment(a, b) => axis(a, b, SUP_SAMPLES).into_iter().map(|x| vec![x]).collect(),
        Region::Whole => match (&space.measure, space.domain.support_interval()) {
            (MeasureSpec::Discrete { atoms }, _) => atoms.iter().map(|a| a.point.clone()).collect(),
            (_, Some(iv)) => axis(iv.lo, iv.hi, SUP_SAMPLES).into_iter().map(|x| vec![x]).collect(),
            _ => return Err(invalid("void set without atoms or support")),
        },
        Region::Cells(cells) => {
            let per = 17;
            let mut pts = vec![Vec::new()];
            for (a, b) in cells {
                let xs = axis(a, b, per);
                pts = pts
                    .into_iter()
                    .flat_map(|p| xs.iter().map(move |x| {
                        let mut q = p.clone();
                        q.push(*x);
                        q
                    }))
                    .collect();
            }
            // a discrete tail axis contributes its atoms
            if let Some(factors) = space.box_factors() {
                if factors.len() > pts.first().map_or(0, Vec::len) {
                    if let Some(MeasureSpec::Discrete { atoms }) = factors.last() {
                        pts = pts
                            .into_iter()
                            .flat_map(|p| atoms.iter().map(move |a| {
                                let mut q = p.clone();
                                q.extend_from_slice(&a.point);
                                q
                            }))
                            .collect();
                    }
                }
            }
            pts
        }
    })
}

/// Integrals `∫_{I(t)} f(s) K(s,t)^n μ(ds)` with `K(s, t)` cached per node.
struct Moments<'a> {
    input: &'a GronwallInput,
    t: Vec<f64>,
    region: Region,
    cache: RefCell<HashMap<Vec<u64>, f64>>,
}

impl<'a> Moments<'a> {
    fn new(input: &'a GronwallInput, t: &[f64]) -> Result<Self> {
        let region = lower_set(&input.space.domain, t)?;
        Ok(Moments { input, t: t.to_vec(), region, cache: RefCell::new(HashMap::new()) })
    }

    fn big_k(&self, s: &[f64]) -> f64 {
        let key: Vec<u64> = s.iter().map(|x| x.to_bits()).collect();
        if let Some(v) = self.cache.borrow().get(&key) {
            return *v;
        }
        let inp = self.input;
        let v = match inp.space.domain.order_interval(s, &self.t) {
            Ok(r) => integrate_at_level(&|x| inp.k.value_pow(&self.t, x, inp.p), &r, &inp.space, inp.level())
                .map_or(f64::INFINITY, ExtReal::to_f64),
            Err(_) => 0.0,
        };
        self.cache.borrow_mut().insert(key, v);
        v
    }

    /// `K(t) = ∫_{I(t)} k(t,σ)^p μ(dσ)`.
    fn total(&self) -> Result<f64> {
        let inp = self.input;
        Ok(integrate_at_level(&|x| inp.k.value_pow(&self.t, x, inp.p), &self.region, &inp.space, inp.level())?
            .to_f64())
    }

    fn moment(&self, n: usize, f: &dyn Fn(&[f64]) -> ExtReal) -> Result<f64> {
        let g = |s: &[f64]| {
            let fs = f(s);
            if fs.is_zero() {
                return ExtReal::ZERO;
            }
            let k = if n == 0 { 1.0 } else { self.big_k(s).powi(n as i32) };
            fs * ExtReal::saturating(k)
        };
        Ok(integrate_at_level(&g, &self.region, &self.input.space, self.input.level())?.to_f64())
    }
}

/// One point of a bound curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundPoint {
    pub t: f64,
    pub sharp: ExtReal,
    pub sup: ExtReal,
    /// Certified bound on the truncated series tails.
    pub tail: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCurve {
    pub points: Vec<BoundPoint>,
    pub tail_bound: f64,
    pub m: usize,
}

impl BoundCurve {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,sharp,sup,tail")?;
        for pt in &self.points {
            writeln!(w, "{},{},{},{}", fmt17(pt.t), fmt_ext(pt.sharp), fmt_ext(pt.sup), fmt17(pt.tail))?;
        }
        Ok(())
    }
}

/// Sums `Σ_{n>=0} term(n)` where the terms are dominated by
/// `(n!)^{-m/p} (K^n C)^{1/p}`.
fn factorial_series(term: impl Fn(usize) -> Result<f64>, m: usize, p: f64, big_k: f64, c: f64, tol: f64) -> Result<(f64, f64)> {
    let mut sum = 0.0;
    let ln_major = |n: usize| (n as f64 * big_k.ln() + c.ln() - m as f64 * ln_fact(n as f64)) / p;
    for n in 0..400 {
        let tn = term(n)?;
        if !tn.is_finite() {
            return Ok((f64::INFINITY, f64::INFINITY));
        }
        sum += tn;
        let tail = if c == 0.0 || big_k == 0.0 { 0.0 } else { ratio_tail(ln_major, n + 1) };
        if tail < tol * sum.max(1.0) {
            return Ok((sum, tail));
        }
    }
    Ok((sum, f64::INFINITY))
}

/// Both lines of the L^p-Gronwall inequality at `t`.
pub fn gronwall_bound(input: &GronwallInput, t: &[f64]) -> Result<BoundPoint> {
    input.validate()?;
    let p = input.p;
    let m = input.m();
    let tol = 1e-13;
    let mo = Moments::new(input, t)?;
    let v_t = input.v(t)?;
    let sup_v0 = input.sup_v0(t)?;
    let root = |x: f64| if p == 1.0 { x } else { x.powf(1.0 / p) };
    let l_pow = |s: &[f64]| input.l.as_ref().map_or(ExtReal::ZERO, |l| l.value_pow(t, s, p));
    if m == 0 {
        let q = mo.total()?;
        let rq = root(q);
        let kv = mo.moment(0, &|s| input.k.value_pow(t, s, p) * input.v(s).unwrap_or(ExtReal::Infinity).powf(p))?;
        let l1 = mo.moment(0, &l_pow)?;
        if rq >= 1.0 {
            let sharp = if kv == 0.0 { v_t } else { ExtReal::Infinity };
            return Ok(BoundPoint { t: t[0], sharp, sup: ExtReal::Infinity, tail: 0.0 });
        }
        return Ok(BoundPoint {
            t: t[0],
            sharp: v_t + ExtReal::saturating(root(kv) / (1.0 - rq)),
            sup: ExtReal::saturating((sup_v0 + root(l1)) / (1.0 - rq)),
            tail: 0.0,
        });
    }
    let big_k = mo.total()?;
    if !big_k.is_finite() {
        return Ok(BoundPoint { t: t[0], sharp: ExtReal::Infinity, sup: ExtReal::Infinity, tail: f64::INFINITY });
    }
    let v_of = |s: &[f64]| input.v(s).unwrap_or(ExtReal::Infinity);
    let kv = |s: &[f64]| input.k.value_pow(t, s, p) * v_of(s).powf(p);
    let mf = m as f64;
    let c_sharp = mo.moment(0, &kv)?;
    let (sharp_sum, sharp_tail) = factorial_series(
        |n| Ok(root(mo.moment(n, &kv)? / (mf * ln_fact(n as f64)).exp())),
        m,
        p,
        big_k,
        c_sharp,
        tol,
    )?;
    // sup v0 · Σ (n!)^{-m/p} K^{n/p}
    let ln_sup = |n: usize| (n as f64 * big_k.ln() - mf * ln_fact(n as f64)) / p;
    let v_series = if big_k == 0.0 {
        1.0
    } else {
        sum_ratio_series(|n| ln_sup(n).exp(), tol).upper().to_f64()
    };
    let (l_sum, l_tail) = match &input.l {
        None => (0.0, 0.0),
        Some(_) => {
            let c_l = mo.moment(0, &l_pow)?;
            factorial_series(
                |n| Ok(root(mo.moment(n, &l_pow)? / (mf * ln_fact(n as f64)).exp())),
                m,
                p,
                big_k,
                c_l,
                tol,
            )?
        }
    };
    Ok(BoundPoint {
        t: t[0],
        sharp: v_t + ExtReal::saturating(sharp_sum + sharp_tail),
        sup: ExtReal::saturating(sup_v0 * v_series + l_sum + l_tail),
        tail: sharp_tail.max(l_tail),
    })
}

/// [`gronwall_bound`] at every point of `ts` (1-D domains).
pub fn gronwall_curve(input: &GronwallInput, ts: &[f64]) -> Result<BoundCurve> {
    let points = ts.iter().map(|&t| gronwall_bound(input, &[t])).collect::<Result<Vec<_>>>()?;
    let tail_bound = points.iter().map(|p| p.tail).fold(0.0, f64::max);
    Ok(BoundCurve { points, tail_bound, m: input.m() })
}

/// Bounds for the n-th member of a sequence satisfying the recursive
/// inequality with initial function `u0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceBound {
    pub sharp: ExtReal,
    pub sup: ExtReal,
    pub w_n: ExtReal,
}

/// `w_n(t) = (∫_{I(t)} k^p K(s,t)^{n-1} u0^p / ((n-1)!)^m μ(ds))^{1/p}` and
/// the two bounds of the Gronwall sequence inequality.
pub fn gronwall_sequence_bound(
    input: &GronwallInput,
    u0: &dyn Fn(&[f64]) -> f64,
    n: usize,
    t: &[f64],
) -> Result<SequenceBound> {
    input.validate()?;
    if n == 0 {
        return Err(invalid("n must be at least 1"));
    }
    let p = input.p;
    let mf = input.m() as f64;
    let mo = Moments::new(input, t)?;
    let root = |x: f64| ExtReal::saturating(x).root(p);
    let fact_m = |i: usize| (mf * ln_fact(i as f64)).exp();
    let k_pow = |s: &[f64]| input.k.value_pow(t, s, p);
    let w_n = root(mo.moment(n - 1, &|s| k_pow(s) * ExtReal::saturating(u0(s)).powf(p))? / fact_m(n - 1));
    let v_of = |s: &[f64]| input.v(s).unwrap_or(ExtReal::Infinity);
    let mut sharp = input.v(t)? + w_n;
    for i in 0..n.saturating_sub(1) {
        sharp += root(mo.moment(i, &|s| k_pow(s) * v_of(s).powf(p))? / fact_m(i));
    }
    let big_k = mo.total()?;
    let sup_v0 = input.sup_v0(t)?;
    let mut sup = w_n;
    for i in 0..n {
        let kt = if i == 0 { 1.0 } else { big_k.powf(i as f64 / p) };
        sup += ExtReal::saturating(sup_v0 * kt / fact_m(i).powf(1.0 / p));
        if let Some(l) = &input.l {
            sup += root(mo.moment(i, &|s| l.value_pow(t, s, p))? / fact_m(i));
        }
    }
    Ok(SequenceBound { sharp, sup, w_n })
}

/// `v(t) + Σ_{n>=1} (∫_{I(t)} R_{k^p,μ,n}(t,s) v(s)^p μ(ds))^{1/p}`.
pub fn resolvent_bound(
    v: &dyn Fn(f64) -> f64,
    kernel: &KernelSpec,
    space: &MeasureSpace,
    p: f64,
    t: f64,
    tol: f64,
) -> Result<SeriesValue> {
    let vt = ExtReal::saturating(v(t));
    let series = weighted_series(kernel, space, p, t, &|s| v(s).powf(p), tol)?;
    Ok(SeriesValue { sum: vt + series.sum, ..series })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Vanishing {
    Vanishes,
    Unknown,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VanishingStrategy {
    /// `u0` bounded on `I(t)` and `I_{k,μ,p}(t) < ∞`.
    BoundedInitial,
    /// `∫_{I(t)} u0^p dμ < ∞` and `sup_s R_{k^p,μ,n}(t,s) -> 0` for a
    /// recognized family.
    IntegrableInitial,
    /// Either of the above.
    #[default]
    Auto,
}

/// Sufficient criteria for `∫_{I(t)} R_{k^p,μ,n}(t,s) u0(s)^p μ(ds) -> 0`.
/// Never answers `Vanishes` without a criterion.
pub fn check_vanishing(
    kernel: &KernelSpec,
    space: &MeasureSpace,
    p: f64,
    u0: &dyn Fn(f64) -> f64,
    t: f64,
    strategy: VanishingStrategy,
) -> Result<Vanishing> {
    kernel.validate(Some(p))?;
    let bounded = || -> Result<bool> {
        let pts = sample_lower_set(space, &[t])?;
        if !pts.iter().all(|s| u0(s[0]).is_finite()) {
            return Ok(false);
        }
        let i = series_function_i(kernel, space, p, t, 1e-8)?;
        Ok(i.converged && i.sum.is_finite())
    };
    let integrable = || -> Result<bool> {
        if !sup_iterates_vanish(kernel, space, p) {
            return Ok(false);
        }
        let region = lower_set(&space.domain, &[t])?;
        let coarse = integrate_at_level(&|s| ExtReal::saturating(u0(s[0]).powf(p)), &region, space, 4)?;
        let fine = integrate_at_level(&|s| ExtReal::saturating(u0(s[0]).powf(p)), &region, space, 6)?;
        Ok(match (coarse, fine) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => (a - b).abs() <= 1e-3 * b.max(1.0),
            _ => false,
        })
    };
    let ok = match strategy {
        VanishingStrategy::BoundedInitial => bounded()?,
        VanishingStrategy::IntegrableInitial => integrable()?,
        VanishingStrategy::Auto => bounded()? || integrable()?,
    };
    Ok(if ok { Vanishing::Vanishes } else { Vanishing::Unknown })
}

/// Families where `sup_{s ∈ I(t)} R_{k^p,μ,n}(t,s) -> 0` is known.
fn sup_iterates_vanish(kernel: &KernelSpec, space: &MeasureSpace, p: f64) -> bool {
    match kernel {
        KernelSpec::Fractional { beta, .. } => *beta == 0.0 && matches!(space.measure, MeasureSpec::Lebesgue),
        KernelSpec::Constant { .. } => matches!(space.domain, DomainSpec::Interval { .. }) && space.measure.is_atomless(),
        KernelSpec::Void { k1 } => match k1.constant_value() {
            Some(c) => {
                let q = crate::resolvent::integral_over(space, 0.0, 0.0, &|_| c.powf(p));
                q < 1.0
            }
            None => false,
        },
        _ => false,
    }
}

/// Outcome of [`induction_check`].
#[derive(Clone, Debug, PartialEq)]
pub struct InductionReport {
    pub passed: bool,
    /// `(n, index, u_n, Ψ^n(u_0))` of the first violation.
    pub witness: Option<(usize, usize, f64, f64)>,
}

/// Checks `u_n <= Ψ^n(u_0)` on the masked grid points, for every `n` in the
/// sequence (`sequence[0] = u_0`).
pub fn induction_check(
    psi: &dyn Fn(&[f64]) -> Vec<f64>,
    sequence: &[Vec<f64>],
    mask: &[bool],
) -> Result<InductionReport> {
    let Some(u0) = sequence.first() else {
        return Ok(InductionReport { passed: true, witness: None });
    };
    if mask.len() != u0.len() || sequence.iter().any(|u| u.len() != u0.len()) {
        return Err(invalid("sequence members and mask must have the same length"));
    }
    let mut iterate = u0.clone();
    for (n, u) in sequence.iter().enumerate().skip(1) {
        iterate = psi(&iterate);
        if iterate.len() != u.len() {
            return Err(invalid("operator changed the grid size"));
        }
        for (i, (&a, &b)) in u.iter().zip(&iterate).enumerate() {
            if mask[i] && a > b + 1e-12 * b.abs() {
                return Ok(InductionReport { passed: false, witness: Some((n, i, a, b)) });
            }
        }
    }
    Ok(InductionReport { passed: true, witness: None })
}

/// Label attached to bounds that use [`fractional_box_constant`].
pub const CONSTANT_LABEL: &str = "valid, possibly non-optimal";

/// A constant `c_{α,β,p}` for the fractional resolvent inequality on a box:
/// `Π_i ĉ_{p,i}^{1/p}`, equal to 1 when `β = 0`.
pub fn fractional_box_constant(alpha: &[f64], beta: &[f64], p: f64) -> Result<f64> {
    if alpha.len() != beta.len() || alpha.is_empty() {
        return Err(invalid("alpha and beta need the same nonzero length"));
    }
    let mut c = 1.0;
    for (&a, &b) in alpha.iter().zip(beta) {
        c *= FractionalResolventParams::new(a, b, p)?.c_hat.powf(1.0 / p);
    }
    Ok(c)
}

/// The sup-form fractional bound on a box:
/// `v(t) + sup v · c_{α,β,p} Π Γ(1-β_i p)^{1/p} · Σ_{n>=1} k0(t)^n Π_i (Γ(α_{p,i}) T_i^{a_i})^{n/p} / Γ(a_i n + 1)^{1/p}`
/// with `T_i = t_i - t_{i,0}` and `a_i = α_{p,i} - β_i p`. Requires `β_i p < 1`.
pub fn fractional_box_bound(
    alpha: &[f64],
    beta: &[f64],
    p: f64,
    k0_t: f64,
    horizon: &[f64],
    v_t: f64,
    sup_v: f64,
) -> Result<(SeriesValue, &'static str)> {
    if horizon.len() != alpha.len() {
        return Err(invalid("one horizon per axis expected"));
    }
    let c = fractional_box_constant(alpha, beta, p)?;
    let mut c_beta = 1.0;
    let mut axes = Vec::new();
    for ((&a, &b), &h) in alpha.iter().zip(beta).zip(horizon) {
        if b * p >= 1.0 {
            return Err(Error::CertificateDiverges("β p must be below 1 for the sup form".into()));
        }
        if h < 0.0 {
            return Err(invalid("negative horizon"));
        }
        let ap = (a - 1.0) * p + 1.0;
        c_beta *= (ln_gamma(1.0 - b * p)? / p).exp();
        axes.push((ap, ap - b * p, h));
    }
    let ln_term = |n: usize| {
        let nf = n as f64;
        let mut s = nf * k0_t.ln();
        for &(ap, a, h) in &axes {
            s += (nf * (ln_gamma(ap).unwrap() + a * h.ln()) - ln_gamma(a * nf + 1.0).unwrap()) / p;
        }
        s
    };
    let series = if k0_t == 0.0 || horizon.iter().any(|&h| h == 0.0) {
        SeriesValue::exact(0.0, 0)
    } else {
        sum_ratio_series(|i| ln_term(i + 1).exp(), 1e-14)
    };
    let scale = ExtReal::saturating(sup_v * c * c_beta);
    Ok((
        SeriesValue {
            sum: ExtReal::saturating(v_t) + scale * series.sum,
            tail_bound: scale * series.tail_bound,
            ..series
        },
        CONSTANT_LABEL,
    ))
}

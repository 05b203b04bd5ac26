//! Iterated kernels, resolvents and the series function `I_{k,μ,p}`.
//!
//! Iterated kernels of `k^p` are tabulated numerically, except for
//! fractional kernels where the one-variable recursion of
//! [`crate::fractional`] is used. Resolvent sums and the series function use
//! closed forms where the family has one and otherwise sum numerical
//! iterates, certifying the tail with a family majorant: factorial for
//! monotone kernels on intervals, Mittag-Leffler for fractional kernels,
//! geometric for discrete measures.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::domain::{DomainSpec, MeasureSpace, MeasureSpec};
use crate::engine::{Engine, Powers, Src};
use crate::error::{invalid, Error, Result};
use crate::extreal::ExtReal;
use crate::fractional::{majorant_constant, FractionalIterates, FractionalResolventParams};
use crate::kernels::KernelSpec;
use crate::quadrature::{gauss_legendre, graded_integral, Accuracy, GridScheme, QuadratureGrid};
use crate::specfun::{ln_gamma, mittag_leffler, sum_ratio_series, MLParams, SeriesValue};

pub const DEFAULT_COMPONENT_BUDGET: usize = 4096;
/// Engine resolution used by point evaluations.
pub const DEFAULT_LEVEL: u32 = 5;
const MAX_TERMS: usize = 400;

/// `R_{k^p,μ,n}(t_i, s_j)` for `n = 1..=n_max` on a grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResolventTable {
    pub grid: QuadratureGrid,
    pub n_max: usize,
    pub p: f64,
    /// All pairs are ordered (void order); otherwise only `s_j <= t_i`.
    pub void_order: bool,
    /// `layers[n - 1][i]` holds the entries for `j <= i` (or all `j`).
    layers: Vec<Vec<Vec<ExtReal>>>,
    /// Two-level estimate of the largest relative layer error.
    pub err_est: f64,
    pub accuracy: Accuracy,
}

impl ResolventTable {
    /// `R_n(t_i, s_j)`, or `None` for masked or out-of-range entries.
    pub fn get(&self, n: usize, i: usize, j: usize) -> Option<ExtReal> {
        if n == 0 {
            return None;
        }
        self.layers.get(n - 1)?.get(i)?.get(j).copied()
    }

    pub fn t(&self, i: usize) -> f64 {
        self.grid.nodes[i]
    }

    /// `(n, t, s, value)` for every unmasked entry.
    pub fn entries(&self) -> impl Iterator<Item = (usize, f64, f64, ExtReal)> + '_ {
        self.layers.iter().enumerate().flat_map(move |(n, rows)| {
            rows.iter().enumerate().flat_map(move |(i, row)| {
                row.iter().enumerate().map(move |(j, v)| (n + 1, self.grid.nodes[i], self.grid.nodes[j], *v))
            })
        })
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "n,t,s,value")?;
        for (n, t, s, v) in self.entries() {
            writeln!(w, "{n},{},{},{}", fmt17(t), fmt17(s), fmt_ext(v))?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// 17 significant digits.
pub fn fmt17(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

pub fn fmt_ext(v: ExtReal) -> String {
    fmt17(v.to_f64())
}

/// The factorial `(n-1)!` style helper: `ln Γ(x + 1)`.
pub(crate) fn ln_fact(x: f64) -> f64 {
    ln_gamma(x + 1.0).unwrap()
}

fn check_1d(space: &MeasureSpace) -> Result<()> {
    space.validate()?;
    if matches!(space.domain, DomainSpec::ProductBox { .. }) {
        return Err(Error::Unsupported(
            "box domains are handled by product_bound and box_iterated_kernel".into(),
        ));
    }
    Ok(())
}

fn is_void(space: &MeasureSpace) -> bool {
    matches!(space.domain, DomainSpec::VoidSet { .. })
}

fn atomless_interval(space: &MeasureSpace) -> bool {
    matches!(space.domain, DomainSpec::Interval { .. })
        && matches!(space.measure, MeasureSpec::Lebesgue | MeasureSpec::WeightedLebesgue { .. })
}

fn lebesgue_interval(space: &MeasureSpace) -> bool {
    matches!(space.domain, DomainSpec::Interval { .. }) && matches!(space.measure, MeasureSpec::Lebesgue)
}

/// `∫_{[a, b]} f dμ` on a 1-D space; the whole space for a void order.
pub(crate) fn integral_over(space: &MeasureSpace, a: f64, b: f64, f: &dyn Fn(f64) -> f64) -> f64 {
    let void = is_void(space);
    match &space.measure {
        MeasureSpec::Discrete { atoms } => atoms
            .iter()
            .filter(|at| void || (at.point[0] >= a && at.point[0] <= b))
            .map(|at| if at.mass == 0.0 { 0.0 } else { at.mass * f(at.point[0]) })
            .sum(),
        m => {
            let (a, b) = match (&space.domain, void) {
                (DomainSpec::VoidSet { support: Some(iv), .. }, true) => (iv.lo, iv.hi),
                _ => (a, b),
            };
            let g = |x: f64| {
                let v = f(x);
                match m {
                    MeasureSpec::WeightedLebesgue { weight } if v != 0.0 => v * weight.call(x),
                    _ => v,
                }
            };
            graded_integral(a, b, 6, true, true, &g)
        }
    }
}

fn lower_end(space: &MeasureSpace) -> f64 {
    match &space.domain {
        DomainSpec::Interval { lo, .. } => *lo,
        DomainSpec::VoidSet { support, .. } => support.map_or(f64::NEG_INFINITY, |iv| iv.lo),
        DomainSpec::ProductBox { .. } => f64::NEG_INFINITY,
    }
}

fn upper_end(space: &MeasureSpace) -> f64 {
    match &space.domain {
        DomainSpec::Interval { hi, .. } => *hi,
        DomainSpec::VoidSet { support, .. } => support.map_or(f64::INFINITY, |iv| iv.hi),
        DomainSpec::ProductBox { .. } => f64::INFINITY,
    }
}

fn fractional_params(kernel: &KernelSpec, p: f64) -> Option<Result<FractionalResolventParams>> {
    match kernel {
        KernelSpec::Fractional { alpha, beta, .. } => Some(FractionalResolventParams::new(*alpha, *beta, p)),
        KernelSpec::TransformedFractional { alpha, beta, .. } if alpha.len() == 1 && p == 1.0 => {
            Some(FractionalResolventParams::new(alpha[0], beta[0], p))
        }
        _ => None,
    }
}

/// Closed-form or one-variable evaluation of `R_{k^p,n}` for fractional
/// kernels under Lebesgue measure.
struct FractionalView {
    iterates: std::sync::Arc<FractionalIterates>,
    kernel: KernelSpec,
}

impl FractionalView {
    fn new(kernel: &KernelSpec, space: &MeasureSpace, p: f64) -> Option<Result<Self>> {
        if !lebesgue_interval(space) {
            return None;
        }
        let params = match fractional_params(kernel, p)? {
            Ok(par) => par,
            Err(e) => return Some(Err(e)),
        };
        Some(Ok(FractionalView { iterates: FractionalIterates::shared(params), kernel: kernel.clone() }))
    }

    fn params(&self) -> &FractionalResolventParams {
        self.iterates.params()
    }

    /// `(scale, x, y)` with `R_n(t, s) = scale · f_n(x, y)`.
    fn coordinates(&self, t: f64, s: f64) -> (f64, f64, f64) {
        match &self.kernel {
            KernelSpec::Fractional { t0, .. } => (1.0, t - s, s - t0),
            KernelSpec::TransformedFractional { phi, phi_dot, t0, .. } => {
                let (pt, ps) = (phi.call(t), phi.call(s));
                (phi_dot.call(s), pt - ps, ps - phi.call(*t0))
            }
            _ => unreachable!(),
        }
    }

    fn iterate(&self, n: usize, t: f64, s: f64) -> ExtReal {
        let (scale, x, y) = self.coordinates(t, s);
        ExtReal::saturating(scale) * ExtReal::saturating(self.iterates.f(n, x, y))
    }

    /// Length of `I(t)` in the transformed variable.
    fn horizon(&self, t: f64) -> f64 {
        match &self.kernel {
            KernelSpec::Fractional { t0, .. } => t - t0,
            KernelSpec::TransformedFractional { phi, t0, .. } => phi.call(t) - phi.call(*t0),
            _ => unreachable!(),
        }
    }

    fn t0(&self) -> f64 {
        match &self.kernel {
            KernelSpec::Fractional { t0, .. } | KernelSpec::TransformedFractional { t0, .. } => *t0,
            _ => unreachable!(),
        }
    }
}

fn engine_level(grid: &QuadratureGrid) -> u32 {
    match grid.scheme {
        GridScheme::Atoms => 1,
        _ => grid.level.clamp(3, 6),
    }
}

fn check_grid(space: &MeasureSpace, grid: &QuadratureGrid) -> Result<()> {
    if grid.is_empty() {
        return Err(invalid("empty grid"));
    }
    if grid.nodes.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(invalid("grid nodes must be strictly increasing"));
    }
    if let DomainSpec::Interval { lo, hi } = space.domain {
        if let Some(x) = grid.nodes.iter().find(|x| !(**x >= lo && **x <= hi)) {
            return Err(Error::OutsideDomain { point: vec![*x] });
        }
    }
    Ok(())
}

/// Table of `R_{k^p,μ,n}` for `n = 1..=n_max` at all ordered grid pairs.
pub fn iterated_kernels(
    kernel: &KernelSpec,
    space: &MeasureSpace,
    p: f64,
    n_max: usize,
    grid: &QuadratureGrid,
) -> Result<ResolventTable> {
    check_1d(space)?;
    kernel.validate(Some(p))?;
    check_grid(space, grid)?;
    if n_max == 0 {
        return Err(invalid("n_max must be at least 1"));
    }
    let void = is_void(space);
    if let Some(view) = FractionalView::new(kernel, space, p) {
        let view = view?;
        if let Some(x) = grid.nodes.iter().find(|x| **x < view.t0()) {
            return Err(Error::OutsideDomain { point: vec![*x] });
        }
        let layers = (1..=n_max)
            .map(|n| {
                (0..grid.len())
                    .map(|i| (0..=i).map(|j| view.iterate(n, grid.nodes[i], grid.nodes[j])).collect())
                    .collect()
            })
            .collect();
        return Ok(ResolventTable {
            grid: grid.clone(),
            n_max,
            p,
            void_order: false,
            layers,
            err_est: 0.0,
            accuracy: Accuracy::Converged,
        });
    }
    let level = engine_level(grid);
    let fine = numeric_layers(kernel, space, p, n_max, grid, level)?;
    let exact = !matches!(space.measure, MeasureSpec::Lebesgue | MeasureSpec::WeightedLebesgue { .. });
    let err_est = if exact {
        0.0
    } else {
        let coarse = numeric_layers(kernel, space, p, n_max, grid, level - 1)?;
        layer_difference(&fine, &coarse)
    };
    let divergent = fine.iter().flatten().flatten().any(|v| v.is_infinite()) && kernel.is_regular();
    let accuracy = if divergent {
        Accuracy::Divergent
    } else if err_est <= 1e-6 {
        Accuracy::Converged
    } else {
        Accuracy::UnknownAccuracy
    };
    Ok(ResolventTable { grid: grid.clone(), n_max, p, void_order: void, layers: fine, err_est, accuracy })
}

type Layers = Vec<Vec<Vec<ExtReal>>>;

fn numeric_layers(
    kernel: &KernelSpec,
    space: &MeasureSpace,
    p: f64,
    n_max: usize,
    grid: &QuadratureGrid,
    level: u32,
) -> Result<Layers> {
    let void = is_void(space);
    let b = *grid.nodes.last().unwrap();
    let m = grid.len();
    let mut layers: Layers = vec![vec![Vec::new(); m]; n_max];
    for i in 0..m {
        let cols = if void { m } else { i + 1 };
        for layer in layers.iter_mut() {
            layer[i] = vec![ExtReal::ZERO; cols];
        }
    }
    for (j, &s) in grid.nodes.iter().enumerate() {
        let engine = Engine::new(kernel, space, p, s, b, level)?;
        let mut pw = Powers::new(&engine, |x| engine.kp(x, s));
        for n in 1..=n_max {
            for i in 0..m {
                if !void && i < j {
                    continue;
                }
                let v = pw.value(n - 1, grid.nodes[i]);
                layers[n - 1][i][j] = ExtReal::saturating(v);
            }
        }
    }
    Ok(layers)
}

fn layer_difference(a: &Layers, b: &Layers) -> f64 {
    let mut worst = 0.0f64;
    for (la, lb) in a.iter().zip(b) {
        let (mut diff, mut scale) = (0.0f64, 0.0f64);
        for (ra, rb) in la.iter().zip(lb) {
            for (x, y) in ra.iter().zip(rb) {
                if let (ExtReal::Finite(x), ExtReal::Finite(y)) = (x, y) {
                    diff = diff.max((x - y).abs());
                    scale = scale.max(x.abs());
                }
            }
        }
        if scale > 0.0 {
            worst = worst.max(diff / scale);
        }
    }
    worst
}

/// `R_{k^p,μ,n}(t, s)` at one ordered pair of a 1-D space.
pub fn iterated_kernel_value(
    kernel: &KernelSpec,
    space: &MeasureSpace,
    p: f64,
    n: usize,
    t: f64,
    s: f64,
    level: u32,
) -> Result<ExtReal> {
    check_1d(space)?;
    kernel.validate(Some(p))?;
    if n == 0 {
        return Err(invalid("n must be at least 1"));
    }
    if !is_void(space) && s > t {
        return Err(Error::NotOrdered { s: vec![s], t: vec![t] });
    }
    if let Some(view) = FractionalView::new(kernel, space, p) {
        return Ok(view?.iterate(n, t, s));
    }
    let engine = Engine::new(kernel, space, p, s, t.max(s), level)?;
    let mut pw = Powers::new(&engine, |x| engine.kp(x, s));
    Ok(ExtReal::saturating(pw.value(n - 1, t)))
}

/// Sums `term(1), term(2), ...`; `tail(N)` bounds the sum of the terms after
/// `N`, or is `None` when no majorant is known.
fn sum_with_tail(
    mut term: impl FnMut(usize) -> f64,
    tail: Option<&dyn Fn(usize) -> f64>,
    tol: f64,
) -> SeriesValue {
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    for n in 1..=MAX_TERMS {
        let t = term(n);
        if !(t >= 0.0) || t.is_infinite() {
            return SeriesValue::divergent(n);
        }
        sum += t;
        match tail {
            Some(bound) => {
                let b = bound(n);
                if b < tol * sum.max(1.0) {
                    return SeriesValue {
                        sum: ExtReal::saturating(sum),
                        tail_bound: ExtReal::saturating(b),
                        terms_used: n,
                        converged: true,
                    };
                }
            }
            None => {
                if n >= 3 && t <= prev && t < tol * sum.max(1.0) {
                    return SeriesValue {
                        sum: ExtReal::saturating(sum),
                        tail_bound: ExtReal::saturating(2.0 * t),
                        terms_used: n,
                        converged: false,
                    };
                }
            }
        }
        prev = t;
    }
    SeriesValue { sum: ExtReal::saturating(sum), tail_bound: ExtReal::Infinity, terms_used: MAX_TERMS, converged: false }
}

/// `Σ_{n >= from} exp(ln_term(n))` for log-concave ratios (an upper bound).
pub(crate) fn ratio_tail(ln_term: impl Fn(usize) -> f64, from: usize) -> f64 {
    sum_ratio_series(|i| ln_term(from + i).exp(), 1e-6).upper().to_f64()
}

fn ml(alpha: f64, beta: f64, p: f64, z: f64, tol: f64) -> Result<SeriesValue> {
    mittag_leffler(MLParams::new(alpha, beta, p)?, z, tol)
}

/// Scales a series value by a nonnegative factor.
fn scaled(v: SeriesValue, c: f64) -> SeriesValue {
    let c = ExtReal::saturating(c);
    SeriesValue { sum: v.sum * c, tail_bound: v.tail_bound * c, ..v }
}

/// `R_{k^p,μ}(t, s) = Σ_{n>=1} R_{k^p,μ,n}(t, s)`.
pub fn resolvent_series(
    kernel: &KernelSpec,
    space: &MeasureSpace,
    p: f64,
    t: f64,
    s: f64,
    tol: f64,
) -> Result<SeriesValue> {
    check_1d(space)?;
    kernel.validate(Some(p))?;
    if !(tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    let void = is_void(space);
    if !void && s > t {
        return Err(Error::NotOrdered { s: vec![s], t: vec![t] });
    }
    let kp = |x: f64, y: f64| kernel.value1_pow(x, y, p).to_f64();
    if void {
        if let KernelSpec::Void { k1 } = kernel {
            let q = integral_over(space, 0.0, 0.0, &|x| k1.eval(x).powf(p).to_f64());
            return Ok(if q < 1.0 { SeriesValue::exact(kp(t, s) / (1.0 - q), 1) } else { SeriesValue::divergent(1) });
        }
    }
    if atomless_interval(space) {
        match kernel {
            KernelSpec::Constant { c } => {
                let cp = c.powf(p);
                let mass = integral_over(space, s, t, &|_| 1.0);
                return Ok(SeriesValue::exact(cp * (cp * mass).exp(), 1));
            }
            KernelSpec::Separable { k0, k1, .. } => {
                let h = integral_over(space, s, t, &|x| (k0.call(x) * k1.call(x)).powf(p));
                return Ok(SeriesValue::exact(kp(t, s) * h.exp(), 1));
            }
            KernelSpec::Multiplicative { .. } => {
                let mass = integral_over(space, s, t, &|_| 1.0);
                return Ok(SeriesValue::exact(kp(t, s) * mass.exp(), 1));
            }
            _ => {}
        }
        if let Some(view) = FractionalView::new(kernel, space, p) {
            return fractional_resolvent(&view?, t, s, tol);
        }
    }
    let engine = Engine::new(kernel, space, p, s, t.max(s), DEFAULT_LEVEL)?;
    if engine.is_points() {
        return points_resolvent(&engine, t, s);
    }
    let mut pw = Powers::new(&engine, |x| engine.kp(x, s));
    let k_ts = kp(t, s);
    let tail = monotone_tail(kernel, space).then(|| {
        let big_k = engine.apply_at(t, Src::Fn(&|_| 1.0));
        move |n: usize| {
            if k_ts == 0.0 {
                0.0
            } else {
                k_ts * ratio_tail(|m| m as f64 * big_k.ln() - ln_fact(m as f64), n)
            }
        }
    });
    let tail_ref = tail.as_ref().map(|f| f as &dyn Fn(usize) -> f64);
    Ok(sum_with_tail(|n| pw.value(n - 1, t), tail_ref, tol))
}

/// Factorial majorants hold for monotone kernels on intervals with a
/// continuous measure.
fn monotone_tail(kernel: &KernelSpec, space: &MeasureSpace) -> bool {
    atomless_interval(space) && kernel.declares_monotone()
}

fn points_resolvent(engine: &Engine<'_>, t: f64, s: f64) -> Result<SeriesValue> {
    let gb = engine.geometric_bound().expect("point engine");
    if gb.rho_lower >= 1.0 {
        return Ok(SeriesValue::divergent(1));
    }
    let b: Vec<f64> = engine.nodes().iter().map(|&x| engine.kp(x, s)).collect();
    if gb.rho_upper < 1.0 {
        if let Some(u) = engine.resolvent_solve(&b) {
            let v = engine.kp(t, s) + engine.apply_at(t, Src::Nodes(&u));
            return Ok(SeriesValue::exact(v, 1));
        }
    }
    // undecided spectral radius: plain summation without certificate
    let mut pw = Powers::new(engine, |x| engine.kp(x, s));
    Ok(sum_with_tail(|n| pw.value(n - 1, t), None, 1e-12))
}

fn fractional_resolvent(view: &FractionalView, t: f64, s: f64, tol: f64) -> Result<SeriesValue> {
    let par = *view.params();
    let (scale, x, y) = view.coordinates(t, s);
    if x <= 0.0 {
        // only the first term can be nonzero at the diagonal
        return Ok(SeriesValue { terms_used: 1, ..SeriesValue::exact(0.0, 1) }).map(|mut v| {
            v.sum = ExtReal::saturating(scale) * ExtReal::saturating(view.iterates.f(1, 0.0, y));
            v
        });
    }
    if par.beta == 0.0 {
        // Σ_{n>=1} Γ(α_p)^n x^{α_p n - 1} / Γ(α_p n) = (z / x) E_{α_p, α_p}(z)
        let z = ln_gamma(par.alpha_p)?.exp() * x.powf(par.alpha_p);
        let e = ml(par.alpha_p, par.alpha_p, 1.0, z, tol)?;
        return Ok(scaled(e, scale * z / x));
    }
    let bp = par.beta_p();
    let c = par.c_hat;
    let lg = ln_gamma(par.alpha_p)?;
    let ln_major = |n: usize| {
        let nf = n as f64;
        c.ln() + nf * lg + (par.a * nf + bp - 1.0) * x.ln() - bp * y.ln() - ln_gamma(par.a * nf + bp).unwrap()
    };
    let tail = |n: usize| scale * ratio_tail(ln_major, n + 1);
    Ok(sum_with_tail(|n| scale * view.iterates.f(n, x, y), Some(&tail), tol))
}

/// `|R(t,s) - k(t,s) - ∫_{[s,t]} k(t,σ) R(σ,s) μ(dσ)|` for `p = 1`.
///
/// With `n_max` the resolvent is replaced by its partial sum, and the
/// residual is the first omitted iterate.
pub fn volterra_residual(
    kernel: &KernelSpec,
    space: &MeasureSpace,
    t: f64,
    s: f64,
    level: u32,
    n_max: Option<usize>,
) -> Result<f64> {
    check_1d(space)?;
    let engine = Engine::new(kernel, space, 1.0, s, t.max(s), level)?;
    let r_of: Box<dyn Fn(f64) -> f64> = match n_max {
        Some(n_max) => {
            let pw = RefCell::new(Powers::new(&engine, |x| engine.kp(x, s)));
            Box::new(move |x| (0..n_max).map(|n| pw.borrow_mut().value(n, x)).sum())
        }
        None => Box::new(|x| {
            resolvent_series(kernel, space, 1.0, x, s, 1e-14).map_or(f64::NAN, |v| v.sum.to_f64())
        }),
    };
    let lhs = r_of(t);
    let rhs = engine.kp(t, s) + engine.apply_at(t, Src::Fn(&*r_of));
    Ok((lhs - rhs).abs())
}

/// `Σ_{n>=1} (∫_{I(t)} R_{k^p,μ,n}(t,s) w(s) μ(ds))^{1/p}` for `w >= 0`.
///
/// With `w = v^p` this is the series of the resolvent inequality, with
/// `w = 1` the series function.
pub fn weighted_series(
    kernel: &KernelSpec,
    space: &MeasureSpace,
    p: f64,
    t: f64,
    w: &dyn Fn(f64) -> f64,
    tol: f64,
) -> Result<SeriesValue> {
    weighted_impl(kernel, space, p, t, w, tol, &RefCell::new(Vec::new()))
}

/// The summed terms of [`weighted_series`] together with the result.
#[derive(Clone, Debug)]
pub struct WeightedTerms {
    /// `terms[n - 1]` is the n-th term.
    pub terms: Vec<f64>,
    pub series: SeriesValue,
}

pub fn weighted_terms(
    kernel: &KernelSpec,
    space: &MeasureSpace,
    p: f64,
    t: f64,
    w: &dyn Fn(f64) -> f64,
    tol: f64,
) -> Result<WeightedTerms> {
    let rec = RefCell::new(Vec::new());
    let series = weighted_impl(kernel, space, p, t, w, tol, &rec)?;
    Ok(WeightedTerms { terms: rec.into_inner(), series })
}

fn weighted_impl(
    kernel: &KernelSpec,
    space: &MeasureSpace,
    p: f64,
    t: f64,
    w: &dyn Fn(f64) -> f64,
    tol: f64,
    rec: &RefCell<Vec<f64>>,
) -> Result<SeriesValue> {
    let record = |v: f64| {
        rec.borrow_mut().push(v);
        v
    };
    check_1d(space)?;
    kernel.validate(Some(p))?;
    if !(tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    let void = is_void(space);
    let root = |x: f64| if p == 1.0 { x } else { x.powf(1.0 / p) };
    if void {
        if let KernelSpec::Void { k1 } = kernel {
            // ∫ R_n(t,s) w dμ = q^{n-1} ∫ k1^p w dμ
            let q = integral_over(space, 0.0, 0.0, &|x| k1.eval(x).powf(p).to_f64());
            let c = integral_over(space, 0.0, 0.0, &|x| {
                let wx = w(x);
                if wx == 0.0 { 0.0 } else { k1.eval(x).powf(p).to_f64() * wx }
            });
            if c == 0.0 {
                return Ok(SeriesValue::exact(0.0, 1));
            }
            let rq = root(q);
            if rq >= 1.0 {
                return Ok(SeriesValue::divergent(1));
            }
            // the recorded terms serve callers that need them one by one
            let (mut term, mut n) = (root(c), 0);
            while n < MAX_TERMS && term >= 1e-18 * root(c) && term > f64::MIN_POSITIVE {
                record(term);
                term *= rq;
                n += 1;
            }
            return Ok(SeriesValue::exact(root(c) / (1.0 - rq), n));
        }
    } else if t < lower_end(space) || t > upper_end(space) {
        return Err(Error::OutsideDomain { point: vec![t] });
    }
    let lo = lower_end(space);
    if let Some(view) = FractionalView::new(kernel, space, p) {
        let view = view?;
        if view.t0() == lo {
            return fractional_weighted(&view, p, t, w, tol, &record);
        }
    }
    let (a, b) = if void { (f64::NEG_INFINITY, f64::INFINITY) } else { (lo, t) };
    let engine = Engine::new(kernel, space, p, a, b, DEFAULT_LEVEL)?;
    let mut pw = Powers::new(&engine, w);
    if engine.is_points() {
        let gb = engine.geometric_bound().expect("point engine");
        if gb.rho_lower >= 1.0 && pw.value(1, t) > 0.0 {
            return Ok(SeriesValue::divergent(1));
        }
        if gb.rho_upper < 1.0 {
            let y_t = engine.apply_at(t, Src::Nodes(&gb.z));
            let rho = root(gb.rho_upper);
            let z = gb.z.clone();
            let pw_cell = RefCell::new(pw);
            let tail = |n: usize| {
                let mut pw = pw_cell.borrow_mut();
                let layer = pw.layer(n);
                let c = layer.iter().zip(&z).map(|(u, z)| u / z).fold(0.0, f64::max);
                root(c * y_t) / (1.0 - rho)
            };
            let term = |n: usize| record(root(pw_cell.borrow_mut().value(n, t)));
            return Ok(sum_with_tail(term, Some(&tail), tol));
        }
        return Ok(sum_with_tail(|n| record(root(pw.value(n, t))), None, tol));
    }
    let tail = monotone_tail(kernel, space).then(|| {
        // (A^n w)(t) <= K_t^{n-1} / (n-1)! · (A w)(t)
        let big_k = engine.apply_at(t, Src::Fn(&|_| 1.0));
        let first = engine.apply_at(t, Src::Fn(w));
        move |n: usize| {
            if first == 0.0 {
                0.0
            } else {
                ratio_tail(|m| ((m as f64 - 1.0) * big_k.ln() - ln_fact(m as f64 - 1.0) + first.ln()) / p, n + 1)
            }
        }
    });
    let tail_ref = tail.as_ref().map(|f| f as &dyn Fn(usize) -> f64);
    Ok(sum_with_tail(|n| record(root(pw.value(n, t))), tail_ref, tol))
}

fn fractional_weighted(
    view: &FractionalView,
    p: f64,
    t: f64,
    w: &dyn Fn(f64) -> f64,
    tol: f64,
    record: &dyn Fn(f64) -> f64,
) -> Result<SeriesValue> {
    let par = *view.params();
    let bp = par.beta_p();
    if bp >= 1.0 {
        return Ok(SeriesValue::divergent(1));
    }
    let horizon = view.horizon(t);
    if horizon <= 0.0 {
        return Ok(SeriesValue::exact(0.0, 1));
    }
    let t0 = view.t0();
    // s as a function of λ ∈ [0, 1] in the transformed variable
    let s_of = |lam: f64| -> f64 {
        match &view.kernel {
            KernelSpec::TransformedFractional { phi, .. } => {
                let target = phi.call(t0) + lam * horizon;
                invert_increasing(|x| phi.call(x), t0, t, target)
            }
            _ => t0 + lam * horizon,
        }
    };
    let weight = |lam: f64| w(s_of(lam));
    let sup_w = gauss_legendre(32).nodes.iter().map(|u| weight(0.5 * (u + 1.0))).fold(0.0, f64::max);
    let lg = ln_gamma(par.alpha_p)?;
    let m = majorant_constant(&par);
    let root = |x: f64| if p == 1.0 { x } else { x.powf(1.0 / p) };
    let term = |n: usize| {
        let factor = view.iterates.weighted_integral_factor(n, &weight);
        record(root(horizon.powf(par.a * n as f64) * factor))
    };
    let tail = |n: usize| {
        if sup_w == 0.0 {
            return 0.0;
        }
        let ln_t = |i: usize| {
            let x = par.a * i as f64;
            (sup_w.ln() + m.ln() + i as f64 * lg + x * horizon.ln() - ln_gamma(x + 1.0).unwrap()) / p
        };
        ratio_tail(ln_t, n + 1)
    };
    // weights below the grid sup make the tail a grid-sup majorant
    Ok(sum_with_tail(term, Some(&tail), tol))
}

fn invert_increasing(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, target: f64) -> f64 {
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `I_{k,μ,p}(t) = Σ_{n>=1} (∫_{I(t)} R_{k^p,μ,n}(t,s) μ(ds))^{1/p}`.
pub fn series_function_i(kernel: &KernelSpec, space: &MeasureSpace, p: f64, t: f64, tol: f64) -> Result<SeriesValue> {
    check_1d(space)?;
    kernel.validate(Some(p))?;
    if !(tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    if atomless_interval(space) {
        let lo = lower_end(space);
        let t_independent = match kernel {
            KernelSpec::Constant { .. } => true,
            KernelSpec::Separable { k0, .. } => k0.constant_value().is_some(),
            _ => false,
        };
        if t_independent {
            if t < lo || t > upper_end(space) {
                return Err(Error::OutsideDomain { point: vec![t] });
            }
            // (∫_{I(t)} k^p dμ)^{1/p} fed to E_{1,1,p}, minus the n = 0 term
            let big_k = integral_over(space, lo, t, &|x| kernel.value1_pow(t, x, p).to_f64());
            if !big_k.is_finite() {
                return Ok(SeriesValue::divergent(1));
            }
            let e = ml(1.0, 1.0, p, big_k.powf(1.0 / p), tol)?;
            return Ok(SeriesValue { sum: ExtReal::saturating(e.sum.to_f64() - 1.0), ..e });
        }
        if let Some(view) = FractionalView::new(kernel, space, p) {
            let view = view?;
            let par = *view.params();
            if par.beta == 0.0 && view.t0() == lo {
                let horizon = view.horizon(t).max(0.0);
                let z = (ln_gamma(par.alpha_p)? / p).exp() * horizon.powf(par.alpha_p / p);
                let e = ml(par.alpha_p, 1.0, p, z, tol)?;
                return Ok(SeriesValue { sum: ExtReal::saturating(e.sum.to_f64() - 1.0), ..e });
            }
        }
    }
    weighted_series(kernel, space, p, t, &|_| 1.0, tol)
}

/// Components `R_{k,μ,n,j}` of the iterated kernel of `k_1 + ... + k_N`,
/// keyed by `j ∈ {0..N-1}^n` with `j[0]` the outermost kernel:
/// `R_{n,(j_1,...,j_n)}(t,s) = ∫ k_{j_1}(t,σ) R_{n-1,(j_2,...,j_n)}(σ,s) μ(dσ)`.
pub fn sum_decomposition(
    parts: &[KernelSpec],
    space: &MeasureSpace,
    n: usize,
    t: f64,
    s: f64,
    level: u32,
    budget: usize,
) -> Result<BTreeMap<Vec<usize>, f64>> {
    check_1d(space)?;
    if parts.is_empty() || n == 0 {
        return Err(invalid("need at least one part and n >= 1"));
    }
    for k in parts {
        k.validate(Some(1.0))?;
    }
    let big_n = parts.len();
    let needed = (big_n as f64).powi(n as i32);
    if needed > budget as f64 {
        return Err(Error::BudgetExceeded { needed: needed.min(usize::MAX as f64) as usize, budget });
    }
    if !is_void(space) && s > t {
        return Err(Error::NotOrdered { s: vec![s], t: vec![t] });
    }
    let singular = parts.iter().any(|k| !k.is_regular());
    let engines = parts
        .iter()
        .map(|k| Engine::with_flags(k, space, 1.0, s, t.max(s), level, singular))
        .collect::<Result<Vec<_>>>()?;
    let first = |i: usize| move |x: f64| parts[i].value1(x, s).to_f64();
    // node values of components of length m, keyed by suffix
    let mut current: BTreeMap<Vec<usize>, Vec<f64>> = BTreeMap::new();
    let mut out = BTreeMap::new();
    if n == 1 {
        for (i, k) in parts.iter().enumerate() {
            out.insert(vec![i], k.value1(t, s).to_f64());
        }
        return Ok(out);
    }
    for m in 2..=n {
        let mut next = BTreeMap::new();
        let prefixes: Vec<Vec<usize>> = if m == 2 {
            (0..big_n).map(|i| vec![i]).collect()
        } else {
            current.keys().cloned().collect()
        };
        for suffix in prefixes {
            for (i, e) in engines.iter().enumerate() {
                let mut key = vec![i];
                key.extend_from_slice(&suffix);
                let f1 = first(suffix[0]);
                let src = if m == 2 { Src::Fn(&f1) } else { Src::Nodes(&current[&suffix]) };
                if m == n {
                    out.insert(key, e.apply_at(t, src));
                } else {
                    next.insert(key, e.apply_nodes(src));
                }
            }
        }
        current = next;
    }
    Ok(out)
}

/// Per-axis kernels and spaces of a product kernel on a box. A discrete tail
/// factor of the measure becomes a void-ordered axis carrying
/// `k(t, s) = tail(s)`.
pub fn product_axes(kernel: &KernelSpec, space: &MeasureSpace) -> Result<Vec<(KernelSpec, MeasureSpace)>> {
    let KernelSpec::Product { factors, tail_factor } = kernel else {
        return Err(invalid("product_axes needs a product kernel"));
    };
    let DomainSpec::ProductBox { factors: axes } = &space.domain else {
        return Err(invalid("product kernels need a box domain"));
    };
    if factors.len() != axes.len() {
        return Err(invalid(format!(
            "product kernel has {} factors but the box has {} axes",
            factors.len(),
            axes.len()
        )));
    }
    let mf = space.box_factors().ok_or_else(|| invalid("box without product measure"))?;
    let mut out = Vec::with_capacity(mf.len());
    for (i, k) in factors.iter().enumerate() {
        out.push((k.clone(), space.axis(i)?));
    }
    match (mf.len() > axes.len(), tail_factor) {
        (true, tail) => {
            let k1 = tail.clone().unwrap_or(crate::function::ScalarFn::Const(1.0));
            out.push((KernelSpec::Void { k1 }, space.axis(axes.len())?));
        }
        (false, Some(_)) => return Err(invalid("a tail factor needs a discrete tail measure")),
        (false, None) => {}
    }
    Ok(out)
}

/// `Π_i R_{k_i,μ_i,n}(t_i, s_i)`; equals the box iterate when kernel and
/// measure factor exactly.
pub fn product_bound(
    factors: &[(KernelSpec, MeasureSpace)],
    p: f64,
    n: usize,
    t: &[f64],
    s: &[f64],
    level: u32,
) -> Result<ExtReal> {
    if t.len() != factors.len() || s.len() != factors.len() {
        return Err(invalid(format!(
            "points need {} coordinates, got {} and {}",
            factors.len(),
            t.len(),
            s.len()
        )));
    }
    let mut acc = ExtReal::ONE;
    for (i, (k, sp)) in factors.iter().enumerate() {
        acc = acc * iterated_kernel_value(k, sp, p, n, t[i], s[i], level)?;
    }
    Ok(acc)
}

/// Iterated kernel of a product kernel by nested tensor Gauss-Legendre
/// quadrature over the box `[s, t]` (atoms on a discrete tail axis).
///
/// The cost grows like `(points^m)^{n-1}`; the evaluation budget is 5e7.
pub fn box_iterated_kernel(
    kernel: &KernelSpec,
    space: &MeasureSpace,
    p: f64,
    n: usize,
    t: &[f64],
    s: &[f64],
    points: usize,
) -> Result<f64> {
    let axes = product_axes(kernel, space)?;
    let m = axes.len();
    if t.len() != m || s.len() != m {
        return Err(invalid(format!("points need {m} coordinates")));
    }
    let mut per_level = 1usize;
    for (_, sp) in &axes {
        per_level = per_level.saturating_mul(match &sp.measure {
            MeasureSpec::Discrete { atoms } => atoms.len(),
            _ => points,
        });
    }
    let cost = (per_level as f64).powi(n as i32 - 1);
    if cost > 5e7 {
        return Err(Error::BudgetExceeded { needed: cost.min(usize::MAX as f64) as usize, budget: 50_000_000 });
    }
    let gl = gauss_legendre(points);
    // rule for the region [s_i, x_i] on each axis
    let rules = |x: &[f64]| -> Vec<Vec<(f64, f64)>> {
        axes.iter()
            .enumerate()
            .map(|(i, (_, sp))| match (&sp.domain, &sp.measure) {
                (DomainSpec::VoidSet { .. }, MeasureSpec::Discrete { atoms }) => {
                    atoms.iter().map(|a| (a.point[0], a.mass)).collect()
                }
                (_, MeasureSpec::Discrete { atoms }) => atoms
                    .iter()
                    .filter(|a| a.point[0] >= s[i] && a.point[0] <= x[i])
                    .map(|a| (a.point[0], a.mass))
                    .collect(),
                (_, meas) => {
                    let (c, h) = (0.5 * (s[i] + x[i]), 0.5 * (x[i] - s[i]));
                    gl.nodes
                        .iter()
                        .zip(&gl.weights)
                        .map(|(u, w)| {
                            let y = c + h * u;
                            let dens = match meas {
                                MeasureSpec::WeightedLebesgue { weight } => weight.call(y),
                                _ => 1.0,
                            };
                            (y, w * h * dens)
                        })
                        .collect()
                }
            })
            .collect()
    };
    fn rec(
        kernel: &KernelSpec,
        p: f64,
        depth: usize,
        x: &[f64],
        s: &[f64],
        rules: &dyn Fn(&[f64]) -> Vec<Vec<(f64, f64)>>,
    ) -> f64 {
        if depth == 1 {
            return kernel.value_pow(x, s, p).to_f64();
        }
        let r = rules(x);
        let m = r.len();
        if r.iter().any(Vec::is_empty) {
            return 0.0;
        }
        let mut idx = vec![0usize; m];
        let mut acc = 0.0;
        let mut sigma = vec![0.0; m];
        loop {
            let mut w = 1.0;
            for i in 0..m {
                let (y, wi) = r[i][idx[i]];
                sigma[i] = y;
                w *= wi;
            }
            if w != 0.0 {
                let k = kernel.value_pow(x, &sigma, p).to_f64();
                if k != 0.0 {
                    acc += w * k * rec(kernel, p, depth - 1, &sigma, s, rules);
                }
            }
            let mut d = m;
            loop {
                if d == 0 {
                    return acc;
                }
                d -= 1;
                idx[d] += 1;
                if idx[d] < r[d].len() {
                    break;
                }
                idx[d] = 0;
            }
        }
    }
    Ok(rec(kernel, p, n, t, s, &rules))
}

/// `∫_{[s,t]} R_m(t,σ) R_n(σ,s) μ(dσ)`, which equals `R_{m+n}(t, s)`.
pub fn semigroup_composition(
    kernel: &KernelSpec,
    space: &MeasureSpace,
    p: f64,
    m: usize,
    n: usize,
    t: f64,
    s: f64,
    level: u32,
) -> Result<f64> {
    check_1d(space)?;
    if m == 0 || n == 0 {
        return Err(invalid("m and n must be at least 1"));
    }
    let engine = Engine::new(kernel, space, p, s, t.max(s), level)?;
    let col = RefCell::new(Powers::new(&engine, |x| engine.kp(x, s)));
    let row = |sigma: f64| -> f64 {
        iterated_kernel_value(kernel, space, p, m, t, sigma, level).map_or(f64::NAN, |v| v.to_f64())
    };
    // R_m(t, σ) plays the role of the kernel in one application of A
    let v = engine.apply_at_with(t, Src::Fn(&|sig| col.borrow_mut().value(n - 1, sig)), &|_, sig| row(sig));
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::ScalarFn;
    use crate::kernels::{NuSpec, Trend};
    use crate::specfun::gamma;

    fn unit() -> MeasureSpace {
        MeasureSpace::lebesgue(0.0, 1.0).unwrap()
    }

    fn fact(n: usize) -> f64 {
        (1..=n).map(|i| i as f64).product()
    }

    #[test]
    fn constant_kernel_table_matches_closed_form() {
        let c = 1.5;
        let grid = QuadratureGrid::uniform(0.0, 1.0, 4).unwrap();
        let tab = iterated_kernels(&KernelSpec::constant(c), &unit(), 1.0, 6, &grid).unwrap();
        assert!(tab.err_est < 1e-10, "{}", tab.err_est);
        for n in 1..=6 {
            for i in 0..grid.len() {
                for j in 0..=i {
                    let x = grid.nodes[i] - grid.nodes[j];
                    let exact = c.powi(n as i32) * x.powi(n as i32 - 1) / fact(n - 1);
                    let got = tab.get(n, i, j).unwrap().to_f64();
                    assert!((got - exact).abs() <= 1e-10 * exact.max(1e-300), "n = {n}: {got} vs {exact}");
                }
            }
        }
        assert_eq!(tab.get(1, 0, 1), None);
        assert_eq!(tab.get(0, 0, 0), None);
    }

    #[test]
    fn first_layer_is_the_kernel_power() {
        let k = KernelSpec::separable(ScalarFn::Exp { coef: 1.0, rate: 1.0 }, Trend::Increasing, ScalarFn::Poly(vec![1.0, 2.0]));
        let grid = QuadratureGrid::uniform(0.0, 1.0, 3).unwrap();
        let tab = iterated_kernels(&k, &unit(), 2.0, 2, &grid).unwrap();
        for i in 0..grid.len() {
            for j in 0..=i {
                assert_eq!(tab.get(1, i, j).unwrap(), k.value1_pow(grid.nodes[i], grid.nodes[j], 2.0));
            }
        }
    }

    #[test]
    fn fractional_second_layer() {
        let k = KernelSpec::fractional(0.75, 0.0, 0.0);
        let grid = QuadratureGrid::uniform(0.0, 1.0, 3).unwrap();
        let tab = iterated_kernels(&k, &unit(), 1.0, 2, &grid).unwrap();
        let c = gamma(0.75).unwrap().powi(2) / gamma(1.5).unwrap();
        let (i, j) = (7, 2);
        let x = grid.nodes[i] - grid.nodes[j];
        assert!((tab.get(2, i, j).unwrap().to_f64() - c * x.sqrt()).abs() < 1e-12);
        assert_eq!(tab.get(1, 3, 3).unwrap(), ExtReal::Infinity);
    }

    #[test]
    fn csv_and_json_export() {
        let grid = QuadratureGrid::uniform(0.0, 1.0, 1).unwrap();
        let tab = iterated_kernels(&KernelSpec::constant(2.0), &unit(), 1.0, 2, &grid).unwrap();
        let mut buf = Vec::new();
        tab.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "n,t,s,value");
        assert_eq!(lines.len(), 1 + 2 * 6);
        assert_eq!(lines[1], "1,0.0000000000000000e0,0.0000000000000000e0,2.0000000000000000e0");
        let back: ResolventTable = serde_json::from_str(&tab.to_json().unwrap()).unwrap();
        assert_eq!(back.get(2, 2, 0), tab.get(2, 2, 0));
    }

    #[test]
    fn resolvent_closed_forms() {
        let c = 1.3;
        let r = resolvent_series(&KernelSpec::constant(c), &unit(), 1.0, 0.9, 0.2, 1e-12).unwrap();
        assert!((r.sum.to_f64() - c * (c * 0.7f64).exp()).abs() < 1e-13);
        // the same through the numerical path: a constant written as a custom kernel
        let custom = KernelSpec::custom(move |_, _| c, true, true);
        let r2 = resolvent_series(&custom, &unit(), 1.0, 0.9, 0.2, 1e-12).unwrap();
        assert!(r2.converged);
        assert!((r2.sum.to_f64() - r.sum.to_f64()).abs() < 1e-10, "{:?}", r2);
        let void = MeasureSpace::void_atoms((0..4).map(|i| (i as f64, 0.25))).unwrap();
        let k = KernelSpec::void(ScalarFn::Const(0.8));
        let r = resolvent_series(&k, &void, 1.0, 0.0, 1.0, 1e-12).unwrap();
        assert!((r.sum.to_f64() - 0.8 / 0.2).abs() < 1e-12);
        let k = KernelSpec::void(ScalarFn::Const(1.0));
        let r = resolvent_series(&k, &void, 1.0, 0.0, 1.0, 1e-12).unwrap();
        assert!(r.sum.is_infinite() && !r.converged);
    }

    #[test]
    fn fractional_resolvent_matches_summed_terms() {
        let k = KernelSpec::fractional(0.75, 0.0, 0.0);
        let r = resolvent_series(&k, &unit(), 1.0, 0.8, 0.3, 1e-13).unwrap();
        let x: f64 = 0.5;
        let direct: f64 = (1..80)
            .map(|n| gamma(0.75).unwrap().powi(n) * x.powf(0.75 * n as f64 - 1.0) / gamma(0.75 * n as f64).unwrap())
            .sum();
        assert!((r.sum.to_f64() - direct).abs() < 1e-11 * direct);
        let kb = KernelSpec::fractional(0.75, 0.2, 0.0);
        let rb = resolvent_series(&kb, &unit(), 1.0, 0.8, 0.3, 1e-10).unwrap();
        assert!(rb.converged);
        assert!(rb.sum.to_f64() < r.sum.to_f64() * 0.3f64.powf(-0.2) * 2.0);
    }

    #[test]
    fn volterra_identity() {
        let res = volterra_residual(&KernelSpec::constant(1.0), &unit(), 1.0, 0.0, 6, None).unwrap();
        assert!(res < 1e-10, "{res}");
        let void = MeasureSpace::void_atoms((0..5).map(|i| (i as f64, 0.1))).unwrap();
        let res = volterra_residual(&KernelSpec::void(ScalarFn::Const(1.0)), &void, 0.0, 3.0, 1, None).unwrap();
        assert!(res < 1e-12, "{res}");
        // truncation after R_1 leaves R_2 = c^2 (t - s)
        let res = volterra_residual(&KernelSpec::constant(2.0), &unit(), 0.9, 0.1, 4, Some(1)).unwrap();
        assert!((res - 4.0 * 0.8).abs() < 1e-10, "{res}");
    }

    #[test]
    fn series_function_closed_forms() {
        // regular kernel k = 2 on [0, 1]: E_{1,1,p}((∫k^p)^{1/p}) - 1
        for p in [1.0, 2.0] {
            let i = series_function_i(&KernelSpec::constant(2.0), &unit(), p, 1.0, 1e-12).unwrap();
            let k = 2f64.powf(p);
            let direct: f64 = (1..60).map(|n| (k.powi(n) / fact(n as usize)).powf(1.0 / p)).sum();
            assert!((i.sum.to_f64() - direct).abs() < 1e-10, "p = {p}");
            // numerical path
            let custom = KernelSpec::custom(|_, _| 2.0, true, true);
            let j = series_function_i(&custom, &unit(), p, 1.0, 1e-10).unwrap();
            assert!(j.converged && (j.sum.to_f64() - direct).abs() < 1e-8, "{j:?} vs {direct}");
        }
        let void = MeasureSpace::void_atoms((0..8).map(|i| (i as f64, 0.0625))).unwrap();
        let k = KernelSpec::void(ScalarFn::Const(1.0));
        for p in [1.0, 2.0] {
            let q: f64 = 0.5;
            let i = series_function_i(&k, &void, p, 0.0, 1e-12).unwrap();
            let rq = q.powf(1.0 / p);
            assert_eq!(i.sum.to_f64(), rq / (1.0 - rq));
        }
    }

    #[test]
    fn series_function_fractional() {
        let k = KernelSpec::fractional(0.75, 0.0, 0.0);
        let i = series_function_i(&k, &unit(), 1.0, 1.0, 1e-12).unwrap();
        let direct: f64 = (1..100)
            .map(|n| gamma(0.75).unwrap().powi(n) / gamma(0.75 * n as f64 + 1.0).unwrap())
            .sum();
        assert!((i.sum.to_f64() - direct).abs() < 1e-10);
        let kb = KernelSpec::fractional(0.75, 0.2, 0.0);
        let ib = series_function_i(&kb, &unit(), 1.0, 1.0, 1e-8).unwrap();
        assert!(ib.converged);
        assert!(ib.sum.to_f64() > 0.0 && ib.upper().to_f64() < f64::INFINITY);
        // numerical engine on the same kernel
        let sp = MeasureSpace::lebesgue(0.0, 1.0).unwrap();
        let wrapped = KernelSpec::Sum { parts: vec![kb.clone()] };
        let nb = weighted_series(&wrapped, &sp, 1.0, 1.0, &|_| 1.0, 1e-6).unwrap();
        assert!((nb.sum.to_f64() - ib.sum.to_f64()).abs() < 1e-4 * ib.sum.to_f64(), "{nb:?} vs {ib:?}");
    }

    #[test]
    fn sum_components() {
        let (c1, c2) = (0.7, 1.9);
        let parts = [KernelSpec::constant(c1), KernelSpec::constant(c2)];
        let comps = sum_decomposition(&parts, &unit(), 2, 0.9, 0.2, 3, DEFAULT_COMPONENT_BUDGET).unwrap();
        let cs = [c1, c2];
        for (j, v) in &comps {
            let exact = cs[j[0]] * cs[j[1]] * 0.7;
            assert!((v - exact).abs() < 1e-12);
        }
        let total: f64 = comps.values().sum();
        assert!((total - (c1 + c2).powi(2) * 0.7).abs() < 1e-12);
        let err = sum_decomposition(&parts, &unit(), 13, 0.9, 0.2, 3, DEFAULT_COMPONENT_BUDGET).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { needed: 8192, budget: 4096 }));
    }

    #[test]
    fn product_kernel_factorizes() {
        let unit_iv = crate::domain::Interval1D::new(0.0, 1.0).unwrap();
        let space = MeasureSpace::new(
            DomainSpec::product_box(vec![unit_iv, unit_iv]).unwrap(),
            MeasureSpec::Lebesgue,
        )
        .unwrap();
        let k = KernelSpec::Product { factors: vec![KernelSpec::constant(1.2), KernelSpec::constant(0.8)], tail_factor: None };
        let axes = product_axes(&k, &space).unwrap();
        let (t, s) = ([0.9, 0.7], [0.1, 0.2]);
        for n in 1..=3 {
            let prod = product_bound(&axes, 1.0, n, &t, &s, 3).unwrap().to_f64();
            let boxed = box_iterated_kernel(&k, &space, 1.0, n, &t, &s, 4).unwrap();
            assert!((prod - boxed).abs() < 1e-12 * prod, "n = {n}: {prod} vs {boxed}");
        }
    }

    #[test]
    fn semigroup_on_a_multiplicative_kernel() {
        let k = KernelSpec::Multiplicative { nu: NuSpec::Scaled { c: 0.5 } };
        let lhs = iterated_kernel_value(&k, &unit(), 1.0, 3, 0.9, 0.1, 4).unwrap().to_f64();
        let rhs = semigroup_composition(&k, &unit(), 1.0, 1, 2, 0.9, 0.1, 3).unwrap();
        let exact = (0.5f64 * 0.8).exp() * 0.8f64.powi(2) / 2.0;
        assert!((lhs - exact).abs() < 1e-12 && (rhs - exact).abs() < 1e-10, "{lhs} {rhs} {exact}");
    }
}

//! Quadrature over intervals, boxes and atoms.
//!
//! Continuous integrals use composite Gauss-Legendre rules on panels that are
//! graded geometrically toward both endpoints, so that integrable endpoint
//! singularities (`s^{-1/2}` and friends) converge without special casing.
//! Nodes are interior to every panel, hence integrands are never evaluated at
//! an endpoint. Accuracy is estimated by comparing two consecutive levels.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::domain::{DomainSpec, Interval1D, MeasureSpace, MeasureSpec, Region};
use crate::error::{invalid, Result};
use crate::extreal::ExtReal;

/// Points per Gauss-Legendre panel.
pub const PANEL_POINTS: usize = 10;
/// Points per geometrically graded panel.
const GRADED_POINTS: usize = 16;
/// Geometric grading ratio toward singular endpoints.
const GRADING: f64 = 0.25;
const OVERFLOW: f64 = 1e300;
const MAX_LEVEL_1D: u32 = 7;

/// Nodes and weights of a quadrature rule on the real line.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn apply(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    pub(crate) fn push_panel(&mut self, a: f64, b: f64, base: &Rule) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (x, w) in base.nodes.iter().zip(&base.weights) {
            self.nodes.push(mid + half * x);
            self.weights.push(half * w);
        }
    }
}

/// The `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> &'static Rule {
    static CACHE: OnceLock<Vec<Rule>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| (0..=64).map(compute_gauss_legendre).collect());
    assert!((1..=64).contains(&n), "Gauss-Legendre order must be in 1..=64");
    &cache[n]
}

fn compute_gauss_legendre(n: usize) -> Rule {
    let mut rule = Rule { nodes: vec![0.0; n], weights: vec![0.0; n] };
    if n == 0 {
        return rule;
    }
    let nf = n as f64;
    for i in 0..(n + 1) / 2 {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(x) and P_n'(x)
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = nf * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.weights[i] = w;
        rule.nodes[n - 1 - i] = x;
        rule.weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        rule.nodes[n / 2] = 0.0;
    }
    rule
}

/// Composite rule with `2^level` uniform panels.
pub fn uniform_rule(a: f64, b: f64, level: u32, points: usize) -> Rule {
    let base = gauss_legendre(points);
    let panels = 1usize << level;
    let h = (b - a) / panels as f64;
    let mut r = Rule::default();
    for k in 0..panels {
        r.push_panel(a + k as f64 * h, a + (k + 1) as f64 * h, base);
    }
    r
}

/// Composite rule on `[a, b]`, geometrically graded toward the flagged ends.
pub fn graded_rule(a: f64, b: f64, level: u32, left: bool, right: bool) -> Rule {
    let base = gauss_legendre(PANEL_POINTS);
    let graded_base = gauss_legendre(GRADED_POINTS);
    let mut r = Rule::default();
    if !(b > a) {
        return r;
    }
    let layers = 8 * level as usize + 4;
    let bulk = 1usize << level.saturating_sub(1);
    let push_half = |r: &mut Rule, from: f64, to: f64, graded: bool| {
        // `from` is the endpoint we grade toward; `to` the interior end.
        let h = to - from;
        let mut breaks = Vec::with_capacity(layers + bulk + 1);
        breaks.push(0.0);
        if graded {
            for k in (1..=layers).rev() {
                breaks.push(GRADING.powi(k as i32));
            }
        }
        let start = *breaks.last().unwrap();
        for k in 1..=bulk {
            breaks.push(start + (1.0 - start) * k as f64 / bulk as f64);
        }
        let n_graded = if graded { layers } else { 0 };
        for (k, w) in breaks.windows(2).enumerate() {
            let (x0, x1) = (from + h * w[0], from + h * w[1]);
            let rule = if k < n_graded { graded_base } else { base };
            if h > 0.0 {
                r.push_panel(x0, x1, rule);
            } else {
                r.push_panel(x1, x0, rule);
            }
        }
    };
    let mid = 0.5 * (a + b);
    push_half(&mut r, a, mid, left);
    push_half(&mut r, b, mid, right);
    r
}

/// `∫_a^b f` on the mesh of [`graded_rule`].
///
/// Layers closer to a graded end than floating point resolves are not
/// evaluated; their sum is extrapolated from the geometric decay of the last
/// two layers, which is exact for `f ~ |x - end|^θ`.
pub fn graded_integral(a: f64, b: f64, level: u32, left: bool, right: bool, f: &dyn Fn(f64) -> f64) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    let mid = 0.5 * (a + b);
    graded_half(a, mid, level, left, f) + graded_half(b, mid, level, right, f)
}

fn graded_half(from: f64, to: f64, level: u32, graded: bool, f: &dyn Fn(f64) -> f64) -> f64 {
    let h = to - from;
    let base = gauss_legendre(PANEL_POINTS);
    let graded_base = gauss_legendre(GRADED_POINTS);
    let panel = |x0: f64, x1: f64, rule: &Rule| -> f64 {
        let (c, r) = (from + h * 0.5 * (x0 + x1), 0.5 * h * (x1 - x0));
        rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * f(c + r * x)).sum::<f64>() * r.abs()
    };
    let bulk = 1usize << level.saturating_sub(1);
    let start = if graded { GRADING } else { 0.0 };
    let mut acc = 0.0;
    for k in 0..bulk {
        let x0 = start + (1.0 - start) * k as f64 / bulk as f64;
        let x1 = start + (1.0 - start) * (k + 1) as f64 / bulk as f64;
        acc += panel(x0, x1, base);
    }
    if !graded {
        return acc;
    }
    // below this distance node positions carry too few significant digits
    let floor = 1e7 * f64::EPSILON * from.abs();
    let (mut prev, mut last) = (f64::NAN, f64::NAN);
    let mut hi = GRADING;
    for _ in 0..8 * level as usize + 4 {
        let lo = hi * GRADING;
        if (h * lo).abs() < floor {
            break;
        }
        let layer = panel(lo, hi, graded_base);
        acc += layer;
        prev = last;
        last = layer;
        hi = lo;
    }
    let r = last / prev;
    if r > 0.0 && r < 1.0 {
        acc += last * r / (1.0 - r);
    }
    acc
}

/// Rule for `∫_0^1 λ^{γ-1} (1-λ)^{δ-1} f(λ) dλ`: the weights absorb both
/// endpoint factors via `λ = u^{1/γ}` on `[0, 1/2]` and the mirrored
/// substitution on `[1/2, 1]`, followed by a graded composite rule in `u`.
pub fn singular_rule(gamma: f64, delta: f64, level: u32) -> Result<Rule> {
    if !(gamma > 0.0 && delta > 0.0) {
        return Err(invalid(format!(
            "singular weights need positive exponents, got gamma = {gamma}, delta = {delta}"
        )));
    }
    let mut r = Rule::default();
    // left half: λ = u^{1/γ}, λ^{γ-1} dλ = du / γ
    let umax = 0.5f64.powf(gamma);
    let left = graded_rule(0.0, umax, level, true, false);
    for (u, w) in left.nodes.iter().zip(&left.weights) {
        let lam = u.powf(1.0 / gamma);
        r.nodes.push(lam);
        r.weights.push(w / gamma * (1.0 - lam).powf(delta - 1.0));
    }
    // right half: 1 - λ = v^{1/δ}
    let vmax = 0.5f64.powf(delta);
    let right = graded_rule(0.0, vmax, level, true, false);
    for (v, w) in right.nodes.iter().zip(&right.weights) {
        let mu = v.powf(1.0 / delta);
        let lam = 1.0 - mu;
        r.nodes.push(lam);
        r.weights.push(w / delta * lam.powf(gamma - 1.0));
    }
    Ok(r)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Accuracy {
    Converged,
    /// Refinement did not bring the two-level difference below tolerance.
    UnknownAccuracy,
    /// The integrand was infinite on a set of positive measure, or the
    /// partial sums overflowed.
    Divergent,
}

/// Result of a quadrature: value, two-level error estimate and status.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integral {
    pub value: ExtReal,
    pub err_est: f64,
    pub status: Accuracy,
    pub level: u32,
}

impl Integral {
    pub fn exact(value: f64) -> Self {
        Integral { value: ExtReal::saturating(value), err_est: 0.0, status: Accuracy::Converged, level: 0 }
    }

    pub fn divergent() -> Self {
        Integral { value: ExtReal::Infinity, err_est: f64::INFINITY, status: Accuracy::Divergent, level: 0 }
    }

    pub fn is_converged(&self) -> bool {
        self.status == Accuracy::Converged
    }
}

/// How the nodes of a tabulation grid were generated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridScheme {
    /// `2^level` uniform cells, endpoints included.
    Uniform,
    /// The atoms of a discrete measure.
    Atoms,
    /// Nodes of a composite Gauss-Legendre rule (open, endpoints excluded).
    GaussNodes,
}

/// Sorted tabulation nodes on one axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureGrid {
    pub nodes: Vec<f64>,
    pub level: u32,
    pub scheme: GridScheme,
}

impl QuadratureGrid {
    pub fn uniform(a: f64, b: f64, level: u32) -> Result<Self> {
        Interval1D::new(a, b)?;
        let n = 1usize << level;
        let nodes = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
        Ok(QuadratureGrid { nodes, level, scheme: GridScheme::Uniform })
    }

    pub fn from_atoms(points: impl IntoIterator<Item = f64>) -> Result<Self> {
        let mut nodes: Vec<f64> = points.into_iter().collect();
        nodes.sort_by(f64::total_cmp);
        if nodes.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("atom locations must be distinct"));
        }
        Ok(QuadratureGrid { nodes, level: 0, scheme: GridScheme::Atoms })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Per-axis rule restricted to `[a, b]` (or everything if `range` is `None`).
fn axis_rule(measure: &MeasureSpec, range: Option<(f64, f64)>, level: u32) -> Result<Rule> {
    match measure {
        MeasureSpec::Lebesgue | MeasureSpec::WeightedLebesgue { .. } => {
            let (a, b) = range.ok_or_else(|| invalid("continuous measure without a range"))?;
            let mut r = graded_rule(a, b, level, true, true);
            if let MeasureSpec::WeightedLebesgue { weight } = measure {
                for (x, w) in r.nodes.iter().zip(r.weights.iter_mut()) {
                    *w *= weight.eval(*x).to_f64();
                }
            }
            Ok(r)
        }
        MeasureSpec::Discrete { atoms } => {
            let mut r = Rule::default();
            for a in atoms {
                let x = a.point[0];
                if range.map_or(true, |(lo, hi)| lo <= x && x <= hi) {
                    r.nodes.push(x);
                    r.weights.push(a.mass);
                }
            }
            Ok(r)
        }
        MeasureSpec::Product { .. } => Err(invalid("nested product measures are not supported")),
    }
}

fn is_continuous(m: &MeasureSpec) -> bool {
    matches!(m, MeasureSpec::Lebesgue | MeasureSpec::WeightedLebesgue { .. })
}

/// Tensor-product sum of `f` against per-axis rules. Returns `None` on an
/// infinite contribution.
fn tensor_sum(rules: &[Rule], f: &dyn Fn(&[f64]) -> ExtReal) -> Option<f64> {
    if rules.iter().any(Rule::is_empty) {
        return Some(0.0);
    }
    let d = rules.len();
    let mut idx = vec![0usize; d];
    let mut point: Vec<f64> = rules.iter().map(|r| r.nodes[0]).collect();
    let mut acc = 0.0;
    loop {
        let w: f64 = rules.iter().zip(&idx).map(|(r, &i)| r.weights[i]).product();
        if w != 0.0 {
            match f(&point) {
                ExtReal::Finite(v) => acc += w * v,
                ExtReal::Infinity => return None,
            }
        }
        // odometer increment
        let mut k = d;
        loop {
            if k == 0 {
                return Some(acc);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < rules[k].len() {
                point[k] = rules[k].nodes[idx[k]];
                break;
            }
            idx[k] = 0;
            point[k] = rules[k].nodes[0];
        }
    }
}

/// One evaluation of `∫_region f dμ` at a fixed refinement level.
pub fn integrate_at_level(
    f: &dyn Fn(&[f64]) -> ExtReal,
    region: &Region,
    space: &MeasureSpace,
    level: u32,
) -> Result<ExtReal> {
    if let (Region::Segment(a, b), true) = (region, is_continuous(&space.measure)) {
        let weight = match &space.measure {
            MeasureSpec::WeightedLebesgue { weight } => Some(weight),
            _ => None,
        };
        let infinite = std::cell::Cell::new(false);
        let g = |x: f64| match f(&[x]) {
            ExtReal::Finite(v) => weight.map_or(v, |w| if v == 0.0 { 0.0 } else { v * w.call(x) }),
            ExtReal::Infinity => {
                infinite.set(true);
                0.0
            }
        };
        let v = graded_integral(*a, *b, level, true, true, &g);
        return Ok(if infinite.get() || !(v.abs() < OVERFLOW) { ExtReal::Infinity } else { ExtReal::saturating(v) });
    }
    let rules = region_rules(region, space, level)?;
    Ok(match rules {
        Rules::Tensor(rules) => match tensor_sum(&rules, f) {
            Some(v) if v.abs() < OVERFLOW => ExtReal::saturating(v),
            _ => ExtReal::Infinity,
        },
        Rules::Atoms(atoms) => {
            let mut acc = ExtReal::ZERO;
            for (p, m) in atoms {
                acc += ExtReal::saturating(m) * f(&p);
            }
            acc
        }
    })
}

enum Rules {
    Tensor(Vec<Rule>),
    Atoms(Vec<(Vec<f64>, f64)>),
}

fn region_rules(region: &Region, space: &MeasureSpace, level: u32) -> Result<Rules> {
    Ok(match (region, &space.domain) {
        (Region::Segment(a, b), _) => Rules::Tensor(vec![axis_rule(&space.measure, Some((*a, *b)), level)?]),
        (Region::Cells(cells), DomainSpec::ProductBox { .. }) => {
            let factors = space.box_factors().ok_or_else(|| invalid("box without product measure"))?;
            let mut rules = Vec::with_capacity(factors.len());
            for (i, m) in factors.iter().enumerate() {
                let range = cells.get(i).copied();
                // tensor products of graded rules are too large; box axes use plain panels
                rules.push(match (m, range) {
                    (MeasureSpec::Lebesgue, Some((a, b))) => uniform_rule(a, b, level, PANEL_POINTS),
                    _ => axis_rule(m, range, level)?,
                });
            }
            Rules::Tensor(rules)
        }
        (Region::Cells(_), _) => return Err(invalid("cell region on a non-box domain")),
        (Region::Whole, _) => match &space.measure {
            MeasureSpec::Discrete { atoms } => {
                Rules::Atoms(atoms.iter().map(|a| (a.point.clone(), a.mass)).collect())
            }
            m => {
                let iv = space
                    .domain
                    .support_interval()
                    .ok_or_else(|| invalid("continuous measure without support"))?;
                Rules::Tensor(vec![axis_rule(m, Some((iv.lo, iv.hi)), level)?])
            }
        },
    })
}

fn continuous_dims(region: &Region, space: &MeasureSpace) -> usize {
    match (region, &space.measure) {
        (_, MeasureSpec::Product { factors }) => factors.iter().filter(|m| is_continuous(m)).count(),
        (Region::Cells(c), m) if is_continuous(m) => c.len(),
        (_, m) if is_continuous(m) => 1,
        _ => 0,
    }
}

/// `∫_region f dμ` with a two-level error estimate.
///
/// Refinement stops once `|I_{L+1} - I_L| <= tol * max(1, I_{L+1})`. If the
/// difference stops shrinking, or the level budget runs out first, the
/// result is flagged [`Accuracy::UnknownAccuracy`].
pub fn integrate(
    f: &dyn Fn(&[f64]) -> ExtReal,
    region: &Region,
    space: &MeasureSpace,
    tol: f64,
) -> Result<Integral> {
    if !(tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    let dims = continuous_dims(region, space);
    if dims == 0 {
        let v = integrate_at_level(f, region, space, 0)?;
        return Ok(Integral {
            value: v,
            err_est: if v.is_finite() { 0.0 } else { f64::INFINITY },
            status: if v.is_finite() { Accuracy::Converged } else { Accuracy::Divergent },
            level: 0,
        });
    }
    let max_level = match dims {
        1 => MAX_LEVEL_1D,
        2 => 4,
        _ => 2,
    };
    let mut prev = integrate_at_level(f, region, space, 1)?;
    let mut prev_err = f64::INFINITY;
    let mut stalled = 0;
    for level in 2..=max_level {
        let cur = integrate_at_level(f, region, space, level)?;
        let (ExtReal::Finite(a), ExtReal::Finite(b)) = (prev, cur) else {
            return Ok(Integral { level, ..Integral::divergent() });
        };
        let err = (b - a).abs();
        if err <= tol * b.abs().max(1.0) {
            return Ok(Integral { value: cur, err_est: err, status: Accuracy::Converged, level });
        }
        stalled = if err >= prev_err { stalled + 1 } else { 0 };
        if stalled >= 2 {
            return Ok(Integral { value: cur, err_est: err, status: Accuracy::UnknownAccuracy, level });
        }
        prev = cur;
        prev_err = err;
    }
    Ok(Integral { value: prev, err_est: prev_err, status: Accuracy::UnknownAccuracy, level: max_level })
}

/// `∫_a^b f(x) μ(dx)` for a measure on a 1-D space.
pub fn integrate_1d(
    f: impl Fn(f64) -> ExtReal,
    a: f64,
    b: f64,
    space: &MeasureSpace,
    tol: f64,
) -> Result<Integral> {
    integrate(&|x: &[f64]| f(x[0]), &Region::Segment(a, b), space, tol)
}

/// `∫_0^1 λ^{γ-1} (1-λ)^{δ-1} f(λ) dλ` for `f` continuous on `[0, 1]`.
pub fn integrate_singular(
    f_regular: impl Fn(f64) -> f64,
    gamma: f64,
    delta: f64,
    tol: f64,
) -> Result<Integral> {
    if !(tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    let mut prev = singular_rule(gamma, delta, 1)?.apply(&f_regular);
    let mut prev_err = f64::INFINITY;
    for level in 2..=MAX_LEVEL_1D {
        let cur = singular_rule(gamma, delta, level)?.apply(&f_regular);
        if !cur.is_finite() {
            return Ok(Integral { level, ..Integral::divergent() });
        }
        let err = (cur - prev).abs();
        if err <= tol * cur.abs().max(1.0) {
            return Ok(Integral { value: ExtReal::saturating(cur), err_est: err, status: Accuracy::Converged, level });
        }
        if err >= prev_err && level > 3 {
            return Ok(Integral {
                value: ExtReal::saturating(cur),
                err_est: err,
                status: Accuracy::UnknownAccuracy,
                level,
            });
        }
        prev = cur;
        prev_err = err;
    }
    Ok(Integral {
        value: ExtReal::saturating(prev),
        err_est: prev_err,
        status: Accuracy::UnknownAccuracy,
        level: MAX_LEVEL_1D,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Interval1D;
    use crate::specfun::beta;
    use proptest::prelude::*;

    fn unit() -> MeasureSpace {
        MeasureSpace::lebesgue(0.0, 1.0).unwrap()
    }

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let r = gauss_legendre(5);
        // degree 9 is integrated exactly by 5 points
        let v = r.apply(|x| x.powi(8));
        assert!((v - 2.0 / 9.0).abs() < 1e-15);
        assert!((r.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        for n in [1, 2, 7, 10, 20, 33] {
            let r = gauss_legendre(n);
            assert!(r.nodes.windows(2).all(|w| w[0] < w[1]), "n = {n}");
        }
    }

    #[test]
    fn simple_integrals() {
        let one = integrate_1d(|_| ExtReal::ONE, 0.0, 1.0, &unit(), 1e-12).unwrap();
        assert!((one.value.to_f64() - 1.0).abs() < 1e-13);
        let lin = integrate_1d(ExtReal::from, 0.0, 1.0, &unit(), 1e-12).unwrap();
        assert!((lin.value.to_f64() - 0.5).abs() < 1e-13);
        assert!(lin.is_converged());
    }

    #[test]
    fn endpoint_singular_integrand() {
        // antiderivative 2 sqrt(s)
        let r = integrate_1d(|s| ExtReal::from(s.powf(-0.5)), 0.0, 1.0, &unit(), 1e-10).unwrap();
        assert!(r.is_converged());
        assert!((r.value.to_f64() - 2.0).abs() < 1e-9, "{:?}", r);
        assert!(r.err_est < 1e-8);
    }

    #[test]
    fn non_integrable_integrand_is_not_certified() {
        let r = integrate_1d(|s| ExtReal::from(1.0 / s), 0.0, 1.0, &unit(), 1e-10).unwrap();
        assert_ne!(r.status, Accuracy::Converged);
        let inf = integrate_1d(|_| ExtReal::Infinity, 0.0, 1.0, &unit(), 1e-10).unwrap();
        assert_eq!(inf.status, Accuracy::Divergent);
        assert_eq!(inf.value, ExtReal::Infinity);
    }

    #[test]
    fn discrete_measures_sum_atoms_in_range() {
        let space = MeasureSpace::new(
            DomainSpec::interval(0.0, 1.0).unwrap(),
            MeasureSpec::discrete([(0.0, 1.0), (0.5, 2.0), (1.0, 4.0)]),
        )
        .unwrap();
        let r = integrate_1d(|_| ExtReal::ONE, 0.0, 0.5, &space, 1e-12).unwrap();
        assert_eq!(r.value, ExtReal::Finite(3.0));
        assert_eq!(r.err_est, 0.0);
        let zero_inf = integrate_1d(|_| ExtReal::Infinity, 0.1, 0.4, &space, 1e-12).unwrap();
        assert_eq!(zero_inf.value, ExtReal::ZERO);
    }

    #[test]
    fn weighted_lebesgue() {
        let space = MeasureSpace::new(
            DomainSpec::interval(0.0, 2.0).unwrap(),
            MeasureSpec::WeightedLebesgue { weight: crate::function::ScalarFn::Poly(vec![0.0, 3.0]) },
        )
        .unwrap();
        let r = integrate_1d(|_| ExtReal::ONE, 0.0, 2.0, &space, 1e-12).unwrap();
        assert!((r.value.to_f64() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn singular_weights_reproduce_beta_function() {
        let b = integrate_singular(|_| 1.0, 0.3, 0.7, 1e-12).unwrap();
        assert!((b.value.to_f64() - beta(0.3, 0.7).unwrap()).abs() < 1e-10);
        let one = integrate_singular(|_| 1.0, 1.0, 1.0, 1e-12).unwrap();
        assert!((one.value.to_f64() - 1.0).abs() < 1e-13);
        // ∫ λ · λ^{-1/2} (1-λ)^{-1/2} = B(1.5, 0.5)
        let b2 = integrate_singular(|x| x, 0.5, 0.5, 1e-12).unwrap();
        assert!((b2.value.to_f64() - beta(1.5, 0.5).unwrap()).abs() < 1e-11);
        assert!(integrate_singular(|_| 1.0, 0.0, 1.0, 1e-8).is_err());
        assert!(integrate_singular(|_| 1.0, 1.0, -0.5, 1e-8).is_err());
    }

    #[test]
    fn box_integral_matches_iterated_integrals() {
        let unit_iv = Interval1D::new(0.0, 1.0).unwrap();
        let space = MeasureSpace::new(
            DomainSpec::product_box(vec![unit_iv, Interval1D::new(0.0, 2.0).unwrap()]).unwrap(),
            MeasureSpec::Lebesgue,
        )
        .unwrap();
        let f = |x: &[f64]| ExtReal::from(x[0] * x[0] * (1.0 + x[1]));
        let r = integrate(&f, &Region::Cells(vec![(0.0, 1.0), (0.0, 2.0)]), &space, 1e-10).unwrap();
        // (1/3) * (2 + 2)
        assert!((r.value.to_f64() - 4.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn void_discrete_integral_sums_everything() {
        let space = MeasureSpace::void_atoms([(1.0, 0.25), (7.0, 0.5)]).unwrap();
        let r = integrate(&|x: &[f64]| ExtReal::from(x[0]), &Region::Whole, &space, 1e-12).unwrap();
        assert_eq!(r.value, ExtReal::Finite(0.25 + 3.5));
    }

    #[test]
    fn grid_helpers() {
        let g = QuadratureGrid::uniform(0.0, 1.0, 3).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g.nodes[8], 1.0);
        assert!(QuadratureGrid::from_atoms([0.5, 0.5]).is_err());
    }

    fn smooth(c: f64) -> impl Fn(f64) -> f64 {
        move |x: f64| (c * x).exp() + x * x
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn integration_is_monotone(c in -2.0f64..2.0, bump in 0.0f64..1.0) {
            let space = unit();
            let f = smooth(c);
            let lo = integrate_1d(|x| ExtReal::from(f(x)), 0.0, 1.0, &space, 1e-10).unwrap();
            let hi = integrate_1d(|x| ExtReal::from(f(x) + bump * x), 0.0, 1.0, &space, 1e-10).unwrap();
            prop_assert!(lo.value.to_f64() <= hi.value.to_f64() + lo.err_est + hi.err_est + 1e-14);
        }

        #[test]
        fn integration_is_additive(c in -2.0f64..2.0, b in 0.05f64..0.95) {
            let space = unit();
            let f = smooth(c);
            let g = |x: f64| ExtReal::from(f(x));
            let whole = integrate_1d(g, 0.0, 1.0, &space, 1e-10).unwrap();
            let left = integrate_1d(g, 0.0, b, &space, 1e-10).unwrap();
            let right = integrate_1d(g, b, 1.0, &space, 1e-10).unwrap();
            let gap = (whole.value.to_f64() - left.value.to_f64() - right.value.to_f64()).abs();
            prop_assert!(gap <= 2.0 * (whole.err_est + left.err_est + right.err_est) + 1e-13);
        }

        #[test]
        fn refinement_does_not_increase_error(c in -3.0f64..3.0, level in 1u32..5) {
            let space = unit();
            let f = smooth(c);
            let g = |x: &[f64]| ExtReal::from(f(x[0]));
            let region = Region::Segment(0.0, 1.0);
            let at = |l| integrate_at_level(&g, &region, &space, l).unwrap().to_f64();
            let e1 = (at(level + 1) - at(level)).abs();
            let e2 = (at(level + 2) - at(level + 1)).abs();
            prop_assert!(e2 <= e1 + 1e-14);
        }

        #[test]
        fn box_matches_iterated(a in 0.1f64..2.0, b in 0.1f64..2.0) {
            let iv = Interval1D::new(0.0, 1.0).unwrap();
            let space = MeasureSpace::new(
                DomainSpec::product_box(vec![iv, iv]).unwrap(),
                MeasureSpec::Lebesgue,
            ).unwrap();
            let f = |x: &[f64]| ExtReal::from((a * x[0]).exp() * (1.0 + b * x[1] * x[1]));
            let region = Region::Cells(vec![(0.0, 1.0), (0.0, 1.0)]);
            let two_d = integrate(&f, &region, &space, 1e-10).unwrap();
            let inner = |x: f64| (a * x).exp();
            let one = unit();
            let i1 = integrate_1d(|x| ExtReal::from(inner(x)), 0.0, 1.0, &one, 1e-12).unwrap();
            let i2 = integrate_1d(|y| ExtReal::from(1.0 + b * y * y), 0.0, 1.0, &one, 1e-12).unwrap();
            let iterated = i1.value.to_f64() * i2.value.to_f64();
            prop_assert!((two_d.value.to_f64() - iterated).abs() < 1e-9 * iterated.max(1.0));
        }
    }
}

//! Picard iteration with certified error bounds.
//!
//! An operator `Ψ` on grid functions is assumed to satisfy
//! `d_t(Ψx, Ψy)^p <= ∫_{I(t)} λ(t,s)^p Λ(s,x,y)^p μ(ds)` with `Λ <= d_s`.
//! Then `d_t(x_n, x̂) <= B_n(t) = Σ_{i>=n} (∫ R_{λ^p,μ,i}(t,s) w0(s)^p μ(ds))^{1/p}`
//! with `w0(s) = d_s(x_0, Ψx_0)` and the convention `R_0 w = w`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::{DomainSpec, MeasureSpace, MeasureSpec};
use crate::error::{invalid, Error, Result};
use crate::extreal::ExtReal;
use crate::function::ScalarFn;
use crate::kernels::KernelSpec;
use crate::resolvent::{integral_over, ln_fact, ratio_tail, series_function_i, weighted_terms};
use crate::specfun::{gamma, mittag_leffler, MLParams};

pub type GridOperator = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

const CERT_TOL: f64 = 1e-15;

/// An evolution operator on functions sampled at `grid`.
#[derive(Clone)]
pub struct EvolutionOperatorSpec {
    pub apply: GridOperator,
    /// Increasing sample points; on a void order, the points of the set.
    pub grid: Vec<f64>,
    pub lambda_kernel: KernelSpec,
    pub space: MeasureSpace,
    pub p: f64,
    /// Optional tighter `Λ(s, x_0, Ψx_0)`; defaults to `d_s(x_0, Ψx_0)`.
    pub lambda_profile: Option<Profile>,
}

impl fmt::Debug for EvolutionOperatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EvolutionOperatorSpec")
            .field("grid_len", &self.grid.len())
            .field("lambda_kernel", &self.lambda_kernel)
            .field("space", &self.space)
            .field("p", &self.p)
            .finish_non_exhaustive()
    }
}

impl EvolutionOperatorSpec {
    fn void(&self) -> bool {
        matches!(self.space.domain, DomainSpec::VoidSet { .. })
    }

    /// `d_t(x, y) = max_{s_i <= t} |x_i - y_i|`; all points on a void order.
    pub fn distance(&self, x: &[f64], y: &[f64], t: f64) -> f64 {
        let void = self.void();
        self.grid
            .iter()
            .zip(x.iter().zip(y))
            .filter(|(s, _)| void || **s <= t)
            .map(|(_, (a, b))| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn validate(&self) -> Result<()> {
        if !(self.p >= 1.0) {
            return Err(invalid("p must be at least 1"));
        }
        if self.grid.is_empty() || self.grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("grid must be nonempty and strictly increasing"));
        }
        self.lambda_kernel.validate(Some(self.p))
    }
}

/// `λ_0(t) = (∫_{I(t)} λ(t,s)^p μ(ds))^{1/p}`.
pub fn lipschitz_profile(lambda: &KernelSpec, space: &MeasureSpace, p: f64, t: f64) -> Result<ExtReal> {
    space.validate()?;
    lambda.validate(Some(p))?;
    let lo = match &space.domain {
        DomainSpec::Interval { lo, .. } => *lo,
        DomainSpec::VoidSet { .. } => 0.0,
        DomainSpec::ProductBox { .. } => return Err(Error::Unsupported("box domains".into())),
    };
    let v = integral_over(space, lo, t, &|s| lambda.value1_pow(t, s, p).to_f64());
    Ok(ExtReal::saturating(if v.is_nan() { f64::INFINITY } else { v }).root(p))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Uniqueness {
    Unique,
    Unknown,
}

/// `Unique` when `I_{λ,μ,p}(t)` is certified finite at every sample.
pub fn uniqueness_certificate(lambda: &KernelSpec, space: &MeasureSpace, p: f64, t_samples: &[f64]) -> Result<Uniqueness> {
    for &t in t_samples {
        let i = series_function_i(lambda, space, p, t, 1e-8)?;
        if !(i.converged && i.sum.is_finite() && i.tail_bound.is_finite()) {
            return Ok(Uniqueness::Unknown);
        }
    }
    Ok(if t_samples.is_empty() { Uniqueness::Unknown } else { Uniqueness::Unique })
}

/// Certified bounds `B_n(t)` at the evaluation points.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PicardCertificate {
    pub iterates: usize,
    pub eval_points: Vec<f64>,
    /// `terms[k][i]`: the i-th series term at `eval_points[k]` (`i = 0` is `w0(t)`).
    pub terms: Vec<Vec<f64>>,
    /// Bound on the terms after the recorded ones.
    pub tails: Vec<f64>,
    pub lambda0_profile: Vec<f64>,
    /// `d_t(x_0, Ψx_0)`.
    pub d0: Vec<f64>,
    /// `d_t(x_n, x_{n+1})` for the recorded iterates.
    pub steps: Vec<Vec<f64>>,
    pub p: f64,
    /// Terms and tails come from a recognized majorant.
    pub certified: bool,
    /// Factorial majorant applies (monotone λ on an interval).
    pub regular: bool,
    pub converged: bool,
}

impl PicardCertificate {
    /// `B_n` at `eval_points[k]`.
    pub fn bound(&self, n: usize, k: usize) -> ExtReal {
        let terms = &self.terms[k];
        let rest: f64 = terms.iter().skip(n).sum();
        ExtReal::saturating(rest + self.tails[k])
    }

    fn max_bound(&self, n: usize) -> f64 {
        (0..self.eval_points.len()).map(|k| self.bound(n, k).to_f64()).fold(0.0, f64::max)
    }
}

/// `B_n(t)` and, for regular λ on intervals, the factorial majorant
/// `d_t(x_0, Ψx_0) Σ_{i>=n} (1/i!)^{1/p} λ_0(t)^i`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBound {
    pub table: ExtReal,
    pub majorant: Option<ExtReal>,
}

pub fn error_bound(cert: &PicardCertificate, n: usize, k: usize) -> Result<ErrorBound> {
    if n > cert.iterates {
        return Err(Error::OutOfRange { index: n, recorded: cert.iterates });
    }
    if k >= cert.eval_points.len() {
        return Err(Error::OutOfRange { index: k, recorded: cert.eval_points.len() });
    }
    let majorant = cert.regular.then(|| {
        let (d, l0, p) = (cert.d0[k], cert.lambda0_profile[k], cert.p);
        if d == 0.0 {
            return ExtReal::ZERO;
        }
        if l0 == 0.0 {
            return ExtReal::saturating(if n == 0 { d } else { 0.0 });
        }
        ExtReal::saturating(ratio_tail(|i| d.ln() + i as f64 * l0.ln() - ln_fact(i as f64) / p, n))
    });
    Ok(ErrorBound { table: cert.bound(n, k), majorant })
}

/// Result of [`picard_solve`].
#[derive(Clone, Debug)]
pub struct PicardRun {
    pub x_hat: Vec<f64>,
    /// `x_0, x_1, ..., x_N`.
    pub iterates: Vec<Vec<f64>>,
    pub certificate: PicardCertificate,
}

/// Iterates `x_n = Ψ(x_{n-1})` until `max_t B_n(t) < tol` or `max_iter`.
///
/// Refuses when `B_1` is infinite at an evaluation point. An empty
/// `eval_points` means the last grid point.
pub fn picard_solve(
    op: &EvolutionOperatorSpec,
    x0: &[f64],
    tol: f64,
    max_iter: usize,
    eval_points: &[f64],
) -> Result<PicardRun> {
    op.validate()?;
    if !(tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    if x0.len() != op.grid.len() {
        return Err(invalid(format!("x0 has {} values for {} grid points", x0.len(), op.grid.len())));
    }
    let eval: Vec<f64> = if eval_points.is_empty() { vec![*op.grid.last().unwrap()] } else { eval_points.to_vec() };
    let x1 = (op.apply)(x0);
    if x1.len() != x0.len() {
        return Err(invalid("operator changed the grid size"));
    }
    let w0 = match &op.lambda_profile {
        Some(f) => f.clone(),
        None => running_max_profile(op, x0, &x1),
    };
    let p = op.p;
    let mut terms = Vec::with_capacity(eval.len());
    let mut tails = Vec::with_capacity(eval.len());
    let mut lambda0 = Vec::with_capacity(eval.len());
    let mut d0 = Vec::with_capacity(eval.len());
    let mut certified = true;
    for &t in &eval {
        let wt = weighted_terms(&op.lambda_kernel, &op.space, p, t, &|s| w0(s).powf(p), CERT_TOL)?;
        if wt.series.sum.is_infinite() || wt.terms.first().is_some_and(|v| v.is_infinite()) {
            return Err(Error::CertificateDiverges(format!(
                "the bound B_1({t}) is infinite; the series of the fixed point condition diverges"
            )));
        }
        certified &= wt.series.converged;
        let mut row = vec![w0(t)];
        row.extend(wt.terms.iter().copied());
        terms.push(row);
        let recorded: f64 = wt.terms.iter().sum();
        tails.push((wt.series.upper().to_f64() - recorded).max(wt.series.tail_bound.to_f64()).max(0.0));
        lambda0.push(lipschitz_profile(&op.lambda_kernel, &op.space, p, t)?.to_f64());
        d0.push(op.distance(x0, &x1, t));
    }
    let regular = matches!(op.space.domain, DomainSpec::Interval { .. })
        && op.space.measure.is_atomless()
        && op.lambda_kernel.declares_monotone();
    let mut cert = PicardCertificate {
        iterates: 0,
        eval_points: eval,
        terms,
        tails,
        lambda0_profile: lambda0,
        d0,
        steps: Vec::new(),
        p,
        certified,
        regular,
        converged: false,
    };
    let mut iterates = vec![x0.to_vec(), x1];
    let mut n = 1;
    loop {
        let cur = &iterates[n];
        let prev = &iterates[n - 1];
        cert.steps.push(cert.eval_points.iter().map(|&t| op.distance(prev, cur, t)).collect());
        cert.iterates = n;
        if cert.max_bound(n) < tol {
            cert.converged = cert.certified;
            break;
        }
        if n >= max_iter {
            break;
        }
        let next = (op.apply)(cur);
        iterates.push(next);
        n += 1;
    }
    Ok(PicardRun { x_hat: iterates[n].clone(), iterates, certificate: cert })
}

/// `w0(s) = d_s(x_0, Ψx_0)` interpolated linearly between grid points, which
/// over-approximates the step function of the running maximum.
fn running_max_profile(op: &EvolutionOperatorSpec, x0: &[f64], x1: &[f64]) -> Profile {
    let diffs: Vec<f64> = x0.iter().zip(x1).map(|(a, b)| (a - b).abs()).collect();
    if op.void() {
        let m = diffs.iter().copied().fold(0.0, f64::max);
        return Arc::new(move |_| m);
    }
    let mut run = Vec::with_capacity(diffs.len());
    let mut acc = 0.0f64;
    for d in diffs {
        acc = acc.max(d);
        run.push(acc);
    }
    let grid = op.grid.clone();
    Arc::new(move |s| {
        let j = grid.partition_point(|&g| g <= s);
        if j == 0 {
            run[0]
        } else if j >= grid.len() {
            run[grid.len() - 1]
        } else {
            let (a, b) = (grid[j - 1], grid[j]);
            let th = (s - a) / (b - a);
            run[j - 1] + th * (run[j] - run[j - 1])
        }
    })
}

/// `∫_{x_0}^{x_i} u` for every node of a uniform grid, integrating the cubic
/// through the four nearest nodes on each cell.
pub fn cumulative_integral(grid: &[f64], u: &[f64]) -> Vec<f64> {
    let n = grid.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    for i in 0..n - 1 {
        let h = grid[i + 1] - grid[i];
        let cell = if n < 4 {
            0.5 * h * (u[i] + u[i + 1])
        } else {
            // Simpson-type weights for ∫ over [x_i, x_{i+1}] of the cubic
            // through x_{j..j+4}
            let j = i.saturating_sub(1).min(n - 4);
            let w: [f64; 4] = match i - j {
                0 => [9.0, 19.0, -5.0, 1.0],
                1 => [-1.0, 13.0, 13.0, -1.0],
                _ => [1.0, -5.0, 19.0, 9.0],
            };
            h / 24.0 * (0..4).map(|k| w[k] * u[j + k]).sum::<f64>()
        };
        out[i + 1] = out[i] + cell;
    }
    out
}

/// `∫_{x_0}^{x_i} (x_i - s)^{α-1} u(s) ds` for piecewise linear `u`, with
/// the singular factor integrated exactly.
pub fn abel_integral(grid: &[f64], u: &[f64], alpha: f64) -> Vec<f64> {
    let n = grid.len();
    let mut out = vec![0.0; n];
    for i in 1..n {
        let tau = grid[i];
        let mut acc = 0.0;
        for j in 0..i {
            let (a, b) = (grid[j], grid[j + 1]);
            let h = b - a;
            let (da, db) = (tau - a, tau - b);
            let i0 = (da.powf(alpha) - db.powf(alpha)) / alpha;
            let i1 = (da.powf(alpha + 1.0) - db.powf(alpha + 1.0)) / (alpha + 1.0);
            let lin = (da * i0 - i1) / h;
            acc += u[j] * (i0 - lin) + u[j + 1] * lin;
        }
        out[i] = acc;
    }
    out
}

/// A fixed-point problem with a known reference solution on its grid.
#[derive(Clone, Debug)]
pub struct Problem {
    pub name: String,
    pub op: EvolutionOperatorSpec,
    pub x0: Vec<f64>,
    pub reference: Vec<f64>,
}

fn uniform_grid(level: u32) -> Vec<f64> {
    let n = 1usize << level;
    (0..=n).map(|i| i as f64 / n as f64).collect()
}

/// `Ψ(u)(t) = 1 + λ ∫_0^t u(s) ds` on `[0, 1]`, solved by `e^{λ t}`.
pub fn linear_volterra(lambda: f64, grid_level: u32) -> Result<Problem> {
    if !(lambda >= 0.0) {
        return Err(invalid("lambda must be nonnegative"));
    }
    let grid = uniform_grid(grid_level.max(2));
    let g = grid.clone();
    let apply: GridOperator = Arc::new(move |u: &[f64]| {
        cumulative_integral(&g, u).into_iter().map(|v| 1.0 + lambda * v).collect()
    });
    let reference = grid.iter().map(|t| (lambda * t).exp()).collect();
    Ok(Problem {
        name: "linear_volterra".into(),
        x0: vec![0.0; grid.len()],
        op: EvolutionOperatorSpec {
            apply,
            grid,
            lambda_kernel: KernelSpec::constant(lambda),
            space: MeasureSpace::lebesgue(0.0, 1.0)?,
            p: 1.0,
            lambda_profile: None,
        },
        reference,
    })
}

/// `Ψ(u)(t) = 1 + ∫_0^t (t-s)^{α-1} u(s) ds` on `[0, 1]`, solved by
/// `E_α(Γ(α) t^α)`.
pub fn abel(alpha: f64, grid_level: u32) -> Result<Problem> {
    if !(alpha > 0.0) {
        return Err(invalid("alpha must be positive"));
    }
    let grid = uniform_grid(grid_level.max(2));
    let g = grid.clone();
    let apply: GridOperator =
        Arc::new(move |u: &[f64]| abel_integral(&g, u, alpha).into_iter().map(|v| 1.0 + v).collect());
    let ga = gamma(alpha)?;
    let params = MLParams::new(alpha, 1.0, 1.0)?;
    let reference = grid
        .iter()
        .map(|t| mittag_leffler(params, ga * t.powf(alpha), 1e-15).map(|v| v.sum.to_f64()))
        .collect::<Result<Vec<_>>>()?;
    Ok(Problem {
        name: "abel".into(),
        x0: vec![0.0; grid.len()],
        op: EvolutionOperatorSpec {
            apply,
            grid,
            lambda_kernel: KernelSpec::fractional(alpha, 0.0, 0.0),
            space: MeasureSpace::lebesgue(0.0, 1.0)?,
            p: 1.0,
            lambda_profile: None,
        },
        reference,
    })
}

/// `Ψ(x) = λ_0 x + 1` on a singleton of mass one; fixed point `1/(1-λ_0)`.
pub fn banach_toy(lambda0: f64) -> Result<Problem> {
    if !(0.0..1.0).contains(&lambda0) {
        return Err(invalid("lambda0 must lie in [0, 1)"));
    }
    let apply: GridOperator = Arc::new(move |x: &[f64]| x.iter().map(|v| lambda0 * v + 1.0).collect());
    Ok(Problem {
        name: "banach".into(),
        x0: vec![0.0],
        op: EvolutionOperatorSpec {
            apply,
            grid: vec![0.0],
            lambda_kernel: KernelSpec::void(ScalarFn::Const(lambda0)),
            space: MeasureSpace::new(
                DomainSpec::void("singleton"),
                MeasureSpec::discrete([(0.0, 1.0)]),
            )?,
            p: 1.0,
            lambda_profile: None,
        },
        reference: vec![1.0 / (1.0 - lambda0)],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles() {
        let sp = MeasureSpace::lebesgue(0.0, 1.0).unwrap();
        let l = lipschitz_profile(&KernelSpec::constant(3.0), &sp, 1.0, 0.5).unwrap();
        assert!((l.to_f64() - 1.5).abs() < 1e-14);
        let l = lipschitz_profile(&KernelSpec::fractional(0.75, 0.0, 0.0), &sp, 1.0, 1.0).unwrap();
        assert!((l.to_f64() - 1.0 / 0.75).abs() < 1e-10, "{l:?}");
        let one = MeasureSpace::new(DomainSpec::void("pt"), MeasureSpec::discrete([(0.0, 1.0)])).unwrap();
        let l = lipschitz_profile(&KernelSpec::void(ScalarFn::Const(0.3)), &one, 2.0, 0.0).unwrap();
        assert!((l.to_f64() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn uniqueness() {
        let sp = MeasureSpace::lebesgue(0.0, 1.0).unwrap();
        assert_eq!(uniqueness_certificate(&KernelSpec::constant(2.0), &sp, 1.0, &[0.5, 1.0]).unwrap(), Uniqueness::Unique);
        let one = MeasureSpace::new(DomainSpec::void("pt"), MeasureSpec::discrete([(0.0, 1.0)])).unwrap();
        let k = KernelSpec::void(ScalarFn::Const(1.0));
        assert_eq!(uniqueness_certificate(&k, &one, 1.0, &[0.0]).unwrap(), Uniqueness::Unknown);
        let k = KernelSpec::void(ScalarFn::Const(0.9));
        assert_eq!(uniqueness_certificate(&k, &one, 1.0, &[0.0]).unwrap(), Uniqueness::Unique);
    }

    #[test]
    fn cumulative_integral_is_fourth_order() {
        let grid = uniform_grid(6);
        let u: Vec<f64> = grid.iter().map(|x| x.exp()).collect();
        let c = cumulative_integral(&grid, &u);
        for (x, v) in grid.iter().zip(&c) {
            assert!((v - (x.exp() - 1.0)).abs() < 1e-8);
        }
        let cubic: Vec<f64> = grid.iter().map(|x| x * x * x).collect();
        let c = cumulative_integral(&grid, &cubic);
        assert!((c.last().unwrap() - 0.25).abs() < 1e-14);
    }

    #[test]
    fn abel_weights_are_exact_for_linear_functions() {
        let grid = uniform_grid(4);
        let u: Vec<f64> = grid.iter().map(|x| 2.0 + x).collect();
        let a = 0.6;
        let out = abel_integral(&grid, &u, a);
        // ∫_0^t (t-s)^{a-1}(2+s) ds = 2 t^a/a + t^{a+1}/(a(a+1))
        for (t, v) in grid.iter().zip(&out) {
            let exact = 2.0 * t.powf(a) / a + t.powf(a + 1.0) / (a * (a + 1.0));
            assert!((v - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn linear_volterra_certificate() {
        let pr = linear_volterra(2.0, 8).unwrap();
        let run = picard_solve(&pr.op, &pr.x0, 1e-6, 25, &[]).unwrap();
        let cert = &run.certificate;
        assert!(cert.converged && cert.iterates <= 25);
        for n in 0..=cert.iterates {
            let err = pr.op.distance(&run.iterates[n], &pr.reference, 1.0);
            let b = error_bound(cert, n, 0).unwrap();
            assert!(err <= b.table.to_f64() + 1e-5, "n = {n}: {err} > {:?}", b);
            assert!(b.majorant.unwrap().to_f64() >= b.table.to_f64() - 1e-9);
            if n > 0 {
                assert!(cert.bound(n, 0) <= cert.bound(n - 1, 0));
            }
        }
        assert!(matches!(error_bound(cert, cert.iterates + 1, 0), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn banach_reduction() {
        let pr = banach_toy(0.5).unwrap();
        let run = picard_solve(&pr.op, &pr.x0, 1e-10, 100, &[]).unwrap();
        let cert = &run.certificate;
        assert!(cert.converged);
        let d = 1.0;
        for n in 1..=cert.iterates {
            let exact = d * 0.5f64.powi(n as i32) / 0.5;
            assert!((cert.bound(n, 0).to_f64() - exact).abs() < 1e-12);
        }
        assert!((run.x_hat[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn divergent_certificate_is_refused() {
        let mut pr = banach_toy(0.5).unwrap();
        pr.op.lambda_kernel = KernelSpec::void(ScalarFn::Const(1.0));
        pr.op.apply = Arc::new(|x: &[f64]| x.iter().map(|v| v + 1.0).collect());
        assert!(matches!(picard_solve(&pr.op, &pr.x0, 1e-6, 10, &[]), Err(Error::CertificateDiverges(_))));
    }

    #[test]
    fn abel_problem_converges() {
        let pr = abel(0.75, 7).unwrap();
        let run = picard_solve(&pr.op, &pr.x0, 1e-6, 60, &[1.0]).unwrap();
        assert!(run.certificate.converged);
        let err = pr.op.distance(&run.x_hat, &pr.reference, 1.0);
        assert!(err < 1e-2, "{err}");
    }
}

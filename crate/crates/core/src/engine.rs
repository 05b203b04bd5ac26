//! Discretized Volterra operator `(A r)(x) = ∫_{[a, x]} k(x, σ)^p r(σ) μ(dσ)`
//! and its powers.
//!
//! Three discretizations share one interface:
//! * atoms of a discrete measure (exact sums),
//! * a fixed Gauss-Legendre rule on the support of a continuous measure on a
//!   void-ordered set (Nyström),
//! * on an interval with a continuous measure, node values on Gauss panels
//!   with piecewise polynomial interpolation; every application of `A`
//!   integrates over `[a, x]` with a rule graded toward the ends where the
//!   kernel may be singular.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::domain::{DomainSpec, MeasureSpace, MeasureSpec};
use crate::error::{invalid, Error, Result};
use crate::function::ScalarFn;
use crate::kernels::KernelSpec;
use crate::quadrature::{gauss_legendre, graded_integral, uniform_rule};

/// Interpolation points per panel.
const PANEL_NODES: usize = 8;

fn bary_weights() -> &'static [f64] {
    static W: OnceLock<Vec<f64>> = OnceLock::new();
    W.get_or_init(|| {
        let x = &gauss_legendre(PANEL_NODES).nodes;
        (0..PANEL_NODES)
            .map(|j| 1.0 / (0..PANEL_NODES).filter(|&k| k != j).map(|k| x[j] - x[k]).product::<f64>())
            .collect()
    })
}

/// A function given either pointwise or by its values at the engine nodes.
#[derive(Clone, Copy)]
pub(crate) enum Src<'b> {
    Fn(&'b dyn Fn(f64) -> f64),
    Nodes(&'b [f64]),
}

enum Kind {
    Points { nodes: Vec<f64>, weights: Vec<f64>, ordered: bool },
    Panels { breaks: Vec<f64>, nodes: Vec<f64>, density: Option<ScalarFn>, left: bool, right: bool },
}

pub(crate) struct Engine<'k> {
    kernel: &'k KernelSpec,
    p: f64,
    a: f64,
    level: u32,
    kind: Kind,
}

/// `x · y` with `0 · ∞ = 0`.
#[inline]
fn mul0(x: f64, y: f64) -> f64 {
    if x == 0.0 || y == 0.0 {
        0.0
    } else {
        x * y
    }
}

impl<'k> Engine<'k> {
    /// Engine on `[a, b]` of a 1-D space (the whole set for a void order).
    pub fn new(kernel: &'k KernelSpec, space: &MeasureSpace, p: f64, a: f64, b: f64, level: u32) -> Result<Self> {
        let singular = !kernel.is_regular();
        Self::with_flags(kernel, space, p, a, b, level, singular)
    }

    pub fn with_flags(
        kernel: &'k KernelSpec,
        space: &MeasureSpace,
        p: f64,
        a: f64,
        b: f64,
        level: u32,
        singular: bool,
    ) -> Result<Self> {
        let level = level.max(1);
        let kind = match (&space.domain, &space.measure) {
            (DomainSpec::ProductBox { .. }, _) => {
                return Err(Error::Unsupported("the 1-D engine does not handle box domains".into()))
            }
            (DomainSpec::Interval { .. }, MeasureSpec::Discrete { atoms }) => {
                let mut pts: Vec<(f64, f64)> = atoms
                    .iter()
                    .map(|at| (at.point[0], at.mass))
                    .filter(|(x, _)| *x >= a && *x <= b)
                    .collect();
                pts.sort_by(|u, v| u.0.total_cmp(&v.0));
                let (nodes, weights) = pts.into_iter().unzip();
                Kind::Points { nodes, weights, ordered: true }
            }
            (DomainSpec::VoidSet { .. }, MeasureSpec::Discrete { atoms }) => {
                let (nodes, weights) = atoms.iter().map(|at| (at.point[0], at.mass)).unzip();
                Kind::Points { nodes, weights, ordered: false }
            }
            (DomainSpec::VoidSet { support, .. }, m) => {
                let iv = support.ok_or_else(|| invalid("continuous measure on a void set needs a support"))?;
                let mut rule = uniform_rule(iv.lo, iv.hi, level + 1, 10);
                if let MeasureSpec::WeightedLebesgue { weight } = m {
                    for (x, w) in rule.nodes.iter().zip(rule.weights.iter_mut()) {
                        *w *= weight.call(*x);
                    }
                }
                Kind::Points { nodes: rule.nodes, weights: rule.weights, ordered: false }
            }
            (DomainSpec::Interval { .. }, m) => {
                let density = match m {
                    MeasureSpec::WeightedLebesgue { weight } => Some(weight.clone()),
                    MeasureSpec::Lebesgue => None,
                    _ => return Err(invalid("unsupported measure on an interval")),
                };
                let mut breaks = vec![a];
                if b > a {
                    let panels = 1usize << (level - 1);
                    let h = (b - a) / panels as f64;
                    if singular {
                        let layers = 3 * level as i32 + 4;
                        for j in (1..=layers).rev() {
                            breaks.push(a + h * 0.5f64.powi(j));
                        }
                    }
                    for k in 1..=panels {
                        breaks.push(if k == panels { b } else { a + k as f64 * h });
                    }
                }
                let gl = gauss_legendre(PANEL_NODES);
                let mut nodes = Vec::with_capacity((breaks.len() - 1) * PANEL_NODES);
                for w in breaks.windows(2) {
                    let (mid, half) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
                    nodes.extend(gl.nodes.iter().map(|x| mid + half * x));
                }
                Kind::Panels { breaks, nodes, density, left: singular, right: singular }
            }
        };
        Ok(Engine { kernel, p, a, level, kind })
    }

    pub fn nodes(&self) -> &[f64] {
        match &self.kind {
            Kind::Points { nodes, .. } | Kind::Panels { nodes, .. } => nodes,
        }
    }

    #[inline]
    pub fn kp(&self, x: f64, s: f64) -> f64 {
        self.kernel.value1_pow(x, s, self.p).to_f64()
    }

    fn interp(&self, values: &[f64], x: f64) -> f64 {
        let Kind::Panels { breaks, .. } = &self.kind else { unreachable!() };
        let np = breaks.len() - 1;
        if np == 0 {
            return 0.0;
        }
        let k = breaks.partition_point(|&b| b <= x).saturating_sub(1).min(np - 1);
        let (lo, hi) = (breaks[k], breaks[k + 1]);
        let u = (2.0 * x - lo - hi) / (hi - lo);
        let xs = &gauss_legendre(PANEL_NODES).nodes;
        let ws = bary_weights();
        let vals = &values[k * PANEL_NODES..(k + 1) * PANEL_NODES];
        let (mut num, mut den) = (0.0, 0.0);
        for j in 0..PANEL_NODES {
            let d = u - xs[j];
            if d == 0.0 {
                return vals[j];
            }
            let c = ws[j] / d;
            num += c * vals[j];
            den += c;
        }
        num / den
    }

    /// `(A r)(x)`; `+∞` when the integral is infinite.
    pub fn apply_at(&self, x: f64, src: Src<'_>) -> f64 {
        self.apply_at_with(x, src, &|x, s| self.kp(x, s))
    }

    /// Like [`Engine::apply_at`] with another kernel on the same discretization.
    pub fn apply_at_with(&self, x: f64, src: Src<'_>, kp: &dyn Fn(f64, f64) -> f64) -> f64 {
        let mut acc = 0.0;
        match &self.kind {
            Kind::Points { nodes, weights, ordered } => {
                for (j, (&s, &w)) in nodes.iter().zip(weights).enumerate() {
                    if *ordered && s > x {
                        break;
                    }
                    let r = match src {
                        Src::Fn(f) => f(s),
                        Src::Nodes(v) => v[j],
                    };
                    acc += mul0(w, mul0(kp(x, s), r));
                }
            }
            Kind::Panels { left, right, density, .. } => {
                if x <= self.a {
                    return 0.0;
                }
                let g = |s: f64| {
                    let r = match src {
                        Src::Fn(f) => f(s),
                        Src::Nodes(v) => self.interp(v, s),
                    };
                    let w = density.as_ref().map_or(1.0, |d| d.call(s));
                    mul0(w, mul0(kp(x, s), r))
                };
                acc = graded_integral(self.a, x, self.level, *left, *right, &g);
            }
        }
        if acc.is_nan() {
            f64::INFINITY
        } else {
            acc
        }
    }

    pub fn apply_nodes(&self, src: Src<'_>) -> Vec<f64> {
        self.nodes().iter().map(|&x| self.apply_at(x, src)).collect()
    }

    pub fn is_points(&self) -> bool {
        matches!(self.kind, Kind::Points { .. })
    }

    /// The matrix `M_ij = w_j k(x_i, x_j)^p` of a point discretization.
    fn matrix(&self) -> Option<DMatrix<f64>> {
        let Kind::Points { nodes, weights, ordered } = &self.kind else { return None };
        let n = nodes.len();
        Some(DMatrix::from_fn(n, n, |i, j| {
            if *ordered && nodes[j] > nodes[i] {
                0.0
            } else {
                mul0(weights[j], self.kp(nodes[i], nodes[j]))
            }
        }))
    }

    /// Geometric bound for a point discretization: a positive vector `z` and
    /// `rho` with `M z <= rho z`, plus a lower bound on the spectral radius.
    pub fn geometric_bound(&self) -> Option<GeometricBound> {
        let m = self.matrix()?;
        let n = m.nrows();
        if n == 0 {
            return Some(GeometricBound { z: vec![], rho_upper: 0.0, rho_lower: 0.0 });
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Some(GeometricBound { z: vec![1.0; n], rho_upper: f64::INFINITY, rho_lower: f64::INFINITY });
        }
        let one = DVector::from_element(n, 1.0);
        let mut z = one.clone();
        let mut best: Option<GeometricBound> = None;
        for it in 0..400 {
            let mz = &m * &z;
            let ratios = mz.iter().zip(z.iter()).map(|(a, b)| a / b);
            let (lo, hi) = ratios.fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r), hi.max(r)));
            if best.as_ref().map_or(true, |b| hi < b.rho_upper) {
                let lower = best.as_ref().map_or(lo, |b| b.rho_lower.max(lo));
                best = Some(GeometricBound { z: z.iter().copied().collect(), rho_upper: hi, rho_lower: lower });
            } else if let Some(b) = best.as_mut() {
                b.rho_lower = b.rho_lower.max(lo);
            }
            // a small positive shift keeps z > 0 for reducible matrices
            let eps = 1e-6 * mz.max().max(1e-300);
            let next = mz + &one * eps;
            let scale = next.max();
            if !(scale > 0.0) || it > 0 && (hi - lo) <= 1e-15 * hi {
                break;
            }
            z = next / scale;
        }
        best
    }

    /// Solves `(I - M) u = f` on the nodes; `None` if singular.
    pub fn resolvent_solve(&self, f: &[f64]) -> Option<Vec<f64>> {
        let m = self.matrix()?;
        let n = m.nrows();
        let lhs = DMatrix::<f64>::identity(n, n) - m;
        let rhs = DVector::from_column_slice(f);
        lhs.lu().solve(&rhs).map(|v| v.iter().copied().collect())
    }
}

#[derive(Clone, Debug)]
pub(crate) struct GeometricBound {
    pub z: Vec<f64>,
    pub rho_upper: f64,
    pub rho_lower: f64,
}

/// The sequence `u_0 = first`, `u_n = A u_{n-1}` with node values cached.
pub(crate) struct Powers<'e, 'k> {
    engine: &'e Engine<'k>,
    first: Box<dyn Fn(f64) -> f64 + 'e>,
    /// `layers[n]` holds `u_n` at the nodes.
    layers: Vec<Vec<f64>>,
}

impl<'e, 'k> Powers<'e, 'k> {
    pub fn new(engine: &'e Engine<'k>, first: impl Fn(f64) -> f64 + 'e) -> Self {
        let first: Box<dyn Fn(f64) -> f64 + 'e> = Box::new(first);
        let l0 = engine.nodes().iter().map(|&x| first(x)).collect();
        Powers { engine, first, layers: vec![l0] }
    }

    /// Node values of `u_n`.
    pub fn layer(&mut self, n: usize) -> &[f64] {
        while self.layers.len() <= n {
            let k = self.layers.len();
            let next = if k == 1 {
                self.engine.apply_nodes(Src::Fn(&*self.first))
            } else {
                self.engine.apply_nodes(Src::Nodes(&self.layers[k - 1]))
            };
            self.layers.push(next);
        }
        &self.layers[n]
    }

    /// `u_n(x)`.
    pub fn value(&mut self, n: usize, x: f64) -> f64 {
        match n {
            0 => (self.first)(x),
            1 => self.engine.apply_at(x, Src::Fn(&*self.first)),
            _ => {
                self.layer(n - 1);
                self.engine.apply_at(x, Src::Nodes(&self.layers[n - 1]))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_kernel_powers_are_polynomials() {
        let k = KernelSpec::constant(1.5);
        let space = MeasureSpace::lebesgue(0.0, 1.0).unwrap();
        let e = Engine::new(&k, &space, 1.0, 0.2, 1.0, 3).unwrap();
        let mut pw = Powers::new(&e, |x| e.kp(x, 0.2));
        // u_{n-1} = R_n(x, 0.2) = c^n (x - 0.2)^{n-1} / (n-1)!
        for n in 1..=6usize {
            let x = 0.87;
            let exact = 1.5f64.powi(n as i32) * (x - 0.2f64).powi(n as i32 - 1)
                / (1..n).map(|i| i as f64).product::<f64>();
            let got = pw.value(n - 1, x);
            assert!((got - exact).abs() < 1e-12 * exact, "n = {n}: {got} vs {exact}");
        }
    }

    #[test]
    fn singular_kernel_second_iterate() {
        // R_2 of (t - s)^{-1/2} is Γ(1/2)^2 = π
        let k = KernelSpec::fractional(0.5, 0.0, 0.0);
        let space = MeasureSpace::lebesgue(0.0, 1.0).unwrap();
        let e = Engine::new(&k, &space, 1.0, 0.0, 1.0, 4).unwrap();
        let mut pw = Powers::new(&e, |x| e.kp(x, 0.0));
        let r2 = pw.value(1, 0.9);
        assert!((r2 - std::f64::consts::PI).abs() < 1e-10, "{r2}");
        // R_3 = Γ(1/2)^3 / Γ(3/2) x^{1/2} = 2π x^{1/2}
        let r3 = pw.value(2, 0.9);
        assert!((r3 - 2.0 * std::f64::consts::PI * 0.9f64.sqrt()).abs() < 1e-6 * r3, "{r3}");
    }

    #[test]
    fn discrete_void_geometric_bound() {
        let k = KernelSpec::void(ScalarFn::Const(1.0));
        let space = MeasureSpace::void_atoms((0..10).map(|i| (i as f64, 0.05))).unwrap();
        let e = Engine::new(&k, &space, 1.0, 0.0, 0.0, 1).unwrap();
        let g = e.geometric_bound().unwrap();
        assert!((g.rho_upper - 0.5).abs() < 1e-12 && (g.rho_lower - 0.5).abs() < 1e-12);
        let u = e.resolvent_solve(&vec![1.0; 10]).unwrap();
        assert!(u.iter().all(|v| (v - 2.0).abs() < 1e-12));
    }
}

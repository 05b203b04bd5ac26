use lpgronwall::domain::MeasureSpace;
use lpgronwall::fixpoint::{banach_toy, linear_volterra, picard_solve};
use lpgronwall::function::ScalarFn;
use lpgronwall::gronwall::{gronwall_bound, gronwall_sequence_bound, GronwallInput};
use lpgronwall::kernels::{check_monotone, KernelSpec, NuSpec, Trend};
use lpgronwall::quadrature::QuadratureGrid;
use lpgronwall::resolvent::{iterated_kernel_value, iterated_kernels, resolvent_series, semigroup_composition};
use lpgronwall::specfun::{mittag_leffler, MLParams};
use proptest::prelude::*;

fn unit() -> MeasureSpace {
    MeasureSpace::lebesgue(0.0, 1.0).unwrap()
}

fn kernel() -> impl Strategy<Value = KernelSpec> {
    prop_oneof![
        (0.1..2.0f64).prop_map(KernelSpec::constant),
        (0.2..1.5f64, 0.0..1.5f64, 0.1..1.0f64, 0.0..1.0f64).prop_map(|(a, r, b0, b1)| {
            KernelSpec::separable(ScalarFn::Exp { coef: a, rate: r }, Trend::Increasing, ScalarFn::Poly(vec![b0, b1]))
        }),
        (0.0..1.5f64).prop_map(|c| KernelSpec::Multiplicative { nu: NuSpec::Scaled { c } }),
    ]
}

fn ordered_pair() -> impl Strategy<Value = (f64, f64)> {
    (0.0..1.0f64, 0.0..1.0f64).prop_map(|(a, b)| (a.max(b), a.min(b)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn semigroup_holds((t, s) in ordered_pair(), k in kernel(), m in 1usize..3, n in 1usize..3) {
        let sp = unit();
        let lhs = iterated_kernel_value(&k, &sp, 1.0, m + n, t, s, 4).unwrap().to_f64();
        let rhs = semigroup_composition(&k, &sp, 1.0, m, n, t, s, 4).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-8 * lhs.max(1.0), "{lhs} vs {rhs}");
    }

    #[test]
    fn table_layers_are_superadditive(k in kernel(), l in kernel()) {
        let sp = unit();
        let grid = QuadratureGrid::uniform(0.0, 1.0, 2).unwrap();
        let sum = KernelSpec::Sum { parts: vec![k.clone(), l.clone()] };
        let (tk, tl, ts) = (
            iterated_kernels(&k, &sp, 1.0, 3, &grid).unwrap(),
            iterated_kernels(&l, &sp, 1.0, 3, &grid).unwrap(),
            iterated_kernels(&sum, &sp, 1.0, 3, &grid).unwrap(),
        );
        for n in 1..=3 {
            for i in 0..grid.len() {
                for j in 0..=i {
                    let a = tk.get(n, i, j).unwrap().to_f64() + tl.get(n, i, j).unwrap().to_f64();
                    let b = ts.get(n, i, j).unwrap().to_f64();
                    prop_assert!(b >= a - 1e-9 * a.max(1.0));
                }
            }
        }
    }

    #[test]
    fn monotone_kernels_give_monotone_layers(k in kernel()) {
        let sp = unit();
        prop_assume!(check_monotone(&k, &sp.domain, 64, 42).unwrap().passed);
        let grid = QuadratureGrid::uniform(0.0, 1.0, 2).unwrap();
        let tab = iterated_kernels(&k, &sp, 1.0, 3, &grid).unwrap();
        for n in 1..=3 {
            for i in 0..grid.len() {
                for mid in 0..=i {
                    for j in 0..=mid {
                        let (a, b) = (tab.get(n, mid, j).unwrap().to_f64(), tab.get(n, i, j).unwrap().to_f64());
                        prop_assert!(a <= b + 1e-9 * b.max(1.0));
                    }
                }
            }
        }
    }

    #[test]
    fn resolvent_is_at_least_the_kernel((t, s) in ordered_pair(), k in kernel()) {
        let r = resolvent_series(&k, &unit(), 1.0, t, s, 1e-10).unwrap();
        let k1 = k.value1(t, s).to_f64();
        prop_assert!(r.converged);
        prop_assert!(r.upper().to_f64() >= k1 * (1.0 - 1e-12));
    }

    #[test]
    fn sharp_bound_below_sup_bound(c in 0.1..2.0f64, v in 0.1..3.0f64, p in prop_oneof![Just(1.0), Just(2.0)], t in 0.05..1.0f64) {
        let input = GronwallInput::new(ScalarFn::Const(v), KernelSpec::constant(c), unit(), p);
        let b = gronwall_bound(&input, &[t]).unwrap();
        prop_assert!(b.sharp.to_f64() <= b.sup.to_f64() * (1.0 + 1e-9));
    }

    #[test]
    fn sequence_bound_below_limit(n in 1usize..6, t in 0.1..1.0f64) {
        let input = GronwallInput::new(ScalarFn::Const(1.0), KernelSpec::constant(1.0), unit(), 1.0);
        let seq = gronwall_sequence_bound(&input, &|_| 0.0, n, &[t]).unwrap();
        let lim = gronwall_bound(&input, &[t]).unwrap();
        prop_assert!(seq.sharp.to_f64() <= lim.sharp.to_f64() + 1e-9);
        prop_assert!(seq.w_n.to_f64() == 0.0);
    }

    #[test]
    fn ml_is_increasing_in_z(alpha in 0.3..2.0f64, beta in 0.1..2.0f64, p in 1.0..3.0f64, z in 0.0..5.0f64, dz in 0.01..1.0f64) {
        let par = MLParams::new(alpha, beta, p).unwrap();
        let a = mittag_leffler(par, z, 1e-14).unwrap();
        let b = mittag_leffler(par, z + dz, 1e-14).unwrap();
        prop_assert!(a.sum.to_f64() < b.sum.to_f64());
    }
}

#[test]
fn picard_bounds_decrease() {
    for lambda in [0.5, 1.0, 2.0] {
        let pr = linear_volterra(lambda, 6).unwrap();
        let run = picard_solve(&pr.op, &pr.x0, 1e-8, 40, &[0.5, 1.0]).unwrap();
        let cert = &run.certificate;
        assert!(cert.converged);
        for k in 0..2 {
            for n in 1..=cert.iterates {
                assert!(cert.bound(n, k) <= cert.bound(n - 1, k));
            }
        }
    }
}

#[test]
fn fixed_point_residual_is_small() {
    let pr = linear_volterra(1.0, 6).unwrap();
    let tol = 1e-8;
    let run = picard_solve(&pr.op, &pr.x0, tol, 60, &[]).unwrap();
    let next = (pr.op.apply)(&run.x_hat);
    assert!(pr.op.distance(&run.x_hat, &next, 1.0) <= 2.0 * tol);
}

#[test]
fn distinct_starts_share_the_fixed_point() {
    let pr = banach_toy(0.3).unwrap();
    let a = picard_solve(&pr.op, &[0.0], 1e-10, 100, &[]).unwrap();
    let b = picard_solve(&pr.op, &[5.0], 1e-10, 100, &[]).unwrap();
    assert!((a.x_hat[0] - b.x_hat[0]).abs() <= 2e-10);
}

"""Smoke test for the lpgronwall extension module.

Build and install first:

    pip install --no-build-isolation -e crates/python
"""

import json
import math
from pathlib import Path

import lpgronwall

CONFIGS = Path(__file__).resolve().parent.parent / "docs" / "configs"


def check_special_functions():
    assert abs(lpgronwall.gamma(5.0) - 24.0) < 1e-12
    assert abs(lpgronwall.ln_gamma(0.5) - 0.5 * math.log(math.pi)) < 1e-13
    assert abs(lpgronwall.digamma(1.0) + 0.5772156649015329) < 1e-13
    assert abs(lpgronwall.beta(2.0, 3.0) - 1.0 / 12.0) < 1e-14
    value, tail, converged = lpgronwall.mittag_leffler(1.0, 1.0, 1.0, 1.0)
    assert converged and abs(value - math.e) <= tail + 1e-15
    value, _, _ = lpgronwall.mittag_leffler(2.0, 1.0, 1.0, 4.0)
    assert abs(value - math.cosh(2.0)) < 1e-12


def check_fractional():
    a = 0.75
    for n in range(1, 6):
        got = lpgronwall.fractional_f(a, 0.0, 1.0, n, 0.4, 0.5)
        expect = math.gamma(a) ** n / math.gamma(a * n) * 0.4 ** (a * n - 1)
        assert abs(got - expect) < 1e-10 * expect
        assert lpgronwall.fractional_f(a, 0.1, 1.0, n, 0.4, 0.5) <= lpgronwall.fractional_f_bound(a, 0.1, 1.0, n, 0.4, 0.5) * (1 + 1e-10)


def check_tables():
    cfg = (CONFIGS / "const_kernel.json").read_text()
    rows = lpgronwall.iterated_kernels(cfg, 3, grid_level=3)
    for n, t, s, v in rows:
        expect = 1.5 ** n * (t - s) ** (n - 1) / math.factorial(n - 1)
        assert abs(v - expect) < 1e-10 * max(expect, 1.0), (n, t, s, v)


def check_gronwall():
    cfg = (CONFIGS / "gronwall_constant.json").read_text()
    sharp, sup, tail = lpgronwall.gronwall_bound(cfg, [0.7])
    assert abs(sharp - math.exp(0.7)) < 1e-9 and abs(sup - math.exp(0.7)) < 1e-9 and tail >= 0.0
    bad = json.loads(cfg)
    bad["p"] = 0.5
    try:
        lpgronwall.gronwall_bound(json.dumps(bad), [0.7])
    except ValueError:
        pass
    else:
        raise AssertionError("p < 1 must be rejected")


def check_solve():
    x_hat, bounds, converged = lpgronwall.solve("linear_volterra", 2.0, tol=1e-6, max_iter=25, grid_level=8)
    assert converged
    assert all(b1 <= b0 for b0, b1 in zip(bounds, bounds[1:]))
    assert abs(x_hat[-1] - math.exp(2.0)) < 1e-5
    x_hat, bounds, _ = lpgronwall.solve("banach", 0.5, tol=1e-10)
    assert abs(x_hat[0] - 2.0) < 1e-9
    assert abs(bounds[3] - 0.5 ** 3 / 0.5) < 1e-12


def main():
    check_special_functions()
    check_fractional()
    check_tables()
    check_gronwall()
    check_solve()
    results = lpgronwall.run_selftest()
    for cid, name, passed, detail in results:
        print(f"C{cid:<2} {'PASS' if passed else 'FAIL'} {name}: {detail}")
    assert all(r[2] for r in results)
    print("python smoke test: ok")


if __name__ == "__main__":
    main()

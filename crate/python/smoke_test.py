"""Smoke test for the mvgeg_py extension module.

Build and run from the repository root:

    cargo build --release -p mvgeg-py --features extension-module
    cp target/release/libmvgeg_py.so python/mvgeg_py.so
    python3 python/smoke_test.py
"""

import json
import os
import sys
from fractions import Fraction

import numpy as np
from scipy.special import roots_gegenbauer

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
import mvgeg_py as mg  # noqa: E402


def polyval(coeffs, x):
    """Evaluate a matrix polynomial given lowest power first."""
    acc = np.zeros_like(np.asarray(coeffs[0], dtype=float))
    for c in reversed(coeffs):
        acc = acc * x + np.asarray(c)
    return acc


def check_weight_at_one():
    for ell, nu in [("1/2", 1.0), (1.5, 0.7), ("2", 2.5)]:
        w1 = polyval(mg.weight_pol(ell, nu), 1.0)
        two_ell = 2 * float(Fraction(str(ell)))
        assert np.allclose(w1, (two_ell + nu) * np.ones_like(w1), rtol=1e-12), (ell, nu)


def check_ldu():
    ell, nu = "3/2", 1.3
    w = mg.weight_pol(ell, nu)
    lc, t = mg.ldu(ell, nu)
    for x in np.linspace(-0.9, 0.9, 7):
        lx = polyval(lc, x)
        d = np.diag([tk * (1 - x * x) ** k for k, tk in enumerate(t)])
        assert np.allclose(lx @ d @ lx.T, polyval(w, x), atol=1e-10)
    assert all(tk > 0 for tk in t)


def check_routes_and_point_values():
    ell, nu, n = 1, 1.7, 4
    rec = mg.monic(ell, nu, n)
    for route in ("hyper", "racah"):
        other = mg.monic(ell, nu, n, route)
        assert len(other) == len(rec)
        assert max(np.abs(np.subtract(a, b)).max() for a, b in zip(rec, other)) < 1e-9, route
    for x in (-0.5, 0.2, 0.8):
        assert np.allclose(mg.evaluate(ell, nu, n, x), polyval(rec, x), atol=1e-12)


def check_orthogonality():
    # Gauss-Gegenbauer nodes integrate against (1-x^2)^(nu-1/2) exactly
    ell, nu, n_max = "1", 1.25, 4
    nodes, weights = roots_gegenbauer(12, nu)
    w = mg.weight_pol(ell, nu)
    ps = [mg.monic(ell, nu, n) for n in range(n_max + 1)]
    for n in range(n_max + 1):
        h = mg.norm(ell, nu, n)
        for m in range(n + 1):
            g = sum(wt * polyval(ps[n], x) @ polyval(w, x) @ polyval(ps[m], x).T for x, wt in zip(nodes, weights))
            want = np.diag(h) if m == n else np.zeros_like(g)
            assert np.allclose(g, want, atol=1e-9 * max(h)), (n, m)


def check_errors():
    for bad in [lambda: mg.weight_pol("1", -1.0), lambda: mg.monic("0.3", 1.0, 1), lambda: mg.monic(1, 1.0, 1, "fast")]:
        try:
            bad()
        except ValueError:
            continue
        raise AssertionError("expected ValueError")


def check_verify():
    ok, report = mg.verify("weight,racah", "1", [0.7, 2.0], 4, 3)
    data = json.loads(report)
    assert ok and data["pass"] and len(data["reports"]) == 2


def main():
    checks = [check_weight_at_one, check_ldu, check_routes_and_point_values, check_orthogonality, check_errors, check_verify]
    failed = 0
    for check in checks:
        try:
            check()
            print(f"ok   {check.__name__}")
        except Exception as e:  # report every failure, not only the first
            failed += 1
            print(f"FAIL {check.__name__}: {e!r}")
    sys.exit(1 if failed else 0)


if __name__ == "__main__":
    main()

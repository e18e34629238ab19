"""Smoke test for the gcye_py extension module.

Build and install first:
    pip install --no-build-isolation -e crates/python
"""

import math

import gcye_py as g


def check(name, ok, detail=""):
    print(f"{'PASS' if ok else 'FAIL'} {name} {detail}")
    return ok


def main():
    results = []

    f = g.cdf_largest(1.0, s_re=0.0, n=1)
    results.append(check("cauchy anchor", abs(f - 0.75) < 1e-8, f"F={f!r}"))

    k = g.Kernel(0.0)
    worst = 0.0
    for x in (0.5, 1.3, 4.0):
        for y in (0.7, 2.2, 5.0):
            ref = math.sin(1 / y - 1 / x) / (math.pi * (x - y))
            worst = max(worst, abs(k(x, y) - ref))
    results.append(check("sine kernel", worst < 1e-12, f"max dev {worst:.1e}"))

    m = g.Kernel(0.3, 0.4, n=20).matrix([0.6, 1.0, 2.5])
    sym = max(abs(m[i][j] - m[j][i]) for i in range(3) for j in range(3))
    results.append(check("real kernel matrix shape", len(m) == 3 and all(len(r) == 3 for r in m), f"asym {sym:.1e}"))

    a = g.gap_nystrom(6.0, s_re=1.0)
    b = g.gap_series(6.0, s_re=1.0)
    results.append(check("nystrom vs series", abs(a.value - b.value) <= 10 * (a.error_estimate + b.error_estimate) + 1e-12, repr(a)))

    r = g.kernel_rate(1.0, 0.0, 0.5, [10, 20], grid_size=9)
    results.append(check("kernel rate table", max(r["spread"]) <= 4.0, f"spread {r['spread']}"))

    pv = g.pv_residual(0.0, 0.0, [0.2 + 0.04 * i for i in range(21)])
    results.append(check("PV residual", pv < 1e-3, f"{pv:.1e}"))

    s = g.sample(3, steps=3000, chains=2, seed=5)
    again = g.sample(3, steps=3000, chains=2, seed=5)
    results.append(check("sampler determinism", s["draws"] == again["draws"], f"ks {s['ks_finite']:.3f}"))

    c = g.correspondence_check(0.0, 0.0, [0.5, 1.0, 2.0, 4.0])
    results.append(check("unitary correspondence", c["variation"] < 1e-6 and c["jacobian"], str(c)))

    try:
        g.cdf_largest(-1.0)
        results.append(check("domain error raises", False))
    except ValueError as e:
        results.append(check("domain error raises", True, str(e)))

    if not all(results):
        raise SystemExit(1)


if __name__ == "__main__":
    main()

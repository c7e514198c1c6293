"""Smoke test for the np_g2 extension module.

Build and install first, e.g.

    pip install maturin
    maturin build --release -m crates/python/Cargo.toml -o dist
    pip install dist/np_g2-*.whl

then run `python python/smoke_test.py`.
"""

import math
import os
import sys
import tempfile

import np_g2


def check(cond, what):
    print(("ok   " if cond else "FAIL ") + what)
    return bool(cond)


def main():
    ok = True

    f, fp = np_g2.oracle("round_sphere", math.pi / 4)
    want = [-4.5, 6.75, 6.75, -6.75, -6.75]
    ok &= check(all(abs(x - y) < 1e-12 for x, y in zip(f.to_list(), want)), "round sphere at pi/4")
    g1, g2, g3 = f.metric_blocks()
    ok &= check(abs(g1 - 4.5) < 1e-12 and abs(g2 - 4.5) < 1e-12 and abs(g3) < 1e-12, "metric blocks")
    lam = np_g2.oracle_lambda("round_sphere")
    ok &= check(max(abs(r) for r in np_g2.np_residual(f, fp, lam)) < 1e-12, "closed form solves the system")
    ok &= check(f.transform("12").transform("12") == f, "tau_12 is an involution")

    for name in ("sine_cone", "round_sphere", "squashed_sphere"):
        ok &= check(np_g2.oracle_check(name)["pass"], f"oracle check {name}")

    ok &= check(np_g2.initial_state(-36.0) == [-36.0, 6.75, 1728.0, -108.0], "initial state")
    c = np_g2.taylor_coefficients(-36.0, 1.0, 8)
    ok &= check(abs(c[1][2] + 216.0) < 1e-10, "series coefficient c2(h2) = -216")
    ok &= check(abs(np_g2.shifted_det(7.0, 3.0, 2.0) - 2 * 6 * 24) < 1e-9, "shifted determinant")

    tr = np_g2.solve(-36.0, t_max=7.0)
    ok &= check(tr.termination["kind"] == "h0_zero", "round run degenerates")
    ok &= check(abs(tr.t_star - 2 * math.pi) < 1e-5, f"t* = {tr.t_star}")
    ok &= check(tr.classify()["class"] == "round_like", "classified round_like")
    ok &= check(tr.closing()["verdict"]["verdict"] == "closes_within_tol", "closing conditions hold")
    ok &= check(tr.max_drift < 1e-8, "constraint drift")

    tr = np_g2.solve(10.0, t_max=0.5)
    want = np_g2.g2_quadratic_expected(10.0)
    ok &= check(abs(tr.g2_quadratic_coefficient() - want) < 1e-4 * abs(want), "g2 t^2 coefficient")
    ok &= check(len(tr) == len(tr.t) == len(tr.f), "sample arrays")
    try:
        tr.closing()
        ok &= check(False, "closing without degeneration raises")
    except ArithmeticError:
        ok &= check(True, "closing without degeneration raises")

    rows = np_g2.sweep([10.0, 20.0], t_max=0.5)
    ok &= check([r["closing_verdict"] for r in rows] == ["no_degeneration"] * 2, "sweep")

    with tempfile.TemporaryDirectory() as d:
        src, dst = os.path.join(d, "o.csv"), os.path.join(d, "t.csv")
        np_g2.write_oracle_csv("squashed_sphere", src, 1000)
        np_g2.transform_csv("13", src, dst)
        ok &= check(np_g2.residual_check(dst)["pass"], "transformed table passes residual check")
        tr.write_csv(src)
        ok &= check(np_g2.residual_check(src)["pass"], "solved table passes residual check")

    try:
        np_g2.solve(0.0)
        ok &= check(False, "a = 0 rejected")
    except ValueError:
        ok &= check(True, "a = 0 rejected")

    print("all passed" if ok else "FAILURES")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())

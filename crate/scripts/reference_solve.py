#!/usr/bin/env python3
"""Reference optimum for a problem bundle written by the desk_fixture example.

    python3 scripts/reference_solve.py crates/battid/tests/fixtures/desk_problem.json \
        crates/battid/tests/fixtures/desk_reference.json

Solves

    min ||y - Pi phi - F vec(M)||^2 + lambda1 ||P||_* + lambda2 ||Dg3 gamma||_1,
    P = [[M, a], [gamma^T, 1]],  phi = [a1, a2, b0, b1, b2, gamma],

with cvxpy + Clarabel (interior point, SDP cone for the nuclear norm) and
writes the optimal value. Columns are scaled to unit norm before the solve;
the objective is unchanged by that substitution.
"""

import json
import sys

import cvxpy as cp
import numpy as np


def solve(bundle):
    y = np.asarray(bundle["y"])
    pi = np.asarray(bundle["pi"])
    f = np.asarray(bundle["f"])
    dg3 = np.asarray(bundle["dg3"])
    keep = ~np.asarray(bundle["mask"], dtype=bool)
    y, pi, f = y[keep], pi[keep], f[keep]
    l1, l2 = bundle["lambda1"], bundle["lambda2"]
    h = pi.shape[1] - 5

    a = np.hstack([pi, f])
    scale = np.linalg.norm(a, axis=0)
    xs = cp.Variable(a.shape[1])
    x = cp.multiply(1.0 / scale, xs)
    gamma = x[5 : 5 + h]
    m1 = x[5 + h : 5 + 2 * h]
    m2 = x[5 + 2 * h : 5 + 3 * h]
    p = cp.vstack(
        [
            cp.hstack([m1, x[0:1]]),
            cp.hstack([m2, x[1:2]]),
            cp.hstack([gamma, np.ones(1)]),
        ]
    )
    # Residual relative to the least-squares fit keeps the quadratic well scaled.
    q, r = np.linalg.qr(a / scale)
    qty = q.T @ y
    rss0 = float(y @ y - qty @ qty)
    fit = cp.sum_squares(r @ xs - qty)
    penalty = 0
    if l1 > 0:
        penalty = penalty + l1 * cp.normNuc(p)
    if l2 > 0 and dg3.size:
        penalty = penalty + l2 * cp.norm1(dg3 @ gamma)
    prob = cp.Problem(cp.Minimize(fit + penalty))
    prob.solve(
        solver=cp.CLARABEL,
        tol_gap_abs=1e-14,
        tol_gap_rel=1e-12,
        tol_feas=1e-12,
        max_iter=500,
    )
    return prob.value + rss0, prob.status


def main():
    src, dst = sys.argv[1], sys.argv[2]
    with open(src) as fh:
        bundle = json.load(fh)
    value, status = solve(bundle)
    out = {"objective": value, "solver": f"cvxpy {cp.__version__} / CLARABEL", "status": status}
    with open(dst, "w") as fh:
        json.dump(out, fh, indent=2)
        fh.write("\n")
    print(json.dumps(out))


if __name__ == "__main__":
    main()

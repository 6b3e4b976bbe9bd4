#!/usr/bin/env python3
"""Solve a povm-forge SDP text dump with cvxpy and print the optimum.

usage: crosscheck_sdp.py PROBLEM.txt [--expect VALUE] [--tol 1e-5]
"""

import argparse
import sys

import cvxpy as cp
import numpy as np


def parse(path):
    lines = [l.split() for l in open(path) if l.strip()]
    if lines[0] != ["povm-forge-sdp", "1"]:
        sys.exit(f"{path}: not a povm-forge-sdp 1 file")
    dims = [int(x) for x in lines[1][2:]]
    num_nonneg = int(lines[2][1])
    num_free = int(lines[3][1])
    sections = []  # (rhs or None for the objective, terms)
    for tok in lines[5:]:
        if tok[0] == "objective":
            continue
        if tok[0] == "constraint":
            sections.append((float(tok[2]), []))
        elif tok[0] == "end":
            break
        else:
            if not sections:
                sections.append((None, []))
            sections[-1][1].append(tok)
    if not sections or sections[0][0] is not None:
        sections.insert(0, (None, []))
    return dims, num_nonneg, num_free, sections


def build(dims, num_nonneg, num_free, sections):
    blocks = [cp.Variable((d, d), hermitian=True) for d in dims]
    x = cp.Variable(num_nonneg, nonneg=True) if num_nonneg else None
    f = cp.Variable(num_free) if num_free else None

    def functional(terms):
        mats = {}
        expr = 0
        for t in terms:
            if t[0] == "b":
                b, r, c = int(t[1]), int(t[2]), int(t[3])
                z = complex(float(t[4]), float(t[5]))
                a = mats.setdefault(b, np.zeros((dims[b], dims[b]), dtype=complex))
                a[r, c] = z
                a[c, r] = np.conj(z)
            elif t[0] == "n":
                expr = expr + float(t[2]) * x[int(t[1])]
            elif t[0] == "f":
                expr = expr + float(t[2]) * f[int(t[1])]
        for b, a in mats.items():
            expr = expr + cp.real(cp.trace(a @ blocks[b]))
        return expr

    objective = functional(sections[0][1])
    constraints = [blk >> 0 for blk in blocks]
    constraints += [functional(terms) == rhs for rhs, terms in sections[1:]]
    return cp.Problem(cp.Minimize(objective), constraints)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("problem")
    ap.add_argument("--expect", type=float)
    ap.add_argument("--tol", type=float, default=1e-5)
    args = ap.parse_args()
    prob = build(*parse(args.problem))
    prob.solve(solver=cp.CLARABEL if "CLARABEL" in cp.installed_solvers() else cp.SCS)
    print(f"status {prob.status} optimum {prob.value:.10f}")
    if args.expect is not None and abs(prob.value - args.expect) > args.tol:
        sys.exit(f"mismatch: expected {args.expect}, got {prob.value}")


if __name__ == "__main__":
    main()

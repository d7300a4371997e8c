#!/usr/bin/env python3
"""Brute-force motion energies and softmax weights for the 3-frame example.

Frames (1-based) v1 = 0, v2 = 1, v3 = 1 on one vertex, window radius 1.
With a CSV from `coartic weights` as the only argument, checks its
raw_energy and weight columns against the brute-force values and exits
nonzero on a mismatch larger than 1e-5.
"""

import csv
import math
import sys

FRAMES = [[(0.0, 0.0, 0.0)], [(1.0, 0.0, 0.0)], [(1.0, 0.0, 0.0)]]
SIGMA = 1
TOL = 1e-5


def sq_step(k):
    # ||v_k - v_{k-1}||^2 summed over vertices, k is 1-based and >= 2
    a, b = FRAMES[k - 1], FRAMES[k - 2]
    return sum((p[c] - q[c]) ** 2 for p, q in zip(a, b) for c in range(3))


def energies():
    n = len(FRAMES)
    out = []
    for t in range(1, n + 1):
        ks = [k for k in range(t - SIGMA, t + SIGMA + 1) if 2 <= k <= n]
        out.append(sum(sq_step(k) for k in ks) / len(ks))
    return out


def softmax(xs):
    exps = [math.exp(x) for x in xs]
    z = sum(exps)
    return [e / z for e in exps]


def main():
    e = energies()
    w = softmax(e)
    print("raw_energy", " ".join(f"{x:.6f}" for x in e))
    print("weight", " ".join(f"{x:.6f}" for x in w))
    if len(sys.argv) < 2:
        return 0
    with open(sys.argv[1], newline="") as f:
        rows = list(csv.DictReader(f))
    if len(rows) != len(e):
        print(f"FAIL: {len(rows)} rows, expected {len(e)}")
        return 1
    worst = 0.0
    for row, ee, ww in zip(rows, e, w):
        worst = max(worst, abs(float(row["raw_energy"]) - ee), abs(float(row["weight"]) - ww))
    status = "PASS" if worst <= TOL else "FAIL"
    print(f"{status}: max abs difference {worst:.3e}")
    return 0 if worst <= TOL else 1


if __name__ == "__main__":
    sys.exit(main())

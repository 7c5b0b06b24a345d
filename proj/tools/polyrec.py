#!/usr/bin/env python3
"""Recursion fixture for a polynomial self-map, by numeric path lifting.

Finite marked points are listed by the angle at which they are seen from
the base point; infinity is listed last. Each generator is a straight
segment to its puncture, a small counterclockwise circle, and back. A lifted
loop is closed up with straight segments from the base point to the sheets,
and its word is read off from crossings with the rays that leave each
puncture pointing away from the base point.

usage: polyrec.py CONFIG.json > fixture.json
config: {"coefficients": [[re, im], ...] (highest degree first),
         "points": {"label": [re, im], ...}, "base": [re, im]}
"""

import cmath
import json
import sys

import numpy as np


def evaluate(coeffs, z):
    acc = 0j
    for c in coeffs:
        acc = acc * z + c
    return acc


def derivative(coeffs):
    n = len(coeffs) - 1
    return [c * (n - k) for k, c in enumerate(coeffs[:-1])]


def newton(coeffs, dcoeffs, w, z):
    for _ in range(50):
        step = (evaluate(coeffs, z) - w) / evaluate(dcoeffs, z)
        z -= step
        if abs(step) < 1e-15 * max(1.0, abs(z)):
            break
    return z


def lift(coeffs, dcoeffs, path, z0):
    out = [z0]
    z = z0
    for a, b in zip(path, path[1:]):
        # Subdivide until Newton stays on the branch.
        for t in np.linspace(0, 1, 9)[1:]:
            z = newton(coeffs, dcoeffs, a + (b - a) * t, z)
        out.append(z)
    return out


def loop(base, p, radius, steps=400):
    u = (p - base) / abs(p - base)
    near = p - radius * u
    seg = [base + (near - base) * t for t in np.linspace(0, 1, steps)]
    start = cmath.phase(near - p)
    circ = [p + radius * cmath.exp(1j * (start + 2 * cmath.pi * t)) for t in np.linspace(0, 1, steps)]
    return seg + circ[1:] + seg[::-1][1:]


def segment(a, b, steps=400):
    return [a + (b - a) * t for t in np.linspace(0, 1, steps)]


def crossings(path, base, points):
    """Letters for ray crossings along a polyline (one-based indices)."""
    word = []
    for a, b in zip(path, path[1:]):
        hits = []
        for k, q in enumerate(points):
            v = (q - base) / abs(q - base)
            d = b - a
            # Solve a + s d = q + t v with s in [0,1), t >= 0.
            det = (d.conjugate() * v).imag
            if abs(det) < 1e-300:
                continue
            w = q - a
            s = (w.conjugate() * v).imag / det
            t = (w.conjugate() * d).imag / det
            if 0 <= s < 1 and t >= 0:
                sign = 1 if (v.conjugate() * d).imag > 0 else -1
                hits.append((s, sign * (k + 1)))
        word.extend(l for _, l in sorted(hits))
    return word


def reduce(word):
    out = []
    for l in word:
        if out and out[-1] == -l:
            out.pop()
        else:
            out.append(l)
    return out


def fmt(word):
    return "".join(("x" if l > 0 else "X") + str(abs(l)) for l in word)


def main():
    cfg = json.load(open(sys.argv[1]))
    coeffs = [complex(*c) for c in cfg["coefficients"]]
    dcoeffs = derivative(coeffs)
    base = complex(*cfg["base"])
    labels = list(cfg["points"])
    values = [complex(*cfg["points"][l]) for l in labels]
    order = sorted(range(len(labels)), key=lambda k: cmath.phase(values[k] - base))
    labels = [labels[k] for k in order]
    values = [values[k] for k in order]
    n = len(values) + 1
    d = len(coeffs) - 1
    crit = [complex(z) for z in np.roots(dcoeffs)]
    special = values + [evaluate(coeffs, c) for c in crit]
    sheets = [complex(z) for z in np.roots(coeffs[:-1] + [coeffs[-1] - base])]

    def sheet_of(z):
        return min(range(d), key=lambda s: abs(sheets[s] - z))

    gens = []
    for p in values:
        radius = 0.25 * min(abs(p - q) for q in special if abs(p - q) > 1e-9)
        radius = min(radius, 0.25 * abs(p - base))
        path = loop(base, p, radius)
        perm, lifts = [], []
        for s in range(d):
            lifted = lift(coeffs, dcoeffs, path, sheets[s])
            t = sheet_of(lifted[-1])
            full = segment(base, sheets[s]) + lifted[1:] + segment(sheets[t], base)[1:]
            perm.append(t)
            lifts.append(reduce(crossings(full, base, values)))
        gens.append((perm, lifts))

    # Infinity: the inverse of the product of the finite generators.
    perm_inf, lifts_inf = [], []
    for s0 in range(d):
        s, acc = s0, []
        for k in reversed(range(n - 1)):
            perm, lifts = gens[k]
            t = perm.index(s)
            acc = reduce(acc + [-l for l in reversed(lifts[t])])
            s = t
        perm_inf.append(s)
        lifts_inf.append(acc)
    gens.append((perm_inf, lifts_inf))

    out = {
        "punctures": labels + ["inf"],
        "degree": d,
        "generators": [{"perm": [t + 1 for t in perm], "lifts": [fmt(w) for w in lifts]} for perm, lifts in gens],
    }
    json.dump(out, sys.stdout, sort_keys=True)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()

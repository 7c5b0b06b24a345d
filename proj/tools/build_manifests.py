#!/usr/bin/env python3
"""Writes the combine manifests in fixtures/manifests from fixtures/pieces.

Each manifest glues polynomial pieces (and small degree-one pieces) along
fixed caps. Labels are renamed so that every puncture is unique.

usage: build_manifests.py FIXTURE_DIR
"""

import json
import pathlib
import sys


def piece(root, name, rename):
    rec = json.loads((root / "pieces" / f"{name}.json").read_text())
    rec["punctures"] = [rename.get(l, l) for l in rec["punctures"]]
    return rec


def identity(labels):
    return {
        "punctures": labels,
        "degree": 1,
        "generators": [{"perm": [1], "lifts": [f"x{k + 1}"]} for k in range(len(labels))],
    }


def rotation():
    # c fixed, b1 -> b2 -> b3 -> b1.
    return {
        "punctures": ["c", "b1", "b2", "b3"],
        "degree": 1,
        "generators": [
            {"perm": [1], "lifts": ["x1"]},
            {"perm": [1], "lifts": ["x2x3x4X3X2"]},
            {"perm": [1], "lifts": ["x2"]},
            {"perm": [1], "lifts": ["x3"]},
        ],
    }


def cap(piece_name, puncture):
    return {"piece": piece_name, "puncture": puncture}


def manifest(pieces, pairs, cap_map=()):
    return {
        "pieces": [{"name": n, "image": n, "recursion": r} for n, r in pieces],
        "pairing": [{"caps": [cap(*a), cap(*b)]} for a, b in pairs],
        "cap_map": [{"piece": p, "puncture": q, "image": i} for p, q, i in cap_map],
    }


def build(root):
    out = {}
    out["levy-pair"] = manifest(
        [("A", piece(root, "square-one", {"1": "a"})), ("B", rotation())],
        [(("A", "a"), ("B", "c"))],
    )
    out["double-pair"] = manifest(
        [("A", piece(root, "square-one", {"inf": "a"})),
         ("B", piece(root, "square-one", {"0": "c", "1": "p", "inf": "q"}))],
        [(("A", "a"), ("B", "c"))],
    )
    out["basilica-pair"] = manifest(
        [("A", piece(root, "basilica-beta", {"beta": "a"})), ("B", identity(["c", "p", "q"]))],
        [(("A", "a"), ("B", "c"))],
    )
    out["cube-basilica"] = manifest(
        [("A", piece(root, "cube-one", {"0": "u0", "1": "a", "inf": "uinf"})),
         ("B", piece(root, "basilica-beta", {"beta": "c"}))],
        [(("A", "a"), ("B", "c"))],
    )
    out["square-basilica"] = manifest(
        [("A", piece(root, "square-one", {"0": "u0", "1": "a", "inf": "uinf"})),
         ("B", piece(root, "basilica-beta", {"beta": "c"}))],
        [(("A", "a"), ("B", "c"))],
    )
    out["basilica-triple"] = manifest(
        [("A", piece(root, "basilica-alpha-beta", {"alpha": "a1", "beta": "a2"})),
         ("B", identity(["c1", "p1", "q1"])),
         ("C", identity(["c2", "p2", "q2"]))],
        [(("A", "a1"), ("B", "c1")), (("A", "a2"), ("C", "c2"))],
    )
    out["marked-hole"] = manifest(
        [("A", piece(root, "square-pm-one", {"1": "a"})), ("B", identity(["c", "p", "q"]))],
        [(("A", "a"), ("B", "c"))],
        [("A", "-1", "p")],
    )
    return out


def main():
    root = pathlib.Path(sys.argv[1])
    for name, m in build(root).items():
        path = root / "manifests" / f"{name}.json"
        path.write_text(json.dumps(m, indent=2, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()

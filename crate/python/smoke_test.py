"""Smoke test for the Python bindings.

Build the module and run this script, e.g.

    cargo build --release -p proxi-kmeans-py --features extension-module
    cp target/release/libproxi_kmeans_py.so python/proxi_kmeans_py.so
    python3 python/smoke_test.py

or install with `maturin develop -m crates/python/Cargo.toml --features extension-module`.
"""

import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import proxi_kmeans_py as pk  # noqa: E402


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol


def main():
    blobs = [[0, 0], [1, 0], [0, 1], [20, 20], [21, 20], [20, 21]]
    res = pk.solve(blobs, 2, 2.0, sample_size=6, repeats=20)
    best = res["best"]
    assert best is not None
    labels = best["labels"]
    assert labels[0] == labels[1] == labels[2] != labels[3] == labels[4] == labels[5]
    assert best["certificate"]["pass"]
    assert close(best["cost"], 8 / 3)

    opt = pk.oracle(blobs, 2, 2.0)
    assert close(opt["best"]["cost"], best["cost"])
    assert opt["enumerated"] == 31

    line = [[float(i)] for i in range(6)]
    assert pk.solve(line, 2, 3.0, sample_size=6, repeats=3)["best"] is None
    assert pk.oracle(line, 2, 3.0)["best"] is None

    exp = pk.gen_exponential(2, 2)
    assert close(exp["threshold"], math.sqrt(3))
    split = [0, 0, 1, 1]
    assert pk.verify(exp["data"], split, 1.7320498, tolerance=0.0)["certificate"]["pass"]
    cert = pk.verify(exp["data"], split, math.sqrt(3), tolerance=0.0)["certificate"]
    assert not cert["pass"]
    assert cert["violation"]["kind"] == "proximity"

    inst = pk.gen_planted(3, seed=4)
    a = pk.achieved_alpha(inst["data"], inst["labels"])
    assert close(a, inst["achieved_alpha"], 1e-12)
    assert pk.verify(inst["data"], inst["labels"], a)["certificate"]["pass"]

    noisy = pk.gen_planted(2, n_per_cluster=4, alpha_floor=2.0, z=1, seed=5)
    out = pk.solve(noisy["data"], 2, 2.0, omega=0.5, z=1, mode="outliers", sample_size=6, repeats=20)
    assert out["best"]["outliers"] == [8]

    g = pk.pair_geometry([0.0, 0.0], [4.0, 0.0], 3.0)
    assert close(g["ball_radius_i"], 1.5)
    assert close(g["gap"], 4 * (3 - 1) ** 2 / (3 * 3 - 1))

    for bad in (lambda: pk.solve(blobs, 2, 1.0), lambda: pk.solve(blobs, 2, 2.0, z=1)):
        try:
            bad()
        except ValueError:
            pass
        else:
            raise AssertionError("expected ValueError")

    print("python smoke test: ok")


if __name__ == "__main__":
    main()

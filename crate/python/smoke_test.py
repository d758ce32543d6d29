#!/usr/bin/env python3
"""End-to-end smoke test of the Python bindings.

Builds `maxcond-py` in release mode, imports the resulting extension module
from the target directory, and drives the main operations: model loading,
unconditional simulation, hitting-scenario posteriors, conditional sampling,
conditional CDFs and the normal-CDF integrator.

Usage: python3 python/smoke_test.py
"""

import json
import math
import pathlib
import shutil
import subprocess
import sys
import tempfile

REPO = pathlib.Path(__file__).resolve().parent.parent


def build_extension() -> pathlib.Path:
    subprocess.run(
        ["cargo", "build", "--release", "-p", "maxcond-py"],
        cwd=REPO,
        check=True,
    )
    built = REPO / "target" / "release" / "libmaxcond.so"
    if not built.exists():  # macOS fallback
        built = REPO / "target" / "release" / "libmaxcond.dylib"
    stage = pathlib.Path(tempfile.mkdtemp(prefix="maxcond-py-"))
    shutil.copy(built, stage / "maxcond.so")
    return stage


def main() -> None:
    sys.path.insert(0, str(build_extension()))
    import maxcond

    spec = json.dumps(
        {
            "kind": "max_linear",
            "grid": [[0.0], [1.0], [2.0]],
            "atoms": [
                {"weight": 1.0, "values": [1.0, 0.2, 0.4]},
                {"weight": 1.0, "values": [0.2, 1.0, 0.5]},
                {"weight": 1.0, "values": [0.5, 0.5, 0.6]},
            ],
            "normalize": True,
        }
    )
    model = maxcond.Model.from_json(spec)
    assert model.kind == "discrete_spectral"
    assert model.grid == [[0.0], [1.0], [2.0]]
    assert abs(model.marginal_tail(0, 2.0) - 0.5) < 1e-9

    # deterministic simulation
    a = model.simulate(seed=7, n=50)
    b = model.simulate(seed=7, n=50)
    assert a == b and len(a) == 50 and len(a[0]) == 3
    assert all(v > 0.0 for row in a for v in row)

    # posterior: k = 1 is degenerate, k = 2 normalizes
    post1 = model.posterior([0], [1.3], seed=1)
    assert len(post1) == 1 and abs(post1[0][2] - 1.0) < 1e-12
    post2 = model.posterior([0, 1], [1.3, 0.7], seed=1)
    assert abs(sum(p for (_, _, p) in post2) - 1.0) < 1e-10

    # conditional samples honor the constraints exactly
    y = [1.0, 1.5]
    fields = model.conditional_samples([0, 1], y, seed=3, n=200)
    for row in fields:
        assert row[0] == y[0] and row[1] == y[1]
        assert row[2] > 0.0

    # conditional CDF: monotone, in [0, 1], and the closed single-site form
    # agrees with the general path
    prev = -1.0
    for z in (0.5, 1.0, 2.0, 4.0):
        v, se = model.conditional_cdf([0, 1], y, [2], [z], seed=1)
        assert 0.0 <= v <= 1.0 and se >= 0.0
        assert v >= prev - 1e-12
        prev = v
    closed = model.single_site_cdf(0, 1.3, [2], [0.9])
    general, _ = model.conditional_cdf([0], [1.3], [2], [0.9], seed=1)
    assert abs(closed - general) < 1e-10

    # rejection oracle smoke: frequencies over partitions sum to one
    rate, freqs = model.reject_oracle([0], [1.5], rel_half_width=0.5, n_raw=20000, seed=5, threads=2)
    assert 0.0 < rate <= 1.0
    assert abs(sum(f for (_, f) in freqs) - 1.0) < 1e-9

    # partitions and the normal CDF
    assert maxcond.partitions(3) == ["0 0 0", "0 0 1", "0 1 0", "0 1 1", "0 1 2"]
    v, se = maxcond.mvn_cdf([0.7], [[1.0]])
    assert se == 0.0 and abs(v - 0.5 * (1.0 + math.erf(0.7 / math.sqrt(2)))) < 1e-12
    v, se = maxcond.mvn_cdf([0.0, 0.0], [[1.0, 0.0], [0.0, 1.0]], seed=2)
    assert abs(v - 0.25) < 5e-4

    print("smoke test OK")


if __name__ == "__main__":
    main()

"""Compiled vs pure-Python kernels.

    python benchmarks/bench_kernels.py [--repeat 5]

Times the SCL decoder and the polar transform with both backends, then a
whole reduced trial in a subprocess per backend (the backend is chosen at
import time through CEFURA_PURE_PYTHON).
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from cefura import _core_py
from cefura.polar import polar_code, polar_encode

try:
    from cefura import _core
except ImportError:
    _core = None

TRIAL_SNIPPET = """
import time
from cefura import BACKEND
from cefura.config import SystemConfig
from cefura.harness import run_trial
cfg = SystemConfig(K=40, M=16, N=3, D=1300.0, B_f=11)
run_trial(cfg, 0)
t0 = time.perf_counter()
for t in range(1, {n} + 1):
    run_trial(cfg, t)
print(BACKEND, (time.perf_counter() - t0) / {n})
"""


def best_of(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--trials", type=int, default=3, help="trials per backend in the end-to-end run")
    args = ap.parse_args(argv)

    code = polar_code(512, 101)
    rng = np.random.default_rng(0)
    cw = polar_encode(rng.integers(0, 2, 101, dtype=np.uint8), code)
    llr = 2.0 * (1.0 - 2.0 * cw) + rng.normal(0, 1.5, 512)
    frozen = code.frozen_mask
    u = rng.integers(0, 2, (150, 512), dtype=np.uint8)

    backends = [("python", _core_py)] + ([("compiled", _core)] if _core else [])
    rows = []
    for name, mod in backends:
        rows.append((name, "scl_decode n=512 L=8",
                     best_of(lambda: mod.scl_decode_paths(llr, frozen, 8), args.repeat, 3)))
        rows.append((name, "polar_transform 150x512",
                     best_of(lambda: mod.polar_transform(u), args.repeat, 20)))
    for name, flag in (("python", "1"), ("compiled", "")):
        if name == "compiled" and _core is None:
            continue
        env = dict(os.environ, CEFURA_PURE_PYTHON=flag)
        out = subprocess.run([sys.executable, "-c", TRIAL_SNIPPET.format(n=args.trials)],
                             env=env, capture_output=True, text=True, check=True)
        backend, secs = out.stdout.split()
        rows.append((backend, "trial (16,3) K=40 J=2048", float(secs)))

    print(f"{'backend':<10} {'kernel':<28} {'ms':>10}")
    for name, what, secs in rows:
        print(f"{name:<10} {what:<28} {1e3 * secs:>10.3f}")
    if _core is not None:
        py = {w: s for n, w, s in rows if n == "python"}
        for n, w, s in rows:
            if n == "compiled":
                print(f"speedup {w}: {py[w] / s:.1f}x")


if __name__ == "__main__":
    main()

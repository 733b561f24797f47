"""Numba versus pure-numpy timings for every dual-path kernel.

Each kernel pair is first checked for agreement, then timed with
``timeit`` (best of ``--repeat``). With ``--end-to-end`` one training step
of the desk network is also timed in two subprocesses, one per value of
``DEEPINFO_DISABLE_NUMBA``, since that flag is read at import time.

    python benchmarks/bench_kernels.py [--repeat 5] [--end-to-end]
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from deepinfo._jit import NUMBA_AVAILABLE
from deepinfo.genmodel.render import _render_numba, _render_numpy
from deepinfo.infotheory.copula import _average_ranks_numba, _average_ranks_numpy
from deepinfo.linalg.logdet import _batched_log_pivots_numba, _batched_log_pivots_numpy
from deepinfo.network.kernels import (
    _col2im_numba,
    _col2im_numpy,
    _im2col_numba,
    _im2col_numpy,
    _warp_numba,
    _warp_numpy,
)

STEP_SNIPPET = """
import time
import numpy as np
from deepinfo.network import desk_netspec, init_params, loss_and_gradients
params = init_params(desk_netspec(), 0)
x = np.random.default_rng(0).random((32, 32, 32))
y = np.arange(32) % 20
loss_and_gradients(params, x, y)  # compile
t = time.perf_counter()
for _ in range(5):
    loss_and_gradients(params, x, y)
print((time.perf_counter() - t) / 5)
"""


def cases(rng):
    x = rng.standard_normal((64, 32, 32, 8))
    cols = _im2col_numpy(x, 1)
    images = rng.random((256, 32, 32))
    scale, tx, ty = rng.uniform(1, 2, 256), rng.uniform(-0.3, 0.3, 256), rng.uniform(-0.3, 0.3, 256)
    ties = np.round(rng.standard_normal((10_000, 64)), 1)
    a = rng.standard_normal((4096, 3, 6))
    cov = a.transpose(0, 2, 1) @ a + 1e-3 * np.eye(6)
    m = 512
    render_args = (rng.normal(0, 0.02, (m, 72)), rng.normal(0, 0.1, (m, 16)), np.zeros(m), np.zeros(m),
                   np.ones(m), np.zeros(m), np.zeros(m), 32, 32)
    return {
        "im2col (64x32x32x8)": (_im2col_numba, _im2col_numpy, (x, 1)),
        "col2im (64x32x32x8)": (_col2im_numba, _col2im_numpy, (cols, 64, 32, 32, 8, 1)),
        "warp (256 images)": (_warp_numba, _warp_numpy, (images, scale, tx, ty)),
        "average ranks (10000x64)": (_average_ranks_numba, _average_ranks_numpy, (ties,)),
        "batched cholesky (4096 6x6)": (_batched_log_pivots_numba, _batched_log_pivots_numpy,
                                        (cov, np.full(len(cov), 1e-12))),
        "render (512 faces)": (_render_numba, _render_numpy, render_args),
    }


def _same(a, b):
    if isinstance(a, tuple):
        return all(_same(u, v) for u, v in zip(a, b))
    return np.allclose(a, b, rtol=1e-9, atol=1e-12)


def bench(repeat):
    rng = np.random.default_rng(0)
    print(f"{'kernel':30s} {'numba ms':>10s} {'numpy ms':>10s} {'speed-up':>9s}  agree")
    for name, (fast, slow, args) in cases(rng).items():
        fast(*args)  # compile outside the timed region
        agree = _same(fast(*args), slow(*args))
        t_fast = min(timeit.repeat(lambda: fast(*args), number=1, repeat=repeat)) * 1e3
        t_slow = min(timeit.repeat(lambda: slow(*args), number=1, repeat=repeat)) * 1e3
        print(f"{name:30s} {t_fast:10.2f} {t_slow:10.2f} {t_slow / t_fast:8.1f}x  {agree}")


def end_to_end():
    times = {}
    for label, flag in (("numba", "0"), ("numpy", "1")):
        env = dict(os.environ, DEEPINFO_DISABLE_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", STEP_SNIPPET], env=env, capture_output=True, text=True,
                             check=True)
        times[label] = float(out.stdout.strip()) * 1e3
    print(f"training step, batch 32: numba {times['numba']:.1f} ms, numpy {times['numpy']:.1f} ms")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--end-to-end", action="store_true")
    args = parser.parse_args()
    if not NUMBA_AVAILABLE:
        sys.exit("numba is not importable; nothing to compare")
    bench(args.repeat)
    if args.end_to_end:
        end_to_end()


if __name__ == "__main__":
    main()

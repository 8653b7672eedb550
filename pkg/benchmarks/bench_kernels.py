"""Time the numba kernels against their numpy fallbacks at working sizes.

    python3 benchmarks/bench_kernels.py [--repeat N]

Each kernel is warmed up once (JIT compile or cache load) before timing, and
the two outputs are compared so a speedup never hides a wrong answer.
"""
import argparse
import math
import time

import numpy as np

from ihosim import _kernels


def _best(fn, repeat):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases():
    rng = np.random.default_rng(0)
    x = np.linspace(-200, 200, 2 ** 15) / math.sqrt(2)
    f = np.exp(-((x - 3) ** 2) / 50) * np.exp(0.3j * x)
    c = rng.normal(size=400) + 1j * rng.normal(size=400)
    k = np.linspace(0, 20, 2001)
    w = np.abs(f) ** 2
    xr = np.linspace(-200, 200, 4001)
    a, b = np.cos(k), np.sin(0.5 * k)
    return [
        ("hermite_project 400 x 32768", "hermite_project", (400, x, f)),
        ("hermite_synthesize 400 x 32768", "hermite_synthesize", (c, x)),
        ("trig_moments 2001 x 32768", "trig_moments", (k, x, w)),
        ("cosine_transform 4001 x 2001", "cosine_transform", (xr, k, a, b)),
    ]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if not _kernels.HAVE_NUMBA:
        print("numba unavailable (or disabled by IHOSIM_DISABLE_NUMBA); timing numpy only")
    print(f"{'kernel':34s} {'numpy s':>9s} {'numba s':>9s} {'speedup':>8s} {'max diff':>9s}")
    for label, name, args_ in cases():
        np_fn = getattr(_kernels, f"{name}_numpy")
        t_np, out_np = _best(lambda: np_fn(*args_), args.repeat)
        if _kernels.HAVE_NUMBA:
            nb_fn = getattr(_kernels, f"{name}_numba")
            nb_fn(*args_)
            t_nb, out_nb = _best(lambda: nb_fn(*args_), args.repeat)
            if isinstance(out_np, tuple):
                diff = max(float(np.max(np.abs(u - v))) for u, v in zip(out_np, out_nb))
            else:
                diff = float(np.max(np.abs(out_np - out_nb)))
            print(f"{label:34s} {t_np:9.3f} {t_nb:9.3f} {t_np / t_nb:8.1f} {diff:9.1e}")
        else:
            print(f"{label:34s} {t_np:9.3f} {'-':>9s} {'-':>8s} {'-':>9s}")


if __name__ == "__main__":
    main()

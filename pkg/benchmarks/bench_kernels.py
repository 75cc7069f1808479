"""Compare the compiled and pure-Python collected-power kernels.

    python3 benchmarks/bench_kernels.py --cells 200 --repeat 3
"""
import argparse
import time

import numpy as np

from nvmirror import _kernels_py
from nvmirror.collection import CollectionGeometry, _kernel_args
from nvmirror.dipole import mirror_environment


def timed(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cells", type=int, default=200, help="mirror distances per scan")
    ap.add_argument("--wavelength", type=float, default=700.0)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    gaps = np.linspace(500.0, 20500.0, args.cells)
    (eps, thick, ideal), rest = _kernel_args(mirror_environment(1000.0), args.wavelength, CollectionGeometry())
    backends = {"python": _kernels_py}
    try:
        from nvmirror import _kernels

        backends["compiled"] = _kernels
    except ImportError:
        print("compiled extension not built; timing the Python kernel only")

    results = {}
    for name, mod in backends.items():
        t, (values, ok) = timed(lambda: mod.collected_power_scan(eps, thick, ideal, 0, gaps, *rest), args.repeat)
        assert ok.all()
        results[name] = values
        print(f"{name:>9}: {t:8.3f} s for {args.cells} cells ({1e3 * t / args.cells:.3f} ms/cell)")
        backends[name] = t
    if len(results) == 2:
        rel = np.max(np.abs(results["compiled"] / results["python"] - 1))
        print(f"speed-up {backends['python'] / backends['compiled']:.1f}x, max relative difference {rel:.1e}")
        full = backends["compiled"] / args.cells * 361 * 2001
        print(f"projected full 361 x 2001 map on one core: {full / 60:.1f} min")


if __name__ == "__main__":
    main()

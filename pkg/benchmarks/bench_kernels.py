"""Compare the compiled kernels against the numpy fallback.

Times the uint8 blend and the bilinear resize on a few image sizes,
checks the two backends stay bit-identical on the benchmark inputs, and
prints per-image timings plus the speedup.

    python benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from bgmix.kernels import available_backends

SIZES = [(240, 320), (480, 640), (720, 1280)]


def time_call(fn, *args, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5, help="keep the best of N runs")
    args = parser.parse_args()

    backends = available_backends()
    if "compiled" not in backends:
        print("compiled extension not built; nothing to compare against")
        print("(pip install -e . --no-build-isolation builds it)")
        return

    rng = np.random.default_rng(0)
    header = f"{'kernel':<24}{'size':<12}" + "".join(f"{n:>14}" for n in backends) + f"{'speedup':>10}"
    print(header)
    print("-" * len(header))

    for h, w in SIZES:
        a = rng.integers(0, 256, (h, w, 3), dtype=np.uint8)
        b = rng.integers(0, 256, (h, w, 3), dtype=np.uint8)
        src = rng.integers(0, 256, (h // 2, w * 2 // 3, 3), dtype=np.uint8)

        outs = {n: m.blend_u8(a, b, 0.37) for n, m in backends.items()}
        assert np.array_equal(outs["numpy"], outs["compiled"]), "blend parity broken"
        times = {
            n: time_call(m.blend_u8, a, b, 0.37, repeats=args.repeats)
            for n, m in backends.items()
        }
        row = f"{'blend_u8':<24}{f'{w}x{h}':<12}"
        row += "".join(f"{times[n] * 1e3:>12.2f}ms" for n in backends)
        row += f"{times['numpy'] / times['compiled']:>9.1f}x"
        print(row)

        outs = {n: m.resize_bilinear_u8(src, h, w) for n, m in backends.items()}
        assert np.array_equal(outs["numpy"], outs["compiled"]), "resize parity broken"
        times = {
            n: time_call(m.resize_bilinear_u8, src, h, w, repeats=args.repeats)
            for n, m in backends.items()
        }
        row = f"{'resize_bilinear_u8':<24}{f'->{w}x{h}':<12}"
        row += "".join(f"{times[n] * 1e3:>12.2f}ms" for n in backends)
        row += f"{times['numpy'] / times['compiled']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()

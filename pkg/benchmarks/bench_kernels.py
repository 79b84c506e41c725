"""Compare the compiled fixed-point kernel with the numpy fallback.

Usage: python benchmarks/bench_kernels.py [repeats] [max_iter]
"""

import sys

from adasplit.bench import run_bench


def main():
    repeats = int(sys.argv[1]) if len(sys.argv) > 1 else 5
    max_iter = int(sys.argv[2]) if len(sys.argv) > 2 else 2000
    print(f"{'problem':<10} {'dim':>4} {'iters':>6} {'backend':<9} {'best s':>9} {'speedup':>8}")
    for r in run_bench(repeats, max_iter):
        print(f"{r['problem']:<10} {r['dim']:>4} {r['iters']:>6} {r['backend']:<9} "
              f"{r['seconds']:>9.5f} {r['speedup']:>8.1f}")


if __name__ == "__main__":
    main()

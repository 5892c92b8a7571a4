"""Compare the compiled and pure bitset kernels on grid-sized digraphs.

Builds the cubic double-well map at several depths and times the three
fixpoint primitives (image, forward closure, eventual image) on both
backends.  Run:  python benchmarks/bench_kernels.py [max_depth]
"""

import sys
import time

from attlat import kernels
from attlat.approx import rho_minimal_map
from attlat.approx import default_rho
from attlat.dynamics import CellSet
from attlat.grid import BoxUnion, Grid
from attlat.systems import cubicwell_system


def bench(kernel, masks, repeat=5):
    out = {}
    for name in ("image", "closure", "omega"):
        fn = getattr(kernel, name)
        best = float("inf")
        for _ in range(repeat):
            t0 = time.perf_counter()
            for m in masks:
                fn(m)
            best = min(best, time.perf_counter() - t0)
        out[name] = best / len(masks)
    return out


def main():
    max_depth = int(sys.argv[1]) if len(sys.argv) > 1 else 14
    oracle = cubicwell_system("0.4")
    print(f"{'depth':>6} {'cells':>7} {'backend':>9} {'image':>12} {'closure':>12} {'omega':>12}")
    for depth in range(8, max_depth + 1, 2):
        grid = Grid(oracle.domain, depth)
        F = rho_minimal_map(grid, oracle, default_rho(depth))
        seeds = [
            grid.cov(BoxUnion.single(["-0.1"], ["0.1"])).bits,
            grid.cov(BoxUnion.single(["0.9"], ["1.1"])).bits,
            CellSet.full(grid.n).bits,
            1,
        ]
        rows = {}
        for backend in ("pure", "compiled") if kernels.HAVE_COMPILED else ("pure",):
            kern = kernels.make_kernel(F.forward, F._fwd_masks, backend=backend)
            rows[backend] = bench(kern, seeds)
        for backend, res in rows.items():
            print(
                f"{depth:>6} {grid.n:>7} {backend:>9} "
                f"{res['image'] * 1e6:>10.1f}us {res['closure'] * 1e6:>10.1f}us "
                f"{res['omega'] * 1e6:>10.1f}us"
            )
        if len(rows) == 2:
            speedup = rows["pure"]["omega"] / rows["compiled"]["omega"]
            print(f"{'':>6} {'':>7} {'speedup':>9} omega x{speedup:.1f}")


if __name__ == "__main__":
    main()

"""Time the numba kernels against the numpy fallback.

    python benchmarks/bench_backends.py [--nodes 100 1000] [--labels 3] [--repeats 20]

Reports the median wall time per call for each kernel and backend, plus the
speedup.  The numba timings exclude compilation (one warm-up call first).
"""
import argparse
import statistics
import time

import numpy as np

from treebest import kernels
from treebest.diverse import DiversitySpec
from treebest.dpcore import map_solve
from treebest.generate import RandomTreeConfig, generate_tree


def median_ns(fn, repeats):
    fn()
    times = []
    for _ in range(repeats):
        t = time.perf_counter_ns()
        fn()
        times.append(time.perf_counter_ns() - t)
    return statistics.median(times)


def cases(model):
    p = model.packed
    topo = (p.unary, p.pair, p.parent, p.order, p.child_ptr, p.child_idx)
    best = map_solve(model).best
    E, msg, _ = kernels.get_backend("numpy").map_pass(*topo)
    allowed = np.ones(E.shape, dtype=np.bool_)
    allowed[np.arange(model.node_count), best.assignment] = False
    node, edge = DiversitySpec.hamming(best, 2, model.label_counts).packed(model)
    return {
        "map_pass": lambda be: be.map_pass(*topo),
        "layer_step": lambda be: be.layer_step(*topo, E, msg, allowed, 1),
        "accumulate_pass": lambda be: be.accumulate_pass(*topo, node[None], edge[None]),
        "naive_mbest(M=5)": lambda be: be.naive_mbest(*topo, model.root, 5),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--nodes", type=int, nargs="+", default=[100, 1000])
    parser.add_argument("--labels", type=int, default=3)
    parser.add_argument("--repeats", type=int, default=20)
    args = parser.parse_args()

    np_be, nb_be = kernels.get_backend("numpy"), kernels.get_backend("numba")
    print(f"{'kernel':<18}{'nodes':>7}{'numpy us':>12}{'numba us':>12}{'speedup':>10}")
    for n in args.nodes:
        model = generate_tree(RandomTreeConfig(node_count=n, label_count=args.labels, tree_count=1), 0)
        for name, call in cases(model).items():
            a = median_ns(lambda: call(np_be), args.repeats) / 1e3
            b = median_ns(lambda: call(nb_be), args.repeats) / 1e3
            print(f"{name:<18}{n:>7}{a:>12.1f}{b:>12.1f}{a / b:>9.1f}x")


if __name__ == "__main__":
    main()

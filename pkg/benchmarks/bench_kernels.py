"""Time the numba and numpy kernel backends on the same workloads.

    python3 benchmarks/bench_kernels.py --n 2000 --repeat 3

Each stage runs once per backend to warm up (numba compiles on first call),
then ``--repeat`` times; the best time is reported. Outputs are compared
across backends so a speedup never hides a disagreement.
"""

import argparse
import time

import numpy as np

from featnet import (EstimatorConfig, GraphFamilySpec, Sigmoid, cross_validate, kernels,
                     llama_fit, naive_estimate, realize_graph)
from featnet.estimators import example_scores, sequence_parts
from featnet.sampling import sample_non_arcs
from featnet.synthgen import generate_family


def best_time(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        started = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - started)
    return min(times), out


def stages(z, w, g, seq, folds):
    ex = seq.materialize()
    return {
        "realize_graph": lambda: realize_graph(z, w, Sigmoid(0.0, 5.0), seed=1).indices,
        "sample_non_arcs": lambda: sample_non_arcs(g, g.num_arcs,
                                                   np.random.default_rng(2))[1],
        "naive_estimate": lambda: naive_estimate(g, z).to_dense(),
        "llama_fit": lambda: llama_fit(g, z, sequence=seq)[0].to_dense(),
        "score_pairs": lambda: example_scores(w, ex, z),
        f"cross_validate(k={folds})": lambda: np.array(
            cross_validate(g, z, EstimatorConfig("llama"), folds).per_fold_aupr),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=2000)
    parser.add_argument("--family", default="sigmoid-bernoulli")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--folds", type=int, default=3)
    args = parser.parse_args()

    spec = GraphFamilySpec.named(args.family, args.n, args.seed)
    # first replicate sparse enough for a balanced example sequence
    for count in range(1, 101):
        z, w, g = generate_family(spec, count)[-1]
        if 2 * g.num_arcs <= g.n * g.n:
            break
    seq = sequence_parts(g, "random", 0)
    print(f"{args.family} n={g.n} m={z.m} arcs={g.num_arcs} examples={len(seq)}")
    backends = kernels.available()
    results = {}
    for name in backends:
        with kernels.use_backend(name):
            for stage, fn in stages(z, w, g, seq, args.folds).items():
                results.setdefault(stage, {})[name] = best_time(fn, args.repeat)

    header = f"{'stage':<24}" + "".join(f"{b:>12}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}{'agree':>8}"
    print(header)
    for stage, by_backend in results.items():
        row = f"{stage:<24}" + "".join(f"{by_backend[b][0]:>11.3f}s" for b in backends)
        if len(backends) == 2:
            (t_a, out_a), (t_b, out_b) = (by_backend[b] for b in backends)
            agree = np.allclose(out_a, out_b, rtol=1e-9, atol=1e-12)
            row += f"{t_b / t_a:>9.1f}x{'yes' if agree else 'NO':>8}"
        print(row)


if __name__ == "__main__":
    main()

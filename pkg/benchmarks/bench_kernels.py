"""Numba versus pure-numpy kernels on recursion-sized workloads.

Operators are taken from an exact ground-state recursion of the four-site
Hubbard chain, so the term counts match what the library actually sees.

    python benchmarks/bench_kernels.py [--repeat 5] [--iteration 12]
"""

import argparse
import time

import numpy as np

from liouville_gf import _numba_kernels as nb
from liouville_gf import _numpy_kernels as npk
from liouville_gf.backend import exact_ground_state
from liouville_gf.lattice import LatticeModel, build_hubbard
from liouville_gf.recursion import run_recursion


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--iteration", type=int, default=12, help="recursion operator to benchmark")
    args = ap.parse_args()

    model = LatticeModel(4)
    H = build_hubbard(model)
    state, _ = exact_ground_state(H, model)
    out = run_recursion(model, H, 0, state, k_max=args.iteration + 1, keep_operators=True)
    f = out.operators[args.iteration]
    psi = state.amplitudes
    n = f.n
    print(f"operator f_{args.iteration}: {f.term_count} Pauli terms on {n} qubits; H: {H.term_count} terms")

    comm = f.x, f.z, f.w, H.x, H.z, H.w, n
    big = nb.pair_products(*comm, nb.MODE_PRODUCT)
    cases = {
        "commutator [f, H]": lambda k: k.pair_products(*comm, k.MODE_COMMUTATOR),
        "product f f^dag": lambda k: k.pair_products(f.x, f.z, f.w, f.x, f.z, np.conj(f.w), n, k.MODE_PRODUCT),
        "merge (unsorted)": lambda k: k.merge(big[0][::-1].copy(), big[1][::-1].copy(), big[2][::-1].copy(), n),
        "apply_sum f|psi>": lambda k: k.apply_sum(f.x, f.z, f.w, psi),
        "expectations": lambda k: k.expectations(f.x, f.z, psi),
    }

    print(f"{'kernel':<20}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}  agree")
    for name, case in cases.items():
        ref_nb = case(nb)  # also triggers compilation
        ref_np = case(npk)
        pairs = zip(ref_nb, ref_np) if isinstance(ref_nb, tuple) else [(ref_nb, ref_np)]
        agree = all(np.allclose(a, b, atol=1e-12) for a, b in pairs)
        t_nb = best_of(lambda: case(nb), args.repeat)
        t_np = best_of(lambda: case(npk), args.repeat)
        print(f"{name:<20}{1e3 * t_nb:>12.3f}{1e3 * t_np:>12.3f}{t_np / t_nb:>10.1f}  {agree}")


if __name__ == "__main__":
    main()

"""Compiled vs numpy backends: mass operator application and FV residual.

Run with ``python benchmarks/bench_kernels.py [--repeat N]``. Prints one row
per case with the best time of each backend and the speedup.
"""

import argparse
import timeit

import numpy as np

from lortransfer import kernels
from lortransfer.fespace import FESpace
from lortransfer.fv import FvDiscretization, rotational_velocity
from lortransfer.kernels import MassOperator, apply_mass
from lortransfer.mesh import LorSpec, make_cartesian, make_lor_mesh


def mass_cases():
    for dim, n, p in [(2, 32, 2), (2, 16, 6), (3, 6, 3), (3, 4, 5)]:
        mesh = make_cartesian(dim, n)
        high = FESpace(mesh, p, "H1")
        low = FESpace(make_lor_mesh(mesh, LorSpec(p + 1)), 0, "L2")
        yield f"M_H {dim}D p={p} E={mesh.num_elements}", MassOperator(high), high.dof_count
        yield f"M_LH {dim}D p={p} E={mesh.num_elements}", MassOperator(low, high), high.dof_count


def fv_cases():
    for N in (80, 160, 320):
        disc = FvDiscretization(make_cartesian(2, N), rotational_velocity(), 3)
        yield f"fv_rhs N={N}x{N}", disc, N * N


def best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    backends = kernels.available_backends()
    rng = np.random.default_rng(0)
    print(f"backends: {', '.join(backends)}")
    print(f"{'case':32s} " + " ".join(f"{b:>12s}" for b in backends) + "   speedup")
    rows = []
    for name, op, n in mass_cases():
        x = rng.standard_normal(n)
        rows.append((name, {b: best(lambda: apply_mass(op, x, backend=b), args.repeat)
                            for b in backends}))
    for name, disc, n in fv_cases():
        u = rng.standard_normal(n)
        rows.append((name, {b: best(lambda: disc.residual(u, backend=b), args.repeat)
                            for b in backends}))
    for name, t in rows:
        speed = t["python"] / t["compiled"] if "compiled" in t else float("nan")
        print(f"{name:32s} " + " ".join(f"{t[b] * 1e3:10.3f}ms" for b in backends)
              + f"   {speed:6.1f}x")


if __name__ == "__main__":
    main()

"""Time the batch kernels on the compiled and numpy backends.

    python3 benchmarks/bench_kernels.py [--points 20000] [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from orbistrat import kernels
from orbistrat.models import load_catalog
from orbistrat.strata import singular_dimensions


def random_orthogonal(rng, k, n):
    q, _ = np.linalg.qr(rng.normal(size=(k, n, n)))
    return q


def cases(rng, points):
    a = random_orthogonal(rng, 48, 3)
    b = rng.normal(size=(48, 3))
    x = rng.uniform(-2, 2, size=(points, 3))
    basis = np.array([[1.0, -0.5, 0.0], [0.0, np.sqrt(3) / 2, 0.0], [0.0, 0.0, 1.0]])
    yield "displacements 48 x N", lambda be: kernels.displacements(a, b, x, backend=be)
    yield "lattice_residuals 48 x N", lambda be: kernels.lattice_residuals(a, b, basis, x, backend=be)
    for name in ("wallpaper_p4", "hexagonal3d_d3"):
        model = load_catalog(name)
        pts = model.fundamental_box.sample(rng, points)
        singular_dimensions(model, pts[:10])
        yield f"singular_dimensions {name}", lambda be, m=model, p=pts: singular_dimensions(m, p, backend=be)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    backends = ["python"] + (["cython"] if kernels.BACKEND == "cython" else [])
    if len(backends) == 1:
        print("compiled extension not built; timing the numpy backend only")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<36}" + "".join(f"{b:>12}" for b in backends) + ("     speedup" if len(backends) == 2 else ""))
    for label, fn in cases(rng, args.points):
        best = []
        for be in backends:
            fn(be)
            best.append(min(timeit.repeat(lambda: fn(be), number=1, repeat=args.repeat)))
        row = f"{label.replace('N', str(args.points)):<36}" + "".join(f"{t * 1e3:>10.2f}ms" for t in best)
        if len(best) == 2:
            row += f"{best[0] / best[1]:>11.1f}x"
        print(row)


if __name__ == "__main__":
    main()

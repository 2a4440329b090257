"""Time the pure-Python and compiled kernels on the same inputs.

    python3 benchmarks/bench_kernels.py [--repeat N]

Each kernel is run on identical data for every importable backend and the
outputs are compared before timing is reported.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from novlab._accel import available_backends
from novlab.groupoid import GeneratorRecord, GroupoidGraph, ObjectRecord
from novlab.novikov import RingElement, TruncationContext, geometric_series


def _ring_inputs():
    graph = GroupoidGraph(
        [ObjectRecord("p", 1)],
        [GeneratorRecord("g", "p", "p", -0.25), GeneratorRecord("h", "p", "p", -0.4)],
    )
    ctx = TruncationContext(6.0, graph)
    g, h = graph.generator("g"), graph.generator("h")
    a = geometric_series(g, ctx) + RingElement.from_arrow(h, ctx)
    b = geometric_series(h, ctx) - RingElement.from_arrow(g, ctx, 2)
    items = lambda e: [(s, t, w, c) for (s, t, w), c in e.raw_terms().items()]
    return items(a), items(b), graph.valuation, -ctx.L


def _words(rng, count=2000, length=40):
    out = []
    for _ in range(count):
        w = rng.integers(1, 3, size=length) * rng.choice([-1, 1], size=length)
        out.append(tuple(int(x) for x in w))
    return out


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    a, b, val, cutoff = _ring_inputs()
    words = _words(rng)
    xm = rng.normal(size=(100_000, 2)) + 0.1
    xp = rng.normal(size=(100_000, 2))

    cases = {
        "mul_terms": lambda k: k.mul_terms(a, b, val, cutoff),
        "reduce_word x2000": lambda k: [k.reduce_word(w) for w in words],
        "descend_batch 1e5": lambda k: k.descend_batch(xm, xp, 1.0, 1e-9),
    }
    backends = available_backends()
    print(f"backends: {', '.join(backends)}")
    for name, fn in cases.items():
        results = {bk: fn(mod) for bk, mod in backends.items()}
        ref = results["python"]
        for bk, r in results.items():
            if isinstance(r, tuple):
                same = all(np.allclose(x, y, rtol=1e-15, atol=0.0, equal_nan=True) for x, y in zip(r, ref))
            else:
                same = r == ref
            if not same:
                raise SystemExit(f"{name}: backend {bk} disagrees with python")
        times = {
            bk: min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat)) for bk, mod in backends.items()
        }
        base = times["python"]
        cols = "  ".join(f"{bk}={t * 1e3:8.2f} ms ({base / t:5.1f}x)" for bk, t in times.items())
        print(f"{name:20s} {cols}")


if __name__ == "__main__":
    main()

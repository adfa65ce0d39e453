"""Time the compiled and numpy grid-search backends on the same inputs.

    python benchmarks/bench_kernels.py [--points 40 80 150] [--repeat 3]
"""
import argparse
import time

from qfrelay.kernels import available_backends
from qfrelay.quantopt import grid_oracle
from qfrelay.region import weights_from_mu1
from qfrelay.scenario import reference_three_ue, reference_two_ue


def best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, nargs="+", default=[40, 80, 150])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    cases = [("2ue", reference_two_ue("near"), [0.5, 0.5]),
             ("3ue", reference_three_ue(), weights_from_mu1(0.5, 3, (0.75, 0.25)))]
    backends = available_backends()
    print("case  points  " + "  ".join(f"{b:>10s}" for b in backends) + "   speedup  agree")
    for name, s, mu in cases:
        for n in args.points:
            if name == "2ue":
                n *= 10
            res = {b: best_time(lambda b=b: grid_oracle(s, mu, points_per_dim=n, backend=b),
                                args.repeat) for b in backends}
            cols = "  ".join(f"{res[b][0]:10.4f}" for b in backends)
            speed = res["python"][0] / res["cython"][0] if "cython" in res else float("nan")
            vals = {r[1].value for r in res.values()}
            print(f"{name:4s}  {n:6d}  {cols}   {speed:7.1f}x  {len(vals) == 1}")


if __name__ == "__main__":
    main()

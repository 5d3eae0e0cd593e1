"""Unconditional-convergence traces and swap checks for every catalogue fixture."""

import argparse

from framemult import catalogue
from framemult.convergence import swap_equivalence_check, unconditional_necessary


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dims", default="8,16,32,64,128")
    args = ap.parse_args(argv)
    sweep = tuple(int(x) for x in args.dims.split(","))
    print(f"{'fixture':14}{'verdict':28}{'swap':>6}  bessel_trace_A")
    for f in catalogue.list_fixtures():
        src = catalogue.factory(f["id"])
        rep = unconditional_necessary(src, sweep)
        swap = swap_equivalence_check(src, sweep)
        trace = " ".join(f"{x:.3g}" for x in rep.bessel_trace_A)
        print(f"{f['id']:14}{rep.verdict.value:28}{str(swap):>6}  {trace}")


if __name__ == "__main__":
    main()

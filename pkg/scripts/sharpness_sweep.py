"""Smallest singular value and certificate outcome of the harmonic-symbol fixtures as d grows."""

import argparse

import numpy as np

from framemult import catalogue
from framemult.inversion import certify


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dims", default="2,4,8,16,32,64,128,256")
    ap.add_argument("--fixtures", default="ex5.1,ex5.2,ex5.4")
    args = ap.parse_args(argv)
    dims = [int(x) for x in args.dims.split(",")]
    print(f"{'fixture':10}{'d':>6}{'sigma_min':>14}{'d*sigma_min':>14}  rule / obstruction")
    for fid in args.fixtures.split(","):
        for d in dims:
            try:
                spec = catalogue.instantiate(fid, d=d).spec
            except Exception as e:  # fixture minimum dimension
                print(f"{fid:10}{d:>6}  skipped: {e}")
                continue
            s = np.linalg.svd(spec.matrix(), compute_uv=False)[-1]
            cert = certify(spec)
            tail = cert.rule.value + (f" ({cert.obstruction})" if cert.obstruction else "")
            print(f"{fid:10}{d:>6}{s:>14.6g}{d * s:>14.6g}  {tail}")


if __name__ == "__main__":
    main()

"""Print which sufficient condition fires or refuses on each catalogue fixture."""

import argparse

from framemult import catalogue
from framemult.errors import RuleRefused
from framemult.inversion import DEFAULT_ORDER, evaluate_rule


def outcome(spec, rule):
    try:
        cert = evaluate_rule(spec, rule)
        return "fires" if cert.target == "phi_psi" else "fires*"
    except RuleRefused as e:
        return e.reason


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dim", type=int, default=32)
    ap.add_argument("fixtures", nargs="*")
    args = ap.parse_args(argv)
    ids = args.fixtures or [f["id"] for f in catalogue.list_fixtures()]
    rules = [r.value for r in DEFAULT_ORDER]
    print("fixture".ljust(14) + "".join(r.ljust(24) for r in rules))
    for fid in ids:
        inst = catalogue.instantiate(fid, d=args.dim)
        if "diagnostics_only" in inst.flags:
            continue
        print(fid.ljust(14) + "".join(outcome(inst.spec, r).ljust(24) for r in rules))
    print("\n* fired only with the roles of the two families exchanged")


if __name__ == "__main__":
    main()

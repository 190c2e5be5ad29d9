"""Regenerate the data behind every figure into one directory.

    python scripts/run_all_figures.py --out figures [--no-ce] [--n-modes 150]

Correlation-expansion curves dominate the runtime (a few minutes for the
off-resonant cases); --no-ce skips them.
"""
import argparse
import json
import os
import time

from polaron_spectra.analysis_scenarios import FIGURES, run_figure, write_bundle


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="figures")
    ap.add_argument("--no-ce", action="store_true")
    ap.add_argument("--n-modes", type=int, default=None)
    ap.add_argument("--only", nargs="*", choices=FIGURES)
    args = ap.parse_args()

    timings = {}
    for name in args.only or FIGURES:
        opts = {}
        if name in ("fig4", "fig5", "fig6", "fig7"):
            opts = {"include_ce": not args.no_ce, "n_modes": args.n_modes}
        t0 = time.perf_counter()
        bundle = run_figure(name, **opts)
        write_bundle(bundle, args.out)
        if bundle.scalars:
            with open(os.path.join(args.out, f"{name}_scalars.json"), "w") as fh:
                json.dump({k: float(v) for k, v in bundle.scalars.items()}, fh, indent=2, sort_keys=True)
        timings[name] = round(time.perf_counter() - t0, 2)
        print(f"{name:6s} {timings[name]:8.2f} s")
    with open(os.path.join(args.out, "timings.json"), "w") as fh:
        json.dump(timings, fh, indent=2)


if __name__ == "__main__":
    main()

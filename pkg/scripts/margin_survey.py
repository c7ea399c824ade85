"""Certificate margins of the pipeline's shift schedules across ensembles.

Runs each schedule on its own and the default adaptive combination, and
prints failures plus the min/median relative margin (margin / sigma_max).

    python3 scripts/margin_survey.py --samples 40 --dims 4 8 12 16
"""

import argparse
import time

import numpy as np

from irrpert import perturb as pt
from irrpert.ensembles import ENSEMBLES, rng_for, sample
from irrpert.errors import IrrPertError

VARIANTS = {"geometric": ("geometric",), "spread": ("spread",), "adaptive": pt.PIPELINE_SCHEDULES}


def survey(ensemble, n, eps, samples, seed, schedules):
    fails, margins = 0, []
    for i in range(samples):
        T = sample(ensemble, n, rng_for(seed, i))
        try:
            r = pt.irreducible_pipeline(T, pt.PerturbationRequest(eps, seed=seed), schedules=schedules)
        except IrrPertError:
            fails += 1
            continue
        c = r.certificate
        margins.append(c.margin / c.sigma_max if c.sigma_max > 0 else np.inf)
    return fails, margins


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--samples", type=int, default=40)
    ap.add_argument("--dims", type=int, nargs="+", default=[4, 8, 12, 16])
    ap.add_argument("--eps", type=float, nargs="+", default=[1e-1, 1e-3])
    ap.add_argument("--ensembles", nargs="+", default=list(ENSEMBLES), choices=ENSEMBLES)
    ap.add_argument("--seed", type=int, default=5)
    args = ap.parse_args()

    print(f"{'ensemble':9} {'n':>3} {'eps':>7} {'variant':>9} {'fail':>5} {'min':>9} {'median':>9} {'sec':>6}")
    for ens in args.ensembles:
        for n in args.dims:
            for eps in args.eps:
                for name, schedules in VARIANTS.items():
                    t0 = time.perf_counter()
                    fails, m = survey(ens, n, eps, args.samples, args.seed, schedules)
                    lo = f"{min(m):.1e}" if m else "-"
                    med = f"{np.median(m):.1e}" if m else "-"
                    dt = time.perf_counter() - t0
                    print(f"{ens:9} {n:>3} {eps:>7.0e} {name:>9} {fails:>5} {lo:>9} {med:>9} {dt:>6.2f}")


if __name__ == "__main__":
    main()

"""Real parts of the resonant frequencies against the contrast delta.

Writes a long-format CSV of (delta, i, re, ratio to eta) for plotting.

    python3 scripts/frequency_sweep.py --kind ring --N 8 --out results/ring8.csv
"""
import argparse
import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from resonators.frequencies import PhysicalParams, eta, resonant_frequencies


@dataclass
class SweepConfig:
    kind: str = "chain"
    dims: tuple = (6,)
    Lambda: float = 1.0
    beta: float = 0.5
    v: float = 1.0
    v_b: float = 1.0
    R: float = 1.0
    delta_min: float = 1e-6
    delta_max: float = 1e-1
    points: int = 61
    M: float = 4.0 * np.pi


def sweep(cfg: SweepConfig):
    for delta in np.geomspace(cfg.delta_min, cfg.delta_max, cfg.points):
        p = PhysicalParams(delta=float(delta), v=cfg.v, v_b=cfg.v_b, R=cfg.R, Lambda=cfg.Lambda, beta=cfg.beta)
        e = eta(p)
        for f in resonant_frequencies((cfg.kind, cfg.dims), p, M_source=cfg.M):
            yield delta, f.index, f.multiplicity, f.re, f.re / e


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--kind", default="chain", choices=["chain", "ring", "grid"])
    ap.add_argument("--N", type=int, default=6)
    ap.add_argument("--dims", type=int, nargs=2)
    ap.add_argument("--Lambda", type=float, default=1.0)
    ap.add_argument("--beta", type=float, default=0.5)
    ap.add_argument("--points", type=int, default=61)
    ap.add_argument("--out", default="results/frequency_sweep.csv")
    args = ap.parse_args()
    dims = tuple(args.dims) if args.kind == "grid" else (args.N,)
    cfg = SweepConfig(kind=args.kind, dims=dims, Lambda=args.Lambda, beta=args.beta, points=args.points)

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    rows = list(sweep(cfg))
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["delta", "i", "multiplicity", "re", "re_over_eta"])
        w.writerows(rows)
    print(f"wrote {len(rows)} rows to {out}")


if __name__ == "__main__":
    main()

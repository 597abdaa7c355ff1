"""Localization residuals of kappa*rho + mu across arrangements and seeds.

Writes one CSV row per (arrangement, seed, rho) and a JSON summary of the
fitted rate exponents.

    python3 scripts/convergence_campaign.py --out results/convergence
"""
import argparse
import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from resonators.verification import asymptotic_convergence


@dataclass
class CampaignConfig:
    shapes: list = field(default_factory=lambda: [["chain", [8]], ["chain", [16]], ["ring", [5]], ["ring", [12]],
                                                  ["grid", [2, 3]], ["grid", [4, 4]]])
    rho: list = field(default_factory=lambda: [1e2, 3e2, 1e3, 3e3, 1e4, 3e4])
    seeds: list = field(default_factory=lambda: list(range(16)))
    threshold: float = -0.8
    workers: int = 4


def one(job):
    kind, dims, seed, grid, threshold = job
    return asymptotic_convergence(kind, tuple(dims), grid, seed=seed, threshold=threshold).to_dict()


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/convergence")
    ap.add_argument("--workers", type=int)
    ap.add_argument("--seeds", type=int, help="number of seeds starting at 0")
    args = ap.parse_args()
    cfg = CampaignConfig()
    if args.workers:
        cfg.workers = args.workers
    if args.seeds:
        cfg.seeds = list(range(args.seeds))

    jobs = [(k, d, s, cfg.rho, cfg.threshold) for k, d in cfg.shapes for s in cfg.seeds]
    with ProcessPoolExecutor(cfg.workers) as pool:
        reports = list(pool.map(one, jobs))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "residuals.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["kind", "dims", "seed", "rho", "residual"])
        for r in reports:
            for rho, res in zip(r["grid"], r["residuals"]):
                w.writerow([r["kind"], "x".join(map(str, r["dims"])), r["seed"], rho, res])

    summary = {"config": asdict(cfg), "shapes": []}
    for kind, dims in cfg.shapes:
        rows = [r for r in reports if r["kind"] == kind and r["dims"] == list(dims)]
        exps = np.array([r["exponent"] for r in rows], dtype=float)
        summary["shapes"].append({"kind": kind, "dims": dims, "passed": all(r["passed"] for r in rows),
                                  "exponent_mean": float(np.mean(exps)), "exponent_max": float(np.max(exps))})
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    for s in summary["shapes"]:
        print(f"{s['kind']:5s} {str(s['dims']):8s} exponent mean {s['exponent_mean']:+.3f} "
              f"worst {s['exponent_max']:+.3f} {'PASS' if s['passed'] else 'FAIL'}")


if __name__ == "__main__":
    main()

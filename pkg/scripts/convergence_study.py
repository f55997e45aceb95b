"""Slow-component convergence table on the benchmark system.

Writes the per-seed table and the summary under ``--out`` and prints the
median sup error per eps.  Usage: python scripts/convergence_study.py --seeds 20 --jobs 1
"""
import argparse
import json
from pathlib import Path

from fbm_averaging import benchmark_spec
from fbm_averaging import averaging as av
from fbm_averaging.io import write_csv, write_text
from fbm_averaging.validation import _clean


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--first-seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", type=Path, default=Path("out/convergence"))
    a = p.parse_args()
    cfg = av.ConvergenceConfig(seeds=tuple(range(a.first_seed, a.first_seed + a.seeds)))
    res = av.convergence_experiment(benchmark_spec(0.1), cfg, a.jobs)
    a.out.mkdir(parents=True, exist_ok=True)
    write_csv(a.out / "convergence.csv", av.CSV_HEADER, ([r[k] for k in av.CSV_HEADER] for r in res["rows"]))
    write_text(a.out / "summary.json", json.dumps(_clean(res["summary"]), indent=2, sort_keys=True) + "\n")
    for e, m in zip(res["summary"]["eps"], res["summary"]["median_e_sup"]):
        print(f"eps={e:<6g} median sup error {m:.4f}")


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Run the full pipeline in a scratch directory: generate a synthetic
cohort, train a model, evaluate every ablation, and explain one
diabetes-positive patient."""

import argparse
from pathlib import Path

from chronorisk.cli import dispatch
from chronorisk.synth import iter_cohort


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--workdir", default="demo")
    parser.add_argument("--patients", type=int, default=1000)
    parser.add_argument("--epochs", type=int, default=6)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    base = Path(args.workdir)
    base.mkdir(parents=True, exist_ok=True)
    cohort = str(base / "cohort.jsonl")
    ckpt = str(base / "model.ckpt")
    csv = str(base / "metrics.csv")

    steps = [
        ("gen", "--config", "default", "--out", cohort,
         "--n", str(args.patients), "--seed", str(args.seed)),
        ("train", "--cohort", cohort, "--out", ckpt,
         "--seed", str(args.seed), "--epochs", str(args.epochs)),
        ("eval", "--cohort", cohort, "--ckpt", ckpt, "--csv", csv),
    ]
    for step in steps:
        print(f"$ chronorisk {' '.join(step)}")
        code = dispatch(list(step))
        if code != 0:
            return code
        print()

    patient = next(r.patient_id for r in iter_cohort(cohort)
                   if r.labels.diabetes)
    step = ("explain", "--ckpt", ckpt, "--cohort", cohort,
            "--patient", patient, "--target", "diabetes",
            "--permutations", "400")
    print(f"$ chronorisk {' '.join(step)}")
    return dispatch(list(step))


if __name__ == "__main__":
    raise SystemExit(main())

"""Check the tabling engine against the bottom-up and memolist oracles over many seeds."""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "tests"))

from equivalence import run_equivalence  # noqa: E402


@dataclass
class Config:
    seeds: int = 10
    programs: int = 200
    first_seed: int = 0


def main(cfg: Config) -> int:
    total = 0
    for seed in range(cfg.first_seed, cfg.first_seed + cfg.seeds):
        n, chains, problems = run_equivalence(cfg.programs, seed)
        total += len(problems)
        print(f"seed {seed}: {n} programs ({chains} binary chain), {len(problems)} discrepancies", flush=True)
        for p in problems[:3]:
            print(p)
    return 1 if total else 0


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--seeds", type=int, default=Config.seeds)
    p.add_argument("--programs", type=int, default=Config.programs)
    p.add_argument("--first-seed", type=int, default=Config.first_seed)
    a = p.parse_args()
    raise SystemExit(main(Config(a.seeds, a.programs, a.first_seed)))

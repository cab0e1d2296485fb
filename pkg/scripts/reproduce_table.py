"""Run the benchmark suite and compare counters with the expected values.

    python scripts/reproduce_table.py --suite all --out results/table.tsv
"""

from __future__ import annotations

import argparse
import os
from dataclasses import dataclass

from tabkit.bench import SUITES, emit_table, make_spec, run_bench


@dataclass
class Config:
    suite: str = "core"
    out: str = "results/table.tsv"
    only: tuple[str, ...] = ()


def main(cfg: Config) -> int:
    results = []
    mismatches = 0
    for name, size in SUITES[cfg.suite]:
        if cfg.only and name not in cfg.only:
            continue
        res = run_bench(make_spec(name, size))
        results.append(res)
        exp = res.spec.expected
        status = "n/a" if exp is None else ("ok" if res.ok else "MISMATCH")
        mismatches += res.ok is False
        print(
            f"{res.spec.label:<22} got {'/'.join(map(str, res.counters)):<20} "
            f"expected {'/'.join(map(str, exp)) if exp else '-':<20} [{res.spec.provenance or 'none'}] "
            f"{status:<8} {res.wall_ms / 1000:7.2f}s",
            flush=True,
        )
    if cfg.out:
        os.makedirs(os.path.dirname(cfg.out) or ".", exist_ok=True)
        with open(cfg.out, "w", encoding="utf-8") as f:
            f.write(emit_table(results, timings=True))
        print(f"wrote {cfg.out}")
    return 1 if mismatches else 0


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--suite", default=Config.suite, choices=sorted(SUITES))
    p.add_argument("--out", default=Config.out)
    p.add_argument("--only", default="", help="comma-separated benchmark names")
    a = p.parse_args()
    raise SystemExit(main(Config(a.suite, a.out, tuple(x for x in a.only.split(",") if x))))

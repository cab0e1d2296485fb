"""Captured continuation frames and wall-clock time for fib(n) over a size sweep.

Prints one TSV line per size plus a least-squares quadratic fit of the
frame counts; a quadratic coefficient near zero means linear growth.
"""

from __future__ import annotations

import argparse
import statistics
from dataclasses import dataclass, field

import numpy as np

from tabkit.bench import fib_program, run_program


@dataclass
class Config:
    sizes: list[int] = field(default_factory=lambda: [100, 200, 400, 800, 1600])
    reps: int = 3


def main(cfg: Config) -> None:
    frames, times = [], []
    print("n\tframes\tframes_per_n\tmax_frames\tmedian_ms")
    for n in cfg.sizes:
        src, query = fib_program(n)
        runs = [run_program(src, query) for _ in range(cfg.reps)]
        m = runs[0][1]
        ms = statistics.median(r[3] for r in runs)
        frames.append(m.cont_frames_total)
        times.append(ms)
        print(f"{n}\t{m.cont_frames_total}\t{m.cont_frames_total / n:.3f}\t{m.max_cont_frames}\t{ms:.1f}", flush=True)
    a, b, c = np.polyfit(cfg.sizes, frames, 2)
    print(f"frames ~ {a:.3e} n^2 + {b:.3f} n + {c:.1f}")
    ratios = [t2 / t1 for t1, t2 in zip(times, times[1:])]
    print("time ratio per doubling: " + ", ".join(f"{r:.2f}" for r in ratios))


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", default=",".join(map(str, Config().sizes)))
    p.add_argument("--reps", type=int, default=Config.reps)
    a = p.parse_args()
    main(Config([int(x) for x in a.sizes.split(",")], a.reps))

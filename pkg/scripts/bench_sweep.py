#!/usr/bin/env python3
"""Dense vs zero-compressed backward-pass timing over a grid-size sweep.

Uses the published benchmark shape: a 10-segment diagram, all three grid
sizes varied. Prints a table to stderr and one JSON record per row to stdout.

    python scripts/bench_sweep.py --repetitions 3 --max-dense-cells 2e7
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

from speedid.bench import format_table, run_bench

SIZES = [
    (50, 50, 50),
    (100, 100, 100),
    (100, 100, 200),
    (100, 200, 100),
    (200, 100, 100),
    (200, 200, 100),
    (200, 200, 200),
    (400, 100, 100),
    (400, 400, 100),
]


@dataclass
class SweepConfig:
    repetitions: int = 3
    # skip the dense backend when its |V|*|A|*max(|U|,|V|) table would be larger
    max_dense_cells: float = 4e7


def dense_cells(nv: int, na: int, nu: int) -> int:
    return nv * na * max(nu, nv)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repetitions", type=int, default=SweepConfig.repetitions)
    ap.add_argument("--max-dense-cells", type=float, default=SweepConfig.max_dense_cells)
    cfg = SweepConfig(**vars(ap.parse_args(argv)))

    results = []
    for nv, na, nu in SIZES:
        dense = dense_cells(nv, na, nu) <= cfg.max_dense_cells
        r = run_bench(nv, na, nu, cfg.repetitions, dense=dense)
        results.append(r)
        print(json.dumps(r.as_dict()), flush=True)
    print(format_table(results), file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())

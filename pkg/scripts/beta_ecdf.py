"""Distribution of the stiffness ratio for frequent and infrequent Lorenz-63
observation windows, each run with LETKF at its own fixed inflation."""

from __future__ import annotations

import argparse
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from enkbf.config import l63_config
from enkbf.report import write_ecdf_csv
from enkbf.suites import SuiteKind, ecdf, run_suite


@dataclass
class EcdfSettings:
    windows: tuple[tuple[int, float], ...] = ((8, 0.04), (25, 0.5))
    cycles: int = 20000
    spinup: int = 1000
    seed: int = 0
    out_dir: Path = field(default_factory=lambda: Path("results"))


def _windows(text):
    pairs = (item.split(":") for item in text.split(",") if item)
    return tuple((int(i), float(dl)) for i, dl in pairs)


def main(argv=None):
    d = EcdfSettings()
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--windows", type=_windows, default=d.windows,
                   help="interval:delta pairs, e.g. 8:0.04,25:0.5")
    p.add_argument("--cycles", type=int, default=d.cycles)
    p.add_argument("--spinup", type=int, default=d.spinup)
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--out-dir", type=Path, default=d.out_dir)
    s = EcdfSettings(**vars(p.parse_args(argv)))
    print(asdict(s))
    base = l63_config(cycles=s.cycles, spinup=s.spinup, seed=s.seed)
    res = run_suite(SuiteKind.BETA_ECDF, base, list(s.windows))
    for interval, b in res.betas.items():
        x, prob = ecdf(b)
        path = write_ecdf_csv(s.out_dir / f"beta_ecdf_interval{interval}.csv", x, prob)
        print(f"interval {interval}: P(beta<0.1) {(b < 0.1).mean():.3f} P(beta>1) "
              f"{(b > 1).mean():.3f} median {np.median(b):.4g} max {b.max():.4g} -> {path}")


if __name__ == "__main__":
    main()

"""Euler forward versus DSI on infrequent Lorenz-63 observations as the
number of pseudo-time steps changes."""

from __future__ import annotations

import argparse
from dataclasses import asdict, dataclass, field
from pathlib import Path

from enkbf.config import l63_config
from enkbf.report import write_sweep_csv
from enkbf.suites import SuiteKind, run_suite


@dataclass
class StepSweepSettings:
    kind: str = "detkbf"
    interval: int = 25
    delta: float = 0.5
    euler_steps: tuple[int, ...] = (5, 10, 20, 50)
    dsi_uniform_steps: tuple[int, ...] = (5, 10, 30, 50)
    dsi_doubling_steps: tuple[int, ...] = (4, 6, 8, 12)
    mean_mode: str = "per_step"
    cycles: int = 20000
    spinup: int = 1000
    seed: int = 0
    workers: int = 1
    out_dir: Path = field(default_factory=lambda: Path("results"))

    def grid(self):
        return ([("euler", "uniform", n) for n in self.euler_steps]
                + [("dsi", "uniform", n) for n in self.dsi_uniform_steps]
                + [("dsi", "doubling", n) for n in self.dsi_doubling_steps])


def _ints(text):
    return tuple(int(v) for v in text.split(",") if v)


def main(argv=None):
    d = StepSweepSettings()
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--filter", dest="kind", choices=["etkbf", "detkbf"], default=d.kind)
    p.add_argument("--interval", type=int, default=d.interval)
    p.add_argument("--delta", type=float, default=d.delta)
    p.add_argument("--euler-steps", type=_ints, default=d.euler_steps)
    p.add_argument("--dsi-uniform-steps", type=_ints, default=d.dsi_uniform_steps)
    p.add_argument("--dsi-doubling-steps", type=_ints, default=d.dsi_doubling_steps)
    p.add_argument("--mean-mode", choices=["per_step", "final_gain"], default=d.mean_mode)
    p.add_argument("--cycles", type=int, default=d.cycles)
    p.add_argument("--spinup", type=int, default=d.spinup)
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--workers", type=int, default=d.workers)
    p.add_argument("--out-dir", type=Path, default=d.out_dir)
    s = StepSweepSettings(**vars(p.parse_args(argv)))
    print(asdict(s))
    base = l63_config(interval=s.interval, kind=s.kind, delta=s.delta, cycles=s.cycles,
                      spinup=s.spinup, seed=s.seed, mean_mode=s.mean_mode)
    res = run_suite(SuiteKind.STEP_SWEEP, base, s.grid(), workers=s.workers)
    for row in res.rows:
        print(f"{row.param_name} n={row.param_value}: rmse {row.rmse_mean:.4f} "
              f"failures {row.failures} aborted {row.aborted}")
    print(write_sweep_csv(s.out_dir / f"l63_steps_{s.kind}_interval{s.interval}.csv", res.rows))


if __name__ == "__main__":
    main()

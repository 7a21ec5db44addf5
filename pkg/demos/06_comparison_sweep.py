"""Configuration sweeps: what the `bench` subcommand automates.

Runs the same reduced training problem at depths 1..3 and prints one row per
variant, mirroring the comparison.csv the CLI writes.  Swap the axis for
"activation", "sampler", "n_interior", "n_per_face" or "optimizer-schedule"
to reproduce the other study tables (the full tables take longer).
"""

import tempfile

from potcol.cli import RunConfig, run_matrix
from potcol.optim import AdamConfig, LbfgsConfig

base = RunConfig(
    n_interior=600,
    n_per_face=60,
    hidden_widths=(16,),
    adam=AdamConfig(max_iters=200),
    lbfgs=LbfgsConfig(max_iters=300),
    eval_grid=11,
    output_dir=tempfile.mkdtemp(prefix="potcol_sweep_"),
)

rows = run_matrix(base, "depth", values=[1, 2, 3], quiet=True)

print(f"{'variant':8s} {'total loss':>12s} {'rel. error':>12s} {'iters':>7s} {'wall':>7s}")
for r in rows:
    iters = r["adam_iters"] + r["lbfgs_iters"]
    print(f"{r['variant']:8s} {r['total']:12.3e} {r['relative_error']:12.3e} "
          f"{iters:7d} {r['wall_clock_s']:6.1f}s")
print(f"\ncomparison.csv written under {base.output_dir}")

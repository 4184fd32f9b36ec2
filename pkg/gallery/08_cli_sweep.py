# %% [markdown]
# # A small sweep through the command line
#
# `maxrobust sweep` trains every method on every (d/n, seed) pair, scores
# each model against each attack norm, and writes CSVs, summaries with
# standard errors and SVG plots. This is a miniature of the default grid.

# %%
import csv
import tempfile
from pathlib import Path

from maxrobust.cli import main

out = Path(tempfile.mkdtemp())
code = main(["sweep", "--d", "16", "--d-over-n", "1,2,4", "--seeds", "0,1",
             "--methods", "cd,gd,signgd", "--steps", "2000", "--eps-max", "5",
             "--workers", "1", "--out", str(out)])
print("exit code", code)

# %%
with open(out / "sweep" / "sweep_linf_summary.csv", newline="") as fh:
    for row in csv.DictReader(fh):
        print(f"{row['method']:7s} d/n={float(row['d_over_n']):<4g} "
              f"max_eps={float(row['mean_max_eps']):.3f} +- {float(row['err_max_eps']):.3f}")
print(sorted(p.name for p in (out / "sweep").iterdir()))

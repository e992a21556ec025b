"""Case-study style analysis from files: export a dataset, read it back, select, and measure stability.

The dataset mimics a production setting: each sample is a grid of process measurements (rows are
process steps, columns are sensors), and the response is a defect rate in [0, 1]. Selection is
repeated on random subsets, and a row or column chosen in at least half of them is flagged.

Run with ``python3 docs/examples/case_study_resampling.py`` (about a minute). The same analysis is
available from the command line: ``twodsel select --data <manifest> --resample 10``.
"""

import tempfile
from pathlib import Path

from twodsel import ScenarioSpec, export, ingest, io, resample_selection, select, simulate

spec = ScenarioSpec(n=240, s=6, t=8, zero_rows=(0, 3), zero_cols=(1, 5, 6), true_rank=2, seed=4)
data, _ = simulate(spec, 0)

steps = [f"step{j}" for j in range(6)]
sensors = [f"sensor{k}" for k in range(8)]
with tempfile.TemporaryDirectory() as tmp:
    export(data, tmp, labels=(steps, sensors))
    print("exported:", sorted(p.name for p in Path(tmp).iterdir()))
    loaded = ingest(Path(tmp) / "manifest.json")

report = select(loaded, ranks=(1, 2, 3))
print(f"full data: rank {report.chosen_rank}, steps {[steps[j] for j in report.active_rows]}, "
      f"sensors {[sensors[k] for k in report.active_cols]}")

def selector(d):
    return select(d, ranks=(report.chosen_rank,), n_lambda=20)

row_rates, col_rates = resample_selection(loaded, selector, resamples=8, subsample=190, seed=1)
print(io.format_rates_table(io.rates_rows(row_rates, col_rates, steps, sensors)))
print("truly inactive: steps", [steps[j] for j in spec.zero_rows], "sensors", [sensors[k] for k in spec.zero_cols])

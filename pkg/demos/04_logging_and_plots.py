"""Log three seeded runs to a store, aggregate, and export CSV + SVG.

Every publish is recorded automatically through the run's buffered
logger (the component thread never waits on disk). Afterwards we query
the alpha stream across all runs, aggregate per step (mean and
population sigma), and write both a CSV table and a deterministic SVG
chart to ./demo-output/.
"""

import os

from gatedflow import build_experiment, register_builtin
from gatedflow.store import DirectoryStore, open_run, query
from gatedflow.viz import aggregate, export_csv, render_svg

OUT_DIR = "demo-output"


def main():
    registry = register_builtin()
    os.makedirs(OUT_DIR, exist_ok=True)
    store = DirectoryStore(os.path.join(OUT_DIR, "store"))

    for seed in range(3):
        run = open_run(store, "ToyExperimentPlain", seed=seed)
        collection = build_experiment(registry, "ToyExperimentPlain",
                                      logger=run)
        report = collection.run(max_steps=6)
        run.close(outcome=report.outcome)
        print(f"run {run.run_id}: {report.outcome}")

    records = query(store, tag="alpha")
    series, = aggregate(records)
    print(f"\naggregated {len(records)} records into "
          f"{len(series.steps)} steps for {series.label()}")

    csv_path = os.path.join(OUT_DIR, "alpha.csv")
    export_csv(series, csv_path)
    print(f"wrote {csv_path}")

    svg_path = os.path.join(OUT_DIR, "alpha.svg")
    with open(svg_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(render_svg([series], title="alpha across 3 seeded runs"))
    print(f"wrote {svg_path}")


if __name__ == "__main__":
    main()

"""Random-search hyperparameter study over the toy product objective.

ToyStudy wires a constant source (alpha = 1) into ComponentF, whose two
injected scaling subcomponents carry bounded hyperparameters:
scaler_A in (0.1, 1.0) and scaler_B in (0.2, 0.5). The objective
component records |alpha * scaler_A * scaler_B - 0.12| each step, so
the analytic optimum is 0 along the curve scaler_A * scaler_B = 0.12.
"""

import tempfile

from gatedflow import register_builtin
from gatedflow.store import DirectoryStore
from gatedflow.study import best_trial, run_study, study_from_descriptors


def main():
    registry = register_builtin()
    with tempfile.TemporaryDirectory() as root:
        store = DirectoryStore(root)

        study = study_from_descriptors(registry, "ToyStudy", seed=7)
        print("search space:")
        for dim in study.space.dimensions:
            print(f"  {dim.name}: {dim.kind} in {dim.bounds}")
        print(f"fixed: {study.space.fixed}\n")

        run_study(study, registry, store, n_trials=100)
        best = best_trial(study)
        print(f"trials run: {len(study.trials)}")
        print(f"best trial: #{best.trial_id}, objective {best.objective:.5f}")
        for name, value in sorted(best.assignment.items()):
            print(f"  {name} = {value:.4f}")

        a = best.assignment["ComponentF.SubcomponentA.scaler"]
        b = best.assignment["ComponentF.SubcomponentB.scaler"]
        print(f"\ncheck: |{a:.4f} * {b:.4f} - 0.12| = {abs(a * b - 0.12):.5f}")


if __name__ == "__main__":
    main()

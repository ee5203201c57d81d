"""Rewire a pipeline by overriding one io_map entry, no code changes.

The four-component experiment inserts interceptor D between B and C:
D reads alpha and publishes beta = alpha * 2, and C is rebuilt with the
override {alpha -> beta} so it consumes the doubled stream instead.
Component C's script text is byte-identical in both experiments; only
the wiring differs.
"""

from gatedflow import build_experiment, register_builtin


def main():
    registry = register_builtin()

    plain = build_experiment(registry, "ToyExperimentPlain")
    remapped = build_experiment(registry, "ToyExperiment")

    c_plain = next(c for c in plain.components if c.name == "C")
    c_remap = next(c for c in remapped.components if c.name == "C")
    assert c_plain.step_source == c_remap.step_source
    print("Component C step script (identical in both experiments):")
    for line in c_remap.step_source.splitlines():
        print(f"  {line}")
    print(f"\nplain io_map:    {c_plain.io_map}")
    print(f"remapped io_map: {c_remap.io_map}")

    plain.run(max_steps=4)
    remapped.run(max_steps=4)
    print(f"\nalpha without interceptor: {plain.trace['alpha']}")
    print(f"alpha with interceptor:    {remapped.trace['alpha']}")
    print(f"beta (interceptor output): {remapped.trace['beta']}")


if __name__ == "__main__":
    main()

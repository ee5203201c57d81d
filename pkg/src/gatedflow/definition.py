"""Experiment and study definition files (YAML or JSON).

Experiment definitions either reference a registered experiment:

    experiment: ToyExperiment
    args:
      ComponentF.SubcomponentA.scaler: 0.3
    max_steps: 3

or declare components inline:

    components:
      - name: A
        io_map: {x: x, y: y, z: z}
        step: |
          temp = x * y
          z = temp
      - type: ComponentC      # reuse a registered component type
        name: C
        io_map: {alpha: beta}  # treated as an io_map override
    max_steps: 3

Study definitions:

    experiment: ToyStudy
    direction: minimize
    objective: {tag: objective, reduce: last}
    sampler: uniform-random
    seed: 7
    n_trials: 200
    parallelism: 1
"""

from __future__ import annotations

from dataclasses import dataclass

import yaml

from .errors import FlowError
from .registry import TypeRegistry, build_experiment
from .runtime import ComponentCollection, make_component


class DefinitionError(FlowError):
    pass


def load_document(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict):
        raise DefinitionError(f"{path}: expected a mapping at top level")
    return doc


@dataclass
class ExperimentDefinition:
    experiment: str | None  # registered name, or None for inline components
    components: list | None
    args: dict
    max_steps: int | None
    step_timeout: float | None

    @property
    def label(self) -> str:
        return self.experiment or "inline"


def load_experiment_definition(path) -> ExperimentDefinition:
    doc = load_document(path)
    experiment = doc.get("experiment")
    components = doc.get("components")
    if (experiment is None) == (components is None):
        raise DefinitionError(
            f"{path}: exactly one of 'experiment' or 'components' is required"
        )
    return ExperimentDefinition(
        experiment=experiment,
        components=components,
        args=doc.get("args") or {},
        max_steps=doc.get("max_steps"),
        step_timeout=doc.get("step_timeout"),
    )


def build_from_definition(registry: TypeRegistry, definition: ExperimentDefinition,
                          logger=None) -> ComponentCollection:
    if definition.experiment is not None:
        return build_experiment(registry, definition.experiment, definition.args,
                                logger=logger,
                                step_timeout=definition.step_timeout)
    components = []
    for entry in definition.components:
        if not isinstance(entry, dict) or "name" not in entry:
            raise DefinitionError(f"component entry needs a 'name': {entry!r}")
        type_name = entry.get("type")
        if type_name is not None:
            spec = registry.component(type_name)
            io_map = spec.io_map
            override = entry.get("io_map")
            init, step = spec.init, spec.step
        else:
            io_map = entry.get("io_map")
            if not io_map:
                raise DefinitionError(
                    f"inline component {entry['name']!r} needs an io_map"
                )
            override = None
            init, step = entry.get("init"), entry.get("step")
        components.append(make_component(
            name=entry["name"],
            io_map=io_map,
            init_body=init,
            step_body=step,
            io_map_override=override,
            max_steps=entry.get("max_steps"),
        ))
    kwargs = {}
    if definition.step_timeout is not None:
        kwargs["step_timeout"] = definition.step_timeout
    collection = ComponentCollection(components, logger=logger, **kwargs)
    collection.bind()
    return collection


@dataclass
class StudyDefinition:
    experiment: str
    direction: str
    objective_tag: str
    reduce: str
    sampler: str
    seed: int
    n_trials: int
    parallelism: int
    max_steps: int | None
    step_timeout: float | None


def load_study_definition(path) -> StudyDefinition:
    doc = load_document(path)
    if "experiment" not in doc:
        raise DefinitionError(f"{path}: study definition needs 'experiment'")
    objective = doc.get("objective") or {}
    return StudyDefinition(
        experiment=doc["experiment"],
        direction=doc.get("direction", "minimize"),
        objective_tag=objective.get("tag", "objective"),
        reduce=objective.get("reduce", "last"),
        sampler=doc.get("sampler", "uniform-random"),
        seed=int(doc.get("seed", 0)),
        n_trials=int(doc.get("n_trials", 0)),
        parallelism=int(doc.get("parallelism", 1)),
        max_steps=doc.get("max_steps"),
        step_timeout=doc.get("step_timeout"),
    )

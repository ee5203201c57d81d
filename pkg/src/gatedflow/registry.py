"""Explicit type registry, hyperparameter descriptors, and factory assembly.

Components, subcomponents, and experiments are registered by name at
program start. Experiment factories resolve constructor arguments from a
flat argument pool (namespaced keys win over bare ones), inject
subcomponents into component slots, and hand back a bound
ComponentCollection ready to run.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import (
    AmbiguousArgument,
    DuplicateRegistration,
    InvalidDescriptor,
    UnknownExperiment,
    UnknownType,
    UnusedArgument,
)
from .runtime import ComponentCollection, make_component


@dataclass
class HyperparameterDescriptor:
    name: str
    kind: str = "real"  # real | integer | categorical
    default: object = None
    bounds: tuple | None = None  # (low, high) for real/integer
    choices: list | None = None  # categorical only
    log_scale: bool = False

    @property
    def bounded(self) -> bool:
        return self.bounds is not None or self.choices is not None

    def validate(self):
        if self.kind not in ("real", "integer", "categorical"):
            raise InvalidDescriptor(f"{self.name}: unknown kind {self.kind!r}")
        if self.kind == "categorical":
            if self.bounds is not None:
                raise InvalidDescriptor(f"{self.name}: categorical takes choices, not bounds")
            if self.choices is not None:
                if len(self.choices) < 2:
                    raise InvalidDescriptor(f"{self.name}: needs at least 2 choices")
                if self.default not in self.choices:
                    raise InvalidDescriptor(f"{self.name}: default not among choices")
            if self.log_scale:
                raise InvalidDescriptor(f"{self.name}: log_scale is numeric-only")
            return
        if self.choices is not None:
            raise InvalidDescriptor(f"{self.name}: choices are categorical-only")
        if self.bounds is not None:
            low, high = self.bounds
            if not low < high:
                raise InvalidDescriptor(f"{self.name}: bounds must satisfy low < high")
            if self.default is not None and not low <= self.default <= high:
                raise InvalidDescriptor(
                    f"{self.name}: default {self.default} outside bounds {self.bounds}"
                )
            if self.log_scale and (self.kind != "real" or low <= 0):
                raise InvalidDescriptor(
                    f"{self.name}: log_scale needs strictly positive real bounds"
                )
        elif self.log_scale:
            raise InvalidDescriptor(f"{self.name}: log_scale needs bounds")


@dataclass
class SubcomponentSpec:
    """A registered injectable: ``make(**params)`` returns the callable."""

    name: str
    make: object
    params: list[HyperparameterDescriptor] = field(default_factory=list)


@dataclass
class ComponentSpec:
    name: str
    io_map: dict[str, str]
    init: object = None  # script source or NativeBody
    step: object = None
    slots: list[str] = field(default_factory=list)  # subcomponent slot names
    params: list[HyperparameterDescriptor] = field(default_factory=list)
    make_bodies: object = None  # optional (args, subs) -> (init, step)


@dataclass
class FactoryRecipe:
    target: str  # registered component type name
    name: str | None = None  # instance/owner name; defaults to target
    slots: dict[str, str] = field(default_factory=dict)  # slot -> subcomponent type
    extra_args: dict = field(default_factory=dict)  # e.g. {"io_map": {...}}

    @property
    def instance_name(self) -> str:
        return self.name if self.name is not None else self.target


@dataclass
class ExperimentSpec:
    name: str
    recipes: list[FactoryRecipe] = field(default_factory=list)
    default_max_steps: int | None = None
    default_step_timeout: float | None = None


class TypeRegistry:
    TIERS = ("component", "subcomponent", "experiment")

    def __init__(self):
        self.components: dict[str, ComponentSpec] = {}
        self.subcomponents: dict[str, SubcomponentSpec] = {}
        self.experiments: dict[str, ExperimentSpec] = {}

    def _tier_map(self, tier):
        if tier not in self.TIERS:
            raise ValueError(f"unknown tier {tier!r}")
        return getattr(self, tier + "s")

    def register(self, tier: str, spec):
        table = self._tier_map(tier)
        if spec.name in table:
            raise DuplicateRegistration(f"{tier} {spec.name!r} already registered")
        for descriptor in getattr(spec, "params", []):
            descriptor.validate()
        table[spec.name] = spec

    def experiment(self, name) -> ExperimentSpec:
        try:
            return self.experiments[name]
        except KeyError:
            raise UnknownExperiment(name) from None

    def component(self, name) -> ComponentSpec:
        try:
            return self.components[name]
        except KeyError:
            raise UnknownType(f"component {name!r}") from None

    def subcomponent(self, name) -> SubcomponentSpec:
        try:
            return self.subcomponents[name]
        except KeyError:
            raise UnknownType(f"subcomponent {name!r}") from None


def register(registry: TypeRegistry, tier: str, spec):
    registry.register(tier, spec)


def _bare_name_owners(registry: TypeRegistry, experiment: ExperimentSpec):
    """Count how many types in this experiment own each bare parameter name."""
    owners: dict[str, int] = {}
    seen = set()
    for recipe in experiment.recipes:
        for type_name in (recipe.target, *recipe.slots.values()):
            if type_name in seen:
                continue
            seen.add(type_name)
            spec = (
                registry.components.get(type_name)
                or registry.subcomponents.get(type_name)
            )
            if spec is None:
                continue
            for p in spec.params:
                owners[p.name] = owners.get(p.name, 0) + 1
    return owners


def get_class_args(spec, exp_args, context: str = "", owners=None, consumed=None):
    """Resolve constructor arguments for one registered type.

    Lookup order per parameter: the fully namespaced key
    ``context.TypeName.param`` (when a context is given), then
    ``TypeName.param``, then the bare ``param`` when unambiguous across the
    experiment, then the declared default.
    """
    exp_args = exp_args or {}
    resolved = {}
    for p in spec.params:
        keys = []
        if context:
            keys.append(f"{context}.{spec.name}.{p.name}")
        keys.append(f"{spec.name}.{p.name}")
        for key in keys:
            if key in exp_args:
                resolved[p.name] = exp_args[key]
                if consumed is not None:
                    consumed.add(key)
                break
        else:
            if p.name in exp_args:
                if owners is not None and owners.get(p.name, 0) >= 2:
                    raise AmbiguousArgument(
                        f"bare argument {p.name!r} matches parameters of multiple "
                        f"types; use a namespaced key"
                    )
                resolved[p.name] = exp_args[p.name]
                if consumed is not None:
                    consumed.add(p.name)
            else:
                resolved[p.name] = p.default
    return resolved


def collect_hyperparameters(registry: TypeRegistry, experiment_name: str):
    """Walk an experiment's recipes and emit namespaced descriptors, sorted.

    Descriptors without bounds stay in the list but are flagged fixed; the
    study engine keeps them at their defaults.
    """
    experiment = registry.experiment(experiment_name)
    collected = []
    for recipe in experiment.recipes:
        comp_spec = registry.component(recipe.target)
        for p in comp_spec.params:
            collected.append((f"{recipe.target}.{p.name}", p))
        for slot in sorted(recipe.slots):
            sub_spec = registry.subcomponent(recipe.slots[slot])
            for p in sub_spec.params:
                collected.append((f"{recipe.target}.{sub_spec.name}.{p.name}", p))
    collected.sort(key=lambda item: item[0])
    return collected


def build_experiment(registry: TypeRegistry, name: str, exp_args=None,
                     logger=None, step_timeout=None) -> ComponentCollection:
    """Instantiate, wire, and bind a registered experiment."""
    experiment = registry.experiment(name)
    exp_args = dict(exp_args or {})
    owners = _bare_name_owners(registry, experiment)
    consumed: set[str] = set()
    components = []
    for recipe in experiment.recipes:
        comp_spec = registry.component(recipe.target)
        subs = {}
        for slot, sub_type in recipe.slots.items():
            sub_spec = registry.subcomponent(sub_type)
            args = get_class_args(sub_spec, exp_args, context=recipe.target,
                                  owners=owners, consumed=consumed)
            subs[slot] = sub_spec.make(**args)
        comp_args = get_class_args(comp_spec, exp_args, owners=owners,
                                   consumed=consumed)
        if comp_spec.make_bodies is not None:
            init_body, step_body = comp_spec.make_bodies(comp_args, subs)
        else:
            init_body, step_body = comp_spec.init, comp_spec.step
        components.append(
            make_component(
                name=recipe.instance_name,
                io_map=comp_spec.io_map,
                init_body=init_body,
                step_body=step_body,
                io_map_override=recipe.extra_args.get("io_map"),
                subcomponents=subs,
            )
        )
    unused = set(exp_args) - consumed
    if unused:
        raise UnusedArgument(unused)
    timeout = step_timeout
    if timeout is None:
        timeout = experiment.default_step_timeout
    kwargs = {} if timeout is None else {"step_timeout": timeout}
    collection = ComponentCollection(components, logger=logger, **kwargs)
    collection.bind()
    return collection

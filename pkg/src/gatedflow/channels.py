"""Namespaced, generation-gated broadcast channels.

A Subject is the single producer for a namespace; Observers are per-owner
consumer handles. Each subject holds exactly one value slot guarded by a
generation counter: a publish blocks until every observer has consumed the
current generation, and an observe blocks until a generation newer than the
observer's last consumed one is available. This rendezvous is what lets
independent components self-organise into a dataflow graph.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field

from .errors import (
    AlreadyInitialised,
    ChannelPoisoned,
    ChannelTimeout,
    DuplicateSubject,
    IncompleteGraph,
    RegistryNotSealed,
    RegistrySealed,
    ValueTypeError,
)

#: scalar payload types a channel may carry
SCALAR_TYPES = (bool, int, float, str)

DEFAULT_TIMEOUT = 5.0


def check_value(value):
    if not isinstance(value, SCALAR_TYPES):
        raise ValueTypeError(
            f"channel values must be bool/int/float/str, got {type(value).__name__}"
        )
    return value


@dataclass
class BindEntry:
    namespace: str
    producer: str | None
    consumers: list[str]


@dataclass
class BindReport:
    entries: list[BindEntry] = field(default_factory=list)

    def entry(self, namespace) -> BindEntry:
        for e in self.entries:
            if e.namespace == namespace:
                return e
        raise KeyError(namespace)


class ChannelRegistry:
    """Pseudo-singleton home for subjects and observers, one per collection.

    Construction-phase only mutation: once sealed the maps are read-only and
    all channel traffic (publish/observe) becomes legal.
    """

    def __init__(self, default_timeout: float = DEFAULT_TIMEOUT):
        self.default_timeout = default_timeout
        self.sealed = False
        self.poisoned = False
        self._subjects: dict[str, Subject] = {}
        self._observers: dict[tuple[str, str], Observer] = {}
        self._by_namespace: dict[str, list[Observer]] = {}

    # -- construction phase -------------------------------------------------

    def create_subject(self, namespace: str, owner: str | None = None) -> "Subject":
        if self.sealed:
            raise RegistrySealed(f"cannot create subject {namespace!r} after seal")
        if namespace in self._subjects:
            raise DuplicateSubject(namespace)
        subject = Subject(namespace, self, owner)
        self._subjects[namespace] = subject
        return subject

    def acquire_observer(self, namespace: str, owner: str) -> "Observer":
        if self.sealed:
            raise RegistrySealed(f"cannot acquire observer {namespace!r} after seal")
        key = (namespace, owner)
        if key not in self._observers:
            observer = Observer(namespace, owner, self)
            self._observers[key] = observer
            self._by_namespace.setdefault(namespace, []).append(observer)
        return self._observers[key]

    def seal_and_bind(self) -> BindReport:
        """Close registration and verify every observer has a producer."""
        missing = {
            ns for (ns, _owner) in self._observers if ns not in self._subjects
        }
        if missing:
            raise IncompleteGraph(missing)
        self.sealed = True
        report = BindReport()
        namespaces = sorted(set(self._subjects) | set(self._by_namespace))
        for ns in namespaces:
            subject = self._subjects.get(ns)
            consumers = sorted(o.owner for o in self._by_namespace.get(ns, []))
            report.entries.append(
                BindEntry(ns, subject.owner if subject else None, consumers)
            )
        return report

    # -- execution phase ----------------------------------------------------

    def poison(self):
        """Release every blocked context, now and forever. Idempotent."""
        self.poisoned = True
        for subject in self._subjects.values():
            with subject._cond:
                subject._cond.notify_all()

    def subject(self, namespace: str) -> "Subject":
        return self._subjects[namespace]

    def observers_of(self, namespace: str) -> list["Observer"]:
        return self._by_namespace.get(namespace, [])

    @property
    def subjects(self):
        return dict(self._subjects)


class Subject:
    """Producer handle: one per namespace, single slot, generation counter."""

    def __init__(self, namespace: str, registry: ChannelRegistry, owner=None):
        self.namespace = namespace
        self.owner = owner
        self.generation = 0
        self.slot = None
        self._registry = registry
        self._cond = threading.Condition()
        self._tap = None  # optional (namespace, value) callback, set before seal

    def _require_sealed(self):
        if not self._registry.sealed:
            raise RegistryNotSealed(
                f"channel traffic on {self.namespace!r} before seal"
            )

    def _acked(self) -> bool:
        gen = self.generation
        if gen == 0:
            return True
        return all(
            o.last_consumed >= gen for o in self._registry.observers_of(self.namespace)
        )

    def publish(self, value, timeout: float | None = None):
        """Store the next generation, waiting for all consumers to catch up."""
        check_value(value)
        self._require_sealed()
        if timeout is None:
            timeout = self._registry.default_timeout
        deadline = time.monotonic() + timeout
        with self._cond:
            while True:
                if self._registry.poisoned:
                    raise ChannelPoisoned(self.namespace)
                if self._acked():
                    break
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    raise ChannelTimeout(self.namespace, "publish", timeout)
                self._cond.wait(remaining)
            self.slot = value
            self.generation += 1
            if self._tap is not None:
                self._tap(self.namespace, value)
            self._cond.notify_all()

    def initialise_state(self, value):
        """Generation-0 publish used to bootstrap a cycle; never blocks."""
        check_value(value)
        self._require_sealed()
        with self._cond:
            if self.generation >= 1:
                raise AlreadyInitialised(
                    f"subject {self.namespace!r} already holds generation "
                    f"{self.generation}"
                )
            if self._registry.poisoned:
                raise ChannelPoisoned(self.namespace)
            self.slot = value
            self.generation = 1
            if self._tap is not None:
                self._tap(self.namespace, value)
            self._cond.notify_all()


class Observer:
    """Consumer handle for one (namespace, owner) pair."""

    def __init__(self, namespace: str, owner: str, registry: ChannelRegistry):
        self.namespace = namespace
        self.owner = owner
        self.last_consumed = 0
        self._registry = registry

    def observe(self, timeout: float | None = None):
        """Block until a generation newer than last_consumed exists, return it."""
        if not self._registry.sealed:
            raise RegistryNotSealed(
                f"channel traffic on {self.namespace!r} before seal"
            )
        subject = self._registry.subject(self.namespace)
        if timeout is None:
            timeout = self._registry.default_timeout
        deadline = time.monotonic() + timeout
        with subject._cond:
            while True:
                if self._registry.poisoned:
                    raise ChannelPoisoned(self.namespace)
                if subject.generation > self.last_consumed:
                    break
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    raise ChannelTimeout(self.namespace, "observe", timeout)
                subject._cond.wait(remaining)
            value = subject.slot
            self.last_consumed = subject.generation
            subject._cond.notify_all()
            return value

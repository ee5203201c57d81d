"""Components, collections, and the concurrent gated execution loop.

A Component owns a step body (script or native), an io_map translating its
internal names to external channel namespaces, and, after bind, one Subject
per write name and one Observer per read name. A ComponentCollection wires
every component into a shared ChannelRegistry, runs one thread per
component, and supervises the whole graph for deadlock timeouts.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from types import SimpleNamespace

from . import dsl
from .channels import ChannelRegistry, BindReport
from .errors import BadOverride, ChannelPoisoned, ChannelTimeout

DEFAULT_STEP_TIMEOUT = 5.0


@dataclass
class NativeBody:
    """Host-language body with explicitly declared read/write sets.

    ``fn(inputs, ctx)`` receives the observed values and a context exposing
    ``record(tag, value)``; it returns a mapping of write name to value.
    """

    fn: object
    reads: set[str] = field(default_factory=set)
    writes: set[str] = field(default_factory=set)


class ScriptBody:
    """Parsed step script plus its inferred IO sets."""

    def __init__(self, source: str, io_map, subcomponents=()):
        self.source = source
        self.ast = dsl.parse(source)
        self.io_sets = dsl.validate(self.ast, io_map, subcomponents)

    @property
    def reads(self):
        return self.io_sets.reads

    @property
    def writes(self):
        return self.io_sets.writes


def _check_native(body: NativeBody, io_map):
    unknown = (set(body.reads) | set(body.writes)) - set(io_map)
    if unknown:
        raise dsl.UseBeforeAssign(
            "native body declares names absent from io_map: "
            + ", ".join(sorted(unknown))
        )


class Component:
    def __init__(self, name, io_map, init_body, step_body, subcomponents,
                 max_steps=None):
        self.name = name
        self.io_map = dict(io_map)
        self.init_body = init_body
        self.step_body = step_body
        self.subcomponents = dict(subcomponents or {})
        self.max_steps = max_steps
        self.observers = {}  # internal read name -> Observer
        self.subjects = {}   # internal write name -> Subject
        self.logger = None   # ProxyLogger, attached by the collection

    @property
    def reads(self):
        names = set()
        for body in (self.init_body, self.step_body):
            if body is not None:
                names |= set(body.reads)
        return names

    @property
    def writes(self):
        names = set()
        for body in (self.init_body, self.step_body):
            if body is not None:
                names |= set(body.writes)
        return names

    @property
    def step_source(self):
        return self.step_body.source if isinstance(self.step_body, ScriptBody) else None

    @property
    def init_source(self):
        return self.init_body.source if isinstance(self.init_body, ScriptBody) else None


def make_component(name, io_map, init_body=None, step_body=None,
                   io_map_override=None, subcomponents=None,
                   max_steps=None) -> Component:
    """Construct and validate a component against its effective io_map.

    ``init_body``/``step_body`` may be script source strings or NativeBody
    instances. The override replaces external namespaces for existing keys
    only; the script text itself is never touched, which is what makes
    graph rewiring transparent to component logic.
    """
    effective = dict(io_map)
    if io_map_override:
        bad = set(io_map_override) - set(io_map)
        if bad:
            raise BadOverride(
                f"override keys not in io_map: {', '.join(sorted(bad))}"
            )
        effective.update(io_map_override)
    subcomponents = dict(subcomponents or {})

    def prep(body):
        if body is None:
            return None
        if isinstance(body, str):
            return ScriptBody(body, effective, subcomponents)
        if isinstance(body, NativeBody):
            _check_native(body, effective)
            return body
        raise TypeError(f"body must be source text or NativeBody, got {body!r}")

    return Component(name, effective, prep(init_body), prep(step_body),
                     subcomponents, max_steps)


@dataclass
class RunReport:
    outcome: str  # completed | stopped | timeout | error
    steps: dict[str, int] = field(default_factory=dict)
    blocked_on: list[tuple[str, str, str]] = field(default_factory=list)
    error: Exception | None = None


class ComponentCollection:
    """Binds components into one channel registry and runs them as threads."""

    def __init__(self, components, step_timeout: float = DEFAULT_STEP_TIMEOUT,
                 logger=None):
        names = [c.name for c in components]
        if len(set(names)) != len(names):
            raise ValueError("component names must be unique")
        self.components = list(components)
        self.step_timeout = step_timeout
        self.logger = logger  # RunLogger providing .proxy(component_name)
        self.registry: ChannelRegistry | None = None
        self.bind_report: BindReport | None = None
        self.trace: dict[str, list] = {}
        self._stop = threading.Event()
        self._ran = False

    # -- graph construction -------------------------------------------------

    def bind(self) -> BindReport:
        registry = ChannelRegistry(default_timeout=self.step_timeout)
        for comp in self.components:
            for internal in sorted(comp.writes):
                subject = registry.create_subject(comp.io_map[internal], owner=comp.name)
                subject._tap = self._record_trace
                comp.subjects[internal] = subject
            for internal in sorted(comp.reads):
                comp.observers[internal] = registry.acquire_observer(
                    comp.io_map[internal], comp.name
                )
            if self.logger is not None:
                comp.logger = self.logger.proxy(comp.name)
        self.bind_report = registry.seal_and_bind()
        self.registry = registry
        return self.bind_report

    def _record_trace(self, namespace, value):
        self.trace.setdefault(namespace, []).append(value)

    # -- execution ----------------------------------------------------------

    def signal_stop(self):
        self._stop.set()

    def run(self, max_steps=None, step_timeout=None) -> RunReport:
        if self.registry is None:
            raise RuntimeError("bind() must succeed before run()")
        if self._ran:
            raise RuntimeError("a ComponentCollection is not reusable after run()")
        self._ran = True
        timeout = step_timeout if step_timeout is not None else self.step_timeout
        self.registry.default_timeout = timeout

        steps = {c.name: 0 for c in self.components}
        pending: dict[str, tuple[str, str]] = {}
        pending_lock = threading.Lock()
        fail = SimpleNamespace(timeout=False, error=None, blocked=[])
        fail_lock = threading.Lock()

        def set_pending(comp, namespace, op):
            with pending_lock:
                pending[comp.name] = (namespace, op)

        def clear_pending(comp):
            with pending_lock:
                pending.pop(comp.name, None)

        def snapshot_blocked():
            with pending_lock:
                return sorted(
                    (name, ns, op) for name, (ns, op) in pending.items()
                )

        def worker(comp: Component):
            try:
                self._run_init(comp, set_pending, clear_pending)
                limit = comp.max_steps if comp.max_steps is not None else max_steps
                while not self._stop.is_set():
                    if limit is not None and steps[comp.name] >= limit:
                        break
                    self._run_step(comp, set_pending, clear_pending)
                    steps[comp.name] += 1
            except ChannelPoisoned:
                pass
            except ChannelTimeout as exc:
                # our own pending entry was cleared on unwind; re-add it
                me = (comp.name, exc.namespace, exc.op)
                with fail_lock:
                    if fail.error is None:
                        if not fail.timeout:
                            fail.timeout = True
                            fail.blocked = snapshot_blocked()
                        if me not in fail.blocked:
                            fail.blocked.append(me)
                            fail.blocked.sort()
                self.registry.poison()
            except Exception as exc:  # body errors fail the whole collection fast
                with fail_lock:
                    if fail.error is None and not fail.timeout:
                        fail.error = exc
                self.registry.poison()
            finally:
                clear_pending(comp)

        threads = [
            threading.Thread(target=worker, args=(c,), name=f"component-{c.name}",
                             daemon=True)
            for c in self.components
        ]
        for t in threads:
            t.start()

        # Supervisor: wait for workers; after a stop request, poison once every
        # surviving worker is parked in a blocking channel op.
        while any(t.is_alive() for t in threads):
            if self._stop.is_set():
                alive = [t for t in threads if t.is_alive()]
                with pending_lock:
                    parked = len(pending)
                if alive and parked >= len(alive):
                    self.registry.poison()
                    break
            time.sleep(0.005)
        deadline = time.monotonic() + timeout + 5.0
        for t in threads:
            t.join(max(0.0, deadline - time.monotonic()))
        if any(t.is_alive() for t in threads):
            # last resort: release anything still parked so join can finish
            self.registry.poison()
            for t in threads:
                t.join(timeout)

        if fail.error is not None:
            return RunReport("error", steps, error=fail.error)
        if fail.timeout:
            return RunReport("timeout", steps, blocked_on=fail.blocked)
        if self._stop.is_set():
            return RunReport("stopped", steps)
        return RunReport("completed", steps)

    # -- body execution -----------------------------------------------------

    def _publish(self, comp, internal, value, set_pending, clear_pending,
                 init=False):
        subject = comp.subjects[internal]
        if init:
            subject.initialise_state(value)
        else:
            set_pending(comp, subject.namespace, "publish")
            try:
                subject.publish(value)
            finally:
                clear_pending(comp)
        if comp.logger is not None:
            comp.logger.record(internal, value)

    def _fetch(self, comp, internal, set_pending, clear_pending):
        observer = comp.observers[internal]
        set_pending(comp, observer.namespace, "observe")
        try:
            return observer.observe()
        finally:
            clear_pending(comp)

    def _run_body(self, comp, body, set_pending, clear_pending, init):
        if body is None:
            return
        record = comp.logger.record if comp.logger is not None else lambda t, v: None
        if isinstance(body, NativeBody):
            inputs = {
                name: self._fetch(comp, name, set_pending, clear_pending)
                for name in sorted(body.reads)
            }
            ctx = SimpleNamespace(record=record)
            outputs = body.fn(inputs, ctx) or {}
            for name, value in outputs.items():
                self._publish(comp, name, value, set_pending,
                              clear_pending, init=init)
            return
        env = dsl.EvalEnv(
            subcomponents=comp.subcomponents,
            fetch=lambda name: self._fetch(comp, name, set_pending, clear_pending),
            on_write=lambda name, value: self._publish(
                comp, name, value, set_pending, clear_pending, init=init
            ),
        )
        dsl.evaluate(body.ast, env, io_sets=body.io_sets)

    def _run_init(self, comp, set_pending, clear_pending):
        self._run_body(comp, comp.init_body, set_pending, clear_pending, init=True)

    def _run_step(self, comp, set_pending, clear_pending):
        self._run_body(comp, comp.step_body, set_pending, clear_pending, init=False)

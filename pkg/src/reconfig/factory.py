"""Planner and builder: from a validated definition to a live architecture.

Planning decides the module graph. Under the per-component granularity the
corpus types needed by the definition are partitioned into:

* one shared module per group of ``file``-declared classes (reference closures
  that overlap are merged, so every type keeps a single defining module),
* one interface module per distinct (signature, version), exporting the
  signature together with whatever its closure drags in that is not already
  shared and not itself a declared signature,
* one implementation module per component, exporting the private remainder of
  the content closure.

Each component's info module then imports its content closure, its declared
signatures, and the shared-file closure, wired to exactly those modules. Two
components that exchange a type resolve it to one common module precisely
when the type is interface-visible or file-declared; anything else stays a
private copy per component, which is what makes undeclared exchange fail at
invocation time.

Under the single-loader granularity everything collapses into one resource
module and one info module, which forbids any coexistence of versions.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .adl import AdlBinding, AdlDefinition, validate
from .corpus import CorpusStore, TypeRef, VersionTag
from .errors import InstantiationError, UnknownComponent, UnknownPort, VersionConflict
from .model import (
    BindingRecord,
    ComponentInstance,
    PortSpec,
    bind,
    check_binding,
    check_route,
    new_composite,
    new_primitive,
)
from .modules import ExportDecl, ImportDecl, InfoModule, ModuleId, ModuleManager, ResourceModule

Pair = tuple[str, VersionTag]


class Granularity(Enum):
    SINGLE_LOADER = "single"
    PER_COMPONENT = "per-component"


def parse_granularity(text: str) -> Granularity:
    if text == "single":
        return Granularity.SINGLE_LOADER
    if text == "per-component":
        return Granularity.PER_COMPONENT
    if text == "selective":
        # Reserved: per-component opt-in selection of reloadable components.
        raise NotImplementedError("granularity 'selective' is reserved and not implemented")
    raise ValueError(f"unknown granularity {text!r}")


@dataclass(frozen=True)
class ResourcePlan:
    label: str
    exports: tuple[Pair, ...]


@dataclass(frozen=True)
class InfoPlan:
    component: str
    imports: tuple[Pair, ...]
    providers: tuple[str, ...]


@dataclass(frozen=True)
class ModulePlan:
    granularity: Granularity
    resources: tuple[ResourcePlan, ...]
    infos: tuple[InfoPlan, ...]
    wiring: dict[tuple[str, str], str]      # (component, type name) -> module label
    shared_types: frozenset[Pair]
    itf_types: frozenset[Pair]


def _pair_str(pair: Pair) -> str:
    return f"{pair[0]}@{pair[1]}"


def _sorted_pairs(pairs) -> tuple[Pair, ...]:
    return tuple(sorted(pairs, key=lambda p: (p[0], p[1].key)))


def _resolve_pair(corpus: CorpusStore, name: str, version: Optional[VersionTag]) -> Pair:
    td = corpus.lookup(TypeRef(name, version))
    return (td.name, td.version)


def _merge_imports(into: dict[str, VersionTag], pairs, where: str) -> None:
    for name, version in pairs:
        existing = into.get(name)
        if existing is not None and existing != version:
            raise VersionConflict(name, existing, version, where)
        into[name] = version


def _shared_groups(definition: AdlDefinition, corpus: CorpusStore) -> list[tuple[tuple[Pair, ...], set[Pair]]]:
    """Group file declarations by overlapping closures; one module per group."""
    roots: list[Pair] = []
    for comp in definition.components:
        for fname, fver in comp.files:
            pair = _resolve_pair(corpus, fname, fver)
            if pair not in roots:
                roots.append(pair)
    groups: list[tuple[set[Pair], set[Pair]]] = []
    for root in sorted(roots, key=lambda p: (p[0], p[1].key)):
        types = corpus.closure([TypeRef(*root)])
        overlapping = [g for g in groups if g[1] & types]
        merged_roots = {root}
        merged_types = set(types)
        for g in overlapping:
            merged_roots |= g[0]
            merged_types |= g[1]
            groups.remove(g)
        groups.append((merged_roots, merged_types))
    return [(_sorted_pairs(r), t) for r, t in
            sorted(groups, key=lambda g: _sorted_pairs(g[0]))]


def plan_modules(definition: AdlDefinition, granularity: Granularity,
                 corpus: CorpusStore) -> ModulePlan:
    """Compute the module graph for a definition that validates cleanly."""
    diags = validate(definition, corpus)
    if diags:
        raise ValueError(f"definition has {len(diags)} diagnostics; first: {diags[0].render()}")

    sig_pairs: list[Pair] = []
    comp_sigs: dict[str, list[Pair]] = {}

    def collect_sigs(owner: str, interfaces) -> None:
        pairs = []
        for itf in interfaces:
            pair = _resolve_pair(corpus, itf.signature, itf.version)
            pairs.append(pair)
            if pair not in sig_pairs:
                sig_pairs.append(pair)
        comp_sigs[owner] = pairs

    collect_sigs(definition.name, definition.interfaces)
    for comp in definition.components:
        collect_sigs(comp.name, comp.interfaces)

    if granularity is Granularity.SINGLE_LOADER:
        return _plan_single(definition, corpus, comp_sigs)

    groups = _shared_groups(definition, corpus)
    shared_types: set[Pair] = set()
    for _, types in groups:
        shared_types |= types

    # Interface modules: assignment order is lexicographic, so a type referenced
    # by two signatures lands in exactly one module, deterministically.
    sig_set = set(sig_pairs)
    itf_exports: dict[Pair, set[Pair]] = {}
    assigned: set[Pair] = set()
    for sig in _sorted_pairs(sig_pairs):
        if sig in shared_types:
            continue  # file declarations take precedence; no separate module
        closure = corpus.closure([TypeRef(*sig)])
        exports = {sig} | (closure - shared_types - sig_set - assigned)
        assigned |= exports
        itf_exports[sig] = exports
    itf_types = set(assigned)

    resources: list[ResourcePlan] = []
    for roots, types in groups:
        label = f"shared({','.join(_pair_str(r) for r in roots)})"
        resources.append(ResourcePlan(label, _sorted_pairs(types)))
    for sig, exports in itf_exports.items():
        resources.append(ResourcePlan(f"itf({_pair_str(sig)})", _sorted_pairs(exports)))

    pair_label: dict[Pair, str] = {}
    for rp in resources:
        for pair in rp.exports:
            pair_label[pair] = rp.label

    infos: list[InfoPlan] = []
    wiring: dict[tuple[str, str], str] = {}

    for comp in definition.components:
        content_pair = _resolve_pair(corpus, *comp.content)
        content_closure = corpus.closure([TypeRef(*content_pair)])
        impl_exports = content_closure - shared_types - itf_types
        impl_label = f"impl({comp.name}:{_pair_str(content_pair)})"
        if impl_exports:
            resources.append(ResourcePlan(impl_label, _sorted_pairs(impl_exports)))

        imports: dict[str, VersionTag] = {}
        _merge_imports(imports, content_closure, comp.name)
        _merge_imports(imports, comp_sigs[comp.name], comp.name)
        for fname, fver in comp.files:
            file_pair = _resolve_pair(corpus, fname, fver)
            _merge_imports(imports, corpus.closure([TypeRef(*file_pair)]), comp.name)

        providers: set[str] = set()
        for name, version in imports.items():
            pair = (name, version)
            label = impl_label if pair in impl_exports else pair_label[pair]
            wiring[(comp.name, name)] = label
            providers.add(label)
        infos.append(InfoPlan(comp.name, _sorted_pairs(imports.items()),
                              tuple(sorted(providers))))

    if definition.interfaces:
        imports = {}
        _merge_imports(imports, comp_sigs[definition.name], definition.name)
        providers = set()
        for name, version in imports.items():
            label = pair_label[(name, version)]
            wiring[(definition.name, name)] = label
            providers.add(label)
        infos.append(InfoPlan(definition.name, _sorted_pairs(imports.items()),
                              tuple(sorted(providers))))

    resources.sort(key=lambda rp: rp.label)
    return ModulePlan(Granularity.PER_COMPONENT, tuple(resources), tuple(infos),
                      wiring, frozenset(shared_types), frozenset(itf_types))


def _plan_single(definition: AdlDefinition, corpus: CorpusStore,
                 comp_sigs: dict[str, list[Pair]]) -> ModulePlan:
    needed: dict[str, VersionTag] = {}
    for comp in definition.components:
        content_pair = _resolve_pair(corpus, *comp.content)
        _merge_imports(needed, corpus.closure([TypeRef(*content_pair)]), comp.name)
        _merge_imports(needed, comp_sigs[comp.name], comp.name)
        for fname, fver in comp.files:
            pair = _resolve_pair(corpus, fname, fver)
            _merge_imports(needed, corpus.closure([TypeRef(*pair)]), comp.name)
    _merge_imports(needed, comp_sigs[definition.name], definition.name)

    pairs = _sorted_pairs(needed.items())
    resources = (ResourcePlan("all", pairs),)
    infos = (InfoPlan(definition.name, pairs, ("all",)),)
    wiring = {}
    owners = [c.name for c in definition.components] + [definition.name]
    for owner in owners:
        for name, _ in pairs:
            wiring[(owner, name)] = "all"
    return ModulePlan(Granularity.SINGLE_LOADER, resources, infos, wiring,
                      frozenset(), frozenset())


def render_plan(plan: ModulePlan) -> str:
    """Deterministic text report: RESOURCE lines then INFO lines, sorted."""
    lines = []
    for rp in sorted(plan.resources, key=lambda r: r.label):
        lines.append(f"RESOURCE {rp.label}: " + ", ".join(_pair_str(p) for p in rp.exports))
    for ip in sorted(plan.infos, key=lambda i: i.component):
        lines.append(f"INFO {ip.component}: imports "
                     + ", ".join(_pair_str(p) for p in ip.imports)
                     + " wired-to " + ", ".join(ip.providers))
    return "\n".join(lines) + "\n"


class ArchitectureInstance:
    """A built architecture: component tree, bindings, and its module graph."""

    def __init__(self, definition: AdlDefinition, plan: ModulePlan, mgr: ModuleManager,
                 corpus: CorpusStore, label_ids: dict[str, ModuleId],
                 info_ids: dict[str, ModuleId], components: dict[str, ComponentInstance],
                 root: ComponentInstance, bindings: list[BindingRecord]):
        self.definition = definition
        self.granularity = plan.granularity
        self.plan = plan
        self.mgr = mgr
        self.corpus = corpus
        self.label_ids = dict(label_ids)
        self.label_exports: dict[str, set[Pair]] = {
            rp.label: set(rp.exports) for rp in plan.resources
        }
        self.info_ids = dict(info_ids)
        self.components = dict(components)
        self.root = root
        self.bindings = bindings
        self.shared_types = set(plan.shared_types)
        self.itf_types = set(plan.itf_types)
        self.private_labels: dict[str, list[str]] = {}
        for rp in plan.resources:
            if rp.label.startswith("impl("):
                owner = rp.label[len("impl("):].split(":", 1)[0]
                self.private_labels.setdefault(owner, []).append(rp.label)
        self.trace: list = []
        self.swaps: list = []
        self.in_call = False
        self._seq = itertools.count()

    def next_seq(self) -> int:
        return next(self._seq)

    def component(self, name: str) -> ComponentInstance:
        inst = self.components.get(name)
        if inst is None:
            raise UnknownComponent(name)
        return inst

    def find_port(self, spec: str):
        comp_name, sep, port_name = spec.partition(".")
        if not sep:
            raise UnknownPort(spec, "")
        comp = self.component(comp_name)
        port = comp.port(port_name)
        if port is None:
            raise UnknownPort(comp_name, port_name)
        return port

    def binding_checks(self):
        """Re-evaluate every live binding and route against current modules."""
        results = []
        for rec in self.bindings:
            results.append((str(rec), check_binding(self.mgr, rec.client, rec.server)))
        for name, target in sorted(self.root.export_routes.items()):
            outer = self.root.port(name)
            results.append((f"this.{name} -> {target}", check_route(self.mgr, outer, target)))
        for comp in sorted(self.components.values(), key=lambda c: c.name):
            for port in comp.client_ports():
                if port.outbound_route is not None:
                    results.append((f"{port} -> this.{port.outbound_route.name}",
                                    check_route(self.mgr, port, port.outbound_route)))
        return results

    def report(self) -> str:
        """Stable full-state dump used for before/after comparisons."""
        lines = [f"architecture {self.definition.name} granularity={self.granularity.value}"]
        for name in sorted(self.components):
            comp = self.components[name]
            content = str(comp.content) if comp.content is not None else "-"
            info = str(comp.info_module) if comp.info_module is not None else "-"
            lines.append(f"component {name} kind={comp.kind.value} info={info} content={content}")
            for port in comp.interfaces:
                bound = str(port.binding.server) if port.binding is not None else "-"
                lines.append(f"  port {port.name} role={port.role.value} "
                             f"signature={port.signature}@{port.version} bound={bound}")
        for rec in sorted(self.bindings, key=str):
            lines.append(f"binding {rec}")
        for name in sorted(self.root.export_routes):
            lines.append(f"route-in this.{name} -> {self.root.export_routes[name]}")
        for comp in sorted(self.components.values(), key=lambda c: c.name):
            for port in comp.client_ports():
                if port.outbound_route is not None:
                    lines.append(f"route-out {port} -> this.{port.outbound_route.name}")
        for mid in sorted(self.mgr.live_ids()):
            mod = self.mgr.module(mid)
            if isinstance(mod, ResourceModule):
                exports = ", ".join(f"{n}@{v}" for n, v in sorted(
                    mod.exports.items(), key=lambda kv: (kv[0], kv[1].key)))
                lines.append(f"module {mid} resource exports=[{exports}]")
            else:
                assert isinstance(mod, InfoModule)
                imports = ", ".join(f"{n}@{v}" for n, v in sorted(
                    mod.imports.items(), key=lambda kv: (kv[0], kv[1].key)))
                wired = ", ".join(f"{n}->{mod.wiring[n]}" for n in sorted(mod.wiring))
                lines.append(f"module {mid} info imports=[{imports}] wiring=[{wired}]")
        return "\n".join(lines) + "\n"


def instantiate(definition: AdlDefinition, plan: ModulePlan, mgr: ModuleManager,
                corpus: CorpusStore) -> ArchitectureInstance:
    """Create modules, components, and bindings; roll back cleanly on failure.

    Any error unwinds every module this call created (forced removal in
    reverse creation order), so the manager's live set returns to its
    pre-call state, and is re-raised wrapped with the ADL location.
    """
    created: list[ModuleId] = []
    location = f"definition {definition.name}"
    try:
        label_ids: dict[str, ModuleId] = {}
        for rp in plan.resources:
            location = f"module {rp.label}"
            mid = mgr.create_resource_module(
                [ExportDecl(n, v) for n, v in rp.exports], corpus)
            label_ids[rp.label] = mid
            created.append(mid)

        info_ids: dict[str, ModuleId] = {}
        for ip in plan.infos:
            location = f"info module {ip.component}"
            mid = mgr.create_info_module(
                [ImportDecl(n, v) for n, v in ip.imports],
                providers=[label_ids[label] for label in ip.providers])
            info = mgr.module(mid)
            assert isinstance(info, InfoModule)
            for name, pid in info.wiring.items():
                # Sharing correctness: the live wiring must match the plan preview.
                assert label_ids[plan.wiring[(ip.component, name)]] == pid
            info_ids[ip.component] = mid
            created.append(mid)

        single = plan.granularity is Granularity.SINGLE_LOADER
        components: dict[str, ComponentInstance] = {}
        for comp in definition.components:
            location = f"component {comp.name} ({comp.line}:{comp.col})"
            info_id = info_ids[definition.name] if single else info_ids[comp.name]
            ports = _port_specs(corpus, comp.interfaces)
            content_pair = _resolve_pair(corpus, *comp.content)
            content = mgr.load_type(info_id, content_pair[0])
            components[comp.name] = new_primitive(mgr, comp.name, ports, content, info_id)

        location = f"definition {definition.name}"
        root_info = info_ids.get(definition.name)
        root = new_composite(mgr, definition.name, _port_specs(corpus, definition.interfaces),
                             [components[c.name] for c in definition.components],
                             info_module=root_info)
        components[definition.name] = root

        bindings: list[BindingRecord] = []
        for b in definition.bindings:
            location = f"binding {b} ({b.line}:{b.col})"
            _apply_binding(mgr, root, components, b, bindings)
        return ArchitectureInstance(definition, plan, mgr, corpus, label_ids,
                                    info_ids, components, root, bindings)
    except Exception as exc:
        for mid in reversed(created):
            mgr.remove_module(mid, force=True)
        if isinstance(exc, InstantiationError):
            raise
        raise InstantiationError(location, exc) from exc


def _port_specs(corpus: CorpusStore, interfaces) -> list[PortSpec]:
    specs = []
    for itf in interfaces:
        name, version = _resolve_pair(corpus, itf.signature, itf.version)
        specs.append(PortSpec(itf.name, itf.role, name, version))
    return specs


def _apply_binding(mgr: ModuleManager, root: ComponentInstance,
                   components: dict[str, ComponentInstance], b: AdlBinding,
                   bindings: list[BindingRecord]) -> None:
    if b.client[0] == "this":
        outer = root.port(b.client[1])
        inner = components[b.server[0]].port(b.server[1])
        result = check_route(mgr, outer, inner)
        if not result.ok:
            raise result.mismatch
        root.export_routes[outer.name] = inner
    elif b.server[0] == "this":
        child_port = components[b.client[0]].port(b.client[1])
        outer = root.port(b.server[1])
        result = check_route(mgr, child_port, outer)
        if not result.ok:
            raise result.mismatch
        child_port.outbound_route = outer
    else:
        client = components[b.client[0]].port(b.client[1])
        server = components[b.server[0]].port(b.server[1])
        bindings.append(bind(mgr, client, server))

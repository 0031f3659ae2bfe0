"""Component model: primitives, composites, ports, and primitive bindings.

Components expose named client/server ports typed by an interface signature.
A primitive carries a content type (a class defined through its own info
module); a composite encapsulates children and may share a child with other
composites, so containment is a DAG, never a tree. Binding a client port to a
server port is only legal when both ends resolve the signature to the *same*
defined type, i.e. the same (name, defining module) pair.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Sequence

from .corpus import TypeKind, VersionTag
from .errors import (
    AlreadyBound,
    ContainmentCycle,
    ContentNotAClass,
    CrossBindingExists,
    EmptyComposite,
    MissingMethod,
    NotAChild,
    RoleError,
    SignatureNotInterface,
    TypeMismatch,
    UnknownBinding,
    UnsupportedBindingKind,
)
from .modules import DefinedType, ModuleId, ModuleManager, same_type


class Role(Enum):
    CLIENT = "client"
    SERVER = "server"


class ComponentKind(Enum):
    PRIMITIVE = "primitive"
    COMPOSITE = "composite"


class BindingKind(Enum):
    PRIMITIVE = "primitive"
    COMPOSITE = "composite"


@dataclass(frozen=True)
class PortSpec:
    """Input description of a port before it is attached to an owner."""

    name: str
    role: Role
    signature: str
    version: VersionTag


class InterfacePort:
    """A named access point of one component."""

    def __init__(self, spec: PortSpec, owner: "ComponentInstance"):
        self.name = spec.name
        self.role = spec.role
        self.signature = spec.signature
        self.version = spec.version
        self.owner = owner
        self.binding: Optional[BindingRecord] = None   # client side, at most one
        self.inbound: list[BindingRecord] = []         # server side
        self.outbound_route: Optional[InterfacePort] = None  # child client -> composite client

    def __str__(self) -> str:
        return f"{self.owner.name}.{self.name}"


class BindingRecord:
    """A live primitive binding from a client port to a server port."""

    def __init__(self, client: InterfacePort, server: InterfacePort):
        self.client = client
        self.server = server
        self.live = True

    def __str__(self) -> str:
        return f"{self.client} -> {self.server}"


class ComponentInstance:
    def __init__(self, name: str, kind: ComponentKind, ports: Sequence[PortSpec],
                 content: Optional[DefinedType], info_module: Optional[ModuleId]):
        self.name = name
        self.kind = kind
        port_names = [spec.name for spec in ports]
        if len(port_names) != len(set(port_names)):
            raise ValueError(f"component {name} declares a port name twice")
        self.interfaces = [InterfacePort(spec, self) for spec in ports]
        self.content = content
        self.children: list[ComponentInstance] = []
        self.parents: list[ComponentInstance] = []
        self.info_module = info_module
        self.export_routes: dict[str, InterfacePort] = {}  # composite server port -> child server port

    def port(self, name: str) -> Optional[InterfacePort]:
        for p in self.interfaces:
            if p.name == name:
                return p
        return None

    def server_ports(self) -> list[InterfacePort]:
        return [p for p in self.interfaces if p.role is Role.SERVER]

    def client_ports(self) -> list[InterfacePort]:
        return [p for p in self.interfaces if p.role is Role.CLIENT]

    def descendants(self) -> set["ComponentInstance"]:
        seen: set[ComponentInstance] = set()
        work = list(self.children)
        while work:
            node = work.pop()
            if node in seen:
                continue
            seen.add(node)
            work.extend(node.children)
        return seen

    def __repr__(self) -> str:
        return f"<{self.kind.value} {self.name}>"


def _check_signature_kinds(mgr: ModuleManager, inst: ComponentInstance) -> None:
    for port in inst.interfaces:
        loaded = mgr.load_type(inst.info_module, port.signature)
        if loaded.definition.kind is not TypeKind.INTERFACE:
            raise SignatureNotInterface(port.signature)


def new_primitive(mgr: ModuleManager, name: str, ports: Sequence[PortSpec],
                  content: DefinedType, info_module: ModuleId) -> ComponentInstance:
    """Create a primitive component around a content class.

    Every server port's interface methods must be implemented by the content
    (same method name, same parameter type names); the conformance check uses
    the definitions loaded through the component's own info module.
    """
    if content.definition.kind is not TypeKind.CLASS:
        raise ContentNotAClass(content.name)
    inst = ComponentInstance(name, ComponentKind.PRIMITIVE, ports, content, info_module)
    _check_signature_kinds(mgr, inst)
    implemented = {(m.name, m.params) for m in content.definition.methods}
    for port in inst.server_ports():
        sig = mgr.load_type(info_module, port.signature)
        for method in sig.definition.methods:
            if (method.name, method.params) not in implemented:
                raise MissingMethod(port.signature, method.name)
    return inst


def new_composite(mgr: ModuleManager, name: str, ports: Sequence[PortSpec],
                  children: Iterable[ComponentInstance],
                  info_module: Optional[ModuleId] = None) -> ComponentInstance:
    """Create a composite around existing children (possibly shared)."""
    child_list = list(children)
    if not child_list:
        raise EmptyComposite(name)
    if ports and info_module is None:
        raise ValueError(f"composite {name} declares ports but has no info module")
    inst = ComponentInstance(name, ComponentKind.COMPOSITE, ports, None, info_module)
    if ports:
        _check_signature_kinds(mgr, inst)
    for child in child_list:
        add_child(inst, child)
    return inst


@dataclass(frozen=True)
class BindingCheck:
    """Outcome of a bind-time type check; carries the mismatch when not ok."""

    ok: bool
    mismatch: Optional[TypeMismatch] = None


def _compare_endpoint_types(mgr: ModuleManager, a: InterfacePort, b: InterfacePort) -> BindingCheck:
    ta = mgr.load_type(a.owner.info_module, a.signature)
    tb = mgr.load_type(b.owner.info_module, b.signature)
    if not same_type(ta, tb):
        detail = "" if ta.name == tb.name else f"{ta.name} vs {tb.name}"
        return BindingCheck(False, TypeMismatch(ta.name, ta.defined_by, tb.defined_by, detail))
    if a.version != b.version:
        return BindingCheck(False, TypeMismatch(
            ta.name, ta.defined_by, tb.defined_by,
            f"declared versions differ: {a.version} vs {b.version}"))
    return BindingCheck(True)


def check_binding(mgr: ModuleManager, client: InterfacePort, server: InterfacePort) -> BindingCheck:
    """Predict whether a binding will be type-safe without creating it.

    Both ends load their declared signature through their own info module; the
    check passes only when that produces one identical defined type and the
    declared versions agree.
    """
    if client.role is not Role.CLIENT:
        raise RoleError(f"{client} is not a client port")
    if server.role is not Role.SERVER:
        raise RoleError(f"{server} is not a server port")
    return _compare_endpoint_types(mgr, client, server)


def check_route(mgr: ModuleManager, outer: InterfacePort, inner: InterfacePort) -> BindingCheck:
    """Type check for a composite export route (same-role pair)."""
    if outer.role is not inner.role:
        raise RoleError(f"route {outer} -> {inner} must connect same-role ports")
    return _compare_endpoint_types(mgr, outer, inner)


def bind(mgr: ModuleManager, client: InterfacePort, server: InterfacePort,
         kind: BindingKind = BindingKind.PRIMITIVE) -> BindingRecord:
    """Bind a client port to a server port after a successful check."""
    if kind is not BindingKind.PRIMITIVE:
        raise UnsupportedBindingKind(kind.value)
    result = check_binding(mgr, client, server)
    if not result.ok:
        raise result.mismatch
    if client.binding is not None:
        raise AlreadyBound(str(client))
    record = BindingRecord(client, server)
    client.binding = record
    server.inbound.append(record)
    return record


def unbind(record: BindingRecord) -> None:
    if not record.live or record.client.binding is not record:
        raise UnknownBinding()
    record.client.binding = None
    record.server.inbound.remove(record)
    record.live = False


def add_child(composite: ComponentInstance, child: ComponentInstance) -> None:
    """Attach a child; the same child may live under several composites."""
    if composite.kind is not ComponentKind.COMPOSITE:
        raise RoleError(f"{composite.name} is not a composite")
    if child is composite or composite in child.descendants():
        raise ContainmentCycle(composite.name, child.name)
    if composite in child.parents:
        raise ValueError(f"{child.name} is already a child of {composite.name}")
    composite.children.append(child)
    child.parents.append(composite)


def _bindings_touching(components: set[ComponentInstance]) -> list[BindingRecord]:
    records: list[BindingRecord] = []
    for comp in components:
        for port in comp.interfaces:
            if port.binding is not None and port.binding not in records:
                records.append(port.binding)
            for rec in port.inbound:
                if rec not in records:
                    records.append(rec)
    return records


def remove_child(composite: ComponentInstance, child: ComponentInstance) -> None:
    """Detach a child from one parent, leaving other memberships alone.

    Refused while any live binding or export route crosses the child's
    boundary; bindings wholly inside the child (or wholly outside) are fine.
    """
    if child not in composite.children:
        raise NotAChild(child.name, composite.name)
    subtree = {child} | child.descendants()
    crossing: list[object] = [rec for rec in _bindings_touching(subtree)
                              if (rec.client.owner in subtree) != (rec.server.owner in subtree)]
    for target in composite.export_routes.values():
        if target.owner in subtree:
            crossing.append((composite.name, target))
    for comp in subtree:
        for port in comp.interfaces:
            if port.outbound_route is not None and port.outbound_route.owner not in subtree:
                crossing.append((port, port.outbound_route))
    if crossing:
        raise CrossBindingExists(crossing)
    composite.children.remove(child)
    child.parents.remove(composite)

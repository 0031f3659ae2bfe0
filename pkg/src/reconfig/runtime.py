"""Simulated invocation, receiver-side identity checks, and hot swap.

Calls traverse the architecture along bindings. Crossing into a component
pushes that component's info module onto the execution context (and pops it on
the way out, error or not), so the trace records exactly which module governed
each stretch of the call. On entry, every argument is checked on the receiver
side: the declared parameter type name is resolved through the callee's own
wiring and must be the *same defined type* as the argument's runtime type. A
parameter declared as the universal ``object`` defers the check to the
argument's concrete type name, which is how an undeclared exchanged class
surfaces as a mismatch at the boundary.

Content behavior is echo-style: a component that receives a call forwards one
call through each of its bound client ports (the first method of the port's
signature, with arguments constructed in its own context) and returns a fresh
value of the declared return type, constructed in its own context. That is
enough to exercise every identity and context phenomenon while staying
deterministic.

Implementation swap replaces a primitive's content with a new version behind
untouched interface modules: a fresh resource module is created, only the
content entry of the component's wiring moves, and the old defined type (and
its module) live on for as long as anything references them.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional, Sequence, Union

from .adl import AdlComponent
from .corpus import OBJECT_TYPE, CorpusStore, TypeKind, TypeRef, VersionTag
from .errors import (
    ArityError,
    CallDepthExceeded,
    ContentNotAClass,
    DuplicateComponent,
    GranularityForbidsSwap,
    MissingMethod,
    NotAPrimitive,
    NotFound,
    ReconfigDuringCall,
    TypeMismatch,
    UnboundInterface,
    UnknownMethod,
    UnresolvableExport,
)
from .factory import (
    ArchitectureInstance,
    Granularity,
    _merge_imports,
    _pair_str,
    _resolve_pair,
    _sorted_pairs,
)
from .model import (
    BindingRecord,
    ComponentInstance,
    ComponentKind,
    InterfacePort,
    PortSpec,
    Role,
    add_child,
    bind,
    check_binding,
    new_primitive,
    remove_child,
    unbind,
)
from .modules import DefinedType, ExportDecl, ImportDecl, ModuleId, same_type

MAX_CALL_DEPTH = 64

ENTER = "ENTER"
EXIT = "EXIT"
CHECK = "CHECK"
SWAP = "SWAP"


@dataclass(frozen=True)
class Value:
    """A runtime value: its defined type plus an opaque payload."""

    rt_type: DefinedType
    payload: str

    def __str__(self) -> str:
        return f"{self.rt_type}({self.payload})"


@dataclass(frozen=True)
class TraceEvent:
    seq: int
    kind: str
    args: tuple[str, ...]

    def render(self) -> str:
        return f"{self.seq} {self.kind} {' '.join(self.args)}".rstrip()


@dataclass(frozen=True)
class SwapRecord:
    component: str
    old_content: DefinedType
    new_content: DefinedType
    new_module: ModuleId


@dataclass(frozen=True)
class BenchReport:
    calls: int
    with_interceptor_time: float
    bookkeeping_ops: int

    def render(self) -> str:
        return (f"calls={self.calls} bookkeeping_ops={self.bookkeeping_ops} "
                f"time_s={self.with_interceptor_time:.6f}")


class ExecutionContext:
    """Per-invocation stack of context modules; pushes and pops balance."""

    def __init__(self):
        self._stack: list[ModuleId] = []

    def push(self, module_id: ModuleId) -> None:
        self._stack.append(module_id)

    def pop(self) -> ModuleId:
        return self._stack.pop()

    @property
    def depth(self) -> int:
        return len(self._stack)

    @property
    def current(self) -> Optional[ModuleId]:
        return self._stack[-1] if self._stack else None


def _event(arch: ArchitectureInstance, kind: str, *args: str) -> None:
    arch.trace.append(TraceEvent(arch.next_seq(), kind, args))


def serialize_trace(arch: ArchitectureInstance) -> str:
    return "\n".join(event.render() for event in arch.trace) + ("\n" if arch.trace else "")


def _client_target(cport: InterfacePort) -> InterfacePort:
    """Follow a client port to the server port it ultimately reaches."""
    visited: set[int] = set()
    port = cport
    while True:
        if id(port) in visited:
            raise UnboundInterface(port.owner.name, port.name)
        visited.add(id(port))
        if port.binding is not None:
            return port.binding.server
        if port.outbound_route is not None:
            port = port.outbound_route
            continue
        raise UnboundInterface(port.owner.name, port.name)


def _receiver_check(arch: ArchitectureInstance, comp: ComponentInstance,
                    declared: str, arg: Value) -> None:
    lookup = arg.rt_type.name if declared == OBJECT_TYPE else declared
    local = arch.mgr.load_type(comp.info_module, lookup)
    ok = same_type(local, arg.rt_type)
    _event(arch, CHECK, lookup, "ok" if ok else "mismatch")
    if not ok:
        raise TypeMismatch(lookup, arg.rt_type.defined_by, local.defined_by)


def _call_server(arch: ArchitectureInstance, ctx: ExecutionContext,
                 port: InterfacePort, method_name: str, args: Sequence[Value],
                 depth: int) -> Optional[Value]:
    if depth > MAX_CALL_DEPTH:
        raise CallDepthExceeded(MAX_CALL_DEPTH)
    comp = port.owner
    ctx.push(comp.info_module)
    _event(arch, ENTER, comp.name, str(comp.info_module))
    try:
        signature = arch.mgr.load_type(comp.info_module, port.signature)
        method = signature.definition.method(method_name)
        if method is None:
            raise UnknownMethod(port.signature, method_name)
        if len(method.params) != len(args):
            raise ArityError(method_name, len(method.params), len(args))
        for param, arg in zip(method.params, args):
            _receiver_check(arch, comp, param, arg)

        if comp.kind is ComponentKind.COMPOSITE:
            inner = comp.export_routes.get(port.name)
            if inner is None:
                raise UnboundInterface(comp.name, port.name)
            return _call_server(arch, ctx, inner, method_name, args, depth + 1)

        for cport in comp.client_ports():
            target = _client_target(cport)
            fwd_sig = arch.mgr.load_type(comp.info_module, cport.signature)
            if not fwd_sig.definition.methods:
                continue
            fwd = fwd_sig.definition.methods[0]
            fwd_args = [Value(arch.mgr.load_type(comp.info_module, p), f"{comp.name}:{p}")
                        for p in fwd.params]
            _call_server(arch, ctx, target, fwd.name, fwd_args, depth + 1)

        if method.returns == "void":
            return None
        return Value(arch.mgr.load_type(comp.info_module, method.returns),
                     f"{comp.name}.{method_name}")
    finally:
        ctx.pop()
        _event(arch, EXIT, comp.name)


def invoke(arch: ArchitectureInstance, component: str, port: str, method: str,
           args: Sequence[Value] = ()) -> Optional[Value]:
    """Invoke a method on a component port.

    A server port is entered directly (a composite export routes inward); a
    client port routes straight through its binding, which models a call
    originating inside the owning component. The context stack is balanced
    even on error paths.
    """
    if arch.in_call:
        raise ReconfigDuringCall()
    arch.in_call = True
    ctx = ExecutionContext()
    try:
        target = arch.find_port(f"{component}.{port}")
        if target.role is Role.CLIENT:
            target = _client_target(target)
        return _call_server(arch, ctx, target, method, list(args), 1)
    finally:
        arch.in_call = False
        assert ctx.depth == 0, "execution context must balance"


def make_value(arch: ArchitectureInstance, owner: ComponentInstance, type_name: str) -> Value:
    """Construct a value of ``type_name`` in the owner component's context."""
    return Value(arch.mgr.load_type(owner.info_module, type_name), type_name)


def _guard_reconfig(arch: ArchitectureInstance, operation: str) -> None:
    if arch.in_call:
        raise ReconfigDuringCall()
    if arch.granularity is not Granularity.PER_COMPONENT:
        raise GranularityForbidsSwap(operation)


def swap_implementation(arch: ArchitectureInstance, component: str,
                        new_content: tuple[str, Union[str, VersionTag]],
                        corpus: CorpusStore) -> SwapRecord:
    """Replace a primitive's content with another version, live.

    Interface and shared modules are untouched, so every existing binding
    stays type-safe; the old content type and its module persist, letting the
    two versions coexist until the old module is removed explicitly.
    """
    _guard_reconfig(arch, "swap")
    comp = arch.component(component)
    if comp.kind is not ComponentKind.PRIMITIVE:
        raise NotAPrimitive(component)
    name, version = new_content
    tag = version if isinstance(version, VersionTag) else VersionTag(str(version))
    try:
        new_td = corpus.lookup(TypeRef(name, tag))
    except NotFound:
        raise UnresolvableExport(name, tag) from None
    if new_td.kind is not TypeKind.CLASS:
        raise ContentNotAClass(name)
    implemented = {(m.name, m.params) for m in new_td.methods}
    for port in comp.server_ports():
        sig = arch.mgr.load_type(comp.info_module, port.signature)
        for method in sig.definition.methods:
            if (method.name, method.params) not in implemented:
                raise MissingMethod(port.signature, method.name)

    exports = corpus.closure([TypeRef(name, tag)]) - arch.shared_types - arch.itf_types
    new_mid = arch.mgr.create_resource_module(
        [ExportDecl(n, v) for n, v in _sorted_pairs(exports)], corpus)
    old = comp.content
    try:
        arch.mgr.rewire_import(comp.info_module, drop=old.name,
                               add=ImportDecl(name, tag), provider=new_mid)
    except Exception:
        arch.mgr.remove_module(new_mid, force=True)
        raise
    comp.content = arch.mgr.load_type(comp.info_module, name)

    label = f"swap{len(arch.swaps)}({component}:{_pair_str((name, tag))})"
    arch.label_ids[label] = new_mid
    arch.label_exports[label] = set(exports)
    arch.private_labels.setdefault(component, []).append(label)
    record = SwapRecord(component, old, comp.content, new_mid)
    arch.swaps.append(record)
    _event(arch, SWAP, component, str(old), str(comp.content))
    broken = [desc for desc, chk in arch.binding_checks() if not chk.ok]
    assert not broken, f"swap must leave bindings intact: {broken}"
    return record


def rebind(arch: ArchitectureInstance, client_spec: str, server_spec: str) -> BindingRecord:
    """Re-point a client port at a new server port, atomically.

    The new target is checked first; on mismatch the old binding is untouched.
    """
    if arch.in_call:
        raise ReconfigDuringCall()
    cport = arch.find_port(client_spec)
    sport = arch.find_port(server_spec)
    result = check_binding(arch.mgr, cport, sport)
    if not result.ok:
        raise result.mismatch
    old = cport.binding
    if old is not None:
        unbind(old)
        arch.bindings.remove(old)
    record = bind(arch.mgr, cport, sport)
    arch.bindings.append(record)
    return record


def bind_ports(arch: ArchitectureInstance, client_spec: str, server_spec: str) -> BindingRecord:
    if arch.in_call:
        raise ReconfigDuringCall()
    record = bind(arch.mgr, arch.find_port(client_spec), arch.find_port(server_spec))
    arch.bindings.append(record)
    return record


def unbind_port(arch: ArchitectureInstance, client_spec: str) -> None:
    if arch.in_call:
        raise ReconfigDuringCall()
    cport = arch.find_port(client_spec)
    record = cport.binding
    if record is None:
        raise UnboundInterface(cport.owner.name, cport.name)
    unbind(record)
    arch.bindings.remove(record)


def add_component(arch: ArchitectureInstance, component: AdlComponent,
                  corpus: CorpusStore) -> ComponentInstance:
    """Add a primitive described by an ADL fragment to the root composite.

    Module planning follows the same precedence as the factory: already
    planned modules are reused for any type they export, new interface and
    shared modules are created for unseen signatures and file declarations,
    and the private remainder of the content closure gets a fresh
    implementation module. Failure rolls every created module back.
    """
    _guard_reconfig(arch, "structural reconfiguration")
    if component.name in arch.components:
        raise DuplicateComponent(component.name)

    pair_label: dict[tuple[str, VersionTag], str] = {}
    for label, exports in arch.label_exports.items():
        for pair in exports:
            pair_label[pair] = label

    new_resources: list[tuple[str, set]] = []
    exported_now = set(pair_label)

    file_pairs = [_resolve_pair(corpus, n, v) for n, v in component.files]
    new_shared_types: set = set()
    for pair in _sorted_pairs(set(file_pairs)):
        if pair in pair_label or pair in {p for _, e in new_resources for p in e}:
            continue
        exports = {pair} | (corpus.closure([TypeRef(*pair)]) - exported_now)
        label = f"shared({_pair_str(pair)})"
        new_resources.append((label, exports))
        exported_now |= exports
        new_shared_types |= exports

    sig_pairs = [_resolve_pair(corpus, itf.signature, itf.version)
                 for itf in component.interfaces]
    new_itf_types: set = set()
    for pair in _sorted_pairs(set(sig_pairs)):
        if pair in exported_now:
            continue
        exports = {pair} | (corpus.closure([TypeRef(*pair)]) - exported_now)
        label = f"itf({_pair_str(pair)})"
        new_resources.append((label, exports))
        exported_now |= exports
        new_itf_types |= exports

    content_pair = _resolve_pair(corpus, *component.content)
    content_closure = corpus.closure([TypeRef(*content_pair)])
    impl_exports = (content_closure - arch.shared_types - new_shared_types
                    - arch.itf_types - new_itf_types)
    impl_label = f"impl({component.name}:{_pair_str(content_pair)})"
    if impl_exports:
        new_resources.append((impl_label, impl_exports))

    imports: dict[str, VersionTag] = {}
    _merge_imports(imports, content_closure, component.name)
    _merge_imports(imports, sig_pairs, component.name)
    for pair in file_pairs:
        _merge_imports(imports, corpus.closure([TypeRef(*pair)]), component.name)

    created: list[ModuleId] = []
    new_label_ids: dict[str, ModuleId] = {}
    try:
        for label, exports in new_resources:
            mid = arch.mgr.create_resource_module(
                [ExportDecl(n, v) for n, v in _sorted_pairs(exports)], corpus)
            new_label_ids[label] = mid
            created.append(mid)

        def label_of(pair) -> str:
            if pair in impl_exports:
                return impl_label
            for label, exports in new_resources:
                if pair in exports:
                    return label
            return pair_label[pair]

        providers = sorted({label_of((n, v)) for n, v in imports.items()})
        provider_ids = [new_label_ids.get(label) or arch.label_ids[label]
                        for label in providers]
        info_id = arch.mgr.create_info_module(
            [ImportDecl(n, v) for n, v in _sorted_pairs(imports.items())],
            providers=provider_ids)
        created.append(info_id)

        ports = [PortSpec(itf.name, itf.role, *_resolve_pair(corpus, itf.signature, itf.version))
                 for itf in component.interfaces]
        content = arch.mgr.load_type(info_id, content_pair[0])
        inst = new_primitive(arch.mgr, component.name, ports, content, info_id)
    except Exception:
        for mid in reversed(created):
            arch.mgr.remove_module(mid, force=True)
        raise

    add_child(arch.root, inst)
    arch.components[component.name] = inst
    arch.info_ids[component.name] = info_id
    arch.label_ids.update(new_label_ids)
    for label, exports in new_resources:
        arch.label_exports[label] = set(exports)
    arch.shared_types |= new_shared_types
    arch.itf_types |= new_itf_types
    if impl_exports:
        arch.private_labels.setdefault(component.name, []).append(impl_label)
    return inst


def remove_component(arch: ArchitectureInstance, name: str) -> None:
    """Remove a primitive from the root, refusing while bindings cross it.

    The component's info module and private implementation modules go away;
    interface and shared modules stay, they may serve other components.
    """
    _guard_reconfig(arch, "structural reconfiguration")
    comp = arch.component(name)
    if comp is arch.root or comp.kind is not ComponentKind.PRIMITIVE:
        raise NotAPrimitive(name)
    remove_child(arch.root, comp)
    info_id = arch.info_ids.pop(name)
    arch.mgr.remove_module(info_id, force=False)
    for label in arch.private_labels.pop(name, []):
        mid = arch.label_ids.pop(label)
        arch.label_exports.pop(label, None)
        arch.mgr.remove_module(mid, force=False)
    del arch.components[name]


def bench_interception(arch: ArchitectureInstance, n: int,
                       entry: Optional[tuple[str, str, str]] = None) -> BenchReport:
    """Run ``n`` no-op invocations and report interceptor bookkeeping.

    ``bookkeeping_ops`` counts context pushes, pops, and receiver checks; it
    is a pure function of the traversal structure, so two runs over the same
    architecture always report the same count. Wall time is informational
    only; no overhead percentage is asserted.
    """
    if n < 1:
        raise ValueError("bench needs n >= 1")
    if entry is None:
        servers = arch.root.server_ports()
        if not servers:
            raise ValueError("architecture exports no server port to bench")
        port = servers[0]
        signature = arch.mgr.load_type(arch.root.info_module, port.signature)
        if not signature.definition.methods:
            raise ValueError(f"signature {port.signature} has no methods")
        entry = (arch.root.name, port.name, signature.definition.methods[0].name)
    component, port_name, method = entry
    start = len(arch.trace)
    t0 = time.perf_counter()
    for _ in range(n):
        invoke(arch, component, port_name, method)
    elapsed = time.perf_counter() - t0
    ops = sum(1 for event in arch.trace[start:] if event.kind in (ENTER, EXIT, CHECK))
    return BenchReport(n, elapsed, ops)

from __future__ import annotations

import random

import pytest

from reconfig.adl import parse_adl, parse_component_fragment, validate
from reconfig.corpus import CorpusStore, MethodSig, TypeDef, TypeKind, TypeRef, VersionTag, load_corpus
from reconfig.errors import (
    ArityError,
    ContentNotAClass,
    CrossBindingExists,
    GranularityForbidsSwap,
    MissingMethod,
    NotAPrimitive,
    ReconfigDuringCall,
    TypeMismatch,
    UnboundInterface,
    UnknownMethod,
    UnresolvableExport,
)
from reconfig.factory import Granularity, instantiate, plan_modules
from reconfig.modules import ModuleManager, replay_live_set, same_type
from reconfig import runtime

from conftest import build_architecture, corpus_path

V = VersionTag


def test_traversal_produces_a_nested_three_deep_trace(fixtures_dir):
    arch, _, _ = build_architecture("hello.fractal.xml", "hello")
    assert runtime.invoke(arch, "HelloWorld", "r", "run") is None
    golden = (fixtures_dir / "golden" / "hello_trace.txt").read_text(encoding="utf-8")
    assert runtime.serialize_trace(arch) == golden

    enters = [e for e in arch.trace if e.kind == runtime.ENTER]
    assert len(enters) == 3
    assert len({e.args[1] for e in enters}) == 3  # three distinct context modules


def test_context_balances_even_when_the_receiver_rejects():
    arch, _, _ = build_architecture("push_opaque.fractal.xml", "pushopaque")
    value = runtime.make_value(arch, arch.component("sender"), "Message")
    with pytest.raises(TypeMismatch) as exc:
        runtime.invoke(arch, "sender", "p", "push", [value])
    assert exc.value.type_name == "Message"
    assert exc.value.left_module != exc.value.right_module
    opens = sum(1 for e in arch.trace if e.kind == runtime.ENTER)
    closes = sum(1 for e in arch.trace if e.kind == runtime.EXIT)
    assert opens == closes == 1
    assert not arch.in_call

    # the check event records the mismatch before the raise
    checks = [e for e in arch.trace if e.kind == runtime.CHECK]
    assert checks[-1].args == ("Message", "mismatch")


def test_unknown_method_and_arity_errors():
    arch, _, _ = build_architecture("hello.fractal.xml", "hello")
    with pytest.raises(UnknownMethod):
        runtime.invoke(arch, "HelloWorld", "r", "walk")
    value = runtime.make_value(arch, arch.component("client"), "Request")
    with pytest.raises(ArityError):
        runtime.invoke(arch, "HelloWorld", "r", "run", [value])


def test_invoking_through_an_unbound_port_fails():
    arch, _, _ = build_architecture("hello.fractal.xml", "hello")
    runtime.unbind_port(arch, "client.s")
    with pytest.raises(UnboundInterface):
        runtime.invoke(arch, "client", "s", "push")
    # the traversal from the export breaks at the unbound hop too
    with pytest.raises(UnboundInterface):
        runtime.invoke(arch, "HelloWorld", "r", "run")


def test_reconfiguration_is_refused_mid_call():
    arch, corpus, _ = build_architecture("hello_v1.fractal.xml", "hello_swap")
    arch.in_call = True
    try:
        with pytest.raises(ReconfigDuringCall):
            runtime.swap_implementation(arch, "server", ("ServerImpl", "2.0"), corpus)
        with pytest.raises(ReconfigDuringCall):
            runtime.invoke(arch, "HelloWorld", "r", "run")
    finally:
        arch.in_call = False


# --- swap ----------------------------------------------------------------------

def test_swap_switches_future_dispatch_to_the_new_module():
    arch, corpus, _ = build_architecture("hello_v1.fractal.xml", "hello_swap")
    old = arch.component("server").content
    before = runtime.invoke(arch, "client", "s", "handler")
    assert before.rt_type.defined_by == old.defined_by

    record = runtime.swap_implementation(arch, "server", ("ServerImpl", "2.0"), corpus)
    after = runtime.invoke(arch, "client", "s", "handler")
    assert after.rt_type.defined_by == record.new_module
    assert str(after.rt_type.definition.version) == "2.0"
    assert not same_type(record.old_content, record.new_content)
    assert record.old_content.defined_by in arch.mgr.live_ids()  # coexistence
    swaps = [e for e in arch.trace if e.kind == runtime.SWAP]
    assert len(swaps) == 1 and swaps[0].args[0] == "server"


def test_values_created_before_a_swap_still_pass_unchanged_wirings():
    arch, corpus, _ = build_architecture("hello_v1.fractal.xml", "hello_swap")
    request = runtime.make_value(arch, arch.component("client"), "Request")
    assert runtime.invoke(arch, "client", "s", "push", [request]) is None
    runtime.swap_implementation(arch, "server", ("ServerImpl", "2.0"), corpus)
    assert runtime.invoke(arch, "client", "s", "push", [request]) is None
    assert all(chk.ok for _, chk in arch.binding_checks())


def test_swap_error_cases_leave_no_trace():
    arch, corpus, _ = build_architecture("hello_v1.fractal.xml", "hello_swap")
    before = arch.report()
    pre_live = arch.mgr.live_ids()

    with pytest.raises(UnresolvableExport):
        runtime.swap_implementation(arch, "server", ("ServerImpl", "4.0"), corpus)
    with pytest.raises(ContentNotAClass):
        runtime.swap_implementation(arch, "server", ("Service", "1.0"), corpus)
    with pytest.raises(NotAPrimitive):
        runtime.swap_implementation(arch, "HelloWorld", ("ServerImpl", "2.0"), corpus)

    # a candidate lacking a required method is rejected before any module exists
    entries = {(td.name, td.version): td for td in corpus.entries()}
    sparse = TypeDef("ServerImpl", V("3.0"), TypeKind.CLASS,
                     (TypeRef("Service", V("1.0")),),
                     (MethodSig("push", ("Request",), "void"),))
    entries[(sparse.name, sparse.version)] = sparse
    bigger = CorpusStore(corpus.root, entries)
    with pytest.raises(MissingMethod):
        runtime.swap_implementation(arch, "server", ("ServerImpl", "3.0"), bigger)

    assert arch.report() == before
    assert arch.mgr.live_ids() == pre_live


def test_swap_requires_per_component_granularity():
    arch, corpus, _ = build_architecture("hello_v1.fractal.xml", "hello_swap",
                                         Granularity.SINGLE_LOADER)
    with pytest.raises(GranularityForbidsSwap):
        runtime.swap_implementation(arch, "server", ("ServerImpl", "2.0"), corpus)


# --- rebind / add / remove ------------------------------------------------------

def _two_servers_text():
    return ('<definition name="Two" version="1.0">'
            '<component name="client">'
            '<interface name="s" role="client" signature="Service" version="1.0"/>'
            '<content class="ClientImpl" version="1.0"/>'
            '<file name="Request" version="1.0"/></component>'
            '<component name="server">'
            '<interface name="s" role="server" signature="Service" version="1.0"/>'
            '<content class="ServerImpl" version="2.0"/>'
            '<file name="Request" version="1.0"/></component>'
            '<component name="server2">'
            '<interface name="s" role="server" signature="Service" version="1.0"/>'
            '<content class="ServerImpl" version="2.0"/>'
            '<file name="Request" version="1.0"/></component>'
            '<binding client="client.s" server="server.s"/>'
            '</definition>')


def _build_text(text: str, corpus: CorpusStore):
    definition = parse_adl(text)
    assert validate(definition, corpus) == []
    plan = plan_modules(definition, Granularity.PER_COMPONENT, corpus)
    return instantiate(definition, plan, ModuleManager(), corpus)


def test_rebind_moves_a_binding_atomically():
    corpus = load_corpus(corpus_path("hello"))
    arch = _build_text(_two_servers_text(), corpus)
    assert arch.bindings[0].server.owner.name == "server"
    runtime.rebind(arch, "client.s", "server2.s")
    assert len(arch.bindings) == 1
    assert arch.bindings[0].server.owner.name == "server2"
    result = runtime.invoke(arch, "client", "s", "handler")
    assert result.rt_type.defined_by == arch.component("server2").content.defined_by


def test_failed_rebind_keeps_the_old_binding():
    base = load_corpus(corpus_path("hello"))
    entries = {(td.name, td.version): td for td in base.entries()}
    # a second Service version with no method demands, and a content class
    # that does not pull the 1.0 interface into its closure
    entries[("Service", V("2.0"))] = TypeDef("Service", V("2.0"), TypeKind.INTERFACE, (), ())
    entries[("AltImpl", V("1.0"))] = TypeDef("AltImpl", V("1.0"), TypeKind.CLASS,
                                             (TypeRef("Request", V("1.0")),), ())
    corpus = CorpusStore(base.root, entries)
    text = _two_servers_text().replace(
        '<component name="server2">'
        '<interface name="s" role="server" signature="Service" version="1.0"/>'
        '<content class="ServerImpl" version="2.0"/>',
        '<component name="server2">'
        '<interface name="s" role="server" signature="Service" version="2.0"/>'
        '<content class="AltImpl" version="1.0"/>')
    arch = _build_text(text, corpus)
    before = arch.report()
    with pytest.raises(TypeMismatch):
        runtime.rebind(arch, "client.s", "server2.s")
    assert arch.report() == before
    assert arch.bindings[0].server.owner.name == "server"


def test_add_bind_invoke_then_remove_component():
    arch, corpus, _ = build_architecture("hello.fractal.xml", "hello")
    pre_live = arch.mgr.live_ids()
    fragment = parse_component_fragment(
        '<component name="server2">'
        '<interface name="s" role="server" signature="Service" version="1.0"/>'
        '<content class="ServerImpl" version="2.0"/>'
        '<file name="Request" version="1.0"/></component>')
    inst = runtime.add_component(arch, fragment, corpus)
    assert inst.parents == [arch.root]

    runtime.rebind(arch, "client.s", "server2.s")
    assert runtime.invoke(arch, "HelloWorld", "r", "run") is None

    with pytest.raises(CrossBindingExists):
        runtime.remove_component(arch, "server2")
    runtime.unbind_port(arch, "client.s")
    runtime.remove_component(arch, "server2")
    assert "server2" not in arch.components
    # info and private impl modules are gone; interface and shared stay
    assert arch.mgr.live_ids() == pre_live
    assert replay_live_set(arch.mgr.events) == pre_live


def test_add_component_failure_rolls_back_modules():
    arch, corpus, _ = build_architecture("hello.fractal.xml", "hello")
    before_live = arch.mgr.live_ids()
    before_report = arch.report()
    fragment = parse_component_fragment(
        '<component name="bad">'
        '<interface name="s" role="server" signature="Service" version="1.0"/>'
        '<content class="ClientImpl" version="1.0"/></component>')
    with pytest.raises(MissingMethod):
        runtime.add_component(arch, fragment, corpus)  # ClientImpl lacks push/handler
    assert arch.mgr.live_ids() == before_live
    assert arch.report() == before_report


def test_structural_reconfiguration_is_gated_by_granularity():
    arch, corpus, _ = build_architecture("hello.fractal.xml", "hello",
                                         Granularity.SINGLE_LOADER)
    fragment = parse_component_fragment(
        '<component name="extra">'
        '<content class="ServerImpl" version="2.0"/></component>')
    with pytest.raises(GranularityForbidsSwap):
        runtime.add_component(arch, fragment, corpus)
    with pytest.raises(GranularityForbidsSwap):
        runtime.remove_component(arch, "server")


# --- randomized receiver-check soundness ------------------------------------------


def _exchange_corpus(param: str, itf_refs_message: bool) -> CorpusStore:
    refs = (TypeRef("Message", V("1.0")),) if itf_refs_message else ()
    index = {}
    for td in [
        TypeDef("Push", V("1.0"), TypeKind.INTERFACE, refs,
                (MethodSig("push", (param,), "void"),)),
        TypeDef("Message", V("1.0"), TypeKind.CLASS, (), ()),
        TypeDef("object", V("0"), TypeKind.CLASS, (), ()),
        TypeDef("HubImpl", V("1.0"), TypeKind.CLASS,
                (TypeRef("Push", V("1.0")), TypeRef("Message", V("1.0"))), ()),
        TypeDef("NodeImpl", V("1.0"), TypeKind.CLASS,
                (TypeRef("Push", V("1.0")), TypeRef("Message", V("1.0"))),
                (MethodSig("push", (param,), "void"),)),
    ]:
        index[(td.name, td.version)] = td
    return CorpusStore(corpus_path("hello"), index)


def _star_text(n_receivers: int, files: list[bool]) -> str:
    parts = ['<definition name="Star" version="1.0">', '<component name="hub">']
    for i in range(n_receivers):
        parts.append(f'<interface name="out{i}" role="client" signature="Push" version="1.0"/>')
    parts.append('<content class="HubImpl" version="1.0"/>')
    if files[0]:
        parts.append('<file name="Message" version="1.0"/>')
    parts.append('</component>')
    for i in range(n_receivers):
        parts.append(f'<component name="node{i}">'
                     f'<interface name="in" role="server" signature="Push" version="1.0"/>'
                     f'<content class="NodeImpl" version="1.0"/>')
        if files[i + 1]:
            parts.append('<file name="Message" version="1.0"/>')
        parts.append('</component>')
    for i in range(n_receivers):
        parts.append(f'<binding client="hub.out{i}" server="node{i}.in"/>')
    parts.append('</definition>')
    return "".join(parts)


def test_receiver_checks_match_the_wiring_oracle_on_random_stars():
    rng = random.Random(424242)
    for _ in range(60):
        n = rng.randint(1, 4)  # up to 5 components
        param = rng.choice(["Message", "object"])
        itf_refs = rng.choice([True, False])
        files = [rng.random() < 0.5 for _ in range(n + 1)]
        corpus = _exchange_corpus(param, itf_refs)
        arch = _build_text(_star_text(n, files), corpus)

        hub_wiring = arch.mgr.module(arch.component("hub").info_module).wiring
        value = runtime.make_value(arch, arch.component("hub"), "Message")
        for i in range(n):
            node = arch.component(f"node{i}")
            node_wiring = arch.mgr.module(node.info_module).wiring
            # brute-force oracle: resolve the argument's type name through the
            # callee's wiring and compare defining modules
            expect_ok = node_wiring["Message"] == hub_wiring["Message"]
            if expect_ok:
                assert runtime.invoke(arch, "hub", f"out{i}", "push", [value]) is None
            else:
                with pytest.raises(TypeMismatch) as exc:
                    runtime.invoke(arch, "hub", f"out{i}", "push", [value])
                assert exc.value.left_module == hub_wiring["Message"]
                assert exc.value.right_module == node_wiring["Message"]


def _chain_text(k: int, files: list[bool]) -> str:
    parts = ['<definition name="Row" version="1.0">']
    for i in range(k):
        parts.append(f'<component name="c{i}">')
        if i > 0:
            parts.append('<interface name="in" role="server" signature="Push" version="1.0"/>')
        if i < k - 1:
            parts.append('<interface name="out" role="client" signature="Push" version="1.0"/>')
        impl = "NodeImpl" if i > 0 else "HubImpl"
        parts.append(f'<content class="{impl}" version="1.0"/>')
        if files[i]:
            parts.append('<file name="Message" version="1.0"/>')
        parts.append('</component>')
    for i in range(k - 1):
        parts.append(f'<binding client="c{i}.out" server="c{i + 1}.in"/>')
    parts.append('</definition>')
    return "".join(parts)


def test_multi_hop_forwarding_rechecks_at_every_boundary():
    rng = random.Random(777)
    for _ in range(40):
        k = rng.randint(2, 5)
        files = [rng.random() < 0.6 for _ in range(k)]
        corpus = _exchange_corpus("Message", itf_refs_message=False)
        arch = _build_text(_chain_text(k, files), corpus)
        wirings = [arch.mgr.module(arch.component(f"c{i}").info_module).wiring["Message"]
                   for i in range(k)]
        first_bad = next((i for i in range(k - 1) if wirings[i] != wirings[i + 1]), None)

        value = runtime.make_value(arch, arch.component("c0"), "Message")
        if first_bad is None:
            assert runtime.invoke(arch, "c0", "out", "push", [value]) is None
        else:
            with pytest.raises(TypeMismatch) as exc:
                runtime.invoke(arch, "c0", "out", "push", [value])
            assert exc.value.left_module == wirings[first_bad]
            assert exc.value.right_module == wirings[first_bad + 1]


def test_outbound_export_routes_type_check_and_dead_end_at_the_root():
    """A child client port may route out through the composite's own client port."""
    corpus = _exchange_corpus("Message", itf_refs_message=True)
    text = ('<definition name="Out" version="1.0">'
            '<interface name="q" role="client" signature="Push" version="1.0"/>'
            '<component name="inner">'
            '<interface name="p" role="client" signature="Push" version="1.0"/>'
            '<content class="HubImpl" version="1.0"/></component>'
            '<binding client="inner.p" server="this.q"/>'
            '</definition>')
    arch = _build_text(text, corpus)
    inner_port = arch.component("inner").port("p")
    assert inner_port.outbound_route is arch.root.port("q")
    # the root's own client port is bound to nothing, so the call dead-ends there
    value = runtime.make_value(arch, arch.component("inner"), "Message")
    with pytest.raises(UnboundInterface):
        runtime.invoke(arch, "inner", "p", "push", [value])


def test_swap_to_a_differently_named_content_class():
    base = load_corpus(corpus_path("hello_swap"))
    entries = {(td.name, td.version): td for td in base.entries()}
    alt = TypeDef("AltServerImpl", V("1.0"), TypeKind.CLASS,
                  (TypeRef("Service", V("1.0")), TypeRef("Request", V("1.0"))),
                  (MethodSig("push", ("Request",), "void"),
                   MethodSig("handler", (), "AltServerImpl")))
    entries[(alt.name, alt.version)] = alt
    corpus = CorpusStore(base.root, entries)
    arch, _, _ = build_architecture("hello_v1.fractal.xml", "hello_swap")
    old = arch.component("server").content

    record = runtime.swap_implementation(arch, "server", ("AltServerImpl", "1.0"), corpus)
    assert arch.component("server").content.name == "AltServerImpl"
    assert record.new_module != old.defined_by
    # only the content entry moved: the old name is gone, interfaces untouched
    wiring = arch.mgr.module(arch.component("server").info_module).wiring
    assert "ServerImpl" not in wiring and wiring["AltServerImpl"] == record.new_module
    assert runtime.invoke(arch, "client", "s", "push",
                          [runtime.make_value(arch, arch.component("client"), "Request")]) is None
    assert all(chk.ok for _, chk in arch.binding_checks())


# --- bench --------------------------------------------------------------------

def test_bench_counts_are_deterministic_and_match_the_structure():
    arch, _, _ = build_architecture("chain3.fractal.xml", "chain")
    first = runtime.bench_interception(arch, 7)
    second = runtime.bench_interception(arch, 7)
    # depth through the export is 4 (root plus three nodes), zero-arg methods
    assert first.bookkeeping_ops == 7 * (2 * 4)
    assert first.bookkeeping_ops == second.bookkeeping_ops
    assert first.calls == 7


def test_bench_rejects_zero_calls():
    arch, _, _ = build_architecture("chain3.fractal.xml", "chain")
    with pytest.raises(ValueError):
        runtime.bench_interception(arch, 0)

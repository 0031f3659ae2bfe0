"""Architecture description parser and static validator.

The accepted language is a deliberately small XML subset: the elements
``definition, interface, component, content, file, binding`` with the
attributes ``name, version, role, signature, class, client, server``.
Comments are allowed wherever whitespace is; there are no namespaces, no
prolog, no DTD, and no nested components. Leaf elements must be self-closing.
Everything outside this subset is rejected with a position, which keeps the
parser honest under fuzzing: any input either yields a well-formed definition
or a diagnostic error, never a crash.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .corpus import CorpusStore, TypeKind, TypeRef, VersionTag, is_type_name
from .errors import AmbiguousVersion, NotFound, ParseError, UnknownAttribute, UnknownElement
from .model import Role

_IDENT_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")

_KNOWN_ATTRS = {
    "definition": {"name", "version"},
    "interface": {"name", "role", "signature", "version"},
    "component": {"name"},
    "content": {"class", "version"},
    "file": {"name", "version"},
    "binding": {"client", "server"},
}


@dataclass(frozen=True)
class AdlInterface:
    name: str
    role: Role
    signature: str
    version: Optional[VersionTag]
    line: int = field(compare=False, default=0)
    col: int = field(compare=False, default=0)


@dataclass(frozen=True)
class AdlComponent:
    name: str
    interfaces: tuple[AdlInterface, ...]
    content: tuple[str, Optional[VersionTag]]
    files: tuple[tuple[str, Optional[VersionTag]], ...]
    line: int = field(compare=False, default=0)
    col: int = field(compare=False, default=0)


@dataclass(frozen=True)
class AdlBinding:
    client: tuple[str, str]
    server: tuple[str, str]
    line: int = field(compare=False, default=0)
    col: int = field(compare=False, default=0)

    def __str__(self) -> str:
        return (f"{self.client[0]}.{self.client[1]} -> "
                f"{self.server[0]}.{self.server[1]}")


@dataclass(frozen=True)
class AdlDefinition:
    name: str
    version: VersionTag
    interfaces: tuple[AdlInterface, ...]
    components: tuple[AdlComponent, ...]
    bindings: tuple[AdlBinding, ...]

    def component(self, name: str) -> Optional[AdlComponent]:
        for comp in self.components:
            if comp.name == name:
                return comp
        return None

    def check_invariants(self) -> None:
        """Re-assert the structural invariants the parser enforces."""
        names = [c.name for c in self.components]
        assert len(names) == len(set(names)), "component names must be unique"
        assert self.name not in names, "definition name must not collide with a component"
        for b in self.bindings:
            for comp, port in (b.client, b.server):
                holder = self.interfaces if comp == "this" else \
                    (self.component(comp).interfaces if self.component(comp) else None)
                assert holder is not None, f"binding names unknown component {comp}"
                assert any(i.name == port for i in holder), f"binding names unknown port {port}"


class _Scanner:
    """Character scanner with line/column tracking."""

    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.line = 1
        self.col = 1

    def at_end(self) -> bool:
        return self.pos >= len(self.text)

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def advance(self) -> str:
        ch = self.text[self.pos]
        self.pos += 1
        if ch == "\n":
            self.line += 1
            self.col = 1
        else:
            self.col += 1
        return ch

    def error(self, expected: str) -> ParseError:
        return ParseError(self.line, self.col, expected)

    def skip_space_and_comments(self) -> None:
        while not self.at_end():
            ch = self.peek()
            if ch in " \t\r\n":
                self.advance()
            elif self.text.startswith("<!--", self.pos):
                end = self.text.find("-->", self.pos + 4)
                if end < 0:
                    raise self.error("comment terminator '-->'")
                while self.pos < end + 3:
                    self.advance()
            else:
                return

    def expect(self, literal: str) -> None:
        for ch in literal:
            if self.at_end() or self.peek() != ch:
                raise self.error(repr(literal))
            self.advance()

    def read_name(self) -> str:
        start = self.pos
        while not self.at_end() and (self.peek().isalnum() or self.peek() in "._-"):
            self.advance()
        if self.pos == start:
            raise self.error("a name")
        return self.text[start:self.pos]

    def read_attrs(self, tag: str, tag_line: int, tag_col: int) -> tuple[dict[str, str], bool]:
        """Read attributes up to '>' or '/>'; returns (attrs, self_closing)."""
        attrs: dict[str, str] = {}
        while True:
            saw_space = False
            while not self.at_end() and self.peek() in " \t\r\n":
                saw_space = True
                self.advance()
            if self.at_end():
                raise self.error("'>'")
            if self.peek() == ">":
                self.advance()
                return attrs, False
            if self.text.startswith("/>", self.pos):
                self.advance()
                self.advance()
                return attrs, True
            if not saw_space:
                raise self.error("whitespace before attribute")
            line, col = self.line, self.col
            name = self.read_name()
            if name not in _KNOWN_ATTRS[tag]:
                raise UnknownAttribute(line, col, name)
            if name in attrs:
                raise ParseError(line, col, f"attribute {name} given once")
            self.expect("=")
            self.expect('"')
            start = self.pos
            while not self.at_end() and self.peek() not in '"<&\n':
                self.advance()
            if self.at_end() or self.peek() != '"':
                raise self.error("closing quote")
            value = self.text[start:self.pos]
            self.advance()
            attrs[name] = value


def _require(attrs: dict[str, str], name: str, line: int, col: int) -> str:
    if name not in attrs:
        raise ParseError(line, col, f"attribute {name}")
    return attrs[name]


def _identifier(value: str, line: int, col: int, what: str) -> str:
    if not _IDENT_RE.match(value):
        raise ParseError(line, col, f"{what} identifier, not {value!r}")
    return value


def _type_name(value: str, line: int, col: int, what: str) -> str:
    if not is_type_name(value):
        raise ParseError(line, col, f"{what} type name, not {value!r}")
    return value


def _version(value: str, line: int, col: int) -> VersionTag:
    try:
        return VersionTag(value)
    except ValueError:
        raise ParseError(line, col, f"version like 1.0, not {value!r}")


def _endpoint(value: str, line: int, col: int) -> tuple[str, str]:
    parts = value.split(".")
    if len(parts) != 2 or not all(parts):
        raise ParseError(line, col, f"binding endpoint 'component.port', not {value!r}")
    return parts[0], parts[1]


def _parse_interface(sc: _Scanner, line: int, col: int) -> AdlInterface:
    attrs, closed = sc.read_attrs("interface", line, col)
    if not closed:
        raise ParseError(line, col, "self-closing <interface .../>")
    name = _identifier(_require(attrs, "name", line, col), line, col, "port name")
    role_text = _require(attrs, "role", line, col)
    if role_text not in ("client", "server"):
        raise ParseError(line, col, f"role client or server, not {role_text!r}")
    signature = _type_name(_require(attrs, "signature", line, col), line, col, "signature")
    version = _version(attrs["version"], line, col) if "version" in attrs else None
    return AdlInterface(name, Role(role_text), signature, version, line, col)


def _parse_component(sc: _Scanner, line: int, col: int) -> AdlComponent:
    attrs, closed = sc.read_attrs("component", line, col)
    if closed:
        raise ParseError(line, col, "<component> with a <content> child")
    name = _identifier(_require(attrs, "name", line, col), line, col, "component name")
    if name == "this":
        raise ParseError(line, col, "component name other than reserved 'this'")
    interfaces: list[AdlInterface] = []
    content: Optional[tuple[str, Optional[VersionTag]]] = None
    files: list[tuple[str, Optional[VersionTag]]] = []
    while True:
        sc.skip_space_and_comments()
        eline, ecol = sc.line, sc.col
        sc.expect("<")
        if sc.peek() == "/":
            sc.expect("/component")
            sc.skip_space_and_comments()
            sc.expect(">")
            break
        tag = sc.read_name()
        if tag == "interface":
            interfaces.append(_parse_interface(sc, eline, ecol))
        elif tag == "content":
            if content is not None:
                raise ParseError(eline, ecol, "a single <content> per component")
            cattrs, cclosed = sc.read_attrs("content", eline, ecol)
            if not cclosed:
                raise ParseError(eline, ecol, "self-closing <content .../>")
            cls = _type_name(_require(cattrs, "class", eline, ecol), eline, ecol, "content class")
            cver = _version(cattrs["version"], eline, ecol) if "version" in cattrs else None
            content = (cls, cver)
        elif tag == "file":
            fattrs, fclosed = sc.read_attrs("file", eline, ecol)
            if not fclosed:
                raise ParseError(eline, ecol, "self-closing <file .../>")
            fname = _type_name(_require(fattrs, "name", eline, ecol), eline, ecol, "file name")
            fver = _version(fattrs["version"], eline, ecol) if "version" in fattrs else None
            files.append((fname, fver))
        elif tag in _KNOWN_ATTRS:
            raise ParseError(eline, ecol, f"element allowed inside <component>, not <{tag}>")
        else:
            raise UnknownElement(eline, ecol, tag)
    if content is None:
        raise ParseError(line, col, "<content> inside <component>")
    return AdlComponent(name, tuple(interfaces), content, tuple(files), line, col)


def parse_adl(text: str) -> AdlDefinition:
    """Parse ADL text into a definition or raise a positioned AdlError."""
    sc = _Scanner(text)
    sc.skip_space_and_comments()
    dline, dcol = sc.line, sc.col
    sc.expect("<")
    tag = sc.read_name()
    if tag != "definition":
        raise UnknownElement(dline, dcol, tag)
    attrs, closed = sc.read_attrs("definition", dline, dcol)
    if closed:
        raise ParseError(dline, dcol, "paired <definition>...</definition>")
    def_name = _identifier(_require(attrs, "name", dline, dcol), dline, dcol, "definition name")
    def_version = _version(_require(attrs, "version", dline, dcol), dline, dcol)

    interfaces: list[AdlInterface] = []
    components: list[AdlComponent] = []
    bindings: list[AdlBinding] = []
    while True:
        sc.skip_space_and_comments()
        eline, ecol = sc.line, sc.col
        sc.expect("<")
        if sc.peek() == "/":
            sc.expect("/definition")
            sc.skip_space_and_comments()
            sc.expect(">")
            break
        tag = sc.read_name()
        if tag == "interface":
            interfaces.append(_parse_interface(sc, eline, ecol))
        elif tag == "component":
            components.append(_parse_component(sc, eline, ecol))
        elif tag == "binding":
            battrs, bclosed = sc.read_attrs("binding", eline, ecol)
            if not bclosed:
                raise ParseError(eline, ecol, "self-closing <binding .../>")
            client = _endpoint(_require(battrs, "client", eline, ecol), eline, ecol)
            server = _endpoint(_require(battrs, "server", eline, ecol), eline, ecol)
            bindings.append(AdlBinding(client, server, eline, ecol))
        elif tag in _KNOWN_ATTRS:
            raise ParseError(eline, ecol, f"element allowed inside <definition>, not <{tag}>")
        else:
            raise UnknownElement(eline, ecol, tag)
    sc.skip_space_and_comments()
    if not sc.at_end():
        raise sc.error("end of input")

    definition = AdlDefinition(def_name, def_version, tuple(interfaces),
                               tuple(components), tuple(bindings))
    _check_structure(definition)
    return definition


def parse_component_fragment(text: str) -> AdlComponent:
    """Parse a standalone ``<component>...</component>`` element."""
    sc = _Scanner(text)
    sc.skip_space_and_comments()
    line, col = sc.line, sc.col
    sc.expect("<")
    tag = sc.read_name()
    if tag != "component":
        raise UnknownElement(line, col, tag)
    component = _parse_component(sc, line, col)
    sc.skip_space_and_comments()
    if not sc.at_end():
        raise sc.error("end of input")
    return component


def _check_structure(definition: AdlDefinition) -> None:
    seen: set[str] = set()
    for comp in definition.components:
        if comp.name in seen:
            raise ParseError(comp.line, comp.col, f"unique component name, {comp.name} repeats")
        seen.add(comp.name)
    if definition.name in seen:
        raise ParseError(1, 1, f"definition name {definition.name} distinct from its components")
    for b in definition.bindings:
        for comp_name, port_name in (b.client, b.server):
            if comp_name == "this":
                ports = definition.interfaces
            else:
                comp = definition.component(comp_name)
                if comp is None:
                    raise ParseError(b.line, b.col, f"binding over declared component, "
                                                    f"{comp_name} is not one")
                ports = comp.interfaces
            if not any(i.name == port_name for i in ports):
                raise ParseError(b.line, b.col,
                                 f"binding over declared port, {comp_name}.{port_name} is not one")


def render_adl(definition: AdlDefinition) -> str:
    """Pretty-print a definition; re-parsing the output yields an equal AST."""

    def attr_ver(version: Optional[VersionTag]) -> str:
        return f' version="{version}"' if version is not None else ""

    def itf(i: AdlInterface, pad: str) -> str:
        return (f'{pad}<interface name="{i.name}" role="{i.role.value}" '
                f'signature="{i.signature}"{attr_ver(i.version)}/>')

    lines = [f'<definition name="{definition.name}" version="{definition.version}">']
    for i in definition.interfaces:
        lines.append(itf(i, "    "))
    for comp in definition.components:
        lines.append(f'    <component name="{comp.name}">')
        for i in comp.interfaces:
            lines.append(itf(i, "        "))
        cls, cver = comp.content
        lines.append(f'        <content class="{cls}"{attr_ver(cver)}/>')
        for fname, fver in comp.files:
            lines.append(f'        <file name="{fname}"{attr_ver(fver)}/>')
        lines.append("    </component>")
    for b in definition.bindings:
        lines.append(f'    <binding client="{b.client[0]}.{b.client[1]}" '
                     f'server="{b.server[0]}.{b.server[1]}"/>')
    lines.append("</definition>")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Diagnostic:
    level: str
    code: str
    location: str
    message: str

    def render(self) -> str:
        return f"{self.level} {self.code} {self.location} {self.message}"


def _diag(code: str, line: int, col: int, message: str) -> Diagnostic:
    return Diagnostic("ERROR", code, f"{line}:{col}", message)


def _resolve(corpus: CorpusStore, name: str, version: Optional[VersionTag]):
    return corpus.lookup(TypeRef(name, version))


def validate(definition: AdlDefinition, corpus: CorpusStore) -> list[Diagnostic]:
    """Static checks against a corpus; an empty list means buildable.

    Diagnostics come out in document order: ports first (duplicates, signature
    resolution, interface-kindness), then component content and shared files,
    then bindings (role discipline, endpoint signature and version agreement,
    duplicate client bindings).
    """
    diags: list[Diagnostic] = []

    def check_ports(owner: str, ports: tuple[AdlInterface, ...]) -> None:
        seen: set[str] = set()
        for itf in ports:
            if itf.name in seen:
                diags.append(_diag("DuplicatePort", itf.line, itf.col,
                                   f"{owner} declares port {itf.name} twice"))
            seen.add(itf.name)
            try:
                td = _resolve(corpus, itf.signature, itf.version)
            except (NotFound, AmbiguousVersion) as exc:
                diags.append(_diag("UnresolvableSignature", itf.line, itf.col,
                                   f"{owner}.{itf.name}: {exc}"))
                continue
            if td.kind is not TypeKind.INTERFACE:
                diags.append(_diag("NotAnInterface", itf.line, itf.col,
                                   f"{owner}.{itf.name} signature {itf.signature} is a class"))

    check_ports(definition.name, definition.interfaces)
    for comp in definition.components:
        check_ports(comp.name, comp.interfaces)
        cls, cver = comp.content
        try:
            _resolve(corpus, cls, cver)
        except (NotFound, AmbiguousVersion) as exc:
            diags.append(_diag("UnresolvableContent", comp.line, comp.col, str(exc)))
        for fname, fver in comp.files:
            try:
                _resolve(corpus, fname, fver)
            except (NotFound, AmbiguousVersion) as exc:
                diags.append(_diag("UnresolvableFile", comp.line, comp.col, str(exc)))

    def port_of(endpoint: tuple[str, str]) -> Optional[AdlInterface]:
        comp_name, port_name = endpoint
        ports = definition.interfaces if comp_name == "this" else \
            definition.component(comp_name).interfaces
        for itf in ports:
            if itf.name == port_name:
                return itf
        return None

    bound_clients: set[tuple[str, str]] = set()
    for b in definition.bindings:
        cport, sport = port_of(b.client), port_of(b.server)
        # Client attr: a child's client port, or an exported server port of 'this'.
        want_client = Role.SERVER if b.client[0] == "this" else Role.CLIENT
        want_server = Role.CLIENT if b.server[0] == "this" else Role.SERVER
        role_ok = True
        if b.client[0] == "this" and b.server[0] == "this":
            diags.append(_diag("RoleMismatch", b.line, b.col,
                               f"binding {b} connects two definition ports"))
            role_ok = False
        if cport.role is not want_client:
            diags.append(_diag("RoleMismatch", b.line, b.col,
                               f"client endpoint {b.client[0]}.{b.client[1]} must be a "
                               f"{want_client.value} port"))
            role_ok = False
        if sport.role is not want_server:
            diags.append(_diag("RoleMismatch", b.line, b.col,
                               f"server endpoint {b.server[0]}.{b.server[1]} must be a "
                               f"{want_server.value} port"))
            role_ok = False
        if not role_ok:
            continue
        if b.client in bound_clients:
            diags.append(_diag("DuplicateBinding", b.line, b.col,
                               f"client endpoint {b.client[0]}.{b.client[1]} bound twice"))
        bound_clients.add(b.client)
        try:
            ctd = _resolve(corpus, cport.signature, cport.version)
            std = _resolve(corpus, sport.signature, sport.version)
        except (NotFound, AmbiguousVersion):
            continue  # already reported on the port
        if ctd.name != std.name:
            diags.append(_diag("SignatureMismatch", b.line, b.col,
                               f"binding {b}: {ctd.name} vs {std.name}"))
        elif ctd.version != std.version:
            diags.append(_diag("VersionMismatch", b.line, b.col,
                               f"binding {b}: client declares {ctd.name}@{ctd.version}, "
                               f"server declares {std.name}@{std.version}"))
    return diags

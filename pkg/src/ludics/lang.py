"""Concrete syntax for design files.

A file holds any number of declarations::

    let xi = 0                      ; bind a locus symbol
    design D : |- xi = (+ xi {0} (- xi.0 { {2,3} => dai }))
    design E : xi |- = (- xi { {0} => dai })
    domain x = { d, e }             ; finite individual domain
    formula S1 = &x (up L(x) -o +y (up A(y) * up P(x,y)))
    skeleton DS : |- xi from S1 policy fact preset classic

Trees follow the grammar::

    tree := "dai"
          | "(+" locus ram tree* ")"            ; premises in bias order
          | "(-" locus "{" (ram "=>" tree)* "}" ")"
          | "ref" IDENT "@" locus
          | "fax" locus "->" locus              ; engine extension

Comments run from ``;`` to end of line.  Serialization is canonical:
absolute loci, ramifications and directory entries in ascending order.
``formula`` and ``skeleton`` declarations are line-based; their right-hand
sides are handed to the formula compiler.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .loci import Fork, Locus, LudicsError, format_ram, parse_locus
from .designs import (
    DAIMON,
    DaimonNode,
    Design,
    FaxNode,
    NegNode,
    Node,
    PosNode,
    RefNode,
    validate_design,
)


class ParseError(LudicsError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(f"line {line}, column {column}: {message}" if line else message)
        self.line = line
        self.column = column


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>;[^\n]*)
  | (?P<lpar_pos>\(\+)
  | (?P<lpar_neg>\(-)
  | (?P<entails>\|-)
  | (?P<darrow>=>)
  | (?P<arrow>->)
  | (?P<empty_locus><>)
  | (?P<lbrace>\{)
  | (?P<rbrace>\})
  | (?P<rpar>\))
  | (?P<comma>,)
  | (?P<colon>:)
  | (?P<at>@)
  | (?P<eq>=)
  | (?P<locus>[A-Za-z_][A-Za-z0-9_]*(\.\d+)+ | \d+(\.\d+)+)
  | (?P<int>\d+)
  | (?P<sym>[A-Za-z_][A-Za-z0-9_]*)
    """,
    re.VERBOSE,
)


@dataclass
class Token:
    kind: str
    text: str
    line: int
    column: int


def _tokenize(source: str) -> list[Token]:
    tokens = []
    line, col = 1, 1
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if not m:
            raise ParseError(f"unexpected character {source[pos]!r}", line, col)
        kind = m.lastgroup
        text = m.group()
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, text, line, col))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            col = len(text) - text.rfind("\n")
        else:
            col += len(text)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


@dataclass
class FileDefs:
    """Everything declared in one file."""

    bindings: dict = field(default_factory=dict)
    designs: dict = field(default_factory=dict)
    domains: dict = field(default_factory=dict)   # name -> list of labels
    formulas: dict = field(default_factory=dict)  # name -> Formula
    order: list = field(default_factory=list)


_FORMULA_LINE = re.compile(r"^\s*formula\s+([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.+)$")
_SKELETON_LINE = re.compile(r"^\s*skeleton\s+([A-Za-z_][A-Za-z0-9_]*)\s*:\s*(.+?)\s+from\s+(.+)$")


def _strip_comment(line: str) -> str:
    return line[: line.index(";")] if ";" in line else line


class _Parser:
    def __init__(self, source: str):
        self.formula_lines = []
        self.skeleton_lines = []
        kept = []
        for lineno, raw in enumerate(source.split("\n"), start=1):
            line = _strip_comment(raw)
            m = _FORMULA_LINE.match(line)
            if m:
                self.formula_lines.append((lineno, m.group(1), m.group(2).strip()))
                kept.append("")
                continue
            m = _SKELETON_LINE.match(line)
            if m:
                self.skeleton_lines.append(
                    (lineno, m.group(1), m.group(2).strip(), m.group(3).strip()))
                kept.append("")
                continue
            kept.append(raw)
        self.tokens = _tokenize("\n".join(kept))
        self.pos = 0
        self.defs = FileDefs()

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str) -> Token:
        tok = self.next()
        if tok.kind != kind:
            raise ParseError(f"expected {kind}, found {tok.text!r}", tok.line, tok.column)
        return tok

    def fail(self, message: str, tok: Token | None = None):
        tok = tok or self.peek()
        raise ParseError(message, tok.line, tok.column)

    # -- loci

    def parse_locus_token(self) -> Locus:
        tok = self.next()
        if tok.kind in ("locus", "int", "sym", "empty_locus"):
            try:
                return parse_locus(tok.text, self.defs.bindings)
            except LudicsError as exc:
                self.fail(str(exc), tok)
        self.fail(f"expected a locus, found {tok.text!r}", tok)

    def parse_locus_list(self) -> list[Locus]:
        loci = [self.parse_locus_token()]
        while self.peek().kind == "comma":
            self.next()
            loci.append(self.parse_locus_token())
        return loci

    # -- ramifications

    def parse_ram(self) -> frozenset:
        self.expect("lbrace")
        biases = []
        while self.peek().kind != "rbrace":
            tok = self.expect("int")
            biases.append(int(tok.text))
            if self.peek().kind == "comma":
                self.next()
        self.expect("rbrace")
        return frozenset(biases)

    # -- trees

    def parse_tree(self) -> Node:
        tok = self.peek()
        if tok.kind == "sym" and tok.text == "dai":
            self.next()
            return DAIMON
        if tok.kind == "sym" and tok.text == "ref":
            self.next()
            name = self.expect("sym").text
            self.expect("at")
            at = self.parse_locus_token()
            return RefNode(name, at)
        if tok.kind == "sym" and tok.text == "fax":
            self.next()
            source = self.parse_locus_token()
            self.expect("arrow")
            target = self.parse_locus_token()
            try:
                return FaxNode(source, target)
            except LudicsError as exc:
                self.fail(str(exc), tok)
        if tok.kind == "lpar_pos":
            self.next()
            focus = self.parse_locus_token()
            ramification = self.parse_ram()
            premises = {}
            for i in sorted(ramification):
                premises[i] = self.parse_tree()
            self.expect("rpar")
            try:
                return PosNode(focus, ramification, premises)
            except LudicsError as exc:
                self.fail(str(exc), tok)
        if tok.kind == "lpar_neg":
            self.next()
            focus = self.parse_locus_token()
            self.expect("lbrace")
            entries = {}
            while self.peek().kind != "rbrace":
                r = self.parse_ram()
                self.expect("darrow")
                entries[r] = self.parse_tree()
            self.expect("rbrace")
            self.expect("rpar")
            return NegNode(focus, entries)
        self.fail(f"expected a tree, found {tok.text!r}", tok)

    # -- bases

    def parse_base(self) -> Fork:
        tok = self.peek()
        try:
            if tok.kind == "entails":
                self.next()
                tines = self.parse_locus_list()
                return Fork(None, frozenset(tines))
            handle = self.parse_locus_token()
            self.expect("entails")
            if self.peek().kind in ("locus", "int", "empty_locus"):
                tines = self.parse_locus_list()
            else:
                tines = []
            return Fork(handle, frozenset(tines))
        except LudicsError as exc:
            if isinstance(exc, ParseError):
                raise
            self.fail(str(exc), tok)

    # -- declarations

    def parse_file(self) -> FileDefs:
        from . import formulas as formulas_mod

        while True:
            tok = self.peek()
            if tok.kind == "eof":
                break
            if tok.kind != "sym":
                self.fail(f"expected a declaration, found {tok.text!r}", tok)
            if tok.text == "let":
                self.next()
                name = self.expect("sym").text
                self.expect("eq")
                self.defs.bindings[name] = self.parse_locus_token()
            elif tok.text == "design":
                self.next()
                name = self.expect("sym").text
                if name in self.defs.designs:
                    self.fail(f"duplicate design {name!r}", tok)
                self.expect("colon")
                base = self.parse_base()
                self.expect("eq")
                root = self.parse_tree()
                design = Design(name=name, base=base, root=root, env=self.defs.designs)
                self.defs.designs[name] = design
                self.defs.order.append(name)
            elif tok.text == "domain":
                self.next()
                name = self.expect("sym").text
                self.expect("eq")
                self.expect("lbrace")
                labels = []
                while self.peek().kind != "rbrace":
                    labels.append(self.expect("sym").text)
                    if self.peek().kind == "comma":
                        self.next()
                self.expect("rbrace")
                if not labels:
                    self.fail("a domain needs at least one individual", tok)
                self.defs.domains[name] = labels
            else:
                self.fail(f"unknown declaration {tok.text!r}", tok)

        for lineno, name, text in self.formula_lines:
            try:
                self.defs.formulas[name] = formulas_mod.parse_formula(text)
            except LudicsError as exc:
                raise ParseError(str(exc), lineno, 1)

        for lineno, name, base_text, rest in self.skeleton_lines:
            if name in self.defs.designs:
                raise ParseError(f"duplicate design {name!r}", lineno, 1)
            try:
                base = _parse_base_text(base_text, self.defs.bindings)
                design = formulas_mod.skeleton_from_directive(name, base, rest, self.defs)
            except ParseError:
                raise
            except LudicsError as exc:
                raise ParseError(str(exc), lineno, 1)
            design.env = self.defs.designs
            self.defs.designs[name] = design
            self.defs.order.append(name)

        for name in self.defs.order:
            report = validate_design(self.defs.designs[name])
            if not report.ok:
                raise ParseError("design {} fails validation: {}".format(
                    name, "; ".join(report.violations)))
        return self.defs


def _parse_base_text(text: str, bindings: dict) -> Fork:
    text = text.strip()
    if text.startswith("|-"):
        tines = [parse_locus(p.strip(), bindings)
                 for p in text[2:].split(",") if p.strip()]
        return Fork(None, frozenset(tines))
    if "|-" not in text:
        raise ParseError(f"malformed base {text!r}")
    left, right = text.split("|-", 1)
    handle = parse_locus(left.strip(), bindings)
    tines = [parse_locus(p.strip(), bindings)
             for p in right.split(",") if p.strip()]
    return Fork(handle, frozenset(tines))


def parse_file(source: str) -> FileDefs:
    """Parse and validate every definition in a design file."""
    return _Parser(source).parse_file()


def parse_design(source: str, name: str | None = None) -> Design:
    defs = parse_file(source)
    if name is None:
        if len(defs.designs) != 1:
            raise ParseError("expected exactly one design")
        return next(iter(defs.designs.values()))
    if name not in defs.designs:
        raise ParseError(f"no design named {name!r}")
    return defs.designs[name]


# ---------------------------------------------------------------------------
# Serialization


def serialize_node(node: Node, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(node, DaimonNode):
        return "dai"
    if isinstance(node, RefNode):
        return f"ref {node.name} @ {node.at}"
    if isinstance(node, FaxNode):
        return f"fax {node.source} -> {node.target}"
    if isinstance(node, PosNode):
        head = f"(+ {node.focus} {format_ram(node.ramification)}"
        if not node.ramification:
            return head + ")"
        parts = [serialize_node(p, indent + 1) for _, p in node.premise_items()]
        if all("\n" not in p and len(p) < 40 for p in parts):
            return head + " " + " ".join(parts) + ")"
        body = "\n".join(f"{pad}  {p}" for p in parts)
        return f"{head}\n{body})"
    if isinstance(node, NegNode):
        if not node.entries:
            return f"(- {node.focus} {{}})"
        parts = [
            f"{format_ram(r)} => {serialize_node(p, indent + 1)}"
            for r, p in node.entry_items()
        ]
        if len(parts) == 1 and "\n" not in parts[0] and len(parts[0]) < 60:
            return f"(- {node.focus} {{ {parts[0]} }})"
        body = "\n".join(f"{pad}  {p}" for p in parts)
        return f"(- {node.focus} {{\n{body}\n{pad}}})"
    raise TypeError(node)


def serialize_design(design: Design) -> str:
    return f"design {design.name} : {design.base} = {serialize_node(design.root)}"


def serialize_file(defs: FileDefs) -> str:
    lines = []
    for name in defs.order:
        lines.append(serialize_design(defs.designs[name]))
    return "\n".join(lines) + "\n"

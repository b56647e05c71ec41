"""Proto-formulas and their compilation into design skeletons.

The polarized fragment: atoms over finite individual domains, tensor ``*``,
plus ``+``, with ``&``, ``par``, linear implication ``-o`` (eliminated at
parse time into ``par`` of the dual), shifts ``up``/``dn``, postfix dual
``^``, and finite-domain quantifier forms ``&x``/``+x``.

Skeletons are the canonical focalized proof attempts: positive layers choose
one alternative of a positive cluster and split it over fresh sub-addresses;
negative layers offer one directory entry per alternative of a negative
cluster; atoms end per policy (undiscussable datum, explicit data exchange,
or open hole).  Bias allocation is deterministic: alternatives are numbered
in declaration order, every leaf takes the next bias in the block for its
alternative, and a numbering preset can override ``(start, stride)`` per
cluster address so that stored dialogue files are reproduced exactly.

The two fallacy detectors live here as well: circular justification
(a sub-design that is the delocalized copy of an enclosing one) and erased
presuppositions (context loci no premise ever uses).
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field

from .loci import Fork, Locus, LudicsError
from .designs import (
    DAIMON,
    DaimonNode,
    Design,
    FaxNode,
    NegNode,
    Node,
    PosNode,
    RefNode,
    node_equal,
    relocate,
    resolve_ref,
    used_subset,
)


class FormulaError(LudicsError):
    pass


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Atom:
    name: str
    args: tuple = ()
    positive: bool = True


@dataclass(frozen=True)
class Tensor:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Plus:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class With:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Par:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Up:
    body: "Formula"


@dataclass(frozen=True)
class Dn:
    body: "Formula"


@dataclass(frozen=True)
class BigWith:
    var: str
    body: "Formula"


@dataclass(frozen=True)
class BigPlus:
    var: str
    body: "Formula"


Formula = object


def dual(formula: Formula) -> Formula:
    if isinstance(formula, Atom):
        return Atom(formula.name, formula.args, not formula.positive)
    if isinstance(formula, Tensor):
        return Par(dual(formula.left), dual(formula.right))
    if isinstance(formula, Par):
        return Tensor(dual(formula.left), dual(formula.right))
    if isinstance(formula, Plus):
        return With(dual(formula.left), dual(formula.right))
    if isinstance(formula, With):
        return Plus(dual(formula.left), dual(formula.right))
    if isinstance(formula, Up):
        return Dn(dual(formula.body))
    if isinstance(formula, Dn):
        return Up(dual(formula.body))
    if isinstance(formula, BigWith):
        return BigPlus(formula.var, dual(formula.body))
    if isinstance(formula, BigPlus):
        return BigWith(formula.var, dual(formula.body))
    raise FormulaError(f"cannot dualize {formula!r}")


def polarity(formula: Formula) -> str:
    """The polarity of the principal connective: "positive" or "negative"."""
    if isinstance(formula, Atom):
        return "positive" if formula.positive else "negative"
    if isinstance(formula, (Tensor, Plus, BigPlus, Up)):
        return "positive"
    if isinstance(formula, (Par, With, BigWith, Dn)):
        return "negative"
    raise FormulaError(f"not a formula: {formula!r}")


def strip_shifts(formula: Formula) -> Formula:
    while isinstance(formula, (Up, Dn)):
        formula = formula.body
    return formula


def format_formula(formula: Formula) -> str:
    if isinstance(formula, Atom):
        body = formula.name
        if formula.args:
            body += "(" + ",".join(formula.args) + ")"
        return body if formula.positive else body + "^"
    if isinstance(formula, Tensor):
        return f"({format_formula(formula.left)} * {format_formula(formula.right)})"
    if isinstance(formula, Plus):
        return f"({format_formula(formula.left)} + {format_formula(formula.right)})"
    if isinstance(formula, With):
        return f"({format_formula(formula.left)} & {format_formula(formula.right)})"
    if isinstance(formula, Par):
        return f"({format_formula(formula.left)} par {format_formula(formula.right)})"
    if isinstance(formula, Up):
        return f"up {format_formula(formula.body)}"
    if isinstance(formula, Dn):
        return f"dn {format_formula(formula.body)}"
    if isinstance(formula, BigWith):
        return f"&{formula.var} {format_formula(formula.body)}"
    if isinstance(formula, BigPlus):
        return f"+{formula.var} {format_formula(formula.body)}"
    raise FormulaError(f"not a formula: {formula!r}")


# ---------------------------------------------------------------------------
# Parser

_F_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<qwith>&[A-Za-z_][A-Za-z0-9_]*)
  | (?P<qplus>\+[A-Za-z_][A-Za-z0-9_]*)
  | (?P<lolli>-o)
  | (?P<star>\*)
  | (?P<plus>\+)
  | (?P<amp>&)
  | (?P<dualop>\^)
  | (?P<lpar>\()
  | (?P<rpar>\))
  | (?P<comma>,)
  | (?P<word>[A-Za-z_][A-Za-z0-9_]*)
    """,
    re.VERBOSE,
)

_KEYWORDS = {"up", "dn", "par"}


def _formula_tokens(text: str):
    pos = 0
    tokens = []
    while pos < len(text):
        m = _F_TOKEN.match(text, pos)
        if not m:
            raise FormulaError(f"unexpected character {text[pos]!r} in formula")
        kind = m.lastgroup
        if kind != "ws":
            if kind == "word" and m.group() == "par":
                tokens.append(("par", m.group()))
            else:
                tokens.append((kind, m.group()))
        pos = m.end()
    tokens.append(("end", ""))
    return tokens


class _FormulaParser:
    """Precedence (tight to loose): atoms and parens, ``^``, ``up``/``dn``,
    ``*``, ``+``, ``&``, ``par``, ``-o`` (right associative).  Quantifier
    prefixes bind the full expression to their right."""

    def __init__(self, text: str):
        self.tokens = _formula_tokens(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str):
        tok = self.next()
        if tok[0] != kind:
            raise FormulaError(f"expected {kind}, found {tok[1]!r}")
        return tok

    def parse(self) -> Formula:
        f = self.parse_lolli()
        if self.peek()[0] != "end":
            raise FormulaError(f"trailing input {self.peek()[1]!r}")
        return f

    def parse_lolli(self) -> Formula:
        if self.peek()[0] in ("qwith", "qplus"):
            kind, text = self.next()
            body = self.parse_lolli()
            var = text[1:]
            return BigWith(var, body) if kind == "qwith" else BigPlus(var, body)
        left = self.parse_par()
        if self.peek()[0] == "lolli":
            self.next()
            right = self.parse_lolli()
            return Par(dual(left), right)
        return left

    def parse_par(self) -> Formula:
        left = self.parse_with()
        while self.peek()[0] == "par":
            self.next()
            left = Par(left, self.parse_with())
        return left

    def parse_with(self) -> Formula:
        left = self.parse_plus()
        while self.peek()[0] == "amp":
            self.next()
            left = With(left, self.parse_plus())
        return left

    def parse_plus(self) -> Formula:
        left = self.parse_tensor()
        while self.peek()[0] == "plus":
            self.next()
            left = Plus(left, self.parse_tensor())
        return left

    def parse_tensor(self) -> Formula:
        left = self.parse_unary()
        while self.peek()[0] == "star":
            self.next()
            left = Tensor(left, self.parse_unary())
        return left

    def parse_unary(self) -> Formula:
        kind, text = self.peek()
        if kind == "word" and text in ("up", "dn"):
            self.next()
            body = self.parse_unary()
            return Up(body) if text == "up" else Dn(body)
        if kind in ("qwith", "qplus"):
            kind, text = self.next()
            body = self.parse_lolli()
            var = text[1:]
            return BigWith(var, body) if kind == "qwith" else BigPlus(var, body)
        return self.parse_postfix()

    def parse_postfix(self) -> Formula:
        f = self.parse_primary()
        while self.peek()[0] == "dualop":
            self.next()
            f = dual(f)
        return f

    def parse_primary(self) -> Formula:
        kind, text = self.next()
        if kind == "lpar":
            f = self.parse_lolli()
            self.expect("rpar")
            return f
        if kind == "word":
            if text in _KEYWORDS:
                raise FormulaError(f"unexpected keyword {text!r}")
            args = ()
            if self.peek()[0] == "lpar":
                self.next()
                names = []
                while self.peek()[0] != "rpar":
                    names.append(self.expect("word")[1])
                    if self.peek()[0] == "comma":
                        self.next()
                self.expect("rpar")
                args = tuple(names)
            return Atom(text, args)
        raise FormulaError(f"expected a formula, found {text!r}")


def parse_formula(text: str) -> Formula:
    """Parse the ASCII formula syntax; ``-o`` is eliminated into ``par``."""
    return _FormulaParser(text).parse()


# ---------------------------------------------------------------------------
# Policies, numbering, witnesses


@dataclass
class AtomPolicy:
    """How compiled atoms terminate.

    ``fact``: an undiscussable datum (empty directory on defense; trusted
    and droppable on attack).  ``daimon``: an explicit data exchange (offer
    the datum, concede on receipt).  ``open``: like ``fact`` but recorded as
    a named hole in the output design.
    """

    default: str = "fact"
    overrides: dict = field(default_factory=dict)

    def lookup(self, key: str) -> str:
        value = self.overrides.get(key, self.default)
        if value not in ("fact", "daimon", "open"):
            raise FormulaError(f"unknown atom policy {value!r} for {key}")
        return value


FACTS = AtomPolicy("fact")
DATA_EXCHANGE = AtomPolicy("daimon")

# (start, stride) overrides per cluster address relative to the base locus.
# "classic" reproduces the stored dialogue files for the two-quantifier
# linguist sentence with one individual per domain.
PRESETS: dict[str, dict] = {
    "default": {},
    "classic": {(): (0, 1), (0,): (2, 1), (0, 3): (5, 2)},
}


class _Numbering:
    def __init__(self, base: Locus, preset: dict | None):
        self.base = base
        self.preset = preset or {}

    def at(self, locus: Locus) -> tuple:
        rel = tuple(locus[len(self.base):]) if self.base.is_prefix_of(locus) else tuple(locus)
        return self.preset.get(rel, (0, 1))


# ---------------------------------------------------------------------------
# Cluster decomposition


def _alternatives(formula: Formula, env: dict, positive: bool, domains: dict) -> list:
    """All alternatives of a maximal same-polarity cluster.

    Each alternative is a tuple of leaves ``(formula, env)``.  The additive
    connectives branch, the multiplicatives concatenate, and quantifier
    forms run over their declared domain in order; anything else is a leaf.
    """
    core = strip_shifts(formula) if _is_shift_of_same_polarity(formula, positive) else formula
    branch = (Plus, BigPlus, Tensor) if positive else (With, BigWith, Par)
    if isinstance(core, branch[0]):
        return (_alternatives(core.left, env, positive, domains)
                + _alternatives(core.right, env, positive, domains))
    if isinstance(core, branch[1]):
        var = core.var
        if var not in domains:
            raise FormulaError(f"variable {var!r} has no declared domain")
        out = []
        for label in domains[var]:
            out.extend(_alternatives(core.body, {**env, var: label}, positive, domains))
        return out
    if isinstance(core, branch[2]):
        lefts = _alternatives(core.left, env, positive, domains)
        rights = _alternatives(core.right, env, positive, domains)
        return [l + r for l in lefts for r in rights]
    return [((formula, env),)]


def _is_shift_of_same_polarity(formula: Formula, positive: bool) -> bool:
    if positive and isinstance(formula, Up):
        return True
    if not positive and isinstance(formula, Dn):
        return True
    return False


def _chosen_index(formula: Formula, env: dict, domains: dict, witness: dict) -> tuple:
    """Index and bindings of the alternative a positive layer commits to."""
    core = formula
    if isinstance(core, Up):
        return _chosen_index(core.body, env, domains, witness)
    if isinstance(core, Plus):
        left_n = len(_alternatives(core.left, env, True, domains))
        side = witness.get("+", "left")
        if side == "left":
            idx, env2 = _chosen_index(core.left, env, domains, witness)
            return idx, env2
        idx, env2 = _chosen_index(core.right, env, domains, witness)
        return left_n + idx, env2
    if isinstance(core, BigPlus):
        var = core.var
        if var not in domains:
            raise FormulaError(f"variable {var!r} has no declared domain")
        labels = domains[var]
        label = witness.get(var, labels[0])
        if label not in labels:
            raise FormulaError(f"witness {label!r} is not in the domain of {var!r}")
        per = len(_alternatives(core.body, {**env, var: labels[0]}, True, domains))
        idx, env2 = _chosen_index(core.body, {**env, var: label}, domains, witness)
        return labels.index(label) * per + idx, env2
    if isinstance(core, Tensor):
        lefts = _chosen_index(core.left, env, domains, witness)
        rights = _chosen_index(core.right, env, domains, witness)
        right_n = len(_alternatives(core.right, env, True, domains))
        return lefts[0] * right_n + rights[0], {**lefts[1], **rights[1]}
    return 0, env


def _atom_key(atom: Atom, env: dict) -> str:
    args = tuple(env.get(a, a) for a in atom.args)
    if args:
        return f"{atom.name}({','.join(args)})"
    return atom.name


# ---------------------------------------------------------------------------
# The skeleton compiler


class _Compiler:
    def __init__(self, domains: dict, policy: AtomPolicy, numbering: _Numbering,
                 witness: dict):
        self.domains = domains
        self.policy = policy
        self.numbering = numbering
        self.witness = witness
        self.holes: set = set()

    # -- atoms

    def atom_defense(self, atom: Atom, env: dict, handle: Locus) -> Node:
        """The negative design defending an asserted atom."""
        key = _atom_key(atom, env)
        policy = self.policy.lookup(key)
        if policy in ("fact", "open"):
            if policy == "open":
                self.holes.add(handle)
            return NegNode(handle, {})
        start, _ = self.numbering.at(handle)
        datum = handle.extend(start)
        return NegNode(handle, {frozenset({start}): PosNode(datum, frozenset(), {})})

    # -- negative content at a handle

    def compile_neg(self, formula: Formula, env: dict, handle: Locus) -> Node:
        core = strip_shifts(formula)
        if isinstance(core, Atom):
            return self.atom_defense(core, env, handle)
        if polarity(core) == "positive":
            start, _ = self.numbering.at(handle)
            inner = handle.extend(start)
            return NegNode(handle, {
                frozenset({start}): self.compile_pos_fork([(inner, core, env)])})
        alternatives = _alternatives(core, env, False, self.domains)
        start, stride = self.numbering.at(handle)
        entries = {}
        counter = 0
        for leaves in alternatives:
            biases = [start + (counter + k) * stride for k in range(len(leaves))]
            counter += len(leaves)
            components = [(handle.extend(b), leaf, leaf_env)
                          for b, (leaf, leaf_env) in zip(biases, leaves)]
            entries[frozenset(biases)] = self.compile_pos_fork(components)
        return NegNode(handle, entries)

    # -- a positive fork: components to act on

    def compile_pos_fork(self, components: list) -> Node:
        if not components:
            return DAIMON
        challenges = []
        engage = None
        asserted = None
        for item in components:
            locus, formula, env = item
            core = strip_shifts(formula)
            if isinstance(core, Atom):
                key = _atom_key(core, env)
                policy = self.policy.lookup(key)
                if core.positive:
                    asserted = item  # rightmost assertion wins
                elif policy == "daimon":
                    challenges.append(item)
                # a trusted dual atom is dropped
            else:
                engage = item  # rightmost engageable component wins
        if challenges:
            locus, formula, env = challenges[0]
            rest = [c for c in components if c is not challenges[0]]
            start, _ = self.numbering.at(locus)
            probe = locus.extend(start)
            return PosNode(locus, frozenset({start}), {
                start: NegNode(probe, {frozenset(): self.compile_pos_fork(rest)})})
        if engage is not None:
            return self.engage(*engage)
        if asserted is not None:
            locus, formula, env = asserted
            core = strip_shifts(formula)
            key = _atom_key(core, env)
            if self.policy.lookup(key) == "open":
                self.holes.add(locus)
            return PosNode(locus, frozenset(), {})  # assert the datum
        return DAIMON

    def engage(self, locus: Locus, formula: Formula, env: dict) -> Node:
        """Focus a positive cluster: commit to one alternative and split it."""
        core = strip_shifts(formula)
        alternatives = _alternatives(core, env, True, self.domains)
        index, chosen_env = _chosen_index(core, env, self.domains, self.witness)
        offsets = list(itertools.accumulate([0] + [len(a) for a in alternatives]))
        leaves = alternatives[index]
        start, stride = self.numbering.at(locus)
        biases = [start + (offsets[index] + k) * stride for k in range(len(leaves))]
        premises = {}
        for b, (leaf, leaf_env) in zip(biases, leaves):
            premises[b] = self.compile_premise(leaf, leaf_env, locus.extend(b))
        return PosNode(locus, frozenset(biases), premises)

    def compile_premise(self, formula: Formula, env: dict, handle: Locus) -> Node:
        return self.compile_neg(formula, env, handle)


def skeletonize(formula: Formula, base: Fork, policy: AtomPolicy | None = None,
                domains: dict | None = None, preset: dict | str | None = None,
                witness: dict | None = None, name: str = "skeleton") -> Design:
    """Compile a proto-formula at a base locus into its canonical skeleton."""
    policy = policy or FACTS
    domains = domains or {}
    if isinstance(preset, str):
        if preset not in PRESETS:
            raise FormulaError(f"unknown numbering preset {preset!r}")
        preset = PRESETS[preset]
    loci = sorted(base.loci())
    if len(loci) != 1:
        raise FormulaError("skeletons need a single-locus base")
    locus = loci[0]
    compiler = _Compiler(domains, policy, _Numbering(locus, preset), witness or {})
    if base.is_positive:
        if polarity(formula) == "positive":
            root = compiler.compile_pos_fork([(locus, formula, {})])
        else:
            start, _ = compiler.numbering.at(locus)
            inner = locus.extend(start)
            root = PosNode(locus, frozenset({start}),
                           {start: compiler.compile_neg(formula, {}, inner)})
    else:
        root = compiler.compile_neg(formula, {}, locus)
    return Design(name=name, base=base, root=root,
                  holes=frozenset(compiler.holes))


def skeleton_from_directive(name: str, base: Fork, rest: str, defs) -> Design:
    """Build a design from a ``skeleton`` file declaration.

    ``rest`` looks like ``S1 [dual] policy fact|daimon [preset classic]
    [witness x=d,y=e]``.
    """
    words = rest.replace(",", " ").split()
    if not words:
        raise FormulaError("skeleton directive needs a formula name")
    formula_name = words[0]
    if formula_name not in defs.formulas:
        raise FormulaError(f"unknown formula {formula_name!r}")
    formula = defs.formulas[formula_name]
    policy = FACTS
    preset: dict | str | None = None
    witness: dict = {}
    i = 1
    while i < len(words):
        word = words[i]
        if word == "dual":
            formula = dual(formula)
            i += 1
        elif word == "policy":
            if i + 1 >= len(words):
                raise FormulaError("policy needs a value")
            policy = AtomPolicy(words[i + 1])
            i += 2
        elif word == "preset":
            if i + 1 >= len(words):
                raise FormulaError("preset needs a name")
            preset = words[i + 1]
            i += 2
        elif word == "witness":
            i += 1
            while i < len(words) and "=" in words[i]:
                var, label = words[i].split("=", 1)
                witness[var.strip()] = label.strip()
                i += 1
        else:
            raise FormulaError(f"unknown skeleton option {word!r}")
    return skeletonize(formula, base, policy, defs.domains, preset, witness, name)


# ---------------------------------------------------------------------------
# Fallacy detectors


@dataclass(frozen=True)
class PetitioFinding:
    thesis: Locus
    echo: Locus
    evidence: str


def detect_petitio(design: Design, max_depth: int = 4) -> list:
    """Sub-designs that are delocalized copies of an enclosing design.

    Reports every pair ``(thesis, echo)`` where the tree at the echo address
    equals the tree at the thesis address shifted there, comparing up to
    ``max_depth`` reference expansions.  Reference cycles back to the host
    design are reported structurally as well.
    """
    env = design.env or {}
    positions: dict = {}
    findings: dict = {}

    def note(thesis: Locus, echo: Locus, evidence: str) -> None:
        findings.setdefault((thesis, echo), evidence)

    def walk(node: Node, budget: int) -> None:
        if isinstance(node, PosNode):
            positions.setdefault(node.focus, node)
            for _, p in node.premise_items():
                walk(p, budget)
        elif isinstance(node, NegNode):
            for _, p in node.entry_items():
                walk(p, budget)
        elif isinstance(node, RefNode):
            if design.name and node.name == design.name:
                for root_locus in sorted(design.base.loci()):
                    if root_locus.is_strict_prefix_of(node.at):
                        note(root_locus, node.at, "reference cycle")
            if budget > 0:
                try:
                    walk(resolve_ref(node, env), budget - 1)
                except LudicsError:
                    pass

    walk(design.root, max_depth)
    loci = sorted(positions)
    for thesis in loci:
        for echo in loci:
            if not thesis.is_strict_prefix_of(echo):
                continue
            try:
                shifted = relocate(positions[thesis], thesis, echo)
            except LudicsError:
                continue
            if node_equal(shifted, positions[echo], max_depth, env, env):
                note(thesis, echo, f"delocalized copy (depth {max_depth})")
    return [PetitioFinding(t, e, v)
            for (t, e), v in sorted(findings.items())]


def detect_presupposition_gap(design: Design) -> list:
    """Context loci available at some node but used by none of its premises.

    These are exactly the addresses a positive action erased by not passing
    them to any premise; attacking one of them makes interaction diverge.
    """
    erased: set = set()

    def walk_pos(node: Node, available: frozenset) -> None:
        if isinstance(node, (DaimonNode, RefNode, FaxNode)):
            return
        remaining = frozenset(c for c in available if c != node.focus)
        claimed = set()
        for i, premise in node.premise_items():
            kept = used_subset(premise, remaining)
            claimed |= kept
            walk_neg(premise, kept)
        erased.update(remaining - claimed)

    def walk_neg(node: Node, available: frozenset) -> None:
        if isinstance(node, (RefNode, FaxNode)):
            return
        claimed = set()
        for r, premise in node.entry_items():
            kept = used_subset(premise, available)
            claimed |= kept
            created = frozenset(node.focus.extend(j) for j in r)
            walk_pos(premise, kept | created)
        erased.update(available - claimed)

    if design.base.is_positive:
        walk_pos(design.root, frozenset(design.base.tines))
    else:
        walk_neg(design.root, frozenset(design.base.tines))
    return sorted(erased)

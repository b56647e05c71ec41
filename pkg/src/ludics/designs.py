"""Design trees and the validation kernel.

A design is a tree of alternating actions over a base fork:

* ``DaimonNode`` — the give-up action closing a positive fork;
* ``PosNode`` — a positive action ``(+, focus, ramification)`` with one
  negative premise per chosen bias;
* ``NegNode`` — a negative action ``(-, focus, directory)`` with one positive
  premise per directory entry;
* ``RefNode`` — a named reference, delocalized to an address; the only
  recursion mechanism (cycles are legal);
* ``FaxNode`` — the intensional copycat with a lazily materialized directory;
  it answers any finite ramification at its source and replays it at its
  target with the two addresses swapped one level down.

Directories of stored designs are finite; only ``FaxNode`` carries the
"any finite ramification" directory, and it is never materialized as data.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .loci import (
    Fork,
    LocusError,
    LudicsError,
    Locus,
    Ramification,
    format_ram,
    ram_key,
)


class ValidationError(LudicsError):
    pass


class RefError(LudicsError):
    pass


class EnumerationOverflow(LudicsError):
    pass


# ---------------------------------------------------------------------------
# Nodes


class Node:
    __slots__ = ()


class DaimonNode(Node):
    __slots__ = ()

    def __repr__(self):
        return "dai"


DAIMON = DaimonNode()


class PosNode(Node):
    __slots__ = ("focus", "ramification", "premises")

    def __init__(self, focus: Locus, ramification, premises: dict | None = None):
        self.focus = focus
        self.ramification = frozenset(ramification)
        self.premises = dict(premises or {})
        if set(self.premises) != set(self.ramification):
            raise ValidationError(
                f"positive node at {focus} needs one premise per bias in "
                f"{format_ram(self.ramification)}"
            )

    def premise_items(self):
        return sorted(self.premises.items())

    def __repr__(self):
        return f"(+ {self.focus} {format_ram(self.ramification)} ...)"


class NegNode(Node):
    __slots__ = ("focus", "entries")

    def __init__(self, focus: Locus, entries: dict | None = None):
        self.focus = focus
        self.entries = {frozenset(k): v for k, v in (entries or {}).items()}

    def entry_items(self):
        return sorted(self.entries.items(), key=lambda kv: ram_key(kv[0]))

    @property
    def is_fact(self) -> bool:
        return not self.entries

    def __repr__(self):
        return f"(- {self.focus} [{len(self.entries)} entries])"


class RefNode(Node):
    __slots__ = ("name", "at")

    def __init__(self, name: str, at: Locus):
        self.name = name
        self.at = at

    def __repr__(self):
        return f"ref {self.name} @ {self.at}"


class FaxNode(Node):
    __slots__ = ("source", "target")

    def __init__(self, source: Locus, target: Locus):
        if source == target or source.is_prefix_of(target) or target.is_prefix_of(source):
            raise ValidationError(f"fax addresses must be independent: {source}, {target}")
        self.source = source
        self.target = target

    def entry(self, ramification: Ramification) -> PosNode:
        """Materialize the premise for one queried ramification."""
        ramification = frozenset(ramification)
        premises = {
            i: FaxNode(self.target.extend(i), self.source.extend(i))
            for i in ramification
        }
        return PosNode(self.target, ramification, premises)

    def __repr__(self):
        return f"fax {self.source} -> {self.target}"


def sconse_node(focus: Locus) -> NegNode:
    return NegNode(focus, {})


# ---------------------------------------------------------------------------
# Designs


@dataclass
class Design:
    """A named design tree over a base fork.

    ``env`` maps definition names to designs and is used to resolve
    ``RefNode``s; a design may refer to itself through it.  ``holes`` records
    loci where lazy structure was truncated (diagnostics only).
    """

    name: str
    base: Fork
    root: Node
    env: dict | None = field(default=None, compare=False, repr=False)
    holes: frozenset = field(default_factory=frozenset, compare=False)

    def base_locus(self) -> Locus:
        """The unique base locus, for designs that have exactly one."""
        loci = sorted(self.base.loci())
        if len(loci) != 1:
            raise RefError(f"design {self.name} has a multi-locus base {self.base}")
        return loci[0]


def polarity_of(node: Node, env: dict | None = None) -> int:
    """+1 for positive-rooted nodes, -1 for negative-rooted ones."""
    if isinstance(node, (DaimonNode, PosNode)):
        return 1
    if isinstance(node, (NegNode, FaxNode)):
        return -1
    if isinstance(node, RefNode):
        if env is None or node.name not in env:
            raise RefError(f"cannot resolve reference {node.name!r}")
        target = env[node.name]
        return 1 if target.base.is_positive else -1
    raise TypeError(node)


def resolve_ref(node: RefNode, env: dict | None) -> Node:
    """Expand a reference one level: the named design relocated to ``node.at``."""
    if env is None or node.name not in env:
        raise RefError(f"undefined reference {node.name!r}")
    target = env[node.name]
    return relocate(target.root, target.base_locus(), node.at)


def relocate(node: Node, old: Locus, new: Locus) -> Node:
    """Rewrite every locus with prefix ``old`` to carry prefix ``new`` instead."""

    def swap(locus: Locus) -> Locus:
        if old.is_prefix_of(locus):
            return Locus(tuple(new) + tuple(locus[len(old):]))
        raise LocusError(f"locus {locus} is not under {old}")

    def go(n: Node) -> Node:
        if isinstance(n, DaimonNode):
            return n
        if isinstance(n, PosNode):
            return PosNode(swap(n.focus), n.ramification,
                           {i: go(p) for i, p in n.premises.items()})
        if isinstance(n, NegNode):
            return NegNode(swap(n.focus), {r: go(p) for r, p in n.entries.items()})
        if isinstance(n, RefNode):
            return RefNode(n.name, swap(n.at))
        if isinstance(n, FaxNode):
            return FaxNode(swap(n.source), swap(n.target))
        raise TypeError(n)

    return go(node)


def substitute_prefix(design: Design, old: Locus, new: Locus) -> Design:
    """Delocalize a whole design: every locus under ``old`` moves under ``new``."""

    def swap(locus: Locus) -> Locus:
        if old.is_prefix_of(locus):
            return Locus(tuple(new) + tuple(locus[len(old):]))
        raise LocusError(f"base locus {locus} is not under {old}")

    handle = None if design.base.handle is None else swap(design.base.handle)
    tines = frozenset(swap(t) for t in design.base.tines)
    return Design(
        name=design.name,
        base=Fork(handle, tines),
        root=relocate(design.root, old, new),
        env=design.env,
        holes=frozenset(swap(h) for h in design.holes),
    )


# ---------------------------------------------------------------------------
# Context usage

def uses(node: Node, locus: Locus) -> bool:
    """Whether the subtree may play a positive action focused exactly at *locus*.

    References and fax nodes answer by address arithmetic instead of
    expansion, conservatively for references (a reference claims everything
    under its target address), so the check terminates on cyclic designs.
    """
    if isinstance(node, DaimonNode):
        return False
    if isinstance(node, PosNode):
        if node.focus == locus:
            return True
        return any(uses(p, locus) for p in node.premises.values())
    if isinstance(node, NegNode):
        return any(uses(p, locus) for p in node.entries.values())
    if isinstance(node, RefNode):
        return node.at.is_prefix_of(locus)
    if isinstance(node, FaxNode):
        return (node.target.is_prefix_of(locus)
                or node.source.is_strict_prefix_of(locus))
    raise TypeError(node)


def used_subset(node: Node, pool) -> frozenset:
    return frozenset(c for c in pool if uses(node, c))


# ---------------------------------------------------------------------------
# Validation


@dataclass
class ValidationReport:
    ok: bool
    violations: list

    def __bool__(self):
        return self.ok


def validate_design(design: Design) -> ValidationReport:
    """Check the rule side-conditions over the whole tree.

    Enforced: polarity alternation; focus legality (every focus is a base
    locus or a sub-address created by an ancestor action); premise shape
    (one negative premise per chosen bias, rooted at the right sub-address);
    pairwise disjointness of the context loci claimed by the premises of a
    positive action; reference resolvability, base arity and polarity.
    """
    violations: list[str] = []
    env = design.env

    def complain(path: str, message: str) -> None:
        violations.append(f"{path}: {message}")

    try:
        design.base.check()
    except LudicsError as exc:
        complain("base", str(exc))
        return ValidationReport(False, violations)

    def check_ref(node: RefNode, path: str, want_positive: bool) -> None:
        if env is None or node.name not in env:
            complain(path, f"undefined reference {node.name!r}")
            return
        target = env[node.name]
        try:
            target.base_locus()
        except RefError as exc:
            complain(path, str(exc))
            return
        if target.base.is_positive != want_positive:
            complain(path, f"reference {node.name!r} has the wrong polarity")

    def check_pos(node: Node, path: str, tines: frozenset, legal: frozenset) -> None:
        if isinstance(node, DaimonNode):
            return
        if isinstance(node, RefNode):
            if node.at not in legal:
                complain(path, f"reference address {node.at} is not an available locus")
            check_ref(node, path, want_positive=True)
            return
        if not isinstance(node, PosNode):
            complain(path, f"expected a positive action, found {node!r}")
            return
        if node.focus not in legal:
            complain(path, f"focus {node.focus} is neither a base locus nor "
                           f"created by an ancestor action")
        created = frozenset(node.focus.extend(i) for i in node.ramification)
        context = frozenset(t for t in tines if t != node.focus)
        claims = []
        for i, premise in node.premise_items():
            sub_path = f"{path}.{i}"
            here = node.focus.extend(i)
            if isinstance(premise, NegNode) and premise.focus != here:
                complain(sub_path, f"premise for bias {i} must be rooted at {here}, "
                                   f"found {premise.focus}")
            if isinstance(premise, FaxNode) and premise.source != here:
                complain(sub_path, f"fax premise for bias {i} must have source {here}")
            if isinstance(premise, RefNode) and premise.at != here:
                complain(sub_path, f"reference premise for bias {i} must sit at {here}")
            claims.append((i, used_subset(premise, context)))
            check_neg(premise, sub_path, context, legal | created)
        for (i, ci), (j, cj) in itertools.combinations(claims, 2):
            shared = ci & cj
            if shared:
                complain(path, "premises {} and {} are not pairwise disjoint on "
                               "context loci {}".format(
                                   i, j, ", ".join(str(s) for s in sorted(shared))))

    def check_neg(node: Node, path: str, context: frozenset, legal: frozenset) -> None:
        if isinstance(node, RefNode):
            check_ref(node, path, want_positive=False)
            return
        if isinstance(node, FaxNode):
            return
        if not isinstance(node, NegNode):
            complain(path, f"expected a negative action, found {node!r}")
            return
        for r, premise in node.entry_items():
            sub_path = f"{path}.{format_ram(r)}"
            for b in r:
                if not isinstance(b, int) or b < 0:
                    complain(sub_path, f"bad bias {b!r} in directory entry")
            created = frozenset(node.focus.extend(i) for i in r)
            kept = used_subset(premise, context)
            check_pos(premise, sub_path, created | kept, legal | created)

    base = design.base
    if base.is_positive:
        root_pol = None
        try:
            root_pol = polarity_of(design.root, env)
        except LudicsError as exc:
            complain("root", str(exc))
        if root_pol == -1:
            complain("root", "positive base needs a positive or daimon root")
        else:
            check_pos(design.root, "root", base.tines, frozenset(base.tines))
    else:
        handle = base.handle
        root = design.root
        if isinstance(root, (DaimonNode, PosNode)):
            complain("root", "negative base needs a negative root")
        elif isinstance(root, NegNode) and root.focus != handle:
            complain("root", f"root focus must be the handle {handle}")
        elif isinstance(root, FaxNode) and root.source != handle:
            complain("root", f"fax root must have source {handle}")
        elif isinstance(root, RefNode):
            if root.at != handle:
                complain("root", f"reference root must sit at {handle}")
            check_ref(root, "root", want_positive=False)
        if isinstance(root, NegNode):
            check_neg(root, "root", base.tines, frozenset(base.loci()))

    return ValidationReport(not violations, violations)


# ---------------------------------------------------------------------------
# Structural equality


def node_equal(a: Node, b: Node, depth: int,
               env_a: dict | None = None, env_b: dict | None = None) -> bool:
    """Structural equality, expanding references up to ``depth`` times.

    Beyond the budget, unexpanded references compare by (name, address);
    fax nodes always compare by their address pair.
    """
    if isinstance(a, RefNode) and isinstance(b, RefNode):
        if a.name == b.name and a.at == b.at:
            return True
    if isinstance(a, RefNode) or isinstance(b, RefNode):
        if depth <= 0:
            return False
        try:
            if isinstance(a, RefNode):
                a = resolve_ref(a, env_a)
            if isinstance(b, RefNode):
                b = resolve_ref(b, env_b)
        except LudicsError:
            return False
        return node_equal(a, b, depth - 1, env_a, env_b)
    if isinstance(a, DaimonNode):
        return isinstance(b, DaimonNode)
    if isinstance(a, FaxNode):
        return (isinstance(b, FaxNode)
                and a.source == b.source and a.target == b.target)
    if isinstance(a, PosNode):
        if not isinstance(b, PosNode):
            return False
        if a.focus != b.focus or a.ramification != b.ramification:
            return False
        return all(node_equal(a.premises[i], b.premises[i], depth, env_a, env_b)
                   for i in a.ramification)
    if isinstance(a, NegNode):
        if not isinstance(b, NegNode):
            return False
        if a.focus != b.focus or set(a.entries) != set(b.entries):
            return False
        return all(node_equal(p, b.entries[r], depth, env_a, env_b)
                   for r, p in a.entries.items())
    raise TypeError(a)


def design_equal(a: Design, b: Design, depth: int = 0) -> bool:
    if a.base != b.base:
        return False
    return node_equal(a.root, b.root, depth, a.env, b.env)


def canonical_key(node: Node) -> tuple:
    """A total, deterministic ordering key on finite design trees."""
    if isinstance(node, DaimonNode):
        return (0,)
    if isinstance(node, PosNode):
        return (1, tuple(node.focus), ram_key(node.ramification),
                tuple(canonical_key(p) for _, p in node.premise_items()))
    if isinstance(node, NegNode):
        return (2, tuple(node.focus),
                tuple((ram_key(r), canonical_key(p)) for r, p in node.entry_items()))
    if isinstance(node, RefNode):
        return (3, node.name, tuple(node.at))
    if isinstance(node, FaxNode):
        return (4, tuple(node.source), tuple(node.target))
    raise TypeError(node)


# ---------------------------------------------------------------------------
# Exhaustive enumeration


def _rams(max_bias: int, max_ram: int):
    """All ramifications over biases < max_bias with at most max_ram elements."""
    biases = range(max_bias)
    out = []
    for size in range(min(max_bias, max_ram) + 1):
        out.extend(frozenset(c) for c in itertools.combinations(biases, size))
    return sorted(out, key=ram_key)


def count_designs(base: Fork, max_depth: int, max_bias: int, max_ram: int) -> int:
    """Number of designs the enumerator would yield (engine-side guard)."""
    rams = _rams(max_bias, max_ram)

    def count_pos(tines: tuple, depth: int) -> int:
        total = 1  # daimon
        for focus in tines:
            others = tuple(t for t in tines if t != focus)
            for r in rams:
                if r and depth <= 0:
                    continue
                total += _count_premises(focus, sorted(r), others, depth - 1)
        return total

    def _count_premises(focus: Locus, biases: list, pool: tuple, depth: int) -> int:
        if not biases:
            return 1
        i, rest = biases[0], biases[1:]
        total = 0
        for pick in _subsets(pool):
            remaining = tuple(t for t in pool if t not in pick)
            n_here = count_neg_exact(focus.extend(i), pick, depth)
            if n_here:
                total += n_here * _count_premises(focus, rest, remaining, depth)
        return total

    def count_neg_exact(handle: Locus, pool: tuple, depth: int) -> int:
        """Negative designs at ``handle`` whose context usage is exactly ``pool``."""
        by_subset = {}
        for sub in _subsets(pool):
            by_subset[sub] = count_neg_within(handle, sub, depth)
        return _exactify(pool, by_subset)

    def count_neg_within(handle: Locus, pool: tuple, depth: int) -> int:
        total = 1  # empty directory
        per_entry = []
        for r in rams:
            if depth <= 0:
                continue
            tines = tuple(sorted(tuple(handle.extend(i) for i in r) + pool))
            per_entry.append(count_pos(tines, depth - 1))
        for n in per_entry:
            total *= (1 + n)
        return total

    def _exactify(pool: tuple, by_subset: dict) -> int:
        total = by_subset[pool]
        for sub in _subsets(pool):
            if sub != pool:
                total -= _exactify(sub, by_subset)
        return total

    def _subsets(pool: tuple):
        out = []
        for size in range(len(pool) + 1):
            out.extend(tuple(c) for c in itertools.combinations(pool, size))
        return out

    if base.is_positive:
        return count_pos(tuple(sorted(base.tines)), max_depth)
    return count_neg_within(base.handle, tuple(sorted(base.tines)), max_depth)


def random_design(base: Fork, max_depth: int, max_bias: int, max_ram: int,
                  rng, name: str = "random") -> Design:
    """A random finite design within the enumeration bounds.

    The design space at useful bounds is far too large to enumerate, so
    property tests sample it with a seeded generator instead; the output
    always validates.
    """
    rams = _rams(max_bias, max_ram)

    def gen_pos(tines: tuple, depth: int) -> Node:
        choices = [r for r in rams if depth > 0 or not r]
        if not tines or rng.random() < 0.2:
            return DAIMON
        focus = rng.choice(sorted(tines))
        r = rng.choice(choices)
        others = tuple(t for t in tines if t != focus)
        premises = {}
        for i in sorted(r):
            keep = tuple(t for t in others if rng.random() < 0.3)
            premises[i] = gen_neg(focus.extend(i), keep, depth - 1)
            others = tuple(t for t in others if not uses(premises[i], t))
        return PosNode(focus, r, premises)

    def gen_neg(handle: Locus, pool: tuple, depth: int) -> Node:
        entries = {}
        if depth > 0:
            for r in rams:
                if rng.random() < 0.45:
                    tines = tuple(handle.extend(i) for i in r) + pool
                    entries[r] = gen_pos(tines, depth - 1)
        return NegNode(handle, entries)

    if base.is_positive:
        root = gen_pos(tuple(sorted(base.tines)), max_depth)
    else:
        root = gen_neg(base.handle, tuple(sorted(base.tines)), max_depth)
    return Design(name=name, base=base, root=root)


def enumerate_designs(base: Fork, max_depth: int, max_bias: int, max_ram: int,
                      ceiling: int = 10 ** 6):
    """Yield every validated finite design on ``base`` within the bounds.

    Bounds: tree depth at most ``max_depth`` (root at depth 0), biases
    strictly below ``max_bias``, ramification sizes at most ``max_ram``.
    Designs come out exactly once, sorted by their canonical key.
    """
    if len(base.tines) > 2:
        raise EnumerationOverflow("enumeration supports bases with at most 2 tines")
    total = count_designs(base, max_depth, max_bias, max_ram)
    if total > ceiling:
        raise EnumerationOverflow(
            f"enumeration would yield {total} designs (ceiling {ceiling})")
    rams = _rams(max_bias, max_ram)

    def gen_pos(tines: tuple, depth: int):
        yield DAIMON
        for focus in sorted(tines):
            others = tuple(t for t in tines if t != focus)
            for r in rams:
                if r and depth <= 0:
                    continue
                for premises in gen_premises(focus, sorted(r), others, depth - 1):
                    yield PosNode(focus, r, premises)

    def gen_premises(focus: Locus, biases: list, pool: tuple, depth: int):
        if not biases:
            yield {}
            return
        i, rest = biases[0], biases[1:]
        for node in gen_neg(focus.extend(i), pool, depth):
            remaining = tuple(t for t in pool if not uses(node, t))
            for more in gen_premises(focus, rest, remaining, depth):
                yield {i: node, **more}

    def gen_neg(handle: Locus, pool: tuple, depth: int):
        choices = []
        for r in rams:
            if depth <= 0:
                continue
            tines = tuple(sorted(tuple(handle.extend(i) for i in r) + pool))
            choices.append((r, [None] + list(gen_pos(tines, depth - 1))))
        if not choices:
            yield NegNode(handle, {})
            return
        for combo in itertools.product(*(opts for _, opts in choices)):
            entries = {r: node
                       for (r, _), node in zip(choices, combo) if node is not None}
            yield NegNode(handle, entries)

    if base.is_positive:
        nodes = gen_pos(tuple(sorted(base.tines)), max_depth)
    else:
        nodes = gen_neg(base.handle, tuple(sorted(base.tines)), max_depth)

    designs = []
    for k, node in enumerate(nodes):
        designs.append(Design(name=f"enum{k}", base=base, root=node))
    designs.sort(key=lambda d: canonical_key(d.root))
    for k, d in enumerate(designs):
        d.name = f"enum{k}"
        yield d

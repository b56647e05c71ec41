"""Address substitution, the copycat design, and bounded expansion.

The copycat (``fax``) between two independent addresses is the recursive
design that accepts any finite ramification at its source and replays it at
its target, swapping the two addresses one level down.  Normalizing a design
against it moves the design from one address to the other; ``check_fax_theorem``
verifies that on concrete designs.
"""

from __future__ import annotations

from dataclasses import dataclass

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
    design_equal,
    resolve_ref,
    substitute_prefix,
)
from .interaction import DEFAULT_FUEL, Net, make_net, normalize


class FaxError(LudicsError):
    pass


@dataclass(frozen=True)
class FaxSpec:
    source: Locus  # negative side
    target: Locus  # positive side
    depth_hint: int = 4

    def __post_init__(self):
        if self.source == self.target:
            raise FaxError("fax addresses must differ")
        if (self.source.is_prefix_of(self.target)
                or self.target.is_prefix_of(self.source)):
            raise FaxError("fax addresses must not be prefixes of one another")


def fax(spec: FaxSpec, name: str | None = None) -> Design:
    """The copycat design of base ``source |- target``."""
    return Design(
        name=name or f"fax_{spec.source}_{spec.target}",
        base=Fork(spec.source, frozenset({spec.target})),
        root=FaxNode(spec.source, spec.target),
    )


def expand(design: Design, depth: int, biases=None) -> Design:
    """Unfold lazy directories and references up to ``depth`` levels.

    *biases*, when given, is the finite bias universe used to materialize
    lazy fax directories (all ramifications over it, up to that size).
    Truncated lazy nodes become empty-directory leaves and are recorded in
    the result's ``holes``; finite structure is copied unchanged, so a design
    without lazy nodes expands to itself at any depth.
    """
    biases = sorted(biases) if biases else []
    holes = set(design.holes)

    def all_rams():
        import itertools

        out = [frozenset()]
        for size in range(1, len(biases) + 1):
            out.extend(frozenset(c) for c in itertools.combinations(biases, size))
        return out

    rams = all_rams()

    def go(node: Node, budget: int) -> Node:
        if isinstance(node, DaimonNode):
            return node
        if isinstance(node, PosNode):
            return PosNode(node.focus, node.ramification,
                           {i: go(p, budget) for i, p in node.premises.items()})
        if isinstance(node, NegNode):
            return NegNode(node.focus, {r: go(p, budget) for r, p in node.entries.items()})
        if isinstance(node, RefNode):
            if budget <= 0:
                holes.add(node.at)
                return _truncated(node, design.env)
            return go(resolve_ref(node, design.env), budget - 1)
        if isinstance(node, FaxNode):
            if budget <= 0:
                holes.add(node.source)
                return NegNode(node.source, {})
            return NegNode(node.source, {r: go(node.entry(r), budget - 1) for r in rams})
        raise TypeError(node)

    return Design(
        name=design.name,
        base=design.base,
        root=go(design.root, depth),
        env=design.env,
        holes=frozenset(holes),
    )


def _truncated(node: RefNode, env) -> Node:
    """Stand-in for a reference cut off by the expansion budget."""
    try:
        target = env[node.name] if env else None
    except TypeError:
        target = None
    if target is not None and target.base.is_positive:
        return PosNode(node.at, frozenset(), {})
    return NegNode(node.at, {})


def delocalize_by_fax(design: Design, target: Locus,
                      fuel: int = DEFAULT_FUEL):
    """Normalize ``design`` against the copycat toward ``target``."""
    tines = sorted(design.base.tines)
    if not design.base.is_positive or len(tines) != 1:
        raise FaxError("delocalization needs a single-tine positive base")
    source = tines[0]
    copier = fax(FaxSpec(source, target), name="fax")
    net = make_net([design, copier], {source}, validate=False)
    return normalize(net, fuel, record_trace=False)


def check_fax_theorem(design: Design, target: Locus,
                      fuel: int = DEFAULT_FUEL):
    """Whether normalization against the copycat equals direct substitution.

    Returns ``(ok, diagnostic)``; fuel exhaustion reports as a failure with
    its own diagnostic rather than raising.
    """
    tines = sorted(design.base.tines)
    source = tines[0]
    verdict, _ = delocalize_by_fax(design, target, fuel)
    if verdict.kind == "out-of-fuel":
        return False, f"out of fuel after {verdict.steps} steps"
    if verdict.kind == "diverged":
        return False, f"diverged: {verdict.reason.describe()}"
    expected = substitute_prefix(design, source, target)
    if design_equal(verdict.residual, expected, depth=64):
        return True, "ok"
    return False, "residual differs from the substituted design"

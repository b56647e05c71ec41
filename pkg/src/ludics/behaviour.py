"""Elementary designs, orthogonal sets over finite pools, and the two
design-level products.

True bi-orthogonal closure is not computable, so behaviours are handled
through finite generator sets paired with a finite pool of counter-designs;
every membership answer is explicitly pool-relative.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

from .loci import Fork, Locus, LudicsError, ram_key
from .designs import (
    DAIMON,
    DaimonNode,
    Design,
    NegNode,
    PosNode,
    canonical_key,
    design_equal,
)
from .interaction import DEFAULT_FUEL, orthogonal


class BehaviourError(LudicsError):
    pass


BUILTIN_NAMES = ("daimon-pos", "daimon-neg", "sconse", "bomb-pos")


def builtin(name: str, locus: Locus) -> Design:
    """The four canonical elementary designs at a given address."""
    if name == "daimon-pos":
        return Design("daimon-pos", Fork(None, frozenset({locus})), DAIMON)
    if name == "daimon-neg":
        # answer the empty ramification, then give up
        return Design("daimon-neg", Fork(locus, frozenset()),
                      NegNode(locus, {frozenset(): DAIMON}))
    if name == "sconse":
        return Design("sconse", Fork(locus, frozenset()), NegNode(locus, {}))
    if name == "bomb-pos":
        return Design("bomb-pos", Fork(None, frozenset({locus})),
                      PosNode(locus, frozenset(), {}))
    raise BehaviourError(f"unknown builtin {name!r}")


class OrthogonalSplit(NamedTuple):
    orthogonal: tuple
    unknown: tuple


def orthogonal_set(design: Design, pool, fuel: int = DEFAULT_FUEL) -> OrthogonalSplit:
    """The subset of the pool orthogonal to the design.

    Counter-designs whose interaction runs out of fuel are excluded and
    reported separately.
    """
    kept = []
    unknown = []
    for candidate in pool:
        verdict = orthogonal(design, candidate, fuel)
        if verdict == "yes":
            kept.append(candidate)
        elif verdict == "unknown":
            unknown.append(candidate)
    return OrthogonalSplit(tuple(kept), tuple(unknown))


@dataclass(frozen=True)
class BehaviourHandle:
    """A finite approximation of the behaviour generated by some designs.

    ``generators`` share one base; ``pool`` holds candidate counter-designs
    on the dual base.  Answers are sound relative to the pool only.
    """

    generators: tuple
    pool: tuple
    fuel: int = DEFAULT_FUEL

    def __post_init__(self):
        if not self.generators:
            raise BehaviourError("a behaviour handle needs at least one generator")
        base = self.generators[0].base
        for g in self.generators:
            if g.base != base:
                raise BehaviourError("generators must share one base")

    @property
    def base(self) -> Fork:
        return self.generators[0].base


def in_behaviour(design: Design, handle: BehaviourHandle) -> str:
    """Pool-relative bi-orthogonal membership: yes, no, or unknown.

    Computes the pool's counter-designs shared by every generator, then
    tests the candidate against each of them.  A clean pass is a *yes*
    relative to the pool; fuel exhaustion anywhere degrades it to unknown.
    """
    if design.base != handle.base:
        raise BehaviourError("candidate must share the generators' base")
    shared: list | None = None
    saw_unknown = False
    for g in handle.generators:
        split = orthogonal_set(g, handle.pool, handle.fuel)
        saw_unknown = saw_unknown or bool(split.unknown)
        keys = {id(d) for d in split.orthogonal}
        if shared is None:
            shared = list(split.orthogonal)
        else:
            shared = [d for d in shared if id(d) in keys]
    for counter in shared or ():
        verdict = orthogonal(design, counter, handle.fuel)
        if verdict == "no":
            return "no"
        if verdict == "unknown":
            saw_unknown = True
    return "unknown" if saw_unknown else "yes"


# ---------------------------------------------------------------------------
# Products


def odot(left: Design, right: Design) -> Design:
    """The design-level product of two positive designs on the same base.

    The daimon absorbs; intersecting first ramifications collapse to the
    daimon; otherwise the two first actions merge into one action on the
    union, keeping each premise where it was.
    """
    base = left.base
    if base != right.base:
        raise BehaviourError("product needs designs on the same base")
    if not base.is_positive or len(base.tines) != 1:
        raise BehaviourError("product needs a single-tine positive base")
    name = f"({left.name} (.) {right.name})"
    if isinstance(left.root, DaimonNode) or isinstance(right.root, DaimonNode):
        return Design(name, base, DAIMON)
    lroot, rroot = left.root, right.root
    if not isinstance(lroot, PosNode) or not isinstance(rroot, PosNode):
        raise BehaviourError("product needs positive designs")
    if lroot.ramification & rroot.ramification:
        return Design(name, base, DAIMON)
    merged = PosNode(
        lroot.focus,
        lroot.ramification | rroot.ramification,
        {**lroot.premises, **rroot.premises},
    )
    return Design(name, base, merged)


def tensor_generators(left: BehaviourHandle, right: BehaviourHandle) -> BehaviourHandle:
    """Generators for the tensor of two behaviours: all pairwise products.

    Closure is deferred to the pool-relative bi-orthogonal of
    ``in_behaviour``; the result is an approximation by construction.
    """
    products = []
    seen = set()
    for a in left.generators:
        for b in right.generators:
            d = odot(a, b)
            key = canonical_key(d.root)
            if key not in seen:
                seen.add(key)
                products.append(d)
    products.sort(key=lambda d: canonical_key(d.root))
    pool = []
    seen_pool = set()
    for d in left.pool + right.pool:
        key = canonical_key(d.root)
        if key not in seen_pool:
            seen_pool.add(key)
            pool.append(d)
    return BehaviourHandle(tuple(products), tuple(pool),
                           max(left.fuel, right.fuel))

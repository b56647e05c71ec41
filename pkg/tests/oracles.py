"""Independent oracles the tests check the engine against.

Everything here is deliberately written from the definitions, without
touching the engine's net machinery: a recursive-descent walk for closed
two-design interactions, and a recursive counting scheme for the design
space covered by the enumerator.
"""

from __future__ import annotations

import itertools

from ludics.designs import DaimonNode


def closed_orthogonal(pos_root, neg_root, locus) -> bool:
    """Convergence of the closed net of one positive and one negative design.

    Walks the positive token directly: daimon converges; a focus must find
    a waiting negative node whose directory offers the played ramification,
    and the premises of the action are left waiting at the sub-addresses.
    Finite trees only.
    """

    def walk(node, waiting) -> bool:
        if isinstance(node, DaimonNode):
            return True
        dual = waiting.get(node.focus)
        if dual is None:
            return False
        entry = dual.entries.get(node.ramification)
        if entry is None:
            return False
        rest = dict(waiting)
        del rest[node.focus]
        for i, premise in node.premises.items():
            rest[node.focus.extend(i)] = premise
        return walk(entry, rest)

    return walk(pos_root, {locus: neg_root})


def count_design_space(base_is_positive: bool, n_tines: int, max_depth: int,
                       max_bias: int, max_ram: int) -> int:
    """How many finite designs the bounds admit, counted from the rules.

    Counts trees where a positive action focuses one available tine and
    distributes the remaining ones disjointly over its premises (a premise
    counts by the subset it actually uses), and a negative action offers any
    subset of the allowed ramifications, each premise free to use any subset
    of the context.  Mirrors the enumerator's strictly-threaded space but is
    derived independently from the rule shapes.
    """
    rams = []
    for size in range(min(max_bias, max_ram) + 1):
        rams.extend(frozenset(c) for c in itertools.combinations(range(max_bias), size))

    def subsets(pool: tuple):
        for size in range(len(pool) + 1):
            yield from itertools.combinations(pool, size)

    def pos(tines: tuple, depth: int) -> int:
        total = 1  # daimon
        for focus in tines:
            others = tuple(t for t in tines if t != focus)
            for r in rams:
                if r and depth <= 0:
                    continue
                total += premises(list(sorted(r)), others, depth - 1)
        return total

    def premises(biases: list, pool: tuple, depth: int) -> int:
        if not biases:
            return 1
        total = 0
        for pick in subsets(pool):
            rest = tuple(t for t in pool if t not in pick)
            here = neg_exact(tuple(pick), depth)
            if here:
                total += here * premises(biases[1:], rest, depth)
        return total

    def neg_within(pool: tuple, depth: int) -> int:
        total = 1
        for r in rams:
            if depth <= 0:
                continue
            total *= 1 + pos(tuple(f"sub{i}" for i in sorted(r)) + pool, depth - 1)
        return total

    def neg_exact(pool: tuple, depth: int) -> int:
        total = neg_within(pool, depth)
        for pick in subsets(pool):
            if len(pick) < len(pool):
                total -= neg_exact(tuple(pick), depth)
        return total

    tines = tuple(f"t{i}" for i in range(n_tines))
    if base_is_positive:
        return pos(tines, max_depth)
    return neg_within(tines, max_depth)


def count_pairs_in_agreement(pool_pos, pool_neg, locus, engine_orth) -> tuple:
    """Compare engine orthogonality with the oracle over a full product."""
    disagreements = []
    yes = 0
    for p in pool_pos:
        for n in pool_neg:
            expected = closed_orthogonal(p.root, n.root, locus)
            got = engine_orth(p, n)
            if got != expected:
                disagreements.append((p.name, n.name, expected, got))
            elif expected:
                yes += 1
    return yes, disagreements

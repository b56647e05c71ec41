"""Addresses and one-sided sequents of addresses.

A locus is a finite sequence of natural-number biases; its parity is the
parity of its length.  A ramification is a finite set of biases.  A fork is
a sequent of loci with at most one locus on the left (the handle, making the
fork negative) and finitely many on the right (the tines).
"""

from __future__ import annotations

import re
from dataclasses import dataclass


class LudicsError(Exception):
    """Base class for all engine errors."""


class LocusError(LudicsError):
    pass


class ForkError(LudicsError):
    pass


Bias = int
Ramification = frozenset  # frozenset[int]


def ram(*biases: int) -> Ramification:
    for b in biases:
        if not isinstance(b, int) or b < 0:
            raise LocusError(f"bias must be a natural number, got {b!r}")
    return frozenset(biases)


def ram_key(r: Ramification) -> tuple:
    """Canonical ordering key: ramifications sort by their sorted elements."""
    return tuple(sorted(r))


def format_ram(r: Ramification) -> str:
    return "{" + ",".join(str(b) for b in sorted(r)) + "}"


class Locus(tuple):
    """A finite sequence of biases, e.g. ``Locus((0, 3, 5))``.

    Loci are plain tuples underneath, so they hash and compare fast and can
    be used as dict keys throughout the interaction engine.
    """

    __slots__ = ()

    def __new__(cls, path=()):
        path = tuple(path)
        for b in path:
            if not isinstance(b, int) or b < 0:
                raise LocusError(f"bias must be a natural number, got {b!r}")
        return super().__new__(cls, path)

    def extend(self, bias: int) -> "Locus":
        if not isinstance(bias, int) or bias < 0:
            raise LocusError(f"bias must be a natural number, got {bias!r}")
        return Locus(tuple(self) + (bias,))

    @property
    def parity(self) -> int:
        return len(self) % 2

    def is_prefix_of(self, other: "Locus") -> bool:
        """True when self is a (non-strict) prefix of other."""
        return len(self) <= len(other) and tuple(other[: len(self)]) == tuple(self)

    def is_strict_prefix_of(self, other: "Locus") -> bool:
        return len(self) < len(other) and tuple(other[: len(self)]) == tuple(self)

    def __str__(self) -> str:
        if not self:
            return "<>"
        return ".".join(str(b) for b in self)

    def __repr__(self) -> str:
        return f"Locus({str(self)!r})"


ROOT = Locus(())

_SYM_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_INT_RE = re.compile(r"\d+")


def parse_locus(text: str, bindings: dict[str, Locus] | None = None) -> Locus:
    """Parse a locus literal: ``"<>"``, ``"0.3.5"``, or ``"xi.1.1"``.

    A leading symbol must be bound to a locus in *bindings*; the remaining
    dotted integers extend it.
    """
    text = text.strip()
    if text == "<>":
        return ROOT
    if not text:
        raise LocusError("empty locus literal")
    parts = text.split(".")
    head = parts[0]
    if _INT_RE.fullmatch(head):
        base: tuple = ()
        rest = parts
    elif _SYM_RE.fullmatch(head):
        if not bindings or head not in bindings:
            raise LocusError(f"unbound locus symbol {head!r}")
        base = tuple(bindings[head])
        rest = parts[1:]
    else:
        raise LocusError(f"malformed locus literal {text!r}")
    path = list(base)
    for p in rest:
        if not _INT_RE.fullmatch(p):
            raise LocusError(f"malformed bias {p!r} in locus literal {text!r}")
        path.append(int(p))
    return Locus(path)


def locus_extend(locus: Locus, bias: int) -> Locus:
    return locus.extend(bias)


@dataclass(frozen=True)
class Fork:
    """A sequent of loci: ``handle |- tines`` (negative) or ``|- tines`` (positive)."""

    handle: Locus | None
    tines: frozenset  # frozenset[Locus]

    def __post_init__(self):
        object.__setattr__(self, "tines", frozenset(self.tines))
        self.check()

    def check(self) -> None:
        loci = list(self.tines)
        if self.handle is not None:
            loci.append(self.handle)
        for a in loci:
            for b in loci:
                if a is not b and a.is_prefix_of(b):
                    raise ForkError(f"fork loci are not prefix-free: {a} vs {b}")

    @property
    def is_positive(self) -> bool:
        return self.handle is None

    def loci(self) -> frozenset:
        if self.handle is None:
            return self.tines
        return self.tines | {self.handle}

    def sorted_tines(self) -> list[Locus]:
        return sorted(self.tines)

    def __str__(self) -> str:
        tines = ", ".join(str(t) for t in self.sorted_tines())
        if self.handle is None:
            return f"|- {tines}" if tines else "|-"
        if tines:
            return f"{self.handle} |- {tines}"
        return f"{self.handle} |-"


def positive_fork(*tines: Locus) -> Fork:
    return Fork(None, frozenset(tines))


def negative_fork(handle: Locus, *tines: Locus) -> Fork:
    return Fork(handle, frozenset(tines))

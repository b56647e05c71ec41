"""Nets of designs and their normalization.

A net connects designs through cut loci: addresses occurring once as a tine
(positive side) and once as a handle (negative side).  Normalization passes a
single positive token around: the main design's head action either closes the
run (daimon), consumes a cut (the dual directory must offer the played
ramification, otherwise the run diverges), or — when the focus is visible —
is emitted into the residual design being built.

Context threading is inferred from usage: when an action distributes its
available loci over its premises, the loci no premise will ever focus are
erased from the net, together with the listeners waiting under them.  A later
focus on an erased (or foreign) locus diverges; this powers the
presupposition scenarios.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .loci import Fork, Locus, LudicsError, format_ram, ram_key
from .designs import (
    DAIMON,
    DaimonNode,
    Design,
    FaxNode,
    NegNode,
    Node,
    PosNode,
    RefNode,
    resolve_ref,
    used_subset,
    validate_design,
)

DEFAULT_FUEL = 10_000


class NetError(LudicsError):
    pass


# ---------------------------------------------------------------------------
# Actions, traces, verdicts


@dataclass(frozen=True)
class Action:
    kind: str  # "pos" | "neg" | "dai"
    focus: Locus | None = None
    ramification: frozenset | None = None

    def __str__(self) -> str:
        if self.kind == "dai":
            return "(†)"
        sign = "+" if self.kind == "pos" else "-"
        return f"({sign}) {self.focus} {format_ram(self.ramification)}"

    def to_json(self) -> dict:
        if self.kind == "dai":
            return {"kind": "dai"}
        return {
            "kind": self.kind,
            "focus": str(self.focus),
            "ramification": sorted(self.ramification),
        }

    @staticmethod
    def from_json(data: dict) -> "Action":
        kind = data.get("kind")
        if kind == "dai":
            return Action("dai")
        if kind not in ("pos", "neg"):
            raise NetError(f"bad action kind {kind!r}")
        from .loci import parse_locus

        focus = parse_locus(str(data["focus"]))
        return Action(kind, focus, frozenset(int(b) for b in data["ramification"]))


def daimon_action() -> Action:
    return Action("dai")


def positive_action(focus: Locus, ramification) -> Action:
    return Action("pos", focus, frozenset(ramification))


@dataclass(frozen=True)
class TraceStep:
    member: str
    action: Action

    def to_json(self) -> dict:
        data = self.action.to_json()
        data["member"] = self.member
        return data


@dataclass(frozen=True)
class DivergenceReason:
    focus: Locus
    ramification: frozenset | None = None  # missing directory entry when set
    erased: bool = False                   # focus on an erased locus

    def describe(self) -> str:
        if self.ramification is not None:
            return (f"no directory entry {format_ram(self.ramification)} "
                    f"at {self.focus}")
        if self.erased:
            return f"focus on erased locus {self.focus}"
        return f"focus on foreign locus {self.focus}"


@dataclass(frozen=True)
class Verdict:
    kind: str  # "converged" | "diverged" | "out-of-fuel"
    residual: Design | None = None
    reason: DivergenceReason | None = None
    steps: int = 0

    @property
    def converged(self) -> bool:
        return self.kind == "converged"

    def __str__(self) -> str:
        if self.kind == "converged":
            return "converged"
        if self.kind == "diverged":
            return f"diverged({self.reason.focus})"
        return "out-of-fuel"

    def to_json(self) -> dict:
        data = {"kind": self.kind, "steps": self.steps}
        if self.reason is not None:
            data["reason"] = {
                "focus": str(self.reason.focus),
                "erased": self.reason.erased,
            }
            if self.reason.ramification is not None:
                data["reason"]["ramification"] = sorted(self.reason.ramification)
        return data


@dataclass(frozen=True)
class Trace:
    steps: tuple
    verdict: Verdict

    def text(self) -> str:
        lines = []
        for k, step in enumerate(self.steps, start=1):
            a = step.action
            if a.kind == "dai":
                lines.append(f"STEP {k}: {step.member} (†)")
            else:
                sign = "+" if a.kind == "pos" else "-"
                lines.append(
                    f"STEP {k}: {step.member} ({sign}) {a.focus} "
                    f"{format_ram(a.ramification)}")
        lines.append(f"VERDICT: {self.verdict}")
        return "\n".join(lines)

    def to_json(self) -> dict:
        return {
            "steps": [s.to_json() for s in self.steps],
            "verdict": self.verdict.to_json(),
        }

    def json_text(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# Nets


@dataclass
class Net:
    members: dict                      # name -> Design
    cuts: frozenset                    # frozenset[Locus]
    visible: Fork = field(init=False)

    def __post_init__(self):
        self.visible = _visible_fork(self.members, self.cuts)


def _visible_fork(members: dict, cuts: frozenset) -> Fork:
    handles = [d.base.handle for d in members.values()
               if d.base.handle is not None and d.base.handle not in cuts]
    if len(handles) > 1:
        raise NetError("more than one uncut handle in the net")
    tines = []
    for d in members.values():
        tines.extend(t for t in d.base.tines if t not in cuts)
    try:
        return Fork(handles[0] if handles else None, frozenset(tines))
    except LudicsError as exc:
        raise NetError(f"visible base is not a fork: {exc}")


def make_net(designs, cuts, validate: bool = True) -> Net:
    """Assemble designs and cut loci into a net, checking cut duality."""
    members: dict = {}
    for d in designs:
        if d.name in members:
            raise NetError(f"duplicate member name {d.name!r}")
        members[d.name] = d
    if validate:
        for d in members.values():
            report = validate_design(d)
            if not report.ok:
                raise NetError(
                    f"member {d.name} fails validation: " + "; ".join(report.violations))
    cuts = frozenset(cuts)
    for a in cuts:
        for b in cuts:
            if a is not b and a.is_prefix_of(b):
                raise NetError(f"cut loci overlap: {a} and {b}")
    for c in cuts:
        pos = [n for n, d in members.items() if c in d.base.tines]
        neg = [n for n, d in members.items() if d.base.handle == c]
        if len(pos) != 1 or len(neg) != 1 or pos[0] == neg[0]:
            raise NetError(
                f"cut locus {c} must occur in exactly one positive and one "
                f"other negative base position")
    positive_members = [n for n, d in members.items() if d.base.is_positive]
    net = Net(members, cuts)
    if len(positive_members) > 1:
        raise NetError("more than one positive-based member")
    if positive_members and net.visible.handle is not None:
        raise NetError("a positive-based member cannot coexist with an uncut handle")
    if not positive_members and net.visible.handle is None:
        raise NetError("no starting positive design in the net")
    return net


# ---------------------------------------------------------------------------
# The normalization machine


class _Diverged(Exception):
    def __init__(self, reason: DivergenceReason):
        self.reason = reason


class _OutOfFuel(Exception):
    pass


@dataclass
class _Listener:
    member: str
    node: Node
    ctx: frozenset


class _State:
    __slots__ = ("fuel", "fuel0", "trace", "erased", "envs")

    def __init__(self, fuel: int, envs: dict, record: bool):
        self.fuel = fuel
        self.fuel0 = fuel
        self.trace = [] if record else None
        self.erased = set()
        self.envs = envs

    def burn(self):
        if self.fuel <= 0:
            raise _OutOfFuel()
        self.fuel -= 1

    def record(self, member: str, action: Action):
        if self.trace is not None:
            self.trace.append(TraceStep(member, action))

    @property
    def steps(self) -> int:
        return self.fuel0 - self.fuel


def _erase_cascade(locus: Locus, listeners: dict, state: _State) -> None:
    listener = listeners.pop(locus, None)
    state.erased.add(locus)
    if listener is None:
        return
    for c in listener.ctx:
        if c in listeners:
            _erase_cascade(c, listeners, state)


def _resolve(node: Node, member: str, state: _State) -> Node:
    while isinstance(node, RefNode):
        state.burn()
        node = resolve_ref(node, state.envs.get(member))
    return node


def _run(member: str, node: Node, ctx: frozenset, listeners: dict,
         state: _State) -> Node:
    """Drive the positive token until daimon, divergence, or an emission."""
    while True:
        if isinstance(node, RefNode):
            node = _resolve(node, member, state)
            continue
        if isinstance(node, DaimonNode):
            state.burn()
            state.record(member, daimon_action())
            return DAIMON
        if not isinstance(node, PosNode):
            raise NetError(f"main design of {member} is not positive-headed: {node!r}")
        focus, ramification = node.focus, node.ramification
        action = positive_action(focus, ramification)
        if focus not in ctx:
            state.record(member, action)
            raise _Diverged(DivergenceReason(focus, erased=focus in state.erased))
        listener = listeners.pop(focus, None)
        if listener is None:
            # visible focus: emit into the residual and split per premise
            state.burn()
            state.record(member, action)
            remaining = frozenset(c for c in ctx if c != focus)
            premise_ctx = {}
            claimed = set()
            for i in sorted(ramification):
                pctx = used_subset(node.premises[i], remaining)
                premise_ctx[i] = pctx
                claimed |= pctx
            for c in remaining - claimed:
                if c in listeners:
                    _erase_cascade(c, listeners, state)
            residual_premises = {}
            for i in sorted(ramification):
                sub = _scoped_listeners(premise_ctx[i], listeners)
                owner = _Listener(member, node.premises[i], premise_ctx[i])
                residual_premises[i] = _run_negative(
                    owner, sub, focus.extend(i), state)
            return PosNode(focus, ramification, residual_premises)
        # cut consumption
        dual = _resolve(listener.node, listener.member, state)
        if isinstance(dual, NegNode):
            entry = dual.entries.get(ramification)
        elif isinstance(dual, FaxNode):
            entry = dual.entry(ramification)
        else:
            raise NetError(f"listener at {focus} is not negative: {dual!r}")
        state.burn()
        state.record(member, action)
        if entry is None:
            raise _Diverged(DivergenceReason(focus, ramification=ramification))
        remaining = frozenset(c for c in ctx if c != focus)
        claimed = set()
        for i in sorted(ramification):
            pctx = used_subset(node.premises[i], remaining)
            claimed |= pctx
            listeners[focus.extend(i)] = _Listener(member, node.premises[i], pctx)
        for c in remaining - claimed:
            if c in listeners:
                _erase_cascade(c, listeners, state)
        kept = used_subset(entry, listener.ctx)
        for c in listener.ctx - kept:
            if c in listeners:
                _erase_cascade(c, listeners, state)
        created = frozenset(focus.extend(i) for i in ramification)
        member, node, ctx = listener.member, entry, kept | created


def _scoped_listeners(seed_ctx: frozenset, listeners: dict) -> dict:
    """Listeners reachable from a context, following listener contexts."""
    included = {}
    frontier = list(seed_ctx)
    while frontier:
        c = frontier.pop()
        if c in listeners and c not in included:
            included[c] = listeners[c]
            frontier.extend(listeners[c].ctx)
    return included


def _fax_candidates(node: FaxNode, listeners: dict, state: _State,
                    seen: frozenset = frozenset()) -> list:
    """Ramifications a fax directory can usefully answer.

    The fax answers any finite ramification, but its premise immediately
    replays it at the fax target; only entries the dual side accepts can
    survive, so the dual directory bounds the residual.
    """
    target = node.target
    if target in seen:
        return []
    dual = listeners.get(target)
    if dual is None:
        raise NetError(
            f"cannot materialize the directory of fax {node.source} -> {node.target}: "
            f"its target is not cut in this net")
    dual_node = _resolve(dual.node, dual.member, state)
    if isinstance(dual_node, NegNode):
        return [r for r, _ in dual_node.entry_items()]
    if isinstance(dual_node, FaxNode):
        return _fax_candidates(dual_node, listeners, state, seen | {target})
    raise NetError(f"listener at {target} is not negative: {dual_node!r}")


def _run_negative(owner: _Listener, listeners: dict, handle: Locus,
                  state: _State) -> Node:
    """Build the residual negative node at a visible handle.

    Each candidate directory entry is probed in its own branch of the net;
    divergent entries vanish from the residual.
    """
    node = _resolve(owner.node, owner.member, state)
    if isinstance(node, NegNode):
        candidates = [r for r, _ in node.entry_items()]
        lookup = node.entries.get
    elif isinstance(node, FaxNode):
        candidates = _fax_candidates(node, listeners, state)
        lookup = node.entry
    else:
        raise NetError(f"owner of visible handle {handle} is not negative: {node!r}")

    entries = {}
    for r in sorted(candidates, key=ram_key):
        entry = lookup(r)
        branch_listeners = dict(listeners)
        kept = used_subset(entry, owner.ctx)
        for c in owner.ctx - kept:
            if c in branch_listeners:
                _erase_cascade(c, branch_listeners, state)
        created = frozenset(handle.extend(j) for j in r)
        try:
            entries[r] = _run(owner.member, entry, kept | created,
                              branch_listeners, state)
        except _Diverged:
            continue
    return NegNode(handle, entries)


def _initial_state(net: Net, fuel: int, record: bool):
    envs = {name: d.env for name, d in net.members.items()}
    state = _State(fuel, envs, record)
    listeners = {}
    negative_owner = None
    main = None
    for name, d in net.members.items():
        if d.base.is_positive:
            main = (name, d.root, frozenset(d.base.tines))
        elif d.base.handle in net.cuts:
            listeners[d.base.handle] = _Listener(name, d.root, frozenset(d.base.tines))
        else:
            negative_owner = _Listener(name, d.root, frozenset(d.base.tines))
    return state, listeners, main, negative_owner


def normalize(net: Net, fuel: int = DEFAULT_FUEL, record_trace: bool = True):
    """Run the net to a verdict.  Returns ``(Verdict, Trace)``.

    Deterministic: identical inputs give identical traces.  Closed nets
    converge exactly when the run ends on the daimon.
    """
    if fuel <= 0:
        raise NetError("fuel must be positive")
    state, listeners, main, negative_owner = _initial_state(net, fuel, record_trace)
    try:
        if main is not None:
            name, root, ctx = main
            residual_root = _run(name, root, ctx, listeners, state)
        else:
            handle = net.visible.handle
            residual_root = _run_negative(negative_owner, listeners, handle, state)
        residual = Design(name="normal-form", base=net.visible, root=residual_root)
        verdict = Verdict("converged", residual=residual, steps=state.steps)
    except _Diverged as exc:
        verdict = Verdict("diverged", reason=exc.reason, steps=state.steps)
    except _OutOfFuel:
        verdict = Verdict("out-of-fuel", steps=state.fuel0)
    trace = Trace(tuple(state.trace or ()), verdict)
    return verdict, trace


def dispute_trace(net: Net, fuel: int = DEFAULT_FUEL) -> Trace:
    """The full action history of a normalization, ending with its verdict."""
    _, trace = normalize(net, fuel, record_trace=True)
    return trace


# ---------------------------------------------------------------------------
# Orthogonality


def _dual_bases(positive: Design, negative: Design) -> Locus:
    tines = sorted(positive.base.tines)
    if not positive.base.is_positive or len(tines) != 1:
        raise NetError(f"{positive.name} must sit on a single-tine positive base")
    locus = tines[0]
    if negative.base.is_positive or negative.base.handle != locus or negative.base.tines:
        raise NetError(
            f"{negative.name} must sit on the dual base {locus} |-")
    return locus


def orient(a: Design, b: Design):
    """Order a closed pair as (positive design, negative design)."""
    if a.base.is_positive:
        return a, b
    return b, a


def orthogonal(a: Design, b: Design, fuel: int = DEFAULT_FUEL) -> str:
    """Tri-state orthogonality of a closed dual pair: yes, no, or unknown."""
    pos, neg = orient(a, b)
    locus = _dual_bases(pos, neg)
    envs = {"pos": pos.env, "neg": neg.env}
    state = _State(fuel, envs, record=False)
    listeners = {locus: _Listener("neg", neg.root, frozenset())}
    try:
        _run("pos", pos.root, frozenset({locus}), listeners, state)
        return "yes"
    except _Diverged:
        return "no"
    except _OutOfFuel:
        return "unknown"

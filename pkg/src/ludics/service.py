"""Interactive dispute sessions and the HTTP session API.

A session runs a closed net move by move.  One member may be designated as
the human side; its stored design trees bound the legal moves (several
alternative trees may back the same side, and play filters them), the
machine side follows its trees deterministically, and the engine auto-plays
until it is the human's turn or a verdict lands.  The daimon is always a
legal human move: surrender ends the dispute in consensus.

Sessions without a human side are observers: the net is normalized in one
go and the recorded trace is served for replay.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .loci import Locus, LudicsError
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
)
from .interaction import (
    DEFAULT_FUEL,
    Action,
    DivergenceReason,
    NetError,
    Trace,
    TraceStep,
    Verdict,
    daimon_action,
    make_net,
    normalize,
    positive_action,
)
from .lang import parse_file


class SessionError(LudicsError):
    def __init__(self, message: str, code: str = "bad-request"):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------------------
# The interactive runner


@dataclass
class _MachineSlot:
    member: str
    node: Node
    ctx: frozenset


@dataclass
class _HumanSlot:
    nodes: dict      # candidate index -> Node
    ctx: dict        # candidate index -> frozenset


class Session:
    """One running dispute.  All mutation happens under the store lock."""

    def __init__(self, session_id: str, designs: list, cuts: frozenset,
                 human_side: str | None, alternatives: list,
                 fuel: int = DEFAULT_FUEL, auto_forced: bool = False):
        self.id = session_id
        self.human_side = human_side
        self.auto_forced = auto_forced
        self.fuel = fuel
        self.history: list = []
        self.moves_played: list = []
        self.verdict: Verdict | None = None
        self.members = {d.name: d for d in designs}
        self.cuts = cuts
        net = make_net(designs, cuts)
        self.visible = net.visible

        if human_side is None:
            verdict, trace = normalize(net, fuel)
            self.history = list(trace.steps)
            self.verdict = verdict
            self._turn = "done"
            return
        if human_side not in self.members:
            raise SessionError(f"unknown member {human_side!r}", "unknown-member")
        if net.visible.tines or net.visible.handle is not None:
            raise SessionError("interactive sessions need a closed net", "open-net")

        self.alternatives = alternatives or [self.members[human_side]]
        base = self.members[human_side].base
        for alt in self.alternatives:
            if alt.base != base:
                raise SessionError("human alternatives must share the member's base",
                                   "base-mismatch")
        self.alive = set(range(len(self.alternatives)))
        self.listeners: dict = {}
        self._machine: _MachineSlot | None = None
        self._human: _HumanSlot | None = None
        self.erased: set = set()

        for name, d in self.members.items():
            ctx = frozenset(d.base.tines)
            if name == human_side:
                if d.base.is_positive:
                    self._human = _HumanSlot(
                        {i: alt.root for i, alt in enumerate(self.alternatives)},
                        {i: ctx for i in self.alive})
                else:
                    self.listeners[d.base.handle] = _HumanSlot(
                        {i: alt.root for i, alt in enumerate(self.alternatives)},
                        {i: ctx for i in self.alive})
            else:
                if d.base.is_positive:
                    self._machine = _MachineSlot(name, d.root, ctx)
                else:
                    self.listeners[d.base.handle] = _MachineSlot(name, d.root, ctx)
        self._turn = "machine" if self._machine is not None else "human"
        self._advance()

    # -- helpers

    def _finish(self, verdict: Verdict) -> None:
        self.verdict = verdict
        self._turn = "done"

    def _record(self, member: str, action: Action) -> None:
        self.history.append(TraceStep(member, action))

    def _burn(self) -> bool:
        if self.fuel <= 0:
            self._finish(Verdict("out-of-fuel", steps=len(self.history)))
            return False
        self.fuel -= 1
        return True

    def _resolve(self, node: Node, member: str) -> Node:
        while isinstance(node, RefNode):
            node = resolve_ref(node, self.members[member].env
                               if member in self.members else None)
        return node

    def _resolve_human(self, node: Node) -> Node:
        while isinstance(node, RefNode):
            node = resolve_ref(node, self.members[self.human_side].env)
        return node

    # -- machine auto-play

    def _advance(self) -> None:
        while self._turn == "machine":
            slot = self._machine
            node = self._resolve(slot.node, slot.member)
            if isinstance(node, DaimonNode):
                if not self._burn():
                    return
                self._record(slot.member, daimon_action())
                self._finish(Verdict("converged", steps=len(self.history)))
                return
            if not isinstance(node, PosNode):
                raise NetError(f"machine thread is not positive: {node!r}")
            action = positive_action(node.focus, node.ramification)
            if node.focus not in slot.ctx:
                self._record(slot.member, action)
                self._finish(Verdict(
                    "diverged",
                    reason=DivergenceReason(node.focus,
                                            erased=node.focus in self.erased),
                    steps=len(self.history)))
                return
            listener = self.listeners.pop(node.focus, None)
            if listener is None:
                self._record(slot.member, action)
                self._finish(Verdict(
                    "diverged",
                    reason=DivergenceReason(node.focus,
                                            erased=node.focus in self.erased),
                    steps=len(self.history)))
                return
            if not self._burn():
                return
            self._record(slot.member, action)
            if isinstance(listener, _MachineSlot):
                if not self._consume_machine(slot, node, listener):
                    return
            else:
                if not self._consume_human(slot, node, listener):
                    return
        # human turn: nothing to do until play_move

    def _hand_over_machine_premises(self, slot: _MachineSlot, node: PosNode) -> None:
        remaining = frozenset(c for c in slot.ctx if c != node.focus)
        claimed = set()
        for i in sorted(node.ramification):
            pctx = used_subset(node.premises[i], remaining)
            claimed |= pctx
            self.listeners[node.focus.extend(i)] = _MachineSlot(
                slot.member, node.premises[i], pctx)
        for c in remaining - claimed:
            if c in self.listeners:
                del self.listeners[c]
            self.erased.add(c)

    def _consume_machine(self, slot: _MachineSlot, node: PosNode,
                         listener: _MachineSlot) -> bool:
        dual = self._resolve(listener.node, listener.member)
        if isinstance(dual, FaxNode):
            entry = dual.entry(node.ramification)
        elif isinstance(dual, NegNode):
            entry = dual.entries.get(node.ramification)
        else:
            raise NetError(f"listener is not negative: {dual!r}")
        if entry is None:
            self._finish(Verdict(
                "diverged",
                reason=DivergenceReason(node.focus, ramification=node.ramification),
                steps=len(self.history)))
            return False
        self._hand_over_machine_premises(slot, node)
        created = frozenset(node.focus.extend(i) for i in node.ramification)
        kept = used_subset(entry, listener.ctx)
        for c in listener.ctx - kept:
            if c in self.listeners:
                del self.listeners[c]
                self.erased.add(c)
        self._machine = _MachineSlot(listener.member, entry, kept | created)
        self._turn = "machine"
        return True

    def _consume_human(self, slot: _MachineSlot, node: PosNode,
                       listener: _HumanSlot) -> bool:
        surviving = {}
        for idx in sorted(self.alive & set(listener.nodes)):
            candidate = self._resolve_human(listener.nodes[idx])
            if isinstance(candidate, FaxNode):
                surviving[idx] = candidate.entry(node.ramification)
            elif isinstance(candidate, NegNode):
                entry = candidate.entries.get(node.ramification)
                if entry is not None:
                    surviving[idx] = entry
        if not surviving:
            self._finish(Verdict(
                "diverged",
                reason=DivergenceReason(node.focus, ramification=node.ramification),
                steps=len(self.history)))
            return False
        self.alive &= set(surviving)
        self._hand_over_machine_premises(slot, node)
        created = frozenset(node.focus.extend(i) for i in node.ramification)
        ctx = {}
        for idx, entry in surviving.items():
            kept = used_subset(entry, listener.ctx[idx])
            ctx[idx] = kept | created
        self._human = _HumanSlot(surviving, ctx)
        self._turn = "human"
        if self.auto_forced:
            moves = self.legal_moves()
            if len(moves) == 1:
                self._apply(moves[0])
        return True

    # -- the human side

    def legal_moves(self) -> list:
        """The human tree's moves at the current node, plus surrender."""
        if self._turn != "human":
            raise SessionError("not the human side's turn", "not-your-turn")
        moves = []
        seen = set()
        for idx in sorted(self.alive & set(self._human.nodes)):
            node = self._resolve_human(self._human.nodes[idx])
            if isinstance(node, DaimonNode):
                action = daimon_action()
            elif isinstance(node, PosNode):
                action = positive_action(node.focus, node.ramification)
            else:
                continue
            key = (action.kind, action.focus, action.ramification)
            if key not in seen:
                seen.add(key)
                moves.append(action)
        if not any(m.kind == "dai" for m in moves):
            moves.append(daimon_action())
        return moves

    def play_move(self, action: Action) -> None:
        if self._turn == "done":
            raise SessionError("session is over", "finished")
        if self._turn != "human":
            raise SessionError("not the human side's turn", "not-your-turn")
        legal = self.legal_moves()
        if not any(a == action for a in legal):
            raise SessionError(f"illegal move {action}", "illegal-move")
        self._apply(action)

    def _apply(self, action: Action) -> None:
        self.moves_played.append(action)
        if action.kind == "dai":
            if not self._burn():
                return
            self._record(self.human_side, action)
            self._finish(Verdict("converged", steps=len(self.history)))
            return
        matching = {}
        for idx in sorted(self.alive & set(self._human.nodes)):
            node = self._resolve_human(self._human.nodes[idx])
            if (isinstance(node, PosNode) and node.focus == action.focus
                    and node.ramification == action.ramification):
                matching[idx] = node
        self.alive &= set(matching)
        focus, ramification = action.focus, action.ramification
        ctx_union = frozenset().union(
            *(self._human.ctx[i] for i in matching)) if matching else frozenset()
        if not self._burn():
            return
        self._record(self.human_side, action)
        if focus not in ctx_union or focus not in self.listeners:
            self._finish(Verdict(
                "diverged",
                reason=DivergenceReason(focus, erased=focus in self.erased),
                steps=len(self.history)))
            return
        listener = self.listeners.pop(focus)
        if not isinstance(listener, _MachineSlot):
            raise NetError("human move into a human listener is not supported")
        dual = self._resolve(listener.node, listener.member)
        if isinstance(dual, FaxNode):
            entry = dual.entry(ramification)
        elif isinstance(dual, NegNode):
            entry = dual.entries.get(ramification)
        else:
            raise NetError(f"listener is not negative: {dual!r}")
        if entry is None:
            self._finish(Verdict(
                "diverged",
                reason=DivergenceReason(focus, ramification=ramification),
                steps=len(self.history)))
            return
        # the human's premises listen, per candidate
        remaining = {i: frozenset(c for c in self._human.ctx[i] if c != focus)
                     for i in matching}
        claimed = set()
        for i in sorted(ramification):
            nodes = {idx: matching[idx].premises[i] for idx in matching}
            ctx = {idx: used_subset(nodes[idx], remaining[idx]) for idx in matching}
            for c in frozenset().union(*ctx.values()) if ctx else frozenset():
                claimed.add(c)
            self.listeners[focus.extend(i)] = _HumanSlot(nodes, ctx)
        remaining_union = frozenset().union(*remaining.values()) if remaining else frozenset()
        for c in remaining_union - claimed:
            if c in self.listeners:
                del self.listeners[c]
            self.erased.add(c)
        created = frozenset(focus.extend(i) for i in ramification)
        kept = used_subset(entry, listener.ctx)
        for c in listener.ctx - kept:
            if c in self.listeners:
                del self.listeners[c]
                self.erased.add(c)
        self._machine = _MachineSlot(listener.member, entry, kept | created)
        self._turn = "machine"
        self._advance()

    # -- views

    @property
    def status(self) -> str:
        if self.verdict is None:
            return "running"
        return self.verdict.kind

    def trace(self) -> Trace:
        verdict = self.verdict or Verdict("out-of-fuel", steps=len(self.history))
        return Trace(tuple(self.history), verdict)

    def snapshot(self) -> dict:
        data = {
            "id": self.id,
            "status": self.status,
            "turn": self._turn,
            "humanSide": self.human_side,
            "members": {name: str(d.base) for name, d in self.members.items()},
            "cuts": [str(c) for c in sorted(self.cuts)],
            "history": [s.to_json() for s in self.history],
            "verdict": self.verdict.to_json() if self.verdict else None,
        }
        if self._turn == "human":
            data["legalMoves"] = [a.to_json() for a in self.legal_moves()]
        else:
            data["legalMoves"] = []
        return data


# ---------------------------------------------------------------------------
# Store


class SessionStore:
    def __init__(self, scenario_root: Path | None = None,
                 log_path: Path | None = None):
        self.sessions: dict = {}
        self.lock = threading.Lock()
        self.scenario_root = scenario_root or default_scenario_root()
        self.log_path = log_path

    def load_defs(self, file_name: str):
        path = Path(self.scenario_root) / Path(file_name).name
        if not path.exists():
            raise SessionError(f"no scenario file {file_name!r}", "not-found")
        return parse_file(path.read_text(encoding="utf-8"))

    def create(self, payload: dict) -> Session:
        defs = self.load_defs(payload.get("file", ""))
        member_names = payload.get("members") or []
        if not member_names:
            raise SessionError("members must name at least one design")
        designs = []
        for name in member_names:
            if name not in defs.designs:
                raise SessionError(f"no design named {name!r}", "unknown-member")
            designs.append(defs.designs[name])
        cuts = frozenset(
            _parse_locus_text(c, defs.bindings) for c in payload.get("cuts", []))
        human = payload.get("humanSide")
        alternatives = []
        for name in payload.get("humanAlternatives", []) or []:
            if name not in defs.designs:
                raise SessionError(f"no design named {name!r}", "unknown-member")
            alternatives.append(defs.designs[name])
        session = Session(
            uuid.uuid4().hex[:12],
            designs,
            cuts,
            human,
            alternatives,
            fuel=int(payload.get("fuel", DEFAULT_FUEL)),
            auto_forced=bool(payload.get("autoForced", False)),
        )
        with self.lock:
            self.sessions[session.id] = session
        return session

    def get(self, session_id: str) -> Session:
        with self.lock:
            session = self.sessions.get(session_id)
        if session is None:
            raise SessionError(f"no session {session_id!r}", "not-found")
        return session

    def log_if_finished(self, session: Session) -> None:
        if self.log_path is None or session.verdict is None:
            return
        entry = {
            "id": session.id,
            "humanSide": session.human_side,
            "moves": [a.to_json() for a in getattr(session, "moves_played", [])],
            "verdict": session.verdict.to_json(),
        }
        with self.lock:
            with open(self.log_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry, sort_keys=True) + "\n")


def _parse_locus_text(text: str, bindings: dict) -> Locus:
    from .loci import parse_locus

    return parse_locus(str(text), bindings)


def default_scenario_root() -> Path:
    return Path(__file__).parent / "scenarios"


# ---------------------------------------------------------------------------
# HTTP front


def _error_body(code: str, message: str) -> bytes:
    return json.dumps({"code": code, "message": message}).encode("utf-8")


class _Handler(BaseHTTPRequestHandler):
    store: SessionStore = None  # set by make_server

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _send(self, status: int, body: bytes, content_type="application/json") -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _send_json(self, status: int, data) -> None:
        self._send(status, json.dumps(data, sort_keys=True).encode("utf-8"))

    def _read_json(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b"{}"
        try:
            return json.loads(raw or b"{}")
        except json.JSONDecodeError:
            raise SessionError("request body is not JSON", "bad-json")

    def _route(self):
        parts = [p for p in self.path.split("?")[0].split("/") if p]
        return parts

    def do_POST(self):
        try:
            parts = self._route()
            if parts == ["sessions"]:
                session = self.store.create(self._read_json())
                self.store.log_if_finished(session)
                self._send_json(201, session.snapshot())
                return
            if len(parts) == 3 and parts[0] == "sessions" and parts[2] == "moves":
                session = self.store.get(parts[1])
                action = Action.from_json(self._read_json())
                with self.store.lock:
                    session.play_move(action)
                self.store.log_if_finished(session)
                self._send_json(200, session.snapshot())
                return
            self._send(404, _error_body("not-found", "no such route"))
        except SessionError as exc:
            status = {"not-found": 404, "not-your-turn": 409,
                      "illegal-move": 400, "finished": 409}.get(exc.code, 400)
            self._send(status, _error_body(exc.code, str(exc)))
        except (LudicsError, NetError) as exc:
            self._send(400, _error_body("engine-error", str(exc)))

    def do_GET(self):
        try:
            parts = self._route()
            if len(parts) == 2 and parts[0] == "sessions":
                self._send_json(200, self.store.get(parts[1]).snapshot())
                return
            if len(parts) == 3 and parts[0] == "sessions" and parts[2] == "moves":
                session = self.store.get(parts[1])
                if session._turn != "human":
                    self._send(409, _error_body("not-your-turn",
                                                "not the human side's turn"))
                    return
                self._send_json(200, {"moves": [a.to_json()
                                                for a in session.legal_moves()]})
                return
            if len(parts) == 3 and parts[0] == "sessions" and parts[2] == "trace":
                session = self.store.get(parts[1])
                if "format=json" in (self.path.split("?")[1]
                                     if "?" in self.path else ""):
                    self._send_json(200, session.trace().to_json())
                else:
                    self._send(200, session.trace().text().encode("utf-8"),
                               content_type="text/plain; charset=utf-8")
                return
            self._send(404, _error_body("not-found", "no such route"))
        except SessionError as exc:
            status = {"not-found": 404}.get(exc.code, 400)
            self._send(status, _error_body(exc.code, str(exc)))


def make_server(host: str = "127.0.0.1", port: int = 0,
                scenario_root: Path | None = None,
                log_path: Path | None = None) -> ThreadingHTTPServer:
    handler = type("Handler", (_Handler,), {
        "store": SessionStore(scenario_root, log_path)})
    return ThreadingHTTPServer((host, port), handler)


def serve(host: str, port: int, scenario_root: Path | None = None,
          log_path: Path | None = None) -> None:
    server = make_server(host, port, scenario_root, log_path)
    print(f"session service on http://{host}:{server.server_address[1]}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass

"""Session lifecycle: lobbies, seats, action serialization, broadcasts,
ledger persistence and crash recovery.

Sessions are isolated units; inside one session every mutation runs under
that session's lock, so exactly one action applies at a time.  Broadcasts
fan out in parallel.  The ledger file has a single appender guarded by its
own lock.  If a journal directory is configured, every started game writes
(config, seed) plus each accepted action as JSON lines, from which
``recover_sessions`` rebuilds exact states via replay.
"""

from __future__ import annotations

import asyncio
import json
import logging
import random
import secrets
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Protocol

from .. import chain as chain_mod
from ..rules import (
    Action,
    BlocktrainError,
    GameConfig,
    GameState,
    action_from_dict,
    action_to_dict,
    apply_action,
    config_from_dict,
    config_to_dict,
    is_terminal,
    legal_actions,
    new_game,
    redacted_view,
    replay,
)
from .models import wire

log = logging.getLogger("blocktrain.service")

LOBBY = "lobby"
PLAYING = "playing"
FINISHED = "finished"


class UnknownSession(BlocktrainError):
    code = "unknown_session"


class SessionFull(BlocktrainError):
    code = "session_full"


class SessionAlreadyPlaying(BlocktrainError):
    code = "session_already_playing"


class SessionNotPlaying(BlocktrainError):
    code = "session_not_playing"


class Connection(Protocol):
    async def send_json(self, payload: dict) -> None: ...


@dataclass
class Seat:
    name: str
    connection: Optional[Connection] = None

    @property
    def connected(self) -> bool:
        return self.connection is not None


@dataclass
class Session:
    session_id: str
    config: GameConfig
    status: str = LOBBY
    seats: list[Seat] = field(default_factory=list)
    state: Optional[GameState] = None
    seed: Optional[int] = None
    action_log: list[tuple[int, Action]] = field(default_factory=list)
    lock: asyncio.Lock = field(default_factory=asyncio.Lock)
    auto_task: Optional[asyncio.Task] = None

    @property
    def version(self) -> int:
        return len(self.state.event_log) if self.state else 0


class SessionManager:
    def __init__(
        self,
        ledger_path: Optional[str] = None,
        journal_dir: Optional[str] = None,
        turn_timeout: Optional[float] = None,
    ):
        self.sessions: dict[str, Session] = {}
        self.ledger_path = ledger_path
        self.journal_dir = Path(journal_dir) if journal_dir else None
        self.turn_timeout = turn_timeout
        self._ledger_lock = asyncio.Lock()
        self._auto_rng = random.Random()
        if self.journal_dir:
            self.journal_dir.mkdir(parents=True, exist_ok=True)

    # ── lifecycle ────────────────────────────────────────────────────

    def create_session(self, config: GameConfig) -> Session:
        """Register a lobby; ids carry 128 random bits."""
        session_id = secrets.token_urlsafe(16)
        session = Session(session_id=session_id, config=config)
        self.sessions[session_id] = session
        log.info("session %s created (%d players)", session_id, config.players)
        return session

    def get(self, session_id: str) -> Session:
        try:
            return self.sessions[session_id]
        except KeyError:
            raise UnknownSession(f"no session {session_id!r}") from None

    async def join(self, session_id: str, name: str, connection: Connection) -> int:
        """Seat a player; the game starts as soon as all seats fill."""
        session = self.get(session_id)
        async with session.lock:
            if len(session.seats) >= session.config.players:
                raise SessionFull(f"session {session_id} is full")
            if session.status != LOBBY:
                raise SessionAlreadyPlaying(f"session {session_id} already started")
            seat = len(session.seats)
            session.seats.append(Seat(name=name, connection=connection))
            started = len(session.seats) == session.config.players
            if started:
                self._start_game(session)
        await self.broadcast_lobby(session)
        if started:
            await self.broadcast_views(session)
        return seat

    def _start_game(self, session: Session) -> None:
        # Server-generated seed: players cannot pick seeds in live play.
        session.seed = secrets.randbits(64)
        session.state = new_game(session.config, session.seed)
        session.status = PLAYING
        log.info("session %s started with seed %d", session.session_id, session.seed)
        self._journal_write(
            session,
            {
                "type": "start",
                "session_id": session.session_id,
                "config": config_to_dict(session.config),
                "seed": session.seed,
                "names": [s.name for s in session.seats],
            },
        )

    async def submit_action(
        self, session_id: str, seat: int, action: Action
    ) -> tuple[bool, Optional[str]]:
        """Apply one action through the engine.  On success broadcasts fresh
        views (and ChainFinal + ledger append on game end); on engine errors
        returns (False, code) with no state change and no broadcast."""
        session = self.get(session_id)
        finished = False
        async with session.lock:
            if session.status != PLAYING:
                return False, SessionNotPlaying.code
            try:
                session.state = apply_action(session.state, seat, action)
            except BlocktrainError as exc:
                log.debug("session %s seat %d rejected: %s", session_id, seat, exc)
                return False, exc.code
            session.action_log.append((seat, action))
            self._journal_write(
                session, {"type": "act", "seat": seat, "action": action_to_dict(action)}
            )
            if is_terminal(session.state):
                session.status = FINISHED
                finished = True
        await self.broadcast_views(session)
        if finished:
            await self._finalize(session)
        else:
            self._arm_auto_play(session)
        return True, None

    async def _finalize(self, session: Session) -> None:
        final_chain = chain_mod.build_chain(session.state)
        if self.ledger_path:
            async with self._ledger_lock:
                chain_mod.append_chain(self.ledger_path, final_chain)
        await self._broadcast(
            session, wire("chain_final", chain=chain_mod.chain_to_dict(final_chain))
        )
        log.info("session %s finished; chain of %d blocks", session.session_id, len(final_chain))

    # ── broadcasts ───────────────────────────────────────────────────

    def view_frame(self, session: Session, seat: int) -> dict:
        state = session.state
        return wire(
            "view",
            your_seat=seat,
            turn=state.turn,
            version=len(state.event_log),
            legal_actions=[action_to_dict(a) for a in legal_actions(state, seat)],
            view=redacted_view(state, seat),
        )

    def lobby_frame(self, session: Session) -> dict:
        return wire(
            "lobby",
            session_id=session.session_id,
            status=session.status,
            capacity=session.config.players,
            seats=[
                {"seat": i, "name": s.name, "connected": s.connected}
                for i, s in enumerate(session.seats)
            ],
        )

    async def broadcast_lobby(self, session: Session) -> None:
        await self._broadcast(session, self.lobby_frame(session))

    async def broadcast_views(self, session: Session) -> None:
        # Same state version goes to every seat; payloads are per-seat.
        sends = []
        for seat_index, seat in enumerate(session.seats):
            if seat.connection is not None:
                sends.append(self._send(session, seat_index, self.view_frame(session, seat_index)))
        if sends:
            await asyncio.gather(*sends)

    async def _broadcast(self, session: Session, frame: dict) -> None:
        sends = [
            self._send(session, i, frame)
            for i, seat in enumerate(session.seats)
            if seat.connection is not None
        ]
        if sends:
            await asyncio.gather(*sends)

    async def _send(self, session: Session, seat_index: int, frame: dict) -> None:
        seat = session.seats[seat_index]
        try:
            await seat.connection.send_json(frame)
        except Exception:  # connection died mid-send
            log.info("session %s seat %d dropped", session.session_id, seat_index)
            seat.connection = None
            self._arm_auto_play(session)

    # ── disconnects & auto-play ──────────────────────────────────────

    async def disconnect(self, session_id: str, seat: int) -> None:
        session = self.sessions.get(session_id)
        if session is None or seat >= len(session.seats):
            return
        session.seats[seat].connection = None
        await self.broadcast_lobby(session)
        self._arm_auto_play(session)

    def _arm_auto_play(self, session: Session) -> None:
        """Hold a disconnected seat's turn for the timeout, then play a
        uniformly random legal action for it so games can finish."""
        if not self.turn_timeout or session.status != PLAYING:
            return
        turn_seat = session.state.turn
        if session.seats[turn_seat].connected:
            return
        if session.auto_task is not None and not session.auto_task.done():
            return
        session.auto_task = asyncio.create_task(
            self._auto_play(session, turn_seat, session.version)
        )

    async def _auto_play(self, session: Session, seat: int, version: int) -> None:
        await asyncio.sleep(self.turn_timeout)
        if (
            session.status != PLAYING
            or session.version != version
            or session.seats[seat].connected
            or session.state.turn != seat
        ):
            return
        actions = legal_actions(session.state, seat)
        if not actions:
            return
        choice = actions[self._auto_rng.randrange(len(actions))]
        log.info(
            "session %s auto-playing %s for disconnected seat %d",
            session.session_id,
            choice.type.value,
            seat,
        )
        await self.submit_action(session.session_id, seat, choice)

    # ── journal & recovery ───────────────────────────────────────────

    def _journal_path(self, session: Session) -> Path:
        return self.journal_dir / f"{session.session_id}.jsonl"

    def _journal_write(self, session: Session, record: dict) -> None:
        if not self.journal_dir:
            return
        with open(self._journal_path(session), "a", encoding="utf-8") as handle:
            handle.write(json.dumps(record, sort_keys=True) + "\n")
            handle.flush()

    def recover_sessions(self) -> list[str]:
        """Rebuild every journaled session by replaying its action log; the
        reconstructed states are bit-identical to the pre-crash ones."""
        if not self.journal_dir:
            return []
        recovered = []
        for path in sorted(self.journal_dir.glob("*.jsonl")):
            session = self._recover_one(path)
            if session is not None:
                self.sessions[session.session_id] = session
                recovered.append(session.session_id)
        return recovered

    def _recover_one(self, path: Path) -> Optional[Session]:
        config: Optional[GameConfig] = None
        seed = None
        session_id = None
        names: list[str] = []
        actions: list[tuple[int, Action]] = []
        with open(path, "r", encoding="utf-8") as handle:
            for line in handle:
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                if record["type"] == "start":
                    config = config_from_dict(record["config"])
                    seed = record["seed"]
                    session_id = record["session_id"]
                    names = record["names"]
                elif record["type"] == "act":
                    actions.append((record["seat"], action_from_dict(record["action"])))
        if config is None:
            log.warning("journal %s has no start record; skipping", path)
            return None
        state = replay(config, seed, actions)
        session = Session(
            session_id=session_id,
            config=config,
            status=FINISHED if is_terminal(state) else PLAYING,
            seats=[Seat(name=n) for n in names],
            state=state,
            seed=seed,
            action_log=actions,
        )
        log.info("recovered session %s at version %d", session_id, session.version)
        return session

"""FastAPI application: small HTTP surface for session creation and health,
plus the ``/ws`` websocket endpoint speaking wire_v1."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from pydantic import ValidationError

from ..rules import BlocktrainError
from .manager import SessionManager, UnknownSession
from .models import (
    ActMessage,
    CreateSessionMessage,
    CreateSessionRequest,
    HealthInfo,
    JoinMessage,
    LobbyInfo,
    SeatInfo,
    SessionCreated,
    error_frame,
    wire,
)

log = logging.getLogger("blocktrain.service")


@dataclass
class Settings:
    ledger_path: str = "blocktrain-ledger.jsonl"
    journal_dir: Optional[str] = None
    turn_timeout: Optional[float] = None


class SocketConnection:
    """Adapter giving the manager a minimal send_json interface."""

    def __init__(self, websocket: WebSocket):
        self.websocket = websocket

    async def send_json(self, payload: dict) -> None:
        await self.websocket.send_json(payload)


def create_app(settings: Optional[Settings] = None) -> FastAPI:
    settings = settings or Settings()
    manager = SessionManager(
        ledger_path=settings.ledger_path,
        journal_dir=settings.journal_dir,
        turn_timeout=settings.turn_timeout,
    )
    if settings.journal_dir:
        manager.recover_sessions()

    app = FastAPI(title="blocktrain", version="0.1.0")
    app.state.manager = manager
    app.state.settings = settings

    @app.get("/healthz", response_model=HealthInfo)
    def healthz() -> HealthInfo:
        return HealthInfo(status="ok", sessions=len(manager.sessions))

    @app.post("/sessions", response_model=SessionCreated)
    def create_session(request: CreateSessionRequest) -> SessionCreated:
        try:
            config = request.config.to_config()
        except BlocktrainError as exc:
            raise HTTPException(status_code=422, detail={"code": exc.code, "message": str(exc)})
        session = manager.create_session(config)
        return SessionCreated(session_id=session.session_id, capacity=config.players)

    @app.get("/sessions/{session_id}", response_model=LobbyInfo)
    def session_info(session_id: str) -> LobbyInfo:
        try:
            session = manager.get(session_id)
        except UnknownSession as exc:
            raise HTTPException(status_code=404, detail={"code": exc.code, "message": str(exc)})
        return LobbyInfo(
            session_id=session.session_id,
            status=session.status,
            capacity=session.config.players,
            seats=[
                SeatInfo(seat=i, name=s.name, connected=s.connected)
                for i, s in enumerate(session.seats)
            ],
        )

    @app.websocket("/ws")
    async def websocket_endpoint(websocket: WebSocket) -> None:
        await websocket.accept()
        connection = SocketConnection(websocket)
        session_id: Optional[str] = None
        seat: Optional[int] = None
        try:
            while True:
                message = await websocket.receive_json()
                kind = message.get("type")
                try:
                    if kind == "create_session":
                        parsed = CreateSessionMessage.model_validate(message)
                        session = manager.create_session(parsed.config.to_config())
                        await websocket.send_json(
                            wire(
                                "session_created",
                                session_id=session.session_id,
                                capacity=session.config.players,
                            )
                        )
                    elif kind == "join":
                        if seat is not None:
                            await websocket.send_json(
                                error_frame("already_joined", "this connection already holds a seat")
                            )
                            continue
                        parsed = JoinMessage.model_validate(message)
                        seat = await manager.join(parsed.session, parsed.name, connection)
                        session_id = parsed.session
                    elif kind == "act":
                        if session_id is None:
                            await websocket.send_json(
                                error_frame("not_joined", "join a session before acting")
                            )
                            continue
                        parsed = ActMessage.model_validate(message)
                        accepted, code = await manager.submit_action(
                            session_id, seat, parsed.action.to_action()
                        )
                        await websocket.send_json(
                            wire(
                                "action_result",
                                accepted=accepted,
                                error=code,
                                version=manager.get(session_id).version,
                            )
                        )
                    elif kind == "leave":
                        break
                    else:
                        await websocket.send_json(
                            error_frame("bad_message", f"unknown message type {kind!r}")
                        )
                except ValidationError as exc:
                    await websocket.send_json(error_frame("bad_message", str(exc)))
                except BlocktrainError as exc:
                    await websocket.send_json(error_frame(exc.code, str(exc)))
        except WebSocketDisconnect:
            pass
        finally:
            if session_id is not None and seat is not None:
                await manager.disconnect(session_id, seat)

    return app

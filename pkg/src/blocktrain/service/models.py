"""Pydantic request/response and wire-message models (wire_v1).

Every websocket frame is one JSON object tagged with ``v: "wire_v1"`` and a
``type`` discriminator.  The engine stays pydantic-free; these models
convert at the boundary.
"""

from __future__ import annotations

from typing import Any, Optional

from pydantic import BaseModel, Field

from ..rules import Action, GameConfig, action_from_dict, config_from_dict

WIRE_VERSION = "wire_v1"


class GameConfigModel(BaseModel):
    players: int = 5
    slots_per_wagon: int = 4
    target_wagons: int = 5
    wagon_set: Optional[list[list[str]]] = None
    supply_copies_per_kind: int = 20
    validation_decoys: int = 10
    open_hands: bool = False
    supply_hand_size: int = 4
    validation_hand_size: int = 1
    immediate_validation_play: bool = True

    def to_config(self) -> GameConfig:
        data = self.model_dump()
        if data["wagon_set"] is None:
            del data["wagon_set"]
        return config_from_dict(data)


class ActionModel(BaseModel):
    type: str
    card_id: Optional[int] = None

    def to_action(self) -> Action:
        return action_from_dict(self.model_dump())


class CreateSessionRequest(BaseModel):
    config: GameConfigModel = Field(default_factory=GameConfigModel)


class SessionCreated(BaseModel):
    session_id: str
    capacity: int


class SeatInfo(BaseModel):
    seat: int
    name: str
    connected: bool


class LobbyInfo(BaseModel):
    session_id: str
    status: str
    capacity: int
    seats: list[SeatInfo]


class HealthInfo(BaseModel):
    status: str
    sessions: int


# ── websocket client -> server frames ────────────────────────────────


class JoinMessage(BaseModel):
    session: str
    name: str


class ActMessage(BaseModel):
    action: ActionModel


class CreateSessionMessage(BaseModel):
    config: GameConfigModel = Field(default_factory=GameConfigModel)


# ── websocket server -> client frame builders ────────────────────────


def wire(kind: str, **payload: Any) -> dict:
    return {"v": WIRE_VERSION, "type": kind, **payload}


def error_frame(code: str, message: str) -> dict:
    return wire("error", code=code, message=message)

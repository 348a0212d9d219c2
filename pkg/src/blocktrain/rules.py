"""Deterministic rules engine for the Blocktrain collaborative board game.

Everything here is a pure value transformation: ``apply_action`` returns a
fresh state and never mutates its input, all collections are tuples or
frozensets, and the only randomness flows through the serializable PRNG
state carried inside ``GameState``.  Live play, replay and simulation are
therefore bit-for-bit reproducible from (config, seed, actions).

The PRNG is Python's Mersenne Twister (``random.Random``): named, seedable,
platform independent, with a fully serializable state.  All shuffles are
Fisher-Yates over that generator.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Optional

STATE_VERSION = "state_v1"

MIN_PLAYERS = 2
MAX_PLAYERS = 5


# ── errors ───────────────────────────────────────────────────────────


class BlocktrainError(Exception):
    """Base class for engine errors. ``code`` is the wire error code."""

    code = "error"


class ConfigInvalid(BlocktrainError):
    code = "config_invalid"


class UnknownPlayer(BlocktrainError):
    code = "unknown_player"


class NotYourTurn(BlocktrainError):
    code = "not_your_turn"


class IllegalAction(BlocktrainError):
    code = "illegal_action"


class GameFinished(IllegalAction):
    code = "game_finished"


class OutOfOrderFill(IllegalAction):
    code = "out_of_order_fill"


class InvalidValidation(IllegalAction):
    code = "invalid_validation"


class WagonNotFull(IllegalAction):
    code = "wagon_not_full"


class ReplayDiverged(BlocktrainError):
    code = "replay_diverged"


# ── domain types ─────────────────────────────────────────────────────


class SupplyKind(str, Enum):
    """The three supply types, encoded by their canonical single letter."""

    WATER = "W"
    FOOD = "F"
    MEDICINE = "M"


KINDS = (SupplyKind.WATER, SupplyKind.FOOD, SupplyKind.MEDICINE)

W, F, M = KINDS

# Balanced stock wagon set: five distinct four-slot sequences.
DEFAULT_WAGON_SET = (
    (W, F, M, W),
    (F, W, W, M),
    (M, M, F, W),
    (W, W, F, F),
    (F, M, W, M),
)


@dataclass(frozen=True, slots=True)
class SupplyCard:
    id: int
    kind: SupplyKind


@dataclass(frozen=True, slots=True)
class ValidationCard:
    id: int
    sequence: tuple[SupplyKind, ...]


class BoardStatus(str, Enum):
    FILLING = "filling"
    VALIDATING = "validating"
    VALIDATED = "validated"


@dataclass(frozen=True, slots=True)
class WagonBoard:
    """One train wagon: an ordered row of slots, each labeled with a kind.

    ``filled`` is always a kind-matching prefix of ``required`` (fills go
    left to right).  Once status reaches VALIDATED the board never changes
    again.
    """

    index: int
    required: tuple[SupplyKind, ...]
    filled: tuple[SupplyCard, ...] = ()
    status: BoardStatus = BoardStatus.FILLING
    validated_by: Optional[int] = None
    validation_card_id: Optional[int] = None

    def is_full(self) -> bool:
        return len(self.filled) == len(self.required)

    def next_kind(self) -> SupplyKind:
        return self.required[len(self.filled)]


@dataclass(frozen=True, slots=True)
class GameConfig:
    """Game parameters, checked for feasibility at construction.

    The feasibility check simulates worst-case locking: after every prefix
    of wagons has been validated (locking their cards for good), the
    remaining pool must still cover the opening deal for every player and
    every remaining board slot.
    """

    players: int
    slots_per_wagon: int = 4
    target_wagons: int = 5
    wagon_set: tuple[tuple[SupplyKind, ...], ...] = DEFAULT_WAGON_SET
    supply_copies_per_kind: int = 20
    validation_decoys: int = 10
    open_hands: bool = False
    supply_hand_size: int = 4
    validation_hand_size: int = 1
    immediate_validation_play: bool = True

    def __post_init__(self) -> None:
        if not MIN_PLAYERS <= self.players <= MAX_PLAYERS:
            raise ConfigInvalid(
                f"players must be {MIN_PLAYERS}..{MAX_PLAYERS}, got {self.players}"
            )
        if self.slots_per_wagon < 1:
            raise ConfigInvalid("slots_per_wagon must be positive")
        if self.target_wagons < 1:
            raise ConfigInvalid("target_wagons must be positive")
        if self.supply_copies_per_kind < 1:
            raise ConfigInvalid("supply_copies_per_kind must be positive")
        if self.validation_decoys < 0:
            raise ConfigInvalid("validation_decoys must be non-negative")
        if self.supply_hand_size < 1 or self.validation_hand_size < 1:
            raise ConfigInvalid("hand sizes must be positive")
        if len(self.wagon_set) < self.target_wagons:
            raise ConfigInvalid(
                f"wagon_set has {len(self.wagon_set)} sequences, "
                f"target is {self.target_wagons}"
            )
        for seq in self.wagon_set:
            if len(seq) != self.slots_per_wagon:
                raise ConfigInvalid("every wagon sequence must match slots_per_wagon")
        if len(set(self.wagon_set)) != len(self.wagon_set):
            raise ConfigInvalid("duplicate wagon sequences")
        # Decoys may repeat each other but never a wagon sequence, so at
        # least one free sequence must exist.
        possible = 3 ** self.slots_per_wagon
        if self.validation_decoys > 0 and len(self.wagon_set) >= possible:
            raise ConfigInvalid(
                "decoy collision: every possible sequence is already a wagon"
            )
        played = self.wagon_set[: self.target_wagons]
        for kind in KINDS:
            demand = sum(seq.count(kind) for seq in played)
            if demand > self.supply_copies_per_kind:
                raise ConfigInvalid(
                    f"supply deck cannot cover {kind.name.lower()}: "
                    f"needs {demand}, has {self.supply_copies_per_kind}"
                )
        total_supply = 3 * self.supply_copies_per_kind
        validation_deck = len(self.wagon_set) + self.validation_decoys
        # Worst-case locking: t validated wagons freeze t*slots supply cards
        # and t validation cards; a redeal must still be possible.
        for t in range(self.target_wagons):
            if total_supply - t * self.slots_per_wagon < self.players * self.supply_hand_size:
                raise ConfigInvalid(
                    f"supply deck too small to redeal after {t} locked wagons"
                )
            if validation_deck - t < self.players * self.validation_hand_size:
                raise ConfigInvalid(
                    f"validation deck too small to redeal after {t} locked wagons"
                )


@dataclass(frozen=True, slots=True)
class PlayerState:
    index: int
    supply_hand: tuple[SupplyCard, ...]
    validation_hand: tuple[ValidationCard, ...]


class Phase(str, Enum):
    FILL = "fill"
    VALIDATE = "validate"
    FINISHED = "finished"


class ActionType(str, Enum):
    PLAY_SUPPLY = "play_supply"
    DRAW_SUPPLY = "draw_supply"
    PLAY_VALIDATION = "play_validation"
    DRAW_VALIDATION = "draw_validation"
    PASS = "pass"


@dataclass(frozen=True, slots=True)
class Action:
    type: ActionType
    card_id: Optional[int] = None


@dataclass(frozen=True, slots=True)
class GameState:
    """Full authoritative state.  Treat as immutable; piles' last element
    is the top card."""

    config: GameConfig
    phase: Phase
    current_wagon: int
    boards: tuple[WagonBoard, ...]
    players: tuple[PlayerState, ...]
    supply_pile: tuple[SupplyCard, ...]
    validation_pile: tuple[ValidationCard, ...]
    locked_cards: frozenset[int]
    turn: int
    last_filler: Optional[int]
    rng_state: Any
    event_log: tuple[tuple[int, int, Action], ...]
    # Accepted turns per wagon, split by phase.  A draw-then-validate pair
    # within one held turn counts as a single validation turn.
    fill_turns: tuple[int, ...]
    validation_turns: tuple[int, ...]
    pending_immediate: bool = False


# ── setup ────────────────────────────────────────────────────────────


def new_game(config: GameConfig, seed: int) -> GameState:
    """Build decks, shuffle with the seeded PRNG, deal 4+1 per player.

    Supply cards get ids 0..3*copies-1 (kind-major); validation cards
    follow: one correct card per wagon_set sequence, then randomly drawn
    decoys that never collide with any wagon sequence.
    """
    rng = random.Random(seed)
    supply: list[SupplyCard] = []
    next_id = 0
    for kind in KINDS:
        for _ in range(config.supply_copies_per_kind):
            supply.append(SupplyCard(next_id, kind))
            next_id += 1
    validation: list[ValidationCard] = []
    for seq in config.wagon_set:
        validation.append(ValidationCard(next_id, seq))
        next_id += 1
    wagon_sequences = set(config.wagon_set)
    for _ in range(config.validation_decoys):
        while True:
            seq = tuple(KINDS[rng.randrange(3)] for _ in range(config.slots_per_wagon))
            if seq not in wagon_sequences:
                break
        validation.append(ValidationCard(next_id, seq))
        next_id += 1

    rng.shuffle(supply)
    rng.shuffle(validation)

    players = _deal(supply, validation, config)
    boards = tuple(
        WagonBoard(index=i, required=config.wagon_set[i])
        for i in range(config.target_wagons)
    )
    return GameState(
        config=config,
        phase=Phase.FILL,
        current_wagon=0,
        boards=boards,
        players=players,
        supply_pile=tuple(supply),
        validation_pile=tuple(validation),
        locked_cards=frozenset(),
        turn=0,
        last_filler=None,
        rng_state=rng.getstate(),
        event_log=(),
        fill_turns=(0,) * config.target_wagons,
        validation_turns=(0,) * config.target_wagons,
    )


def _deal(
    supply: list[SupplyCard], validation: list[ValidationCard], config: GameConfig
) -> tuple[PlayerState, ...]:
    """Deal hands off the pile tops, mutating the pile lists in place."""
    supply_hands = [
        tuple(supply.pop() for _ in range(config.supply_hand_size))
        for _ in range(config.players)
    ]
    validation_hands = [
        tuple(validation.pop() for _ in range(config.validation_hand_size))
        for _ in range(config.players)
    ]
    return tuple(
        PlayerState(i, supply_hands[i], validation_hands[i])
        for i in range(config.players)
    )


# ── queries ──────────────────────────────────────────────────────────


def _require_player(state: GameState, player: int) -> None:
    if not 0 <= player < state.config.players:
        raise UnknownPlayer(f"no player {player} in a {state.config.players}-player game")


def legal_actions(state: GameState, player: int) -> list[Action]:
    """All actions ``player`` may take right now.

    Playing is mandatory when possible: a draw is never offered alongside a
    legal play, and Pass appears only when the relevant pile is empty and
    no play exists.  Empty when it is not the player's turn or the game is
    over.
    """
    _require_player(state, player)
    if state.phase is Phase.FINISHED or player != state.turn:
        return []
    me = state.players[player]
    board = state.boards[state.current_wagon]
    if state.phase is Phase.FILL:
        need = board.next_kind()
        plays = [
            Action(ActionType.PLAY_SUPPLY, card.id)
            for card in me.supply_hand
            if card.kind is need
        ]
        if plays:
            return plays
        if state.supply_pile:
            return [Action(ActionType.DRAW_SUPPLY)]
        return [Action(ActionType.PASS)]
    plays = [
        Action(ActionType.PLAY_VALIDATION, card.id)
        for card in me.validation_hand
        if card.sequence == board.required
    ]
    if plays:
        return plays
    if state.validation_pile:
        return [Action(ActionType.DRAW_VALIDATION)]
    return [Action(ActionType.PASS)]


def is_terminal(state: GameState) -> bool:
    validated = sum(1 for b in state.boards if b.status is BoardStatus.VALIDATED)
    return validated == state.config.target_wagons


def matches_validation(board: WagonBoard, card: ValidationCard) -> bool:
    """Whether ``card`` validates ``board``: exact sequence match."""
    if not board.is_full():
        raise WagonNotFull(
            f"wagon {board.index} has {len(board.filled)}/{len(board.required)} slots filled"
        )
    return card.sequence == board.required


# ── transitions ──────────────────────────────────────────────────────


def apply_action(state: GameState, player: int, action: Action) -> GameState:
    """Apply one action; returns the successor state, never mutates input.

    Raises NotYourTurn / IllegalAction (or a specific subclass) when the
    action is not in the player's legal set.
    """
    _require_player(state, player)
    if state.phase is Phase.FINISHED:
        raise GameFinished("the train has departed; no more actions")
    if player != state.turn:
        raise NotYourTurn(f"it is player {state.turn}'s turn, not {player}'s")

    kind = action.type
    if kind is ActionType.PLAY_SUPPLY:
        new = _play_supply(state, player, action)
    elif kind is ActionType.DRAW_SUPPLY:
        new = _draw_supply(state, player)
    elif kind is ActionType.PLAY_VALIDATION:
        new = _play_validation(state, player, action)
    elif kind is ActionType.DRAW_VALIDATION:
        new = _draw_validation(state, player)
    elif kind is ActionType.PASS:
        new = _pass(state, player)
    else:  # pragma: no cover - ActionType is closed
        raise IllegalAction(f"unknown action type {kind!r}")

    entry = (len(state.event_log), player, action)
    return replace(new, event_log=state.event_log + (entry,))


def _swap(items: tuple, i: int, value) -> tuple:
    return items[:i] + (value,) + items[i + 1 :]


def _bump(counts: tuple[int, ...], i: int) -> tuple[int, ...]:
    return counts[:i] + (counts[i] + 1,) + counts[i + 1 :]


def _next(state: GameState, player: int) -> int:
    return (player + 1) % state.config.players


def _play_supply(state: GameState, player: int, action: Action) -> GameState:
    if state.phase is not Phase.FILL:
        raise IllegalAction("supply cards are played only while a wagon is filling")
    board = state.boards[state.current_wagon]
    me = state.players[player]
    card = next((c for c in me.supply_hand if c.id == action.card_id), None)
    if card is None:
        raise IllegalAction(f"card {action.card_id} is not in player {player}'s supply hand")
    need = board.next_kind()
    if card.kind is not need:
        raise OutOfOrderFill(
            f"slot {len(board.filled)} needs {need.value}, not {card.kind.value}"
        )
    filled = board.filled + (card,)
    full = len(filled) == len(board.required)
    new_board = replace(
        board,
        filled=filled,
        status=BoardStatus.VALIDATING if full else BoardStatus.FILLING,
    )
    new_me = replace(me, supply_hand=tuple(c for c in me.supply_hand if c.id != card.id))
    return replace(
        state,
        boards=_swap(state.boards, board.index, new_board),
        players=_swap(state.players, player, new_me),
        fill_turns=_bump(state.fill_turns, state.current_wagon),
        last_filler=player,
        # The player who completes the wagon starts the validation round.
        phase=Phase.VALIDATE if full else Phase.FILL,
        turn=player if full else _next(state, player),
    )


def _draw_supply(state: GameState, player: int) -> GameState:
    if state.phase is not Phase.FILL:
        raise IllegalAction("supply draws happen only during the fill phase")
    board = state.boards[state.current_wagon]
    me = state.players[player]
    need = board.next_kind()
    if any(c.kind is need for c in me.supply_hand):
        raise IllegalAction("a matching supply card must be played, not drawn past")
    if not state.supply_pile:
        raise IllegalAction("supply pile is empty")
    card = state.supply_pile[-1]
    new_me = replace(me, supply_hand=me.supply_hand + (card,))
    return replace(
        state,
        players=_swap(state.players, player, new_me),
        supply_pile=state.supply_pile[:-1],
        fill_turns=_bump(state.fill_turns, state.current_wagon),
        turn=_next(state, player),
    )


def _play_validation(state: GameState, player: int, action: Action) -> GameState:
    if state.phase is Phase.FILL:
        raise WagonNotFull("the wagon must be completely filled before validation")
    board = state.boards[state.current_wagon]
    me = state.players[player]
    card = next((c for c in me.validation_hand if c.id == action.card_id), None)
    if card is None:
        raise IllegalAction(
            f"card {action.card_id} is not in player {player}'s validation hand"
        )
    if card.sequence != board.required:
        raise InvalidValidation(
            "validation card sequence differs from the board, invalidating the block"
        )
    new_board = replace(
        board,
        status=BoardStatus.VALIDATED,
        validated_by=player,
        validation_card_id=card.id,
    )
    locked = state.locked_cards | {c.id for c in board.filled} | {card.id}
    new_me = replace(
        me, validation_hand=tuple(c for c in me.validation_hand if c.id != card.id)
    )
    # A validation played in the same held turn as its draw is not a new turn.
    validation_turns = (
        state.validation_turns
        if state.pending_immediate
        else _bump(state.validation_turns, state.current_wagon)
    )
    base = replace(
        state,
        boards=_swap(state.boards, board.index, new_board),
        players=_swap(state.players, player, new_me),
        locked_cards=locked,
        validation_turns=validation_turns,
        pending_immediate=False,
    )
    if state.current_wagon + 1 == state.config.target_wagons:
        return replace(base, phase=Phase.FINISHED)
    return _redeal(base, next_wagon=state.current_wagon + 1, first=_next(state, player))


def _redeal(state: GameState, next_wagon: int, first: int) -> GameState:
    """Shuffle all non-locked cards back together and deal fresh hands."""
    supply = [c for p in state.players for c in p.supply_hand]
    supply.extend(state.supply_pile)
    validation = [c for p in state.players for c in p.validation_hand]
    validation.extend(state.validation_pile)
    rng = random.Random()
    rng.setstate(state.rng_state)
    rng.shuffle(supply)
    rng.shuffle(validation)
    players = _deal(supply, validation, state.config)
    return replace(
        state,
        players=players,
        supply_pile=tuple(supply),
        validation_pile=tuple(validation),
        rng_state=rng.getstate(),
        current_wagon=next_wagon,
        phase=Phase.FILL,
        turn=first,
        last_filler=None,
    )


def _draw_validation(state: GameState, player: int) -> GameState:
    if state.phase is not Phase.VALIDATE:
        raise IllegalAction("validation draws happen only during the validation phase")
    board = state.boards[state.current_wagon]
    me = state.players[player]
    if any(c.sequence == board.required for c in me.validation_hand):
        raise IllegalAction("the matching validation card must be played, not drawn past")
    if not state.validation_pile:
        raise IllegalAction("validation pile is empty")
    card = state.validation_pile[-1]
    matches = card.sequence == board.required
    keep_turn = matches and state.config.immediate_validation_play
    new_me = replace(me, validation_hand=me.validation_hand + (card,))
    return replace(
        state,
        players=_swap(state.players, player, new_me),
        validation_pile=state.validation_pile[:-1],
        validation_turns=_bump(state.validation_turns, state.current_wagon),
        turn=player if keep_turn else _next(state, player),
        pending_immediate=keep_turn,
    )


def _pass(state: GameState, player: int) -> GameState:
    board = state.boards[state.current_wagon]
    me = state.players[player]
    if state.phase is Phase.FILL:
        if any(c.kind is board.next_kind() for c in me.supply_hand) or state.supply_pile:
            raise IllegalAction("pass is legal only with no playable card and an empty pile")
        return replace(
            state,
            fill_turns=_bump(state.fill_turns, state.current_wagon),
            turn=_next(state, player),
        )
    if (
        any(c.sequence == board.required for c in me.validation_hand)
        or state.validation_pile
    ):
        raise IllegalAction("pass is legal only with no playable card and an empty pile")
    return replace(
        state,
        validation_turns=_bump(state.validation_turns, state.current_wagon),
        turn=_next(state, player),
    )


# ── replay ───────────────────────────────────────────────────────────


def replay(
    config: GameConfig, seed: int, actions: list[tuple[int, Action]]
) -> GameState:
    """Re-run a recorded episode; the result is bit-identical to live play.

    Raises ReplayDiverged if any recorded action is illegal at its position.
    """
    state = new_game(config, seed)
    for i, (player, action) in enumerate(actions):
        try:
            state = apply_action(state, player, action)
        except BlocktrainError as exc:
            raise ReplayDiverged(
                f"recorded action {i} (player {player}, {action.type.value}) "
                f"is illegal: {exc}"
            ) from exc
    return state


# ── per-player views ─────────────────────────────────────────────────


def redacted_view(state: GameState, viewer: int) -> dict:
    """JSON-shaped view for one seat: own hands in full, other hands as
    counts (unless open_hands), piles as counts, boards and the validated
    chain in full."""
    _require_player(state, viewer)
    from .chain import block_to_dict, build_chain  # late import: chain depends on rules

    cfg = state.config
    players = []
    for p in state.players:
        entry: dict[str, Any] = {
            "seat": p.index,
            "supply_count": len(p.supply_hand),
            "validation_count": len(p.validation_hand),
        }
        if cfg.open_hands or p.index == viewer:
            entry["supply_hand"] = [card_to_dict(c) for c in p.supply_hand]
            entry["validation_hand"] = [validation_card_to_dict(c) for c in p.validation_hand]
        players.append(entry)
    return {
        "version": len(state.event_log),
        "viewer": viewer,
        "phase": state.phase.value,
        "current_wagon": state.current_wagon,
        "turn": state.turn,
        "last_filler": state.last_filler,
        "boards": [board_to_dict(b) for b in state.boards],
        "players": players,
        "supply_pile_count": len(state.supply_pile),
        "validation_pile_count": len(state.validation_pile),
        "chain": [block_to_dict(b) for b in build_chain(state).blocks],
        "config": {
            "players": cfg.players,
            "slots_per_wagon": cfg.slots_per_wagon,
            "target_wagons": cfg.target_wagons,
            "open_hands": cfg.open_hands,
        },
    }


# ── serialization (state_v1) ─────────────────────────────────────────


def card_to_dict(card: SupplyCard) -> dict:
    return {"id": card.id, "kind": card.kind.value}


def card_from_dict(d: dict) -> SupplyCard:
    return SupplyCard(id=d["id"], kind=SupplyKind(d["kind"]))


def validation_card_to_dict(card: ValidationCard) -> dict:
    return {"id": card.id, "sequence": [k.value for k in card.sequence]}


def validation_card_from_dict(d: dict) -> ValidationCard:
    return ValidationCard(id=d["id"], sequence=tuple(SupplyKind(k) for k in d["sequence"]))


def board_to_dict(board: WagonBoard) -> dict:
    return {
        "index": board.index,
        "required": [k.value for k in board.required],
        "filled": [card_to_dict(c) for c in board.filled],
        "status": board.status.value,
        "validated_by": board.validated_by,
        "validation_card_id": board.validation_card_id,
    }


def board_from_dict(d: dict) -> WagonBoard:
    return WagonBoard(
        index=d["index"],
        required=tuple(SupplyKind(k) for k in d["required"]),
        filled=tuple(card_from_dict(c) for c in d["filled"]),
        status=BoardStatus(d["status"]),
        validated_by=d["validated_by"],
        validation_card_id=d["validation_card_id"],
    )


def action_to_dict(action: Action) -> dict:
    return {"type": action.type.value, "card_id": action.card_id}


def action_from_dict(d: dict) -> Action:
    try:
        kind = ActionType(d["type"])
    except (KeyError, ValueError) as exc:
        raise IllegalAction(f"unknown action type {d.get('type')!r}") from exc
    return Action(type=kind, card_id=d.get("card_id"))


def config_to_dict(config: GameConfig) -> dict:
    return {
        "players": config.players,
        "slots_per_wagon": config.slots_per_wagon,
        "target_wagons": config.target_wagons,
        "wagon_set": [[k.value for k in seq] for seq in config.wagon_set],
        "supply_copies_per_kind": config.supply_copies_per_kind,
        "validation_decoys": config.validation_decoys,
        "open_hands": config.open_hands,
        "supply_hand_size": config.supply_hand_size,
        "validation_hand_size": config.validation_hand_size,
        "immediate_validation_play": config.immediate_validation_play,
    }


_CONFIG_FIELDS = frozenset(GameConfig.__dataclass_fields__)


def config_from_dict(d: dict) -> GameConfig:
    unknown = set(d) - _CONFIG_FIELDS
    if unknown:
        raise ConfigInvalid(f"unknown config fields: {sorted(unknown)}")
    kwargs = dict(d)
    if "wagon_set" in kwargs:
        try:
            kwargs["wagon_set"] = tuple(
                tuple(SupplyKind(k) for k in seq) for seq in kwargs["wagon_set"]
            )
        except ValueError as exc:
            raise ConfigInvalid(f"bad supply kind in wagon_set: {exc}") from exc
    try:
        return GameConfig(**kwargs)
    except TypeError as exc:
        raise ConfigInvalid(str(exc)) from exc


def _rng_state_to_json(rng_state) -> list:
    version, internal, gauss = rng_state
    return [version, list(internal), gauss]


def _rng_state_from_json(data) -> tuple:
    version, internal, gauss = data
    return (version, tuple(internal), gauss)


def state_to_dict(state: GameState) -> dict:
    return {
        "version": STATE_VERSION,
        "config": config_to_dict(state.config),
        "phase": state.phase.value,
        "current_wagon": state.current_wagon,
        "boards": [board_to_dict(b) for b in state.boards],
        "players": [
            {
                "index": p.index,
                "supply_hand": [card_to_dict(c) for c in p.supply_hand],
                "validation_hand": [validation_card_to_dict(c) for c in p.validation_hand],
            }
            for p in state.players
        ],
        "supply_pile": [card_to_dict(c) for c in state.supply_pile],
        "validation_pile": [validation_card_to_dict(c) for c in state.validation_pile],
        "locked_cards": sorted(state.locked_cards),
        "turn": state.turn,
        "last_filler": state.last_filler,
        "pending_immediate": state.pending_immediate,
        "rng_state": _rng_state_to_json(state.rng_state),
        "event_log": [
            [n, player, action_to_dict(action)] for n, player, action in state.event_log
        ],
        "fill_turns": list(state.fill_turns),
        "validation_turns": list(state.validation_turns),
    }


def state_from_dict(d: dict) -> GameState:
    if d.get("version") != STATE_VERSION:
        raise BlocktrainError(f"unsupported state version {d.get('version')!r}")
    return GameState(
        config=config_from_dict(d["config"]),
        phase=Phase(d["phase"]),
        current_wagon=d["current_wagon"],
        boards=tuple(board_from_dict(b) for b in d["boards"]),
        players=tuple(
            PlayerState(
                index=p["index"],
                supply_hand=tuple(card_from_dict(c) for c in p["supply_hand"]),
                validation_hand=tuple(
                    validation_card_from_dict(c) for c in p["validation_hand"]
                ),
            )
            for p in d["players"]
        ),
        supply_pile=tuple(card_from_dict(c) for c in d["supply_pile"]),
        validation_pile=tuple(validation_card_from_dict(c) for c in d["validation_pile"]),
        locked_cards=frozenset(d["locked_cards"]),
        turn=d["turn"],
        last_filler=d["last_filler"],
        pending_immediate=d["pending_immediate"],
        rng_state=_rng_state_from_json(d["rng_state"]),
        event_log=tuple(
            (n, player, action_from_dict(a)) for n, player, a in d["event_log"]
        ),
        fill_turns=tuple(d["fill_turns"]),
        validation_turns=tuple(d["validation_turns"]),
    )


def state_to_json(state: GameState) -> str:
    """Canonical serialization: sorted keys, compact separators."""
    return json.dumps(state_to_dict(state), sort_keys=True, separators=(",", ":"))


def state_from_json(text: str) -> GameState:
    return state_from_dict(json.loads(text))

"""Shared test helpers: episode drivers, invariant checks, config builders."""

from __future__ import annotations

import random

from blocktrain.rules import (
    ActionType,
    BoardStatus,
    GameConfig,
    GameState,
    Phase,
    SupplyKind,
    apply_action,
    is_terminal,
    legal_actions,
    new_game,
)

W, F, M = SupplyKind.WATER, SupplyKind.FOOD, SupplyKind.MEDICINE

STEP_CAP = 10_000


def small_config(**overrides) -> GameConfig:
    """Quick 2-player, 2-wagon, 2-slot game for fast unit tests."""
    params = dict(
        players=2,
        slots_per_wagon=2,
        target_wagons=2,
        wagon_set=((W, F), (M, W)),
        supply_copies_per_kind=6,
        validation_decoys=3,
        supply_hand_size=2,
    )
    params.update(overrides)
    return GameConfig(**params)


def drive(state: GameState, rng: random.Random, until=None, cap: int = STEP_CAP):
    """Play uniformly random legal actions until ``until(state)`` or the end.

    Returns (state, actions) where actions is the (player, action) list
    applied by this call.
    """
    actions = []
    steps = 0
    while not is_terminal(state) and (until is None or not until(state)):
        assert steps < cap, "episode exceeded the step cap"
        legal = legal_actions(state, state.turn)
        action = legal[rng.randrange(len(legal))]
        actions.append((state.turn, action))
        state = apply_action(state, state.turn, action)
        steps += 1
    return state, actions


def play_episode(config: GameConfig, seed: int):
    """Full episode under the uniform policy; returns (final_state, actions)."""
    state = new_game(config, seed)
    return drive(state, random.Random(f"{seed}:policy"))


def initial_card_ids(config: GameConfig) -> tuple[int, ...]:
    """Every card id in a fresh deck: supply block then validation block."""
    supply = 3 * config.supply_copies_per_kind
    validation = len(config.wagon_set) + config.validation_decoys
    return tuple(range(supply + validation))


def card_census(state: GameState) -> tuple[int, ...]:
    """Sorted multiset of all card ids across hands, piles and boards."""
    ids = []
    for p in state.players:
        ids.extend(c.id for c in p.supply_hand)
        ids.extend(c.id for c in p.validation_hand)
    ids.extend(c.id for c in state.supply_pile)
    ids.extend(c.id for c in state.validation_pile)
    for b in state.boards:
        ids.extend(c.id for c in b.filled)
        if b.validation_card_id is not None:
            ids.append(b.validation_card_id)
    return tuple(sorted(ids))


class InvariantChecker:
    """Per-action invariant assertions for fuzzed episodes.

    Cheap checks (prefix fill, validated-board stability, rotation, hand
    sizes after redeal) run on every action; the full card-conservation
    census runs at every validation and at the end.
    """

    def __init__(self, config: GameConfig):
        self.config = config
        self.expected_ids = tuple(sorted(initial_card_ids(config)))
        self.frozen_boards: dict[int, object] = {}
        self.prev_player: int | None = None
        self.prev_action = None
        self.violations: list[str] = []

    def start(self, state: GameState) -> None:
        for p in state.players:
            if len(p.supply_hand) != self.config.supply_hand_size:
                self.violations.append("opening supply hand size")
            if len(p.validation_hand) != self.config.validation_hand_size:
                self.violations.append("opening validation hand size")
        if card_census(state) != self.expected_ids:
            self.violations.append("initial conservation")

    def after_action(self, before: GameState, state: GameState, player, action) -> None:
        cfg = self.config
        # validated boards never change (object identity is the fast path;
        # equality is authoritative)
        for idx, frozen in self.frozen_boards.items():
            now = state.boards[idx]
            if now is not frozen and now != frozen:
                self.violations.append(f"validated wagon {idx} changed")
        board = state.boards[min(state.current_wagon, len(state.boards) - 1)]
        if any(
            c.kind is not board.required[i] for i, c in enumerate(board.filled)
        ):
            self.violations.append("left-to-right prefix fill")
        # clockwise rotation, with the two documented same-player holds
        if self.prev_player is not None:
            delta = (player - self.prev_player) % cfg.players
            if delta != 1:
                held_for_validation = (
                    before.phase is Phase.VALIDATE
                    and self.prev_action.type is ActionType.PLAY_SUPPLY
                )
                held_for_immediate = before.pending_immediate
                if not (delta == 0 and (held_for_validation or held_for_immediate)):
                    self.violations.append(
                        f"rotation broke: {self.prev_player} -> {player}"
                    )
        self.prev_player = player
        self.prev_action = action
        if action.type is ActionType.PLAY_VALIDATION:
            validated = before.current_wagon
            self.frozen_boards[validated] = state.boards[validated]
            if card_census(state) != self.expected_ids:
                self.violations.append("conservation after validation")
            if state.phase is Phase.FILL:  # a redeal just happened
                for p in state.players:
                    if len(p.supply_hand) != cfg.supply_hand_size:
                        self.violations.append("redeal supply hand size")
                    if len(p.validation_hand) != cfg.validation_hand_size:
                        self.violations.append("redeal validation hand size")

    def finish(self, state: GameState) -> None:
        validated = sum(1 for b in state.boards if b.status is BoardStatus.VALIDATED)
        if validated != self.config.target_wagons:
            self.violations.append(f"terminated with {validated} validated wagons")
        if state.phase is not Phase.FINISHED:
            self.violations.append("terminal state not in finished phase")
        if card_census(state) != self.expected_ids:
            self.violations.append("final conservation")


def checked_episode(config: GameConfig, seed: int, cap: int = STEP_CAP):
    """One uniformly random episode with all invariants asserted per action;
    returns (violations, final_state)."""
    checker = InvariantChecker(config)
    state = new_game(config, seed)
    checker.start(state)
    rng = random.Random(f"{seed}:fuzz")
    steps = 0
    while not is_terminal(state):
        if steps >= cap:
            checker.violations.append("non-termination (step cap)")
            return checker.violations, state
        legal = legal_actions(state, state.turn)
        action = legal[rng.randrange(len(legal))]
        after = apply_action(state, state.turn, action)
        checker.after_action(state, after, state.turn, action)
        state = after
        steps += 1
    checker.finish(state)
    return checker.violations, state


def run_checked_episode(config: GameConfig, seed: int, cap: int = STEP_CAP) -> list[str]:
    violations, _ = checked_episode(config, seed, cap)
    return violations


# ── websocket protocol drivers (shared by service and acceptance tests) ──

SMALL_WIRE_CONFIG = {
    "players": 2,
    "slots_per_wagon": 2,
    "target_wagons": 2,
    "wagon_set": [["W", "F"], ["M", "W"]],
    "supply_copies_per_kind": 6,
    "validation_decoys": 3,
    "supply_hand_size": 2,
}


def recv_until(ws, kind):
    """Read frames until one of type ``kind`` arrives (returns it)."""
    for _ in range(50):
        frame = ws.receive_json()
        assert frame["v"] == "wire_v1"
        if frame["type"] == kind:
            return frame
        if frame["type"] == "error":
            raise AssertionError(f"unexpected error frame: {frame}")
    raise AssertionError(f"no {kind} frame arrived")


def start_two_player_game(client, stack, config=None):
    """Create a 2-player session over HTTP and seat two websocket clients.

    WebSocketTestSession only tears down cleanly via __exit__, so the
    caller owns an ExitStack that manages both sockets.
    """
    resp = client.post("/sessions", json={"config": config or SMALL_WIRE_CONFIG})
    session_id = resp.json()["session_id"]
    ws0 = stack.enter_context(client.websocket_connect("/ws"))
    ws1 = stack.enter_context(client.websocket_connect("/ws"))
    ws0.send_json({"v": "wire_v1", "type": "join", "session": session_id, "name": "p0"})
    recv_until(ws0, "lobby")
    ws1.send_json({"v": "wire_v1", "type": "join", "session": session_id, "name": "p1"})
    view0 = recv_until(ws0, "view")
    view1 = recv_until(ws1, "view")
    return session_id, ws0, ws1, view0, view1


def play_ws_game_to_completion(sockets, views):
    """Drive a started game through the websocket protocol using each
    view's reported legal set.  Returns (chain frames, view streams)."""
    streams = {i: [v] for i, v in enumerate(views)}
    chains = {}
    for _ in range(500):
        turn = streams[0][-1]["turn"]
        legal = streams[turn][-1]["legal_actions"]
        assert legal, f"no legal actions reported for seat {turn}"
        sockets[turn].send_json({"v": "wire_v1", "type": "act", "action": legal[0]})
        # each accepted action broadcasts exactly one view to every seat
        for seat, ws in enumerate(sockets):
            frame = ws.receive_json()
            while frame["type"] in ("action_result", "lobby"):
                frame = ws.receive_json()
            assert frame["type"] == "view", frame
            streams[seat].append(frame)
        if streams[0][-1]["view"]["phase"] == "finished":
            for seat, ws in enumerate(sockets):
                frame = ws.receive_json()
                while frame["type"] != "chain_final":
                    frame = ws.receive_json()
                chains[seat] = frame
            return chains, streams
    raise AssertionError("game did not finish within the action cap")

"""Rules engine tests: setup, legality, transitions, replay, views,
serialization, and fuzzed invariants at unit-test scale."""

import random
from dataclasses import replace

import pytest

from blocktrain.rules import (
    Action,
    ActionType,
    BoardStatus,
    ConfigInvalid,
    GameConfig,
    GameFinished,
    IllegalAction,
    InvalidValidation,
    NotYourTurn,
    OutOfOrderFill,
    Phase,
    ReplayDiverged,
    SupplyCard,
    UnknownPlayer,
    ValidationCard,
    WagonNotFull,
    apply_action,
    config_from_dict,
    config_to_dict,
    is_terminal,
    legal_actions,
    matches_validation,
    new_game,
    redacted_view,
    replay,
    state_from_json,
    state_to_json,
)
from support import (
    W,
    F,
    M,
    drive,
    play_episode,
    run_checked_episode,
    small_config,
)


# ── config validation ────────────────────────────────────────────────


def test_config_defaults_are_feasible():
    for players in range(2, 6):
        GameConfig(players=players)


@pytest.mark.parametrize("players", [0, 1, 6, 9])
def test_config_rejects_player_counts(players):
    with pytest.raises(ConfigInvalid):
        GameConfig(players=players)


def test_config_rejects_duplicate_wagons():
    with pytest.raises(ConfigInvalid):
        small_config(wagon_set=((W, F), (W, F)))


def test_config_rejects_wagon_set_shorter_than_target():
    with pytest.raises(ConfigInvalid):
        small_config(target_wagons=3)


def test_config_rejects_wrong_sequence_length():
    with pytest.raises(ConfigInvalid):
        small_config(wagon_set=((W, F, M), (M, W)))


def test_config_rejects_supply_deck_too_small_to_deal():
    # 2 players x 4-card hands need 8 cards; one copy per kind gives 3.
    with pytest.raises(ConfigInvalid):
        small_config(supply_copies_per_kind=1, supply_hand_size=4)


def test_config_rejects_supply_deck_that_locking_exhausts():
    # Each locked wagon freezes 2 cards: after wagon 1, 6-2=4 cards cannot
    # deal 2 players x 3.
    with pytest.raises(ConfigInvalid):
        small_config(supply_copies_per_kind=2, supply_hand_size=3)


def test_config_rejects_decoy_collision():
    # One-slot wagons allow 3 sequences; using all three as wagons leaves
    # no sequence a decoy could take.
    with pytest.raises(ConfigInvalid):
        small_config(
            slots_per_wagon=1,
            wagon_set=((W,), (F,), (M,)),
            validation_decoys=1,
            supply_copies_per_kind=8,
        )


def test_config_allows_repeating_decoys():
    # Decoys may duplicate one another, so the validation deck can exceed
    # the count of distinct sequences.
    config = small_config(
        slots_per_wagon=1,
        wagon_set=((W,), (M,)),
        validation_decoys=12,
        supply_copies_per_kind=8,
    )
    state = new_game(config, 4)
    decoys = [c for c in state.validation_pile if c.sequence not in config.wagon_set]
    for p in state.players:
        decoys.extend(
            c for c in p.validation_hand if c.sequence not in config.wagon_set
        )
    assert len(decoys) == 12
    assert all(c.sequence in ((F,),) for c in decoys)


def test_config_rejects_per_kind_shortage():
    with pytest.raises(ConfigInvalid):
        small_config(
            wagon_set=((W, W), (W, F)), supply_copies_per_kind=2, supply_hand_size=1
        )


def test_config_dict_round_trip():
    config = small_config()
    assert config_from_dict(config_to_dict(config)) == config


def test_config_from_dict_rejects_unknown_fields():
    with pytest.raises(ConfigInvalid):
        config_from_dict({"players": 2, "wagons": 5})


# ── new_game ─────────────────────────────────────────────────────────


def test_new_game_deals_four_plus_one():
    state = new_game(GameConfig(players=5), seed=42)
    assert all(len(p.supply_hand) == 4 for p in state.players)
    assert all(len(p.validation_hand) == 1 for p in state.players)
    assert state.phase is Phase.FILL
    assert state.current_wagon == 0
    assert state.turn == 0


def test_new_game_is_deterministic():
    config = GameConfig(players=3)
    a = new_game(config, 7)
    b = new_game(config, 7)
    assert state_to_json(a) == state_to_json(b)


def test_new_game_seeds_differ():
    config = GameConfig(players=3)
    assert state_to_json(new_game(config, 1)) != state_to_json(new_game(config, 2))


def test_new_game_card_population(config):
    state = new_game(config, 0)
    supply_ids = set()
    validation_ids = set()
    for p in state.players:
        supply_ids.update(c.id for c in p.supply_hand)
        validation_ids.update(c.id for c in p.validation_hand)
    supply_ids.update(c.id for c in state.supply_pile)
    validation_ids.update(c.id for c in state.validation_pile)
    assert len(supply_ids) == 3 * config.supply_copies_per_kind
    assert len(validation_ids) == len(config.wagon_set) + config.validation_decoys
    assert not supply_ids & validation_ids


def test_exactly_one_matching_validation_card_in_circulation(config):
    state = new_game(config, 3)
    cards = [c for p in state.players for c in p.validation_hand]
    cards.extend(state.validation_pile)
    for board in state.boards:
        matching = [c for c in cards if c.sequence == board.required]
        assert len(matching) == 1


# ── legal_actions ────────────────────────────────────────────────────


def test_legal_actions_offers_every_matching_card(config):
    state = new_game(config, 5)
    me = state.players[state.turn]
    need = state.boards[0].required[0]
    hand = (SupplyCard(900, need), SupplyCard(901, need), SupplyCard(902, M))
    state = replace(
        state, players=_with_hand(state, state.turn, supply_hand=hand)
    )
    legal = legal_actions(state, state.turn)
    assert {a.card_id for a in legal} == {900, 901}
    assert all(a.type is ActionType.PLAY_SUPPLY for a in legal)


def test_legal_actions_draw_only_without_matching_card(config):
    state = new_game(config, 5)
    need = state.boards[0].required[0]
    other = F if need is not F else M
    hand = (SupplyCard(900, other),)
    state = replace(state, players=_with_hand(state, state.turn, supply_hand=hand))
    assert legal_actions(state, state.turn) == [Action(ActionType.DRAW_SUPPLY)]


def test_legal_actions_pass_when_pile_empty(config):
    state = new_game(config, 5)
    need = state.boards[0].required[0]
    other = F if need is not F else M
    hand = (SupplyCard(900, other),)
    state = replace(
        state,
        players=_with_hand(state, state.turn, supply_hand=hand),
        supply_pile=(),
    )
    assert legal_actions(state, state.turn) == [Action(ActionType.PASS)]


def test_legal_actions_empty_off_turn(config):
    state = new_game(config, 5)
    assert legal_actions(state, (state.turn + 1) % config.players) == []


def test_legal_actions_empty_when_finished(config):
    state, _ = play_episode(config, 11)
    assert is_terminal(state)
    assert legal_actions(state, 0) == []


def test_legal_actions_unknown_player(config):
    state = new_game(config, 5)
    with pytest.raises(UnknownPlayer):
        legal_actions(state, 9)


def _with_hand(state, player, supply_hand=None, validation_hand=None):
    me = state.players[player]
    new = replace(
        me,
        supply_hand=me.supply_hand if supply_hand is None else supply_hand,
        validation_hand=me.validation_hand if validation_hand is None else validation_hand,
    )
    return state.players[:player] + (new,) + state.players[player + 1 :]


# ── apply_action ─────────────────────────────────────────────────────


def test_apply_rejects_wrong_player(config):
    state = new_game(config, 5)
    wrong = (state.turn + 1) % config.players
    with pytest.raises(NotYourTurn):
        apply_action(state, wrong, Action(ActionType.DRAW_SUPPLY))


def test_apply_rejects_unheld_card(config):
    state = new_game(config, 5)
    with pytest.raises(IllegalAction):
        apply_action(state, state.turn, Action(ActionType.PLAY_SUPPLY, 9999))


def test_apply_rejects_out_of_order_fill(config):
    state = new_game(config, 5)
    need = state.boards[0].required[0]
    other = F if need is not F else M
    hand = (SupplyCard(900, other), SupplyCard(901, need))
    state = replace(state, players=_with_hand(state, state.turn, supply_hand=hand))
    with pytest.raises(OutOfOrderFill):
        apply_action(state, state.turn, Action(ActionType.PLAY_SUPPLY, 900))


def test_apply_rejects_draw_when_play_is_mandatory(config):
    state = new_game(config, 5)
    need = state.boards[0].required[0]
    hand = (SupplyCard(900, need),)
    state = replace(state, players=_with_hand(state, state.turn, supply_hand=hand))
    with pytest.raises(IllegalAction):
        apply_action(state, state.turn, Action(ActionType.DRAW_SUPPLY))


def test_apply_rejects_validation_during_fill(config):
    state = new_game(config, 5)
    card = state.players[state.turn].validation_hand[0]
    with pytest.raises(WagonNotFull):
        apply_action(state, state.turn, Action(ActionType.PLAY_VALIDATION, card.id))


def test_draw_supply_moves_pile_top_and_advances(config):
    state = new_game(config, 5)
    need = state.boards[0].required[0]
    other = F if need is not F else M
    state = replace(
        state, players=_with_hand(state, state.turn, supply_hand=(SupplyCard(900, other),))
    )
    top = state.supply_pile[-1]
    player = state.turn
    after = apply_action(state, player, Action(ActionType.DRAW_SUPPLY))
    assert after.players[player].supply_hand[-1] == top
    assert len(after.supply_pile) == len(state.supply_pile) - 1
    assert after.turn == (player + 1) % config.players
    # input state untouched
    assert len(state.players[player].supply_hand) == 1


def test_completing_wagon_flips_phase_and_keeps_turn(config):
    state = new_game(config, 5)
    in_validate = lambda s: s.phase is Phase.VALIDATE
    state, actions = drive(state, random.Random(0), until=in_validate)
    assert state.phase is Phase.VALIDATE
    completer, last_action = actions[-1]
    assert last_action.type is ActionType.PLAY_SUPPLY
    assert state.turn == completer
    assert state.last_filler == completer
    assert state.boards[0].status is BoardStatus.VALIDATING
    assert state.boards[0].is_full()


def test_invalid_validation_card_rejected(config):
    state = new_game(config, 5)
    state, _ = drive(state, random.Random(0), until=lambda s: s.phase is Phase.VALIDATE)
    board = state.boards[state.current_wagon]
    wrong_seq = tuple(M if k is not M else W for k in board.required)
    decoy = ValidationCard(990, wrong_seq)
    state = replace(
        state, players=_with_hand(state, state.turn, validation_hand=(decoy,))
    )
    with pytest.raises(InvalidValidation):
        apply_action(state, state.turn, Action(ActionType.PLAY_VALIDATION, 990))


def test_validation_locks_wagon_and_redeals(config):
    state = new_game(config, 5)
    state, _ = drive(state, random.Random(0), until=lambda s: s.phase is Phase.VALIDATE)
    correct = ValidationCard(991, state.boards[0].required)
    player = state.turn
    state = replace(state, players=_with_hand(state, player, validation_hand=(correct,)))
    after = apply_action(state, player, Action(ActionType.PLAY_VALIDATION, 991))
    board = after.boards[0]
    assert board.status is BoardStatus.VALIDATED
    assert board.validated_by == player
    assert board.validation_card_id == 991
    assert {c.id for c in board.filled} <= after.locked_cards
    assert 991 in after.locked_cards
    # next wagon started with fresh 2+1 hands and rotated starting filler
    assert after.phase is Phase.FILL
    assert after.current_wagon == 1
    assert after.turn == (player + 1) % config.players
    for p in after.players:
        assert len(p.supply_hand) == config.supply_hand_size
        assert len(p.validation_hand) == config.validation_hand_size
    # locked cards no longer circulate
    circulating = {c.id for p in after.players for c in p.supply_hand}
    circulating |= {c.id for c in after.supply_pile}
    assert not circulating & after.locked_cards


def test_final_validation_finishes_game(config):
    state, actions = play_episode(config, 21)
    assert state.phase is Phase.FINISHED
    assert is_terminal(state)
    assert actions[-1][1].type is ActionType.PLAY_VALIDATION
    assert sum(1 for b in state.boards if b.status is BoardStatus.VALIDATED) == 2
    with pytest.raises(GameFinished):
        apply_action(state, state.turn, Action(ActionType.PASS))


def test_immediate_validation_play_keeps_turn():
    config = small_config(immediate_validation_play=True)
    found = _find_immediate_draw(config)
    assert found is not None, "no immediate-draw situation in the seed sweep"
    state, player = found
    after = apply_action(state, player, Action(ActionType.DRAW_VALIDATION))
    assert after.turn == player
    assert after.pending_immediate
    legal = legal_actions(after, player)
    assert len(legal) == 1 and legal[0].type is ActionType.PLAY_VALIDATION
    done = apply_action(after, player, legal[0])
    # the draw-then-validate pair consumed a single validation turn
    assert done.validation_turns[state.current_wagon] == (
        state.validation_turns[state.current_wagon] + 1
    )


def test_delayed_validation_play_advances_turn():
    config = small_config(immediate_validation_play=False)
    found = _find_immediate_draw(config)
    assert found is not None
    state, player = found
    after = apply_action(state, player, Action(ActionType.DRAW_VALIDATION))
    assert after.turn == (player + 1) % config.players
    assert not after.pending_immediate


def _find_immediate_draw(config):
    """Scan seeds for a validation-phase state whose pile top is the
    matching card and the actor does not hold it."""
    for seed in range(200):
        state = new_game(config, seed)
        rng = random.Random(seed)
        while not is_terminal(state):
            if (
                state.phase is Phase.VALIDATE
                and state.validation_pile
                and state.validation_pile[-1].sequence
                == state.boards[state.current_wagon].required
                and not any(
                    c.sequence == state.boards[state.current_wagon].required
                    for c in state.players[state.turn].validation_hand
                )
            ):
                return state, state.turn
            legal = legal_actions(state, state.turn)
            state = apply_action(state, state.turn, legal[rng.randrange(len(legal))])
    return None


# ── is_terminal / matches_validation ────────────────────────────────


def test_is_terminal_fresh_game(config):
    assert not is_terminal(new_game(config, 0))


def test_matches_validation_exact_sequence():
    board = WagonBoardFactory.full((W, F, M, W))
    assert matches_validation(board, ValidationCard(1, (W, F, M, W)))
    assert not matches_validation(board, ValidationCard(2, (W, F, W, M)))


def test_matches_validation_requires_full_board():
    board = WagonBoardFactory.partial((W, F, M, W), 3)
    with pytest.raises(WagonNotFull):
        matches_validation(board, ValidationCard(1, (W, F, M, W)))


class WagonBoardFactory:
    @staticmethod
    def full(required):
        from blocktrain.rules import WagonBoard

        filled = tuple(SupplyCard(500 + i, k) for i, k in enumerate(required))
        return WagonBoard(index=0, required=required, filled=filled)

    @staticmethod
    def partial(required, count):
        from blocktrain.rules import WagonBoard

        filled = tuple(SupplyCard(500 + i, k) for i, k in enumerate(required[:count]))
        return WagonBoard(index=0, required=required, filled=filled)


# ── replay ───────────────────────────────────────────────────────────


def test_replay_empty_log_equals_new_game(config):
    assert state_to_json(replay(config, 5, [])) == state_to_json(new_game(config, 5))


def test_replay_reproduces_live_run(config):
    state, actions = play_episode(config, 33)
    replayed = replay(config, 33, actions)
    assert state_to_json(replayed) == state_to_json(state)


def test_replay_diverges_on_mutated_log(config):
    _, actions = play_episode(config, 34)
    player, action = actions[0]
    mutated = [(player, replace(action, card_id=424242))] + actions[1:]
    with pytest.raises(ReplayDiverged):
        replay(config, 34, mutated)


# ── redacted views ───────────────────────────────────────────────────


def test_redacted_view_hides_other_hands(config):
    state = new_game(config, 8)
    view = redacted_view(state, 0)
    mine, other = view["players"][0], view["players"][1]
    assert "supply_hand" in mine
    assert "supply_hand" not in other
    assert other["supply_count"] == config.supply_hand_size
    assert other["validation_count"] == config.validation_hand_size
    assert view["supply_pile_count"] == len(state.supply_pile)


def test_redacted_view_open_hands():
    config = small_config(open_hands=True)
    view = redacted_view(new_game(config, 8), 0)
    assert all("supply_hand" in p for p in view["players"])


def test_redacted_view_unknown_viewer(config):
    with pytest.raises(UnknownPlayer):
        redacted_view(new_game(config, 8), 9)


def test_redacted_view_includes_chain(config):
    state, _ = play_episode(config, 44)
    view = redacted_view(state, 1)
    assert len(view["chain"]) == config.target_wagons
    assert view["phase"] == "finished"


# ── serialization ────────────────────────────────────────────────────


def test_state_json_round_trip(config):
    state = new_game(config, 17)
    assert state_to_json(state_from_json(state_to_json(state))) == state_to_json(state)
    mid, _ = drive(state, random.Random(2), until=lambda s: s.phase is Phase.VALIDATE)
    assert state_to_json(state_from_json(state_to_json(mid))) == state_to_json(mid)


def test_state_json_is_canonical(config):
    state = new_game(config, 17)
    text = state_to_json(state)
    assert text == state_to_json(state_from_json(text))
    assert '"version":"state_v1"' in text


# ── fuzzed invariants (unit-test scale; acceptance runs 10k) ─────────


@pytest.mark.parametrize("seed", range(25))
def test_random_episode_invariants(seed, config):
    assert run_checked_episode(config, seed) == []


@pytest.mark.parametrize("players", [2, 3, 4, 5])
def test_default_config_episode_invariants(players):
    assert run_checked_episode(GameConfig(players=players), seed=players) == []


def test_apply_action_accepts_exactly_the_legal_set(config):
    # The direct validation inside apply_action must agree with
    # legal_actions everywhere a random game wanders.
    rng = random.Random(1)
    state = new_game(config, 1)
    probes = [
        Action(ActionType.DRAW_SUPPLY),
        Action(ActionType.DRAW_VALIDATION),
        Action(ActionType.PASS),
    ]
    steps = 0
    while not is_terminal(state) and steps < 300:
        legal = legal_actions(state, state.turn)
        hand_probes = [
            Action(ActionType.PLAY_SUPPLY, c.id)
            for c in state.players[state.turn].supply_hand
        ] + [
            Action(ActionType.PLAY_VALIDATION, c.id)
            for c in state.players[state.turn].validation_hand
        ]
        for probe in probes + hand_probes:
            if probe in legal:
                apply_action(state, state.turn, probe)
            else:
                with pytest.raises(IllegalAction):
                    apply_action(state, state.turn, probe)
        state = apply_action(state, state.turn, legal[rng.randrange(len(legal))])
        steps += 1

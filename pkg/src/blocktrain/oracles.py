"""Exact expected-turn-count oracles, by brute-force enumeration.

These deliberately do NOT import the rules engine: the turn protocol is
re-implemented here from scratch so the results can serve as independent
cross-checks for the engine-driven Monte Carlo simulations.  All results
are exact rationals.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Sequence


class InvalidDeck(ValueError):
    """Deck cannot support the protocol being analyzed."""


class TooLarge(ValueError):
    """State space exceeds the exhaustive-enumeration bound."""


# ── validation phase ─────────────────────────────────────────────────


def exact_validation_turns(
    players: int, deck_size: int, immediate_play: bool = True
) -> Fraction:
    """Expected number of validation turns.

    Setup: exactly one correct card among ``deck_size``; each player holds
    one card, the pile holds the rest.  The correct card is equally likely
    to sit in any of the ``deck_size`` positions (each hand, each pile
    depth); every placement is simulated turn by turn and the results
    averaged.

    Protocol per turn: play the correct card if held (a card drawn this
    very turn counts only under ``immediate_play``); otherwise draw from
    the pile if possible; otherwise pass.
    """
    if players < 1:
        raise InvalidDeck(f"players must be positive, got {players}")
    if deck_size < players:
        raise InvalidDeck(
            f"deck of {deck_size} cannot deal one card to {players} players"
        )
    total = sum(
        _validation_turns_for_position(players, deck_size, pos, immediate_play)
        for pos in range(deck_size)
    )
    return Fraction(total, deck_size)


def _validation_turns_for_position(
    players: int, deck_size: int, position: int, immediate_play: bool
) -> int:
    """Turns until validation given the correct card's deal position:
    positions 0..players-1 are hands (by acting order), the rest is the
    pile in draw order."""
    holds = [position == i for i in range(players)]
    pile_size = deck_size - players
    correct_depth = position - players if position >= players else None
    drawn = 0
    for turn in range(1, deck_size + players + 1):
        actor = (turn - 1) % players
        if holds[actor]:
            return turn
        if drawn < pile_size:
            hit = correct_depth == drawn
            drawn += 1
            if hit:
                if immediate_play:
                    return turn
                holds[actor] = True
        # else: pile empty and no card to play -> pass
    raise AssertionError("validation protocol failed to terminate")


# ── fill phase ───────────────────────────────────────────────────────

MAX_FILL_CARDS = 12
MAX_FILL_PLAYERS = 3
MAX_FILL_SLOTS = 4


def expected_fill_turns(
    players: int,
    hand_size: int,
    deck_counts: Mapping[str, int],
    required: Sequence[str],
) -> Fraction:
    """Exact expected turns to fill one wagon, by full enumeration.

    Every deal and every draw branches over the remaining deck with its
    exact probability.  Protocol per turn: if the actor holds a card of the
    next required kind they must play it; otherwise they draw from the deck
    if it is nonempty; otherwise they pass.

    Raises TooLarge beyond the documented enumeration bound
    (> MAX_FILL_CARDS cards, > MAX_FILL_PLAYERS players or
    > MAX_FILL_SLOTS slots).
    """
    if players < 1 or hand_size < 0:
        raise InvalidDeck("players must be positive and hand_size non-negative")
    if not required:
        raise InvalidDeck("required sequence must not be empty")
    kinds = sorted(set(deck_counts) | set(required))
    counts = tuple(deck_counts.get(k, 0) for k in kinds)
    req = tuple(kinds.index(k) for k in required)
    total_cards = sum(counts)
    if players * hand_size > total_cards:
        raise InvalidDeck(
            f"deck of {total_cards} cannot deal {hand_size} cards to {players} players"
        )
    for ki, kind in enumerate(kinds):
        if req.count(ki) > counts[ki]:
            raise InvalidDeck(f"deck cannot cover the wagon's demand for {kind!r}")
    if (
        total_cards > MAX_FILL_CARDS
        or players > MAX_FILL_PLAYERS
        or len(required) > MAX_FILL_SLOTS
    ):
        raise TooLarge(
            f"enumeration bound exceeded: {total_cards} cards, {players} players, "
            f"{len(required)} slots (max {MAX_FILL_CARDS}/{MAX_FILL_PLAYERS}/{MAX_FILL_SLOTS})"
        )

    n_kinds = len(kinds)

    def dec(tup: tuple[int, ...], i: int) -> tuple[int, ...]:
        return tup[:i] + (tup[i] - 1,) + tup[i + 1 :]

    def inc(tup: tuple[int, ...], i: int) -> tuple[int, ...]:
        return tup[:i] + (tup[i] + 1,) + tup[i + 1 :]

    @lru_cache(maxsize=None)
    def play(deck, hands, filled, actor) -> Fraction:
        # Expected remaining turns from this mid-game position.
        if filled == len(req):
            return Fraction(0)
        need = req[filled]
        nxt = (actor + 1) % players
        hand = hands[actor]
        if hand[need] > 0:
            new_hands = hands[:actor] + (dec(hand, need),) + hands[actor + 1 :]
            return 1 + play(deck, new_hands, filled + 1, nxt)
        remaining = sum(deck)
        if remaining:
            expected = Fraction(0)
            for ki in range(n_kinds):
                if deck[ki]:
                    new_hands = hands[:actor] + (inc(hand, ki),) + hands[actor + 1 :]
                    expected += Fraction(deck[ki], remaining) * play(
                        dec(deck, ki), new_hands, filled, nxt
                    )
            return 1 + expected
        return 1 + play(deck, hands, filled, nxt)  # pass

    @lru_cache(maxsize=None)
    def deal(deck, hands, remaining_deal) -> Fraction:
        if remaining_deal == 0:
            return play(deck, hands, 0, 0)
        receiver = (players * hand_size - remaining_deal) // hand_size
        total = sum(deck)
        expected = Fraction(0)
        for ki in range(n_kinds):
            if deck[ki]:
                new_hands = (
                    hands[:receiver]
                    + (inc(hands[receiver], ki),)
                    + hands[receiver + 1 :]
                )
                expected += Fraction(deck[ki], total) * deal(
                    dec(deck, ki), new_hands, remaining_deal - 1
                )
        return expected

    empty_hand = (0,) * n_kinds
    return deal(counts, (empty_hand,) * players, players * hand_size)

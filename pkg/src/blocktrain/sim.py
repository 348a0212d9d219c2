"""Bot policies, Monte Carlo episode runner and aggregate statistics.

Per-episode seeds are derived from the master seed with a splitmix64-style
mixer, so episodes are reproducible individually and aggregates do not
depend on execution order or worker count.
"""

from __future__ import annotations

import math
import random
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Union

from .chain import Chain, build_chain
from .oracles import InvalidDeck, TooLarge, exact_validation_turns, expected_fill_turns
from .rules import (
    KINDS,
    Action,
    BlocktrainError,
    GameConfig,
    GameState,
    apply_action,
    config_to_dict,
    is_terminal,
    legal_actions,
    new_game,
)

__all__ = [
    "AggregateStats",
    "EpisodeStats",
    "InvalidCount",
    "InvalidRate",
    "NonTermination",
    "POLICIES",
    "StatSummary",
    "aggregate",
    "derive_seed",
    "estimate_duration",
    "duration_band",
    "exact_fill_turns_small",
    "exact_validation_turns",
    "monte_carlo",
    "run_episode",
    "run_episodes",
    "simulation_report",
    "uniform_random_legal",
    "validation_turns_mc",
]

DEFAULT_STEP_CAP = 10_000
DEFAULT_SECONDS_PER_TURN = 20.0

# Reported typical duration of a human-played game, used as the
# calibration reference for the duration estimate.
REFERENCE_MINUTES = 20.0


class NonTermination(BlocktrainError):
    code = "non_termination"


class InvalidCount(BlocktrainError):
    code = "invalid_count"


class InvalidRate(BlocktrainError):
    code = "invalid_rate"


# ── seed derivation (splitmix64-style, random access) ────────────────

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def _mix64(x: int) -> int:
    x &= _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (x ^ (x >> 31)) & _MASK64


def derive_seed(seed: int, stream: int) -> int:
    """Stateless sub-seed ``stream`` of ``seed``; random access makes
    parallel episode scheduling incapable of changing results."""
    return _mix64((seed + (stream + 1) * _GAMMA) & _MASK64)


# ── policies ─────────────────────────────────────────────────────────

Policy = Callable[[GameState, list[Action], random.Random], Action]


def uniform_random_legal(
    state: GameState, legal: list[Action], rng: random.Random
) -> Action:
    """Baseline policy: pick uniformly among the legal actions."""
    return legal[rng.randrange(len(legal))]


POLICIES: dict[str, Policy] = {"uniform_random_legal": uniform_random_legal}


def _resolve_policy(policy: Union[str, Policy]) -> tuple[str, Policy]:
    if callable(policy):
        return getattr(policy, "__name__", "custom"), policy
    try:
        return policy, POLICIES[policy]
    except KeyError:
        raise BlocktrainError(f"unknown policy {policy!r}") from None


# ── episodes ─────────────────────────────────────────────────────────


@dataclass(frozen=True, slots=True)
class EpisodeStats:
    fill_turns: tuple[int, ...]
    validation_turns: tuple[int, ...]
    total_turns: int
    wagons_validated: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "fill_turns": list(self.fill_turns),
            "validation_turns": list(self.validation_turns),
            "total_turns": self.total_turns,
            "wagons_validated": self.wagons_validated,
            "seed": self.seed,
        }


def run_episode(
    config: GameConfig,
    policy: Union[str, Policy],
    seed: int,
    step_cap: int = DEFAULT_STEP_CAP,
) -> tuple[EpisodeStats, Chain]:
    """Play one seeded game to termination under ``policy``.

    The policy draws from its own sub-stream of ``seed``, separate from the
    shuffles inside the game.  Raises NonTermination past ``step_cap``
    actions (that would be an engine bug, not bad luck).
    """
    _, choose = _resolve_policy(policy)
    state = new_game(config, seed)
    rng = random.Random(derive_seed(seed, 1))
    steps = 0
    while not is_terminal(state):
        if steps >= step_cap:
            raise NonTermination(f"episode exceeded {step_cap} actions (seed {seed})")
        actions = legal_actions(state, state.turn)
        state = apply_action(state, state.turn, choose(state, actions, rng))
        steps += 1
    stats = EpisodeStats(
        fill_turns=state.fill_turns,
        validation_turns=state.validation_turns,
        total_turns=sum(state.fill_turns) + sum(state.validation_turns),
        wagons_validated=state.config.target_wagons,
        seed=seed,
    )
    return stats, build_chain(state)


def run_episodes(
    config: GameConfig,
    policy: Union[str, Policy],
    episodes: int,
    seed: int,
    workers: int = 1,
    step_cap: int = DEFAULT_STEP_CAP,
) -> list[EpisodeStats]:
    """Run ``episodes`` independent seeded episodes, optionally on a worker
    pool; results are returned in episode order either way."""
    if episodes < 1:
        raise InvalidCount(f"episode count must be >= 1, got {episodes}")

    def one(i: int) -> EpisodeStats:
        stats, _ = run_episode(config, policy, derive_seed(seed, i), step_cap)
        return stats

    if workers <= 1:
        return [one(i) for i in range(episodes)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, range(episodes)))


# ── aggregation ──────────────────────────────────────────────────────


@dataclass(frozen=True, slots=True)
class StatSummary:
    mean: float
    stddev: float
    min: int
    max: int

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "stddev": self.stddev,
            "min": self.min,
            "max": self.max,
        }


def _summarize(values: list[int]) -> StatSummary:
    return StatSummary(
        mean=statistics.fmean(values),
        stddev=statistics.stdev(values) if len(values) > 1 else 0.0,
        min=min(values),
        max=max(values),
    )


@dataclass(frozen=True, slots=True)
class AggregateStats:
    episodes: int
    seed: int
    policy: str
    total_turns: StatSummary
    fill_turns: StatSummary
    validation_turns: StatSummary
    seconds_per_turn: float
    estimated_minutes: float

    def to_dict(self) -> dict:
        return {
            "episodes": self.episodes,
            "seed": self.seed,
            "policy": self.policy,
            "total_turns": self.total_turns.to_dict(),
            "fill_turns": self.fill_turns.to_dict(),
            "validation_turns": self.validation_turns.to_dict(),
            "seconds_per_turn": self.seconds_per_turn,
            "estimated_minutes": self.estimated_minutes,
        }


def aggregate(
    stats: list[EpisodeStats],
    seed: int,
    policy_name: str,
    seconds_per_turn: float = DEFAULT_SECONDS_PER_TURN,
) -> AggregateStats:
    if not stats:
        raise InvalidCount("cannot aggregate zero episodes")
    totals = [s.total_turns for s in stats]
    fills = [sum(s.fill_turns) for s in stats]
    validations = [sum(s.validation_turns) for s in stats]
    total_summary = _summarize(totals)
    return AggregateStats(
        episodes=len(stats),
        seed=seed,
        policy=policy_name,
        total_turns=total_summary,
        fill_turns=_summarize(fills),
        validation_turns=_summarize(validations),
        seconds_per_turn=seconds_per_turn,
        estimated_minutes=total_summary.mean * seconds_per_turn / 60.0,
    )


def monte_carlo(
    config: GameConfig,
    policy: Union[str, Policy],
    episodes: int,
    seed: int,
    seconds_per_turn: float = DEFAULT_SECONDS_PER_TURN,
    workers: int = 1,
) -> AggregateStats:
    """Aggregate ``episodes`` seeded episodes; reproducible given
    (config, policy, episodes, seed) regardless of ``workers``."""
    name, _ = _resolve_policy(policy)
    stats = run_episodes(config, policy, episodes, seed, workers=workers)
    return aggregate(stats, seed, name, seconds_per_turn)


def estimate_duration(stats: AggregateStats, seconds_per_turn: float) -> float:
    """Minutes of play implied by the mean turn count at the given pace."""
    if seconds_per_turn <= 0:
        raise InvalidRate(f"seconds_per_turn must be positive, got {seconds_per_turn}")
    return stats.total_turns.mean * seconds_per_turn / 60.0


def duration_band(
    stats: AggregateStats, low_spt: float = 15.0, high_spt: float = 25.0
) -> tuple[float, float]:
    """Duration estimate band over a seconds-per-turn range."""
    return estimate_duration(stats, low_spt), estimate_duration(stats, high_spt)


# ── oracle-facing helpers ────────────────────────────────────────────


def exact_fill_turns_small(config: GameConfig):
    """Exact expected fill turns for the first wagon of ``config``, via the
    exhaustive enumerator.  Raises TooLarge beyond the enumeration bound."""
    deck_counts = {kind.value: config.supply_copies_per_kind for kind in KINDS}
    required = [kind.value for kind in config.wagon_set[0]]
    return expected_fill_turns(
        config.players, config.supply_hand_size, deck_counts, required
    )


def validation_turns_mc(
    players: int,
    deck_size: int,
    immediate_play: bool,
    episodes: int,
    seed: int,
) -> tuple[float, float]:
    """Monte Carlo (mean, stddev) of validation turns.

    Samples the correct card's position uniformly and walks the turn
    protocol.  Written independently of the exact enumerator so the two can
    cross-check each other.
    """
    if episodes < 1:
        raise InvalidCount(f"episode count must be >= 1, got {episodes}")
    if deck_size < players:
        raise InvalidDeck(f"deck of {deck_size} cannot deal to {players} players")
    rng = random.Random(derive_seed(seed, 2))
    pile_size = deck_size - players
    total = 0
    total_sq = 0
    for _ in range(episodes):
        position = rng.randrange(deck_size)
        held = position if position < players else -1
        pile_depth = position - players  # meaningful only when >= 0
        drawn = 0
        turn = 0
        while True:
            actor = turn % players
            turn += 1
            if held == actor:
                break
            if drawn < pile_size:
                hit = pile_depth == drawn
                drawn += 1
                if hit:
                    if immediate_play:
                        break
                    held = actor
        total += turn
        total_sq += turn * turn
    mean = total / episodes
    if episodes > 1:
        variance = (total_sq - episodes * mean * mean) / (episodes - 1)
    else:
        variance = 0.0
    return mean, math.sqrt(max(variance, 0.0))


# ── report (simreport_v1) ────────────────────────────────────────────


def simulation_report(config: GameConfig, agg: AggregateStats) -> dict:
    low, high = duration_band(agg)
    return {
        "version": "simreport_v1",
        "config": config_to_dict(config),
        "policy": agg.policy,
        "episodes": agg.episodes,
        "seed": agg.seed,
        "total_turns": agg.total_turns.to_dict(),
        "fill_turns": agg.fill_turns.to_dict(),
        "validation_turns": agg.validation_turns.to_dict(),
        "seconds_per_turn": agg.seconds_per_turn,
        "estimated_minutes": agg.estimated_minutes,
        "calibration": {
            "seconds_per_turn_band": [15.0, 25.0],
            "estimated_minutes_band": [low, high],
            "reference_minutes": REFERENCE_MINUTES,
            "note": (
                "reference: a typical human-played game runs approximately "
                "20 minutes; the band maps mean turns through 15-25 s/turn"
            ),
        },
    }

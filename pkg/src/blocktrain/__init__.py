"""Blocktrain: a collaborative supply-train board game with a hash-linked
ledger, a simulation lab with exact oracles, and a multiplayer service."""

from .chain import (
    Block,
    Chain,
    VerifyResult,
    build_chain,
    canonical_bytes,
    finalize_block,
    tamper,
    verify_chain,
    verify_ledger,
)
from .rules import (
    Action,
    ActionType,
    BlocktrainError,
    ConfigInvalid,
    GameConfig,
    GameState,
    IllegalAction,
    NotYourTurn,
    Phase,
    SupplyKind,
    apply_action,
    is_terminal,
    legal_actions,
    matches_validation,
    new_game,
    redacted_view,
    replay,
    state_from_json,
    state_to_json,
)
from .sim import (
    AggregateStats,
    EpisodeStats,
    estimate_duration,
    exact_fill_turns_small,
    exact_validation_turns,
    monte_carlo,
    run_episode,
)

__version__ = "0.1.0"

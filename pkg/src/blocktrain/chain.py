"""Hash-linked ledger of validated wagons.

Each validated wagon freezes into a Block whose SHA-256 hash covers a
canonical pipe-delimited byte encoding; every block carries its
predecessor's hash, so any later edit is detectable by re-verification.
The ledger file format (``ledger_v1``) is append-only JSON lines, one
block per line.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from typing import Optional

from .rules import BlocktrainError, BoardStatus, GameState, SupplyKind, WagonBoard

GENESIS_PREV = "0" * 64

LEDGER_FORMAT = "ledger_v1"

# VerifyResult reasons
HASH_MISMATCH = "hash_mismatch"
LINK_MISMATCH = "link_mismatch"
INDEX_GAP = "index_gap"


class MalformedBlock(BlocktrainError):
    code = "malformed_block"


class WagonNotValidated(BlocktrainError):
    code = "wagon_not_validated"


class IndexOutOfRange(BlocktrainError):
    code = "index_out_of_range"


class MalformedLedger(BlocktrainError):
    code = "malformed_ledger"

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True, slots=True)
class Block:
    index: int
    prev_hash: str
    payload_sequence: tuple[SupplyKind, ...]
    validation_card_id: int
    validator: int
    turn_count: int
    hash: str


@dataclass(frozen=True, slots=True)
class Chain:
    blocks: tuple[Block, ...] = ()

    def __len__(self) -> int:
        return len(self.blocks)


@dataclass(frozen=True, slots=True)
class VerifyResult:
    valid: bool
    first_bad_index: Optional[int] = None
    reason: Optional[str] = None


VALID = VerifyResult(valid=True)

_HEX_DIGITS = frozenset("0123456789abcdef")


def _check_hex64(value: str, what: str) -> None:
    if len(value) != 64 or not set(value) <= _HEX_DIGITS:
        raise MalformedBlock(f"{what} must be 64 lowercase hex chars, got {value!r}")


def canonical_bytes(
    index: int,
    prev_hash: str,
    payload_sequence: tuple[SupplyKind, ...],
    validation_card_id: int,
    validator: int,
    turn_count: int,
) -> bytes:
    """Deterministic byte encoding of a block minus its hash field:
    ``v1|{index}|{prev_hash}|{W,F,...}|{card}|{validator}|{turns}``."""
    _check_hex64(prev_hash, "prev_hash")
    if not payload_sequence:
        raise MalformedBlock("payload_sequence must not be empty")
    kinds = ",".join(SupplyKind(k).value for k in payload_sequence)
    text = f"v1|{index}|{prev_hash}|{kinds}|{validation_card_id}|{validator}|{turn_count}"
    return text.encode("utf-8")


def block_hash(
    index: int,
    prev_hash: str,
    payload_sequence: tuple[SupplyKind, ...],
    validation_card_id: int,
    validator: int,
    turn_count: int,
) -> str:
    data = canonical_bytes(
        index, prev_hash, payload_sequence, validation_card_id, validator, turn_count
    )
    return hashlib.sha256(data).hexdigest()


def finalize_block(
    board: WagonBoard, prev_hash: str, validator: int, turn_count: int
) -> Block:
    """Freeze a validated wagon into a block linked to ``prev_hash``."""
    if board.status is not BoardStatus.VALIDATED:
        raise WagonNotValidated(f"wagon {board.index} has status {board.status.value}")
    payload = tuple(card.kind for card in board.filled)
    digest = block_hash(
        board.index, prev_hash, payload, board.validation_card_id, validator, turn_count
    )
    return Block(
        index=board.index,
        prev_hash=prev_hash,
        payload_sequence=payload,
        validation_card_id=board.validation_card_id,
        validator=validator,
        turn_count=turn_count,
        hash=digest,
    )


def build_chain(state: GameState) -> Chain:
    """Fold the state's validated wagons (a prefix of the boards) into a
    chain; partial games yield partial chains."""
    blocks: list[Block] = []
    prev = GENESIS_PREV
    for board in state.boards:
        if board.status is not BoardStatus.VALIDATED:
            break
        turns = state.fill_turns[board.index] + state.validation_turns[board.index]
        block = finalize_block(board, prev, board.validated_by, turns)
        blocks.append(block)
        prev = block.hash
    return Chain(tuple(blocks))


def verify_chain(chain: Chain) -> VerifyResult:
    """Valid iff every index, link and recomputed hash checks out; otherwise
    Invalid at the lowest offending block."""
    prev = GENESIS_PREV
    for i, block in enumerate(chain.blocks):
        if block.index != i:
            return VerifyResult(False, i, INDEX_GAP)
        if block.prev_hash != prev:
            return VerifyResult(False, i, LINK_MISMATCH)
        try:
            recomputed = block_hash(
                block.index,
                block.prev_hash,
                block.payload_sequence,
                block.validation_card_id,
                block.validator,
                block.turn_count,
            )
        except (MalformedBlock, ValueError):
            return VerifyResult(False, i, HASH_MISMATCH)
        if recomputed != block.hash:
            return VerifyResult(False, i, HASH_MISMATCH)
        prev = block.hash
    return VALID


def _flip_hex(value: str) -> str:
    first = "1" if value[0] == "0" else "0"
    return first + value[1:]


def _cycle_kind(kind: SupplyKind) -> SupplyKind:
    order = [SupplyKind.WATER, SupplyKind.FOOD, SupplyKind.MEDICINE]
    return order[(order.index(kind) + 1) % 3]


def tamper(chain: Chain, index: int, fieldname: str, value=None) -> Chain:
    """Copy the chain with one field of one block altered and hashes left
    stale — a demonstration object for verify_chain.  With ``value`` omitted
    a default perturbation is applied."""
    if not 0 <= index < len(chain.blocks):
        raise IndexOutOfRange(f"no block {index} in a {len(chain.blocks)}-block chain")
    block = chain.blocks[index]
    if value is None:
        if fieldname == "index":
            value = block.index + 1
        elif fieldname in ("prev_hash", "hash"):
            value = _flip_hex(getattr(block, fieldname))
        elif fieldname == "payload_sequence":
            value = (_cycle_kind(block.payload_sequence[0]),) + block.payload_sequence[1:]
        elif fieldname in ("validation_card_id", "validator", "turn_count"):
            value = getattr(block, fieldname) + 1
        else:
            raise ValueError(f"unknown block field {fieldname!r}")
    elif fieldname not in Block.__dataclass_fields__:
        raise ValueError(f"unknown block field {fieldname!r}")
    tampered = replace(block, **{fieldname: value})
    blocks = chain.blocks[:index] + (tampered,) + chain.blocks[index + 1 :]
    return Chain(blocks)


# ── ledger file I/O (ledger_v1, JSON lines) ──────────────────────────


def block_to_dict(block: Block) -> dict:
    return {
        "index": block.index,
        "prev_hash": block.prev_hash,
        "payload_sequence": [k.value for k in block.payload_sequence],
        "validation_card_id": block.validation_card_id,
        "validator": block.validator,
        "turn_count": block.turn_count,
        "hash": block.hash,
    }


def block_from_dict(d: dict) -> Block:
    return Block(
        index=d["index"],
        prev_hash=d["prev_hash"],
        payload_sequence=tuple(SupplyKind(k) for k in d["payload_sequence"]),
        validation_card_id=d["validation_card_id"],
        validator=d["validator"],
        turn_count=d["turn_count"],
        hash=d["hash"],
    )


def chain_to_dict(chain: Chain) -> dict:
    return {"blocks": [block_to_dict(b) for b in chain.blocks]}


def chain_from_dict(d: dict) -> Chain:
    return Chain(tuple(block_from_dict(b) for b in d["blocks"]))


def append_chain(path, chain: Chain) -> None:
    """Append one chain to the ledger file, one ledger_v1 line per block."""
    with open(path, "a", encoding="utf-8") as handle:
        for block in chain.blocks:
            record = {"format": LEDGER_FORMAT, **block_to_dict(block)}
            handle.write(json.dumps(record, sort_keys=True) + "\n")


def load_ledger(path) -> list[Chain]:
    """Parse a ledger file into chains; a line with index 0 starts a new
    chain.  Raises MalformedLedger with the 1-based offending line."""
    chains: list[Chain] = []
    current: list[Block] = []
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedLedger(f"not valid JSON ({exc.msg})", lineno) from exc
            if not isinstance(record, dict):
                raise MalformedLedger("expected a JSON object", lineno)
            if record.get("format") != LEDGER_FORMAT:
                raise MalformedLedger(
                    f"expected format {LEDGER_FORMAT!r}, got {record.get('format')!r}",
                    lineno,
                )
            try:
                block = block_from_dict(record)
            except (KeyError, ValueError, TypeError) as exc:
                raise MalformedLedger(f"bad block record: {exc}", lineno) from exc
            if block.index == 0 and current:
                chains.append(Chain(tuple(current)))
                current = []
            current.append(block)
    if current:
        chains.append(Chain(tuple(current)))
    return chains


def verify_ledger(path) -> list[VerifyResult]:
    """Load every chain stored at ``path`` and verify each one."""
    return [verify_chain(chain) for chain in load_ledger(path)]

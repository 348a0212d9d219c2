// wire_v1 message shapes, matching the server exactly.

export const WIRE_VERSION = "wire_v1";

export type SupplyLetter = "W" | "F" | "M";

export const SUPPLY_NAMES: Record<SupplyLetter, string> = {
  W: "water",
  F: "food",
  M: "medicine",
};

export interface ActionPayload {
  type: string;
  card_id: number | null;
}

export interface SupplyCardView {
  id: number;
  kind: SupplyLetter;
}

export interface ValidationCardView {
  id: number;
  sequence: SupplyLetter[];
}

export interface BoardView {
  index: number;
  required: SupplyLetter[];
  filled: SupplyCardView[];
  status: "filling" | "validating" | "validated";
  validated_by: number | null;
  validation_card_id: number | null;
}

export interface PlayerView {
  seat: number;
  supply_count: number;
  validation_count: number;
  supply_hand?: SupplyCardView[];
  validation_hand?: ValidationCardView[];
}

export interface BlockView {
  index: number;
  prev_hash: string;
  payload_sequence: SupplyLetter[];
  validation_card_id: number;
  validator: number;
  turn_count: number;
  hash: string;
}

export interface GameView {
  version: number;
  viewer: number;
  phase: "fill" | "validate" | "finished";
  current_wagon: number;
  turn: number;
  last_filler: number | null;
  boards: BoardView[];
  players: PlayerView[];
  supply_pile_count: number;
  validation_pile_count: number;
  chain: BlockView[];
  config: {
    players: number;
    slots_per_wagon: number;
    target_wagons: number;
    open_hands: boolean;
  };
}

export interface SeatInfo {
  seat: number;
  name: string;
  connected: boolean;
}

// server -> client
export interface SessionCreatedFrame {
  v: string;
  type: "session_created";
  session_id: string;
  capacity: number;
}

export interface LobbyFrame {
  v: string;
  type: "lobby";
  session_id: string;
  status: "lobby" | "playing" | "finished";
  capacity: number;
  seats: SeatInfo[];
}

export interface ViewFrame {
  v: string;
  type: "view";
  your_seat: number;
  turn: number;
  version: number;
  legal_actions: ActionPayload[];
  view: GameView;
}

export interface ActionResultFrame {
  v: string;
  type: "action_result";
  accepted: boolean;
  error: string | null;
  version: number;
}

export interface ChainFinalFrame {
  v: string;
  type: "chain_final";
  chain: { blocks: BlockView[] };
}

export interface ErrorFrame {
  v: string;
  type: "error";
  code: string;
  message: string;
}

export type ServerFrame =
  | SessionCreatedFrame
  | LobbyFrame
  | ViewFrame
  | ActionResultFrame
  | ChainFinalFrame
  | ErrorFrame;

// client -> server
export interface GameConfigPayload {
  players?: number;
  slots_per_wagon?: number;
  target_wagons?: number;
  wagon_set?: SupplyLetter[][];
  supply_copies_per_kind?: number;
  validation_decoys?: number;
  open_hands?: boolean;
  supply_hand_size?: number;
  validation_hand_size?: number;
  immediate_validation_play?: boolean;
}

export function createSessionFrame(config: GameConfigPayload) {
  return { v: WIRE_VERSION, type: "create_session", config };
}

export function joinFrame(session: string, name: string) {
  return { v: WIRE_VERSION, type: "join", session, name };
}

export function actFrame(action: ActionPayload) {
  return { v: WIRE_VERSION, type: "act", action };
}

export function leaveFrame() {
  return { v: WIRE_VERSION, type: "leave" };
}

export function sameAction(a: ActionPayload, b: ActionPayload): boolean {
  return a.type === b.type && (a.card_id ?? null) === (b.card_id ?? null);
}

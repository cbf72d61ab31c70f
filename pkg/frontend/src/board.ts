/**
 * Card board state: the on-screen analogue of laying plan cards on a table.
 *
 * The board is an ordered sequence of slots, worst to best, sitting above an
 * implicit zero-level anchor. A slot is either a lane (an equivalence class
 * of one or more plan cards, side by side) or a single blank card. Blank
 * cards encode preference gaps; they may appear before the first lane (the
 * zero gap) and between lanes, but never after the best lane.
 *
 * All operations are pure: they return a new state and never mutate.
 */

export type Slot = { kind: "lane"; cards: string[] } | { kind: "blank" };

export interface CardBoardState {
  slots: Slot[];
  unplaced: string[];
}

export interface CardRankingJson {
  classes: string[][];
  blanks: number[];
  zero_gap: number;
}

export class BoardError extends Error {
  constructor(message: string, readonly unplaced: string[] = []) {
    super(message);
    this.name = "BoardError";
  }
}

export function emptyBoard(planIds: string[]): CardBoardState {
  return { slots: [], unplaced: [...planIds] };
}

function cloneSlots(slots: Slot[]): Slot[] {
  return slots.map((s) => (s.kind === "lane" ? { kind: "lane", cards: [...s.cards] } : { kind: "blank" }));
}

function findCard(slots: Slot[], card: string): [number, number] | null {
  for (let i = 0; i < slots.length; i++) {
    const slot = slots[i];
    if (slot.kind === "lane") {
      const j = slot.cards.indexOf(card);
      if (j >= 0) return [i, j];
    }
  }
  return null;
}

/** Remove a card from wherever it is (board or tray); drop emptied lanes. */
function detach(state: CardBoardState, card: string): CardBoardState {
  const slots = cloneSlots(state.slots);
  const unplaced = state.unplaced.filter((c) => c !== card);
  const pos = findCard(slots, card);
  if (pos) {
    const lane = slots[pos[0]] as { kind: "lane"; cards: string[] };
    lane.cards.splice(pos[1], 1);
    if (lane.cards.length === 0) slots.splice(pos[0], 1);
  }
  return { slots, unplaced };
}

/** Place a card into the lane at slot index `at` (which must be a lane). */
export function placeInLane(state: CardBoardState, card: string, at: number): CardBoardState {
  const base = detach(state, card);
  const slot = base.slots[at];
  if (!slot || slot.kind !== "lane") {
    throw new BoardError(`slot ${at} is not a lane`);
  }
  slot.cards.push(card);
  return base;
}

/** Place a card as a brand-new lane inserted at slot index `at`. */
export function placeAsNewLane(state: CardBoardState, card: string, at: number): CardBoardState {
  const base = detach(state, card);
  const slots = base.slots;
  const clamped = Math.max(0, Math.min(at, slots.length));
  slots.splice(clamped, 0, { kind: "lane", cards: [card] });
  return { slots, unplaced: base.unplaced };
}

/** Send a card back to the tray. */
export function unplace(state: CardBoardState, card: string): CardBoardState {
  const base = detach(state, card);
  return { slots: base.slots, unplaced: [...base.unplaced, card] };
}

/** Insert one blank card at slot index `at`. */
export function insertBlank(state: CardBoardState, at: number): CardBoardState {
  const slots = cloneSlots(state.slots);
  const clamped = Math.max(0, Math.min(at, slots.length));
  slots.splice(clamped, 0, { kind: "blank" });
  return { slots, unplaced: [...state.unplaced] };
}

/** Remove the blank card at slot index `at` (must be a blank). */
export function removeBlank(state: CardBoardState, at: number): CardBoardState {
  const slots = cloneSlots(state.slots);
  if (!slots[at] || slots[at].kind !== "blank") {
    throw new BoardError(`slot ${at} is not a blank card`);
  }
  slots.splice(at, 1);
  return { slots, unplaced: [...state.unplaced] };
}

/**
 * Serialize the board into ranking JSON (classes worst to best, blank counts,
 * zero gap). Unplaced cards and trailing blanks block submission.
 */
export function boardToRanking(state: CardBoardState): CardRankingJson {
  if (state.unplaced.length > 0) {
    throw new BoardError(
      `unplaced cards: ${[...state.unplaced].sort().join(", ")}`,
      [...state.unplaced],
    );
  }
  const classes: string[][] = [];
  const gaps: number[] = [];
  let pendingBlanks = 0;
  let zeroGap = 0;
  for (const slot of state.slots) {
    if (slot.kind === "blank") {
      pendingBlanks += 1;
      continue;
    }
    if (classes.length === 0) {
      zeroGap = pendingBlanks;
    } else {
      gaps.push(pendingBlanks);
    }
    pendingBlanks = 0;
    classes.push([...slot.cards]);
  }
  if (classes.length === 0) {
    throw new BoardError("the board has no plan cards");
  }
  if (pendingBlanks > 0) {
    throw new BoardError("blank cards past the best class are not allowed");
  }
  return { classes, blanks: gaps, zero_gap: zeroGap };
}

/** Rebuild a board from ranking JSON; the inverse of boardToRanking. */
export function boardFromRanking(ranking: CardRankingJson): CardBoardState {
  const slots: Slot[] = [];
  for (let k = 0; k < ranking.zero_gap; k++) slots.push({ kind: "blank" });
  ranking.classes.forEach((cls, idx) => {
    if (idx > 0) {
      for (let k = 0; k < ranking.blanks[idx - 1]; k++) slots.push({ kind: "blank" });
    }
    slots.push({ kind: "lane", cards: [...cls] });
  });
  return { slots, unplaced: [] };
}

export function placedCards(state: CardBoardState): string[] {
  const out: string[] = [];
  for (const slot of state.slots) {
    if (slot.kind === "lane") out.push(...slot.cards);
  }
  return out;
}

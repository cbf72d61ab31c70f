import { describe, expect, it } from "vitest";

import {
  BoardError,
  boardFromRanking,
  boardToRanking,
  emptyBoard,
  insertBlank,
  placeAsNewLane,
  placeInLane,
  placedCards,
  removeBlank,
  unplace,
  type CardBoardState,
  type Slot,
} from "../src/board.js";

function laneBoard(spec: (string[] | number)[]): CardBoardState {
  // numbers insert that many blanks, arrays become lanes
  const slots: Slot[] = [];
  for (const entry of spec) {
    if (typeof entry === "number") {
      for (let k = 0; k < entry; k++) slots.push({ kind: "blank" });
    } else {
      slots.push({ kind: "lane", cards: [...entry] });
    }
  }
  return { slots, unplaced: [] };
}

describe("boardToRanking", () => {
  it("serializes the first-budget listing to the exact ranking JSON", () => {
    const board = laneBoard([2, ["x8"], 3, ["x7"], 2, ["x5"], 5, ["x6"]]);
    expect(boardToRanking(board)).toEqual({
      classes: [["x8"], ["x7"], ["x5"], ["x6"]],
      blanks: [3, 2, 5],
      zero_gap: 2,
    });
  });

  it("keeps side-by-side cards in one class", () => {
    const board = laneBoard([["a", "b"], 1, ["c"]]);
    expect(boardToRanking(board).classes).toEqual([["a", "b"], ["c"]]);
  });

  it("treats an empty gap as a blank count of zero", () => {
    const board = laneBoard([["a"], ["b"]]);
    expect(boardToRanking(board)).toEqual({
      classes: [["a"], ["b"]],
      blanks: [0],
      zero_gap: 0,
    });
  });

  it("blocks submission while cards are unplaced, naming them", () => {
    const board: CardBoardState = {
      slots: [{ kind: "lane", cards: ["a"] }],
      unplaced: ["c", "b"],
    };
    try {
      boardToRanking(board);
      expect.unreachable();
    } catch (err) {
      expect(err).toBeInstanceOf(BoardError);
      expect((err as BoardError).unplaced.sort()).toEqual(["b", "c"]);
      expect((err as BoardError).message).toContain("b, c");
    }
  });

  it("rejects blank cards past the best class", () => {
    const board = laneBoard([["a"], 2]);
    expect(() => boardToRanking(board)).toThrow(/past the best class/);
  });

  it("rejects an all-blank board", () => {
    expect(() => boardToRanking(laneBoard([3]))).toThrow(/no plan cards/);
  });
});

describe("board operations", () => {
  it("placing, lane-joining and unplacing keep the card inventory intact", () => {
    let board = emptyBoard(["a", "b", "c"]);
    board = placeAsNewLane(board, "a", 0);
    board = placeAsNewLane(board, "b", 1);
    board = placeInLane(board, "c", 1);
    expect(placedCards(board).sort()).toEqual(["a", "b", "c"]);
    expect(board.unplaced).toEqual([]);
    board = unplace(board, "b");
    expect(board.unplaced).toEqual(["b"]);
    expect(placedCards(board).sort()).toEqual(["a", "c"]);
  });

  it("moving a card out of a lane drops the emptied lane", () => {
    let board = emptyBoard(["a", "b"]);
    board = placeAsNewLane(board, "a", 0);
    board = placeAsNewLane(board, "b", 1);
    board = placeInLane(board, "b", 0); // join a's lane; b's old lane disappears
    expect(board.slots).toHaveLength(1);
    expect(boardToRanking(board).classes).toEqual([["a", "b"]]);
  });

  it("blank insertion and removal are inverses", () => {
    let board = laneBoard([["a"], ["b"]]);
    board = insertBlank(board, 1);
    expect(boardToRanking(board).blanks).toEqual([1]);
    board = removeBlank(board, 1);
    expect(boardToRanking(board).blanks).toEqual([0]);
    expect(() => removeBlank(board, 0)).toThrow(BoardError);
  });

  it("operations never mutate their input", () => {
    const board = laneBoard([["a"], 1, ["b"]]);
    const snapshot = JSON.stringify(board);
    placeInLane(board, "b", 0);
    insertBlank(board, 0);
    unplace(board, "a");
    expect(JSON.stringify(board)).toBe(snapshot);
  });
});

describe("round trips", () => {
  function randomBoard(seed: number): CardBoardState {
    let s = seed;
    const rand = () => {
      s = (s * 1103515245 + 12345) % 2147483648;
      return s / 2147483648;
    };
    const spec: (string[] | number)[] = [];
    const n = 1 + Math.floor(rand() * 5);
    let card = 0;
    spec.push(Math.floor(rand() * 4)); // zero gap
    for (let i = 0; i < n; i++) {
      const size = 1 + Math.floor(rand() * 3);
      spec.push(Array.from({ length: size }, () => `p${card++}`));
      if (i < n - 1) spec.push(Math.floor(rand() * 4));
    }
    return laneBoard(spec);
  }

  it("board -> ranking -> board -> ranking is the identity on 200 random boards", () => {
    for (let seed = 1; seed <= 200; seed++) {
      const board = randomBoard(seed);
      const ranking = boardToRanking(board);
      const rebuilt = boardFromRanking(ranking);
      expect(boardToRanking(rebuilt)).toEqual(ranking);
    }
  });
});

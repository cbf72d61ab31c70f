/**
 * DOM wiring for the live elicitation loop. Blank cards and plan cards are
 * both draggable; drops target lanes (join the class) or the gaps between
 * slots (new lane / blank reposition). Server communication is sequential:
 * one in-flight call per session, and displayed scores are always the
 * server's.
 */

import {
  BoardError,
  boardToRanking,
  emptyBoard,
  insertBlank,
  placeAsNewLane,
  placeInLane,
  removeBlank,
  type CardBoardState,
} from "./board.js";
import { PlannerClient, type IterationView, type SessionView } from "./client.js";
import {
  renderBoard,
  renderConvergedBanner,
  renderFitSummary,
  renderTimeline,
  renderUnplacedWarning,
} from "./render.js";
import { buildTimeline } from "./timeline.js";

interface AppState {
  client: PlannerClient;
  sessionId: string;
  view: SessionView | null;
  board: CardBoardState;
  scores: Record<string, number> | null;
  rankingName: string;
  busy: boolean;
}

export function currentIteration(view: SessionView): IterationView | null {
  return view.iterations.length ? view.iterations[view.iterations.length - 1] : null;
}

export async function start(root: HTMLElement, baseUrl: string, sessionId: string) {
  const state: AppState = {
    client: new PlannerClient(baseUrl),
    sessionId,
    view: null,
    board: emptyBoard([]),
    scores: null,
    rankingName: "R1",
    busy: false,
  };
  await refresh(root, state);
}

async function refresh(root: HTMLElement, state: AppState) {
  state.view = await state.client.getSession(state.sessionId);
  const iteration = currentIteration(state.view);
  if (iteration) {
    const ids = (iteration.curated ?? iteration.plans.map((p) => p.id)).slice();
    const placed = new Set(
      state.board.slots.flatMap((s) => (s.kind === "lane" ? s.cards : [])),
    );
    if (!ids.every((i) => placed.has(i) || state.board.unplaced.includes(i))) {
      state.board = emptyBoard(ids);
      state.scores = null;
    }
  }
  draw(root, state);
}

function draw(root: HTMLElement, state: AppState) {
  const view = state.view;
  if (!view) return;
  const iteration = currentIteration(view);
  const parts: string[] = [];
  if (view.status === "converged" && view.accepted) {
    parts.push(renderConvergedBanner(view.accepted));
  }
  parts.push(`<div class="status">session ${view.session_id}: ${view.status}</div>`);
  if (iteration) {
    parts.push(renderBoard(state.board, state.scores));
    parts.push('<button id="submit-ranking">submit ranking</button>');
    parts.push('<div id="blocker"></div>');
    parts.push(renderFitSummary(iteration.fits));
    for (const plan of iteration.plans) {
      parts.push(
        renderTimeline(
          buildTimeline(plan, facilitiesOf(view, iteration), view.periods, view.criteria),
          plan.id,
        ),
      );
      parts.push(`<button class="accept" data-plan="${plan.id}">accept ${plan.id}</button>`);
    }
  }
  root.innerHTML = parts.join("\n");
  wire(root, state);
}

function facilitiesOf(view: SessionView, iteration: IterationView): string[] {
  const seen = new Set<string>();
  const out: string[] = [];
  for (const plan of iteration.plans) {
    for (const a of plan.assignments) {
      if (!seen.has(a.facility)) {
        seen.add(a.facility);
        out.push(a.facility);
      }
    }
  }
  return out;
}

function wire(root: HTMLElement, state: AppState) {
  let dragging: { card?: string; blankSlot?: number } = {};
  root.querySelectorAll<HTMLElement>("[data-card]").forEach((el) => {
    el.addEventListener("dragstart", () => {
      dragging = { card: el.dataset.card };
    });
  });
  root.querySelectorAll<HTMLElement>(".blank-card").forEach((el) => {
    el.addEventListener("dragstart", () => {
      dragging = { blankSlot: Number(el.dataset.slot) };
    });
  });
  root.querySelectorAll<HTMLElement>("[data-drop]").forEach((el) => {
    el.addEventListener("dragover", (e) => e.preventDefault());
    el.addEventListener("drop", () => {
      const at = Number(el.dataset.drop);
      if (dragging.card) {
        state.board = placeAsNewLane(state.board, dragging.card, at);
      } else if (dragging.blankSlot !== undefined) {
        state.board = insertBlank(removeBlank(state.board, dragging.blankSlot), at);
      }
      state.scores = null; // stale until the server rescores
      draw(root, state);
    });
  });
  root.querySelectorAll<HTMLElement>(".lane").forEach((el) => {
    el.addEventListener("dragover", (e) => e.preventDefault());
    el.addEventListener("drop", (e) => {
      e.stopPropagation();
      if (dragging.card) {
        state.board = placeInLane(state.board, dragging.card, Number(el.dataset.slot));
        state.scores = null;
        draw(root, state);
      }
    });
  });
  const submit = root.querySelector<HTMLButtonElement>("#submit-ranking");
  submit?.addEventListener("click", async () => {
    if (state.busy || !state.view) return;
    const iteration = currentIteration(state.view);
    if (!iteration) return;
    try {
      const ranking = boardToRanking(state.board);
      state.busy = true;
      const scores = await state.client.submitRanking(state.sessionId, iteration.index, {
        [state.rankingName]: ranking,
      });
      state.scores = scores[state.rankingName];
      await refresh(root, state);
    } catch (err) {
      if (err instanceof BoardError) {
        const blocker = root.querySelector("#blocker");
        if (blocker) blocker.innerHTML = renderUnplacedWarning(err.unplaced);
      } else {
        throw err;
      }
    } finally {
      state.busy = false;
    }
  });
  root.querySelectorAll<HTMLButtonElement>(".accept").forEach((el) => {
    el.addEventListener("click", async () => {
      if (state.busy) return;
      state.busy = true;
      try {
        await state.client.accept(state.sessionId, el.dataset.plan as string);
        await refresh(root, state);
      } finally {
        state.busy = false;
      }
    });
  });
}

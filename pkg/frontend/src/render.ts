/**
 * HTML-string renderers. Pure functions of state plus server data; score
 * badges always show server-computed values, never locally derived ones.
 */

import type { CardBoardState } from "./board.js";
import { periodClass, type PlanTimeline } from "./timeline.js";

function esc(text: string): string {
  return text.replace(/[&<>"]/g, (c) => ({ "&": "&amp;", "<": "&lt;", ">": "&gt;", '"': "&quot;" }[c] as string));
}

export function renderBoard(
  state: CardBoardState,
  scores: Record<string, number> | null = null,
): string {
  const rows: string[] = ['<div class="board">'];
  rows.push('<div class="zero-anchor" data-drop="0">zero level</div>');
  state.slots.forEach((slot, i) => {
    if (slot.kind === "blank") {
      rows.push(`<div class="blank-card" draggable="true" data-slot="${i}">blank</div>`);
    } else {
      const cards = slot.cards
        .map((c) => {
          const badge =
            scores && scores[c] !== undefined
              ? `<span class="score-badge">${scores[c]}</span>`
              : "";
          return `<span class="plan-card" draggable="true" data-card="${esc(c)}">${esc(c)}${badge}</span>`;
        })
        .join("");
      rows.push(`<div class="lane" data-slot="${i}">${cards}</div>`);
    }
    rows.push(`<div class="gap" data-drop="${i + 1}"></div>`);
  });
  rows.push("</div>");
  const tray = state.unplaced
    .map((c) => `<span class="plan-card unplaced" draggable="true" data-card="${esc(c)}">${esc(c)}</span>`)
    .join("");
  rows.push(`<div class="tray">${tray || "all cards placed"}</div>`);
  return rows.join("\n");
}

export function renderUnplacedWarning(unplaced: string[]): string {
  if (unplaced.length === 0) return "";
  const items = unplaced.map((c) => `<li>${esc(c)}</li>`).join("");
  return `<div class="blocker">place every card before submitting:<ul>${items}</ul></div>`;
}

export function renderTimeline(view: PlanTimeline, planId: string): string {
  const head = ['<tr><th></th>']
    .concat(Array.from({ length: view.periods }, (_v, t) => `<th>t${t}</th>`))
    .join("") + "</tr>";
  const body = view.facilities
    .map((facility, f) => {
      const cells = view.grid[f]
        .map((cell) =>
          cell
            ? `<td class="${periodClass(cell.period)}">${esc(cell.location)}</td>`
            : "<td></td>",
        )
        .join("");
      return `<tr><th>${esc(facility)}</th>${cells}</tr>`;
    })
    .join("");
  const bars = view.criteria
    .map((name, j) => {
      const total = view.contributions[j];
      return `<div class="bar" data-criterion="${esc(name)}">${esc(name)}: ${total.toFixed(2)}</div>`;
    })
    .join("");
  const budget = view.budgetTrack
    .map((v, t) => `<span class="budget-cell" data-period="${t}">${v}</span>`)
    .join("");
  return (
    `<div class="timeline" data-plan="${esc(planId)}">` +
    `<table>${head}${body}</table>` +
    `<div class="bars">${bars}</div>` +
    `<div class="budget-track">${budget}</div>` +
    `</div>`
  );
}

export function renderScoreBadges(scores: Record<string, number>): string {
  return Object.entries(scores)
    .map(([plan, value]) => `<span class="score" data-plan="${esc(plan)}">${value}</span>`)
    .join("");
}

export function renderConvergedBanner(accepted: string): string {
  return `<div class="banner converged">session converged; accepted plan ${esc(accepted)}</div>`;
}

export function renderFitSummary(
  fits: Record<string, { total_error: number }>,
): string {
  return Object.entries(fits)
    .map(([name, fit]) => `<div class="fit">${esc(name)}: total error ${fit.total_error.toFixed(6)}</div>`)
    .join("");
}

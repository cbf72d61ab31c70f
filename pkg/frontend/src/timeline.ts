/**
 * Plan timeline view models: facility rows by period columns, one activation
 * cell per placed facility, plus the per-criterion bars and the budget track.
 *
 * Rendering is computation-free: every number shown comes straight from the
 * server's plan view (contributions, breakdown, budget_track); this module
 * only rearranges them.
 */

export interface AssignmentView {
  facility: string;
  location: string;
  period: number;
}

export interface PlanView {
  id: string;
  assignments: AssignmentView[];
  provenance: string[];
  objective_values: Record<string, number>;
  contributions: number[];
  syn: number;
  breakdown: number[][]; // [period][criterion]
  budget_track: number[]; // cumulative cents per period
}

export interface TimelineCell {
  location: string;
  period: number;
}

export interface PlanTimeline {
  facilities: string[];
  periods: number;
  /** grid[facilityIndex][period] is the location label or null. */
  grid: (TimelineCell | null)[][];
  criteria: string[];
  contributions: number[];
  breakdown: number[][];
  budgetTrack: number[];
}

/** One CSS class per activation period, mirroring the colour-coded floor plans. */
export function periodClass(period: number): string {
  return `period-${period}`;
}

export function buildTimeline(
  plan: PlanView,
  facilities: string[],
  periods: number,
  criteria: string[],
): PlanTimeline {
  const grid: (TimelineCell | null)[][] = facilities.map(() =>
    Array.from({ length: periods }, () => null),
  );
  for (const a of plan.assignments) {
    const row = facilities.indexOf(a.facility);
    if (row < 0 || a.period < 0 || a.period >= periods) {
      throw new Error(`assignment ${a.facility}@${a.location} t${a.period} is off the grid`);
    }
    grid[row][a.period] = { location: a.location, period: a.period };
  }
  return {
    facilities,
    periods,
    grid,
    criteria,
    contributions: plan.contributions,
    breakdown: plan.breakdown,
    budgetTrack: plan.budget_track,
  };
}

/** The assignment triples encoded in a grid; inverse of buildTimeline. */
export function gridAssignments(view: PlanTimeline): AssignmentView[] {
  const out: AssignmentView[] = [];
  view.grid.forEach((row, f) => {
    row.forEach((cell, t) => {
      if (cell) out.push({ facility: view.facilities[f], location: cell.location, period: t });
    });
  });
  return out;
}

/** Per-period weighted series shown under the grid: straight from the server. */
export function breakdownSeries(view: PlanTimeline, criterion: number): number[] {
  return view.breakdown.map((row) => row[criterion]);
}

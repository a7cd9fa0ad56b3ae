/**
 * Pure view models built from service responses.
 *
 * The explorer does no coverage math: every displayed number is a
 * response field rendered with String(), so the digits on screen are
 * the digits the service sent. The only derived bits are labels,
 * badges read off boolean/sign fields, and bar widths for layout.
 */

import type {
  CoveragePayload,
  DeltaPayload,
  GoalPayload,
  HistPayload,
  RateRow,
  SetInfo,
} from "./types.js";

/** Missing value placeholder (null share: group absent from the scope). */
export const NO_VALUE = "n/a";

export function formatNumber(value: number | null): string {
  return value === null ? NO_VALUE : String(value);
}

export function formatShare(value: number | null): string {
  return value === null ? NO_VALUE : `${value}%`;
}

/** Signed rendering for deltas: +11.49%, -0.5%, 0%. */
export function formatDelta(value: number | null): string {
  if (value === null) return NO_VALUE;
  return value > 0 ? `+${value}%` : `${value}%`;
}

export function thresholdLabel(miles: number): string {
  return `<${miles} mi`;
}

export type RowView = { group: string; cells: string[]; weightedTotal: string };
export type StateBlock = { state: string; rows: RowView[] };

export type CoverageView = {
  scenario: string;
  columns: string[];
  national: RowView[];
  states: StateBlock[];
};

/**
 * Coverage table split for display: national rows up front, one
 * drill-down block per state. Response order is kept as-is.
 */
export function coverageView(payload: CoveragePayload): CoverageView {
  const columns = ["group", ...payload.thresholds.map(thresholdLabel), "weighted total"];
  const national: RowView[] = [];
  const byState = new Map<string, RowView[]>();
  for (const row of payload.rows) {
    const view: RowView = {
      group: row.group,
      cells: row.shares.map(formatShare),
      weightedTotal: String(row.weighted_total),
    };
    if (row.scope === "US") {
      national.push(view);
    } else {
      const rows = byState.get(row.scope);
      if (rows) rows.push(view);
      else byState.set(row.scope, [view]);
    }
  }
  const states = [...byState.entries()].map(([state, rows]) => ({ state, rows }));
  return { scenario: payload.scenario, columns, national, states };
}

export type GoalView = {
  label: string;
  shareText: string;
  targetText: string;
  met: boolean;
  badge: "met" | "not met";
};

/** Goal line; the badge mirrors the response's met flag and nothing else. */
export function goalView(goal: GoalPayload): GoalView {
  return {
    label: `${goal.group} within ${goal.threshold} mi`,
    shareText: formatShare(goal.share),
    targetText: `${goal.target}%`,
    met: goal.met,
    badge: goal.met ? "met" : "not met",
  };
}

export type DeltaRowView = {
  group: string;
  threshold: string;
  base: string;
  augmented: string;
  delta: string;
};

export type DeltaView = {
  heading: string;
  columns: string[];
  rows: DeltaRowView[];
  regressions: number;
  badge: "no regressions" | "has regressions";
};

/**
 * Long-format delta rows, one per (group, threshold). The badge counts
 * negative delta fields in the response; for an augmentation that only
 * adds facilities the service guarantees none.
 */
export function deltaView(payload: DeltaPayload): DeltaView {
  const rows: DeltaRowView[] = [];
  let regressions = 0;
  for (const row of payload.rows) {
    payload.thresholds.forEach((threshold, k) => {
      const delta = row.deltas[k] ?? null;
      if (delta !== null && delta < 0) regressions += 1;
      rows.push({
        group: row.group,
        threshold: thresholdLabel(threshold),
        base: formatShare(row.base_shares[k] ?? null),
        augmented: formatShare(row.augmented_shares[k] ?? null),
        delta: formatDelta(delta),
      });
    });
  }
  return {
    heading: `${payload.base} vs ${payload.augmented}`,
    columns: ["group", "threshold", "base", "augmented", "delta"],
    rows,
    regressions,
    badge: regressions === 0 ? "no regressions" : "has regressions",
  };
}

export type HistBarView = {
  label: string;
  count: string;
  shareText: string;
  /** Bar length for layout; shares are already percentages of the matched base. */
  widthPercent: number;
};

export type HistView =
  | { empty: true; message: string }
  | { empty: false; bars: HistBarView[]; baseNote: string; unmatchedNote: string };

export function histogramView(payload: HistPayload): HistView {
  if (payload.matched_total === 0) {
    return { empty: true, message: "no facilities matched to an SVI-ranked tract" };
  }
  const bars = payload.bins.map((bin) => ({
    label: `decile ${bin.bin}`,
    count: String(bin.count),
    shareText: formatShare(bin.share),
    widthPercent: bin.share ?? 0,
  }));
  return {
    empty: false,
    bars,
    baseNote: `bars total 100% of ${payload.matched_total} matched facilities`,
    unmatchedNote: `${payload.unmatched} unmatched excluded`,
  };
}

export type RateRowView = { state: string; count: string; per100k: string };

export function ratesView(rows: RateRow[]): RateRowView[] {
  return rows.map((r) => ({
    state: r.state,
    count: String(r.count),
    per100k: formatNumber(r.per_100k),
  }));
}

/** Checkbox labels for the set picker; the list comes from GET /sets only. */
export function setOptions(sets: SetInfo[]): { name: string; label: string }[] {
  return sets.map((s) => ({ name: s.name, label: `${s.name} (${s.count})` }));
}

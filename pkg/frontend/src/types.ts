/**
 * Shapes of the coverage service's JSON requests and responses.
 *
 * Field names and nesting mirror the wire format exactly. Numbers
 * arrive already rounded by the server; a null share means the group
 * has no population in that scope.
 */

export type SetInfo = { name: string; count: number };

export type Meta = {
  regions: string[];
  states: string[];
  groups: string[];
  default_thresholds: number[];
  store_digest: string;
};

export type ScenarioEcho = {
  name: string;
  sets: string[];
  region: string | string[];
  cross_state: Record<string, string[]>;
  thresholds: number[];
};

export type CoverageRow = {
  group: string;
  scope: string;
  shares: (number | null)[];
  weighted_total: number;
};

export type CoveragePayload = {
  scenario: string;
  thresholds: number[];
  rows: CoverageRow[];
};

export type GoalPayload = {
  group: string;
  threshold: number;
  target: number;
  share: number | null;
  met: boolean;
};

export type RateRow = { state: string; count: number; per_100k: number | null };

export type AnalyzeResponse = {
  scenario: ScenarioEcho;
  cache_key: string;
  coverage: CoveragePayload;
  goal: GoalPayload;
  rates: { rows: RateRow[] };
};

export type DeltaRow = {
  group: string;
  base_shares: (number | null)[];
  augmented_shares: (number | null)[];
  deltas: (number | null)[];
};

export type DeltaPayload = {
  base: string;
  augmented: string;
  thresholds: number[];
  rows: DeltaRow[];
};

export type CompareResponse = {
  base: ScenarioEcho;
  augmented: ScenarioEcho;
  cache_key: string;
  delta: DeltaPayload;
};

export type HistBin = { bin: number; count: number; share: number | null };

export type HistPayload = {
  bins: HistBin[];
  matched_total: number;
  unmatched: number;
};

export type HistResponse = {
  sets: string[];
  cache_key: string;
  histogram: HistPayload;
};

export type AnalyzeRequest = {
  sets: string[];
  region?: string | string[];
  thresholds?: number[];
  groups?: string[];
  cross_state?: Record<string, string[]>;
};

export type CompareRequest = {
  base: string[];
  augmented: string[];
  region?: string | string[];
  thresholds?: number[];
  groups?: string[];
  cross_state?: Record<string, string[]>;
};

/** One entry of a 400 response's detail list. */
export type FieldError = { field: string; message: string };

/**
 * Scenario panel state machine.
 *
 * Each committed scenario fires the service calls for the three panels
 * (coverage analysis, delta against the previous commit, SVI
 * histogram). Commits are numbered; a reply only lands if it belongs
 * to the newest commit for its panel, so a slow response from an
 * abandoned scenario can never overwrite a fresher one. Errors follow
 * the same rule: they surface only while their commit is current.
 */

import type { Client } from "./api.js";
import type { AnalyzeResponse, CompareResponse, HistResponse } from "./types.js";

export type ScenarioDraft = {
  sets: string[];
  region: string | string[];
  thresholds: number[];
  groups: string[] | null;
  crossState: Record<string, string[]>;
};

export type PanelState<T> =
  | { phase: "idle" }
  | { phase: "loading" }
  | { phase: "ready"; data: T }
  | { phase: "error"; message: string };

type PanelData = {
  analysis: AnalyzeResponse;
  delta: CompareResponse;
  histogram: HistResponse;
};

export type ExplorerState = { [K in keyof PanelData]: PanelState<PanelData[K]> };

type ServiceCalls = Pick<Client, "analyze" | "compare" | "sviHist">;

function messageOf(err: unknown): string {
  if (err instanceof Error && err.message) return err.message;
  return String(err);
}

export class ExplorerController {
  private readonly tickets: Record<keyof PanelData, number> = {
    analysis: 0,
    delta: 0,
    histogram: 0,
  };
  private state: ExplorerState = {
    analysis: { phase: "idle" },
    delta: { phase: "idle" },
    histogram: { phase: "idle" },
  };
  private lastCommitted: ScenarioDraft | null = null;

  constructor(
    private readonly service: ServiceCalls,
    private readonly onChange: (state: ExplorerState) => void,
  ) {}

  snapshot(): ExplorerState {
    return this.state;
  }

  /**
   * Commit the panel's scenario and refresh every view from the
   * service. The returned promise settles when all replies for this
   * commit have been applied or discarded.
   */
  commitScenario(draft: ScenarioDraft): Promise<void> {
    const previous = this.lastCommitted;
    this.lastCommitted = draft;
    const pending: Promise<void>[] = [
      this.track(
        "analysis",
        this.service.analyze({
          sets: draft.sets,
          region: draft.region,
          thresholds: draft.thresholds,
          groups: draft.groups ?? undefined,
          cross_state: draft.crossState,
        }),
      ),
      this.track("histogram", this.service.sviHist(draft.sets)),
    ];
    // delta panel compares the previous commit to this one, answering
    // "what did the change buy"; the first commit has nothing to compare
    if (previous && !sameSets(previous.sets, draft.sets)) {
      pending.push(
        this.track(
          "delta",
          this.service.compare({
            base: previous.sets,
            augmented: draft.sets,
            region: draft.region,
            thresholds: draft.thresholds,
            groups: draft.groups ?? undefined,
            cross_state: draft.crossState,
          }),
        ),
      );
    }
    return Promise.all(pending).then(() => undefined);
  }

  private track<K extends keyof PanelData>(panel: K, reply: Promise<PanelData[K]>): Promise<void> {
    const ticket = ++this.tickets[panel];
    this.patch(panel, { phase: "loading" });
    return reply.then(
      (data) => {
        if (ticket === this.tickets[panel]) this.patch(panel, { phase: "ready", data });
      },
      (err) => {
        if (ticket === this.tickets[panel]) this.patch(panel, { phase: "error", message: messageOf(err) });
      },
    );
  }

  private patch<K extends keyof PanelData>(panel: K, value: PanelState<PanelData[K]>): void {
    this.state = { ...this.state, [panel]: value };
    this.onChange(this.state);
  }
}

function sameSets(a: string[], b: string[]): boolean {
  if (a.length !== b.length) return false;
  const sorted = [...b].sort();
  return [...a].sort().every((name, k) => name === sorted[k]);
}

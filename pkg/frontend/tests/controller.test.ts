/**
 * Commit sequencing tests: the newest committed scenario always wins,
 * and replies to abandoned commits are dropped whether they succeed or
 * fail, even when they arrive out of order.
 */

import { describe, expect, it } from "vitest";

import { ApiError } from "../src/api.js";
import {
  ExplorerController,
  type ExplorerState,
  type ScenarioDraft,
} from "../src/controller.js";
import type {
  AnalyzeRequest,
  AnalyzeResponse,
  CompareRequest,
  CompareResponse,
  HistResponse,
} from "../src/types.js";
import { deferred, fixture, settle } from "./helpers.js";

const pharm = fixture<AnalyzeResponse>("analyze_pharm.json");
const pharmDg = fixture<AnalyzeResponse>("analyze_pharm_dg.json");
const comparison = fixture<CompareResponse>("compare_pharm_vs_pharm_dg.json");
const histDg = fixture<HistResponse>("hist_dg.json");

type Reply<T> = ReturnType<typeof deferred<T>>;

class FakeService {
  analyzeCalls: AnalyzeRequest[] = [];
  compareCalls: CompareRequest[] = [];
  histCalls: string[][] = [];
  analyzeReplies: Reply<AnalyzeResponse>[] = [];
  compareReplies: Reply<CompareResponse>[] = [];
  histReplies: Reply<HistResponse>[] = [];

  analyze = (req: AnalyzeRequest): Promise<AnalyzeResponse> => {
    this.analyzeCalls.push(req);
    const reply = deferred<AnalyzeResponse>();
    this.analyzeReplies.push(reply);
    return reply.promise;
  };

  compare = (req: CompareRequest): Promise<CompareResponse> => {
    this.compareCalls.push(req);
    const reply = deferred<CompareResponse>();
    this.compareReplies.push(reply);
    return reply.promise;
  };

  sviHist = (sets: string[]): Promise<HistResponse> => {
    this.histCalls.push(sets);
    const reply = deferred<HistResponse>();
    this.histReplies.push(reply);
    return reply.promise;
  };
}

function draft(sets: string[]): ScenarioDraft {
  return { sets, region: "all", thresholds: [1, 2, 5], groups: null, crossState: {} };
}

function harness(): { service: FakeService; controller: ExplorerController; states: ExplorerState[] } {
  const service = new FakeService();
  const states: ExplorerState[] = [];
  const controller = new ExplorerController(service, (s) => states.push(s));
  return { service, controller, states };
}

describe("stale replies", () => {
  it("drops an out-of-order success from an abandoned commit", async () => {
    const { service, controller, states } = harness();
    void controller.commitScenario(draft(["pharm"]));
    void controller.commitScenario(draft(["pharm", "dg"]));
    expect(service.analyzeCalls).toHaveLength(2);

    // the newer request answers first
    service.analyzeReplies[1]!.resolve(pharmDg);
    await settle();
    const current = controller.snapshot().analysis;
    expect(current).toEqual({ phase: "ready", data: pharmDg });

    // the older answer limps in afterwards and must change nothing
    const emitted = states.length;
    service.analyzeReplies[0]!.resolve(pharm);
    await settle();
    expect(controller.snapshot().analysis).toEqual({ phase: "ready", data: pharmDg });
    expect(states.length).toBe(emitted);
  });

  it("drops a stale failure the same way", async () => {
    const { service, controller } = harness();
    void controller.commitScenario(draft(["pharm"]));
    void controller.commitScenario(draft(["pharm", "dg"]));

    service.analyzeReplies[1]!.resolve(pharmDg);
    await settle();
    service.analyzeReplies[0]!.reject(new ApiError(503, "store is still loading"));
    await settle();
    expect(controller.snapshot().analysis).toEqual({ phase: "ready", data: pharmDg });
  });

  it("keeps the error of the newest commit over an older success", async () => {
    const { service, controller } = harness();
    void controller.commitScenario(draft(["pharm"]));
    void controller.commitScenario(draft(["ghost"]));

    service.analyzeReplies[1]!.reject(
      new ApiError(404, "unknown facility set 'ghost'; available: ['dg', 'pharm']"),
    );
    await settle();
    service.analyzeReplies[0]!.resolve(pharm);
    await settle();
    expect(controller.snapshot().analysis).toEqual({
      phase: "error",
      message: "unknown facility set 'ghost'; available: ['dg', 'pharm']",
    });
  });
});

describe("panel fan-out", () => {
  it("marks panels loading as soon as a scenario commits", () => {
    const { controller } = harness();
    void controller.commitScenario(draft(["pharm"]));
    expect(controller.snapshot().analysis.phase).toBe("loading");
    expect(controller.snapshot().histogram.phase).toBe("loading");
    expect(controller.snapshot().delta.phase).toBe("idle");
  });

  it("compares each commit against the previous one", async () => {
    const { service, controller } = harness();
    void controller.commitScenario(draft(["pharm"]));
    expect(service.compareCalls).toHaveLength(0);

    void controller.commitScenario(draft(["pharm", "dg"]));
    expect(service.compareCalls).toEqual([
      {
        base: ["pharm"],
        augmented: ["pharm", "dg"],
        region: "all",
        thresholds: [1, 2, 5],
        groups: undefined,
        cross_state: {},
      },
    ]);

    service.compareReplies[0]!.resolve(comparison);
    await settle();
    expect(controller.snapshot().delta).toEqual({ phase: "ready", data: comparison });
  });

  it("skips the comparison when the committed sets are unchanged", () => {
    const { service, controller } = harness();
    void controller.commitScenario(draft(["dg", "pharm"]));
    void controller.commitScenario(draft(["pharm", "dg"]));
    expect(service.compareCalls).toHaveLength(0);
    expect(service.analyzeCalls).toHaveLength(2);
  });

  it("delivers the histogram for the committed sets", async () => {
    const { service, controller } = harness();
    void controller.commitScenario(draft(["dg"]));
    expect(service.histCalls).toEqual([["dg"]]);
    service.histReplies[0]!.resolve(histDg);
    await settle();
    expect(controller.snapshot().histogram).toEqual({ phase: "ready", data: histDg });
  });

  it("passes the scenario fields through to analyze", () => {
    const { service, controller } = harness();
    void controller.commitScenario({
      sets: ["pharm"],
      region: "conus",
      thresholds: [1, 10],
      groups: ["all_adults"],
      crossState: { ND: ["MN"] },
    });
    expect(service.analyzeCalls[0]).toEqual({
      sets: ["pharm"],
      region: "conus",
      thresholds: [1, 10],
      groups: ["all_adults"],
      cross_state: { ND: ["MN"] },
    });
  });
});

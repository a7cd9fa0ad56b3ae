/**
 * Browser entry point: wires the controls to the controller and
 * renders view models into the page. All content nodes are built with
 * createElement, so server-sent strings land as text, never as markup.
 */

import { Client } from "./api.js";
import { ExplorerController, type ExplorerState, type ScenarioDraft } from "./controller.js";
import {
  coverageView,
  deltaView,
  goalView,
  histogramView,
  ratesView,
  setOptions,
  type CoverageView,
  type RowView,
} from "./views.js";
import type { Meta, SetInfo } from "./types.js";

const client = new Client();
const controller = new ExplorerController(client, render);

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className = "",
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

function byId<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function replaceChildren(parent: HTMLElement, ...nodes: (Node | string)[]): void {
  parent.replaceChildren(...nodes);
}

function selectedSets(): string[] {
  const boxes = document.querySelectorAll<HTMLInputElement>("#sets input[type=checkbox]");
  return [...boxes].filter((b) => b.checked).map((b) => b.value);
}

function parseThresholds(raw: string, fallback: number[]): number[] {
  const values = raw
    .split(",")
    .map((part) => Number(part.trim()))
    .filter((v) => Number.isFinite(v) && v > 0);
  return values.length ? values : fallback;
}

let meta: Meta | null = null;

function readDraft(): ScenarioDraft {
  const defaults = meta?.default_thresholds ?? [1, 2, 5];
  const groupSelect = byId<HTMLSelectElement>("groups");
  const chosen = [...groupSelect.selectedOptions].map((o) => o.value);
  return {
    sets: selectedSets(),
    region: byId<HTMLSelectElement>("region").value,
    thresholds: parseThresholds(byId<HTMLInputElement>("thresholds").value, defaults),
    groups: chosen.length ? chosen : null,
    crossState: {},
  };
}

function commit(): void {
  const draft = readDraft();
  if (!draft.sets.length) {
    replaceChildren(byId("analysis"), el("p", "hint", "pick at least one facility set"));
    return;
  }
  void controller.commitScenario(draft);
}

function renderControls(sets: SetInfo[], loadedMeta: Meta): void {
  meta = loadedMeta;
  const setBox = byId("sets");
  replaceChildren(setBox);
  for (const option of setOptions(sets)) {
    const label = el("label", "set-option");
    const box = el("input");
    box.type = "checkbox";
    box.value = option.name;
    box.addEventListener("change", commit);
    label.append(box, ` ${option.label}`);
    setBox.append(label);
  }

  const region = byId<HTMLSelectElement>("region");
  replaceChildren(region);
  for (const name of loadedMeta.regions) {
    const opt = el("option", "", name);
    opt.value = name;
    region.append(opt);
  }
  region.addEventListener("change", commit);

  const thresholds = byId<HTMLInputElement>("thresholds");
  thresholds.value = loadedMeta.default_thresholds.join(", ");
  thresholds.addEventListener("change", commit);

  const groups = byId<HTMLSelectElement>("groups");
  replaceChildren(groups);
  for (const name of loadedMeta.groups) {
    const opt = el("option", "", name);
    opt.value = name;
    groups.append(opt);
  }
  groups.addEventListener("change", commit);
}

function rowsTable(columns: string[], rows: RowView[]): HTMLTableElement {
  const table = el("table");
  const head = table.createTHead().insertRow();
  for (const column of columns) head.append(el("th", "", column));
  const body = table.createTBody();
  for (const row of rows) {
    const tr = body.insertRow();
    tr.append(el("td", "group-name", row.group));
    for (const cell of row.cells) tr.append(el("td", "num", cell));
    tr.append(el("td", "num", row.weightedTotal));
  }
  return table;
}

function renderCoverage(view: CoverageView): DocumentFragment {
  const frag = document.createDocumentFragment();
  frag.append(el("h3", "", `scenario ${view.scenario}`));
  frag.append(rowsTable(view.columns, view.national));
  for (const block of view.states) {
    const details = el("details", "state-block");
    details.append(el("summary", "", block.state));
    details.append(rowsTable(view.columns, block.rows));
    frag.append(details);
  }
  return frag;
}

function errorNote(message: string): HTMLElement {
  return el("p", "error", message);
}

function render(state: ExplorerState): void {
  const analysis = byId("analysis");
  if (state.analysis.phase === "loading") {
    replaceChildren(analysis, el("p", "hint", "analyzing..."));
  } else if (state.analysis.phase === "error") {
    replaceChildren(analysis, errorNote(state.analysis.message));
  } else if (state.analysis.phase === "ready") {
    const res = state.analysis.data;
    const goal = goalView(res.goal);
    const badge = el("span", goal.met ? "badge met" : "badge not-met", goal.badge);
    const goalLine = el("p", "goal");
    goalLine.append(`${goal.label}: ${goal.shareText} (target ${goal.targetText}) `, badge);

    const rates = el("table");
    const head = rates.createTHead().insertRow();
    head.append(el("th", "", "state"), el("th", "", "facilities"), el("th", "", "per 100k"));
    const body = rates.createTBody();
    for (const row of ratesView(res.rates.rows)) {
      const tr = body.insertRow();
      tr.append(el("td", "", row.state), el("td", "num", row.count), el("td", "num", row.per100k));
    }

    replaceChildren(analysis, goalLine, renderCoverage(coverageView(res.coverage)), rates);
  }

  const delta = byId("delta");
  if (state.delta.phase === "loading") {
    replaceChildren(delta, el("p", "hint", "comparing..."));
  } else if (state.delta.phase === "error") {
    replaceChildren(delta, errorNote(state.delta.message));
  } else if (state.delta.phase === "ready") {
    const view = deltaView(state.delta.data.delta);
    const badge = el(
      "span",
      view.regressions === 0 ? "badge met" : "badge not-met",
      view.badge,
    );
    const heading = el("h3", "", `${view.heading} `);
    heading.append(badge);
    const table = el("table");
    const head = table.createTHead().insertRow();
    for (const column of view.columns) head.append(el("th", "", column));
    const body = table.createTBody();
    for (const row of view.rows) {
      const tr = body.insertRow();
      tr.append(
        el("td", "group-name", row.group),
        el("td", "", row.threshold),
        el("td", "num", row.base),
        el("td", "num", row.augmented),
        el("td", "num", row.delta),
      );
    }
    replaceChildren(delta, heading, table);
  }

  const hist = byId("histogram");
  if (state.histogram.phase === "loading") {
    replaceChildren(hist, el("p", "hint", "profiling..."));
  } else if (state.histogram.phase === "error") {
    replaceChildren(hist, errorNote(state.histogram.message));
  } else if (state.histogram.phase === "ready") {
    const view = histogramView(state.histogram.data.histogram);
    if (view.empty) {
      replaceChildren(hist, el("p", "hint", view.message));
      return;
    }
    const list = el("div", "bars");
    for (const bar of view.bars) {
      const row = el("div", "bar-row");
      row.append(el("span", "bar-label", bar.label));
      const track = el("div", "bar-track");
      const fill = el("div", "bar-fill");
      fill.style.width = `${bar.widthPercent}%`;
      track.append(fill);
      row.append(track);
      row.append(el("span", "bar-value", `${bar.shareText} (${bar.count})`));
      list.append(row);
    }
    replaceChildren(
      hist,
      list,
      el("p", "hint", view.baseNote),
      el("p", "hint", view.unmatchedNote),
    );
  }
}

async function boot(): Promise<void> {
  try {
    const [sets, loadedMeta] = await Promise.all([client.sets(), client.meta()]);
    renderControls(sets, loadedMeta);
    replaceChildren(byId("analysis"), el("p", "hint", "pick facility sets to analyze"));
  } catch (err) {
    const message = err instanceof Error ? err.message : String(err);
    replaceChildren(byId("analysis"), errorNote(message));
  }
}

void boot();

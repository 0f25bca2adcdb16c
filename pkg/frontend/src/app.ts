/**
 * DOM wiring: slider, rule panel, metric badges and the sweep chart.
 *
 * All model math happens server-side; this file fetches JSON, hands it to
 * the pure view-model helpers in core.ts and writes the results into the
 * page. Fetch races are resolved last-write-wins keyed by threshold.
 */
import {
  buildChart,
  ChartModel,
  ChartPoint,
  debounce,
  EMPTY_SWEEP_MESSAGE,
  MetaDoc,
  metricBadgesView,
  polylinePoints,
  rulePanelView,
  SweepDoc,
  SweepRowDoc,
  ThresholdGate,
  tooltipText,
  WeightedRulesDoc,
} from "./core.js";

const SVG_NS = "http://www.w3.org/2000/svg";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

async function getJson<T>(path: string): Promise<T> {
  const resp = await fetch(path);
  if (!resp.ok) {
    const body = await resp.text();
    throw new Error(`${path} failed (${resp.status}): ${body}`);
  }
  return (await resp.json()) as T;
}

function setText(id: string, text: string): void {
  el(id).textContent = text;
}

function renderRules(doc: WeightedRulesDoc): void {
  const view = rulePanelView(doc);
  setText("rule-count", view.countText);
  const list = el<HTMLTableSectionElement>("rule-rows");
  list.replaceChildren();
  for (const row of view.rows) {
    const tr = document.createElement("tr");
    const weight = document.createElement("td");
    weight.className = "num";
    weight.textContent = row.weightText;
    const text = document.createElement("td");
    text.className = "rule-text" + (row.constant ? " constant" : "");
    text.textContent = row.text;
    const complexity = document.createElement("td");
    complexity.className = "num";
    complexity.textContent = row.complexityText;
    tr.append(weight, text, complexity);
    list.append(tr);
  }
}

function renderBadges(row: SweepRowDoc): void {
  const badges = metricBadgesView(row);
  setText("badge-rc", badges.rc);
  setText("badge-tau", badges.tauB);
  setText("badge-auc", badges.auc);
  setText("badge-mrr", badges.mrr);
  setText("badge-ndcg5", badges.ndcg5);
  setText("badge-ndcg10", badges.ndcg10);
  setText("rule-headline", badges.ruleText);
  const notice = el("notice");
  notice.textContent = badges.notice ?? badges.warning ?? "";
  notice.hidden = badges.notice === null && badges.warning === null;
}

interface ChartHandles {
  svg: SVGSVGElement;
  tooltip: HTMLElement;
  marker: SVGLineElement | null;
  model: ChartModel | null;
}

function line(x1: number, y1: number, x2: number, y2: number, cls: string): SVGLineElement {
  const node = document.createElementNS(SVG_NS, "line");
  node.setAttribute("x1", String(x1));
  node.setAttribute("y1", String(y1));
  node.setAttribute("x2", String(x2));
  node.setAttribute("y2", String(y2));
  node.setAttribute("class", cls);
  return node;
}

function series(
  handles: ChartHandles,
  points: ChartPoint[],
  cls: string,
): void {
  const poly = document.createElementNS(SVG_NS, "polyline");
  poly.setAttribute("points", polylinePoints(points));
  poly.setAttribute("class", `series ${cls}`);
  handles.svg.append(poly);
  for (const point of points) {
    const dot = document.createElementNS(SVG_NS, "circle");
    dot.setAttribute("cx", String(point.x));
    dot.setAttribute("cy", String(point.y));
    dot.setAttribute("r", "3.5");
    dot.setAttribute("class", `dot ${cls}`);
    dot.addEventListener("mouseenter", () => {
      handles.tooltip.textContent = tooltipText(point.row);
      handles.tooltip.hidden = false;
    });
    dot.addEventListener("mouseleave", () => {
      handles.tooltip.hidden = true;
    });
    handles.svg.append(dot);
  }
}

function renderChart(handles: ChartHandles, sweep: SweepDoc): void {
  handles.svg.replaceChildren();
  handles.marker = null;
  const model = buildChart(sweep.rows);
  handles.model = model;
  const empty = el("chart-empty");
  if (!model) {
    empty.textContent = EMPTY_SWEEP_MESSAGE;
    empty.hidden = false;
    return;
  }
  empty.hidden = true;
  handles.svg.setAttribute("viewBox", `0 0 ${model.width} ${model.height}`);
  handles.svg.append(
    line(model.pad, model.height - model.pad, model.width - model.pad,
         model.height - model.pad, "axis"),
    line(model.pad, model.pad, model.pad, model.height - model.pad, "axis"),
  );
  for (const [y, label] of model.rcTicks) {
    const text = document.createElementNS(SVG_NS, "text");
    text.setAttribute("x", String(model.width - model.pad + 6));
    text.setAttribute("y", String(y + 4));
    text.setAttribute("class", "tick rc");
    text.textContent = label;
    handles.svg.append(text);
  }
  series(handles, model.rc, "rc");
  series(handles, model.auc, "auc");
  series(handles, model.ndcg10, "ndcg10");
  handles.marker = line(0, model.pad, 0, model.height - model.pad, "marker");
  handles.svg.append(handles.marker);
}

function moveMarker(handles: ChartHandles, t: number): void {
  if (!handles.marker || !handles.model) return;
  const x = handles.model.x(t);
  handles.marker.setAttribute("x1", String(x));
  handles.marker.setAttribute("x2", String(x));
}

async function init(): Promise<void> {
  const meta = await getJson<MetaDoc>("/api/meta");
  const grid = meta.thresholds;
  setText(
    "model-line",
    `network ${meta.network.layer_sizes.join("-")} (${meta.network.output_kind} output), ` +
      `${meta.n_atoms} atoms, ${meta.n_impressions} validation impressions`,
  );

  const handles: ChartHandles = {
    svg: el("chart") as unknown as SVGSVGElement,
    tooltip: el("tooltip"),
    marker: null,
    model: null,
  };
  getJson<SweepDoc>("/api/sweep")
    .then((sweep) => {
      renderChart(handles, sweep);
      moveMarker(handles, grid[Number(slider.value)] ?? grid[0] ?? 0);
    })
    .catch((err: unknown) => {
      const empty = el("chart-empty");
      empty.textContent = `Sweep unavailable: ${String(err)}`;
      empty.hidden = false;
    });

  const gate = new ThresholdGate();
  const slider = el<HTMLInputElement>("threshold");
  slider.min = "0";
  slider.max = String(Math.max(grid.length - 1, 0));
  slider.step = "1";

  async function showThreshold(t: number): Promise<void> {
    gate.select(t);
    try {
      const [rules, metrics] = await Promise.all([
        getJson<WeightedRulesDoc>(`/api/rules?t=${t}&mode=weighted`),
        getJson<SweepRowDoc>(`/api/metrics?t=${t}`),
      ]);
      if (!gate.shouldApply(t)) return;
      renderRules(rules);
      renderBadges(metrics);
    } catch (err) {
      if (!gate.shouldApply(t)) return;
      setText("rule-count", `failed to load t=${t}: ${String(err)}`);
    }
  }

  const requestPanels = debounce((t: number) => {
    void showThreshold(t);
  }, 150);

  function onSlider(): void {
    const t = grid[Number(slider.value)] ?? grid[0] ?? 0;
    setText("threshold-label", `t = ${t}`);
    moveMarker(handles, t);
    requestPanels(t);
  }
  slider.addEventListener("input", onSlider);

  // start near the middle of the grid
  const startIndex = Math.floor((grid.length - 1) / 2);
  slider.value = String(startIndex);
  const startT = grid[startIndex] ?? 0;
  setText("threshold-label", `t = ${startT}`);
  moveMarker(handles, startT);
  await showThreshold(startT);
}

init().catch((err: unknown) => {
  setText("model-line", `failed to load model metadata: ${String(err)}`);
});

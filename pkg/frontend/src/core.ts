/**
 * Pure view-model logic for the threshold explorer.
 *
 * Every displayed number originates from an API response field; functions in
 * this module only select, format and lay out those fields. The one numeric
 * transform is the log scale of the rule-complexity chart axis, which is
 * presentation geometry, not metric math.
 */

export interface MetricReportDoc {
  auc: number | null;
  mrr: number | null;
  ndcg5: number | null;
  ndcg10: number | null;
  n_impressions: number;
  auc_evaluated: number;
  auc_skipped: number;
  rank_evaluated: number;
  rank_skipped: number;
}

export interface SweepRowDoc {
  threshold: number;
  rc: number;
  tau_b: number | null;
  constant: boolean;
  constant_value: boolean | null;
  stable: MetricReportDoc;
  expected: MetricReportDoc;
  rule_text: string;
}

export interface SweepDoc {
  max_abs_output_weight: number;
  rows: SweepRowDoc[];
}

export interface WeightedRuleEntry {
  weight: number;
  text: string;
  complexity: number;
  constant: boolean;
}

export interface WeightedRulesDoc {
  mode: "weighted";
  threshold: number;
  rules: WeightedRuleEntry[];
}

export interface MetaDoc {
  atoms: string[];
  n_atoms: number;
  network: { layer_sizes: number[]; output_kind: string };
  thresholds: number[];
  max_abs_output_weight: number;
  n_impressions: number;
  n_rows: number;
}

/** Rule complexity above which the panel shows a size warning. */
export const RC_DISPLAY_CAP = 200;

export const EMPTY_SWEEP_MESSAGE = "No sweep rows available for this model.";

/** "n/a" for missing values, fixed decimals otherwise. */
export function formatNumber(value: number | null | undefined, digits = 3): string {
  if (value === null || value === undefined) return "n/a";
  return value.toFixed(digits);
}

/** Tautology/contradiction notice for a constant rule, null otherwise. */
export function constantNotice(constant: boolean, value: boolean | null): string | null {
  if (!constant) return null;
  if (value === true) return "Tautology: this rule is always true.";
  if (value === false) return "Contradiction: this rule is always false.";
  return "Constant rule: every candidate receives the same score.";
}

/** Warning when the rule is too large to be worth reading, null otherwise. */
export function rcWarning(rc: number, cap: number = RC_DISPLAY_CAP): string | null {
  if (rc <= cap) return null;
  return `Rule complexity ${rc} exceeds the display cap of ${cap}; ` +
    "raise the threshold to shrink the rule.";
}

/** Nearest grid threshold to a free value (first match wins ties). */
export function snapThreshold(value: number, grid: readonly number[]): number {
  if (grid.length === 0) throw new Error("empty threshold grid");
  let best = grid[0]!;
  let bestDist = Math.abs(value - best);
  for (const t of grid) {
    const d = Math.abs(value - t);
    if (d < bestDist) {
      best = t;
      bestDist = d;
    }
  }
  return best;
}

/** Trailing-edge debounce; the last call inside the window wins. */
export function debounce<A extends unknown[]>(
  fn: (...args: A) => void,
  waitMs: number,
): (...args: A) => void {
  let timer: ReturnType<typeof setTimeout> | undefined;
  return (...args: A) => {
    if (timer !== undefined) clearTimeout(timer);
    timer = setTimeout(() => {
      timer = undefined;
      fn(...args);
    }, waitMs);
  };
}

/**
 * Last-write-wins gate keyed by threshold: a response is applied only if the
 * panel is still showing the threshold it was fetched for.
 */
export class ThresholdGate {
  private current: string | null = null;

  select(t: number): void {
    this.current = String(t);
  }

  shouldApply(t: number): boolean {
    return this.current !== null && this.current === String(t);
  }
}

export interface RuleRowView {
  weightText: string;
  text: string;
  complexityText: string;
  constant: boolean;
}

export interface RulePanelView {
  countText: string;
  rows: RuleRowView[];
}

/** Weighted rule list, field-for-field from the API (order preserved). */
export function rulePanelView(doc: WeightedRulesDoc): RulePanelView {
  const rows = doc.rules.map((r) => ({
    weightText: formatNumber(r.weight),
    text: r.text,
    complexityText: String(r.complexity),
    constant: r.constant,
  }));
  const n = rows.length;
  return { countText: `${n} clause${n === 1 ? "" : "s"} at t=${doc.threshold}`, rows };
}

export interface MetricBadgesView {
  rc: string;
  tauB: string;
  auc: string;
  mrr: string;
  ndcg5: string;
  ndcg10: string;
  ruleText: string;
  notice: string | null;
  warning: string | null;
}

/** Badge strings for one sweep row (expected-value tie handling, as the CSV). */
export function metricBadgesView(row: SweepRowDoc): MetricBadgesView {
  return {
    rc: String(row.rc),
    tauB: formatNumber(row.tau_b),
    auc: formatNumber(row.expected.auc),
    mrr: formatNumber(row.expected.mrr),
    ndcg5: formatNumber(row.expected.ndcg5),
    ndcg10: formatNumber(row.expected.ndcg10),
    ruleText: row.rule_text,
    notice: constantNotice(row.constant, row.constant_value),
    warning: rcWarning(row.rc),
  };
}

/** The row's values verbatim, in sweep-CSV column order. */
export function tooltipText(row: SweepRowDoc): string {
  const cell = (v: number | null): string => (v === null ? "n/a" : String(v));
  return (
    `t=${row.threshold} auc=${cell(row.expected.auc)} mrr=${cell(row.expected.mrr)} ` +
    `ndcg5=${cell(row.expected.ndcg5)} ndcg10=${cell(row.expected.ndcg10)} ` +
    `rc=${row.rc} tau_b=${cell(row.tau_b)}`
  );
}

export interface ChartPoint {
  x: number;
  y: number;
  row: SweepRowDoc;
}

export interface ChartModel {
  width: number;
  height: number;
  pad: number;
  /** x pixel for an arbitrary threshold (current-t marker). */
  x: (t: number) => number;
  auc: ChartPoint[];
  ndcg10: ChartPoint[];
  rc: ChartPoint[];
  /** log-axis tick labels for the RC side, as [pixelY, label]. */
  rcTicks: Array<[number, string]>;
}

interface ChartView {
  width: number;
  height: number;
  pad: number;
}

/**
 * Chart geometry for the sweep: AUC and nDCG@10 on a [0, 1] axis, RC on a
 * log10 axis. Returns null for an empty sweep (the caller shows the
 * empty-state message). Metric gaps (null values) simply omit points, so
 * every plotted point corresponds to an API row.
 */
export function buildChart(
  rows: readonly SweepRowDoc[],
  view: ChartView = { width: 640, height: 240, pad: 36 },
): ChartModel | null {
  if (rows.length === 0) return null;
  const { width, height, pad } = view;
  const ts = rows.map((r) => r.threshold);
  const tMin = Math.min(...ts);
  const tMax = Math.max(...ts);
  const span = tMax - tMin || 1;
  const x = (t: number): number => pad + ((t - tMin) / span) * (width - 2 * pad);
  const yUnit = (v: number): number => height - pad - v * (height - 2 * pad);

  const rcLog = (rc: number): number => Math.log10(Math.max(rc, 1));
  const rcMax = Math.max(...rows.map((r) => rcLog(r.rc)), 1);
  const yRc = (rc: number): number => height - pad - (rcLog(rc) / rcMax) * (height - 2 * pad);

  const auc: ChartPoint[] = [];
  const ndcg10: ChartPoint[] = [];
  const rc: ChartPoint[] = [];
  for (const row of rows) {
    if (row.expected.auc !== null) auc.push({ x: x(row.threshold), y: yUnit(row.expected.auc), row });
    if (row.expected.ndcg10 !== null) {
      ndcg10.push({ x: x(row.threshold), y: yUnit(row.expected.ndcg10), row });
    }
    rc.push({ x: x(row.threshold), y: yRc(row.rc), row });
  }

  const rcTicks: Array<[number, string]> = [];
  for (let exp = 0; exp <= Math.ceil(rcMax); exp += 1) {
    rcTicks.push([yRc(10 ** exp), exp === 0 ? "1" : `1e${exp}`]);
  }
  return { width, height, pad, x, auc, ndcg10, rc, rcTicks };
}

/** "x,y x,y ..." attribute value for an SVG polyline. */
export function polylinePoints(points: readonly ChartPoint[]): string {
  return points.map((p) => `${p.x.toFixed(1)},${p.y.toFixed(1)}`).join(" ");
}

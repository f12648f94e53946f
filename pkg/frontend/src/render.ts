/**
 * SVG rendering of the three benchmark figures from CLI CSV files.
 *
 * The renderer only plots what the CSV contains (the physics lives in the
 * Python package); echarts runs in SSR mode and the emitted SVG is
 * post-normalized so identical input gives byte-identical output.
 */

import { writeFileSync } from "node:fs";
import * as echarts from "echarts";

import { FigureKind, SchemaError, Table, readTable, validateFigureTable } from "./csv";

export interface FigureStyle {
  width?: number;
  height?: number;
  title?: string;
  /** log-scale the value axis (fig2/fig3 only) */
  ylog?: boolean;
}

export interface FigureJob {
  csvPath: string;
  kind: FigureKind;
  outPath: string;
  style?: FigureStyle;
}

const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                 "#8c564b", "#e377c2"];

/** echarts class/clip ids carry a global counter; renumber by appearance. */
export function normalizeSvg(svg: string): string {
  const seen = new Map<string, string>();
  return svg.replace(/zr\d+-[a-z-]*\d+/g, (token) => {
    let canon = seen.get(token);
    if (canon === undefined) {
      canon = `zn-${seen.size}`;
      seen.set(token, canon);
    }
    return canon;
  });
}

function groupByRate(table: Table): Map<number, { t: number[]; rows: number[][] }> {
  const gammas = table.column("gamma_x");
  const groups = new Map<number, { t: number[]; rows: number[][] }>();
  for (let i = 0; i < gammas.length; i++) {
    let g = groups.get(gammas[i]);
    if (g === undefined) {
      g = { t: [], rows: [] };
      groups.set(gammas[i], g);
    }
    g.t.push(i);
    g.rows.push(table.rows[i]);
  }
  return groups;
}

type EChartsOption = Parameters<echarts.ECharts["setOption"]>[0];

function fig1Option(table: Table, style: FigureStyle): EChartsOption {
  const ratios = table.column("gamma_ratio");
  const panels: object[] = [];
  const axes: { x: object[]; y: object[] } = { x: [], y: [] };
  const series: object[] = [];
  const parts: Array<["re", string, 0] | ["im", string, 1]> =
    [["re", "Re L_n", 0], ["im", "Im L_n", 1]];
  for (const [prefix, label, panel] of parts) {
    panels.push({ left: "8%", width: "38%", top: 60, bottom: 50,
                  ...(panel === 1 ? { left: "58%" } : {}) });
    axes.x.push({ gridIndex: panel, type: "value", name: "gamma_x/omega",
                  nameLocation: "middle", nameGap: 28, min: 0,
                  max: Math.max(...ratios) });
    axes.y.push({ gridIndex: panel, type: "value", name: label });
    for (let k = 1; k <= 4; k++) {
      const values = table.column(`${prefix}_l${k}`);
      series.push({
        type: "line", name: `L${k}`, xAxisIndex: panel, yAxisIndex: panel,
        showSymbol: false, color: PALETTE[k - 1],
        lineStyle: { width: 2, type: k >= 4 ? "dashed" : "solid" },
        data: ratios.map((r, i) => [r, values[i]]),
      });
    }
  }
  return {
    animation: false,
    title: { text: style.title ?? "Liouvillian spectrum vs damping ratio", left: "center" },
    legend: { top: 28, data: ["L1", "L2", "L3", "L4"] },
    grid: panels,
    xAxis: axes.x,
    yAxis: axes.y,
    series,
  } as EChartsOption;
}

function fig2Option(table: Table, style: FigureStyle): EChartsOption {
  const ts = table.column("t");
  const dqfi = table.column("dqfi");
  const series: object[] = [];
  let k = 0;
  for (const [gamma, group] of groupByRate(table)) {
    series.push({
      type: "line", name: `gamma_x=${gamma}`, showSymbol: false,
      color: PALETTE[k % PALETTE.length], lineStyle: { width: 2 },
      data: group.t.map((i) => [ts[i], dqfi[i]]),
    });
    k += 1;
  }
  return {
    animation: false,
    title: { text: style.title ?? "DQFI vs evolution time", left: "center" },
    legend: { top: 28 },
    grid: { left: 70, right: 30, top: 70, bottom: 50 },
    xAxis: { type: "value", name: "t", nameLocation: "middle", nameGap: 28 },
    yAxis: { type: style.ylog ? "log" : "value", name: "DQFI" },
    series,
  } as EChartsOption;
}

function fig3Option(table: Table, style: FigureStyle): EChartsOption {
  const ts = table.column("t");
  const dqfi = table.column("dqfi");
  const cqfi = table.column("cqfi");
  const series: object[] = [];
  let k = 0;
  for (const [gamma, group] of groupByRate(table)) {
    const color = PALETTE[k % PALETTE.length];
    series.push({
      type: "line", name: `DQFI gamma_x=${gamma}`, showSymbol: false, color,
      lineStyle: { width: 2, type: "dotted" },
      data: group.t.map((i) => [ts[i], dqfi[i]]),
    });
    series.push({
      type: "line", name: `CQFI gamma_x=${gamma}`, showSymbol: false, color,
      lineStyle: { width: 2, type: "solid" },
      data: group.t.map((i) => [ts[i], cqfi[i]]),
    });
    k += 1;
  }
  return {
    animation: false,
    title: { text: style.title ?? "DQFI (dotted) vs CQFI (solid)", left: "center" },
    legend: { top: 28, type: "scroll" },
    grid: { left: 70, right: 30, top: 70, bottom: 50 },
    xAxis: { type: "value", name: "t", nameLocation: "middle", nameGap: 28 },
    yAxis: { type: style.ylog ? "log" : "value", name: "Fisher information" },
    series,
  } as EChartsOption;
}

export function renderToString(job: FigureJob): string {
  const table = readTable(job.csvPath);
  validateFigureTable(job.kind, table, job.csvPath);
  const style = job.style ?? {};
  const width = style.width ?? 900;
  const height = style.height ?? (job.kind === "fig1" ? 420 : 560);
  let option: EChartsOption;
  switch (job.kind) {
    case "fig1":
      option = fig1Option(table, style);
      break;
    case "fig2":
      option = fig2Option(table, style);
      break;
    case "fig3":
      option = fig3Option(table, style);
      break;
    default:
      throw new SchemaError(`unknown figure kind '${job.kind as string}'`);
  }
  const chart = echarts.init(null, null, { renderer: "svg", ssr: true, width, height });
  try {
    chart.setOption(option);
    return normalizeSvg(chart.renderToSVGString());
  } finally {
    chart.dispose();
  }
}

export function render(job: FigureJob): string {
  const svg = renderToString(job);
  writeFileSync(job.outPath, svg, "utf-8");
  return job.outPath;
}

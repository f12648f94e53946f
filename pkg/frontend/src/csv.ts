/**
 * Reader for the dqfi CLI CSV contract: '#'-prefixed metadata lines, a
 * single comma-separated header row, then numeric rows.  Validation is
 * duplicated here on purpose so stale or foreign files fail loudly.
 */

import { readFileSync } from "node:fs";

export class SchemaError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "SchemaError";
  }
}

export interface Table {
  meta: Record<string, string>;
  header: string[];
  rows: number[][];
  /** column values by header name */
  column(name: string): number[];
}

const REQUIRED_META = ["generator", "convention"];

export function parseTable(text: string, source = "<csv>"): Table {
  const meta: Record<string, string> = {};
  let header: string[] | null = null;
  const rows: number[][] = [];
  const lines = text.split(/\r?\n/);
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i];
    if (line.trim() === "") continue;
    if (line.startsWith("#")) {
      if (header !== null) {
        throw new SchemaError(
          `${source}:${i + 1}: metadata line after the header row`);
      }
      const body = line.replace(/^#\s*/, "");
      const sep = body.indexOf(":");
      if (sep < 0) {
        throw new SchemaError(
          `${source}:${i + 1}: metadata line without 'key: value' shape`);
      }
      meta[body.slice(0, sep).trim()] = body.slice(sep + 1).trim();
      continue;
    }
    if (header === null) {
      header = line.split(",").map((s) => s.trim());
      continue;
    }
    const cells = line.split(",");
    if (cells.length !== header.length) {
      throw new SchemaError(
        `${source}:${i + 1}: expected ${header.length} cells, found ${cells.length}`);
    }
    rows.push(cells.map((cell, k) => {
      const value = cell.trim() === "inf" ? Infinity : Number(cell);
      if (Number.isNaN(value) && cell.trim().toLowerCase() !== "nan") {
        throw new SchemaError(
          `${source}:${i + 1}: cell ${k + 1} (${header![k]}) is not numeric: ${cell.trim()}`);
      }
      return value;
    }));
  }
  if (header === null) {
    throw new SchemaError(`${source}: no header row found (empty file?)`);
  }
  if (rows.length === 0) {
    throw new SchemaError(`${source}: no data rows under the header`);
  }
  for (const key of REQUIRED_META) {
    if (!(key in meta)) {
      throw new SchemaError(
        `${source}: missing required metadata line '# ${key}: ...' ` +
        `(is this a dqfi CLI file?)`);
    }
  }
  const index = new Map(header.map((name, k) => [name, k] as const));
  return {
    meta,
    header,
    rows,
    column(name: string): number[] {
      const k = index.get(name);
      if (k === undefined) {
        throw new SchemaError(`${source}: no column named '${name}'`);
      }
      return rows.map((r) => r[k]);
    },
  };
}

export function readTable(path: string): Table {
  let text: string;
  try {
    text = readFileSync(path, "utf-8");
  } catch (err) {
    throw new SchemaError(`cannot read ${path}: ${(err as Error).message}`);
  }
  return parseTable(text, path);
}

const FIGURE_COLUMNS: Record<string, string[]> = {
  fig1: ["gamma_ratio", "re_l1", "re_l2", "re_l3", "re_l4",
         "im_l1", "im_l2", "im_l3", "im_l4"],
  fig2: ["gamma_x", "t", "dqfi"],
  fig3: ["gamma_x", "t", "dqfi", "cqfi"],
};

export type FigureKind = "fig1" | "fig2" | "fig3";

export function validateFigureTable(kind: FigureKind, table: Table, source = "<csv>"): void {
  const required = FIGURE_COLUMNS[kind];
  const missing = required.filter((c) => !table.header.includes(c));
  if (missing.length > 0) {
    throw new SchemaError(
      `${source}: not a ${kind} file: missing column(s) ${missing.join(", ")} ` +
      `(found: ${table.header.join(", ")}); regenerate with 'dqfi reproduce'`);
  }
}

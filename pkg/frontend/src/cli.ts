#!/usr/bin/env node
/**
 * One command per figure kind:
 *
 *   dqfi-figures fig1 --csv data/fig1.csv --out fig1.svg
 *   dqfi-figures fig2 --csv data/fig2.csv --out fig2.svg [--ylog] [--title T]
 *   dqfi-figures fig3 --csv data/fig3.csv --out fig3.svg [--ylog] [--title T]
 *
 * Exit codes: 0 rendered, 2 schema/input problem.
 */

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { FigureKind, SchemaError } from "./csv";
import { render } from "./render";

function figureCommand(kind: FigureKind, describe: string) {
  return {
    command: kind,
    describe,
    builder: (y: ReturnType<typeof yargs>) => y
      .option("csv", { type: "string", demandOption: true, describe: "input CSV from the dqfi CLI" })
      .option("out", { type: "string", demandOption: true, describe: "output SVG path" })
      .option("title", { type: "string", describe: "override the panel title" })
      .option("ylog", { type: "boolean", default: false, describe: "log-scale value axis" })
      .option("width", { type: "number" })
      .option("height", { type: "number" }),
    handler: (argv: Record<string, unknown>) => {
      try {
        const out = render({
          kind,
          csvPath: argv.csv as string,
          outPath: argv.out as string,
          style: {
            title: argv.title as string | undefined,
            ylog: Boolean(argv.ylog),
            width: argv.width as number | undefined,
            height: argv.height as number | undefined,
          },
        });
        process.stdout.write(`${out}\n`);
      } catch (err) {
        if (err instanceof SchemaError) {
          process.stderr.write(`dqfi-figures: ${err.message}\n`);
          process.exit(2);
        }
        throw err;
      }
    },
  };
}

export function main(args: string[]): void {
  yargs(args)
    .scriptName("dqfi-figures")
    .command(figureCommand("fig1", "spectrum panels (Re, Im) vs damping ratio"))
    .command(figureCommand("fig2", "DQFI vs time, one curve per decay rate"))
    .command(figureCommand("fig3", "paired DQFI/CQFI curves"))
    .demandCommand(1, "pick a figure kind: fig1, fig2 or fig3")
    .strict()
    .fail((msg, err) => {
      if (err) throw err;
      process.stderr.write(`dqfi-figures: ${msg}\n`);
      process.exit(2);
    })
    .parseSync();
}

main(hideBin(process.argv));

/**
 * plot <kind> <input.csv> -o <out.png>
 *
 * kind: sweep | moments | hoelder.  Reads one CSV produced by the
 * solver, writes one PNG.  Never modifies its input; the output depends
 * only on the input bytes and the kind.  Exit 1 on schema violations or
 * bad arguments, with the reason on stderr.
 */

import { readFileSync, writeFileSync } from "node:fs";
import { parseArgs } from "node:util";

import { FigureKind, SCHEMAS, SchemaError } from "./csv.js";
import { renderFigure } from "./figures.js";

export function run(argv: string[]): number {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      allowPositionals: true,
      options: {
        output: { type: "string", short: "o" },
      },
    });
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 1;
  }
  const [kind, input] = parsed.positionals;
  const output = parsed.values.output;
  if (!kind || !input || !output) {
    process.stderr.write("usage: plot <sweep|moments|hoelder> <input.csv> -o <out.png>\n");
    return 1;
  }
  if (!(kind in SCHEMAS)) {
    process.stderr.write(`error: unknown figure kind '${kind}'\n`);
    return 1;
  }
  let text: string;
  try {
    text = readFileSync(input, "utf8");
  } catch (err) {
    process.stderr.write(`error: cannot read ${input}: ${(err as Error).message}\n`);
    return 1;
  }
  try {
    const png = renderFigure(kind as FigureKind, text);
    writeFileSync(output, png);
  } catch (err) {
    if (err instanceof SchemaError) {
      process.stderr.write(`error: ${err.message}\n`);
      return 1;
    }
    throw err;
  }
  return 0;
}

const invokedDirectly = process.argv[1]?.endsWith("cli.js") || process.argv[1]?.endsWith("cli.ts");
if (invokedDirectly) {
  process.exit(run(process.argv.slice(2)));
}

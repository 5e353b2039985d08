#!/usr/bin/env node
/**
 * figkit <kind> --in <csv...> --out <image.svg> [--title <text>] [--scheme <name>]
 *
 * Kinds: paths, smse-slope, paired-paths.  Consumes the CSV schemas written
 * by the mtem-sim experiment CLI and writes a deterministic SVG.
 */

import { readFileSync, writeFileSync } from "fs";
import { FigureKind, FigureSpec, render } from "./figures.js";

const KINDS: FigureKind[] = ["paths", "smse-slope", "paired-paths"];

export function parseArgs(argv: string[]): FigureSpec & { out: string } {
  if (argv.length === 0) {
    throw new Error(`usage: figkit <${KINDS.join("|")}> --in <csv...> --out <image.svg>`);
  }
  const kind = argv[0] as FigureKind;
  if (!KINDS.includes(kind)) {
    throw new Error(`unknown figure kind '${argv[0]}'; expected one of ${KINDS.join(", ")}`);
  }
  const inputs: string[] = [];
  let out = "";
  let title: string | undefined;
  let scheme: string | undefined;
  let i = 1;
  while (i < argv.length) {
    const arg = argv[i];
    if (arg === "--in") {
      i++;
      while (i < argv.length && !argv[i].startsWith("--")) {
        inputs.push(argv[i]);
        i++;
      }
    } else if (arg === "--out") {
      out = argv[i + 1] ?? "";
      i += 2;
    } else if (arg === "--title") {
      title = argv[i + 1];
      i += 2;
    } else if (arg === "--scheme") {
      scheme = argv[i + 1];
      i += 2;
    } else {
      throw new Error(`unknown argument '${arg}'`);
    }
  }
  if (inputs.length === 0) throw new Error("at least one --in CSV is required");
  if (!out) throw new Error("--out <image.svg> is required");
  return { kind, inputs, out, title, scheme };
}

export function main(argv: string[]): number {
  let spec: ReturnType<typeof parseArgs>;
  try {
    spec = parseArgs(argv);
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    return 1;
  }
  try {
    const svg = render({
      kind: spec.kind,
      inputs: spec.inputs.map((p) => readFileSync(p, "utf-8")),
      title: spec.title,
      scheme: spec.scheme,
    });
    writeFileSync(spec.out, svg, "utf-8");
    console.log(`wrote ${spec.out}`);
    return 0;
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    return 2;
  }
}

if (process.argv[1] && /cli\.(js|ts)$/.test(process.argv[1])) {
  process.exit(main(process.argv.slice(2)));
}

import { describe, expect, it } from "vitest";
import { mkdtempSync, readFileSync, writeFileSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";

import { parseCsv, requireColumns, numericColumn } from "../src/csv.js";
import { render, renderPaths, renderSmseSlope } from "../src/figures.js";
import { main, parseArgs } from "../src/cli.js";

const fixture = (name: string) =>
  readFileSync(join(__dirname, "fixtures", name), "utf-8");

const pathData = (svg: string): string[] =>
  [...svg.matchAll(/<path d="([^"]+)"/g)].map((m) => m[1]);

describe("csv parsing", () => {
  it("parses headers and typed rows", () => {
    const table = parseCsv("a,b\n1,2.5\n3,x\n");
    expect(table.columns).toEqual(["a", "b"]);
    expect(table.rows[0]).toEqual({ a: 1, b: 2.5 });
    expect(numericColumn(table, "a")).toEqual([1, 3]);
    expect(() => numericColumn(table, "b")).toThrow(/non-numeric/);
  });

  it("names the missing column", () => {
    const table = parseCsv("q,delta1\n2,0.25\n");
    expect(() => requireColumns(table, ["q", "smse"])).toThrow(/missing column 'smse'/);
  });
});

describe("figure kinds from golden bundles", () => {
  it("renders baseline sample paths (divergence figure)", () => {
    const svg = render({
      kind: "paths",
      inputs: [fixture("diverge-demo.csv")],
      scheme: "PI",
      title: "baseline",
    });
    expect(svg.startsWith("<svg ")).toBe(true);
    expect(svg.trimEnd().endsWith("</svg>")).toBe(true);
    expect(pathData(svg).length).toBe(3); // one polyline per sample
  });

  it("renders multiscale sample paths (bounded figure)", () => {
    const svg = render({
      kind: "paths",
      inputs: [fixture("diverge-demo.csv")],
      scheme: "MTEM",
    });
    expect(pathData(svg).length).toBe(3);
    expect(svg).toContain("#1f77b4");
  });

  it("renders the convergence figure with a slope -1 reference", () => {
    const svg = render({ kind: "smse-slope", inputs: [fixture("converge.csv")] });
    expect(svg).toContain('stroke-dasharray="6 4"');
    expect(svg).toContain("#d62728"); // red dashed reference
    expect(pathData(svg).length).toBe(2); // reference plus data
    expect((svg.match(/<circle /g) ?? []).length).toBe(4); // q = 2..5 markers
  });

  it("renders paired exact/numerical panels", () => {
    const svg = render({ kind: "paired-paths", inputs: [fixture("trajectory.csv")] });
    expect(pathData(svg).length).toBe(8); // 4 samples x 2 curves
    expect(svg).toContain("sample 0");
    expect(svg).toContain("sample 3");
  });
});

describe("reference line geometry", () => {
  it("coincides with exactly geometric data", () => {
    const svg = renderSmseSlope([parseCsv(fixture("smse-exact.csv"))]);
    const [reference, data] = pathData(svg);
    expect(reference).toBe(data);
  });

  it("separates from non-geometric data", () => {
    const svg = renderSmseSlope([parseCsv("q,smse\n2,0.25\n3,0.25\n4,0.25\n")]);
    const [reference, data] = pathData(svg);
    expect(reference).not.toBe(data);
  });
});

describe("determinism and error handling", () => {
  it("renders byte-identical output on repeat", () => {
    const spec = { kind: "paired-paths" as const, inputs: [fixture("trajectory.csv")] };
    expect(render(spec)).toBe(render(spec));
  });

  it("rejects a schema mismatch, naming the column", () => {
    expect(() =>
      render({ kind: "paired-paths", inputs: [fixture("converge.csv")] }),
    ).toThrow(/missing column 'sample'/);
    expect(() =>
      render({ kind: "smse-slope", inputs: [fixture("trajectory.csv")] }),
    ).toThrow(/missing column 'q'/);
  });

  it("draws coincident curves when exact equals numerical", () => {
    const csv = "sample,t,exact,mtem\n0,0.0,1.0,1.0\n0,0.5,0.8,0.8\n0,1.0,0.6,0.6\n";
    const svg = render({ kind: "paired-paths", inputs: [csv] });
    const [exactPath, mtemPath] = pathData(svg);
    expect(exactPath).toBe(mtemPath);
  });

  it("rejects an unknown scheme filter", () => {
    expect(() =>
      renderPaths([parseCsv(fixture("diverge-demo.csv"))], "", "NOPE"),
    ).toThrow(/no rows with scheme 'NOPE'/);
  });
});

describe("command line", () => {
  it("parses arguments", () => {
    const spec = parseArgs([
      "smse-slope",
      "--in",
      "a.csv",
      "b.csv",
      "--out",
      "fig.svg",
      "--title",
      "T",
    ]);
    expect(spec.kind).toBe("smse-slope");
    expect(spec.inputs).toEqual(["a.csv", "b.csv"]);
    expect(spec.out).toBe("fig.svg");
    expect(spec.title).toBe("T");
    expect(() => parseArgs(["nope", "--in", "a", "--out", "b"])).toThrow(/unknown figure kind/);
    expect(() => parseArgs(["paths", "--out", "b"])).toThrow(/--in/);
  });

  it("writes an SVG file end to end", () => {
    const dir = mkdtempSync(join(tmpdir(), "figkit-"));
    const input = join(dir, "converge.csv");
    writeFileSync(input, fixture("converge.csv"));
    const output = join(dir, "fig.svg");
    expect(main(["smse-slope", "--in", input, "--out", output])).toBe(0);
    expect(readFileSync(output, "utf-8")).toContain("</svg>");
    expect(main(["smse-slope", "--in", join(dir, "missing.csv"), "--out", output])).toBe(2);
    expect(main(["bogus-kind"])).toBe(1);
  });
});

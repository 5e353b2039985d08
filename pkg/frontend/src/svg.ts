/**
 * Minimal deterministic SVG scene builder.
 *
 * Everything is plain string assembly from the input numbers, so rendering
 * the same data twice produces byte-identical output.
 */

export interface Extent {
  min: number;
  max: number;
}

export function extentOf(values: number[], pad = 0.05): Extent {
  let min = Infinity;
  let max = -Infinity;
  for (const v of values) {
    if (v < min) min = v;
    if (v > max) max = v;
  }
  if (!Number.isFinite(min) || !Number.isFinite(max)) {
    throw new Error("cannot compute an extent of an empty or non-finite series");
  }
  if (min === max) {
    min -= 0.5;
    max += 0.5;
  }
  const span = max - min;
  return { min: min - pad * span, max: max + pad * span };
}

/** Linear map from a data extent onto pixel coordinates. */
export function linearScale(domain: Extent, rangeMin: number, rangeMax: number) {
  const k = (rangeMax - rangeMin) / (domain.max - domain.min);
  return (v: number) => rangeMin + (v - domain.min) * k;
}

export function ticks(domain: Extent, count = 5): number[] {
  const out: number[] = [];
  for (let i = 0; i <= count; i++) {
    out.push(domain.min + ((domain.max - domain.min) * i) / count);
  }
  return out;
}

const fmt = (v: number) => {
  const s = v.toFixed(2);
  return s === "-0.00" ? "0.00" : s;
};

export const tickLabel = (v: number): string => {
  if (v !== 0 && (Math.abs(v) >= 1e4 || Math.abs(v) < 1e-2)) {
    return v.toExponential(2);
  }
  const s = v.toFixed(3).replace(/\.?0+$/, "");
  return s === "-0" ? "0" : s;
};

export interface PlotFrame {
  width: number;
  height: number;
  left: number;
  right: number;
  top: number;
  bottom: number;
  x: (v: number) => number;
  y: (v: number) => number;
}

export function makeFrame(
  xDomain: Extent,
  yDomain: Extent,
  width = 720,
  height = 440,
  offsetX = 0,
  offsetY = 0,
): PlotFrame {
  const left = offsetX + 64;
  const right = offsetX + width - 16;
  const top = offsetY + 28;
  const bottom = offsetY + height - 40;
  return {
    width,
    height,
    left,
    right,
    top,
    bottom,
    x: linearScale(xDomain, left, right),
    y: linearScale(yDomain, bottom, top),
  };
}

export function polyline(
  frame: PlotFrame,
  xs: number[],
  ys: number[],
  stroke: string,
  extra = "",
): string {
  const points: string[] = [];
  for (let i = 0; i < xs.length; i++) {
    points.push(`${i === 0 ? "M" : "L"}${fmt(frame.x(xs[i]))} ${fmt(frame.y(ys[i]))}`);
  }
  return `<path d="${points.join(" ")}" fill="none" stroke="${stroke}" stroke-width="1.5"${extra}/>`;
}

export function circles(frame: PlotFrame, xs: number[], ys: number[], fill: string): string {
  return xs
    .map((x, i) => `<circle cx="${fmt(frame.x(x))}" cy="${fmt(frame.y(ys[i]))}" r="3" fill="${fill}"/>`)
    .join("");
}

export function axes(
  frame: PlotFrame,
  xDomain: Extent,
  yDomain: Extent,
  xLabel: string,
  yLabel: string,
): string {
  const parts: string[] = [];
  parts.push(
    `<line x1="${frame.left}" y1="${frame.bottom}" x2="${frame.right}" y2="${frame.bottom}" stroke="#333"/>`,
    `<line x1="${frame.left}" y1="${frame.top}" x2="${frame.left}" y2="${frame.bottom}" stroke="#333"/>`,
  );
  for (const t of ticks(xDomain)) {
    const px = fmt(frame.x(t));
    parts.push(
      `<line x1="${px}" y1="${frame.bottom}" x2="${px}" y2="${frame.bottom + 5}" stroke="#333"/>`,
      `<text x="${px}" y="${frame.bottom + 18}" font-size="11" text-anchor="middle">${tickLabel(t)}</text>`,
    );
  }
  for (const t of ticks(yDomain)) {
    const py = fmt(frame.y(t));
    parts.push(
      `<line x1="${frame.left - 5}" y1="${py}" x2="${frame.left}" y2="${py}" stroke="#333"/>`,
      `<text x="${frame.left - 8}" y="${py}" font-size="11" text-anchor="end" dominant-baseline="middle">${tickLabel(t)}</text>`,
    );
  }
  const midX = (frame.left + frame.right) / 2;
  const midY = (frame.top + frame.bottom) / 2;
  parts.push(
    `<text x="${fmt(midX)}" y="${frame.bottom + 34}" font-size="12" text-anchor="middle">${xLabel}</text>`,
    `<text x="16" y="${fmt(midY)}" font-size="12" text-anchor="middle" transform="rotate(-90 16 ${fmt(midY)})">${yLabel}</text>`,
  );
  return parts.join("\n");
}

export function title(frame: PlotFrame, text: string): string {
  if (!text) return "";
  const midX = (frame.left + frame.right) / 2;
  return `<text x="${fmt(midX)}" y="${frame.top - 10}" font-size="13" font-weight="bold" text-anchor="middle">${text}</text>`;
}

export function document(width: number, height: number, body: string): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}" font-family="sans-serif">\n` +
    `<rect width="${width}" height="${height}" fill="white"/>\n${body}\n</svg>\n`
  );
}

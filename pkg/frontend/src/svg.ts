/** Minimal deterministic SVG scene builder: fixed canvas size, fixed number
 * formatting, elements emitted in insertion order. */

export const WIDTH = 640;
export const HEIGHT = 480;
export const MARGIN = { left: 70, right: 20, top: 38, bottom: 52 };

export function fmt(v: number): string {
  if (!Number.isFinite(v)) throw new Error(`non-finite coordinate ${v}`);
  // fixed 2-decimal pixel coordinates keep output byte-stable
  return v.toFixed(2);
}

export interface Scale {
  (v: number): number;
  readonly domain: [number, number];
  readonly log: boolean;
}

export function makeScale(
  domain: [number, number],
  range: [number, number],
  log = false,
): Scale {
  const [d0, d1] = log ? [Math.log10(domain[0]), Math.log10(domain[1])] : domain;
  const span = d1 - d0 || 1;
  const f = (v: number): number => {
    const x = log ? Math.log10(v) : v;
    return range[0] + ((x - d0) / span) * (range[1] - range[0]);
  };
  return Object.assign(f, { domain, log } as const);
}

/** 1-2-5 linear ticks, or decade ticks for log scales. */
export function ticks(domain: [number, number], log: boolean): number[] {
  const [lo, hi] = domain;
  if (log) {
    const out: number[] = [];
    for (let e = Math.ceil(Math.log10(lo) - 1e-9); Math.pow(10, e) <= hi * (1 + 1e-9); e++) {
      out.push(Math.pow(10, e));
    }
    return out;
  }
  const span = hi - lo || 1;
  const raw = span / 5;
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const step = [1, 2, 5, 10].map((m) => m * mag).find((s) => span / s <= 6) ?? 10 * mag;
  const out: number[] = [];
  for (let v = Math.ceil(lo / step - 1e-9) * step; v <= hi + 1e-9 * span; v += step) {
    out.push(Math.abs(v) < 1e-12 * span ? 0 : v);
  }
  return out;
}

export function tickLabel(v: number, log: boolean): string {
  if (log) {
    const e = Math.round(Math.log10(v));
    return `1e${e}`;
  }
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(1);
  return parseFloat(v.toPrecision(6)).toString();
}

export const SERIES_COLORS = [
  "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
  "#8c564b", "#17becf", "#7f7f7f",
];

export class Figure {
  private parts: string[] = [];
  readonly xScale: Scale;
  readonly yScale: Scale;

  constructor(
    xDomain: [number, number],
    yDomain: [number, number],
    opts: { title?: string; xLabel?: string; yLabel?: string; logX?: boolean; logY?: boolean } = {},
  ) {
    this.xScale = makeScale(xDomain, [MARGIN.left, WIDTH - MARGIN.right], opts.logX ?? false);
    this.yScale = makeScale(yDomain, [HEIGHT - MARGIN.bottom, MARGIN.top], opts.logY ?? false);
    this.parts.push(
      `<rect x="0" y="0" width="${WIDTH}" height="${HEIGHT}" fill="#ffffff"/>`,
    );
    this.axes(opts);
  }

  private axes(opts: { title?: string; xLabel?: string; yLabel?: string }): void {
    const x0 = MARGIN.left;
    const x1 = WIDTH - MARGIN.right;
    const y0 = HEIGHT - MARGIN.bottom;
    const y1 = MARGIN.top;
    for (const tv of ticks(this.xScale.domain, this.xScale.log)) {
      const px = this.xScale(tv);
      this.parts.push(
        `<line x1="${fmt(px)}" y1="${fmt(y0)}" x2="${fmt(px)}" y2="${fmt(y1)}" stroke="#e0e0e0" stroke-width="1"/>`,
        `<text x="${fmt(px)}" y="${fmt(y0 + 18)}" font-size="12" text-anchor="middle" fill="#333333">${tickLabel(tv, this.xScale.log)}</text>`,
      );
    }
    for (const tv of ticks(this.yScale.domain, this.yScale.log)) {
      const py = this.yScale(tv);
      this.parts.push(
        `<line x1="${fmt(x0)}" y1="${fmt(py)}" x2="${fmt(x1)}" y2="${fmt(py)}" stroke="#e0e0e0" stroke-width="1"/>`,
        `<text x="${fmt(x0 - 8)}" y="${fmt(py + 4)}" font-size="12" text-anchor="end" fill="#333333">${tickLabel(tv, this.yScale.log)}</text>`,
      );
    }
    this.parts.push(
      `<rect x="${fmt(x0)}" y="${fmt(y1)}" width="${fmt(x1 - x0)}" height="${fmt(y0 - y1)}" fill="none" stroke="#333333" stroke-width="1"/>`,
    );
    if (opts.title) {
      this.parts.push(
        `<text x="${fmt((x0 + x1) / 2)}" y="24" font-size="15" text-anchor="middle" fill="#111111">${escapeXml(opts.title)}</text>`,
      );
    }
    if (opts.xLabel) {
      this.parts.push(
        `<text x="${fmt((x0 + x1) / 2)}" y="${HEIGHT - 14}" font-size="13" text-anchor="middle" fill="#111111">${escapeXml(opts.xLabel)}</text>`,
      );
    }
    if (opts.yLabel) {
      const cy = (y0 + y1) / 2;
      this.parts.push(
        `<text x="18" y="${fmt(cy)}" font-size="13" text-anchor="middle" fill="#111111" transform="rotate(-90 18 ${fmt(cy)})">${escapeXml(opts.yLabel)}</text>`,
      );
    }
  }

  polyline(xs: ArrayLike<number>, ys: ArrayLike<number>, color: string, width = 1.5, dash?: string): void {
    const pts: string[] = [];
    for (let i = 0; i < xs.length; i++) {
      pts.push(`${fmt(this.xScale(xs[i]))},${fmt(this.yScale(ys[i]))}`);
    }
    const dashAttr = dash ? ` stroke-dasharray="${dash}"` : "";
    this.parts.push(
      `<polyline points="${pts.join(" ")}" fill="none" stroke="${color}" stroke-width="${width}"${dashAttr}/>`,
    );
  }

  dots(xs: ArrayLike<number>, ys: ArrayLike<number>, color: string | string[], r = 2.5): void {
    for (let i = 0; i < xs.length; i++) {
      const c = typeof color === "string" ? color : color[i];
      this.parts.push(
        `<circle cx="${fmt(this.xScale(xs[i]))}" cy="${fmt(this.yScale(ys[i]))}" r="${r}" fill="${c}"/>`,
      );
    }
  }

  polygon(xs: number[], ys: number[], stroke: string): void {
    const pts = xs.map((x, i) => `${fmt(this.xScale(x))},${fmt(this.yScale(ys[i]))}`);
    this.parts.push(
      `<polygon points="${pts.join(" ")}" fill="none" stroke="${stroke}" stroke-width="1.2"/>`,
    );
  }

  /** annotation in data coordinates */
  text(x: number, y: number, label: string, opts: { size?: number; anchor?: string } = {}): void {
    this.parts.push(
      `<text x="${fmt(this.xScale(x))}" y="${fmt(this.yScale(y))}" font-size="${opts.size ?? 13}" text-anchor="${opts.anchor ?? "start"}" fill="#111111">${escapeXml(label)}</text>`,
    );
  }

  legend(entries: { label: string; color: string }[]): void {
    const x = WIDTH - MARGIN.right - 150;
    let y = MARGIN.top + 16;
    for (const e of entries) {
      this.parts.push(
        `<line x1="${x}" y1="${fmt(y - 4)}" x2="${x + 24}" y2="${fmt(y - 4)}" stroke="${e.color}" stroke-width="2"/>`,
        `<text x="${x + 30}" y="${fmt(y)}" font-size="12" fill="#111111">${escapeXml(e.label)}</text>`,
      );
      y += 18;
    }
  }

  render(): string {
    return (
      `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" ` +
      `viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="Helvetica, Arial, sans-serif">\n` +
      this.parts.join("\n") +
      "\n</svg>\n"
    );
  }
}

export function escapeXml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** Small perceptual colormap (viridis control points, linear interpolation)
 * for temperature scatter plots. */

const VIRIDIS: [number, number, number][] = [
  [68, 1, 84],
  [71, 44, 122],
  [59, 81, 139],
  [44, 113, 142],
  [33, 144, 141],
  [39, 173, 129],
  [92, 200, 99],
  [170, 220, 50],
  [253, 231, 37],
];

export function viridis(t: number): string {
  const u = Math.min(1, Math.max(0, t)) * (VIRIDIS.length - 1);
  const i = Math.min(VIRIDIS.length - 2, Math.floor(u));
  const f = u - i;
  const mix = (a: number, b: number): number => Math.round(a + f * (b - a));
  const [r, g, b] = [0, 1, 2].map((k) => mix(VIRIDIS[i][k], VIRIDIS[i + 1][k]));
  return `#${[r, g, b].map((v) => v.toString(16).padStart(2, "0")).join("")}`;
}

export function colorByValue(values: ArrayLike<number>): { colors: string[]; lo: number; hi: number } {
  let lo = Infinity;
  let hi = -Infinity;
  for (let i = 0; i < values.length; i++) {
    if (values[i] < lo) lo = values[i];
    if (values[i] > hi) hi = values[i];
  }
  const span = hi - lo || 1;
  const colors: string[] = [];
  for (let i = 0; i < values.length; i++) {
    colors.push(viridis((values[i] - lo) / span));
  }
  return { colors, lo, hi };
}

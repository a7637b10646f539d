/** Least-squares power-law fit, matching the simulator's convergence fit:
 * slope of log(error) against log(h) with the sign convention
 * error ~ C * h^rate. */

export function fitConvergenceRate(
  h: readonly number[],
  errors: readonly number[],
): { rate: number; intercept: number } {
  if (h.length !== errors.length) {
    throw new Error("h and errors must have equal length");
  }
  const pts = h
    .map((hi, i) => [hi, errors[i]] as const)
    .filter(([hi, ei]) => hi > 0 && ei > 0);
  if (new Set(pts.map(([hi]) => hi)).size < 3) {
    throw new Error("need at least 3 distinct positive mesh sizes");
  }
  const lx = pts.map(([hi]) => Math.log(hi));
  const ly = pts.map(([, ei]) => Math.log(ei));
  const n = lx.length;
  const mx = lx.reduce((a, b) => a + b, 0) / n;
  const my = ly.reduce((a, b) => a + b, 0) / n;
  let sxx = 0;
  let sxy = 0;
  for (let i = 0; i < n; i++) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  const rate = sxy / sxx;
  return { rate, intercept: Math.exp(my - rate * mx) };
}

/** Display formatting. Percent conversion is the only numeric work the
 * client performs; every probability comes from the server as-is. */

export function formatPercent(probability: number): string {
  return `${(probability * 100).toFixed(1)}%`;
}

export function formatTimestamp(epochSeconds: number): string {
  return new Date(epochSeconds * 1000).toISOString().replace("T", " ").slice(0, 19);
}

/** Signed attribution value for tables and tooltips. */
export function formatPhi(phi: number): string {
  const sign = phi >= 0 ? "+" : "";
  return `${sign}${phi.toFixed(4)}`;
}

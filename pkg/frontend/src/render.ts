/** Pure view-model helpers: everything here turns service diagnostics
 * into plain data (percent heights, SVG paths) so it can be unit tested
 * without a DOM. */

export interface Bar {
  label: string;
  percent: number; // 0..100, scaled to the largest magnitude
  negative: boolean;
}

/** Fusion weight bar chart: heights relative to the largest |w|. */
export function weightBars(weights: number[]): Bar[] {
  const peak = Math.max(...weights.map(Math.abs), 1e-12);
  return weights.map((w, i) => ({
    label: `w${i + 1}`,
    percent: (Math.abs(w) / peak) * 100,
    negative: w < 0,
  }));
}

/** SVG path for one channel's sampling coordinates, knot index on the
 * x axis and the coordinate value on the y axis (origin bottom-left). */
export function coordPath(coords: number[], width: number, height: number): string {
  if (coords.length < 2) return "";
  const step = width / (coords.length - 1);
  return coords
    .map((v, i) => {
      const op = i === 0 ? "M" : "L";
      const x = (i * step).toFixed(2);
      const y = ((1 - v) * height).toFixed(2);
      return `${op}${x},${y}`;
    })
    .join(" ");
}

/** Meter text for the relative similarity score. */
export function formatSimilarity(score: number): string {
  return score.toFixed(2);
}

/** Wipe comparison: given a handle position in [0,1], the clip widths
 * for the before (left) and after (right) layers in percent. */
export function wipeSplit(position: number): { before: number; after: number } {
  const p = Math.min(1, Math.max(0, position));
  return { before: p * 100, after: (1 - p) * 100 };
}

/** Pure view-model layer: chart geometry, cleaning plans, formatting.
 *
 * The dashboard is a pure API client; everything here only rearranges
 * numbers that came out of service responses. No estimate is ever computed
 * client-side.
 */

import type { CurvesPayload, LabelEdit, RunOutcome } from './types.js';

export type SeriesKind = 'err_1nn' | 'ber_estimate';

export interface ChartSeries {
  armId: string;
  points: Array<{ x: number; y: number }>;
  eliminatedRound: number | null;
  isWinner: boolean;
}

export interface ChartModel {
  series: ChartSeries[];
  overlay: Array<{ x: number; y: number }>;
  targetY: number;
  xMax: number;
  yMax: number;
  kind: SeriesKind;
}

/** One series per arm plus the target line and the extrapolation overlay. */
export function buildChartModel(curves: CurvesPayload, kind: SeriesKind): ChartModel {
  const series: ChartSeries[] = Object.entries(curves.arms)
    .sort(([a], [b]) => a.localeCompare(b))
    .map(([armId, arm]) => ({
      armId,
      points: arm.points.map((p) => ({
        x: p.n_consumed,
        y: kind === 'err_1nn' ? p.err_1nn : p.ber_estimate,
      })),
      eliminatedRound: arm.eliminated_round,
      isWinner: armId === curves.winner,
    }));
  const overlay = curves.extrapolation_overlay.map((p) => ({
    x: p.n,
    y: kind === 'err_1nn' ? p.err : p.estimate,
  }));
  const ys = series.flatMap((s) => s.points.map((p) => p.y));
  const xs = series.flatMap((s) => s.points.map((p) => p.x))
    .concat(overlay.map((p) => p.x));
  return {
    series,
    overlay,
    targetY: curves.target_error,
    xMax: Math.max(1, ...xs),
    yMax: Math.max(curves.target_error, ...ys, 1e-9) * 1.1,
    kind,
  };
}

/** Simulation-mode cleaning: restore a fraction of the still-noisy labels.
 *
 * `clean` holds the registered ground-truth labels and `current` the
 * service's current labels, both in global index order. The plan restores
 * ceil(fraction * still-noisy) of them, lowest index first; a zero fraction
 * plans nothing.
 */
export function planCleanStep(
  clean: number[],
  current: number[],
  fraction: number,
): LabelEdit[] {
  if (clean.length !== current.length) {
    throw new Error(`label registries disagree: ${clean.length} vs ${current.length}`);
  }
  if (fraction < 0 || fraction > 1) {
    throw new Error(`step fraction ${fraction} not in [0, 1]`);
  }
  const noisy: number[] = [];
  for (let i = 0; i < clean.length; i += 1) {
    if (clean[i] !== current[i]) noisy.push(i);
  }
  const count = Math.ceil(fraction * noisy.length);
  return noisy.slice(0, count).map((index) => ({ index, new_label: clean[index] }));
}

/** Fraction of the registered noise already restored. */
export function cleanedFraction(clean: number[], current: number[], initialNoisy: number): number {
  if (initialNoisy === 0) return 1;
  let stillNoisy = 0;
  for (let i = 0; i < clean.length; i += 1) {
    if (clean[i] !== current[i]) stillNoisy += 1;
  }
  return (initialNoisy - stillNoisy) / initialNoisy;
}

export function countNoisy(clean: number[], current: number[]): number {
  let n = 0;
  for (let i = 0; i < clean.length; i += 1) {
    if (clean[i] !== current[i]) n += 1;
  }
  return n;
}

export interface VerdictView {
  label: string;
  tone: 'good' | 'bad';
  gapText: string;
  aggregateText: string;
  neededText: string;
}

export function verdictView(outcome: RunOutcome): VerdictView {
  const needed = outcome.projection;
  let neededText = 'no extrapolation available';
  if (needed) {
    if (needed.status === 'OK' && needed.needed === 0) {
      neededText = 'target met at the current sample count';
    } else if (needed.status === 'OK') {
      neededText = `~${needed.needed} more training samples to reach the target`;
    } else if (needed.status === 'UNTRUSTWORTHY') {
      neededText = `extrapolation untrustworthy (nominally ${needed.needed} more samples)`;
    } else {
      neededText = 'target unreachable under the fitted trend';
    }
  }
  return {
    label: outcome.verdict,
    tone: outcome.verdict === 'REALISTIC' ? 'good' : 'bad',
    gapText: `${outcome.gap >= 0 ? '+' : ''}${outcome.gap.toFixed(4)}`,
    aggregateText: outcome.aggregate.toFixed(4),
    neededText,
  };
}

export function formatDollars(amount: number): string {
  return `$${amount.toFixed(2)}`;
}

export const LABEL_COST_PRESETS: Record<string, number> = {
  free: 0,
  cheap: 0.002,
  expensive: 0.02,
};

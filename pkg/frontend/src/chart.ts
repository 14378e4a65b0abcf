/** SVG rendering of a chart model. Pure string generation, no DOM needed. */

import type { ChartModel, ChartSeries } from './model.js';

const PALETTE = ['#2563eb', '#dc2626', '#059669', '#d97706', '#7c3aed',
  '#0891b2', '#be185d', '#4d7c0f'];

export interface ChartLayout {
  width: number;
  height: number;
  margin: { top: number; right: number; bottom: number; left: number };
}

export const DEFAULT_LAYOUT: ChartLayout = {
  width: 760,
  height: 420,
  margin: { top: 16, right: 150, bottom: 36, left: 56 },
};

function scales(model: ChartModel, layout: ChartLayout) {
  const { width, height, margin } = layout;
  const plotW = width - margin.left - margin.right;
  const plotH = height - margin.top - margin.bottom;
  const sx = (x: number) => margin.left + (x / model.xMax) * plotW;
  const sy = (y: number) => margin.top + plotH - (y / model.yMax) * plotH;
  return { sx, sy, plotW, plotH };
}

function polylinePoints(series: { x: number; y: number }[],
                        sx: (x: number) => number,
                        sy: (y: number) => number): string {
  return series.map((p) => `${sx(p.x).toFixed(1)},${sy(p.y).toFixed(1)}`).join(' ');
}

function seriesElement(s: ChartSeries, color: string,
                       sx: (x: number) => number, sy: (y: number) => number): string {
  const pts = polylinePoints(s.points, sx, sy);
  const cls = s.eliminatedRound === null ? 'series' : 'series eliminated';
  let marker = '';
  if (s.eliminatedRound !== null && s.points.length > 0) {
    const last = s.points[s.points.length - 1];
    marker = `<text class="eliminated-marker" x="${(sx(last.x) + 4).toFixed(1)}" ` +
      `y="${sy(last.y).toFixed(1)}" fill="${color}" font-size="10">` +
      `eliminated round ${s.eliminatedRound}</text>`;
  }
  const dash = s.eliminatedRound === null ? '' : ' stroke-dasharray="2 3"';
  return `<polyline class="${cls}" data-arm="${s.armId}" points="${pts}" ` +
    `fill="none" stroke="${color}" stroke-width="${s.isWinner ? 2.5 : 1.5}"${dash}/>` +
    marker;
}

/** Render the convergence chart: one polyline per arm, a horizontal target
 * line, and a dashed extrapolation overlay. */
export function renderChart(model: ChartModel,
                            layout: ChartLayout = DEFAULT_LAYOUT): string {
  const { width, height, margin } = layout;
  const { sx, sy, plotW } = scales(model, layout);
  const parts: string[] = [];
  parts.push(`<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" ` +
    `class="convergence-chart" role="img">`);

  // axes
  const x0 = margin.left;
  const y0 = sy(0);
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x0 + plotW}" y2="${y0}" stroke="#888"/>`);
  parts.push(`<line x1="${x0}" y1="${sy(model.yMax)}" x2="${x0}" y2="${y0}" stroke="#888"/>`);
  for (const frac of [0, 0.25, 0.5, 0.75, 1]) {
    const y = model.yMax * frac;
    parts.push(`<text x="${x0 - 6}" y="${sy(y).toFixed(1)}" text-anchor="end" ` +
      `font-size="10" fill="#555">${y.toFixed(3)}</text>`);
    const x = model.xMax * frac;
    parts.push(`<text x="${sx(x).toFixed(1)}" y="${y0 + 16}" text-anchor="middle" ` +
      `font-size="10" fill="#555">${Math.round(x)}</text>`);
  }
  parts.push(`<text x="${x0 + plotW / 2}" y="${height - 4}" text-anchor="middle" ` +
    `font-size="11" fill="#333">training samples consumed</text>`);

  // target error line
  const ty = sy(model.targetY);
  parts.push(`<line class="target-line" x1="${x0}" y1="${ty.toFixed(1)}" ` +
    `x2="${x0 + plotW}" y2="${ty.toFixed(1)}" stroke="#111" stroke-width="1" ` +
    `stroke-dasharray="6 3"/>`);
  parts.push(`<text x="${x0 + plotW + 4}" y="${ty.toFixed(1)}" font-size="10" ` +
    `fill="#111">target error ${model.targetY.toFixed(3)}</text>`);

  // per-arm series + legend
  model.series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    parts.push(seriesElement(s, color, sx, sy));
    const ly = margin.top + 14 * i + 10;
    parts.push(`<rect x="${x0 + plotW + 8}" y="${ly - 8}" width="10" height="3" fill="${color}"/>`);
    parts.push(`<text x="${x0 + plotW + 22}" y="${ly}" font-size="10" fill="#333">` +
      `${s.armId}${s.isWinner ? ' *' : ''}</text>`);
  });

  // extrapolation overlay
  if (model.overlay.length > 1) {
    parts.push(`<polyline class="extrapolation-overlay" ` +
      `points="${polylinePoints(model.overlay, sx, sy)}" fill="none" ` +
      `stroke="#555" stroke-width="1" stroke-dasharray="4 4"/>`);
  }

  parts.push('</svg>');
  return parts.join('');
}

/** Placeholder shown before any run exists. */
export function renderPlaceholder(): string {
  return '<div class="chart-placeholder">no study run yet - press ' +
    '<strong>run study</strong> to populate the convergence chart</div>';
}

/** DOM wiring for the dashboard.
 *
 * Every figure on screen comes from a service response; label cleaning and
 * what-if previews go through the HTTP API, never local recomputation.
 * Mutations run one at a time; the verdict only changes after the refreshed
 * result arrives (no optimistic UI).
 */

import { ApiError, SnoopyClient } from './api.js';
import {
  buildChartModel,
  cleanedFraction,
  countNoisy,
  formatDollars,
  LABEL_COST_PRESETS,
  planCleanStep,
  SeriesKind,
  verdictView,
} from './model.js';
import { renderChart, renderPlaceholder } from './chart.js';
import type { RunOutcome } from './types.js';

const POLL_MS = 2500;

interface AppState {
  client: SnoopyClient;
  sessionId: string | null;
  outcome: RunOutcome | null;
  seriesKind: SeriesKind;
  cleanRegistry: number[] | null;
  initialNoisy: number;
  nTotal: number;
  mutationInFlight: boolean;
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function showError(message: string | null): void {
  const banner = el<HTMLDivElement>('error-banner');
  banner.textContent = message ?? '';
  banner.style.display = message ? 'block' : 'none';
}

async function guard<T>(state: AppState, action: () => Promise<T>): Promise<T | null> {
  try {
    const out = await action();
    showError(null);
    return out;
  } catch (err) {
    showError(err instanceof ApiError ? `${err.code}: ${err.message}` : String(err));
    return null;
  }
}

async function refreshSessions(state: AppState): Promise<void> {
  const listing = await guard(state, () => state.client.listSessions());
  if (!listing) return;
  const select = el<HTMLSelectElement>('session-select');
  select.innerHTML = listing.sessions
    .map((id) => `<option value="${id}">${id}</option>`)
    .join('');
}

async function refreshResultPanels(state: AppState): Promise<void> {
  if (!state.sessionId) return;
  const id = state.sessionId;
  const outcome = await guard(state, () => state.client.result(id));
  if (!outcome) return;
  state.outcome = outcome;
  const view = verdictView(outcome);
  const badge = el<HTMLSpanElement>('verdict-badge');
  badge.textContent = view.label;
  badge.className = `badge ${view.tone}`;
  el('aggregate-value').textContent = view.aggregateText;
  el('gap-value').textContent = view.gapText;
  el('needed-value').textContent = view.neededText;
  el('winner-value').textContent = outcome.winner;

  const curves = await guard(state, () => state.client.curves(id));
  if (curves) {
    el('chart-host').innerHTML = renderChart(buildChartModel(curves, state.seriesKind));
  }
  await refreshCosts(state);
  await refreshCleanPanel(state);
}

async function refreshCosts(state: AppState): Promise<void> {
  if (!state.sessionId) return;
  const id = state.sessionId;
  const costs = await guard(state, () => state.client.costs(id));
  if (!costs) return;
  el('cost-labels').textContent = formatDollars(costs.label_dollars);
  el('cost-machine').textContent = formatDollars(costs.machine_dollars);
  el('cost-total').textContent = formatDollars(costs.total_dollars);
}

async function refreshCleanPanel(state: AppState): Promise<void> {
  const button = el<HTMLButtonElement>('clean-step');
  if (!state.sessionId || !state.cleanRegistry || !state.outcome) {
    button.disabled = true;
    el('clean-progress').textContent = state.cleanRegistry
      ? 'run the study first'
      : 'register clean labels (JSON array) to enable simulated cleaning';
    return;
  }
  const id = state.sessionId;
  const labels = await guard(state, () => state.client.labels(id));
  if (!labels) return;
  const remaining = countNoisy(state.cleanRegistry, labels.labels);
  if (state.initialNoisy === 0) state.initialNoisy = remaining;
  const done = cleanedFraction(state.cleanRegistry, labels.labels, state.initialNoisy);
  button.disabled = remaining === 0 || state.mutationInFlight;
  el('clean-progress').textContent =
    `${remaining} noisy labels remaining (${(done * 100).toFixed(1)}% of the ` +
    'registered noise cleaned)';
}

async function onLoadSession(state: AppState): Promise<void> {
  const id = el<HTMLSelectElement>('session-select').value
    || el<HTMLInputElement>('session-id').value.trim();
  if (!id) return;
  state.sessionId = id;
  state.outcome = null;
  state.initialNoisy = 0;
  const status = await guard(state, () => state.client.status(id));
  if (!status) return;
  state.nTotal = status.n_train + status.n_test;
  el('session-meta').textContent =
    `${status.session_id}: ${status.transformations.length} transformation(s), ` +
    `${status.n_train}/${status.n_test} train/test, target ${status.target_accuracy}`;
  if (status.status === 'DONE') {
    await refreshResultPanels(state);
  } else {
    el('chart-host').innerHTML = renderPlaceholder();
  }
}

async function onRun(state: AppState): Promise<void> {
  if (!state.sessionId || state.mutationInFlight) return;
  state.mutationInFlight = true;
  el<HTMLButtonElement>('run-study').disabled = true;
  try {
    const id = state.sessionId;
    const outcome = await guard(state, () => state.client.run(id));
    if (outcome) await refreshResultPanels(state);
  } finally {
    state.mutationInFlight = false;
    el<HTMLButtonElement>('run-study').disabled = false;
  }
}

async function onCleanStep(state: AppState): Promise<void> {
  if (!state.sessionId || !state.cleanRegistry || state.mutationInFlight) return;
  state.mutationInFlight = true;
  try {
    const id = state.sessionId;
    const fraction = Number(el<HTMLInputElement>('step-fraction').value);
    const labels = await guard(state, () => state.client.labels(id));
    if (!labels) return;
    const registry = state.cleanRegistry;
    const edits = planCleanStep(registry, labels.labels, fraction);
    if (edits.length > 0) {
      const applied = await guard(state, () => state.client.editLabels(id, edits));
      if (!applied) return;
    }
    await refreshResultPanels(state);
  } finally {
    state.mutationInFlight = false;
  }
}

async function onWhatIf(state: AppState): Promise<void> {
  if (!state.sessionId || !state.outcome) return;
  const id = state.sessionId;
  const fraction = Number(el<HTMLInputElement>('whatif-slider').value) / 100;
  el('whatif-fraction').textContent = `${(fraction * 100).toFixed(0)}%`;
  const prediction = await guard(state, () => state.client.whatIf(id, fraction));
  if (!prediction) return;
  el('whatif-estimate').textContent = prediction.predicted_estimate.toFixed(4);
  el('whatif-verdict').textContent = prediction.predicted_verdict;
  // dollar preview: the session's own cost model, or a preset re-pricing of
  // the same label count
  const preset = el<HTMLSelectElement>('whatif-cost-preset').value;
  const dollars = preset === 'session'
    ? prediction.label_cost_dollars
    : (LABEL_COST_PRESETS[preset] ?? 0) * fraction * state.nTotal;
  el('whatif-cost').textContent = formatDollars(dollars);
}

function wire(): void {
  const params = new URLSearchParams(window.location.search);
  const base = params.get('api') ?? window.location.origin;
  const state: AppState = {
    client: new SnoopyClient(base),
    sessionId: null,
    outcome: null,
    seriesKind: 'ber_estimate',
    cleanRegistry: null,
    initialNoisy: 0,
    nTotal: 0,
    mutationInFlight: false,
  };

  el('refresh-sessions').addEventListener('click', () => void refreshSessions(state));
  el('load-session').addEventListener('click', () => void onLoadSession(state));
  el('run-study').addEventListener('click', () => void onRun(state));
  el('clean-step').addEventListener('click', () => void onCleanStep(state));
  el('whatif-slider').addEventListener('input', () => void onWhatIf(state));
  el('whatif-cost-preset').addEventListener('change', () => void onWhatIf(state));

  el<HTMLSelectElement>('series-kind').addEventListener('change', (ev) => {
    state.seriesKind = (ev.target as HTMLSelectElement).value as SeriesKind;
    void refreshResultPanels(state);
  });

  el<HTMLInputElement>('clean-registry').addEventListener('change', async (ev) => {
    const input = ev.target as HTMLInputElement;
    const file = input.files?.[0];
    if (!file) return;
    const parsed = JSON.parse(await file.text());
    if (!Array.isArray(parsed)) {
      showError('clean-label registry must be a JSON array of labels');
      return;
    }
    state.cleanRegistry = parsed as number[];
    state.initialNoisy = 0;
    await refreshCleanPanel(state);
  });

  window.setInterval(() => {
    if (state.sessionId && state.outcome && !state.mutationInFlight) {
      void refreshCosts(state);
    }
  }, POLL_MS);

  void refreshSessions(state);
  el('chart-host').innerHTML = renderPlaceholder();
}

document.addEventListener('DOMContentLoaded', wire);

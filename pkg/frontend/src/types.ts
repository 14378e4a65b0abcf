/** Wire types mirroring the session service's JSON payloads. */

export type Verdict = 'REALISTIC' | 'UNREALISTIC';

export interface BerEstimate {
  transformation_id: string;
  err_1nn: number;
  value: number;
  n_used: number;
}

export interface StudyResult {
  per_arm: BerEstimate[];
  aggregate: number;
  winner: string;
  verdict: Verdict;
  target_accuracy: number;
  gap: number;
}

export interface ExtrapolationFit {
  alpha: number;
  intercept: number;
  fit_points: number;
  residual: number;
}

export interface SampleProjection {
  status: 'OK' | 'UNREACHABLE' | 'UNTRUSTWORTHY';
  needed: number | null;
  n_star: number | null;
}

export interface RunOutcome extends StudyResult {
  scheduler: {
    strategy: string;
    budget: number;
    winner: string;
    total_pulls: number;
    tangent_break_count: number;
  };
  extrapolation: ExtrapolationFit | null;
  projection: SampleProjection | null;
}

export interface CurvePoint {
  n_consumed: number;
  err_1nn: number;
  ber_estimate: number;
}

export interface ArmCurve {
  metric: string;
  eliminated_round: number | null;
  points: CurvePoint[];
}

export interface OverlayPoint {
  n: number;
  err: number;
  estimate: number;
}

export interface CurvesPayload {
  session_id: string;
  winner: string;
  target_error: number;
  arms: Record<string, ArmCurve>;
  extrapolation_overlay: OverlayPoint[];
}

export interface CostEntry {
  kind: 'labels' | 'machine';
  quantity: number;
  unit_cost: number;
  dollars: number;
  time: number;
}

export interface CostsPayload {
  entries: CostEntry[];
  label_dollars: number;
  machine_dollars: number;
  total_dollars: number;
  total_cents: number;
  cost_model: { label_cost: number; machine_cost: number };
}

export interface WhatIfPayload {
  clean_fraction: number;
  assumed_base_ber: number;
  rho_hat: number;
  predicted_estimate: number;
  predicted_verdict: Verdict;
  label_cost_dollars: number;
}

export interface SessionStatus {
  session_id: string;
  status: string;
  n_train: number;
  n_test: number;
  target_accuracy: number;
  strategy: string;
  transformations: string[];
}

export interface LabelsPayload {
  n_train: number;
  n_test: number;
  n_classes: number;
  labels: number[];
}

export interface LabelEdit {
  index: number;
  new_label: number;
}

export interface ApiErrorBody {
  code: string;
  message: string;
  detail: unknown;
}

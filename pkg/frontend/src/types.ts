// Wire types mirroring the /v1 JSON API. The console renders these fields
// verbatim; it never recomputes a statistic client-side.

export type BoundaryParams = { lambda: number; gamma: number };

export type DesignRef = {
  schedule: number[];
  phi: number;
  prior?: { mean: number; variance: number };
  efficacy: BoundaryParams;
  toxicity?: BoundaryParams;
  delta?: number;
};

export type WltCounts = {
  n_win: number;
  n_loss: number;
  n_tie: number;
  n_treat: number;
  n_ctrl: number;
};

export type ToxCounts = { y1: number; n1: number; y0: number; n0: number };

export type AnalysisEntry = { wlt: WltCounts; tox?: ToxCounts };

export type DecideRequest = {
  design: DesignRef;
  r_current: number;
  wlt_history: WltCounts[];
  tox_history?: ToxCounts[];
};

export type BoundaryAt = {
  futility: number | null;
  superiority: number | null;
  final: number | null;
};

export type DecideResponse = {
  decision: string;
  phase: "efficacy" | "toxicity";
  analysis_index: number;
  n_cum: number;
  pp_e: number;
  pp_trace_e: number[];
  boundary_e: BoundaryAt;
  pp_t?: number;
  pp_trace_t?: number[];
  boundary_t?: BoundaryAt;
};

export type BoundaryRow = {
  analysis_index: number;
  n_cum: number;
  futility_pp: number;
  superiority_pp: number;
};

export type BoundariesResponse = {
  lambda: number;
  gamma: number;
  rows: BoundaryRow[];
};

export type JobRecord = {
  job_id: string;
  kind: string;
  status: "queued" | "running" | "done" | "failed";
  progress: number;
  result_ref: string | null;
  error?: string | null;
  result?: CalibrationJobResult | SimulationJobResult;
};

export type CalibrationSection = {
  lambda_opt: number;
  gamma_opt: number;
  poe_null: number;
  poe_alt: number;
  expected_n_null: number;
  expected_n_alt: number;
  feasible_count: number;
};

export type CalibrationJobResult = {
  schema_version: number;
  seed: number;
  efficacy: CalibrationSection;
  toxicity?: CalibrationSection;
};

export type SimulationRow = {
  scenario: string;
  method: string;
  n_trials: number;
  reject_rate_e: number;
  fwer: number | null;
  pcs: number;
  expected_n: number;
};

export type SimulationJobResult = { schema_version: number; rows: SimulationRow[] };

export const TERMINAL_DECISIONS = new Set([
  "stop_futility",
  "stop_superiority",
  "effective",
  "ineffective",
  "success",
  "fail_toxicity",
  "fail_efficacy",
]);

export function isTerminal(decision: string): boolean {
  return TERMINAL_DECISIONS.has(decision);
}

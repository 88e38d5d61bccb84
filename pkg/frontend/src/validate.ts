// Client-side validation of the design form; the submit button stays
// disabled until every check passes. The server re-validates everything.

import type { DesignDraft } from "./state.js";

export type ValidationResult = {
  ok: boolean;
  errors: Partial<Record<keyof DesignDraft, string>>;
};

function parseNumber(raw: string): number | null {
  const value = Number(raw.trim());
  return Number.isFinite(value) ? value : null;
}

export function parseRatePair(raw: string): [number, number] | null {
  const parts = raw.split(",").map((p) => Number(p.trim()));
  if (parts.length !== 2 || parts.some((v) => !Number.isFinite(v))) return null;
  if (parts.some((v) => v <= 0 || v >= 1)) return null;
  return [parts[0]!, parts[1]!];
}

export function parseSchedule(raw: string): number[] | null {
  const parts = raw.split(",").map((p) => Number(p.trim()));
  if (parts.length === 0 || parts.some((v) => !Number.isInteger(v) || v <= 1)) {
    return null;
  }
  for (let i = 1; i < parts.length; i++) {
    if (parts[i]! <= parts[i - 1]!) return null;
  }
  return parts;
}

export function validateDraft(draft: DesignDraft): ValidationResult {
  const errors: ValidationResult["errors"] = {};

  const alpha = parseNumber(draft.alpha);
  if (alpha === null || alpha <= 0 || alpha >= 1) {
    errors.alpha = "alpha must lie strictly between 0 and 1";
  }
  const phi = parseNumber(draft.phi);
  if (phi === null || phi <= 0 || phi >= 1) {
    errors.phi = "randomization fraction must lie strictly between 0 and 1";
  }
  if (parseSchedule(draft.schedule) === null) {
    errors.schedule = "enrollment schedule must be strictly increasing integers";
  }
  for (const key of ["qE0", "qE1Null", "qE1Alt"] as const) {
    if (parseRatePair(draft[key]) === null) {
      errors[key] = "expected two rates in (0,1), e.g. 0.40, 0.30";
    }
  }
  const nPaths = parseNumber(draft.nPaths);
  if (nPaths === null || !Number.isInteger(nPaths) || nPaths < 1000) {
    errors.nPaths = "need at least 1000 calibration paths";
  }
  const seed = parseNumber(draft.seed);
  if (seed === null || !Number.isInteger(seed) || seed < 0) {
    errors.seed = "seed must be a nonnegative integer";
  }
  if (draft.monitorToxicity) {
    const delta = parseNumber(draft.delta);
    if (delta === null || delta <= 0 || delta >= 1) {
      errors.delta = "margin must lie strictly between 0 and 1";
    }
    const qt0 = parseNumber(draft.qT0Null);
    const qt1 = parseNumber(draft.qT1Alt);
    if (qt0 === null || qt0 <= 0 || qt0 >= 1) {
      errors.qT0Null = "rate must lie strictly between 0 and 1";
    }
    if (qt1 === null || qt1 <= 0 || qt1 >= 1) {
      errors.qT1Alt = "rate must lie strictly between 0 and 1";
    }
    if (delta !== null && qt0 !== null && qt0 + delta >= 1) {
      errors.qT0Null = "control rate plus margin must stay below 1";
    }
  }
  return { ok: Object.keys(errors).length === 0, errors };
}

export function draftToConfig(draft: DesignDraft): Record<string, unknown> {
  const design: Record<string, unknown> = {
    alpha: Number(draft.alpha),
    phi: Number(draft.phi),
    schedule: parseSchedule(draft.schedule),
    targets_from_scenario: {
      q_e0: parseRatePair(draft.qE0),
      q_e1_null: parseRatePair(draft.qE1Null),
      q_e1_alt: parseRatePair(draft.qE1Alt),
    },
    n_paths: Number(draft.nPaths),
  };
  if (draft.monitorToxicity) {
    design.toxicity = {
      delta: Number(draft.delta),
      q_t0_null: Number(draft.qT0Null),
      q_t1_alt: Number(draft.qT1Alt),
    };
  }
  return {
    schema_version: 1,
    design,
    seeds: { master: Number(draft.seed) },
  };
}

// counts for one analysis must be consistent with the schedule's arm sizes
export function expectedArmSizes(schedule: number[], phi: number,
                                 analysisIndex: number): [number, number] {
  const n = schedule[analysisIndex - 1];
  if (n === undefined) throw new Error(`analysis ${analysisIndex} outside schedule`);
  const nTreat = Math.round(phi * n);
  return [nTreat, n - nTreat];
}

export function validateCounts(nWin: number, nLoss: number, nTie: number,
                               nTreat: number, nCtrl: number): string | null {
  const values = [nWin, nLoss, nTie];
  if (values.some((v) => !Number.isInteger(v) || v < 0)) {
    return "counts must be nonnegative integers";
  }
  if (nWin + nLoss + nTie !== nTreat * nCtrl) {
    return `counts must sum to ${nTreat}x${nCtrl} = ${nTreat * nCtrl} comparisons`;
  }
  return null;
}

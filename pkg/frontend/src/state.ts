// Browser-storage-backed app state. Interim analyses are weeks apart, so a
// monitoring session must survive reloads; history is append-only except for
// an explicit undo of the most recent entry.

import type { AnalysisEntry, DecideResponse, DesignRef } from "./types.js";

export type DesignDraft = {
  alpha: string;
  phi: string;
  schedule: string; // comma-separated
  qE0: string; // "0.40, 0.30"
  qE1Null: string;
  qE1Alt: string;
  nPaths: string;
  seed: string;
  monitorToxicity: boolean;
  delta: string;
  qT0Null: string;
  qT1Alt: string;
};

export type MonitoringSession = {
  design: DesignRef;
  entries: AnalysisEntry[];
  responses: DecideResponse[];
};

const DRAFT_KEY = "bmw.design.draft";
const SESSION_KEY = "bmw.monitor.session";

export const DEFAULT_DRAFT: DesignDraft = {
  alpha: "0.1",
  phi: "0.5",
  schedule: "80, 120, 160",
  qE0: "0.40, 0.30",
  qE1Null: "0.40, 0.30",
  qE1Alt: "0.40, 0.66",
  nPaths: "5000",
  seed: "20260810",
  monitorToxicity: true,
  delta: "0.1",
  qT0Null: "0.30",
  qT1Alt: "0.30",
};

export function loadDraft(storage: Storage = localStorage): DesignDraft {
  const raw = storage.getItem(DRAFT_KEY);
  if (!raw) return { ...DEFAULT_DRAFT };
  try {
    return { ...DEFAULT_DRAFT, ...(JSON.parse(raw) as Partial<DesignDraft>) };
  } catch {
    return { ...DEFAULT_DRAFT };
  }
}

export function saveDraft(draft: DesignDraft, storage: Storage = localStorage): void {
  storage.setItem(DRAFT_KEY, JSON.stringify(draft));
}

export function loadSession(storage: Storage = localStorage): MonitoringSession | null {
  const raw = storage.getItem(SESSION_KEY);
  if (!raw) return null;
  try {
    const parsed = JSON.parse(raw) as MonitoringSession;
    if (!parsed.design || !Array.isArray(parsed.entries)) return null;
    return parsed;
  } catch {
    return null;
  }
}

export function saveSession(session: MonitoringSession | null,
                            storage: Storage = localStorage): void {
  if (session === null) {
    storage.removeItem(SESSION_KEY);
  } else {
    storage.setItem(SESSION_KEY, JSON.stringify(session));
  }
}

export function newSession(design: DesignRef): MonitoringSession {
  return { design, entries: [], responses: [] };
}

export function appendAnalysis(session: MonitoringSession, entry: AnalysisEntry,
                               response: DecideResponse): MonitoringSession {
  return {
    design: session.design,
    entries: [...session.entries, entry],
    responses: [...session.responses, response],
  };
}

export function removeLastAnalysis(session: MonitoringSession): MonitoringSession {
  return {
    design: session.design,
    entries: session.entries.slice(0, -1),
    responses: session.responses.slice(0, -1),
  };
}

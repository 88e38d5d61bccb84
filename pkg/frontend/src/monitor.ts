// Interim monitoring route: enter accumulated counts per analysis, send them
// to /v1/decide, and render the returned decision verbatim. The card's
// data-* attributes carry the exact response fields (the display rounds for
// readability only); tests assert on the attributes.

import * as defaultApi from "./api.js";
import { renderPpChart } from "./chart.js";
import {
  MonitoringSession,
  appendAnalysis,
  newSession,
  removeLastAnalysis,
  saveSession,
} from "./state.js";
import type {
  AnalysisEntry,
  BoundaryAt,
  DecideRequest,
  DecideResponse,
  DesignRef,
} from "./types.js";
import { isTerminal } from "./types.js";
import { expectedArmSizes, validateCounts } from "./validate.js";

type DecideFn = (req: DecideRequest) => Promise<DecideResponse>;

const DECISION_LABELS: Record<string, string> = {
  continue: "Continue enrollment",
  stop_futility: "Stop: futility",
  stop_superiority: "Stop: superiority",
  effective: "Effective",
  ineffective: "Ineffective",
  success: "Success",
  fail_toxicity: "Failure: toxicity",
  fail_efficacy: "Failure: ineffectiveness",
};

export class MonitorView {
  readonly root: HTMLElement;
  session: MonitoringSession;
  private readonly decideFn: DecideFn;
  private readonly storage: Storage;

  constructor(root: HTMLElement, design: DesignRef,
              options: { decideFn?: DecideFn; storage?: Storage;
                         session?: MonitoringSession } = {}) {
    this.root = root;
    this.decideFn = options.decideFn ?? defaultApi.decide;
    this.storage = options.storage ?? localStorage;
    this.session = options.session ?? newSession(design);
    this.render();
  }

  get currentAnalysis(): number {
    return this.session.entries.length + 1;
  }

  get lastResponse(): DecideResponse | null {
    return this.session.responses[this.session.responses.length - 1] ?? null;
  }

  buildRequest(entry: AnalysisEntry): DecideRequest {
    const entries = [...this.session.entries, entry];
    const req: DecideRequest = {
      design: this.session.design,
      r_current: entries.length,
      wlt_history: entries.map((e) => e.wlt),
    };
    if (this.session.design.toxicity) {
      req.tox_history = entries.map((e) => {
        if (!e.tox) throw new Error("toxicity counts required by this design");
        return e.tox;
      });
    }
    return req;
  }

  async addAnalysis(entry: AnalysisEntry): Promise<DecideResponse> {
    const response = await this.decideFn(this.buildRequest(entry));
    this.session = appendAnalysis(this.session, entry, response);
    saveSession(this.session, this.storage);
    this.render();
    return response;
  }

  removeLast(): void {
    this.session = removeLastAnalysis(this.session);
    saveSession(this.session, this.storage);
    this.render();
  }

  render(): void {
    this.root.textContent = "";
    const last = this.lastResponse;
    this.root.appendChild(this.renderCard(last));
    if (last) {
      this.root.appendChild(this.renderCharts(last));
    }
    this.root.appendChild(this.renderEntryForm());
  }

  private renderCard(last: DecideResponse | null): HTMLElement {
    const card = document.createElement("section");
    card.className = "decision-card";
    card.dataset.phase = last?.phase ?? "efficacy";
    if (!last) {
      card.innerHTML = `<h2>Monitoring</h2>
        <p>No analyses entered yet. Add the first interim analysis below.</p>`;
      return card;
    }
    card.dataset.decision = last.decision;
    card.dataset.ppE = String(last.pp_e);
    if (last.pp_t !== undefined) card.dataset.ppT = String(last.pp_t);
    const boundLines = (label: string, b: BoundaryAt) => {
      if (b.final !== null) {
        return `<dt>${label} final threshold</dt><dd>${fmt(b.final)}</dd>`;
      }
      return `<dt>${label} futility / superiority</dt>
              <dd>${fmt(b.futility)} / ${fmt(b.superiority)}</dd>`;
    };
    card.innerHTML = `
      <h2>Analysis ${last.analysis_index} (n = ${last.n_cum})</h2>
      <p class="decision ${isTerminal(last.decision) ? "terminal" : ""}">
        ${DECISION_LABELS[last.decision] ?? last.decision}</p>
      <p class="phase-badge">phase: ${last.phase}</p>
      <dl>
        <dt>Posterior probability (efficacy)</dt><dd class="pp-e">${fmt(last.pp_e)}</dd>
        ${boundLines("Efficacy", last.boundary_e)}
        ${last.pp_t !== undefined
          ? `<dt>Posterior probability (toxicity)</dt><dd class="pp-t">${fmt(last.pp_t)}</dd>`
          : ""}
        ${last.boundary_t ? boundLines("Toxicity", last.boundary_t) : ""}
      </dl>`;
    return card;
  }

  private renderCharts(last: DecideResponse): HTMLElement {
    const wrap = document.createElement("section");
    wrap.className = "charts";
    const design = this.session.design;
    const effDiv = document.createElement("div");
    effDiv.className = "chart chart-e";
    wrap.appendChild(effDiv);
    renderPpChart(effDiv, {
      nCum: design.schedule,
      ...this.boundaryCurves(last, "efficacy"),
      ppTrace: last.pp_trace_e,
    });
    if (last.pp_trace_t && last.boundary_t) {
      const toxDiv = document.createElement("div");
      toxDiv.className = "chart chart-t";
      wrap.appendChild(toxDiv);
      renderPpChart(toxDiv, {
        nCum: design.schedule,
        ...this.boundaryCurves(last, "toxicity"),
        ppTrace: last.pp_trace_t,
      });
    }
    return wrap;
  }

  // Rebuild the full step curves from per-analysis decide responses only
  // (no client-side boundary math): each response reported the boundary at
  // its own analysis, so the trace of responses carries the whole curve.
  private boundaryCurves(last: DecideResponse, kind: "efficacy" | "toxicity") {
    const R = this.session.design.schedule.length;
    const futility: (number | null)[] = new Array(R).fill(null);
    const superiority: (number | null)[] = new Array(R).fill(null);
    let finalThreshold: number | null = null;
    for (const resp of this.session.responses) {
      const b = kind === "efficacy" ? resp.boundary_e : resp.boundary_t;
      if (!b) continue;
      const idx = resp.analysis_index - 1;
      if (b.final !== null) {
        finalThreshold = b.final;
      } else {
        futility[idx] = b.futility;
        superiority[idx] = b.superiority;
      }
    }
    return { futility, superiority, finalThreshold };
  }

  private renderEntryForm(): HTMLElement {
    const design = this.session.design;
    const form = document.createElement("form");
    form.className = "analysis-entry";
    const r = this.currentAnalysis;
    const done = this.lastResponse !== null && isTerminal(this.lastResponse.decision);
    const pastEnd = r > design.schedule.length;
    if (done || pastEnd) {
      form.innerHTML = `<p>${done ? "Trial concluded." : "Schedule exhausted."}</p>`;
      const undo = document.createElement("button");
      undo.type = "button";
      undo.className = "undo";
      undo.textContent = "Remove last analysis";
      undo.addEventListener("click", () => this.removeLast());
      form.appendChild(undo);
      return form;
    }
    const [nTreat, nCtrl] = expectedArmSizes(design.schedule, design.phi, r);
    const toxFields = design.toxicity
      ? `<label>Toxicity events, treatment <input name="y1" type="number" min="0" max="${nTreat}" required></label>
         <label>Toxicity events, control <input name="y0" type="number" min="0" max="${nCtrl}" required></label>`
      : "";
    form.innerHTML = `
      <h3>Enter analysis ${r} (cumulative counts at n = ${design.schedule[r - 1]},
          arms ${nTreat}/${nCtrl})</h3>
      <label>Wins <input name="n_win" type="number" min="0" required></label>
      <label>Losses <input name="n_loss" type="number" min="0" required></label>
      <label>Ties <input name="n_tie" type="number" min="0" required></label>
      ${toxFields}
      <p class="entry-error" role="alert"></p>
      <button type="submit">Evaluate</button>
      ${this.session.entries.length ? '<button type="button" class="undo">Remove last analysis</button>' : ""}`;
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.submitForm(form, nTreat, nCtrl);
    });
    form.querySelector("button.undo")?.addEventListener("click", () => this.removeLast());
    return form;
  }

  private async submitForm(form: HTMLFormElement, nTreat: number, nCtrl: number) {
    const value = (name: string) =>
      Number((form.querySelector(`[name=${name}]`) as HTMLInputElement).value);
    const errorBox = form.querySelector(".entry-error") as HTMLElement;
    const nWin = value("n_win");
    const nLoss = value("n_loss");
    const nTie = value("n_tie");
    const problem = validateCounts(nWin, nLoss, nTie, nTreat, nCtrl);
    if (problem) {
      errorBox.textContent = problem;
      return;
    }
    const entry: AnalysisEntry = {
      wlt: { n_win: nWin, n_loss: nLoss, n_tie: nTie, n_treat: nTreat, n_ctrl: nCtrl },
    };
    if (this.session.design.toxicity) {
      entry.tox = { y1: value("y1"), n1: nTreat, y0: value("y0"), n0: nCtrl };
    }
    try {
      await this.addAnalysis(entry);
    } catch (err) {
      errorBox.textContent = err instanceof Error ? err.message : String(err);
    }
  }
}

function fmt(value: number | null): string {
  return value === null ? "-" : value.toFixed(4);
}

// Design route: a calibration wizard. The form builds a config document,
// submits a calibration job, polls it, then renders the selected boundary
// parameters, the per-analysis threshold tables (fetched from the server),
// and the calibration's operating summary. A follow-up simulation job adds
// raw-trial operating characteristics.

import * as defaultApi from "./api.js";
import { DesignDraft, loadDraft, saveDraft } from "./state.js";
import type {
  BoundariesResponse,
  CalibrationJobResult,
  CalibrationSection,
  JobRecord,
  SimulationJobResult,
} from "./types.js";
import { draftToConfig, parseRatePair, parseSchedule, validateDraft } from "./validate.js";

type Api = {
  submitCalibrate: typeof defaultApi.submitCalibrate;
  submitSimulate: typeof defaultApi.submitSimulate;
  pollJob: typeof defaultApi.pollJob;
  boundaries: typeof defaultApi.boundaries;
};

const FIELDS: Array<{ key: keyof DesignDraft; label: string; tox?: boolean }> = [
  { key: "alpha", label: "Error level (alpha)" },
  { key: "phi", label: "Randomization fraction (phi)" },
  { key: "schedule", label: "Enrollment schedule" },
  { key: "qE0", label: "Control response rates" },
  { key: "qE1Null", label: "Treatment rates under the null" },
  { key: "qE1Alt", label: "Treatment rates under the alternative" },
  { key: "nPaths", label: "Calibration paths" },
  { key: "seed", label: "Seed" },
  { key: "delta", label: "Non-inferiority margin", tox: true },
  { key: "qT0Null", label: "Control toxicity rate", tox: true },
  { key: "qT1Alt", label: "Acceptable treatment toxicity rate", tox: true },
];

export class DesignView {
  readonly root: HTMLElement;
  draft: DesignDraft;
  private readonly api: Api;
  private readonly storage: Storage;

  constructor(root: HTMLElement,
              options: { api?: Partial<Api>; storage?: Storage } = {}) {
    this.root = root;
    this.api = {
      submitCalibrate: defaultApi.submitCalibrate,
      submitSimulate: defaultApi.submitSimulate,
      pollJob: defaultApi.pollJob,
      boundaries: defaultApi.boundaries,
      ...options.api,
    };
    this.storage = options.storage ?? localStorage;
    this.draft = loadDraft(this.storage);
    this.render();
  }

  render(): void {
    this.root.textContent = "";
    this.root.appendChild(this.renderForm());
    const results = document.createElement("section");
    results.className = "design-results";
    this.root.appendChild(results);
  }

  private renderForm(): HTMLElement {
    const form = document.createElement("form");
    form.className = "design-form";
    const rows = FIELDS.map(({ key, label, tox }) => `
      <label class="${tox ? "tox-field" : ""}">
        <span>${label}</span>
        <input name="${key}" value="${this.draft[key]}">
        <em class="field-error" data-for="${key}"></em>
      </label>`).join("");
    form.innerHTML = `
      <h2>Design a trial</h2>
      ${rows}
      <label><span>Monitor toxicity</span>
        <input type="checkbox" name="monitorToxicity"
               ${this.draft.monitorToxicity ? "checked" : ""}></label>
      <button type="submit">Calibrate</button>
      <p class="job-status" role="status"></p>`;
    const refresh = () => {
      this.draft = this.readDraft(form);
      saveDraft(this.draft, this.storage);
      this.applyValidation(form);
    };
    form.addEventListener("input", refresh);
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.calibrate(form);
    });
    queueMicrotask(() => this.applyValidation(form));
    return form;
  }

  private readDraft(form: HTMLFormElement): DesignDraft {
    const get = (name: string) =>
      (form.querySelector(`[name=${name}]`) as HTMLInputElement).value;
    return {
      alpha: get("alpha"),
      phi: get("phi"),
      schedule: get("schedule"),
      qE0: get("qE0"),
      qE1Null: get("qE1Null"),
      qE1Alt: get("qE1Alt"),
      nPaths: get("nPaths"),
      seed: get("seed"),
      monitorToxicity:
        (form.querySelector("[name=monitorToxicity]") as HTMLInputElement).checked,
      delta: get("delta"),
      qT0Null: get("qT0Null"),
      qT1Alt: get("qT1Alt"),
    };
  }

  applyValidation(form: HTMLFormElement): boolean {
    const { ok, errors } = validateDraft(this.draft);
    for (const box of form.querySelectorAll<HTMLElement>(".field-error")) {
      const key = box.dataset.for as keyof DesignDraft;
      box.textContent = errors[key] ?? "";
    }
    const submit = form.querySelector("button[type=submit]") as HTMLButtonElement;
    submit.disabled = !ok;
    return ok;
  }

  private status(form: HTMLFormElement, text: string): void {
    (form.querySelector(".job-status") as HTMLElement).textContent = text;
  }

  async calibrate(form: HTMLFormElement): Promise<void> {
    if (!this.applyValidation(form)) return;
    const config = draftToConfig(this.draft);
    this.status(form, "calibration queued...");
    try {
      const record = await this.api.submitCalibrate(config);
      const done = await this.api.pollJob(record.job_id, {
        onProgress: (r: JobRecord) =>
          this.status(form, `calibration ${r.status} (${Math.round(r.progress * 100)}%)`),
      });
      this.status(form, "calibration done");
      await this.showResult(done.result as CalibrationJobResult, config);
    } catch (err) {
      this.status(form, `calibration failed: ${err instanceof Error ? err.message : err}`);
    }
  }

  private async showResult(result: CalibrationJobResult,
                           config: Record<string, unknown>): Promise<void> {
    const box = this.root.querySelector(".design-results") as HTMLElement;
    box.textContent = "";
    const schedule = parseSchedule(this.draft.schedule)!;
    const phi = Number(this.draft.phi);
    const sections: Array<[string, CalibrationSection]> = [["efficacy", result.efficacy]];
    if (result.toxicity) sections.push(["toxicity", result.toxicity]);
    for (const [name, section] of sections) {
      const table = await this.api.boundaries(
        section.lambda_opt, section.gamma_opt, schedule, phi);
      box.appendChild(this.renderBoundaryTable(name, section, table));
    }
    box.appendChild(this.renderOcSummary(result));
    const simButton = document.createElement("button");
    simButton.type = "button";
    simButton.className = "run-simulation";
    simButton.textContent = "Simulate raw-trial operating characteristics";
    simButton.addEventListener("click", () => void this.simulate(config, box));
    box.appendChild(simButton);
  }

  private renderBoundaryTable(name: string, section: CalibrationSection,
                              table: BoundariesResponse): HTMLElement {
    const wrap = document.createElement("section");
    wrap.className = `boundaries boundaries-${name}`;
    wrap.dataset.lambda = String(section.lambda_opt);
    wrap.dataset.gamma = String(section.gamma_opt);
    const rows = table.rows.map((row) => `
      <tr><td>${row.analysis_index}</td><td>${row.n_cum}</td>
          <td>${row.futility_pp.toFixed(4)}</td>
          <td>${row.superiority_pp.toFixed(4)}</td></tr>`).join("");
    wrap.innerHTML = `
      <h3>${name} boundaries (lambda ${section.lambda_opt.toFixed(2)},
          gamma ${section.gamma_opt.toFixed(2)})</h3>
      <table>
        <thead><tr><th>analysis</th><th>n</th><th>futility PP</th>
                   <th>superiority PP</th></tr></thead>
        <tbody>${rows}</tbody>
      </table>
      <button type="button" class="export">Export CSV</button>`;
    wrap.querySelector("button.export")!.addEventListener("click", () => {
      const header = "analysis_index,n_cum,futility_pp,superiority_pp";
      const lines = table.rows.map((r) =>
        [r.analysis_index, r.n_cum, r.futility_pp, r.superiority_pp].join(","));
      downloadText(`${name}-boundaries.csv`, [header, ...lines].join("\n"));
    });
    return wrap;
  }

  private renderOcSummary(result: CalibrationJobResult): HTMLElement {
    const wrap = document.createElement("section");
    wrap.className = "oc-summary";
    const eff = result.efficacy;
    wrap.innerHTML = `
      <h3>Calibration summary</h3>
      <dl>
        <dt>Null rejection rate</dt><dd>${(100 * eff.poe_null).toFixed(1)}%</dd>
        <dt>Power</dt><dd>${(100 * eff.poe_alt).toFixed(1)}%</dd>
        <dt>Expected enrollment (null / alternative)</dt>
        <dd>${eff.expected_n_null.toFixed(1)} / ${eff.expected_n_alt.toFixed(1)}</dd>
      </dl>`;
    return wrap;
  }

  async simulate(config: Record<string, unknown>, box: HTMLElement): Promise<void> {
    const qE0 = parseRatePair(this.draft.qE0)!;
    const qE1Null = parseRatePair(this.draft.qE1Null)!;
    const qE1Alt = parseRatePair(this.draft.qE1Alt)!;
    const qt = this.draft.monitorToxicity ? Number(this.draft.qT0Null) : 0.3;
    const withScenarios = {
      ...config,
      scenarios: [
        { id: "null", q_e0: qE0, q_e1: qE1Null, q_t0: qt, q_t1: qt,
          efficacy_null: true, toxicity_null: false },
        { id: "alt", q_e0: qE0, q_e1: qE1Alt, q_t0: qt, q_t1: qt,
          efficacy_null: false, toxicity_null: false },
      ],
    };
    const record = await this.api.submitSimulate(withScenarios, ["bmw"], 2000);
    const done = await this.api.pollJob(record.job_id);
    const result = done.result as SimulationJobResult;
    const table = document.createElement("table");
    table.className = "simulation-rows";
    table.innerHTML = `
      <thead><tr><th>scenario</th><th>reject %</th><th>E[n]</th></tr></thead>
      <tbody>${result.rows.map((r) => `
        <tr><td>${r.scenario}</td>
            <td>${(100 * r.reject_rate_e).toFixed(1)}</td>
            <td>${r.expected_n.toFixed(1)}</td></tr>`).join("")}
      </tbody>`;
    box.appendChild(table);
  }
}

function downloadText(filename: string, text: string): void {
  const blob = new Blob([text], { type: "text/csv" });
  const url = URL.createObjectURL(blob);
  const a = document.createElement("a");
  a.href = url;
  a.download = filename;
  a.click();
  URL.revokeObjectURL(url);
}

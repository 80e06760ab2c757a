/** Review screen: isolated evidence front and center, five-class labeling,
 * submit gated on a selection, inline errors without losing state. The
 * prediction badge is built only for Unblinded sessions; Blinded payloads
 * never carry the field, and no other code path touches it. */

import { FINE_LABELS, type FineLabel, type ReviewItemPayload, type Role } from "./types.js";

export interface ReviewScreenOptions {
  role: Role;
  /** Resolves when the server accepted the label; throws to stay put. */
  onSubmit: (label: FineLabel) => Promise<void>;
}

export class ReviewScreen {
  private item: ReviewItemPayload | null = null;
  private selected: FineLabel | null = null;
  private busy = false;

  constructor(
    private readonly root: HTMLElement,
    private readonly opts: ReviewScreenOptions,
  ) {
    root.innerHTML = `
      <section class="review" data-testid="review-screen" hidden>
        <div class="review-head">
          <span class="report-id" data-testid="report-id"></span>
          <span class="badges"></span>
        </div>
        <blockquote class="merged-note" data-testid="merged-note"></blockquote>
        <div class="full-report" hidden>
          <button type="button" class="toggle-report" data-testid="toggle-report">
            Show full report
          </button>
          <pre class="report-text" data-testid="report-text" hidden></pre>
        </div>
        <div class="labels" role="radiogroup" aria-label="PE class"></div>
        <div class="actions">
          <button type="button" class="submit" data-testid="submit" disabled>
            Submit label
          </button>
          <span class="error" data-testid="error" role="alert" hidden></span>
        </div>
      </section>
      <p class="empty-state" data-testid="queue-empty" hidden>
        No items left to review.
      </p>
    `;
    const labels = this.el(".labels");
    for (const [i, label] of FINE_LABELS.entries()) {
      const button = document.createElement("button");
      button.type = "button";
      button.className = "label-choice";
      button.dataset.label = label;
      button.textContent = `${i + 1} ${label}`;
      button.addEventListener("click", () => this.selectLabel(label));
      labels.appendChild(button);
    }
    this.el(".submit").addEventListener("click", () => void this.submit());
    this.el(".toggle-report").addEventListener("click", () => this.toggleReport());
  }

  private el<T extends HTMLElement = HTMLElement>(selector: string): T {
    const found = this.root.querySelector<T>(selector);
    if (!found) throw new Error(`missing element ${selector}`);
    return found;
  }

  get currentItem(): ReviewItemPayload | null {
    return this.item;
  }

  get selectedLabel(): FineLabel | null {
    return this.selected;
  }

  show(item: ReviewItemPayload | null): void {
    this.item = item;
    this.selected = null;
    this.busy = false;
    const section = this.el(".review");
    const empty = this.el(".empty-state");
    if (!item) {
      section.hidden = true;
      empty.hidden = false;
      return;
    }
    section.hidden = false;
    empty.hidden = true;
    this.el(".report-id").textContent = item.report_id;

    const badges = this.el(".badges");
    badges.textContent = "";
    if (this.opts.role === "Unblinded" && item.model_prediction !== undefined) {
      const badge = document.createElement("span");
      badge.className = `prediction-badge ${item.model_prediction.toLowerCase()}`;
      badge.dataset.testid = "prediction-badge";
      badge.textContent = `Model: ${item.model_prediction}`;
      badges.appendChild(badge);
    }

    const note = this.el(".merged-note");
    if (item.merged_note) {
      note.textContent = item.merged_note;
      note.classList.remove("empty");
    } else {
      note.textContent = "No sentence was isolated for this report.";
      note.classList.add("empty");
    }

    const fullReport = this.el(".full-report");
    const reportText = this.el(".report-text");
    fullReport.hidden = !item.full_report_available;
    reportText.hidden = true;
    reportText.textContent = item.report_text ?? "";
    this.el(".toggle-report").textContent = "Show full report";

    this.el(".error").hidden = true;
    this.renderSelection();
  }

  selectLabel(label: FineLabel): void {
    if (!this.item || this.busy) return;
    this.selected = label;
    this.renderSelection();
  }

  toggleReport(): void {
    if (!this.item || !this.item.full_report_available) return;
    const reportText = this.el(".report-text");
    reportText.hidden = !reportText.hidden;
    this.el(".toggle-report").textContent = reportText.hidden
      ? "Show full report"
      : "Hide full report";
  }

  async submit(): Promise<void> {
    if (!this.item || !this.selected || this.busy) return;
    this.busy = true;
    this.renderSelection();
    try {
      await this.opts.onSubmit(this.selected);
    } catch (error) {
      // stay on the item with the selection intact; surface the rejection
      this.busy = false;
      const box = this.el(".error");
      box.textContent = error instanceof Error ? error.message : String(error);
      box.hidden = false;
      this.renderSelection();
    }
  }

  private renderSelection(): void {
    for (const button of this.root.querySelectorAll<HTMLButtonElement>(".label-choice")) {
      button.classList.toggle("selected", button.dataset.label === this.selected);
      button.disabled = this.busy;
    }
    const submit = this.el<HTMLButtonElement>(".submit");
    submit.disabled = this.selected === null || this.busy;
  }
}

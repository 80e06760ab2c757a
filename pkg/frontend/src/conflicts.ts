/** Conflict-resolution queue (Consensus role): every Conflict item with
 * both reviews side by side and a consensus submission per row. */

import type { AdjudicationApi } from "./api.js";
import { FINE_LABELS, type ConflictItemPayload, type FineLabel } from "./types.js";

export class ConflictQueue {
  constructor(
    private readonly root: HTMLElement,
    private readonly api: AdjudicationApi,
    private readonly reviewer: string,
  ) {
    root.innerHTML = `
      <section class="conflicts" data-testid="conflict-queue">
        <h2>Conflicts</h2>
        <p class="empty-state" data-testid="conflicts-empty" hidden>
          No conflicts to resolve.
        </p>
        <ul class="conflict-list"></ul>
      </section>
    `;
  }

  async refresh(): Promise<void> {
    const items = await this.api.conflicts();
    const list = this.root.querySelector(".conflict-list") as HTMLUListElement;
    const empty = this.root.querySelector(".empty-state") as HTMLElement;
    list.textContent = "";
    empty.hidden = items.length > 0;
    for (const item of items) {
      list.appendChild(this.renderRow(item));
    }
  }

  private renderRow(item: ConflictItemPayload): HTMLLIElement {
    const row = document.createElement("li");
    row.className = "conflict-row";
    row.dataset.reportId = item.report_id;

    const head = document.createElement("div");
    head.className = "conflict-head";
    const id = document.createElement("span");
    id.className = "report-id";
    id.textContent = item.report_id;
    head.appendChild(id);
    row.appendChild(head);

    const note = document.createElement("blockquote");
    note.className = "merged-note";
    note.textContent = item.merged_note || "(no isolated sentence)";
    row.appendChild(note);

    const reviews = document.createElement("div");
    reviews.className = "reviews";
    for (const review of item.reviews) {
      const cell = document.createElement("span");
      cell.className = "review-cell";
      cell.dataset.testid = "review-cell";
      cell.textContent = `${review.role} (${review.reviewer_id}): ${review.fine_label}`;
      reviews.appendChild(cell);
    }
    row.appendChild(reviews);

    const form = document.createElement("div");
    form.className = "consensus-form";
    const select = document.createElement("select");
    select.dataset.testid = "consensus-select";
    const placeholder = document.createElement("option");
    placeholder.value = "";
    placeholder.textContent = "consensus label…";
    select.appendChild(placeholder);
    for (const label of FINE_LABELS) {
      const option = document.createElement("option");
      option.value = label;
      option.textContent = label;
      select.appendChild(option);
    }
    const button = document.createElement("button");
    button.type = "button";
    button.dataset.testid = "consensus-submit";
    button.textContent = "Record consensus";
    button.disabled = true;
    select.addEventListener("change", () => {
      button.disabled = select.value === "";
    });
    const error = document.createElement("span");
    error.className = "error";
    error.hidden = true;
    button.addEventListener("click", () => {
      void this.submit(item.report_id, select.value as FineLabel, button, error);
    });
    form.append(select, button, error);
    row.appendChild(form);
    return row;
  }

  private async submit(
    reportId: string,
    label: FineLabel,
    button: HTMLButtonElement,
    error: HTMLElement,
  ): Promise<void> {
    button.disabled = true;
    try {
      await this.api.submitLabel(reportId, this.reviewer, "Consensus", label);
      await this.refresh();
    } catch (err) {
      button.disabled = false;
      error.textContent = err instanceof Error ? err.message : String(err);
      error.hidden = false;
    }
  }
}

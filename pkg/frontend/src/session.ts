/** Review-session flow: pull the next item, submit, advance on server
 * confirmation, and keep the progress counters current. */

import type { AdjudicationApi } from "./api.js";
import type { ReviewScreen } from "./review.js";
import type { FineLabel, Role } from "./types.js";

export interface ProgressView {
  reviewed: number;
  remaining: number;
  conflicts: number;
}

export class ReviewSession {
  reviewed = 0;

  constructor(
    private readonly api: AdjudicationApi,
    private readonly reviewer: string,
    private readonly role: Role,
    private readonly screen: ReviewScreen,
    private readonly onProgress?: (progress: ProgressView) => void,
  ) {}

  async start(): Promise<void> {
    await this.advance();
  }

  async advance(): Promise<void> {
    const item = await this.api.nextItem(this.role, this.reviewer);
    this.screen.show(item);
    await this.refreshProgress();
  }

  /** Wire this as the screen's onSubmit: throws on rejection so the screen
   * keeps the item and selection and renders the error inline. */
  submit = async (label: FineLabel): Promise<void> => {
    const item = this.screen.currentItem;
    if (!item) return;
    await this.api.submitLabel(item.report_id, this.reviewer, this.role, label);
    this.reviewed += 1;
    await this.advance();
  };

  private async refreshProgress(): Promise<void> {
    if (!this.onProgress) return;
    const progress = await this.api.progress();
    this.onProgress({
      reviewed: this.reviewed,
      remaining: progress.unreviewed + progress.one_review,
      conflicts: progress.conflicts,
    });
  }
}

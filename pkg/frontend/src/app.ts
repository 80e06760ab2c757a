/** Application shell: role-aware wiring of the review screen or the
 * conflict queue over the adjudication API. */

import { AdjudicationApi, type FetchLike } from "./api.js";
import { ConflictQueue } from "./conflicts.js";
import { bindShortcuts } from "./keyboard.js";
import { ReviewScreen } from "./review.js";
import { ReviewSession } from "./session.js";
import type { Role } from "./types.js";

export interface AppConfig {
  baseUrl: string;
  reviewer: string;
  role: Role;
  fetchFn?: FetchLike;
  /** Keyboard target; defaults to document. */
  keyTarget?: EventTarget;
}

export interface App {
  start(): Promise<void>;
  dispose(): void;
  session?: ReviewSession;
  screen?: ReviewScreen;
  queue?: ConflictQueue;
}

export function createApp(root: HTMLElement, config: AppConfig): App {
  const api = new AdjudicationApi(config.baseUrl, config.fetchFn);
  root.innerHTML = `
    <header class="session-head">
      <h1>PE adjudication</h1>
      <span class="who">
        <span data-testid="reviewer-id"></span>
        <span class="role-badge" data-testid="role-badge"></span>
      </span>
      <span class="progress" data-testid="progress" hidden></span>
    </header>
    <main class="view"></main>
  `;
  (root.querySelector("[data-testid=reviewer-id]") as HTMLElement).textContent =
    config.reviewer;
  (root.querySelector("[data-testid=role-badge]") as HTMLElement).textContent =
    config.role;
  const view = root.querySelector(".view") as HTMLElement;
  const progressEl = root.querySelector("[data-testid=progress]") as HTMLElement;

  if (config.role === "Consensus") {
    const queue = new ConflictQueue(view, api, config.reviewer);
    return {
      queue,
      start: () => queue.refresh(),
      dispose: () => undefined,
    };
  }

  const screen: ReviewScreen = new ReviewScreen(view, {
    role: config.role,
    onSubmit: (label): Promise<void> => session.submit(label),
  });
  const session: ReviewSession = new ReviewSession(
    api,
    config.reviewer,
    config.role,
    screen,
    ({ reviewed, remaining, conflicts }) => {
      progressEl.hidden = false;
      progressEl.textContent =
        `reviewed ${reviewed} · remaining ${remaining} · conflicts ${conflicts}`;
    },
  );
  const unbind = bindShortcuts(config.keyTarget ?? document, {
    onLabel: (label) => screen.selectLabel(label),
    onSubmit: () => void screen.submit(),
    onToggleReport: () => screen.toggleReport(),
  });
  return {
    session,
    screen,
    start: () => session.start(),
    dispose: unbind,
  };
}

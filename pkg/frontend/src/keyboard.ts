/** Keyboard shortcuts: reviewers label thousands of items, so the five
 * classes sit on 1-5, Enter submits, F toggles the full report. */

import { FINE_LABELS, type FineLabel } from "./types.js";

export interface ShortcutHandlers {
  onLabel: (label: FineLabel) => void;
  onSubmit: () => void;
  onToggleReport: () => void;
}

export const LABEL_KEYS: ReadonlyMap<string, FineLabel> = new Map(
  FINE_LABELS.map((label, i) => [String(i + 1), label]),
);

function isEditable(target: EventTarget | null): boolean {
  return (
    target instanceof HTMLElement &&
    (target.tagName === "INPUT" ||
      target.tagName === "TEXTAREA" ||
      target.isContentEditable)
  );
}

/** Binds the shortcut map on `target`; returns an unbind function. */
export function bindShortcuts(
  target: EventTarget,
  handlers: ShortcutHandlers,
): () => void {
  const listener = (event: Event) => {
    const e = event as KeyboardEvent;
    if (e.ctrlKey || e.metaKey || e.altKey || isEditable(e.target)) return;
    const label = LABEL_KEYS.get(e.key);
    if (label) {
      e.preventDefault();
      handlers.onLabel(label);
    } else if (e.key === "Enter") {
      e.preventDefault();
      handlers.onSubmit();
    } else if (e.key === "f" || e.key === "F") {
      e.preventDefault();
      handlers.onToggleReport();
    }
  };
  target.addEventListener("keydown", listener);
  return () => target.removeEventListener("keydown", listener);
}

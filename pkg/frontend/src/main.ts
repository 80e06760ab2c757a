/** Browser entry point. Session parameters come from the query string:
 *    index.html?reviewer=bdl&role=Unblinded[&api=http://host:8000]
 */

import { createApp } from "./app.js";
import type { Role } from "./types.js";

const ROLES: Role[] = ["Unblinded", "Blinded", "Consensus"];

function boot(): void {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app container");
  const params = new URLSearchParams(window.location.search);
  const reviewer = params.get("reviewer") ?? "";
  const role = params.get("role") as Role | null;
  if (!reviewer || !role || !ROLES.includes(role)) {
    root.innerHTML = `
      <p class="empty-state">
        Open with <code>?reviewer=&lt;id&gt;&amp;role=Unblinded|Blinded|Consensus</code>
        (optionally <code>&amp;api=http://host:port</code>).
      </p>
    `;
    return;
  }
  const app = createApp(root, {
    baseUrl: params.get("api") ?? "",
    reviewer,
    role,
  });
  void app.start();
}

boot();

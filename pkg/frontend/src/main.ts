/** Browser entry: wire the API client, store, flow, and renderer together.
 *
 * Expects `?session=<id>&doc=<doc_id>` in the URL (created via the service's
 * POST /documents and POST /assessments), and the service base URL in
 * `data-api-base` on the mount node (defaults to same origin).
 */

import { Rob2Api } from "./api.js";
import { AssessmentFlow } from "./flow.js";
import { renderApp } from "./render.js";
import { SessionStore } from "./store.js";

async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app mount node");
  const params = new URLSearchParams(window.location.search);
  const sessionId = params.get("session");
  const docId = params.get("doc");
  if (!sessionId || !docId) {
    root.textContent = "Missing ?session=<id>&doc=<doc_id> query parameters.";
    return;
  }
  const api = new Rob2Api(root.dataset.apiBase ?? "");
  const store = new SessionStore(api, sessionId);
  await store.loadDocument(docId);
  await store.refresh();
  const flow = new AssessmentFlow(store);
  renderApp(flow, root);
}

void boot();

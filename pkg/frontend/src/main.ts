/**
 * Console entry point.
 *
 * Session keys live in browser session storage (fmgov.seed, a 32-byte hex
 * seed) mirroring the CLI's client-side-signing rule; the service never
 * sees them. Reloading at any moment rebuilds the whole view from the API
 * and the event feed.
 */

import { ApiClient } from "./api.js";
import { sessionKeyFromSeed } from "./crypto.js";
import { FeedLoop } from "./feed.js";
import { ConsoleStore } from "./store.js";
import { render } from "./views.js";

const SEED_KEY = "fmgov.seed";
const URL_KEY = "fmgov.url";

async function start(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app mount point");

  const baseUrl = sessionStorage.getItem(URL_KEY) ?? window.location.origin;
  const seed = sessionStorage.getItem(SEED_KEY);
  const session = seed ? await sessionKeyFromSeed(seed) : null;
  const api = new ApiClient(baseUrl, session);
  const store = new ConsoleStore(api);

  await store.bootstrap();
  render(root, store);

  const feed = new FeedLoop(store, () => render(root, store));
  feed.start();

  // periodic dashboard refresh (verify status and balance are pull-only)
  window.setInterval(() => {
    void store.refreshDashboard().then(() => render(root, store));
  }, 10_000);
}

void start();

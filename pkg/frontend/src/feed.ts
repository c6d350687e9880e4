/**
 * Long-poll loop: one logical stream per console, resumable by cursor.
 */

import type { ConsoleStore } from "./store.js";

export class FeedLoop {
  private running = false;

  constructor(
    private readonly store: ConsoleStore,
    private readonly onUpdate: () => void,
    private readonly timeoutSeconds = 20,
  ) {}

  start(): void {
    if (this.running) return;
    this.running = true;
    void this.loop();
  }

  stop(): void {
    this.running = false;
  }

  private async loop(): Promise<void> {
    while (this.running) {
      try {
        const applied = await this.store.pollOnce(this.timeoutSeconds);
        if (applied > 0) this.onUpdate();
      } catch {
        // transient network or cursor errors: back off briefly and resume
        await new Promise((resolve) => setTimeout(resolve, 1000));
      }
    }
  }
}

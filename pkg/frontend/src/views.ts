/**
 * DOM rendering. Thin by design: all state lives in the store's view
 * model, so a full re-render after every change keeps the screen equal to
 * the model. All dynamic values go through textContent, never innerHTML.
 */

import type { ConsoleStore } from "./store.js";
import type { CaseView } from "./store.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function render(root: HTMLElement, store: ConsoleStore): void {
  const view = store.view();
  root.replaceChildren();

  const header = el("header");
  header.append(el("h1", "", "fm-govern verifier console"));
  header.append(el("p", "session",
    view.accountId ? `signed in as ${view.accountId.slice(0, 16)}…` : "no key loaded"));
  if (view.banner) {
    header.append(el("p", "banner", view.banner));
  }
  root.append(header);

  if (view.accessMessage) {
    root.append(el("p", "access-message", view.accessMessage));
  } else {
    root.append(renderQueue(view.queue, store));
  }
  root.append(renderDashboard(store));
}

function renderQueue(queue: CaseView[], store: ConsoleStore): HTMLElement {
  const section = el("section", "queue");
  section.append(el("h2", "", "Flagged cases"));
  if (queue.length === 0) {
    section.append(el("p", "empty", "No flagged cases right now."));
    return section;
  }
  const list = el("ul");
  for (const item of queue) {
    const entry = el("li", `case case-${item.status}`);
    entry.dataset.caseId = String(item.caseId);
    entry.append(el("span", "rule", item.ruleId));
    entry.append(el("span", "status", item.status));
    entry.append(el("span", "votes", `${item.votesCast} vote(s)`));
    if (item.ballot && item.status === "voting") {
      const closesAt = item.ballot.openedAt + item.ballot.window;
      entry.append(el("span", "window", `window closes at ${closesAt}`));
      if (item.myVote === null) {
        for (const verdict of ["uphold", "overturn"] as const) {
          const button = el("button", `vote-${verdict}`, verdict);
          button.addEventListener("click", () => {
            button.disabled = true;
            void store.castVote(item.caseId, verdict);
          });
          entry.append(button);
        }
      } else {
        entry.append(el("span", "my-vote", `you voted ${item.myVote}`));
      }
    }
    if (item.outcome) {
      entry.append(el("span", "outcome",
        `${item.outcome.verdict} (${item.outcome.tally_uphold} / ` +
        `${item.outcome.tally_overturn}, ${item.outcome.method})`));
    }
    list.append(entry);
  }
  section.append(list);
  return section;
}

function renderDashboard(store: ConsoleStore): HTMLElement {
  const view = store.view();
  const section = el("section", "dashboard");
  section.append(el("h2", "", "Auditor dashboard"));
  section.append(el("p", "height", `chain height: ${view.dashboard.tipHeight}`));
  const verify = view.dashboard.lastVerify;
  section.append(el(
    "p",
    verify && !verify.clean ? "verify bad" : "verify",
    verify === null
      ? "chain verification: not run yet"
      : verify.clean
        ? "chain verification: clean"
        : `chain verification: violations detected (${verify.violationCount})`,
  ));
  if (view.dashboard.balance) {
    section.append(el("p", "balance",
      `tokens: ${view.dashboard.balance.available} available, ` +
      `${view.dashboard.balance.locked} locked`));
  }
  if (view.dashboard.recentOutcomes.length > 0) {
    const outcomes = el("ul", "outcomes");
    for (const outcome of view.dashboard.recentOutcomes.slice(-10)) {
      outcomes.append(el("li", "",
        `case ${outcome.caseId}: ${outcome.verdict} via ${outcome.method}`));
    }
    section.append(outcomes);
  }
  if (view.dashboard.claims.length > 0) {
    const claims = el("ul", "claims");
    for (const claim of view.dashboard.claims.slice(-10)) {
      claims.append(el("li", "",
        `claim ${claim.claimId} on case ${claim.caseId}: ${claim.amount} tokens`));
    }
    section.append(claims);
  }
  return section;
}

import { describe, expect, it } from "vitest";

import { ApiClient, type CaseRecord, type FeedEvent } from "../src/api.js";
import { ConsoleStore } from "../src/store.js";

const VERIFIER = "v".repeat(64);

function fakeApi(overrides: Partial<Record<string, unknown>> = {}): ApiClient {
  const api = new ApiClient("http://unused", {
    accountId: VERIFIER,
    pubkeyHex: "p".repeat(64),
    sign: async () => "00".repeat(64),
  });
  const record: CaseRecord = {
    case_id: 1, task_id: "task-x", rule_id: "denylist.v1/violence",
    response_hash: "a".repeat(64), status: "flagged", opened_at: 1000,
    ballot: null, votes: [], outcome: null,
  };
  Object.assign(api, {
    account: async () => ({ id: VERIFIER, roles: ["User", "Verifier"],
                            kind: "human", next_nonce: 0 }),
    chainTip: async () => ({ height: 4, header_hash: "h".repeat(64) }),
    cases: async () => [record],
    balance: async () => ({ available: 12, locked: 3, height: 4 }),
    claims: async () => [],
    eventsPage: async () => ({ events: [], latest: 0 }),
    ...overrides,
  });
  return api;
}

function event(cursor: number, kind: string, payload: Record<string, unknown>): FeedEvent {
  return { cursor, kind, payload };
}

describe("ConsoleStore", () => {
  it("bootstraps the queue from the API", async () => {
    const store = new ConsoleStore(fakeApi());
    await store.bootstrap();
    const view = store.view();
    expect(view.accessMessage).toBeNull();
    expect(view.queue).toHaveLength(1);
    expect(view.queue[0]!.ruleId).toBe("denylist.v1/violence");
    expect(view.dashboard.tipHeight).toBe(4);
    expect(view.dashboard.balance).toEqual({ available: 12, locked: 3, height: 4 });
  });

  it("shows the access message for non-verifiers", async () => {
    const api = fakeApi({
      account: async () => ({ id: VERIFIER, roles: ["User"], kind: "human",
                              next_nonce: 0 }),
    });
    const store = new ConsoleStore(api);
    await store.bootstrap();
    const view = store.view();
    expect(view.accessMessage).toMatch(/only appointed verifiers/);
    expect(view.queue).toHaveLength(0);
  });

  it("applies the case lifecycle from feed events", async () => {
    const store = new ConsoleStore(fakeApi({ cases: async () => [] }));
    await store.bootstrap();
    store.applyEvent(event(1, "case_flagged", {
      case_id: 9, task_id: "t", rule_id: "r", response_hash: "cc".repeat(32),
      opened_at: 50,
    }));
    store.applyEvent(event(2, "ballot_opened", {
      case_id: 9, scheme: "one-verifier-one-vote", quorum: 1, window: 60,
      opened_at: 55,
    }));
    store.applyEvent(event(3, "vote_cast", {
      case_id: 9, voter: "w".repeat(64), verdict: "uphold", cast_at: 56,
    }));
    store.applyEvent(event(4, "vote_cast", {
      case_id: 9, voter: VERIFIER, verdict: "overturn", cast_at: 57,
    }));
    let view = store.view().queue[0]!;
    expect(view.status).toBe("voting");
    expect(view.votesCast).toBe(2);   // aggregate count only
    expect(view.myVote).toBe("overturn");
    store.applyEvent(event(5, "case_finalized", {
      case_id: 9, verdict: "upheld", tally_uphold: 1, tally_overturn: 1,
      method: "ballot",
    }));
    view = store.view().queue[0]!;
    expect(view.status).toBe("finalized");
    expect(view.outcome).toMatchObject({
      verdict: "upheld", tally_uphold: 1, tally_overturn: 1, method: "ballot",
    });
    expect(store.view().dashboard.recentOutcomes).toHaveLength(1);
  });

  it("ignores events at or below the cursor (replay safety)", async () => {
    const store = new ConsoleStore(fakeApi({ cases: async () => [] }));
    await store.bootstrap();
    const flag = event(1, "case_flagged", {
      case_id: 2, task_id: "t", rule_id: "r", response_hash: "dd".repeat(32),
      opened_at: 1,
    });
    store.applyEvent(flag);
    store.applyEvent({ ...flag });
    expect(store.view().queue).toHaveLength(1);
    expect(store.cursor).toBe(1);
  });

  it("orders the queue by opened_at", async () => {
    const store = new ConsoleStore(fakeApi({ cases: async () => [] }));
    await store.bootstrap();
    store.applyEvent(event(1, "case_flagged", {
      case_id: 5, task_id: "t5", rule_id: "r", response_hash: "ee".repeat(32),
      opened_at: 900,
    }));
    store.applyEvent(event(2, "case_flagged", {
      case_id: 4, task_id: "t4", rule_id: "r", response_hash: "ff".repeat(32),
      opened_at: 100,
    }));
    expect(store.view().queue.map((c) => c.caseId)).toEqual([4, 5]);
  });

  it("surfaces vote rejection codes verbatim as the banner", async () => {
    const api = fakeApi({ cases: async () => [] });
    Object.assign(api, {
      castVote: async () => {
        const { ApiError } = await import("../src/api.js");
        throw new ApiError("DuplicateVote", "one vote per voter per case", 409);
      },
    });
    const store = new ConsoleStore(api);
    await store.bootstrap();
    const code = await store.castVote(1, "uphold");
    expect(code).toBe("DuplicateVote");
    expect(store.view().banner).toBe("DuplicateVote");
  });

  it("updates the tip height from block_sealed events", async () => {
    const store = new ConsoleStore(fakeApi({ cases: async () => [] }));
    await store.bootstrap();
    store.applyEvent(event(1, "block_sealed", {
      height: 17, header_hash: "aa".repeat(32), tx_count: 2,
    }));
    expect(store.view().dashboard.tipHeight).toBe(17);
  });

  it("collects claims for the dashboard", async () => {
    const store = new ConsoleStore(fakeApi({ cases: async () => [] }));
    await store.bootstrap();
    store.applyEvent(event(1, "claim_registered", {
      claim_id: 3, case_id: 8, claimant: "c".repeat(64), amount: 25,
    }));
    expect(store.view().dashboard.claims).toEqual([
      { claimId: 3, caseId: 8, amount: 25 },
    ]);
  });
});

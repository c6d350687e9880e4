/**
 * Console state, derived purely from API responses plus the event feed.
 *
 * Nothing here is authoritative: reloading the console rebuilds an
 * equivalent view by re-running bootstrap() (API snapshots, feed cursor
 * pinned to "now") and consuming later events. Voters and claims are
 * keyed by identity, so a snapshot overlapping the feed never double
 * counts. The only mutation the console performs is casting a vote via
 * the API; outcomes display exactly what the chain recorded, and vote
 * totals stay aggregate-only until finalization.
 */

import { ApiClient, ApiError, type CaseRecord, type FeedEvent, type Outcome } from "./api.js";

export interface CaseView {
  caseId: number;
  taskId: string;
  ruleId: string;
  status: string;
  responseHash: string;
  openedAt: number;
  ballot: {
    scheme: string;
    quorum: number;
    window: number;
    openedAt: number;
  } | null;
  votesCast: number;
  myVote: "uphold" | "overturn" | null;
  outcome: Outcome | null;
}

interface CaseState extends Omit<CaseView, "votesCast"> {
  voters: Set<string>;
}

export interface DashboardView {
  tipHeight: number;
  lastVerify: { clean: boolean; violationCount: number } | null;
  balance: { available: number; locked: number } | null;
  recentOutcomes: { caseId: number; verdict: string; method: string }[];
  claims: { claimId: number; caseId: number; amount: number }[];
}

export interface ConsoleView {
  accountId: string | null;
  roles: string[];
  accessMessage: string | null;
  queue: CaseView[];
  dashboard: DashboardView;
  banner: string | null;
}

export class ConsoleStore {
  private cases = new Map<number, CaseState>();
  private claims = new Map<number, { claimId: number; caseId: number; amount: number }>();
  private roles: string[] = [];
  private accessMessage: string | null = null;
  private banner: string | null = null;
  private tipHeight = 0;
  private lastVerify: { clean: boolean; violationCount: number } | null = null;
  private balance: { available: number; locked: number } | null = null;
  cursor = 0;

  constructor(private readonly api: ApiClient) {}

  get accountId(): string | null {
    return this.api.session?.accountId ?? null;
  }

  get isVerifier(): boolean {
    return this.roles.includes("Verifier");
  }

  get isAuditor(): boolean {
    return this.roles.includes("Auditor") || this.roles.includes("SystemProvider");
  }

  /** Fetch everything the view needs from scratch (initial load or reload). */
  async bootstrap(): Promise<void> {
    this.cases.clear();
    this.claims.clear();
    this.banner = null;
    this.accessMessage = null;
    if (!this.accountId) {
      this.accessMessage = "No key loaded: sign in to review cases.";
      return;
    }
    // pin the feed to "now" first: anything the snapshots already include
    // must not be replayed on top of them
    this.cursor = (await this.api.eventsPage(0, 0)).latest;
    const account = await this.api.account(this.accountId);
    this.roles = account.roles;
    const tip = await this.api.chainTip();
    this.tipHeight = tip.height;
    if (this.isVerifier || this.isAuditor) {
      for (const record of await this.api.cases()) {
        this.cases.set(record.case_id, this.toState(record));
      }
    } else {
      this.accessMessage = "Access denied: only appointed verifiers review cases.";
    }
    if (this.isAuditor) {
      for (const claim of await this.api.claims()) {
        this.claims.set(claim.claim_id, {
          claimId: claim.claim_id, caseId: claim.case_id, amount: claim.amount,
        });
      }
    }
    this.balance = await this.api.balance(this.accountId);
  }

  private toState(record: CaseRecord): CaseState {
    const mine = record.votes.find((vote) => vote.voter === this.accountId);
    return {
      caseId: record.case_id,
      taskId: record.task_id,
      ruleId: record.rule_id,
      status: record.status,
      responseHash: record.response_hash,
      openedAt: record.opened_at,
      ballot: record.ballot
        ? {
            scheme: record.ballot.scheme,
            quorum: record.ballot.quorum,
            window: record.ballot.window,
            openedAt: record.ballot.opened_at,
          }
        : null,
      voters: new Set(record.votes.map((vote) => vote.voter)),
      myVote: mine ? mine.verdict : null,
      outcome: record.outcome,
    };
  }

  /** Run one long-poll cycle; returns how many events were applied. */
  async pollOnce(timeoutSeconds = 20): Promise<number> {
    const page = await this.api.eventsPage(this.cursor, timeoutSeconds);
    for (const event of page.events) this.applyEvent(event);
    return page.events.length;
  }

  applyEvent(event: FeedEvent): void {
    if (event.cursor <= this.cursor) return;
    this.cursor = event.cursor;
    const payload = event.payload as any;
    switch (event.kind) {
      case "block_sealed":
        this.tipHeight = Math.max(this.tipHeight, Number(payload.height));
        break;
      case "case_flagged":
        if (!this.cases.has(Number(payload.case_id)) && this.isVerifier) {
          this.cases.set(Number(payload.case_id), {
            caseId: Number(payload.case_id),
            taskId: String(payload.task_id),
            ruleId: String(payload.rule_id),
            status: "flagged",
            responseHash: String(payload.response_hash),
            openedAt: Number(payload.opened_at),
            ballot: null,
            voters: new Set(),
            myVote: null,
            outcome: null,
          });
        }
        break;
      case "ballot_opened": {
        const state = this.cases.get(Number(payload.case_id));
        if (state) {
          state.status = "voting";
          state.ballot = {
            scheme: String(payload.scheme),
            quorum: Number(payload.quorum),
            window: Number(payload.window),
            openedAt: Number(payload.opened_at),
          };
        }
        break;
      }
      case "vote_cast": {
        const state = this.cases.get(Number(payload.case_id));
        if (state) {
          state.voters.add(String(payload.voter));
          if (payload.voter === this.accountId) {
            state.myVote = payload.verdict;
          }
        }
        break;
      }
      case "case_finalized": {
        const state = this.cases.get(Number(payload.case_id));
        if (state) {
          state.status = "finalized";
          // pass-through of the on-chain outcome, never recomputed here
          state.outcome = {
            verdict: payload.verdict,
            tally_uphold: Number(payload.tally_uphold),
            tally_overturn: Number(payload.tally_overturn),
            method: payload.method,
            weights: state.outcome?.weights ?? {},
          };
        }
        break;
      }
      case "claim_registered":
        this.claims.set(Number(payload.claim_id), {
          claimId: Number(payload.claim_id),
          caseId: Number(payload.case_id),
          amount: Number(payload.amount),
        });
        break;
      default:
        break;
    }
  }

  /** Cast a vote; never optimistic, surfaces API error codes verbatim. */
  async castVote(caseId: number, verdict: "uphold" | "overturn"): Promise<string> {
    this.banner = null;
    try {
      const castAt = Math.floor(Date.now() / 1000);
      const receipt = await this.api.castVote(caseId, verdict, castAt);
      if (receipt.status !== "ok") {
        this.banner = receipt.status;
        return receipt.status;
      }
      await this.refreshCase(caseId);
      return "ok";
    } catch (error) {
      if (error instanceof ApiError) {
        this.banner = error.code;
        return error.code;
      }
      throw error;
    }
  }

  /** Re-fetch one case from the API (detail view, post-vote refresh). */
  async refreshCase(caseId: number): Promise<void> {
    const record = await this.api.caseDetail(caseId);
    this.cases.set(caseId, this.toState(record));
  }

  async refreshDashboard(): Promise<void> {
    const tip = await this.api.chainTip();
    this.tipHeight = Math.max(this.tipHeight, tip.height);
    if (this.accountId) {
      this.balance = await this.api.balance(this.accountId);
    }
    const verify = await this.api.chainVerify();
    this.lastVerify = {
      clean: verify.clean,
      violationCount: verify.violations.length,
    };
  }

  /** The full render model: everything the DOM layer may show. */
  view(): ConsoleView {
    const queue = [...this.cases.values()]
      .sort((a, b) => a.openedAt - b.openedAt || a.caseId - b.caseId)
      .map((state) => ({
        caseId: state.caseId,
        taskId: state.taskId,
        ruleId: state.ruleId,
        status: state.status,
        responseHash: state.responseHash,
        openedAt: state.openedAt,
        ballot: state.ballot ? { ...state.ballot } : null,
        votesCast: state.voters.size,
        myVote: state.myVote,
        outcome: state.outcome ? { ...state.outcome } : null,
      }));
    const recentOutcomes = queue
      .filter((item) => item.outcome !== null)
      .map((item) => ({
        caseId: item.caseId,
        verdict: item.outcome!.verdict,
        method: item.outcome!.method,
      }));
    return {
      accountId: this.accountId,
      roles: [...this.roles],
      accessMessage: this.accessMessage,
      queue,
      dashboard: {
        tipHeight: this.tipHeight,
        lastVerify: this.lastVerify ? { ...this.lastVerify } : null,
        balance: this.balance ? { ...this.balance } : null,
        recentOutcomes,
        claims: [...this.claims.values()].sort((a, b) => a.claimId - b.claimId),
      },
      banner: this.banner,
    };
  }
}

/**
 * Typed client for the fm-govern HTTP API.
 *
 * Mutations are signed locally with the session key and submitted through
 * the ledger's wrapped endpoints; the client then polls the transaction
 * until it seals so callers always receive the on-chain outcome, never an
 * optimistic guess. API error codes pass through verbatim.
 */

import { canonicalBytes, txSigningBytes } from "./canonical.js";
import { sha256Hex, type SessionKey } from "./crypto.js";

export class ApiError extends Error {
  constructor(
    public readonly code: string,
    public readonly detail: string,
    public readonly status: number,
  ) {
    super(`${code}: ${detail}`);
  }
}

export interface Ballot {
  scheme: string;
  quorum: number;
  window: number;
  provider_weight: number;
  early_finalize: boolean;
  opened_at: number;
}

export interface Vote {
  voter: string;
  verdict: "uphold" | "overturn";
  cast_at: number;
}

export interface Outcome {
  verdict: "upheld" | "overturned";
  tally_uphold: number;
  tally_overturn: number;
  method: "ballot" | "adjudication";
  weights: Record<string, number>;
}

export interface CaseRecord {
  case_id: number;
  task_id: string;
  rule_id: string;
  response_hash: string;
  status: "flagged" | "voting" | "finalized" | "adjudication_required";
  opened_at: number;
  ballot: Ballot | null;
  votes: Vote[];
  outcome: Outcome | null;
}

export interface FeedEvent {
  cursor: number;
  kind: string;
  payload: Record<string, unknown>;
}

export interface TraceStep {
  seq_no: number;
  kind: string;
  actor: string;
  timestamp: number;
  [field: string]: unknown;
}

export interface AccountInfo {
  id: string;
  roles: string[];
  kind: string;
  next_nonce: number;
}

export class ApiClient {
  constructor(
    readonly baseUrl: string,
    readonly session: SessionKey | null = null,
  ) {}

  private async request(
    method: string,
    path: string,
    body?: unknown,
    asAccount?: string,
  ): Promise<any> {
    const headers: Record<string, string> = {};
    if (body !== undefined) headers["Content-Type"] = "application/json";
    const account = asAccount ?? this.session?.accountId;
    if (account) headers["X-Account"] = account;
    const response = await fetch(this.baseUrl + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    let payload: any = null;
    try {
      payload = await response.json();
    } catch {
      payload = { error: "BadResponse", detail: `HTTP ${response.status}` };
    }
    if (!response.ok) {
      throw new ApiError(
        String(payload.error ?? "HttpError"),
        String(payload.detail ?? ""),
        response.status,
      );
    }
    return payload;
  }

  get(path: string, asAccount?: string): Promise<any> {
    return this.request("GET", path, undefined, asAccount);
  }

  post(path: string, body: unknown): Promise<any> {
    return this.request("POST", path, body);
  }

  // -- reads -----------------------------------------------------------

  account(accountId: string): Promise<AccountInfo> {
    return this.get(`/accounts/${accountId}`);
  }

  balance(accountId: string): Promise<{ available: number; locked: number; height: number }> {
    return this.get(`/accounts/${accountId}/balance`);
  }

  async cases(): Promise<CaseRecord[]> {
    return (await this.get("/cases")).cases;
  }

  caseDetail(caseId: number): Promise<CaseRecord> {
    return this.get(`/cases/${caseId}`);
  }

  async trace(taskId: string): Promise<TraceStep[]> {
    return (await this.get(`/traces/${taskId}`)).steps;
  }

  chainTip(): Promise<{ height: number; header_hash: string }> {
    return this.get("/chain/tip");
  }

  chainVerify(): Promise<{ clean: boolean; violations: unknown[] }> {
    return this.get("/chain/verify");
  }

  async eventsPage(
    cursor: number,
    timeoutSeconds: number,
  ): Promise<{ events: FeedEvent[]; latest: number }> {
    return this.get(`/events?cursor=${cursor}&timeout=${timeoutSeconds}`);
  }

  async claims(): Promise<{ claim_id: number; case_id: number; amount: number }[]> {
    return (await this.get("/claims")).claims;
  }

  txStatus(txId: string): Promise<{ status: string; height?: number }> {
    return this.get(`/tx/${txId}`);
  }

  // -- signed mutations ---------------------------------------------------

  /** Sign and submit a vote; resolves with the sealed on-chain status. */
  async castVote(
    caseId: number,
    verdict: "uphold" | "overturn",
    castAt: number,
  ): Promise<{ status: string; txId: string }> {
    if (!this.session) throw new ApiError("NoSession", "no signing key loaded", 0);
    const command = {
      type: "cast_vote",
      case_id: caseId,
      verdict,
      cast_at: castAt,
    };
    const nonce = (await this.account(this.session.accountId)).next_nonce;
    const signature = await this.session.sign(
      txSigningBytes(this.session.accountId, nonce, command),
    );
    const receipt = await this.post(`/cases/${caseId}/votes`, {
      sender: this.session.accountId,
      nonce,
      signature,
      verdict,
      cast_at: castAt,
    });
    const sealed = await this.waitSealed(receipt.tx_id);
    return { status: sealed.status, txId: receipt.tx_id };
  }

  /** Poll until the tx leaves the pending pool (votes are never optimistic). */
  async waitSealed(
    txId: string,
    timeoutMs = 15_000,
  ): Promise<{ status: string }> {
    const deadline = Date.now() + timeoutMs;
    while (Date.now() < deadline) {
      const status = await this.txStatus(txId);
      if (status.status !== "pending") return status;
      await new Promise((resolve) => setTimeout(resolve, 100));
    }
    throw new ApiError("Timeout", `tx ${txId} still pending`, 0);
  }

  async taskRequestSignature(
    session: SessionKey,
    prompt: string,
    config: Record<string, unknown>,
  ): Promise<string> {
    const promptHash = await sha256Hex(prompt);
    return session.sign(canonicalBytes({
      config,
      prompt_hash: promptHash,
      user: session.accountId,
    }));
  }
}

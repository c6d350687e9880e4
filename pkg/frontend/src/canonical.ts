/**
 * Canonical JSON, byte-compatible with the ledger's form: keys sorted,
 * no whitespace, integers only. Transaction signatures cover these bytes,
 * so any divergence from the server's encoder breaks signing.
 */

export function canonicalJson(value: unknown): string {
  if (value === null) return "null";
  switch (typeof value) {
    case "boolean":
      return value ? "true" : "false";
    case "number":
      if (!Number.isSafeInteger(value)) {
        throw new Error(`canonical form allows integers only, got ${value}`);
      }
      return String(value);
    case "string":
      return JSON.stringify(value);
    case "object":
      break;
    default:
      throw new Error(`unsupported type in canonical form: ${typeof value}`);
  }
  if (Array.isArray(value)) {
    return `[${value.map((item) => canonicalJson(item)).join(",")}]`;
  }
  const entries = Object.entries(value as Record<string, unknown>)
    .filter(([, v]) => v !== undefined)
    .sort(([a], [b]) => (a < b ? -1 : a > b ? 1 : 0));
  const body = entries
    .map(([key, v]) => `${JSON.stringify(key)}:${canonicalJson(v)}`)
    .join(",");
  return `{${body}}`;
}

export function canonicalBytes(value: unknown): Uint8Array {
  return new TextEncoder().encode(canonicalJson(value));
}

/** Signing body of a transaction: {command, nonce, sender} in canonical form. */
export function txSigningBytes(
  sender: string,
  nonce: number,
  command: Record<string, unknown>,
): Uint8Array {
  return canonicalBytes({ command, nonce, sender });
}

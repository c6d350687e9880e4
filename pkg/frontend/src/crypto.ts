/**
 * Ed25519 signing and SHA-256 over WebCrypto (browser and Node >= 18.4).
 *
 * The verifier's key lives in session storage as a 32-byte hex seed; it is
 * wrapped into a PKCS#8 envelope for import because WebCrypto has no raw
 * private-key import for Ed25519.
 */

const PKCS8_ED25519_PREFIX = "302e020100300506032b657004220420";

export function hexToBytes(hex: string): Uint8Array {
  if (hex.length % 2 !== 0 || /[^0-9a-f]/.test(hex)) {
    throw new Error(`not lowercase hex: ${hex.slice(0, 16)}...`);
  }
  const out = new Uint8Array(hex.length / 2);
  for (let i = 0; i < out.length; i++) {
    out[i] = parseInt(hex.slice(i * 2, i * 2 + 2), 16);
  }
  return out;
}

export function bytesToHex(bytes: Uint8Array): string {
  return Array.from(bytes, (b) => b.toString(16).padStart(2, "0")).join("");
}

export async function sha256Hex(data: Uint8Array | string): Promise<string> {
  const bytes = typeof data === "string" ? new TextEncoder().encode(data) : data;
  const digest = await crypto.subtle.digest("SHA-256", bytes.slice().buffer);
  return bytesToHex(new Uint8Array(digest));
}

export interface SessionKey {
  accountId: string;
  pubkeyHex: string;
  sign(data: Uint8Array): Promise<string>;
}

/** Import a 32-byte seed; derives the public key and on-chain account id. */
export async function sessionKeyFromSeed(seedHex: string): Promise<SessionKey> {
  const pkcs8 = hexToBytes(PKCS8_ED25519_PREFIX + seedHex);
  const privateKey = await crypto.subtle.importKey(
    "pkcs8", pkcs8.slice().buffer, { name: "Ed25519" }, true, ["sign"],
  );
  // WebCrypto cannot derive the public key from a private Ed25519 key
  // directly; export the JWK, which carries the public half in `x`.
  const jwk = await crypto.subtle.exportKey("jwk", privateKey);
  if (!jwk.x) throw new Error("key import yielded no public part");
  const pubkey = base64UrlToBytes(jwk.x);
  const pubkeyHex = bytesToHex(pubkey);
  const accountId = await sha256Hex(pubkey);
  return {
    accountId,
    pubkeyHex,
    async sign(data: Uint8Array): Promise<string> {
      const signature = await crypto.subtle.sign(
        { name: "Ed25519" }, privateKey, data.slice().buffer,
      );
      return bytesToHex(new Uint8Array(signature));
    },
  };
}

function base64UrlToBytes(b64url: string): Uint8Array {
  const b64 = b64url.replace(/-/g, "+").replace(/_/g, "/");
  const padded = b64 + "=".repeat((4 - (b64.length % 4)) % 4);
  const raw = atob(padded);
  const out = new Uint8Array(raw.length);
  for (let i = 0; i < raw.length; i++) out[i] = raw.charCodeAt(i);
  return out;
}

"""Domain error hierarchy with stable machine-readable codes.

Every rejection the registries or ledger can produce carries one of the
codes below. Codes are part of the wire contract: they appear verbatim in
transaction failure statuses, API error bodies, and CLI output.
"""

from __future__ import annotations


class DomainError(Exception):
    """A rule violation with a stable code."""

    code = "DomainError"

    def __init__(self, message: str = "", code: str | None = None):
        if code is not None:
            self.code = code
        super().__init__(message or self.code)

    @property
    def message(self) -> str:
        return str(self)


def _make(code: str) -> type:
    return type(code, (DomainError,), {"code": code})


# Ledger / transaction admission
UnknownSender = _make("UnknownSender")
BadSignature = _make("BadSignature")
BadNonce = _make("BadNonce")
MalformedCommand = _make("MalformedCommand")
EmptyPool = _make("EmptyPool")
RangeOutOfBounds = _make("RangeOutOfBounds")
UnknownTx = _make("UnknownTx")
CorruptLog = _make("CorruptLog")
DataDirLocked = _make("DataDirLocked")
BadConfig = _make("BadConfig")
CursorAhead = _make("CursorAhead")

# Identity / access
UnknownAccount = _make("UnknownAccount")
DuplicateKey = _make("DuplicateKey")
MissingOwner = _make("MissingOwner")
UnknownOwner = _make("UnknownOwner")
NotAuthorized = _make("NotAuthorized")
StructuralRole = _make("StructuralRole")
EmptyRoles = _make("EmptyRoles")
RoleNotRequired = _make("RoleNotRequired")
UnknownAgreement = _make("UnknownAgreement")
UnknownConsent = _make("UnknownConsent")
NotOwner = _make("NotOwner")

# Provenance
ZeroRoot = _make("ZeroRoot")
UnknownAnchor = _make("UnknownAnchor")
UnknownActor = _make("UnknownActor")
UnknownTask = _make("UnknownTask")
DuplicateTask = _make("DuplicateTask")

# Response validation
HashMismatch = _make("HashMismatch")
BadStatus = _make("BadStatus")
WindowClosed = _make("WindowClosed")
NotEligible = _make("NotEligible")
DuplicateVote = _make("DuplicateVote")
QuorumUnmet = _make("QuorumUnmet")

# Incentives
ZeroAmount = _make("ZeroAmount")
Insufficient = _make("Insufficient")
UnknownBeneficiary = _make("UnknownBeneficiary")
EpochOpen = _make("EpochOpen")
AlreadySettled = _make("AlreadySettled")
CaseNotUpheld = _make("CaseNotUpheld")
UnknownClaim = _make("UnknownClaim")
UnknownCase = _make("UnknownCase")

# Marketplace
Duplicate = _make("Duplicate")
UnknownOffering = _make("UnknownOffering")
BadMetrics = _make("BadMetrics")
BadRequirement = _make("BadRequirement")
NoEligibleOffering = _make("NoEligibleOffering")

# Harness
AgreementInactive = _make("AgreementInactive")
ConsentMissing = _make("ConsentMissing")
AccessDenied = _make("AccessDenied")
UnknownRuleset = _make("UnknownRuleset")
NoAnchor = _make("NoAnchor")
NotTestMode = _make("NotTestMode")

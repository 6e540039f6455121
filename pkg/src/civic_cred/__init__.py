"""civic-cred: single-use bearer credentials from attribute-scoped blind signatures.

An issuer checks eligibility, then signs blind; relying parties verify bare
credentials and burn their serials in gossiped spent-sets; an auditor holding
every transcript shows what it still cannot link. Demonstration-scale keys
only: this is not production cryptography.
"""

from .auditor import (AuditReport, ConsistencyMatrix, DoubleSpendAudit,
                      KeySeparationResult, LeakFinding, anonymity_set_sizes,
                      audit_run, consistency_matrix, double_spend_audit,
                      format_summary, key_separation_check, load_transcripts,
                      metadata_leak_scan, operator_exposure,
                      timing_unique_candidates)
from .blindsig import (BlindingFactor, BlindKeyPair, HashedMessage, PublicKey,
                       blind, full_domain_hash, generate_keypair, keygen,
                       sample_blinding_factor, sign_blinded, unblind, verify)
from .credentials import (AttributeKeyDirectory, Credential, IssueRequest,
                          PendingIssuance, Presentation, Wallet,
                          create_issue_request, directory_lookup,
                          directory_publish, finalize_credential,
                          take_for_presentation)
from .errors import CivicCredError

__version__ = "0.1.0"

__all__ = [
    # blindsig
    "PublicKey",
    "BlindKeyPair",
    "BlindingFactor",
    "HashedMessage",
    "keygen",
    "generate_keypair",
    "full_domain_hash",
    "sample_blinding_factor",
    "blind",
    "sign_blinded",
    "unblind",
    "verify",
    # credentials
    "IssueRequest",
    "Presentation",
    "PendingIssuance",
    "Credential",
    "Wallet",
    "AttributeKeyDirectory",
    "directory_publish",
    "directory_lookup",
    "create_issue_request",
    "finalize_credential",
    "take_for_presentation",
    # auditor
    "ConsistencyMatrix",
    "LeakFinding",
    "KeySeparationResult",
    "DoubleSpendAudit",
    "AuditReport",
    "consistency_matrix",
    "anonymity_set_sizes",
    "timing_unique_candidates",
    "metadata_leak_scan",
    "key_separation_check",
    "double_spend_audit",
    "operator_exposure",
    "load_transcripts",
    "audit_run",
    "format_summary",
    # errors
    "CivicCredError",
]

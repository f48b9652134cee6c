//! Normalized fact tags used to annotate how a rule was applied in a case.
//! Two cases have an application match when their tag sets intersect.

pub const TAGS: &[(&str, &str)] = &[
    // Submitting a request.
    (
        "no-rtbf-channel",
        "no documented way to submit an erasure request",
    ),
    ("broken-rtbf-form", "erasure web form errored out"),
    (
        "undeliverable-rtbf-email",
        "published erasure address bounced",
    ),
    (
        "pre-questionnaire-required",
        "questionnaire demanded before a request could be filed",
    ),
    (
        "account-login-required",
        "request only accepted from a logged-in account",
    ),
    (
        "photo-id-required",
        "national photo ID demanded to exercise erasure",
    ),
    (
        "physical-signature-required",
        "handwritten signature demanded",
    ),
    (
        "excess-verification",
        "verification stricter than for account creation",
    ),
    // Responding.
    ("ack-missing", "request never acknowledged"),
    ("request-ignored", "request received but not acted upon"),
    ("request-lost", "request lost between internal teams"),
    ("ack-late", "first response after more than 30 days"),
    ("decision-late", "decision issued long after acknowledgment"),
    (
        "redirected-to-other-controller",
        "requester told to ask another controller",
    ),
    (
        "unknown-data-source",
        "data obtained through legacy or unknown processes",
    ),
    (
        "legacy-import-unauthenticated",
        "imported records with no credential mapping",
    ),
    // Explaining and weighing exemptions.
    ("rejection-unexplained", "rejection sent without reasons"),
    (
        "retention-law-unstated",
        "statutory retention not mentioned in the response",
    ),
    (
        "audit-log-retention-unstated",
        "retention of the request log not explained",
    ),
    (
        "business-rule-unstated",
        "internal business rule applied without saying so",
    ),
    (
        "public-interest-misjudged",
        "public interest weighed incorrectly",
    ),
    (
        "legitimate-interest-overclaimed",
        "legitimate interest used to refuse erasure",
    ),
    (
        "journalism-exemption-misapplied",
        "freedom of expression claimed without balancing",
    ),
    (
        "legal-claims-overclaimed",
        "possible future claims used to keep everything",
    ),
    (
        "consent-withdrawal-ignored",
        "processing continued after consent was withdrawn",
    ),
    ("objection-ignored", "objection to processing not honored"),
    (
        "retention-law-misapplied",
        "sector retention law stretched beyond its scope",
    ),
    ("sector-law-ignored", "sector law requiring erasure ignored"),
    (
        "tax-law-overclaimed",
        "tax retention used for data it does not cover",
    ),
    (
        "loyalty-benefits-withheld",
        "loyalty benefits withdrawn after erasure",
    ),
    (
        "transactions-erased-on-rtbf",
        "all past transactions erased to punish the request",
    ),
    (
        "service-degradation-threat",
        "service refused unless erasure is withdrawn",
    ),
    // Propagating and executing deletion.
    (
        "internal-propagation-missing",
        "deletion not propagated to every internal system",
    ),
    (
        "marketing-continued",
        "marketing messages continued after erasure",
    ),
    (
        "processor-no-delete-api",
        "third-party processor offers no deletion on demand",
    ),
    (
        "external-propagation-unlawful",
        "erasure forwarded externally without legal basis",
    ),
    ("missing-delete-api", "system has no programmatic deletion"),
    (
        "manual-deletion-process",
        "staff re-enter deletions into disjoint systems",
    ),
    (
        "delete-silently-dropped",
        "software bug dropped deletion requests",
    ),
    (
        "wrong-expiry",
        "incorrect expiry time configured for the data",
    ),
    (
        "legacy-system-undeletable",
        "migrated system cannot delete older data",
    ),
    (
        "training-data-unmatched",
        "matching items in a training set not found",
    ),
    (
        "no-admin-privileges",
        "operator lacks rights to delete from its own system",
    ),
    (
        "backup-restore-reintroduced",
        "restored backup brought erased data back",
    ),
    ("pii-primary-key", "personal data used as primary key"),
    (
        "foreign-key-constraint",
        "foreign keys block removal of personal data",
    ),
    (
        "ad-hoc-db-tooling",
        "ad hoc tools used to work around schema constraints",
    ),
    (
        "false-completion",
        "completion reported while nothing was erased",
    ),
    (
        "no-internal-action",
        "no internal deletion step was ever taken",
    ),
    (
        "partial-erasure-claimed-complete",
        "some copies erased, completion claimed",
    ),
    (
        "anonymized-instead-of-deleted",
        "data anonymized in place rather than erased",
    ),
    ("deactivate-only", "account deactivated while data retained"),
    ("excessive-logging", "request logs kept more than needed"),
    ("logs-never-expire", "logs kept without an expiry date"),
    (
        "untagged-personal-data",
        "personal data stored without subject or purpose tags",
    ),
    (
        "photo-matching-required",
        "subject asked for photographs to locate data",
    ),
    // Outside the named categories, or not yet seen before year six.
    (
        "already-deleted",
        "data found already erased during investigation",
    ),
    ("non-natural-person", "erasure requested by an organization"),
    (
        "chatbot-history-retained",
        "conversational assistant kept chat history",
    ),
    ("deletion-fee-charged", "fee demanded to process erasure"),
    (
        "model-memorization",
        "trained model reproduces erased personal data",
    ),
    (
        "search-cache-stale",
        "search result cache kept serving erased content",
    ),
    (
        "minor-account-unverifiable",
        "parent could not prove guardianship to erase",
    ),
    (
        "cross-border-handoff",
        "request handed between establishments and lost",
    ),
    (
        "credit-registry-sync",
        "registry kept resyncing erased entries",
    ),
    (
        "dark-pattern-delete-flow",
        "erasure flow designed to discourage completion",
    ),
    ("phone-only-channel", "erasure only possible by telephone"),
];

pub fn contains(tag: &str) -> bool {
    TAGS.iter().any(|(t, _)| *t == tag)
}

pub fn describe(tag: &str) -> Option<&'static str> {
    TAGS.iter().find(|(t, _)| *t == tag).map(|(_, d)| *d)
}

//! Query model. The kinds mirror the six benchmark challenge workloads.

use serde::{Deserialize, Serialize};

use super::error::{EngineError, Result};
use super::text::tokenize;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Query {
    /// Conjunction of terms (the high/low occurrence workload).
    BooleanAnd {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        field: Option<String>,
        terms: Vec<String>,
    },
    Prefix {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        field: Option<String>,
        prefix: String,
    },
    /// Inclusive range over raw field values, compared lexicographically
    /// (ISO-8601 dates and zero-padded numbers order correctly).
    Range {
        field: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gte: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lte: Option<String>,
    },
    Fuzzy {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        field: Option<String>,
        term: String,
        max_edits: u8,
    },
    Wildcard {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        field: Option<String>,
        pattern: String,
    },
    /// Disjunction of clauses followed by a terms aggregation over `group_by`.
    Aggregate {
        any_of: Vec<Query>,
        group_by: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QueryKind {
    BooleanAnd,
    Prefix,
    Range,
    Fuzzy,
    Wildcard,
    Aggregate,
}

impl QueryKind {
    pub const ALL: [QueryKind; 6] = [
        QueryKind::BooleanAnd,
        QueryKind::Prefix,
        QueryKind::Range,
        QueryKind::Fuzzy,
        QueryKind::Wildcard,
        QueryKind::Aggregate,
    ];
}

pub const MAX_FUZZY_EDITS: u8 = 2;

impl Query {
    pub fn term(t: impl Into<String>) -> Query {
        Query::BooleanAnd {
            field: None,
            terms: vec![t.into()],
        }
    }

    pub fn kind(&self) -> QueryKind {
        match self {
            Query::BooleanAnd { .. } => QueryKind::BooleanAnd,
            Query::Prefix { .. } => QueryKind::Prefix,
            Query::Range { .. } => QueryKind::Range,
            Query::Fuzzy { .. } => QueryKind::Fuzzy,
            Query::Wildcard { .. } => QueryKind::Wildcard,
            Query::Aggregate { .. } => QueryKind::Aggregate,
        }
    }

    /// Validates and lowercases term inputs so evaluation sees index-normal terms.
    pub fn normalized(&self) -> Result<Query> {
        let bad = |m: &str| Err(EngineError::MalformedQuery(m.to_string()));
        Ok(match self {
            Query::BooleanAnd { field, terms } => {
                let terms: Vec<String> = terms.iter().flat_map(|t| tokenize(t)).collect();
                if terms.is_empty() {
                    return bad("boolean-and needs at least one term");
                }
                Query::BooleanAnd {
                    field: field.clone(),
                    terms,
                }
            }
            Query::Prefix { field, prefix } => {
                let prefix = prefix.to_lowercase();
                if prefix.is_empty() {
                    return bad("prefix must not be empty");
                }
                Query::Prefix {
                    field: field.clone(),
                    prefix,
                }
            }
            Query::Range { field, gte, lte } => {
                if field.is_empty() {
                    return bad("range needs a field");
                }
                if let (Some(lo), Some(hi)) = (gte, lte) {
                    if lo > hi {
                        return bad("range lower bound exceeds upper bound");
                    }
                }
                self.clone()
            }
            Query::Fuzzy {
                field,
                term,
                max_edits,
            } => {
                if *max_edits > MAX_FUZZY_EDITS {
                    return bad("fuzzy max_edits must be at most 2");
                }
                let term = term.to_lowercase();
                if term.is_empty() {
                    return bad("fuzzy term must not be empty");
                }
                Query::Fuzzy {
                    field: field.clone(),
                    term,
                    max_edits: *max_edits,
                }
            }
            Query::Wildcard { field, pattern } => {
                if pattern.is_empty() {
                    return bad("wildcard pattern must not be empty");
                }
                Query::Wildcard {
                    field: field.clone(),
                    pattern: pattern.to_lowercase(),
                }
            }
            Query::Aggregate { any_of, group_by } => {
                if any_of.is_empty() {
                    return bad("aggregate needs at least one clause");
                }
                if group_by.is_empty() {
                    return bad("aggregate needs a group_by field");
                }
                let mut clauses = Vec::with_capacity(any_of.len());
                for c in any_of {
                    if matches!(c, Query::Aggregate { .. }) {
                        return bad("nested aggregations are not supported");
                    }
                    clauses.push(c.normalized()?);
                }
                Query::Aggregate {
                    any_of: clauses,
                    group_by: group_by.clone(),
                }
            }
        })
    }

    /// Stable textual form used as a cache key.
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("queries always serialize")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SearchRequest {
    pub query: Query,
    /// Number of top hits returned with their stored source.
    #[serde(default = "default_size")]
    pub size: usize,
}

fn default_size() -> usize {
    10
}

impl SearchRequest {
    pub fn new(query: Query) -> Self {
        SearchRequest {
            query,
            size: default_size(),
        }
    }

    /// Requests every matching hit.
    pub fn all(query: Query) -> Self {
        SearchRequest {
            query,
            size: usize::MAX,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn malformed_queries_are_rejected() {
        let cases = [
            Query::BooleanAnd {
                field: None,
                terms: vec!["  ".into()],
            },
            Query::Prefix {
                field: None,
                prefix: String::new(),
            },
            Query::Range {
                field: "date".into(),
                gte: Some("b".into()),
                lte: Some("a".into()),
            },
            Query::Fuzzy {
                field: None,
                term: "x".into(),
                max_edits: 3,
            },
            Query::Wildcard {
                field: None,
                pattern: String::new(),
            },
            Query::Aggregate {
                any_of: vec![],
                group_by: "tags".into(),
            },
        ];
        for q in cases {
            assert!(
                matches!(q.normalized(), Err(EngineError::MalformedQuery(_))),
                "{q:?}"
            );
        }
    }

    #[test]
    fn json_form_is_tagged_by_kind() {
        let q: Query = serde_json::from_str(r#"{"kind":"wildcard","pattern":"Wor*"}"#).unwrap();
        assert_eq!(q.kind(), QueryKind::Wildcard);
        assert_eq!(
            q.normalized().unwrap(),
            Query::Wildcard {
                field: None,
                pattern: "wor*".into()
            }
        );
    }
}

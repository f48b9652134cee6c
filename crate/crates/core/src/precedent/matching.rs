//! Strong / weak / no-match mapping of a case against a prior corpus.
//!
//! A case has a rule match with a prior case when they share a category, and
//! an application match when they also share a fact tag.

use serde::{Deserialize, Serialize};

use super::model::{Category, EnforcementCase};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "match", rename_all = "snake_case")]
pub enum MatchResult {
    /// Rule and application match with `case_id` in `category`.
    Strong {
        case_id: String,
        category: Category,
    },
    /// Rule match only.
    Weak {
        category: Category,
    },
    NoMatch,
}

impl MatchResult {
    pub fn is_strong(&self) -> bool {
        matches!(self, MatchResult::Strong { .. })
    }

    pub fn is_weak(&self) -> bool {
        matches!(self, MatchResult::Weak { .. })
    }
}

/// Prior cases that take part in matching, ordered by case id. Uncategorized
/// cases are excluded.
pub fn matchable(corpus: &[EnforcementCase]) -> Vec<&EnforcementCase> {
    let mut v: Vec<&EnforcementCase> = corpus
        .iter()
        .filter(|c| !c.uncategorized && !c.categories.is_empty())
        .collect();
    v.sort_by(|a, b| a.case_id.cmp(&b.case_id));
    v
}

pub fn match_case(e: &EnforcementCase, corpus: &[EnforcementCase]) -> MatchResult {
    match_sorted(e, &matchable(corpus))
}

/// Matches against a corpus already filtered and ordered by [`matchable`].
pub fn match_sorted(e: &EnforcementCase, prior: &[&EnforcementCase]) -> MatchResult {
    let mut weak: Option<Category> = None;
    for p in prior {
        let Some(shared) = e.categories.intersection(&p.categories).next().copied() else {
            continue;
        };
        if e.application.intersection(&p.application).next().is_some() {
            return MatchResult::Strong {
                case_id: p.case_id.clone(),
                category: shared,
            };
        }
        weak = Some(weak.map_or(shared, |w| w.min(shared)));
    }
    match weak {
        Some(category) => MatchResult::Weak { category },
        None => MatchResult::NoMatch,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchSummary {
    pub strong: usize,
    pub weak: usize,
    pub no_match: usize,
    pub results: Vec<(String, MatchResult)>,
}

impl MatchSummary {
    pub fn total(&self) -> usize {
        self.strong + self.weak + self.no_match
    }
}

pub fn match_all(cases: &[EnforcementCase], corpus: &[EnforcementCase]) -> MatchSummary {
    let prior = matchable(corpus);
    let mut s = MatchSummary::default();
    for e in cases {
        let r = match_sorted(e, &prior);
        match r {
            MatchResult::Strong { .. } => s.strong += 1,
            MatchResult::Weak { .. } => s.weak += 1,
            MatchResult::NoMatch => s.no_match += 1,
        }
        s.results.push((e.case_id.clone(), r));
    }
    s
}

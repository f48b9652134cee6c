//! Enforcement precedents: taxonomy, matching, summaries and the
//! configuration anti-pattern linter.

pub mod lint;
pub mod matching;
pub mod model;
pub mod summary;
pub mod vocabulary;

pub use lint::{lint, lint_file, lint_str, AntiPattern, AntiPatternFinding, LintError, Severity};
pub use matching::{match_all, match_case, MatchResult, MatchSummary};
pub use model::{
    load_corpus, read_corpus, validate, Category, CorpusError, EnforcementCase, RtbfTask,
};
pub use summary::{layout, render_svg, summarize, CorpusSummary, TreemapCell};

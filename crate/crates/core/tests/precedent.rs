use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use forget_core::config::SystemConfig;
use forget_core::precedent::{
    layout, lint, lint_file, lint_str, load_corpus, match_all, match_case, read_corpus, render_svg,
    summarize, vocabulary, AntiPattern, Category, CorpusError, EnforcementCase, LintError,
    MatchResult, RtbfTask,
};
use proptest::prelude::*;

fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(rel)
}

fn five_year() -> Vec<EnforcementCase> {
    load_corpus(&fixture("precedent/enforcement_5y.jsonl")).unwrap()
}

fn year_six() -> Vec<EnforcementCase> {
    load_corpus(&fixture("precedent/enforcement_y6.jsonl")).unwrap()
}

fn case(id: &str, cats: &[Category], tags: &[&str]) -> EnforcementCase {
    EnforcementCase {
        case_id: id.into(),
        year: 2024,
        categories: cats.iter().copied().collect(),
        uncategorized: false,
        rule_refs: vec!["Art. 17(1)".into()],
        application: tags.iter().map(|t| t.to_string()).collect(),
        note: String::new(),
    }
}

/// Exhaustive pairwise oracle, written without the library's matcher.
fn oracle(e: &EnforcementCase, corpus: &[EnforcementCase]) -> (Option<String>, bool) {
    let mut strong: Option<String> = None;
    let mut rule = false;
    for p in corpus {
        if p.uncategorized || p.categories.is_empty() {
            continue;
        }
        let cat_hit = e.categories.iter().any(|c| p.categories.contains(c));
        let tag_hit = e.application.iter().any(|t| p.application.contains(t));
        if cat_hit {
            rule = true;
            if tag_hit && strong.as_ref().map_or(true, |s| p.case_id < *s) {
                strong = Some(p.case_id.clone());
            }
        }
    }
    (strong, rule)
}

#[test]
fn five_year_category_counts_are_exact() {
    let s = summarize(&five_year());
    let expected = [
        (Category::NoResponse, 54),
        (Category::ExmptGdpr, 41),
        (Category::LateResponse, 25),
        (Category::ExmptOth, 24),
        (Category::Omit, 17),
        (Category::NoApi, 15),
        (Category::ExmptAll, 13),
        (Category::UiTrouble, 8),
        (Category::VerifyMore, 8),
        (Category::Explain, 8),
        (Category::Propagate, 5),
        (Category::BadServ, 5),
        (Category::Dbms, 3),
        (Category::Deflect, 3),
        (Category::NoSrc, 2),
    ];
    assert_eq!(expected.len(), Category::ALL.len());
    for (c, n) in expected {
        assert_eq!(s.count(c), n, "{c}");
    }
    assert_eq!(s.total_cases, 205);
    assert_eq!(s.uncategorized, 5);
}

#[test]
fn task_shares_match_reported_distribution() {
    let s = summarize(&five_year());
    let interface = s.task_share_pct[&RtbfTask::Interface];
    let policy = s.task_share_pct[&RtbfTask::Policy];
    assert!((interface - 49.0).abs() <= 1.0, "interface {interface}");
    assert!((policy - 37.0).abs() <= 1.5, "policy {policy}");
}

#[test]
fn category_task_mapping_is_fixed() {
    use Category::*;
    let want = [
        (
            RtbfTask::Interface,
            vec![
                UiTrouble,
                VerifyMore,
                NoResponse,
                LateResponse,
                Deflect,
                NoSrc,
            ],
        ),
        (
            RtbfTask::Policy,
            vec![Explain, ExmptGdpr, ExmptOth, ExmptAll, BadServ],
        ),
        (RtbfTask::Processing, vec![Propagate, NoApi, Omit]),
        (RtbfTask::Storage, vec![Dbms]),
    ];
    for (task, cats) in want {
        for c in cats {
            assert_eq!(c.task(), task, "{c}");
        }
    }
}

#[test]
fn summary_of_empty_corpus_is_all_zeros() {
    let s = summarize(&[]);
    assert_eq!(s.total_cases, 0);
    assert!(s.category_counts.values().all(|n| *n == 0));
    assert_eq!(s.category_counts.len(), 15);
    assert!(s.task_share_pct.values().all(|p| *p == 0.0));
    assert!(s.treemap.is_empty());
}

#[test]
fn year_six_matches_32_strong_8_weak() {
    let corpus = five_year();
    let y6 = year_six();
    assert_eq!(y6.len(), 40);
    let s = match_all(&y6, &corpus);
    assert_eq!((s.strong, s.weak, s.no_match), (32, 8, 0));
    for (e, (id, r)) in y6.iter().zip(&s.results) {
        assert_eq!(&e.case_id, id);
        let (strong, rule) = oracle(e, &corpus);
        match r {
            MatchResult::Strong { case_id, category } => {
                assert_eq!(Some(case_id.clone()), strong, "{id}");
                assert!(e.categories.contains(category));
            }
            MatchResult::Weak { category } => {
                assert!(strong.is_none() && rule, "{id}");
                assert!(e.categories.contains(category));
            }
            MatchResult::NoMatch => assert!(!rule, "{id}"),
        }
    }
}

#[test]
fn year_six_introduces_no_new_category() {
    let seen: BTreeSet<Category> = five_year()
        .iter()
        .flat_map(|c| c.categories.clone())
        .collect();
    for e in year_six() {
        assert!(e.categories.is_subset(&seen), "{}", e.case_id);
    }
}

#[test]
fn missing_delete_api_matches_the_municipal_processor_case() {
    let corpus = five_year();
    let processor = corpus
        .iter()
        .find(|c| {
            c.application.contains("processor-no-delete-api")
                && c.categories.contains(&Category::NoApi)
        })
        .expect("processor case present")
        .clone();
    let e = case("Q-1", &[Category::NoApi], &["missing-delete-api"]);
    let r = match_case(&e, std::slice::from_ref(&processor));
    assert_eq!(
        r,
        MatchResult::Strong {
            case_id: processor.case_id.clone(),
            category: Category::NoApi
        }
    );
    let (strong, _) = oracle(&e, &corpus);
    assert_eq!(
        match_case(&e, &corpus),
        MatchResult::Strong {
            case_id: strong.unwrap(),
            category: Category::NoApi
        }
    );
}

#[test]
fn empty_corpus_gives_no_match() {
    for e in year_six() {
        assert_eq!(match_case(&e, &[]), MatchResult::NoMatch);
    }
}

#[test]
fn uncategorized_cases_are_never_matched() {
    let corpus = five_year();
    let unc: Vec<EnforcementCase> = corpus.iter().filter(|c| c.uncategorized).cloned().collect();
    assert_eq!(unc.len(), 5);
    for u in &unc {
        let tags: Vec<&str> = u.application.iter().map(|s| s.as_str()).collect();
        let e = case("Q-2", &[Category::NoResponse], &tags);
        assert_eq!(match_case(&e, &unc), MatchResult::NoMatch);
    }
}

#[test]
fn tie_break_is_earliest_case_id() {
    let corpus = vec![
        case("C-3", &[Category::Omit], &["false-completion"]),
        case("C-1", &[Category::Omit], &["false-completion"]),
        case("C-2", &[Category::Omit], &["false-completion"]),
    ];
    let e = case("Q", &[Category::Omit], &["false-completion"]);
    assert_eq!(
        match_case(&e, &corpus),
        MatchResult::Strong {
            case_id: "C-1".into(),
            category: Category::Omit
        }
    );
}

#[test]
fn shared_tag_without_shared_category_is_not_strong() {
    let corpus = vec![
        case("C-1", &[Category::Omit], &["ack-missing"]),
        case("C-2", &[Category::NoResponse], &["request-lost"]),
    ];
    let e = case("Q", &[Category::NoResponse], &["ack-missing"]);
    assert_eq!(
        match_case(&e, &corpus),
        MatchResult::Weak {
            category: Category::NoResponse
        }
    );
}

#[test]
fn matching_and_summary_are_deterministic() {
    let (a, b) = (five_year(), five_year());
    let y6 = year_six();
    assert_eq!(match_all(&y6, &a), match_all(&y6, &b));
    let mut shuffled = a.clone();
    shuffled.reverse();
    assert_eq!(
        match_all(&y6, &a).results,
        match_all(&y6, &shuffled).results
    );
    assert_eq!(summarize(&a), summarize(&b));
}

#[test]
fn every_fixture_tag_is_in_the_vocabulary() {
    for c in five_year().iter().chain(&year_six()) {
        for t in &c.application {
            assert!(vocabulary::contains(t), "{t}");
            assert!(vocabulary::describe(t).is_some());
        }
        assert!(
            c.rule_refs.iter().any(|r| r.starts_with("Art. 17")),
            "{}",
            c.case_id
        );
    }
}

#[test]
fn invalid_cases_are_rejected() {
    let unknown_tag =
        r#"{"case_id":"X","year":2020,"categories":["OMIT"],"application":["made-up-tag"]}"#;
    assert!(matches!(
        read_corpus(unknown_tag.as_bytes()),
        Err(CorpusError::Invalid { .. })
    ));
    let no_category = r#"{"case_id":"X","year":2020,"categories":[]}"#;
    assert!(matches!(
        read_corpus(no_category.as_bytes()),
        Err(CorpusError::Invalid { .. })
    ));
    let bad_category = r#"{"case_id":"X","year":2020,"categories":["NOPE"]}"#;
    assert!(matches!(
        read_corpus(bad_category.as_bytes()),
        Err(CorpusError::Malformed { line: 1, .. })
    ));
    let dup = "{\"case_id\":\"X\",\"year\":2020,\"categories\":[\"OMIT\"]}\n{\"case_id\":\"X\",\"year\":2020,\"categories\":[\"OMIT\"]}";
    assert!(matches!(
        read_corpus(dup.as_bytes()),
        Err(CorpusError::Invalid { .. })
    ));
}

#[test]
fn treemap_exports_json_and_svg() {
    let s = summarize(&five_year());
    assert_eq!(s.treemap.len(), 15);
    let total: usize = s.category_counts.values().sum();
    for cell in &s.treemap {
        let want = cell.count as f64 / total as f64;
        assert!((cell.w * cell.h - want).abs() < 1e-9, "{:?}", cell.category);
        assert_eq!(cell.task, cell.category.task());
    }
    let json = serde_json::to_value(&s).unwrap();
    assert_eq!(json["category_counts"]["NO-RESPONSE"], 54);
    assert_eq!(json["category_counts"]["NO_API"], 15);
    assert!(json["treemap"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["w"].is_number()));
    let svg = render_svg(&s.treemap, 960, 600);
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches("<rect").count(), 15);
    for t in RtbfTask::ALL {
        assert!(svg.contains(t.color()));
    }
}

#[test]
fn clean_config_has_no_findings() {
    assert!(lint_file(&fixture("lint/clean.toml")).unwrap().is_empty());
}

#[test]
fn each_single_fault_config_triggers_only_its_pattern() {
    for p in AntiPattern::ALL {
        let path = fixture(&format!("lint/ap{}.toml", p.id()));
        let found: BTreeSet<AntiPattern> = lint_file(&path)
            .unwrap()
            .into_iter()
            .map(|f| f.pattern)
            .collect();
        assert_eq!(found, BTreeSet::from([p]), "{}", path.display());
    }
}

#[test]
fn finding_ids_map_one_to_one() {
    let ids: BTreeSet<u8> = AntiPattern::ALL.iter().map(|p| p.id()).collect();
    assert_eq!(ids, (1..=6).collect());
    for p in AntiPattern::ALL {
        let path = fixture(&format!("lint/ap{}.toml", p.id()));
        for f in lint_file(&path).unwrap() {
            assert_eq!(f.id, f.pattern.id());
            assert!(!f.location.is_empty() && !f.message.is_empty());
        }
    }
}

#[test]
fn email_unique_key_is_ap1() {
    let f = lint_str("[schema]\nunique_key = \"email\"").unwrap();
    assert_eq!(f.len(), 1);
    assert_eq!(f[0].pattern, AntiPattern::PersonalDataAsPrimaryKey);
    assert_eq!(f[0].location, "schema.unique_key");
}

#[test]
fn deactivate_only_is_ap4() {
    let f = lint_str("[deletion]\ndepth = \"deactivate-only\"").unwrap();
    assert_eq!(
        f.iter().map(|f| f.pattern).collect::<Vec<_>>(),
        vec![AntiPattern::DeletionDepth]
    );
}

#[test]
fn external_propagation_without_legal_basis_is_ap4() {
    let f = lint_str("[[external]]\nname = \"search-publishers\"\npropagate = true").unwrap();
    assert_eq!(f.len(), 1);
    assert_eq!(f[0].pattern, AntiPattern::DeletionDepth);
    assert_eq!(f[0].location, "external[0]");
    assert!(lint_str("[[external]]\nname = \"x\"\npropagate = false")
        .unwrap()
        .is_empty());
}

#[test]
fn unparseable_config_is_an_error() {
    assert!(matches!(
        lint_str("[deletion\nmode ="),
        Err(LintError::ConfigUnparseable(_))
    ));
    assert!(matches!(
        lint_str("[deletion]\nmode = \"shred\""),
        Err(LintError::ConfigUnparseable(_))
    ));
}

fn arb_case(prefix: &'static str) -> impl Strategy<Value = EnforcementCase> {
    let tags: Vec<&'static str> = vocabulary::TAGS.iter().map(|(t, _)| *t).take(12).collect();
    (
        0u32..1000,
        proptest::sample::subsequence(Category::ALL.to_vec(), 1..3),
        proptest::sample::subsequence(tags, 0..3),
    )
        .prop_map(move |(n, cats, tags)| case(&format!("{prefix}-{n:03}"), &cats, &tags))
}

proptest! {
    #[test]
    fn match_lattice_agrees_with_oracle(
        corpus in proptest::collection::vec(arb_case("C"), 0..30),
        e in arb_case("Q"),
    ) {
        let mut dedup: BTreeMap<String, EnforcementCase> = BTreeMap::new();
        for c in corpus { dedup.entry(c.case_id.clone()).or_insert(c); }
        let corpus: Vec<EnforcementCase> = dedup.into_values().collect();
        let (strong, rule) = oracle(&e, &corpus);
        match match_case(&e, &corpus) {
            MatchResult::Strong { case_id, category } => {
                prop_assert_eq!(Some(case_id.clone()), strong);
                prop_assert!(rule);
                let p = corpus.iter().find(|c| c.case_id == case_id).unwrap();
                prop_assert!(p.categories.contains(&category) && e.categories.contains(&category));
            }
            MatchResult::Weak { category } => {
                prop_assert!(strong.is_none());
                prop_assert!(rule);
                prop_assert!(corpus.iter().any(|p| p.categories.contains(&category)));
            }
            MatchResult::NoMatch => prop_assert!(!rule),
        }
    }

    #[test]
    fn lint_is_pure(text in proptest::sample::select(vec!["clean", "ap1", "ap2", "ap3", "ap4", "ap5", "ap6"])) {
        let c = SystemConfig::load(&fixture(&format!("lint/{text}.toml"))).unwrap();
        prop_assert_eq!(lint(&c), lint(&c.clone()));
    }

    #[test]
    fn layout_is_proportional(counts in proptest::collection::vec(0usize..60, 15)) {
        let m: BTreeMap<Category, usize> = Category::ALL.iter().copied().zip(counts.iter().copied()).collect();
        let total: usize = counts.iter().sum();
        let cells = layout(&m);
        prop_assert_eq!(cells.len(), counts.iter().filter(|n| **n > 0).count());
        for c in &cells {
            prop_assert!((c.w * c.h - c.count as f64 / total as f64).abs() < 1e-9);
        }
    }
}

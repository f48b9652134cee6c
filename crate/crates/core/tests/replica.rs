mod common;

use common::*;
use forget_core::engine::document::DocumentDraft;
use forget_core::engine::query::{Query, SearchRequest};
use forget_core::engine::{EngineConfig, Selector};
use forget_core::subsystems::replica::{ReplicationMode, Store, StoreError};
use proptest::prelude::*;

fn store(dir: &std::path::Path, mode: ReplicationMode) -> Store {
    let (_, s) = sim();
    Store::open(
        dir,
        EngineConfig {
            seal_threshold: 5,
            ..Default::default()
        },
        mode,
        s,
    )
    .unwrap()
}

#[test]
fn replica_read_path_sees_primary_writes() {
    let dir = tempfile::tempdir().unwrap();
    let st = store(dir.path(), ReplicationMode::Strict);
    let id = st
        .index(DocumentDraft::new().field("body", "mirrored"))
        .unwrap();
    let resp = st
        .search_replica(&SearchRequest::new(Query::term("mirrored")))
        .unwrap();
    assert_eq!(resp.doc_ids(), vec![id]);
    assert!(st.in_sync());
}

#[test]
fn strict_mode_unreachable_replica_fails_without_divergence() {
    let dir = tempfile::tempdir().unwrap();
    let st = store(dir.path(), ReplicationMode::Strict);
    st.index(DocumentDraft::new().field("body", "one")).unwrap();
    let before = st.primary().state_digest();
    st.set_replica_reachable(false);
    assert!(matches!(
        st.index(DocumentDraft::new().field("body", "two")),
        Err(StoreError::ReplicaUnreachable)
    ));
    assert!(matches!(st.flush(), Err(StoreError::ReplicaUnreachable)));
    assert_eq!(st.primary().state_digest(), before);
    st.set_replica_reachable(true);
    assert!(st.in_sync());
}

#[test]
fn queued_mode_catches_up_on_resync() {
    let dir = tempfile::tempdir().unwrap();
    let st = store(dir.path(), ReplicationMode::Queued);
    st.set_replica_reachable(false);
    for i in 0..7 {
        st.index(DocumentDraft::new().field("body", format!("q{i}")))
            .unwrap();
    }
    st.mark_delete(&Selector::doc("doc-2")).unwrap();
    st.flush().unwrap();
    assert_eq!(st.pending().len(), 9);
    assert!(!st.in_sync());
    assert!(st.resync().is_err());
    st.set_replica_reachable(true);
    assert_eq!(st.resync().unwrap(), 9);
    assert!(st.in_sync());
}

#[test]
fn replicated_snapshot_ops_use_primary_ids() {
    let dir = tempfile::tempdir().unwrap();
    let st = store(dir.path(), ReplicationMode::Strict);
    let id = st
        .index(DocumentDraft::new().field("body", "snap"))
        .unwrap();
    let s = st.snapshot_create().unwrap();
    let n = st
        .snapshot_rewrite(&s.id, &Selector::doc(id.as_str()))
        .unwrap();
    let p: Vec<String> = st
        .primary()
        .snapshot_list()
        .unwrap()
        .into_iter()
        .map(|m| m.id)
        .collect();
    let r: Vec<String> = st
        .replica()
        .snapshot_list()
        .unwrap()
        .into_iter()
        .map(|m| m.id)
        .collect();
    assert_eq!(p, vec![n.id.clone()]);
    assert_eq!(p, r);
}

#[derive(Debug, Clone)]
enum Op {
    Index,
    Delete(usize),
    Flush,
    Merge(bool),
    Sweep,
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn acknowledged_mutations_leave_copies_equal(ops in prop::collection::vec(prop_oneof![
        4 => Just(Op::Index),
        2 => (0usize..32).prop_map(Op::Delete),
        1 => Just(Op::Flush),
        1 => any::<bool>().prop_map(Op::Merge),
        1 => Just(Op::Sweep),
    ], 1..40), seed in any::<u64>()) {
        let dir = tempfile::tempdir().unwrap();
        let st = store(dir.path(), ReplicationMode::Strict);
        let mut r = rng(seed);
        let mut live = Vec::new();
        for o in ops {
            match o {
                Op::Index => live.push(st.index(doc(&mut r, "s", &["w"]).0).unwrap()),
                Op::Delete(i) if !live.is_empty() => {
                    let id = live.remove(i % live.len());
                    st.mark_delete(&Selector::doc(id.as_str())).unwrap();
                }
                Op::Delete(_) => {}
                Op::Flush => { st.flush().unwrap(); }
                Op::Merge(x) => { st.merge(x).unwrap(); }
                Op::Sweep => { st.ttl_sweep(forget_core::clock::Timestamp(u64::MAX / 2)).unwrap(); }
            }
            prop_assert!(st.in_sync());
        }
    }
}

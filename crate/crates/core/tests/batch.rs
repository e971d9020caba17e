mod common;

use std::collections::BTreeSet;

use common::two_car;
use squery::query::{batch_query, batch_query_files, QueryError, QueryOptions};
use squery::synth::{default_map, generate_trace, SynthConfig};
use squery::trace::LabelTrace;

fn traces() -> Vec<LabelTrace> {
    let p = two_car();
    let map = default_map();
    let good: Vec<LabelTrace> = (0..2)
        .map(|s| generate_trace(&p.ast, &map, &SynthConfig::new(s, 20)).unwrap())
        .collect();
    let mut braking = good[0].clone();
    for f in &mut braking.frames {
        for o in f.objs.values_mut() {
            o.behaviors = BTreeSet::from(["Brake".to_string()]);
        }
    }
    let mut lonely = good[1].clone();
    let keep = lonely.objects[0].id.clone();
    lonely.objects.retain(|o| o.id == keep);
    for f in &mut lonely.frames {
        f.objs.retain(|id, _| *id == keep);
    }
    let mut walkers = good[0].clone();
    for o in &mut walkers.objects {
        o.class = "Pedestrian".into();
    }
    vec![good[0].clone(), braking, good[1].clone(), lonely, walkers]
}

#[test]
fn batch_reports_each_trace_in_order() {
    let p = two_car();
    let ts = traces();
    let rs = batch_query(&p, &ts, 10, &default_map(), &QueryOptions::default());
    let matched: Vec<bool> = rs.into_iter().map(|r| r.unwrap().matched).collect();
    assert_eq!(matched, vec![true, false, true, false, false]);
}

#[test]
fn unreadable_files_fail_individually() {
    let p = two_car();
    let dir = tempfile::tempdir().unwrap();
    let mut paths = Vec::new();
    for (k, t) in traces().iter().enumerate() {
        let path = dir.path().join(format!("t{k}.json"));
        t.save(&path).unwrap();
        paths.push(path);
    }
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    paths.insert(1, bad);
    paths.push(dir.path().join("missing.json"));
    let rs = batch_query_files(&p, &paths, 10, &default_map(), &QueryOptions::default());
    assert_eq!(rs.len(), 7);
    assert!(matches!(rs[1], Err(QueryError::Trace(_))));
    assert!(matches!(rs[6], Err(QueryError::Trace(_))));
    let matched = rs.iter().filter(|r| matches!(r, Ok(q) if q.matched)).count();
    assert_eq!(matched, 2);
}

#[test]
fn empty_batch_is_empty() {
    let p = two_car();
    assert!(batch_query(&p, &[], 5, &default_map(), &QueryOptions::default()).is_empty());
    assert!(batch_query_files(&p, &[], 5, &default_map(), &QueryOptions::default()).is_empty());
}

#[test]
fn timeouts_are_per_trace() {
    let p = two_car();
    let ts = traces();
    let opts = QueryOptions {
        find_all: false,
        timeout: Some(std::time::Duration::ZERO),
    };
    let rs = batch_query(&p, &ts, 10, &default_map(), &opts);
    assert_eq!(rs.len(), ts.len());
    for (r, t) in rs.iter().zip(&ts) {
        // Traces without candidates finish before any window is timed.
        let has_candidate = squery::query::CandidateEnumerator::new(&p.ast, t, 10).next().is_some();
        assert_eq!(matches!(r, Err(QueryError::Timeout { .. })), has_candidate);
    }
}

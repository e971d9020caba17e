//! Matching a compiled program against a label trace.
//!
//! A match is a correspondence from program objects to trace objects and a
//! window of exactly `m` frames in which the first frame lies in the
//! support of the initial scene and every object's machine can produce the
//! observed behaviors frame by frame.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::compiler::{self, CompileError, CompileOptions, HfsmBundle};
use crate::dsl::{self, DslError, ScenarioAst};
use crate::engine::{self, StepEnv};
use crate::guards::EvalError;
use crate::trace::{LabelTrace, TraceError};
use crate::world::{self, ConeParams, RoadMap};

/// Injective map from program objects to trace object ids, in program order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Correspondence {
    pairs: Vec<(String, String)>,
}

impl Correspondence {
    pub fn new(pairs: Vec<(String, String)>) -> Self {
        Correspondence { pairs }
    }

    pub fn get(&self, program: &str) -> Option<&str> {
        self.pairs.iter().find(|(p, _)| p == program).map(|(_, t)| t.as_str())
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }
}

impl Serialize for Correspondence {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(self.pairs.len()))?;
        for (p, t) in &self.pairs {
            m.serialize_entry(p, t)?;
        }
        m.end()
    }
}

impl fmt::Display for Correspondence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.pairs.iter().map(|(p, t)| format!("{p}->{t}")).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// Lexicographic enumeration of candidate correspondences.
///
/// A trace object is a candidate for a program object when the classes are
/// equal and its longest contiguous presence spans at least `m` frames.
pub struct CandidateEnumerator {
    names: Vec<String>,
    options: Vec<Vec<String>>,
    pos: Vec<usize>,
    blocked: HashSet<Vec<usize>>,
    started: bool,
    done: bool,
}

impl CandidateEnumerator {
    pub fn new(ast: &ScenarioAst, trace: &LabelTrace, m: usize) -> Self {
        let names: Vec<String> = ast.objects.iter().map(|o| o.name.clone()).collect();
        let options = ast
            .objects
            .iter()
            .map(|o| {
                trace
                    .objects
                    .iter()
                    .filter(|t| t.class == o.class && trace.longest_presence(&t.id) >= m)
                    .map(|t| t.id.clone())
                    .collect()
            })
            .collect();
        CandidateEnumerator {
            done: names.is_empty(),
            names,
            options,
            pos: Vec::new(),
            blocked: HashSet::new(),
            started: false,
        }
    }

    /// Exclude a correspondence from the rest of the enumeration.
    pub fn block(&mut self, c: &Correspondence) {
        let idx: Option<Vec<usize>> = self
            .names
            .iter()
            .zip(&self.options)
            .map(|(n, opts)| c.get(n).and_then(|t| opts.iter().position(|o| o == t)))
            .collect();
        if let Some(idx) = idx {
            self.blocked.insert(idx);
        }
    }

    fn current(&self) -> Correspondence {
        Correspondence::new(
            self.names
                .iter()
                .zip(&self.pos)
                .enumerate()
                .map(|(k, (n, p))| (n.clone(), self.options[k][*p].clone()))
                .collect(),
        )
    }

    /// Advance `pos` to the next complete valid assignment at or after it.
    fn search(&mut self) -> bool {
        let n = self.names.len();
        loop {
            let Some(&p) = self.pos.last() else { return false };
            let lvl = self.pos.len() - 1;
            if p >= self.options[lvl].len() {
                self.pos.pop();
                if let Some(x) = self.pos.last_mut() {
                    *x += 1;
                }
                continue;
            }
            let id = &self.options[lvl][p];
            let used = (0..lvl).any(|k| &self.options[k][self.pos[k]] == id);
            if used || (lvl + 1 == n && self.blocked.contains(&self.pos)) {
                self.pos[lvl] += 1;
                continue;
            }
            if lvl + 1 == n {
                return true;
            }
            self.pos.push(0);
        }
    }
}

impl Iterator for CandidateEnumerator {
    type Item = Correspondence;

    fn next(&mut self) -> Option<Correspondence> {
        if self.done {
            return None;
        }
        if self.started {
            *self.pos.last_mut().expect("complete assignment") += 1;
        } else {
            self.started = true;
            self.pos = vec![0];
        }
        if self.search() {
            Some(self.current())
        } else {
            self.done = true;
            None
        }
    }
}

#[derive(Debug, Error)]
pub enum QueryError {
    #[error(transparent)]
    Dsl(#[from] DslError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("query timed out after {} correspondences and {} windows", .stats.correspondences_tried, .stats.windows_checked)]
    Timeout { stats: Stats },
}

/// A parsed and compiled scenario program.
#[derive(Clone, Debug)]
pub struct Program {
    pub ast: ScenarioAst,
    pub bundle: HfsmBundle,
    pub cones: BTreeMap<String, ConeParams>,
    pub ego: String,
}

impl Program {
    pub fn compile(ast: ScenarioAst, opts: &CompileOptions) -> Result<Program, QueryError> {
        let bundle = compiler::translate(&ast, opts)?;
        let cones = world::cone_params(&ast)?;
        let ego = world::ego_name(&ast).to_string();
        Ok(Program {
            ast,
            bundle,
            cones,
            ego,
        })
    }

    pub fn from_source(src: &str, opts: &CompileOptions) -> Result<Program, QueryError> {
        Self::compile(dsl::parse(src)?, opts)
    }

    pub fn env<'a>(&'a self, map: &'a RoadMap) -> StepEnv<'a> {
        StepEnv {
            map,
            cones: &self.cones,
            ego: &self.ego,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct QueryOptions {
    /// Report every matching correspondence instead of stopping at the first.
    pub find_all: bool,
    pub timeout: Option<Duration>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub correspondence: Correspondence,
    /// Frame position where the window starts.
    pub window_start: usize,
    pub t: i64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Stats {
    pub correspondences_tried: u64,
    pub windows_checked: u64,
    pub elapsed_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QueryResult {
    pub matched: bool,
    pub witness: Option<Witness>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub witnesses: Vec<Witness>,
    pub stats: Stats,
}

impl QueryResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("result serializes")
    }
}

/// Whether the `m` frames starting at `start` match under `corr`.
pub fn match_window_checked(
    program: &Program,
    trace: &LabelTrace,
    corr: &Correspondence,
    start: usize,
    m: usize,
    map: &RoadMap,
) -> Result<bool, EvalError> {
    if m == 0 || start + m > trace.len() {
        return Ok(false);
    }
    for (_, id) in corr.pairs() {
        if !trace.present_throughout(id, start, m) {
            return Ok(false);
        }
    }
    let frames = &trace.frames[start..start + m];
    if !world::initial_input_match(&program.ast, &frames[0], corr, map, &program.cones)? {
        return Ok(false);
    }
    let env = program.env(map);
    let mut states = engine::initial_step(&program.bundle, &frames[0], corr, &env)?;
    if engine::any_empty(&states) {
        return Ok(false);
    }
    for f in &frames[1..] {
        states = engine::valid_step(&states, &program.bundle, f, corr, &env)?;
        if engine::any_empty(&states) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Like [`match_window_checked`], with evaluation errors counting as a mismatch.
pub fn match_window(
    program: &Program,
    trace: &LabelTrace,
    corr: &Correspondence,
    start: usize,
    m: usize,
    map: &RoadMap,
) -> bool {
    match match_window_checked(program, trace, corr, start, m, map) {
        Ok(b) => b,
        Err(e) => {
            log::debug!("window {start} under {corr} rejected: {e}");
            false
        }
    }
}

pub fn query(
    program: &Program,
    trace: &LabelTrace,
    m: usize,
    map: &RoadMap,
    opts: &QueryOptions,
) -> Result<QueryResult, QueryError> {
    if m == 0 {
        return Err(QueryError::Config("minimum duration must be at least 1".into()));
    }
    if m > trace.len() {
        return Err(QueryError::Config(format!(
            "minimum duration {m} exceeds trace length {}",
            trace.len()
        )));
    }
    let started = Instant::now();
    let mut stats = Stats::default();
    let mut witnesses = Vec::new();
    let mut cands = CandidateEnumerator::new(&program.ast, trace, m);
    while let Some(corr) = cands.next() {
        stats.correspondences_tried += 1;
        for start in 0..=trace.len() - m {
            if let Some(limit) = opts.timeout {
                if started.elapsed() > limit {
                    stats.elapsed_ms = started.elapsed().as_secs_f64() * 1e3;
                    return Err(QueryError::Timeout { stats });
                }
            }
            stats.windows_checked += 1;
            if match_window(program, trace, &corr, start, m, map) {
                witnesses.push(Witness {
                    correspondence: corr.clone(),
                    window_start: start,
                    t: trace.frames[start].t,
                });
                break;
            }
        }
        if !witnesses.is_empty() && !opts.find_all {
            break;
        }
        cands.block(&corr);
    }
    stats.elapsed_ms = started.elapsed().as_secs_f64() * 1e3;
    let witness = witnesses.first().cloned();
    if !opts.find_all {
        witnesses.clear();
    }
    Ok(QueryResult {
        matched: witness.is_some(),
        witness,
        witnesses,
        stats,
    })
}

/// Query many traces in parallel; each result is independent.
pub fn batch_query(
    program: &Program,
    traces: &[LabelTrace],
    m: usize,
    map: &RoadMap,
    opts: &QueryOptions,
) -> Vec<Result<QueryResult, QueryError>> {
    traces.par_iter().map(|t| query(program, t, m, map, opts)).collect()
}

/// Load and query trace files in parallel; load failures are per-item errors.
pub fn batch_query_files(
    program: &Program,
    paths: &[PathBuf],
    m: usize,
    map: &RoadMap,
    opts: &QueryOptions,
) -> Vec<Result<QueryResult, QueryError>> {
    paths
        .par_iter()
        .map(|p| {
            let t = LabelTrace::load(p)?;
            query(program, &t, m, map, opts)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace_with(objects: &[(&str, &str, usize)], len: usize) -> LabelTrace {
        let objs: Vec<String> = objects
            .iter()
            .map(|(id, c, _)| format!(r#"{{"id":"{id}","class":"{c}"}}"#))
            .collect();
        let frames: Vec<String> = (0..len)
            .map(|t| {
                let present: Vec<String> = objects
                    .iter()
                    .filter(|(_, _, n)| t < *n)
                    .map(|(id, _, _)| format!(r#""{id}":{{"pos":[0,0],"heading":0,"behaviors":["X"]}}"#))
                    .collect();
                format!(r#"{{"t":{t},"objs":{{{}}}}}"#, present.join(","))
            })
            .collect();
        LabelTrace::from_json_str(&format!(
            r#"{{"hz":2,"objects":[{}],"frames":[{}]}}"#,
            objs.join(","),
            frames.join(",")
        ))
        .unwrap()
    }

    fn ids(c: &Correspondence) -> Vec<&str> {
        c.pairs().iter().map(|(_, t)| t.as_str()).collect()
    }

    #[test]
    fn candidates_are_injective_lexicographic_and_filtered() {
        let ast = dsl::parse("ego = new Car\nb = new Car\np = new Pedestrian\n").unwrap();
        let tr = trace_with(
            &[
                ("c1", "Car", 5),
                ("c2", "Car", 5),
                ("c3", "Car", 2),
                ("w", "Pedestrian", 5),
            ],
            5,
        );
        let all: Vec<_> = CandidateEnumerator::new(&ast, &tr, 3).collect();
        let got: Vec<_> = all.iter().map(ids).collect();
        assert_eq!(got, vec![vec!["c1", "c2", "w"], vec!["c2", "c1", "w"]]);
        let all: Vec<_> = CandidateEnumerator::new(&ast, &tr, 2).collect();
        assert_eq!(all.len(), 6);
    }

    #[test]
    fn blocked_candidates_are_skipped() {
        let ast = dsl::parse("ego = new Car\nb = new Car\n").unwrap();
        let tr = trace_with(&[("c1", "Car", 3), ("c2", "Car", 3), ("c3", "Car", 3)], 3);
        let mut e = CandidateEnumerator::new(&ast, &tr, 1);
        let first = e.next().unwrap();
        assert_eq!(ids(&first), vec!["c1", "c2"]);
        e.block(&Correspondence::new(vec![
            ("ego".into(), "c1".into()),
            ("b".into(), "c3".into()),
        ]));
        let rest: Vec<_> = e.map(|c| ids(&c).join(",")).collect();
        assert_eq!(rest, vec!["c2,c1", "c2,c3", "c3,c1", "c3,c2"]);
    }

    #[test]
    fn no_candidates_when_classes_missing() {
        let ast = dsl::parse("ego = new Truck\n").unwrap();
        let tr = trace_with(&[("c1", "Car", 3)], 3);
        assert_eq!(CandidateEnumerator::new(&ast, &tr, 1).count(), 0);
    }

    #[test]
    fn correspondence_serializes_as_object() {
        let c = Correspondence::new(vec![("ego".into(), "car2".into()), ("otherCar".into(), "car1".into())]);
        assert_eq!(
            serde_json::to_string(&c).unwrap(),
            r#"{"ego":"car2","otherCar":"car1"}"#
        );
        assert_eq!(c.to_string(), "{ego->car2, otherCar->car1}");
    }

    #[test]
    fn invalid_durations_are_configuration_errors() {
        let p = Program::from_source("ego = new Car\n", &CompileOptions::default()).unwrap();
        let tr = trace_with(&[("c1", "Car", 3)], 3);
        let map = RoadMap::default();
        assert!(matches!(
            query(&p, &tr, 0, &map, &QueryOptions::default()),
            Err(QueryError::Config(_))
        ));
        assert!(matches!(
            query(&p, &tr, 4, &map, &QueryOptions::default()),
            Err(QueryError::Config(_))
        ));
        let r = query(&p, &tr, 3, &map, &QueryOptions::default()).unwrap();
        assert!(r.matched);
        assert_eq!(r.witness.unwrap().window_start, 0);
    }
}

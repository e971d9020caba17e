//! Reference matcher by explicit run enumeration over flattened machines.
//!
//! Independent of the hierarchical engine: it walks the flat NFA path by
//! path, and enumerates correspondences without duration-based pruning.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::compiler::{flatten, FlatNfa, FlatTarget, Label};
use crate::engine::StepEnv;
use crate::guards::{guard_sat, EvalError, TriState};
use crate::query::{Correspondence, Program};
use crate::trace::{Frame, LabelTrace};
use crate::world::{self, RoadMap};

pub const MAX_FRAMES: usize = 12;
pub const MAX_STATES: usize = 8;
/// Upper bound on explored path prefixes per enumeration.
pub const MAX_EXPANSIONS: usize = 1 << 22;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("oracle budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Every output sequence the flat machine can produce over `frames`,
/// starting from its initial state in the first frame.
pub fn enumerate_runs(
    nfa: &FlatNfa,
    frames: &[Frame],
    corr: &Correspondence,
    env: &StepEnv,
) -> Result<BTreeSet<Vec<Label>>, OracleError> {
    if frames.len() > MAX_FRAMES || nfa.states.len() > MAX_STATES {
        return Err(OracleError::BudgetExceeded(format!(
            "{} frames and {} states exceed {MAX_FRAMES} and {MAX_STATES}",
            frames.len(),
            nfa.states.len()
        )));
    }
    let mut runs = BTreeSet::new();
    if frames.is_empty() {
        runs.insert(Vec::new());
        return Ok(runs);
    }
    // Guard truth values per frame, computed on first use.
    let mut table: Vec<Vec<Option<TriState>>> = vec![vec![None; nfa.guards.len()]; frames.len()];
    let mut stack = vec![(nfa.initial, vec![nfa.states[nfa.initial].label.clone()])];
    let mut expansions = 0usize;
    while let Some((s, labels)) = stack.pop() {
        expansions += 1;
        if expansions > MAX_EXPANSIONS {
            return Err(OracleError::BudgetExceeded(format!(
                "more than {MAX_EXPANSIONS} path prefixes"
            )));
        }
        let j = labels.len();
        if j == frames.len() {
            runs.insert(labels);
            continue;
        }
        let ctx = env.context(&frames[j], corr);
        for e in nfa.edges_from(s) {
            let mut enabled = true;
            for (g, pol) in &e.literals {
                let slot = &mut table[j][g.0 as usize];
                let ts = match slot {
                    Some(t) => *t,
                    None => {
                        let t = guard_sat(&nfa.guards[g.0 as usize].expr, &ctx)?;
                        *slot = Some(t);
                        t
                    }
                };
                if !ts.with_polarity(*pol).can_true {
                    enabled = false;
                    break;
                }
            }
            if let (true, FlatTarget::State(t)) = (enabled, e.to) {
                let mut next = labels.clone();
                next.push(nfa.states[t].label.clone());
                stack.push((t, next));
            }
        }
    }
    Ok(runs)
}

fn injective(program: &Program, trace: &LabelTrace) -> Vec<Correspondence> {
    fn go(
        program: &Program,
        trace: &LabelTrace,
        k: usize,
        acc: &mut Vec<(String, String)>,
        out: &mut Vec<Correspondence>,
    ) {
        if k == program.ast.objects.len() {
            out.push(Correspondence::new(acc.clone()));
            return;
        }
        let obj = &program.ast.objects[k];
        for t in &trace.objects {
            if t.class == obj.class && !acc.iter().any(|(_, id)| *id == t.id) {
                acc.push((obj.name.clone(), t.id.clone()));
                go(program, trace, k + 1, acc, out);
                acc.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(program, trace, 0, &mut Vec::new(), &mut out);
    out
}

/// Exhaustive match decision. Windows where evaluation fails do not match.
pub fn brute_force_match(program: &Program, trace: &LabelTrace, m: usize, map: &RoadMap) -> Result<bool, OracleError> {
    if m == 0 || m > trace.len() {
        return Ok(false);
    }
    let nfas: Vec<FlatNfa> = program.bundle.machines.iter().map(flatten).collect();
    let env = program.env(map);
    for corr in injective(program, trace) {
        'window: for start in 0..=trace.len() - m {
            let frames = &trace.frames[start..start + m];
            let ids: Vec<&String> = corr.pairs().iter().map(|(_, id)| id).collect();
            if !frames.iter().all(|f| ids.iter().all(|id| f.objs.contains_key(*id))) {
                continue;
            }
            match world::initial_input_match(&program.ast, &frames[0], &corr, map, &program.cones) {
                Ok(true) => {}
                _ => continue,
            }
            for nfa in &nfas {
                let id = corr.get(&nfa.object).expect("complete correspondence");
                let runs = match enumerate_runs(nfa, frames, &corr, &env) {
                    Ok(r) => r,
                    Err(OracleError::Eval(_)) => continue 'window,
                    Err(e) => return Err(e),
                };
                let consistent = runs
                    .iter()
                    .any(|run| run.iter().zip(frames).all(|(l, f)| l.admits(&f.objs[id].behaviors)));
                if !consistent {
                    continue 'window;
                }
            }
            return Ok(true);
        }
    }
    Ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::CompileOptions;
    use crate::dsl::tests::TWO_CAR;
    use std::collections::BTreeMap;

    #[test]
    fn runs_respect_guard_truth() {
        let p = Program::from_source(TWO_CAR, &CompileOptions::default()).unwrap();
        let nfa = flatten(p.bundle.get("ego").unwrap());
        let map = RoadMap::default();
        let env = p.env(&map);
        let corr = Correspondence::new(vec![("ego".into(), "a".into()), ("otherCar".into(), "b".into())]);
        let frame = |d: f64| Frame {
            t: 0,
            objs: BTreeMap::from([("a".to_string(), state(0.0)), ("b".to_string(), state(d))]),
        };
        fn state(y: f64) -> crate::trace::ObjectState {
            crate::trace::ObjectState {
                pos: [0.0, y, 0.0],
                heading: 0.0,
                lane: None,
                behaviors: BTreeSet::from(["FollowLane".to_string()]),
            }
        }
        let fl = Label::Primitive("FollowLane".into());
        let lc = Label::Primitive("LaneChange".into());
        // Distance 20 keeps FollowLane; 10 allows either; 0.5 forces LaneChange.
        let runs = enumerate_runs(&nfa, &[frame(20.0), frame(20.0)], &corr, &env).unwrap();
        assert_eq!(runs, BTreeSet::from([vec![fl.clone(), fl.clone()]]));
        let runs = enumerate_runs(&nfa, &[frame(20.0), frame(10.0)], &corr, &env).unwrap();
        assert_eq!(runs.len(), 2);
        let runs = enumerate_runs(&nfa, &[frame(20.0), frame(0.5)], &corr, &env).unwrap();
        assert_eq!(runs, BTreeSet::from([vec![fl, lc]]));
    }

    #[test]
    fn budget_is_enforced() {
        let p = Program::from_source(TWO_CAR, &CompileOptions::default()).unwrap();
        let nfa = flatten(p.bundle.get("ego").unwrap());
        let map = RoadMap::default();
        let frames = vec![
            Frame {
                t: 0,
                objs: BTreeMap::new()
            };
            MAX_FRAMES + 1
        ];
        let r = enumerate_runs(&nfa, &frames, &Correspondence::default(), &p.env(&map));
        assert!(matches!(r, Err(OracleError::BudgetExceeded(_))));
    }
}

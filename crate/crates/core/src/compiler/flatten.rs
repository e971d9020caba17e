//! Flattening of a hierarchical machine into a guarded NFA over base states.
//!
//! Each edge carries the conjunction of literals that must be attainable
//! for the step to be possible: the negated exit guards of every level that
//! stays put, plus the guard actually taken. Termination of a child machine
//! is resolved statically by following the parent's completion transitions.

use std::collections::BTreeSet;

use serde::Serialize;

use super::{Guard, GuardId, Hfsm, Label, StateId, StateKind, Trigger};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum FlatTarget {
    State(usize),
    /// The root machine terminated; the run emits nothing further.
    Terminated,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlatState {
    pub name: String,
    pub base: StateId,
    pub label: Label,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlatEdge {
    pub from: usize,
    pub to: FlatTarget,
    /// Each literal `(g, polarity)` must be individually attainable.
    pub literals: Vec<(GuardId, bool)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlatNfa {
    pub object: String,
    pub states: Vec<FlatState>,
    pub initial: usize,
    pub edges: Vec<FlatEdge>,
    pub guards: Vec<Guard>,
}

impl FlatNfa {
    pub fn edges_from(&self, s: usize) -> impl Iterator<Item = &FlatEdge> {
        self.edges.iter().filter(move |e| e.from == s)
    }

    pub fn index_of(&self, base: StateId) -> Option<usize> {
        self.states.iter().position(|s| s.base == base)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Outcome {
    Config(StateId),
    Term,
}

type Lits = BTreeSet<(GuardId, bool)>;

pub fn flatten(h: &Hfsm) -> FlatNfa {
    let bases = h.base_states();
    let states: Vec<FlatState> = bases
        .iter()
        .map(|b| FlatState {
            name: h.state(*b).name.clone(),
            base: *b,
            label: h.label(*b).cloned().expect("base state"),
        })
        .collect();
    let pos = |b: StateId| bases.iter().position(|x| *x == b).expect("base state");
    let mut edges = Vec::new();
    for (k, b) in bases.iter().enumerate() {
        let path = h.path(*b);
        let mut seen = BTreeSet::new();
        for (lits, out) in outcomes(h, &path, 0) {
            let to = match out {
                Outcome::Config(c) => FlatTarget::State(pos(c)),
                Outcome::Term => FlatTarget::Terminated,
            };
            let literals: Vec<_> = lits.into_iter().collect();
            if seen.insert((to, literals.clone())) {
                edges.push(FlatEdge { from: k, to, literals });
            }
        }
    }
    FlatNfa {
        object: h.object.clone(),
        initial: pos(h.initial_base()),
        states,
        edges,
        guards: h.guards.clone(),
    }
}

fn enter(h: &Hfsm, s: StateId) -> Outcome {
    if h.is_terminal(s) {
        Outcome::Term
    } else {
        Outcome::Config(h.descend(s))
    }
}

/// Possible results of one step at level `j` of `path`, with their conditions.
fn outcomes(h: &Hfsm, path: &[StateId], j: usize) -> Vec<(Lits, Outcome)> {
    let s = path[j];
    let mut res = Vec::new();
    let mut stay = Lits::new();
    for t in h.outgoing(s) {
        if let Trigger::Guard { guard, positive } = t.trigger {
            res.push((Lits::from([(guard, positive)]), enter(h, t.to)));
            stay.insert((guard, !positive));
        }
    }
    match h.state(s).kind {
        StateKind::Base(_) => res.push((stay, Outcome::Config(s))),
        StateKind::Composite(_) => {
            for (lits, out) in outcomes(h, path, j + 1) {
                let mut all = stay.clone();
                all.extend(lits);
                match out {
                    Outcome::Config(c) => res.push((all, Outcome::Config(c))),
                    Outcome::Term => {
                        for t in h.outgoing(s).iter().filter(|t| t.trigger == Trigger::ChildTerminated) {
                            res.push((all.clone(), enter(h, t.to)));
                        }
                    }
                }
            }
        }
        StateKind::Terminal => unreachable!("terminal states are never active"),
    }
    res
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::{translate, CompileOptions};
    use crate::dsl::parse;

    #[test]
    fn running_example_flattens_to_two_states() {
        let ast = parse(crate::dsl::tests::TWO_CAR).unwrap();
        let b = translate(&ast, &CompileOptions::default()).unwrap();
        let nfa = flatten(b.get("ego").unwrap());
        let names: Vec<_> = nfa.states.iter().map(|s| s.name.as_str()).collect();
        assert_eq!(names, vec!["FollowLane", "LaneChange"]);
        assert_eq!(nfa.initial, 0);
        let g = GuardId(0);
        let mut e: Vec<_> = nfa.edges.iter().map(|e| (e.from, e.to, e.literals.clone())).collect();
        e.sort();
        assert_eq!(
            e,
            vec![
                (0, FlatTarget::State(0), vec![(g, false)]),
                (0, FlatTarget::State(1), vec![(g, true)]),
                (1, FlatTarget::State(0), vec![(g, false)]),
                (1, FlatTarget::State(1), vec![(g, true)]),
            ]
        );
        assert!(!nfa.edges.iter().any(|e| e.to == FlatTarget::Terminated));
    }

    #[test]
    fn root_termination_reaches_terminated() {
        let ast = parse("behavior B():\n    do FollowLane until (distance from ego to x) < 5\nego = new Car with behavior B\nx = new Car\n").unwrap();
        let b = translate(&ast, &CompileOptions::default()).unwrap();
        let nfa = flatten(b.get("ego").unwrap());
        assert!(nfa
            .edges
            .iter()
            .any(|e| e.to == FlatTarget::Terminated && e.literals == vec![(GuardId(0), true)]));
    }
}

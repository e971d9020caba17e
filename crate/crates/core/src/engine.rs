//! Nondeterministic execution of compiled machines against observed frames.
//!
//! A step first transitions using the current frame's inputs, then keeps
//! only configurations whose output is among the observed behaviors of that
//! frame. Exits are examined top-down, one transition per level; a level
//! stays put only if every exit guard can be false.

use std::collections::{BTreeMap, BTreeSet};

use crate::compiler::{GuardId, Hfsm, HfsmBundle, StateId, StateKind, Trigger};
use crate::guards::{guard_sat, EvalContext, EvalError, TriState};
use crate::query::Correspondence;
use crate::trace::Frame;
use crate::world::{ConeParams, RoadMap};

/// Reachable base states per program object.
pub type BaseStateSet = BTreeMap<String, BTreeSet<StateId>>;

/// Static inputs shared by every step.
#[derive(Clone, Copy)]
pub struct StepEnv<'a> {
    pub map: &'a RoadMap,
    pub cones: &'a BTreeMap<String, ConeParams>,
    pub ego: &'a str,
}

impl<'a> StepEnv<'a> {
    pub fn context(&self, frame: &'a Frame, corr: &'a Correspondence) -> EvalContext<'a> {
        EvalContext {
            map: self.map,
            frame,
            corr,
            cones: self.cones,
            ego: self.ego,
        }
    }
}

/// Initial configuration of every machine; guards are not consulted.
pub fn initial_base_states(bundle: &HfsmBundle) -> BaseStateSet {
    bundle
        .machines
        .iter()
        .map(|h| (h.object.clone(), BTreeSet::from([h.initial_base()])))
        .collect()
}

#[derive(Clone, Copy)]
enum Outcome {
    Config(StateId),
    Term,
}

/// Base states reachable in one step from `current`, before pruning.
/// Reaching the root terminal state drops the configuration.
pub fn step_reachable(
    h: &Hfsm,
    current: &BTreeSet<StateId>,
    sat: &mut dyn FnMut(GuardId) -> Result<TriState, EvalError>,
) -> Result<BTreeSet<StateId>, EvalError> {
    let mut memo: BTreeMap<GuardId, TriState> = BTreeMap::new();
    let mut cached = |g: GuardId| -> Result<TriState, EvalError> {
        if let Some(t) = memo.get(&g) {
            return Ok(*t);
        }
        let t = sat(g)?;
        memo.insert(g, t);
        Ok(t)
    };
    let mut out = BTreeSet::new();
    for b in current {
        let path = h.path(*b);
        let mut results = Vec::new();
        level(h, &path, 0, &mut cached, &mut results)?;
        for r in results {
            if let Outcome::Config(c) = r {
                out.insert(c);
            }
        }
    }
    Ok(out)
}

fn enter(h: &Hfsm, s: StateId) -> Outcome {
    if h.is_terminal(s) {
        Outcome::Term
    } else {
        Outcome::Config(h.descend(s))
    }
}

fn level(
    h: &Hfsm,
    path: &[StateId],
    j: usize,
    sat: &mut dyn FnMut(GuardId) -> Result<TriState, EvalError>,
    out: &mut Vec<Outcome>,
) -> Result<(), EvalError> {
    let s = path[j];
    let mut stay = true;
    for t in h.outgoing(s) {
        if let Trigger::Guard { guard, positive } = t.trigger {
            let ts = sat(guard)?.with_polarity(positive);
            if ts.can_true {
                out.push(enter(h, t.to));
            }
            if !ts.can_false {
                stay = false;
            }
        }
    }
    if !stay {
        return Ok(());
    }
    match h.state(s).kind {
        StateKind::Base(_) => out.push(Outcome::Config(s)),
        StateKind::Composite(_) => {
            let mut inner = Vec::new();
            level(h, path, j + 1, sat, &mut inner)?;
            for o in inner {
                match o {
                    Outcome::Config(_) => out.push(o),
                    Outcome::Term => {
                        for t in h.outgoing(s) {
                            if t.trigger == Trigger::ChildTerminated {
                                out.push(enter(h, t.to));
                            }
                        }
                    }
                }
            }
        }
        StateKind::Terminal => unreachable!("terminal states are never active"),
    }
    Ok(())
}

/// Base states whose output is among `obj`'s observed behaviors in `frame`.
pub fn prune(h: &Hfsm, states: BTreeSet<StateId>, ctx: &EvalContext) -> Result<BTreeSet<StateId>, EvalError> {
    let observed = &ctx.state(&h.object)?.behaviors;
    Ok(states
        .into_iter()
        .filter(|s| h.label(*s).is_some_and(|l| l.admits(observed)))
        .collect())
}

/// One full step: transition on `frame`'s inputs, then prune by its behaviors.
pub fn valid_step(
    current: &BaseStateSet,
    bundle: &HfsmBundle,
    frame: &Frame,
    corr: &Correspondence,
    env: &StepEnv,
) -> Result<BaseStateSet, EvalError> {
    let ctx = env.context(frame, corr);
    let mut next = BaseStateSet::new();
    for h in &bundle.machines {
        let cur = current.get(&h.object).cloned().unwrap_or_default();
        let reach = step_reachable(h, &cur, &mut |g| guard_sat(&h.guards[g.0 as usize].expr, &ctx))?;
        next.insert(h.object.clone(), prune(h, reach, &ctx)?);
    }
    Ok(next)
}

/// Prune the initial configuration by the first frame's behaviors.
pub fn initial_step(
    bundle: &HfsmBundle,
    frame: &Frame,
    corr: &Correspondence,
    env: &StepEnv,
) -> Result<BaseStateSet, EvalError> {
    let ctx = env.context(frame, corr);
    let mut out = BaseStateSet::new();
    for (obj, states) in initial_base_states(bundle) {
        let h = bundle.get(&obj).expect("bundle object");
        out.insert(obj, prune(h, states, &ctx)?);
    }
    Ok(out)
}

pub fn any_empty(set: &BaseStateSet) -> bool {
    set.values().any(BTreeSet::is_empty)
}

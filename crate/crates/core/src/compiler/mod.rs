//! Syntax-directed translation of behaviors into hierarchical state machines.
//!
//! Every machine owns a terminal state. A configuration of an object's
//! machine is identified by its single active base state: the hierarchy is
//! a tree, so the active ancestors follow from it.

mod emit;
mod flatten;

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::dsl::{self, DslError, Expr, ScenarioAst, Stmt, Support};

pub use emit::{to_dot, to_json};
pub use flatten::{flatten, FlatEdge, FlatNfa, FlatState, FlatTarget};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct StateId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct MachineId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct GuardId(pub u32);

/// Output of a base state.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Label {
    Primitive(String),
    /// Any observed behavior; used for objects without a behavior.
    Any,
}

impl Label {
    pub fn admits(&self, behaviors: &BTreeSet<String>) -> bool {
        match self {
            Label::Primitive(p) => behaviors.contains(p),
            Label::Any => true,
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Label::Primitive(p) => f.write_str(p),
            Label::Any => f.write_str("*"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum StateKind {
    Base(Label),
    Composite(MachineId),
    Terminal,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct State {
    pub name: String,
    pub kind: StateKind,
    pub machine: MachineId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Trigger {
    Guard {
        guard: GuardId,
        positive: bool,
    },
    /// The source state's child machine reached its terminal state.
    ChildTerminated,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Transition {
    pub from: StateId,
    pub trigger: Trigger,
    pub to: StateId,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Machine {
    pub parent: Option<StateId>,
    pub states: Vec<StateId>,
    pub initial: StateId,
    pub terminal: StateId,
    pub transitions: Vec<Transition>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Guard {
    /// Boolean predicate over current inputs, with `self` already bound.
    pub expr: Expr,
    /// Distribution occurrences in the predicate and their supports.
    pub unobserved: Vec<(u32, Support)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Hfsm {
    pub object: String,
    pub behavior: Option<String>,
    pub root: MachineId,
    pub machines: Vec<Machine>,
    pub states: Vec<State>,
    pub guards: Vec<Guard>,
    pub inputs: BTreeSet<String>,
    pub outputs: BTreeSet<String>,
    #[serde(skip)]
    outgoing: Vec<Vec<Transition>>,
}

impl Hfsm {
    pub fn state(&self, id: StateId) -> &State {
        &self.states[id.0 as usize]
    }

    pub fn machine(&self, id: MachineId) -> &Machine {
        &self.machines[id.0 as usize]
    }

    pub fn label(&self, id: StateId) -> Option<&Label> {
        match &self.state(id).kind {
            StateKind::Base(l) => Some(l),
            _ => None,
        }
    }

    pub fn is_terminal(&self, id: StateId) -> bool {
        matches!(self.state(id).kind, StateKind::Terminal)
    }

    /// Outgoing transitions of a state, in declaration order.
    pub fn outgoing(&self, id: StateId) -> &[Transition] {
        &self.outgoing[id.0 as usize]
    }

    pub fn base_states(&self) -> Vec<StateId> {
        (0..self.states.len() as u32)
            .map(StateId)
            .filter(|s| matches!(self.state(*s).kind, StateKind::Base(_)))
            .collect()
    }

    /// Composite state containing `id`, if any.
    pub fn parent(&self, id: StateId) -> Option<StateId> {
        self.machine(self.state(id).machine).parent
    }

    /// Active states from the root machine down to `id`.
    pub fn path(&self, id: StateId) -> Vec<StateId> {
        let mut out = vec![id];
        let mut cur = id;
        while let Some(p) = self.parent(cur) {
            out.push(p);
            cur = p;
        }
        out.reverse();
        out
    }

    /// Base state reached by entering `id` and descending through initial states.
    pub fn descend(&self, id: StateId) -> StateId {
        let mut cur = id;
        while let StateKind::Composite(m) = self.state(cur).kind {
            cur = self.machine(m).initial;
        }
        cur
    }

    pub fn initial_base(&self) -> StateId {
        self.descend(self.machine(self.root).initial)
    }

    pub fn state_by_name(&self, name: &str) -> Option<StateId> {
        self.states
            .iter()
            .position(|s| s.name == name)
            .map(|k| StateId(k as u32))
    }

    fn index(&mut self) {
        self.outgoing = vec![Vec::new(); self.states.len()];
        for m in &self.machines {
            for t in &m.transitions {
                self.outgoing[t.from.0 as usize].push(*t);
            }
        }
    }
}

/// One machine per program object, in declaration order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HfsmBundle {
    pub machines: Vec<Hfsm>,
}

impl HfsmBundle {
    pub fn get(&self, object: &str) -> Option<&Hfsm> {
        self.machines.iter().find(|h| h.object == object)
    }
}

#[derive(Clone, Debug, Default)]
pub struct CompileOptions {
    /// Completion condition per primitive behavior; primitives without one never terminate.
    pub completions: BTreeMap<String, Expr>,
}

impl CompileOptions {
    pub fn with_completion(mut self, primitive: &str, condition: &str) -> Result<Self, DslError> {
        self.completions
            .insert(primitive.to_string(), dsl::parse_expr(condition)?);
        Ok(self)
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum CompileError {
    #[error("translation error: {0}")]
    Translation(String),
    #[error("unknown state {0}")]
    UnknownState(u32),
}

pub fn translate(ast: &ScenarioAst, opts: &CompileOptions) -> Result<HfsmBundle, CompileError> {
    let mut machines = Vec::new();
    for obj in &ast.objects {
        let mut b = Builder::new(ast, opts, &obj.name, obj.behavior.clone());
        let root = match &obj.behavior {
            None => b.unconstrained(),
            Some(name) => b.behavior(name, None, &mut Vec::new())?,
        };
        machines.push(b.finish(root));
    }
    Ok(HfsmBundle { machines })
}

struct Builder<'a> {
    ast: &'a ScenarioAst,
    opts: &'a CompileOptions,
    h: Hfsm,
}

impl<'a> Builder<'a> {
    fn new(ast: &'a ScenarioAst, opts: &'a CompileOptions, object: &str, behavior: Option<String>) -> Self {
        Builder {
            ast,
            opts,
            h: Hfsm {
                object: object.to_string(),
                behavior,
                root: MachineId(0),
                machines: Vec::new(),
                states: Vec::new(),
                guards: Vec::new(),
                inputs: BTreeSet::new(),
                outputs: BTreeSet::new(),
                outgoing: Vec::new(),
            },
        }
    }

    fn finish(mut self, root: MachineId) -> Hfsm {
        self.h.root = root;
        self.h.index();
        self.h
    }

    fn new_machine(&mut self, parent: Option<StateId>) -> MachineId {
        let id = MachineId(self.h.machines.len() as u32);
        let terminal = StateId(self.h.states.len() as u32);
        self.h.states.push(State {
            name: "Terminate".into(),
            kind: StateKind::Terminal,
            machine: id,
        });
        self.h.machines.push(Machine {
            parent,
            states: vec![terminal],
            initial: terminal,
            terminal,
            transitions: Vec::new(),
        });
        id
    }

    fn add_state(&mut self, m: MachineId, name: &str, kind: StateKind) -> StateId {
        let id = StateId(self.h.states.len() as u32);
        self.h.states.push(State {
            name: name.to_string(),
            kind,
            machine: m,
        });
        let mach = &mut self.h.machines[m.0 as usize];
        if mach.states.len() == 1 {
            mach.initial = id;
        }
        mach.states.push(id);
        id
    }

    fn terminal(&self, m: MachineId) -> StateId {
        self.h.machines[m.0 as usize].terminal
    }

    fn connect(&mut self, m: MachineId, from: StateId, trigger: Trigger, to: StateId) {
        self.h.machines[m.0 as usize]
            .transitions
            .push(Transition { from, trigger, to });
    }

    fn guard(&mut self, e: &Expr) -> GuardId {
        let obj = self.h.object.clone();
        let bound = e.rename_objects(&|n| (n == "self").then(|| obj.clone()));
        bound.walk(&mut |x| match x {
            Expr::Name(n) => {
                self.h.inputs.insert(n.clone());
            }
            Expr::Attr(base, a) => {
                if let Expr::Name(n) = base.as_ref() {
                    self.h.inputs.insert(format!("{n}.{a}"));
                }
            }
            _ => {}
        });
        let unobserved = bound.dist_refs().iter().map(|d| (d.id, d.kind.support())).collect();
        let id = GuardId(self.h.guards.len() as u32);
        self.h.guards.push(Guard {
            expr: bound,
            unobserved,
        });
        id
    }

    /// Composite state whose child machine is produced by `build`.
    fn composite(
        &mut self,
        m: MachineId,
        name: &str,
        build: impl FnOnce(&mut Self, StateId) -> Result<MachineId, CompileError>,
    ) -> Result<StateId, CompileError> {
        let s = self.add_state(m, name, StateKind::Terminal);
        let child = build(self, s)?;
        self.h.states[s.0 as usize].kind = StateKind::Composite(child);
        Ok(s)
    }

    fn unconstrained(&mut self) -> MachineId {
        let m = self.new_machine(None);
        self.add_state(m, "Unconstrained", StateKind::Base(Label::Any));
        m
    }

    fn primitive(&mut self, name: &str, parent: Option<StateId>) -> MachineId {
        let m = self.new_machine(parent);
        let s = self.add_state(m, name, StateKind::Base(Label::Primitive(name.to_string())));
        self.h.outputs.insert(name.to_string());
        if let Some(cond) = self.opts.completions.get(name) {
            let g = self.guard(cond);
            let t = self.terminal(m);
            self.connect(
                m,
                s,
                Trigger::Guard {
                    guard: g,
                    positive: true,
                },
                t,
            );
        }
        m
    }

    /// Machine for running behavior `name` to completion.
    fn behavior(
        &mut self,
        name: &str,
        parent: Option<StateId>,
        stack: &mut Vec<String>,
    ) -> Result<MachineId, CompileError> {
        if let Some(def) = self.ast.behaviors.get(name) {
            if stack.iter().any(|s| s == name) {
                return Err(CompileError::Translation(format!("behavior '{name}' is recursive")));
            }
            stack.push(name.to_string());
            let m = self.stmt(&def.body, parent, stack)?;
            stack.pop();
            Ok(m)
        } else {
            Ok(self.primitive(name, parent))
        }
    }

    fn stmt(&mut self, s: &Stmt, parent: Option<StateId>, stack: &mut Vec<String>) -> Result<MachineId, CompileError> {
        match s {
            Stmt::Do {
                behavior, until: None, ..
            } => self.behavior(behavior, parent, stack),
            Stmt::Do {
                behavior,
                until: Some(cond),
                ..
            } => {
                let m = self.new_machine(parent);
                let s = self.composite(m, &format!("DoUntil({behavior})"), |b, s| {
                    b.behavior(behavior, Some(s), stack)
                })?;
                let g = self.guard(cond);
                let t = self.terminal(m);
                self.connect(
                    m,
                    s,
                    Trigger::Guard {
                        guard: g,
                        positive: true,
                    },
                    t,
                );
                self.connect(m, s, Trigger::ChildTerminated, t);
                Ok(m)
            }
            Stmt::Seq(items) => {
                if items.is_empty() {
                    return Err(CompileError::Translation("empty statement sequence".into()));
                }
                let m = self.new_machine(parent);
                let mut prev: Option<StateId> = None;
                for (k, item) in items.iter().enumerate() {
                    let s = self.composite(m, &format!("Seq{}", k + 1), |b, s| b.stmt(item, Some(s), stack))?;
                    if let Some(p) = prev {
                        self.connect(m, p, Trigger::ChildTerminated, s);
                    }
                    prev = Some(s);
                }
                let t = self.terminal(m);
                self.connect(m, prev.expect("nonempty"), Trigger::ChildTerminated, t);
                Ok(m)
            }
            Stmt::TryInterrupt {
                body,
                condition,
                handler,
                ..
            } => {
                let m = self.new_machine(parent);
                let try_s = self.composite(m, "Try", |b, s| b.stmt(body, Some(s), stack))?;
                let int_s = self.composite(m, "Interrupt", |b, s| b.stmt(handler, Some(s), stack))?;
                let g = self.guard(condition);
                let t = self.terminal(m);
                self.connect(
                    m,
                    try_s,
                    Trigger::Guard {
                        guard: g,
                        positive: true,
                    },
                    int_s,
                );
                self.connect(m, try_s, Trigger::ChildTerminated, t);
                self.connect(
                    m,
                    int_s,
                    Trigger::Guard {
                        guard: g,
                        positive: false,
                    },
                    try_s,
                );
                self.connect(m, int_s, Trigger::ChildTerminated, try_s);
                Ok(m)
            }
            Stmt::Assign { target, span, .. } => Err(CompileError::Translation(format!(
                "variable assignment '{target}' at line {} cannot be translated",
                span.line
            ))),
            Stmt::Unsupported { construct, span } => Err(CompileError::Translation(format!(
                "unsupported statement '{construct}' at line {}",
                span.line
            ))),
        }
    }
}

/// Predicate that a machine has reached its terminal state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TerminationPredicate {
    pub machine: MachineId,
    pub terminal: StateId,
}

impl TerminationPredicate {
    /// Evaluate against the set of currently active states (any level).
    pub fn holds(&self, active: &[StateId]) -> bool {
        active.contains(&self.terminal)
    }
}

/// The X_T predicate of the machine rooted at `state`: the child machine of
/// a composite state, or the machine owning a base or terminal state.
pub fn termination_predicate(hfsm: &Hfsm, state: StateId) -> Result<TerminationPredicate, CompileError> {
    let s = hfsm
        .states
        .get(state.0 as usize)
        .ok_or(CompileError::UnknownState(state.0))?;
    let machine = match s.kind {
        StateKind::Composite(m) => m,
        _ => s.machine,
    };
    Ok(TerminationPredicate {
        machine,
        terminal: hfsm.machine(machine).terminal,
    })
}

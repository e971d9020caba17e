//! Scenario program front end: tokenizer, parser, fragment checks and a
//! canonical pretty-printer.
//!
//! The surface syntax is a line-oriented subset of Scenic:
//!
//! ```text
//! behavior EgoBehavior():
//!     try:
//!         do FollowLane
//!     interrupt when (distance from ego to otherCar) < Range(1, 15):
//!         do LaneChange
//!
//! ego = new Car with behavior EgoBehavior
//! otherCar = new Car on ego.lane, visible from ego, with behavior Stationary
//! ```

pub mod ast;
mod fragment;
mod lexer;
mod parser;
pub mod pretty;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

pub use ast::*;
pub use fragment::{fragment_check, Violation};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DslError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax { line: u32, col: u32, message: String },
    #[error("unsupported feature at {line}:{col}: {construct}")]
    Unsupported { line: u32, col: u32, construct: String },
    #[error("semantic error at line {line}: {message}")]
    Semantic { line: u32, message: String },
}

/// Primitive behaviors every program may reference without declaring them.
pub const DEFAULT_PRIMITIVES: [&str; 12] = [
    "FollowLane",
    "LaneChange",
    "Stationary",
    "TurnLeft",
    "TurnRight",
    "Brake",
    "Accelerate",
    "Walk",
    "CrossStreet",
    "Yield",
    "UTurn",
    "Reverse",
];

pub const DEFAULT_CLASSES: [&str; 8] = [
    "Car",
    "Truck",
    "Bus",
    "Pedestrian",
    "Bicycle",
    "Motorcycle",
    "Trailer",
    "Object",
];

/// Open registries of object classes and primitive behavior names.
#[derive(Clone, Debug)]
pub struct ParseOptions {
    pub classes: BTreeSet<String>,
    pub primitives: BTreeSet<String>,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            classes: DEFAULT_CLASSES.iter().map(|s| s.to_string()).collect(),
            primitives: DEFAULT_PRIMITIVES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl ParseOptions {
    pub fn with_class(mut self, class: &str) -> Self {
        self.classes.insert(class.to_string());
        self
    }

    pub fn with_primitive(mut self, name: &str) -> Self {
        self.primitives.insert(name.to_string());
        self
    }
}

/// Parse and validate a program with the default registries.
pub fn parse(source: &str) -> Result<ScenarioAst, DslError> {
    parse_with(source, &ParseOptions::default())
}

pub fn parse_with(source: &str, options: &ParseOptions) -> Result<ScenarioAst, DslError> {
    let ast = parse_unchecked(source)?;
    if let Some(v) = fragment_check(&ast).into_iter().next() {
        return Err(DslError::Unsupported {
            line: v.span.line,
            col: v.span.col,
            construct: v.construct,
        });
    }
    validate(&ast, options)?;
    Ok(ast)
}

/// Syntactic parse only. Out-of-fragment constructs are retained as
/// `Unsupported`/`Assign` nodes so `fragment_check` can report them.
pub fn parse_unchecked(source: &str) -> Result<ScenarioAst, DslError> {
    let raw = parser::Parser::new(source)?.program()?;
    assemble(raw)
}

/// Parse a single expression (used for side configuration such as primitive
/// completion conditions).
pub fn parse_expr(source: &str) -> Result<Expr, DslError> {
    parser::Parser::new(source)?.standalone_expr()
}

fn assemble(raw: parser::RawProgram) -> Result<ScenarioAst, DslError> {
    let mut behaviors = BTreeMap::new();
    for def in raw.behaviors {
        if behaviors.contains_key(&def.name) {
            return Err(DslError::Semantic {
                line: def.span.line,
                message: format!("duplicate behavior '{}'", def.name),
            });
        }
        behaviors.insert(def.name.clone(), def);
    }
    let mut seen = BTreeSet::new();
    for obj in &raw.objects {
        if !seen.insert(obj.name.clone()) {
            return Err(DslError::Semantic {
                line: obj.span.line,
                message: format!("duplicate object '{}'", obj.name),
            });
        }
    }
    let mut ast = ScenarioAst {
        objects: raw.objects,
        behaviors,
        primitive_behaviors: BTreeSet::new(),
        requires: raw.requires,
        unsupported: raw.unsupported,
    };
    ast.primitive_behaviors = referenced_primitives(&ast);
    Ok(ast)
}

fn referenced_primitives(ast: &ScenarioAst) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let mut note = |name: &str| {
        if !ast.behaviors.contains_key(name) {
            out.insert(name.to_string());
        }
    };
    for obj in &ast.objects {
        if let Some(b) = &obj.behavior {
            note(b);
        }
    }
    for def in ast.behaviors.values() {
        def.body.walk(&mut |s| {
            if let Stmt::Do { behavior, .. } = s {
                note(behavior);
            }
        });
    }
    out
}

/// Semantic checks: registries, reference resolution and acyclicity.
pub fn validate(ast: &ScenarioAst, options: &ParseOptions) -> Result<(), DslError> {
    if ast.objects.is_empty() {
        return Err(DslError::Semantic {
            line: 1,
            message: "program declares no objects".into(),
        });
    }
    for obj in &ast.objects {
        if !options.classes.contains(&obj.class) {
            return Err(DslError::Semantic {
                line: obj.span.line,
                message: format!("unknown object class '{}'", obj.class),
            });
        }
        if let Some(b) = &obj.behavior {
            check_behavior_ref(ast, options, b, obj.span)?;
        }
    }
    for def in ast.behaviors.values() {
        let mut err = None;
        def.body.walk(&mut |s| {
            if let Stmt::Do { behavior, span, .. } = s {
                if err.is_none() {
                    err = check_behavior_ref(ast, options, behavior, *span).err();
                }
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
    }
    check_acyclic(ast)?;
    check_names(ast)
}

fn check_behavior_ref(ast: &ScenarioAst, options: &ParseOptions, name: &str, span: Span) -> Result<(), DslError> {
    if ast.behaviors.contains_key(name) || options.primitives.contains(name) {
        Ok(())
    } else {
        Err(DslError::Semantic {
            line: span.line,
            message: format!("undefined behavior '{name}'"),
        })
    }
}

fn check_acyclic(ast: &ScenarioAst) -> Result<(), DslError> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Active,
        Done,
    }
    fn visit(ast: &ScenarioAst, name: &str, marks: &mut BTreeMap<String, Mark>) -> Result<(), DslError> {
        let Some(def) = ast.behaviors.get(name) else {
            return Ok(());
        };
        match marks.get(name) {
            Some(Mark::Done) => return Ok(()),
            Some(Mark::Active) => {
                return Err(DslError::Semantic {
                    line: def.span.line,
                    message: format!("behavior '{name}' refers to itself through a cycle"),
                })
            }
            None => {}
        }
        marks.insert(name.to_string(), Mark::Active);
        let mut callees = Vec::new();
        def.body.walk(&mut |s| {
            if let Stmt::Do { behavior, .. } = s {
                callees.push(behavior.clone());
            }
        });
        for c in callees {
            visit(ast, &c, marks)?;
        }
        marks.insert(name.to_string(), Mark::Done);
        Ok(())
    }
    let mut marks = BTreeMap::new();
    for name in ast.behaviors.keys() {
        visit(ast, name, &mut marks)?;
    }
    Ok(())
}

/// `self` is only meaningful inside behaviors.
fn check_names(ast: &ScenarioAst) -> Result<(), DslError> {
    let mentions_self = |e: &Expr| {
        let mut found = false;
        e.walk(&mut |x| {
            if matches!(x, Expr::Name(n) if n == "self") {
                found = true;
            }
        });
        found
    };
    for obj in &ast.objects {
        for s in &obj.specifiers {
            if s.exprs().into_iter().any(mentions_self) {
                return Err(DslError::Semantic {
                    line: obj.span.line,
                    message: "'self' is not available in object specifiers".into(),
                });
            }
        }
    }
    for r in &ast.requires {
        if mentions_self(&r.condition) {
            return Err(DslError::Semantic {
                line: r.span.line,
                message: "'self' is not available in require".into(),
            });
        }
    }
    Ok(())
}

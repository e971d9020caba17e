use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

/// Source location (1-based). Spans never take part in structural equality,
/// so a re-parsed pretty-printed program compares equal to the original.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(line: u32, col: u32) -> Self {
        Span { line, col }
    }
}

impl PartialEq for Span {
    fn eq(&self, _other: &Self) -> bool {
        true
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioAst {
    pub objects: Vec<ObjectDecl>,
    pub behaviors: BTreeMap<String, BehaviorDef>,
    /// Behavior names referenced but not defined; each is an atomic output label.
    pub primitive_behaviors: BTreeSet<String>,
    /// Top-level `require` constraints on the initial scene.
    pub requires: Vec<Require>,
    /// Top-level constructs outside the supported fragment, kept for diagnostics.
    pub unsupported: Vec<UnsupportedConstruct>,
}

impl ScenarioAst {
    pub fn object(&self, name: &str) -> Option<&ObjectDecl> {
        self.objects.iter().find(|o| o.name == name)
    }

    pub fn object_names(&self) -> impl Iterator<Item = &str> {
        self.objects.iter().map(|o| o.name.as_str())
    }

    pub fn is_primitive(&self, behavior: &str) -> bool {
        !self.behaviors.contains_key(behavior) && self.primitive_behaviors.contains(behavior)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObjectDecl {
    pub name: String,
    /// Whether the source gave the object an explicit `name = ...` binding.
    pub named: bool,
    pub class: String,
    pub specifiers: Vec<Specifier>,
    pub behavior: Option<String>,
    /// `with <property> <value>` attributes other than `behavior`.
    pub properties: Vec<(String, Expr)>,
    pub span: Span,
}

impl ObjectDecl {
    pub fn property(&self, name: &str) -> Option<&Expr> {
        self.properties.iter().find(|(k, _)| k == name).map(|(_, v)| v)
    }

    pub fn position_specifiers(&self) -> impl Iterator<Item = &Specifier> {
        self.specifiers.iter().filter(|s| s.is_position())
    }

    pub fn orientation_specifiers(&self) -> impl Iterator<Item = &Specifier> {
        self.specifiers.iter().filter(|s| !s.is_position())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Specifier {
    At(Expr),
    In(Expr),
    On(Expr),
    OffsetBy(Expr),
    OffsetAlong {
        direction: Expr,
        offset: Expr,
    },
    Beyond {
        target: Expr,
        offset: Expr,
        from: Option<Expr>,
    },
    VisibleFrom(Option<Expr>),
    AheadOf {
        target: Expr,
        by: Option<Expr>,
    },
    Behind {
        target: Expr,
        by: Option<Expr>,
    },
    Following {
        field: Expr,
        from: Option<Expr>,
        distance: Expr,
    },
    Facing(Expr),
    FacingToward(Expr),
    FacingAwayFrom(Expr),
    ApparentlyFacing {
        heading: Expr,
        from: Option<Expr>,
    },
}

impl Specifier {
    pub fn is_position(&self) -> bool {
        !matches!(
            self,
            Specifier::Facing(_)
                | Specifier::FacingToward(_)
                | Specifier::FacingAwayFrom(_)
                | Specifier::ApparentlyFacing { .. }
        )
    }

    pub fn keyword(&self) -> &'static str {
        match self {
            Specifier::At(_) => "at",
            Specifier::In(_) => "in",
            Specifier::On(_) => "on",
            Specifier::OffsetBy(_) => "offset by",
            Specifier::OffsetAlong { .. } => "offset along",
            Specifier::Beyond { .. } => "beyond",
            Specifier::VisibleFrom(_) => "visible",
            Specifier::AheadOf { .. } => "ahead of",
            Specifier::Behind { .. } => "behind",
            Specifier::Following { .. } => "following",
            Specifier::Facing(_) => "facing",
            Specifier::FacingToward(_) => "facing toward",
            Specifier::FacingAwayFrom(_) => "facing away from",
            Specifier::ApparentlyFacing { .. } => "apparently facing",
        }
    }

    pub fn exprs(&self) -> Vec<&Expr> {
        match self {
            Specifier::At(e)
            | Specifier::In(e)
            | Specifier::On(e)
            | Specifier::OffsetBy(e)
            | Specifier::Facing(e)
            | Specifier::FacingToward(e)
            | Specifier::FacingAwayFrom(e) => vec![e],
            Specifier::OffsetAlong { direction, offset } => vec![direction, offset],
            Specifier::Beyond { target, offset, from } => {
                let mut v = vec![target, offset];
                v.extend(from.iter());
                v
            }
            Specifier::VisibleFrom(from) => from.iter().collect(),
            Specifier::AheadOf { target, by } | Specifier::Behind { target, by } => {
                let mut v = vec![target];
                v.extend(by.iter());
                v
            }
            Specifier::Following { field, from, distance } => {
                let mut v = vec![field, distance];
                v.extend(from.iter());
                v
            }
            Specifier::ApparentlyFacing { heading, from } => {
                let mut v = vec![heading];
                v.extend(from.iter());
                v
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Require {
    pub condition: Expr,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BehaviorDef {
    pub name: String,
    pub body: Stmt,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Stmt {
    /// `do B` (no condition) or `do B until C`.
    Do {
        behavior: String,
        until: Option<Expr>,
        span: Span,
    },
    /// Statements executed one after another; always at least two.
    Seq(Vec<Stmt>),
    TryInterrupt {
        body: Box<Stmt>,
        condition: Expr,
        handler: Box<Stmt>,
        span: Span,
    },
    /// Variable assignment; parsed so it can be diagnosed, never translated.
    Assign { target: String, value: Expr, span: Span },
    /// A statement outside the supported fragment (`take`, `wait`, `record`, ...).
    Unsupported { construct: String, span: Span },
}

impl Stmt {
    pub fn span(&self) -> Span {
        match self {
            Stmt::Do { span, .. }
            | Stmt::TryInterrupt { span, .. }
            | Stmt::Assign { span, .. }
            | Stmt::Unsupported { span, .. } => *span,
            Stmt::Seq(items) => items.first().map(Stmt::span).unwrap_or_default(),
        }
    }

    /// Visit every statement in the tree, pre-order.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Stmt)) {
        f(self);
        match self {
            Stmt::Seq(items) => items.iter().for_each(|s| s.walk(f)),
            Stmt::TryInterrupt { body, handler, .. } => {
                body.walk(f);
                handler.walk(f);
            }
            _ => {}
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UnsupportedConstruct {
    pub construct: String,
    pub span: Span,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum UnaryOp {
    Neg,
    Not,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::And => "and",
            BinaryOp::Or => "or",
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge | BinaryOp::Eq | BinaryOp::Ne
        )
    }
}

/// Expression tree for guards, `require` conditions and specifier arguments.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Expr {
    Number(f64),
    Bool(bool),
    /// Object, region or field name (`ego`, `self`, `road`, `roadDirection`).
    Name(String),
    Attr(Box<Expr>, String),
    /// 2D or 3D vector literal.
    Vector(Vec<Expr>),
    Dist(DistRef),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    /// `x deg`
    Deg(Box<Expr>),
    /// `a relative to b`
    RelativeTo(Box<Expr>, Box<Expr>),
    RelativeHeading {
        of: Box<Expr>,
        from: Option<Box<Expr>>,
    },
    ApparentHeading {
        of: Box<Expr>,
        from: Option<Box<Expr>>,
    },
    Distance {
        from: Option<Box<Expr>>,
        to: Box<Expr>,
    },
    Angle {
        from: Option<Box<Expr>>,
        to: Box<Expr>,
    },
    CanSee(Box<Expr>, Box<Expr>),
    In(Box<Expr>, Box<Expr>),
    OffsetBy(Box<Expr>, Box<Expr>),
    OffsetAlong {
        base: Box<Expr>,
        direction: Box<Expr>,
        offset: Box<Expr>,
    },
    /// `visible R`, `not visible R`, `R visible from X`, `R not visible from X`.
    Visible {
        region: Box<Expr>,
        from: Option<Box<Expr>>,
        negated: bool,
    },
}

impl Expr {
    pub fn name(s: &str) -> Expr {
        Expr::Name(s.to_string())
    }

    pub fn binary(op: BinaryOp, l: Expr, r: Expr) -> Expr {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Number(_) | Expr::Bool(_) | Expr::Name(_) | Expr::Dist(_) => vec![],
            Expr::Attr(e, _) | Expr::Unary(_, e) | Expr::Deg(e) => vec![e],
            Expr::Vector(items) => items.iter().collect(),
            Expr::Binary(_, a, b)
            | Expr::RelativeTo(a, b)
            | Expr::CanSee(a, b)
            | Expr::In(a, b)
            | Expr::OffsetBy(a, b) => vec![a, b],
            Expr::RelativeHeading { of, from } | Expr::ApparentHeading { of, from } => {
                let mut v = vec![of.as_ref()];
                v.extend(from.as_deref());
                v
            }
            Expr::Distance { from, to } | Expr::Angle { from, to } => {
                let mut v: Vec<&Expr> = from.as_deref().into_iter().collect();
                v.push(to);
                v
            }
            Expr::OffsetAlong {
                base,
                direction,
                offset,
            } => vec![base, direction, offset],
            Expr::Visible { region, from, .. } => {
                let mut v = vec![region.as_ref()];
                v.extend(from.as_deref());
                v
            }
        }
    }

    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    /// Every distribution occurrence in the expression, in source order.
    pub fn dist_refs(&self) -> Vec<&DistRef> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let Expr::Dist(d) = e {
                out.push(d);
            }
        });
        out
    }

    /// Rename object references (used for `self` binding and program scaling).
    pub fn rename_objects(&self, map: &dyn Fn(&str) -> Option<String>) -> Expr {
        let r = |e: &Expr| Box::new(e.rename_objects(map));
        let ro = |e: &Option<Box<Expr>>| e.as_ref().map(|x| Box::new(x.rename_objects(map)));
        match self {
            Expr::Name(n) => Expr::Name(map(n).unwrap_or_else(|| n.clone())),
            Expr::Number(_) | Expr::Bool(_) | Expr::Dist(_) => self.clone(),
            Expr::Attr(e, a) => Expr::Attr(r(e), a.clone()),
            Expr::Vector(items) => Expr::Vector(items.iter().map(|i| i.rename_objects(map)).collect()),
            Expr::Unary(op, e) => Expr::Unary(*op, r(e)),
            Expr::Binary(op, a, b) => Expr::Binary(*op, r(a), r(b)),
            Expr::Deg(e) => Expr::Deg(r(e)),
            Expr::RelativeTo(a, b) => Expr::RelativeTo(r(a), r(b)),
            Expr::RelativeHeading { of, from } => Expr::RelativeHeading {
                of: r(of),
                from: ro(from),
            },
            Expr::ApparentHeading { of, from } => Expr::ApparentHeading {
                of: r(of),
                from: ro(from),
            },
            Expr::Distance { from, to } => Expr::Distance {
                from: ro(from),
                to: r(to),
            },
            Expr::Angle { from, to } => Expr::Angle {
                from: ro(from),
                to: r(to),
            },
            Expr::CanSee(a, b) => Expr::CanSee(r(a), r(b)),
            Expr::In(a, b) => Expr::In(r(a), r(b)),
            Expr::OffsetBy(a, b) => Expr::OffsetBy(r(a), r(b)),
            Expr::OffsetAlong {
                base,
                direction,
                offset,
            } => Expr::OffsetAlong {
                base: r(base),
                direction: r(direction),
                offset: r(offset),
            },
            Expr::Visible { region, from, negated } => Expr::Visible {
                region: r(region),
                from: ro(from),
                negated: *negated,
            },
        }
    }

    /// Give every distribution occurrence a fresh id from `next`.
    pub fn renumber_dists(&self, next: &mut u32) -> Expr {
        let mut e = self.clone();
        e.renumber_in_place(next);
        e
    }

    fn renumber_in_place(&mut self, next: &mut u32) {
        if let Expr::Dist(d) = self {
            d.id = *next;
            *next += 1;
            return;
        }
        match self {
            Expr::Attr(e, _) | Expr::Unary(_, e) | Expr::Deg(e) => e.renumber_in_place(next),
            Expr::Vector(items) => items.iter_mut().for_each(|i| i.renumber_in_place(next)),
            Expr::Binary(_, a, b)
            | Expr::RelativeTo(a, b)
            | Expr::CanSee(a, b)
            | Expr::In(a, b)
            | Expr::OffsetBy(a, b) => {
                a.renumber_in_place(next);
                b.renumber_in_place(next);
            }
            Expr::RelativeHeading { of, from } | Expr::ApparentHeading { of, from } => {
                of.renumber_in_place(next);
                if let Some(f) = from {
                    f.renumber_in_place(next);
                }
            }
            Expr::Distance { from, to } | Expr::Angle { from, to } => {
                if let Some(f) = from {
                    f.renumber_in_place(next);
                }
                to.renumber_in_place(next);
            }
            Expr::OffsetAlong {
                base,
                direction,
                offset,
            } => {
                base.renumber_in_place(next);
                direction.renumber_in_place(next);
                offset.renumber_in_place(next);
            }
            Expr::Visible { region, from, .. } => {
                region.renumber_in_place(next);
                if let Some(f) = from {
                    f.renumber_in_place(next);
                }
            }
            _ => {}
        }
    }
}

/// One syntactic occurrence of a distribution: an unobserved variable.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistRef {
    /// Unique per occurrence within a parsed program.
    pub id: u32,
    pub kind: DistKind,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum DistKind {
    Range {
        low: f64,
        high: f64,
    },
    /// Uniform choice among the listed values.
    Uniform(Vec<f64>),
    Normal {
        mean: f64,
        std_dev: f64,
    },
    TruncatedNormal {
        mean: f64,
        std_dev: f64,
        low: f64,
        high: f64,
    },
}

/// Set of values a distribution can produce.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Support {
    /// Closed interval; bounds may be infinite.
    Interval {
        low: f64,
        high: f64,
    },
    Discrete(Vec<f64>),
}

impl DistKind {
    pub fn support(&self) -> Support {
        match self {
            DistKind::Range { low, high } => Support::Interval { low: *low, high: *high },
            DistKind::Uniform(values) => {
                let mut v = values.clone();
                v.sort_by(f64::total_cmp);
                v.dedup();
                Support::Discrete(v)
            }
            DistKind::Normal { .. } => Support::Interval {
                low: f64::NEG_INFINITY,
                high: f64::INFINITY,
            },
            DistKind::TruncatedNormal { low, high, .. } => Support::Interval { low: *low, high: *high },
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DistKind::Range { .. } => "Range",
            DistKind::Uniform(_) => "Uniform",
            DistKind::Normal { .. } => "Normal",
            DistKind::TruncatedNormal { .. } => "TruncatedNormal",
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match self {
            DistKind::Range { low, high } => vec![*low, *high],
            DistKind::Uniform(v) => v.clone(),
            DistKind::Normal { mean, std_dev } => vec![*mean, *std_dev],
            DistKind::TruncatedNormal {
                mean,
                std_dev,
                low,
                high,
            } => vec![*mean, *std_dev, *low, *high],
        }
    }
}

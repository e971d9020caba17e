//! Guard evaluation: which truth values a predicate can take for some
//! choice of its unobserved variables within their supports.
//!
//! Each distribution occurrence is an independent variable, so interval
//! evaluation of scalar arithmetic and comparisons is exact. Operations
//! whose interval extension is only an enclosure (trigonometry, angles,
//! region membership of a non-degenerate point box) trigger bisection of
//! the continuous supports; whatever remains unresolved once the budget is
//! spent is reported as attainable both ways.

pub mod interval;

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

pub use interval::Interval;

use crate::dsl::{BinaryOp, DistKind, DistRef, Expr, Support, UnaryOp};
use crate::query::Correspondence;
use crate::trace::{Frame, ObjectState};
use crate::world::geometry::{self, Point};
use crate::world::{ConeParams, RoadMap, ViewCone};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("missing feature: {0}")]
    MissingFeature(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unsupported guard: {0}")]
    Unsupported(String),
}

/// Attainable truth values of a predicate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct TriState {
    pub can_true: bool,
    pub can_false: bool,
}

impl TriState {
    pub const TRUE: TriState = TriState {
        can_true: true,
        can_false: false,
    };
    pub const FALSE: TriState = TriState {
        can_true: false,
        can_false: true,
    };
    pub const BOTH: TriState = TriState {
        can_true: true,
        can_false: true,
    };
    pub const NONE: TriState = TriState {
        can_true: false,
        can_false: false,
    };

    pub fn exact(b: bool) -> TriState {
        if b {
            TriState::TRUE
        } else {
            TriState::FALSE
        }
    }

    pub fn not(self) -> TriState {
        TriState {
            can_true: self.can_false,
            can_false: self.can_true,
        }
    }

    /// Conjunction of predicates over disjoint variables.
    pub fn and(self, o: TriState) -> TriState {
        TriState {
            can_true: self.can_true && o.can_true,
            can_false: self.can_false || o.can_false,
        }
    }

    pub fn or(self, o: TriState) -> TriState {
        TriState {
            can_true: self.can_true || o.can_true,
            can_false: self.can_false && o.can_false,
        }
    }

    /// Union over alternative assignments.
    pub fn union(self, o: TriState) -> TriState {
        TriState {
            can_true: self.can_true || o.can_true,
            can_false: self.can_false || o.can_false,
        }
    }

    pub fn with_polarity(self, positive: bool) -> TriState {
        if positive {
            self
        } else {
            self.not()
        }
    }
}

/// Regions denoted by region-valued expressions.
#[derive(Clone, Debug, PartialEq)]
pub enum Region {
    /// Union of all lane polygons.
    Road,
    Lane(String),
    Named(String),
    Cone(ViewCone),
    Intersect(Box<Region>, Box<Region>),
    Minus(Box<Region>, Box<Region>),
}

impl Region {
    pub fn contains(&self, p: Point, map: &RoadMap) -> bool {
        match self {
            Region::Road => map.on_road(p),
            Region::Lane(id) => map.lane(id).is_some_and(|l| l.contains(p)),
            Region::Named(n) => map.region(n).is_some_and(|poly| geometry::point_in_polygon(p, poly)),
            Region::Cone(c) => c.contains(p),
            Region::Intersect(a, b) => a.contains(p, map) && b.contains(p, map),
            Region::Minus(a, b) => a.contains(p, map) && !b.contains(p, map),
        }
    }
}

/// Result of evaluating an expression. Scalars are intervals; concrete
/// values are degenerate intervals.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Scalar(Interval),
    Bool(TriState),
    Vector([Interval; 3]),
    /// A program object bound to a trace object.
    Object {
        program: String,
        trace: String,
    },
    Region(Region),
    /// The road direction field.
    RoadDirection,
}

impl Value {
    fn kind(&self) -> &'static str {
        match self {
            Value::Scalar(_) => "scalar",
            Value::Bool(_) => "boolean",
            Value::Vector(_) => "vector",
            Value::Object { .. } => "object",
            Value::Region(_) => "region",
            Value::RoadDirection => "vector field",
        }
    }

    pub fn as_point(&self) -> Option<f64> {
        match self {
            Value::Scalar(iv) if iv.is_point() => Some(iv.lo),
            _ => None,
        }
    }
}

/// Everything a guard may observe at one timestep.
#[derive(Clone, Copy)]
pub struct EvalContext<'a> {
    pub map: &'a RoadMap,
    pub frame: &'a Frame,
    pub corr: &'a Correspondence,
    /// View-cone parameters per program object; missing entries use defaults.
    pub cones: &'a BTreeMap<String, ConeParams>,
    /// Program object that implicit references (`distance to X`) start from.
    pub ego: &'a str,
}

impl<'a> EvalContext<'a> {
    pub fn state(&self, program: &str) -> Result<&'a ObjectState, EvalError> {
        let id = self
            .corr
            .get(program)
            .ok_or_else(|| EvalError::MissingFeature(format!("object '{program}' has no correspondent")))?;
        self.frame
            .objs
            .get(id)
            .ok_or_else(|| EvalError::MissingFeature(format!("object '{id}' absent at t={}", self.frame.t)))
    }

    pub fn cone_params(&self, program: &str) -> ConeParams {
        self.cones.get(program).copied().unwrap_or_default()
    }

    pub fn view_cone(&self, program: &str) -> Result<ViewCone, EvalError> {
        let s = self.state(program)?;
        Ok(ViewCone::new(s.xy(), s.heading, self.cone_params(program)))
    }
}

/// Values assigned to distribution occurrences during evaluation.
pub type Assignment = BTreeMap<u32, Interval>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Mode {
    /// Fail with `Imprecise` instead of returning a loose enclosure.
    Strict,
    Relaxed,
}

#[derive(Debug)]
pub(crate) enum Fail {
    Eval(EvalError),
    Imprecise,
}

impl From<EvalError> for Fail {
    fn from(e: EvalError) -> Self {
        Fail::Eval(e)
    }
}

pub(crate) type R<T> = Result<T, Fail>;

pub const EQ_TOL: f64 = 1e-9;
/// Bisection budget per continuous variable.
pub const SUBDIVISIONS_PER_VAR: usize = 64;
/// Beyond this many discrete combinations, discrete supports are hulled.
const MAX_DISCRETE_COMBOS: usize = 4096;

fn unsupported<T>(msg: impl Into<String>) -> R<T> {
    Err(Fail::Eval(EvalError::Unsupported(msg.into())))
}

/// Evaluate an expression. Distribution occurrences take their whole
/// support, so the result encloses every attainable value.
pub fn eval_expr(e: &Expr, ctx: &EvalContext) -> Result<Value, EvalError> {
    let mut assign = Assignment::new();
    for d in e.dist_refs() {
        assign.insert(d.id, support_hull(&d.kind));
    }
    match eval(e, ctx, &assign, Mode::Relaxed) {
        Ok(v) => Ok(v),
        Err(Fail::Eval(err)) => Err(err),
        Err(Fail::Imprecise) => unreachable!("relaxed evaluation never reports imprecision"),
    }
}

/// Attainable truth values of a boolean guard.
pub fn guard_sat(g: &Expr, ctx: &EvalContext) -> Result<TriState, EvalError> {
    let dists: Vec<DistRef> = g.dist_refs().into_iter().cloned().collect();
    existential(&dists, |assign, mode| as_bool(eval(g, ctx, assign, mode)?))
}

/// Truth value of a guard with every distribution occurrence fixed.
pub fn eval_concrete(g: &Expr, ctx: &EvalContext, values: &BTreeMap<u32, f64>) -> Result<bool, EvalError> {
    let mut assign = Assignment::new();
    for d in g.dist_refs() {
        let v = values
            .get(&d.id)
            .ok_or_else(|| EvalError::Unsupported(format!("no value for distribution #{}", d.id)))?;
        assign.insert(d.id, Interval::point(*v));
    }
    let ts = match eval(g, ctx, &assign, Mode::Relaxed).and_then(as_bool) {
        Ok(t) => t,
        Err(Fail::Eval(e)) => return Err(e),
        Err(Fail::Imprecise) => unreachable!(),
    };
    Ok(ts.can_true)
}

pub fn support_hull(kind: &DistKind) -> Interval {
    match kind.support() {
        Support::Interval { low, high } => Interval::new(low, high),
        Support::Discrete(vals) => Interval::new(
            vals.iter().copied().fold(f64::INFINITY, f64::min),
            vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ),
    }
}

/// Existential driver: enumerates discrete supports, bisects continuous
/// ones while `f` reports imprecision, and unions the results.
pub(crate) fn existential<F>(dists: &[DistRef], mut f: F) -> Result<TriState, EvalError>
where
    F: FnMut(&Assignment, Mode) -> R<TriState>,
{
    let mut discrete: Vec<(u32, Vec<f64>)> = Vec::new();
    let mut continuous: Vec<(u32, Interval)> = Vec::new();
    for d in dists {
        match d.kind.support() {
            Support::Discrete(vals) => discrete.push((d.id, vals)),
            Support::Interval { low, high } => continuous.push((d.id, Interval::new(low, high))),
        }
    }
    let combos: usize = discrete
        .iter()
        .fold(1usize, |acc, (_, v)| acc.saturating_mul(v.len().max(1)));
    if combos > MAX_DISCRETE_COMBOS {
        for (id, vals) in discrete.drain(..) {
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            continuous.push((id, Interval::new(lo, hi)));
        }
    }

    let budget = SUBDIVISIONS_PER_VAR * continuous.len().max(1);
    let mut acc = TriState::NONE;
    let mut index = vec![0usize; discrete.len()];
    loop {
        let mut base = Assignment::new();
        for (k, (id, vals)) in discrete.iter().enumerate() {
            base.insert(*id, Interval::point(vals[index[k]]));
        }
        acc = acc.union(bisect(&base, &continuous, budget, &mut f)?);
        if acc == TriState::BOTH {
            return Ok(acc);
        }
        // Odometer increment over discrete choices.
        let mut k = 0;
        loop {
            if k == index.len() {
                return Ok(acc);
            }
            index[k] += 1;
            if index[k] < discrete[k].1.len() {
                break;
            }
            index[k] = 0;
            k += 1;
        }
    }
}

fn bisect<F>(base: &Assignment, vars: &[(u32, Interval)], budget: usize, f: &mut F) -> Result<TriState, EvalError>
where
    F: FnMut(&Assignment, Mode) -> R<TriState>,
{
    let with = |boxes: &[Interval]| {
        let mut a = base.clone();
        for ((id, _), iv) in vars.iter().zip(boxes) {
            a.insert(*id, *iv);
        }
        a
    };
    let mut queue: std::collections::VecDeque<Vec<Interval>> = std::collections::VecDeque::new();
    queue.push_back(vars.iter().map(|(_, iv)| *iv).collect());
    let mut acc = TriState::NONE;
    let mut leaves = 1usize;
    while let Some(b) = queue.pop_front() {
        let assign = with(&b);
        match f(&assign, Mode::Strict) {
            Ok(t) => acc = acc.union(t),
            Err(Fail::Eval(e)) => return Err(e),
            Err(Fail::Imprecise) => {
                let widest = (0..b.len()).filter(|&k| !b[k].is_point()).max_by(|&x, &y| {
                    b[x].width()
                        .partial_cmp(&b[y].width())
                        .unwrap_or(std::cmp::Ordering::Equal)
                });
                match widest {
                    Some(k) if leaves < budget => {
                        let m = b[k].mid();
                        let (mut left, mut right) = (b.clone(), b.clone());
                        left[k] = Interval::new(b[k].lo, m);
                        right[k] = Interval::new(m, b[k].hi);
                        queue.push_back(left);
                        queue.push_back(right);
                        leaves += 1;
                    }
                    _ => match f(&assign, Mode::Relaxed) {
                        Ok(t) => acc = acc.union(t),
                        Err(Fail::Eval(e)) => return Err(e),
                        Err(Fail::Imprecise) => acc = TriState::BOTH,
                    },
                }
            }
        }
        if acc == TriState::BOTH {
            break;
        }
    }
    Ok(acc)
}

pub(crate) fn as_bool(v: Value) -> R<TriState> {
    match v {
        Value::Bool(t) => Ok(t),
        other => unsupported(format!("expected a boolean, found a {}", other.kind())),
    }
}

pub(crate) fn as_scalar(v: Value) -> R<Interval> {
    match v {
        Value::Scalar(iv) => Ok(iv),
        other => unsupported(format!("expected a scalar, found a {}", other.kind())),
    }
}

/// Position of an object or vector value.
pub(crate) fn as_position(v: &Value, ctx: &EvalContext) -> R<[Interval; 3]> {
    match v {
        Value::Vector(c) => Ok(*c),
        Value::Object { program, .. } => {
            let s = ctx.state(program)?;
            Ok(s.pos.map(Interval::point))
        }
        other => unsupported(format!("expected a position, found a {}", other.kind())),
    }
}

pub(crate) fn point_of(p: &[Interval; 3], mode: Mode) -> R<Point> {
    if p[0].is_point() && p[1].is_point() {
        Ok([p[0].lo, p[1].lo])
    } else if mode == Mode::Strict {
        Err(Fail::Imprecise)
    } else {
        Ok([p[0].mid(), p[1].mid()])
    }
}

/// Heading carried by a value: scalars are headings, objects contribute theirs.
pub(crate) fn as_heading(v: &Value, ctx: &EvalContext, at: Option<Point>) -> R<Interval> {
    match v {
        Value::Scalar(iv) => Ok(*iv),
        Value::Object { program, .. } => Ok(Interval::point(ctx.state(program)?.heading)),
        Value::RoadDirection => {
            let p = at.ok_or_else(|| Fail::Eval(EvalError::Unsupported("road direction needs a location".into())))?;
            let lane = ctx
                .map
                .lane_at(p)
                .ok_or_else(|| Fail::Eval(EvalError::MissingFeature(format!("no lane at ({}, {})", p[0], p[1]))))?;
            Ok(Interval::point(lane.direction_at(p).unwrap_or(0.0)))
        }
        other => unsupported(format!("expected a heading, found a {}", other.kind())),
    }
}

/// Wrap a heading interval into (-π, π], widening to the full circle if it straddles ±π.
pub(crate) fn wrap_heading(iv: Interval, mode: Mode) -> R<Interval> {
    if iv.is_point() {
        return Ok(Interval::point(geometry::wrap_angle(iv.lo)));
    }
    let n = interval::normalize_heading(iv);
    if n.hi <= PI {
        Ok(n)
    } else if mode == Mode::Strict {
        Err(Fail::Imprecise)
    } else {
        Ok(Interval::new(-PI, PI))
    }
}

/// Rotate a local (right, forward) offset by `heading` into the global frame.
pub(crate) fn rotate(local: &[Interval; 3], heading: Interval, mode: Mode) -> R<[Interval; 3]> {
    if heading.is_point() {
        let (s, c) = heading.lo.sin_cos();
        let x = local[0].scale(c).sub(local[1].scale(s));
        let y = local[0].scale(s).add(local[1].scale(c));
        // Each output mixes both inputs; the box is exact only when one is a point.
        if mode == Mode::Strict && !(local[0].is_point() || local[1].is_point()) && s != 0.0 && c != 0.0 {
            return Err(Fail::Imprecise);
        }
        return Ok([x, y, local[2]]);
    }
    if mode == Mode::Strict {
        return Err(Fail::Imprecise);
    }
    let (s, c) = (heading.sin(), heading.cos());
    let x = local[0].mul(c).sub(local[1].mul(s));
    let y = local[0].mul(s).add(local[1].mul(c));
    Ok([x, y, local[2]])
}

fn vector_of(items: &[Expr], ctx: &EvalContext, assign: &Assignment, mode: Mode) -> R<[Interval; 3]> {
    if !(2..=3).contains(&items.len()) {
        return unsupported("vectors need 2 or 3 components");
    }
    let mut out = [Interval::point(0.0); 3];
    for (k, item) in items.iter().enumerate() {
        out[k] = as_scalar(eval(item, ctx, assign, mode)?)?;
    }
    Ok(out)
}

fn compare(op: BinaryOp, a: Interval, b: Interval) -> TriState {
    let (can_true, can_false) = match op {
        BinaryOp::Lt => (a.lo < b.hi, a.hi >= b.lo),
        BinaryOp::Le => (a.lo <= b.hi, a.hi > b.lo),
        BinaryOp::Gt => (a.hi > b.lo, a.lo <= b.hi),
        BinaryOp::Ge => (a.hi >= b.lo, a.lo < b.hi),
        BinaryOp::Eq | BinaryOp::Ne => {
            let can_eq = a.lo <= b.hi + EQ_TOL && b.lo <= a.hi + EQ_TOL;
            let can_ne = (a.hi - b.lo) > EQ_TOL || (b.hi - a.lo) > EQ_TOL;
            if op == BinaryOp::Eq {
                (can_eq, can_ne)
            } else {
                (can_ne, can_eq)
            }
        }
        _ => unreachable!("not a comparison"),
    };
    TriState { can_true, can_false }
}

pub(crate) fn eval(e: &Expr, ctx: &EvalContext, assign: &Assignment, mode: Mode) -> R<Value> {
    let ev = |x: &Expr| eval(x, ctx, assign, mode);
    let from_or_ego = |f: &Option<Box<Expr>>| -> R<Value> {
        match f {
            Some(x) => ev(x),
            None => ev(&Expr::Name(ctx.ego.to_string())),
        }
    };
    Ok(match e {
        Expr::Number(n) => Value::Scalar(Interval::point(*n)),
        Expr::Bool(b) => Value::Bool(TriState::exact(*b)),
        Expr::Dist(d) => Value::Scalar(assign.get(&d.id).copied().unwrap_or_else(|| support_hull(&d.kind))),
        Expr::Name(n) => resolve_name(n, ctx)?,
        Expr::Attr(base, attr) => attribute(ev(base)?, attr, ctx)?,
        Expr::Vector(items) => Value::Vector(vector_of(items, ctx, assign, mode)?),
        Expr::Unary(UnaryOp::Neg, x) => match ev(x)? {
            Value::Scalar(iv) => Value::Scalar(iv.neg()),
            Value::Vector(v) => Value::Vector(v.map(Interval::neg)),
            other => return unsupported(format!("cannot negate a {}", other.kind())),
        },
        Expr::Unary(UnaryOp::Not, x) => Value::Bool(as_bool(ev(x)?)?.not()),
        Expr::Binary(op, a, b) => binary(*op, a, b, ctx, assign, mode)?,
        Expr::Deg(x) => Value::Scalar(as_scalar(ev(x)?)?.scale(PI / 180.0)),
        Expr::RelativeTo(a, b) => {
            let (va, vb) = (ev(a)?, ev(b)?);
            match (&va, &vb) {
                (Value::Scalar(x), Value::Scalar(y)) => Value::Scalar(x.add(*y)),
                (Value::Scalar(x), Value::Object { program, .. }) => {
                    Value::Scalar(x.add(Interval::point(ctx.state(program)?.heading)))
                }
                (Value::Vector(x), Value::Vector(y)) => Value::Vector([x[0].add(y[0]), x[1].add(y[1]), x[2].add(y[2])]),
                (Value::Vector(x), Value::Object { program, .. }) => {
                    let s = ctx.state(program)?;
                    let g = rotate(x, Interval::point(s.heading), mode)?;
                    Value::Vector([0, 1, 2].map(|k| g[k].add(Interval::point(s.pos[k]))))
                }
                _ => return unsupported(format!("'relative to' between a {} and a {}", va.kind(), vb.kind())),
            }
        }
        Expr::RelativeHeading { of, from } => {
            let h_of = as_heading(&ev(of)?, ctx, None)?;
            let h_from = as_heading(&from_or_ego(from)?, ctx, None)?;
            Value::Scalar(wrap_heading(h_of.sub(h_from), mode)?)
        }
        Expr::ApparentHeading { of, from } => {
            let vo = ev(of)?;
            let Value::Object { program, .. } = &vo else {
                return unsupported("'apparent heading of' needs an object");
            };
            let s = ctx.state(program)?;
            let viewer = point_of(&as_position(&from_or_ego(from)?, ctx)?, mode)?;
            let los = geometry::angle_between(viewer, s.xy());
            Value::Scalar(Interval::point(geometry::wrap_angle(s.heading - los)))
        }
        Expr::Distance { from, to } => {
            let a = as_position(&from_or_ego(from)?, ctx)?;
            let b = as_position(&ev(to)?, ctx)?;
            let sq = (0..3).fold(Interval::point(0.0), |acc, k| acc.add(b[k].sub(a[k]).sqr()));
            Value::Scalar(sq.sqrt())
        }
        Expr::Angle { from, to } => {
            let a = point_of(&as_position(&from_or_ego(from)?, ctx)?, mode)?;
            let b = point_of(&as_position(&ev(to)?, ctx)?, mode)?;
            if geometry::dist(a, b) == 0.0 {
                return Err(Fail::Eval(EvalError::Domain("angle between coincident points".into())));
            }
            Value::Scalar(Interval::point(geometry::angle_between(a, b)))
        }
        Expr::CanSee(a, b) => {
            let va = ev(a)?;
            let Value::Object { program, .. } = &va else {
                return unsupported("'can see' needs an object on the left");
            };
            let cone = ctx.view_cone(program)?;
            let target = point_of(&as_position(&ev(b)?, ctx)?, mode)?;
            Value::Bool(TriState::exact(cone.contains(target)))
        }
        Expr::In(a, r) => {
            let p = point_of(&as_position(&ev(a)?, ctx)?, mode)?;
            match ev(r)? {
                Value::Region(reg) => Value::Bool(TriState::exact(reg.contains(p, ctx.map))),
                other => return unsupported(format!("'in' needs a region, found a {}", other.kind())),
            }
        }
        Expr::OffsetBy(a, v) => {
            let base = as_position(&ev(a)?, ctx)?;
            let Value::Vector(off) = ev(v)? else {
                return unsupported("'offset by' needs a vector");
            };
            Value::Vector([0, 1, 2].map(|k| base[k].add(off[k])))
        }
        Expr::OffsetAlong {
            base,
            direction,
            offset,
        } => {
            let b = as_position(&ev(base)?, ctx)?;
            let at = point_of(&b, Mode::Relaxed).ok();
            let h = as_heading(&ev(direction)?, ctx, at)?;
            let Value::Vector(off) = ev(offset)? else {
                return unsupported("'offset along' needs a vector offset");
            };
            let g = rotate(&off, h, mode)?;
            Value::Vector([0, 1, 2].map(|k| b[k].add(g[k])))
        }
        Expr::Visible { region, from, negated } => {
            let Value::Region(reg) = ev(region)? else {
                return unsupported("'visible' needs a region");
            };
            let viewer = match from {
                Some(f) => match ev(f)? {
                    Value::Object { program, .. } => program,
                    other => return unsupported(format!("'visible from' needs an object, found a {}", other.kind())),
                },
                None => ctx.ego.to_string(),
            };
            let cone = Region::Cone(ctx.view_cone(&viewer)?);
            Value::Region(if *negated {
                Region::Minus(Box::new(reg), Box::new(cone))
            } else {
                Region::Intersect(Box::new(reg), Box::new(cone))
            })
        }
    })
}

fn resolve_name(n: &str, ctx: &EvalContext) -> R<Value> {
    if let Some(id) = ctx.corr.get(n) {
        return Ok(Value::Object {
            program: n.to_string(),
            trace: id.to_string(),
        });
    }
    match n {
        "road" => Ok(Value::Region(Region::Road)),
        "roadDirection" => Ok(Value::RoadDirection),
        "self" => unsupported("'self' is unbound here"),
        _ if ctx.map.lane(n).is_some() => Ok(Value::Region(Region::Lane(n.to_string()))),
        _ if ctx.map.region(n).is_some() => Ok(Value::Region(Region::Named(n.to_string()))),
        _ => Err(Fail::Eval(EvalError::MissingFeature(format!("unknown name '{n}'")))),
    }
}

fn attribute(base: Value, attr: &str, ctx: &EvalContext) -> R<Value> {
    match &base {
        Value::Object { program, trace } => {
            let cone = ctx.cone_params(program);
            match attr {
                "viewAngle" => return Ok(Value::Scalar(Interval::point(2.0 * cone.half_angle))),
                "visibleDistance" => return Ok(Value::Scalar(Interval::point(cone.range))),
                _ => {}
            }
            let s = ctx.state(program)?;
            match attr {
                "position" => Ok(Value::Vector(s.pos.map(Interval::point))),
                "heading" => Ok(Value::Scalar(Interval::point(s.heading))),
                "x" => Ok(Value::Scalar(Interval::point(s.pos[0]))),
                "y" => Ok(Value::Scalar(Interval::point(s.pos[1]))),
                "z" => Ok(Value::Scalar(Interval::point(s.pos[2]))),
                "lane" => {
                    let lane = s.lane.as_ref().ok_or_else(|| {
                        Fail::Eval(EvalError::MissingFeature(format!(
                            "lane of '{trace}' at t={}",
                            ctx.frame.t
                        )))
                    })?;
                    if ctx.map.lane(lane).is_none() {
                        return Err(Fail::Eval(EvalError::MissingFeature(format!(
                            "lane '{lane}' is not in the map"
                        ))));
                    }
                    Ok(Value::Region(Region::Lane(lane.clone())))
                }
                _ => unsupported(format!("unknown object attribute '{attr}'")),
            }
        }
        Value::Vector(v) => match attr {
            "x" => Ok(Value::Scalar(v[0])),
            "y" => Ok(Value::Scalar(v[1])),
            "z" => Ok(Value::Scalar(v[2])),
            _ => unsupported(format!("unknown vector attribute '{attr}'")),
        },
        other => unsupported(format!("attribute '{attr}' of a {}", other.kind())),
    }
}

fn binary(op: BinaryOp, a: &Expr, b: &Expr, ctx: &EvalContext, assign: &Assignment, mode: Mode) -> R<Value> {
    let va = eval(a, ctx, assign, mode)?;
    match op {
        BinaryOp::And | BinaryOp::Or => {
            let ta = as_bool(va)?;
            // Short-circuit only when the result is already fixed.
            if op == BinaryOp::And && !ta.can_true {
                return Ok(Value::Bool(TriState::FALSE));
            }
            if op == BinaryOp::Or && !ta.can_false {
                return Ok(Value::Bool(TriState::TRUE));
            }
            let tb = as_bool(eval(b, ctx, assign, mode)?)?;
            return Ok(Value::Bool(if op == BinaryOp::And { ta.and(tb) } else { ta.or(tb) }));
        }
        _ => {}
    }
    let vb = eval(b, ctx, assign, mode)?;
    if op.is_comparison() {
        let (x, y) = (as_scalar(va)?, as_scalar(vb)?);
        return Ok(Value::Bool(compare(op, x, y)));
    }
    Ok(match (op, va, vb) {
        (BinaryOp::Add, Value::Scalar(x), Value::Scalar(y)) => Value::Scalar(x.add(y)),
        (BinaryOp::Sub, Value::Scalar(x), Value::Scalar(y)) => Value::Scalar(x.sub(y)),
        (BinaryOp::Mul, Value::Scalar(x), Value::Scalar(y)) => Value::Scalar(x.mul(y)),
        (BinaryOp::Div, Value::Scalar(x), Value::Scalar(y)) => {
            if mode == Mode::Strict && !y.is_point() && y.lo <= 0.0 && y.hi >= 0.0 {
                return Err(Fail::Imprecise);
            }
            Value::Scalar(
                x.div(y)
                    .ok_or_else(|| Fail::Eval(EvalError::Domain("division by zero".into())))?,
            )
        }
        (BinaryOp::Add, Value::Vector(x), Value::Vector(y)) => Value::Vector([0, 1, 2].map(|k| x[k].add(y[k]))),
        (BinaryOp::Sub, Value::Vector(x), Value::Vector(y)) => Value::Vector([0, 1, 2].map(|k| x[k].sub(y[k]))),
        (BinaryOp::Mul, Value::Vector(x), Value::Scalar(k)) | (BinaryOp::Mul, Value::Scalar(k), Value::Vector(x)) => {
            Value::Vector(x.map(|c| c.mul(k)))
        }
        (op, x, y) => {
            return unsupported(format!(
                "operator '{}' between a {} and a {}",
                op.symbol(),
                x.kind(),
                y.kind()
            ))
        }
    })
}

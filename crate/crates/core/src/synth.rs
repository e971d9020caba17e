//! Synthetic label traces sampled from a scenario program.
//!
//! The initial scene is drawn by rejection sampling against the program's
//! specifiers. Distribution occurrences in guards are sampled once per
//! trace and held. Each object then follows one concrete run of its machine,
//! moved by a crude lane-following stepper.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::compiler::{
    self, CompileError, CompileOptions, GuardId, Hfsm, HfsmBundle, Label, StateId, StateKind, Trigger,
};
use crate::dsl::{DistKind, Expr, ScenarioAst, Specifier, Stmt};
use crate::guards::{eval_concrete, eval_expr, EvalContext, EvalError, Value};
use crate::query::Correspondence;
use crate::trace::{Frame, LabelTrace, ObjectInfo, ObjectState};
use crate::world::geometry::{self, Point};
use crate::world::{self, ConeParams, Lane, RoadMap};

/// Label emitted for objects whose program gives no behavior.
const UNCONSTRAINED_BEHAVIOR: &str = "Stationary";
/// Proposals near an already placed object are drawn within this arc-length radius.
const NEARBY_RADIUS: f64 = 60.0;

#[derive(Clone, Debug)]
pub struct SynthConfig {
    pub seed: u64,
    /// Frames; at least 1.
    pub length: usize,
    /// Seconds per frame; positive.
    pub dt: f64,
    /// Meters per second per primitive behavior.
    pub speeds: BTreeMap<String, f64>,
    pub default_speed: f64,
    /// Seconds to blend into the adjacent lane.
    pub lane_change_time: f64,
    /// Rejection-sampling budget for the initial scene and run.
    pub max_attempts: usize,
    /// Give trace objects opaque, randomly assigned ids.
    pub shuffle_ids: bool,
    pub compile: CompileOptions,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let speeds = [
            ("FollowLane", 5.0),
            ("LaneChange", 5.0),
            ("Stationary", 0.0),
            ("Yield", 0.0),
            ("Brake", 2.0),
            ("Accelerate", 8.0),
            ("Walk", 1.4),
            ("CrossStreet", 1.4),
        ];
        SynthConfig {
            seed: 0,
            length: 100,
            dt: 0.5,
            speeds: speeds.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            default_speed: 5.0,
            lane_change_time: 2.0,
            max_attempts: 10_000,
            shuffle_ids: false,
            compile: CompileOptions::default(),
        }
    }
}

impl SynthConfig {
    pub fn new(seed: u64, length: usize) -> Self {
        SynthConfig {
            seed,
            length,
            ..Default::default()
        }
    }

    fn speed(&self, behavior: &str) -> f64 {
        self.speeds.get(behavior).copied().unwrap_or(self.default_speed)
    }
}

/// Map used when none is given: two 3.5 m lanes, 1 km long.
pub fn default_map() -> RoadMap {
    RoadMap::straight_road(2, 3.5, 1000.0)
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("no satisfying scene found in {0} attempts")]
    UnsatisfiableScene(usize),
    #[error("object '{object}' cannot change lanes: lane '{lane}' has no neighbor")]
    NoAdjacentLane { object: String, lane: String },
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Position along a lane.
#[derive(Clone, Debug)]
struct Kin {
    lane: String,
    s: f64,
    lateral: f64,
    /// +1 along the lane's travel direction, -1 against it.
    dir: f64,
    /// Lateral meters per frame while a lane change is in progress.
    blend: Option<f64>,
}

impl Kin {
    fn pose(&self, map: &RoadMap) -> (Point, f64) {
        let lane = map.lane(&self.lane).expect("kinematic lane exists");
        let (p, h) = geometry::point_at_arclength(&lane.centerline, self.s).expect("lane has a centerline");
        let pos = geometry::add(p, geometry::to_global([self.lateral, 0.0], h));
        let heading = if self.dir > 0.0 {
            h
        } else {
            geometry::wrap_angle(h + std::f64::consts::PI)
        };
        (pos, heading)
    }
}

fn observe(map: &RoadMap, kin: &Kin, behavior: &str) -> ObjectState {
    let (pos, heading) = kin.pose(map);
    let own = map.lane(&kin.lane).filter(|l| l.contains(pos));
    let lane = own.or_else(|| map.lane_at(pos)).map(|l| l.id.clone());
    ObjectState {
        pos: [pos[0], pos[1], 0.0],
        heading,
        lane,
        behaviors: BTreeSet::from([behavior.to_string()]),
    }
}

fn sample_dist(kind: &DistKind, rng: &mut ChaCha8Rng) -> f64 {
    match kind {
        DistKind::Range { low, high } => {
            if high > low {
                rng.gen_range(*low..=*high)
            } else {
                *low
            }
        }
        DistKind::Uniform(vals) => *vals.choose(rng).expect("nonempty uniform"),
        DistKind::Normal { mean, std_dev } => Normal::new(*mean, *std_dev).map(|n| n.sample(rng)).unwrap_or(*mean),
        DistKind::TruncatedNormal {
            mean,
            std_dev,
            low,
            high,
        } => {
            let n = Normal::new(*mean, *std_dev).ok();
            for _ in 0..1000 {
                let v = n.map(|n| n.sample(rng)).unwrap_or(*mean);
                if (*low..=*high).contains(&v) {
                    return v;
                }
            }
            mean.clamp(*low, *high)
        }
    }
}

fn identity(ast: &ScenarioAst, ids: &BTreeMap<String, String>) -> Correspondence {
    Correspondence::new(
        ast.objects
            .iter()
            .map(|o| (o.name.clone(), ids[&o.name].clone()))
            .collect(),
    )
}

fn lane_kin(lane: &Lane, s: f64, dir: f64) -> Kin {
    Kin {
        lane: lane.id.clone(),
        s: s.clamp(0.0, lane.length()),
        lateral: 0.0,
        dir,
        blend: None,
    }
}

fn kin_at(map: &RoadMap, p: Point, dir: f64) -> Option<Kin> {
    let lane = map.lane_at(p)?;
    let pr = lane.project(p)?;
    Some(Kin {
        lane: lane.id.clone(),
        s: pr.s,
        lateral: pr.lateral,
        dir,
        blend: None,
    })
}

/// A candidate pose for `obj` given the objects already placed.
fn propose(
    ast: &ScenarioAst,
    k: usize,
    map: &RoadMap,
    placed: &[(String, Kin)],
    ctx: &EvalContext,
    rng: &mut ChaCha8Rng,
) -> Option<Kin> {
    let obj = &ast.objects[k];
    let dir = if rng.gen_bool(0.2) { -1.0 } else { 1.0 };
    for spec in &obj.specifiers {
        if let Specifier::At(e) = spec {
            if let Ok(Value::Vector(v)) = eval_expr(e, ctx) {
                let x = if v[0].width() > 0.0 {
                    rng.gen_range(v[0].lo..=v[0].hi)
                } else {
                    v[0].lo
                };
                let y = if v[1].width() > 0.0 {
                    rng.gen_range(v[1].lo..=v[1].hi)
                } else {
                    v[1].lo
                };
                return kin_at(map, [x, y], dir);
            }
        }
    }
    let lane = map.lanes.choose(rng)?;
    let len = lane.length();
    if !placed.is_empty() && rng.gen_bool(0.7) {
        let (_, other) = placed.choose(rng)?;
        let (p, _) = other.pose(map);
        let s_ref = lane.project(p)?.s;
        return Some(lane_kin(
            lane,
            s_ref + rng.gen_range(-NEARBY_RADIUS..=NEARBY_RADIUS),
            dir,
        ));
    }
    Some(lane_kin(lane, rng.gen_range(0.0..=len), dir))
}

/// Specifiers of `obj` that hold, or cannot be decided yet because they
/// reference objects not placed so far.
fn plausible(ast: &ScenarioAst, k: usize, ctx: &EvalContext) -> bool {
    let obj = &ast.objects[k];
    obj.specifiers
        .iter()
        .all(|spec| !matches!(world::specifier_holds(obj, spec, ctx), Ok(false)))
}

struct Scene {
    kins: Vec<Kin>,
}

fn sample_scene(
    ast: &ScenarioAst,
    map: &RoadMap,
    cones: &BTreeMap<String, ConeParams>,
    ids: &BTreeMap<String, String>,
    rng: &mut ChaCha8Rng,
    attempts: &mut usize,
    budget: usize,
) -> Result<Scene, SynthError> {
    let corr = identity(ast, ids);
    let ego = world::ego_name(ast);
    'scene: loop {
        let mut placed: Vec<(String, Kin)> = Vec::new();
        for k in 0..ast.objects.len() {
            loop {
                *attempts += 1;
                if *attempts > budget {
                    return Err(SynthError::UnsatisfiableScene(budget));
                }
                let frame = Frame {
                    t: 0,
                    objs: placed
                        .iter()
                        .map(|(n, kin)| (ids[n].clone(), observe(map, kin, UNCONSTRAINED_BEHAVIOR)))
                        .collect(),
                };
                let ctx = EvalContext {
                    map,
                    frame: &frame,
                    corr: &corr,
                    cones,
                    ego,
                };
                let Some(kin) = propose(ast, k, map, &placed, &ctx, rng) else {
                    continue 'scene;
                };
                let mut frame = frame.clone();
                frame.objs.insert(
                    ids[&ast.objects[k].name].clone(),
                    observe(map, &kin, UNCONSTRAINED_BEHAVIOR),
                );
                let ctx = EvalContext { frame: &frame, ..ctx };
                if plausible(ast, k, &ctx) {
                    placed.push((ast.objects[k].name.clone(), kin));
                    break;
                }
            }
        }
        let frame = Frame {
            t: 0,
            objs: placed
                .iter()
                .map(|(n, kin)| (ids[n].clone(), observe(map, kin, UNCONSTRAINED_BEHAVIOR)))
                .collect(),
        };
        if let Ok(true) = world::initial_input_match(ast, &frame, &corr, map, cones) {
            return Ok(Scene {
                kins: placed.into_iter().map(|(_, k)| k).collect(),
            });
        }
        *attempts += 1;
        if *attempts > budget {
            return Err(SynthError::UnsatisfiableScene(budget));
        }
    }
}

#[derive(Clone, Copy)]
enum Outcome {
    Config(StateId),
    Term,
}

fn enter(h: &Hfsm, s: StateId) -> Outcome {
    if h.is_terminal(s) {
        Outcome::Term
    } else {
        Outcome::Config(h.descend(s))
    }
}

/// One deterministic step: at each level the first exit whose guard holds is taken.
fn concrete_step(
    h: &Hfsm,
    base: StateId,
    truth: &mut dyn FnMut(GuardId) -> Result<bool, EvalError>,
) -> Result<Option<StateId>, EvalError> {
    fn level(
        h: &Hfsm,
        path: &[StateId],
        j: usize,
        truth: &mut dyn FnMut(GuardId) -> Result<bool, EvalError>,
    ) -> Result<Outcome, EvalError> {
        let s = path[j];
        for t in h.outgoing(s) {
            if let Trigger::Guard { guard, positive } = t.trigger {
                if truth(guard)? == positive {
                    return Ok(enter(h, t.to));
                }
            }
        }
        match h.state(s).kind {
            StateKind::Composite(_) => match level(h, path, j + 1, truth)? {
                Outcome::Term => Ok(h
                    .outgoing(s)
                    .iter()
                    .find(|t| t.trigger == Trigger::ChildTerminated)
                    .map(|t| enter(h, t.to))
                    .unwrap_or(Outcome::Term)),
                c => Ok(c),
            },
            _ => Ok(Outcome::Config(s)),
        }
    }
    let path = h.path(base);
    Ok(match level(h, &path, 0, truth)? {
        Outcome::Config(c) => Some(c),
        Outcome::Term => None,
    })
}

fn behavior_of(h: &Hfsm, s: StateId) -> String {
    match h.label(s) {
        Some(Label::Primitive(p)) => p.clone(),
        _ => UNCONSTRAINED_BEHAVIOR.to_string(),
    }
}

fn advance(map: &RoadMap, kin: &mut Kin, behavior: &str, object: &str, cfg: &SynthConfig) -> Result<(), SynthError> {
    let speed = cfg.speed(behavior);
    if behavior == "LaneChange" {
        if kin.blend.is_none() {
            let lane = map.lane(&kin.lane).expect("kinematic lane exists");
            let target = lane
                .left
                .as_ref()
                .or(lane.right.as_ref())
                .and_then(|id| map.lane(id))
                .ok_or_else(|| SynthError::NoAdjacentLane {
                    object: object.to_string(),
                    lane: lane.id.clone(),
                })?;
            let (p, _) = kin.pose(map);
            let pr = target.project(p).expect("target lane has a centerline");
            kin.lane = target.id.clone();
            kin.s = pr.s;
            kin.lateral = pr.lateral;
            let frames = (cfg.lane_change_time / cfg.dt).max(1.0);
            kin.blend = Some(pr.lateral.abs() / frames);
        }
        let step = kin.blend.unwrap_or(0.0);
        kin.lateral = if kin.lateral.abs() <= step {
            0.0
        } else {
            kin.lateral - step * kin.lateral.signum()
        };
    } else {
        kin.blend = None;
    }
    let mut s = kin.s + kin.dir * speed * cfg.dt;
    loop {
        let lane = map.lane(&kin.lane).expect("kinematic lane exists");
        let len = lane.length();
        if s > len && kin.dir > 0.0 {
            if let Some(next) = lane.successors.first().filter(|n| map.lane(n).is_some()) {
                s -= len;
                kin.lane = next.clone();
                continue;
            }
        }
        kin.s = s.clamp(0.0, len);
        return Ok(());
    }
}

/// Sample one trace. The identity-like correspondence (program object to its
/// own trace id) matches the trace from frame 0 for the full length.
pub fn generate_trace(ast: &ScenarioAst, map: &RoadMap, config: &SynthConfig) -> Result<LabelTrace, SynthError> {
    let bundle = compiler::translate(ast, &config.compile)?;
    generate_with(ast, &bundle, map, config)
}

pub fn generate_with(
    ast: &ScenarioAst,
    bundle: &HfsmBundle,
    map: &RoadMap,
    config: &SynthConfig,
) -> Result<LabelTrace, SynthError> {
    if config.length == 0 {
        return Err(SynthError::Config("length must be at least 1".into()));
    }
    if !(config.dt.is_finite() && config.dt > 0.0) {
        return Err(SynthError::Config("dt must be positive".into()));
    }
    if map.lanes.is_empty() {
        return Err(SynthError::Config("map has no lanes".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let cones = world::cone_params(ast)?;
    let ego = world::ego_name(ast);

    let mut ids: BTreeMap<String, String> = ast.objects.iter().map(|o| (o.name.clone(), o.name.clone())).collect();
    if config.shuffle_ids {
        let mut perm: Vec<usize> = (0..ast.objects.len()).collect();
        perm.shuffle(&mut rng);
        for (o, p) in ast.objects.iter().zip(perm) {
            ids.insert(o.name.clone(), format!("obj{p:02}"));
        }
    }
    let corr = identity(ast, &ids);
    let mut objects: Vec<ObjectInfo> = ast
        .objects
        .iter()
        .map(|o| ObjectInfo {
            id: ids[&o.name].clone(),
            class: o.class.clone(),
        })
        .collect();
    objects.sort_by(|a, b| a.id.cmp(&b.id));

    let mut attempts = 0usize;
    'attempt: loop {
        let scene = sample_scene(ast, map, &cones, &ids, &mut rng, &mut attempts, config.max_attempts)?;
        let mut kins = scene.kins;
        let values: Vec<BTreeMap<u32, f64>> = bundle
            .machines
            .iter()
            .map(|h| {
                let mut vals = BTreeMap::new();
                for g in &h.guards {
                    for d in g.expr.dist_refs() {
                        vals.entry(d.id).or_insert_with(|| sample_dist(&d.kind, &mut rng));
                    }
                }
                vals
            })
            .collect();
        let mut states: Vec<StateId> = bundle.machines.iter().map(Hfsm::initial_base).collect();
        let mut frames = Vec::with_capacity(config.length);
        let snapshot = |kins: &[Kin], states: &[StateId], t: i64| Frame {
            t,
            objs: bundle
                .machines
                .iter()
                .zip(kins)
                .zip(states)
                .map(|((h, kin), s)| (ids[&h.object].clone(), observe(map, kin, &behavior_of(h, *s))))
                .collect(),
        };
        frames.push(snapshot(&kins, &states, 0));
        for t in 1..config.length {
            for ((h, kin), s) in bundle.machines.iter().zip(kins.iter_mut()).zip(&states) {
                advance(map, kin, &behavior_of(h, *s), &h.object, config)?;
            }
            // Guards read this frame's poses; behaviors are filled in after stepping.
            let inputs = snapshot(&kins, &states, t as i64);
            let ctx = EvalContext {
                map,
                frame: &inputs,
                corr: &corr,
                cones: &cones,
                ego,
            };
            for (k, h) in bundle.machines.iter().enumerate() {
                let step = concrete_step(h, states[k], &mut |g| {
                    eval_concrete(&h.guards[g.0 as usize].expr, &ctx, &values[k])
                });
                match step {
                    Ok(Some(next)) => states[k] = next,
                    Ok(None) | Err(_) => {
                        log::debug!("run of '{}' ended at frame {t}; resampling", h.object);
                        attempts += 1;
                        if attempts > config.max_attempts {
                            return Err(SynthError::UnsatisfiableScene(config.max_attempts));
                        }
                        continue 'attempt;
                    }
                }
            }
            frames.push(snapshot(&kins, &states, t as i64));
        }
        let trace = LabelTrace {
            hz: 1.0 / config.dt,
            objects,
            frames,
        };
        debug_assert!(trace.validate().is_ok());
        return Ok(trace);
    }
}

fn map_stmt(s: &Stmt, f: &dyn Fn(&Expr) -> Expr, rename: &dyn Fn(&str) -> String) -> Stmt {
    match s {
        Stmt::Do { behavior, until, span } => Stmt::Do {
            behavior: rename(behavior),
            until: until.as_ref().map(f),
            span: *span,
        },
        Stmt::Seq(items) => Stmt::Seq(items.iter().map(|i| map_stmt(i, f, rename)).collect()),
        Stmt::TryInterrupt {
            body,
            condition,
            handler,
            span,
        } => Stmt::TryInterrupt {
            body: Box::new(map_stmt(body, f, rename)),
            condition: f(condition),
            handler: Box::new(map_stmt(handler, f, rename)),
            span: *span,
        },
        Stmt::Assign { target, value, span } => Stmt::Assign {
            target: target.clone(),
            value: f(value),
            span: *span,
        },
        other => other.clone(),
    }
}

fn map_specifier(s: &Specifier, f: &dyn Fn(&Expr) -> Expr) -> Specifier {
    let fo = |e: &Option<Expr>| e.as_ref().map(f);
    match s {
        Specifier::At(e) => Specifier::At(f(e)),
        Specifier::In(e) => Specifier::In(f(e)),
        Specifier::On(e) => Specifier::On(f(e)),
        Specifier::OffsetBy(e) => Specifier::OffsetBy(f(e)),
        Specifier::OffsetAlong { direction, offset } => Specifier::OffsetAlong {
            direction: f(direction),
            offset: f(offset),
        },
        Specifier::Beyond { target, offset, from } => Specifier::Beyond {
            target: f(target),
            offset: f(offset),
            from: fo(from),
        },
        Specifier::VisibleFrom(from) => Specifier::VisibleFrom(fo(from)),
        Specifier::AheadOf { target, by } => Specifier::AheadOf {
            target: f(target),
            by: fo(by),
        },
        Specifier::Behind { target, by } => Specifier::Behind {
            target: f(target),
            by: fo(by),
        },
        Specifier::Following { field, from, distance } => Specifier::Following {
            field: f(field),
            from: fo(from),
            distance: f(distance),
        },
        Specifier::Facing(e) => Specifier::Facing(f(e)),
        Specifier::FacingToward(e) => Specifier::FacingToward(f(e)),
        Specifier::FacingAwayFrom(e) => Specifier::FacingAwayFrom(f(e)),
        Specifier::ApparentlyFacing { heading, from } => Specifier::ApparentlyFacing {
            heading: f(heading),
            from: fo(from),
        },
    }
}

/// Fill in the implicit ego of `visible`, `distance to`, `angle to` and
/// relative headings so that renaming can redirect them.
fn explicit_ego(e: &Expr, ego: &str) -> Expr {
    let eg = || Some(Box::new(Expr::name(ego)));
    let r = |x: &Expr| Box::new(explicit_ego(x, ego));
    let ro = |x: &Option<Box<Expr>>| x.as_ref().map(|v| r(v)).or_else(eg);
    match e {
        Expr::Distance { from, to } => Expr::Distance {
            from: ro(from),
            to: r(to),
        },
        Expr::Angle { from, to } => Expr::Angle {
            from: ro(from),
            to: r(to),
        },
        Expr::RelativeHeading { of, from } => Expr::RelativeHeading {
            of: r(of),
            from: ro(from),
        },
        Expr::ApparentHeading { of, from } => Expr::ApparentHeading {
            of: r(of),
            from: ro(from),
        },
        Expr::Visible { region, from, negated } => Expr::Visible {
            region: r(region),
            from: ro(from),
            negated: *negated,
        },
        Expr::Attr(x, a) => Expr::Attr(r(x), a.clone()),
        Expr::Vector(items) => Expr::Vector(items.iter().map(|i| explicit_ego(i, ego)).collect()),
        Expr::Unary(op, x) => Expr::Unary(*op, r(x)),
        Expr::Binary(op, a, b) => Expr::Binary(*op, r(a), r(b)),
        Expr::Deg(x) => Expr::Deg(r(x)),
        Expr::RelativeTo(a, b) => Expr::RelativeTo(r(a), r(b)),
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
        Expr::Number(_) | Expr::Bool(_) | Expr::Name(_) | Expr::Dist(_) => e.clone(),
    }
}

fn explicit_spec(s: &Specifier, ego: &str) -> Specifier {
    let s = map_specifier(s, &|e| explicit_ego(e, ego));
    let eg = || Some(Expr::name(ego));
    match s {
        Specifier::VisibleFrom(None) => Specifier::VisibleFrom(eg()),
        Specifier::Beyond {
            target,
            offset,
            from: None,
        } => Specifier::Beyond {
            target,
            offset,
            from: eg(),
        },
        Specifier::Following {
            field,
            from: None,
            distance,
        } => Specifier::Following {
            field,
            from: eg(),
            distance,
        },
        Specifier::ApparentlyFacing { heading, from: None } => Specifier::ApparentlyFacing { heading, from: eg() },
        other => other,
    }
}

fn max_dist_id(ast: &ScenarioAst) -> u32 {
    let mut m = 0;
    let mut visit = |e: &Expr| {
        for d in e.dist_refs() {
            m = m.max(d.id + 1);
        }
    };
    for o in &ast.objects {
        o.specifiers.iter().flat_map(|s| s.exprs()).for_each(&mut visit);
        o.properties.iter().for_each(|(_, e)| visit(e));
    }
    for b in ast.behaviors.values() {
        b.body.walk(&mut |s| match s {
            Stmt::Do { until: Some(c), .. } => visit(c),
            Stmt::TryInterrupt { condition, .. } => visit(condition),
            Stmt::Assign { value, .. } => visit(value),
            _ => {}
        });
    }
    ast.requires.iter().for_each(|r| visit(&r.condition));
    m
}

/// Replicate the program's objects into `n_objects / 2` disjoint copies.
///
/// Copy `k` (from 2) suffixes every object name with `k`; composite
/// behaviors mentioning objects are duplicated with the same renaming, and
/// each copy gets fresh distribution occurrences. Meant for two-object
/// programs, where the copies are (ego-like, other-like) pairs.
pub fn scale_program(ast: &ScenarioAst, n_objects: usize) -> Result<ScenarioAst, SynthError> {
    if n_objects < 2 || !n_objects.is_multiple_of(2) {
        return Err(SynthError::Config(format!(
            "object count must be even and at least 2, got {n_objects}"
        )));
    }
    if ast.objects.len() != 2 {
        return Err(SynthError::Config(format!(
            "scaling expects a two-object program, got {} objects",
            ast.objects.len()
        )));
    }
    if n_objects == 2 {
        return Ok(ast.clone());
    }
    let ego = world::ego_name(ast).to_string();
    let names: BTreeSet<String> = ast.objects.iter().map(|o| o.name.clone()).collect();
    let mut base = ast.clone();
    for o in &mut base.objects {
        o.specifiers = o.specifiers.iter().map(|s| explicit_spec(s, &ego)).collect();
    }
    for b in base.behaviors.values_mut() {
        b.body = map_stmt(&b.body, &|e| explicit_ego(e, &ego), &|n| n.to_string());
    }
    let mut out = base.clone();
    let mut next_id = max_dist_id(&base);
    for k in 2..=n_objects / 2 {
        let rename_obj = |n: &str| names.contains(n).then(|| format!("{n}{k}"));
        let renumber = |e: &Expr, next: &mut u32| e.rename_objects(&rename_obj).renumber_dists(next);
        let behavior_name = |b: &str| {
            if base.behaviors.contains_key(b) {
                format!("{b}{k}")
            } else {
                b.to_string()
            }
        };
        for (name, def) in &base.behaviors {
            let counter = std::cell::Cell::new(next_id);
            let body = map_stmt(
                &def.body,
                &|e| {
                    let mut n = counter.get();
                    let r = renumber(e, &mut n);
                    counter.set(n);
                    r
                },
                &behavior_name,
            );
            next_id = counter.get();
            let mut copy = def.clone();
            copy.name = behavior_name(name);
            copy.body = body;
            out.behaviors.insert(copy.name.clone(), copy);
        }
        for o in &base.objects {
            let counter = std::cell::Cell::new(next_id);
            let fresh = |e: &Expr| {
                let mut n = counter.get();
                let r = renumber(e, &mut n);
                counter.set(n);
                r
            };
            let mut c = o.clone();
            c.name = format!("{}{k}", o.name);
            c.behavior = o.behavior.as_deref().map(behavior_name);
            c.specifiers = o.specifiers.iter().map(|s| map_specifier(s, &fresh)).collect();
            c.properties = o.properties.iter().map(|(p, e)| (p.clone(), fresh(e))).collect();
            next_id = counter.get();
            out.objects.push(c);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse, pretty, tests::TWO_CAR};
    use crate::query::{query, Program, QueryOptions};

    #[test]
    fn running_example_trace_matches_its_program() {
        let ast = parse(TWO_CAR).unwrap();
        let map = default_map();
        let trace = generate_trace(&ast, &map, &SynthConfig::new(42, 100)).unwrap();
        assert_eq!(trace.len(), 100);
        assert_eq!(
            trace.object_durations().values().copied().collect::<Vec<_>>(),
            vec![100, 100]
        );
        let p = Program::compile(ast, &CompileOptions::default()).unwrap();
        let r = query(&p, &trace, 50, &map, &QueryOptions::default()).unwrap();
        assert!(r.matched);
    }

    #[test]
    fn interrupt_fires_in_generated_trace() {
        let ast = parse(TWO_CAR).unwrap();
        let map = default_map();
        let fired = (0..10).any(|seed| {
            let t = generate_trace(&ast, &map, &SynthConfig::new(seed, 100)).unwrap();
            t.frames.iter().any(|f| f.objs["ego"].behaviors.contains("LaneChange"))
        });
        assert!(fired);
    }

    #[test]
    fn single_frame_trace_is_initial_scene() {
        let ast = parse(TWO_CAR).unwrap();
        let t = generate_trace(&ast, &default_map(), &SynthConfig::new(1, 1)).unwrap();
        assert_eq!(t.len(), 1);
        assert!(t.frames[0].objs["ego"].behaviors.contains("FollowLane"));
    }

    #[test]
    fn same_seed_same_file() {
        let ast = parse(TWO_CAR).unwrap();
        let map = default_map();
        let a = generate_trace(&ast, &map, &SynthConfig::new(7, 40)).unwrap();
        let b = generate_trace(&ast, &map, &SynthConfig::new(7, 40)).unwrap();
        assert_eq!(a.to_json_string(), b.to_json_string());
    }

    #[test]
    fn invalid_configs_rejected() {
        let ast = parse(TWO_CAR).unwrap();
        let map = default_map();
        assert!(matches!(
            generate_trace(&ast, &map, &SynthConfig::new(0, 0)),
            Err(SynthError::Config(_))
        ));
        let one_lane = RoadMap::straight_road(1, 3.5, 1000.0);
        let src = "behavior B():\n    do LaneChange\nego = new Car with behavior B\n";
        let r = generate_trace(&parse(src).unwrap(), &one_lane, &SynthConfig::new(0, 5));
        assert!(matches!(r, Err(SynthError::NoAdjacentLane { .. })));
    }

    #[test]
    fn unsatisfiable_scene_exhausts_budget() {
        let src = "ego = new Car at (5000, 5000)\n";
        let cfg = SynthConfig {
            max_attempts: 50,
            ..SynthConfig::new(0, 3)
        };
        let r = generate_trace(&parse(src).unwrap(), &default_map(), &cfg);
        assert!(matches!(r, Err(SynthError::UnsatisfiableScene(50))));
    }

    #[test]
    fn scaling_replicates_pairs() {
        let ast = parse(TWO_CAR).unwrap();
        assert_eq!(scale_program(&ast, 2).unwrap(), ast);
        let four = scale_program(&ast, 4).unwrap();
        let names: Vec<_> = four.object_names().collect();
        assert_eq!(names, vec!["ego", "otherCar", "ego2", "otherCar2"]);
        let text = pretty::program(&four);
        assert!(text.contains("behavior EgoBehavior2():"), "{text}");
        assert!(
            text.contains("(distance from ego2 to otherCar2) < Range(1.0, 15.0)"),
            "{text}"
        );
        assert!(
            text.contains("otherCar2 = new Car on ego2.lane, visible from ego2"),
            "{text}"
        );
        let reparsed = parse(&text).unwrap();
        assert_eq!(reparsed.objects.len(), 4);
        let eight = scale_program(&ast, 8).unwrap();
        assert_eq!(eight.objects.len(), 8);
        let ids: BTreeSet<u32> = eight
            .behaviors
            .values()
            .flat_map(|b| {
                let mut v = Vec::new();
                b.body.walk(&mut |s| {
                    if let Stmt::TryInterrupt { condition, .. } = s {
                        v.extend(condition.dist_refs().iter().map(|d| d.id));
                    }
                });
                v
            })
            .collect();
        assert_eq!(ids.len(), 4);
        assert!(matches!(scale_program(&ast, 3), Err(SynthError::Config(_))));
    }

    #[test]
    fn scaled_program_traces_match() {
        let ast = scale_program(&parse(TWO_CAR).unwrap(), 4).unwrap();
        let map = default_map();
        let cfg = SynthConfig {
            shuffle_ids: true,
            ..SynthConfig::new(3, 60)
        };
        let trace = generate_trace(&ast, &map, &cfg).unwrap();
        assert!(trace.objects.iter().all(|o| o.id.starts_with("obj")));
        let p = Program::compile(ast, &CompileOptions::default()).unwrap();
        assert!(query(&p, &trace, 30, &map, &QueryOptions::default()).unwrap().matched);
    }
}

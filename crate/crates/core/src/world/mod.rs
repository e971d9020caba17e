//! Road-map geometry, view cones and the initial-scene check.

pub mod geometry;
mod map;

use std::collections::BTreeMap;
use std::f64::consts::PI;

pub use map::{Lane, MapError, RoadMap};

use crate::dsl::{DistRef, Expr, ObjectDecl, ScenarioAst, Specifier};
use crate::guards::{
    self, as_heading, as_position, as_scalar, eval, existential, point_of, Assignment, EvalContext, EvalError, Fail,
    Interval, Mode, TriState, Value, R,
};
use crate::query::Correspondence;
use crate::trace::{Frame, ObjectState};
use geometry::Point;

pub const DEFAULT_HALF_ANGLE: f64 = PI / 4.0;
pub const DEFAULT_VIEW_RANGE: f64 = 50.0;
/// Tolerance for heading equalities and lateral alignment in specifiers.
pub const POSE_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConeParams {
    /// Radians, in (0, π].
    pub half_angle: f64,
    /// Meters, > 0.
    pub range: f64,
}

impl Default for ConeParams {
    fn default() -> Self {
        ConeParams {
            half_angle: DEFAULT_HALF_ANGLE,
            range: DEFAULT_VIEW_RANGE,
        }
    }
}

/// Closed circular sector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ViewCone {
    pub apex: Point,
    pub heading: f64,
    pub half_angle: f64,
    pub range: f64,
}

impl ViewCone {
    pub fn new(apex: Point, heading: f64, p: ConeParams) -> ViewCone {
        ViewCone {
            apex,
            heading,
            half_angle: p.half_angle,
            range: p.range,
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        let d = geometry::dist(self.apex, p);
        if d > self.range + geometry::BOUNDARY_EPS {
            return false;
        }
        if d <= geometry::BOUNDARY_EPS {
            return true;
        }
        let off = geometry::wrap_angle(geometry::angle_between(self.apex, p) - self.heading);
        off.abs() <= self.half_angle + geometry::BOUNDARY_EPS
    }
}

pub fn can_see(viewer: &ObjectState, target: &ObjectState, params: ConeParams) -> bool {
    ViewCone::new(viewer.xy(), viewer.heading, params).contains(target.xy())
}

/// View-cone parameters declared per object (`with viewAngle`, full aperture;
/// `with visibleDistance`). Distribution-valued settings use their largest
/// support value, since a wider cone only admits more scenes.
pub fn cone_params(ast: &ScenarioAst) -> Result<BTreeMap<String, ConeParams>, EvalError> {
    let empty_map = RoadMap::default();
    let empty_frame = Frame {
        t: 0,
        objs: BTreeMap::new(),
    };
    let corr = Correspondence::default();
    let cones = BTreeMap::new();
    let ctx = EvalContext {
        map: &empty_map,
        frame: &empty_frame,
        corr: &corr,
        cones: &cones,
        ego: "",
    };
    let upper = |e: &Expr, what: &str| -> Result<f64, EvalError> {
        match guards::eval_expr(e, &ctx)? {
            Value::Scalar(iv) => Ok(iv.hi),
            _ => Err(EvalError::Unsupported(format!("{what} must be a constant scalar"))),
        }
    };
    let mut out = BTreeMap::new();
    for obj in &ast.objects {
        let mut p = ConeParams::default();
        if let Some(e) = obj.property("viewAngle") {
            let full = upper(e, "viewAngle")?;
            if !(full > 0.0) {
                return Err(EvalError::Domain(format!(
                    "viewAngle of '{}' must be positive",
                    obj.name
                )));
            }
            p.half_angle = (full / 2.0).min(PI);
        }
        if let Some(e) = obj.property("visibleDistance") {
            p.range = upper(e, "visibleDistance")?;
            if !(p.range > 0.0) {
                return Err(EvalError::Domain(format!(
                    "visibleDistance of '{}' must be positive",
                    obj.name
                )));
            }
        }
        out.insert(obj.name.clone(), p);
    }
    Ok(out)
}

/// The program object implicit references are relative to.
pub fn ego_name(ast: &ScenarioAst) -> &str {
    if ast.object("ego").is_some() {
        "ego"
    } else {
        ast.objects.first().map(|o| o.name.as_str()).unwrap_or("ego")
    }
}

/// Whether the observed scene lies in the support of the program's initial
/// distribution under `corr`: every specifier and `require` is satisfiable.
pub fn initial_input_match(
    ast: &ScenarioAst,
    frame: &Frame,
    corr: &Correspondence,
    map: &RoadMap,
    cones: &BTreeMap<String, ConeParams>,
) -> Result<bool, EvalError> {
    let ctx = EvalContext {
        map,
        frame,
        corr,
        cones,
        ego: ego_name(ast),
    };
    for obj in &ast.objects {
        ctx.state(&obj.name)?;
    }
    for obj in &ast.objects {
        for spec in &obj.specifiers {
            if !specifier_holds(obj, spec, &ctx)? {
                return Ok(false);
            }
        }
    }
    for r in &ast.requires {
        if !guards::guard_sat(&r.condition, &ctx)?.can_true {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Support membership of one specifier for the object's observed pose.
pub fn specifier_holds(obj: &ObjectDecl, spec: &Specifier, ctx: &EvalContext) -> Result<bool, EvalError> {
    let me = ctx.state(&obj.name)?;
    let dists: Vec<DistRef> = spec.exprs().into_iter().flat_map(|e| e.dist_refs()).cloned().collect();
    let ts = existential(&dists, |assign, mode| {
        check(spec, me, ctx, assign, mode).map(TriState::exact)
    })?;
    Ok(ts.can_true)
}

fn in_box(p: [f64; 2], b: &[Interval; 3]) -> bool {
    b[0].contains(p[0], geometry::BOUNDARY_EPS) && b[1].contains(p[1], geometry::BOUNDARY_EPS)
}

/// Offset value as a (right, forward) box; a scalar means straight ahead.
fn offset_box(v: Value) -> R<[Interval; 3]> {
    match v {
        Value::Vector(b) => Ok(b),
        Value::Scalar(d) => Ok([Interval::point(0.0), d, Interval::point(0.0)]),
        _ => Err(Fail::Eval(EvalError::Unsupported(
            "offset must be a vector or a distance".into(),
        ))),
    }
}

fn object_pose(v: &Value, ctx: &EvalContext) -> R<(Point, f64)> {
    match v {
        Value::Object { program, .. } => {
            let s = ctx.state(program)?;
            Ok((s.xy(), s.heading))
        }
        _ => Err(Fail::Eval(EvalError::Unsupported("expected an object".into()))),
    }
}

fn heading_matches(h: f64, target: Interval) -> bool {
    let tol = if target.is_point() {
        POSE_TOL
    } else {
        geometry::BOUNDARY_EPS
    };
    geometry::heading_in_interval(h, target.lo, target.hi, tol)
}

/// `true` iff the specifier admits the observed pose under this assignment.
/// Strict mode reports `Imprecise` where a loose enclosure would be needed.
fn check(spec: &Specifier, me: &ObjectState, ctx: &EvalContext, assign: &Assignment, mode: Mode) -> R<bool> {
    let ev = |e: &Expr| eval(e, ctx, assign, mode);
    let ego = || ev(&Expr::Name(ctx.ego.to_string()));
    let p = me.xy();
    Ok(match spec {
        Specifier::At(v) => in_box(p, &as_position(&ev(v)?, ctx)?),
        Specifier::In(r) | Specifier::On(r) => match ev(r)? {
            Value::Region(reg) => reg.contains(p, ctx.map),
            other => in_box(p, &as_position(&other, ctx)?),
        },
        Specifier::OffsetBy(v) => {
            let (base, h) = object_pose(&ego()?, ctx)?;
            let local = geometry::to_local(geometry::sub(p, base), h);
            in_box(local, &offset_box(ev(v)?)?)
        }
        Specifier::OffsetAlong { direction, offset } => {
            let (base, _) = object_pose(&ego()?, ctx)?;
            let h = as_heading(&ev(direction)?, ctx, Some(base))?;
            let off = offset_box(ev(offset)?)?;
            if h.is_point() {
                in_box(geometry::to_local(geometry::sub(p, base), h.lo), &off)
            } else {
                let g = guards::rotate(&off, h, mode)?;
                in_box(geometry::sub(p, base), &g)
            }
        }
        Specifier::Beyond { target, offset, from } => {
            let t = point_of(&as_position(&ev(target)?, ctx)?, mode)?;
            let f = match from {
                Some(f) => point_of(&as_position(&ev(f)?, ctx)?, mode)?,
                None => object_pose(&ego()?, ctx)?.0,
            };
            if geometry::dist(f, t) == 0.0 {
                return Err(Fail::Eval(EvalError::Domain(
                    "'beyond' target coincides with viewpoint".into(),
                )));
            }
            let h = geometry::angle_between(f, t);
            in_box(geometry::to_local(geometry::sub(p, t), h), &offset_box(ev(offset)?)?)
        }
        Specifier::VisibleFrom(from) => {
            let viewer = match from {
                Some(f) => ev(f)?,
                None => ego()?,
            };
            let Value::Object { program, .. } = viewer else {
                return Err(Fail::Eval(EvalError::Unsupported(
                    "'visible from' needs an object".into(),
                )));
            };
            ctx.view_cone(&program)?.contains(p)
        }
        Specifier::AheadOf { target, by } | Specifier::Behind { target, by } => {
            let ahead = matches!(spec, Specifier::AheadOf { .. });
            let (base, h) = object_pose(&ev(target)?, ctx)?;
            let local = geometry::to_local(geometry::sub(p, base), h);
            let sign = if ahead { 1.0 } else { -1.0 };
            match by {
                None => local[0].abs() <= POSE_TOL && sign * local[1] >= -geometry::BOUNDARY_EPS,
                Some(b) => match ev(b)? {
                    Value::Scalar(d) => {
                        local[0].abs() <= POSE_TOL && d.contains(sign * local[1], geometry::BOUNDARY_EPS)
                    }
                    Value::Vector(v) => in_box([local[0], sign * local[1]], &v),
                    _ => {
                        return Err(Fail::Eval(EvalError::Unsupported(
                            "'by' needs a distance or vector".into(),
                        )))
                    }
                },
            }
        }
        Specifier::Following { field, from, distance } => {
            let origin = match from {
                Some(f) => ev(f)?,
                None => ego()?,
            };
            let (start, origin_lane) = match &origin {
                Value::Object { program, .. } => {
                    let s = ctx.state(program)?;
                    (s.xy(), s.lane.clone())
                }
                other => (point_of(&as_position(other, ctx)?, mode)?, None),
            };
            let lane = match ev(field)? {
                Value::Region(guards::Region::Lane(id)) => ctx.map.lane(&id),
                Value::RoadDirection => match origin_lane {
                    Some(id) => ctx.map.lane(&id),
                    None => ctx.map.lane_at(start),
                },
                _ => {
                    return Err(Fail::Eval(EvalError::Unsupported(
                        "'following' needs a lane or roadDirection".into(),
                    )))
                }
            }
            .ok_or_else(|| Fail::Eval(EvalError::MissingFeature("no lane to follow".into())))?;
            let d = as_scalar(ev(distance)?)?;
            let (Some(a), Some(b)) = (lane.project(start), lane.project(p)) else {
                return Ok(false);
            };
            (a.lateral - b.lateral).abs() <= POSE_TOL && d.contains(b.s - a.s, POSE_TOL)
        }
        Specifier::Facing(h) => match ev(h)? {
            Value::RoadDirection => {
                let lane = ctx
                    .map
                    .lane_at(p)
                    .ok_or_else(|| Fail::Eval(EvalError::MissingFeature("no lane under object".into())))?;
                heading_matches(me.heading, Interval::point(lane.direction_at(p).unwrap_or(0.0)))
            }
            other => heading_matches(me.heading, as_heading(&other, ctx, Some(p))?),
        },
        Specifier::FacingToward(x) | Specifier::FacingAwayFrom(x) => {
            let q = point_of(&as_position(&ev(x)?, ctx)?, mode)?;
            if geometry::dist(p, q) == 0.0 {
                return Err(Fail::Eval(EvalError::Domain("facing a coincident point".into())));
            }
            let h = if matches!(spec, Specifier::FacingToward(_)) {
                geometry::angle_between(p, q)
            } else {
                geometry::angle_between(q, p)
            };
            heading_matches(me.heading, Interval::point(h))
        }
        Specifier::ApparentlyFacing { heading, from } => {
            let viewer = match from {
                Some(f) => point_of(&as_position(&ev(f)?, ctx)?, mode)?,
                None => object_pose(&ego()?, ctx)?.0,
            };
            let rel = as_heading(&ev(heading)?, ctx, Some(p))?;
            let los = geometry::angle_between(viewer, p);
            heading_matches(me.heading, rel.add(Interval::point(los)))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn state(pos: [f64; 2], heading: f64, lane: Option<&str>) -> ObjectState {
        ObjectState {
            pos: [pos[0], pos[1], 0.0],
            heading,
            lane: lane.map(str::to_string),
            behaviors: BTreeSet::from(["Stationary".to_string()]),
        }
    }

    #[test]
    fn cone_membership() {
        let wide = ConeParams {
            half_angle: PI / 3.0,
            range: 50.0,
        };
        let viewer = state([0.0, 0.0], 0.0, None);
        assert!(can_see(&viewer, &state([0.0, 10.0], 0.0, None), wide));
        assert!(!can_see(&viewer, &state([0.0, -10.0], 0.0, None), wide));
        assert!(can_see(&viewer, &state([0.0, 50.0], 0.0, None), wide));
        assert!(!can_see(&viewer, &state([0.0, 50.001], 0.0, None), wide));
        // Exactly on the edge of the default 45° half-angle.
        let edge = [-10.0 * (PI / 4.0).sin(), 10.0 * (PI / 4.0).cos()];
        assert!(can_see(&viewer, &state(edge, 0.0, None), ConeParams::default()));
    }

    fn check_scene(src: &str, scene: &[(&str, ObjectState)], corr: &[(&str, &str)]) -> Result<bool, EvalError> {
        let ast = parse(src).unwrap();
        let map = RoadMap::straight_road(2, 3.5, 200.0);
        let frame = Frame {
            t: 0,
            objs: scene.iter().map(|(id, s)| (id.to_string(), s.clone())).collect(),
        };
        let corr = Correspondence::new(corr.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect());
        let cones = cone_params(&ast).unwrap();
        initial_input_match(&ast, &frame, &corr, &map, &cones)
    }

    #[test]
    fn ahead_of_and_behind() {
        let src = "ego = new Car\nother = new Car ahead of ego by 5\n";
        let scene = |y: f64| vec![("a", state([0.0, 0.0], 0.0, None)), ("b", state([0.0, y], 0.0, None))];
        let corr = [("ego", "a"), ("other", "b")];
        assert!(check_scene(src, &scene(5.0), &corr).unwrap());
        assert!(!check_scene(src, &scene(6.0), &corr).unwrap());
        let src = "ego = new Car\nother = new Car behind ego by Range(2, 8)\n";
        assert!(check_scene(src, &scene(-5.0), &corr).unwrap());
        assert!(!check_scene(src, &scene(5.0), &corr).unwrap());
    }

    #[test]
    fn facing_relative_heading() {
        let src = "ego = new Car\nother = new Car facing Range(70, 180) deg relative to ego.heading\n";
        let scene = |h: f64| vec![("a", state([0.0, 0.0], 0.0, None)), ("b", state([0.0, 10.0], h, None))];
        let corr = [("ego", "a"), ("other", "b")];
        assert!(check_scene(src, &scene(PI), &corr).unwrap());
        assert!(check_scene(src, &scene(-PI), &corr).unwrap());
        assert!(check_scene(src, &scene(1.5), &corr).unwrap());
        assert!(!check_scene(src, &scene(0.5), &corr).unwrap());
        assert!(!check_scene(src, &scene(-1.5), &corr).unwrap());
    }

    #[test]
    fn offset_by_is_in_ego_frame() {
        let src = "ego = new Car\nother = new Car offset by (Range(-1, 1), Range(5, 10))\n";
        // Ego faces -x (heading 90°): forward is -x.
        let scene = |p: [f64; 2]| vec![("a", state([0.0, 0.0], PI / 2.0, None)), ("b", state(p, 0.0, None))];
        let corr = [("ego", "a"), ("other", "b")];
        assert!(check_scene(src, &scene([-7.0, 0.5]), &corr).unwrap());
        assert!(!check_scene(src, &scene([7.0, 0.0]), &corr).unwrap());
    }

    #[test]
    fn following_lane_for_distance() {
        let src = "ego = new Car\nother = new Car following roadDirection from ego for Range(5, 10)\n";
        let scene = |y: f64| {
            vec![
                ("a", state([0.5, 20.0], 0.0, Some("Lane1"))),
                ("b", state([0.5, y], 0.0, None)),
            ]
        };
        let corr = [("ego", "a"), ("other", "b")];
        // Oracle: straight centerline, so arc length is the y difference.
        assert!(check_scene(src, &scene(27.0), &corr).unwrap());
        assert!(!check_scene(src, &scene(31.0), &corr).unwrap());
        assert!(!check_scene(src, &scene(15.0), &corr).unwrap());
    }

    #[test]
    fn on_lane_requires_lane_label() {
        let src = "ego = new Car\nother = new Car on ego.lane\n";
        let scene = vec![
            ("a", state([0.0, 0.0], 0.0, None)),
            ("b", state([0.0, 10.0], 0.0, None)),
        ];
        let r = check_scene(src, &scene, &[("ego", "a"), ("other", "b")]);
        assert!(matches!(r, Err(EvalError::MissingFeature(_))));
    }

    #[test]
    fn outside_lane_fails_on_lane() {
        let src = "ego = new Car\nother = new Car on ego.lane\n";
        let scene = vec![
            ("a", state([0.0, 0.0], 0.0, Some("Lane1"))),
            ("b", state([30.0, 10.0], 0.0, None)),
        ];
        assert!(!check_scene(src, &scene, &[("ego", "a"), ("other", "b")]).unwrap());
    }

    #[test]
    fn view_angle_property_narrows_cone() {
        let src = "ego = new Car with viewAngle 20 deg\nother = new Car visible from ego\n";
        let scene = |x: f64| vec![("a", state([0.0, 0.0], 0.0, None)), ("b", state([x, 10.0], 0.0, None))];
        let corr = [("ego", "a"), ("other", "b")];
        assert!(check_scene(src, &scene(1.0), &corr).unwrap());
        assert!(!check_scene(src, &scene(3.0), &corr).unwrap());
    }

    #[test]
    fn require_is_checked() {
        let src = "ego = new Car\nother = new Car\nrequire (distance to other) > 8\n";
        let scene = |y: f64| vec![("a", state([0.0, 0.0], 0.0, None)), ("b", state([0.0, y], 0.0, None))];
        let corr = [("ego", "a"), ("other", "b")];
        assert!(check_scene(src, &scene(10.0), &corr).unwrap());
        assert!(!check_scene(src, &scene(5.0), &corr).unwrap());
    }

    /// Reference crossing-number test, without boundary handling.
    fn ray_cast(p: Point, poly: &[Point]) -> bool {
        let mut inside = false;
        let n = poly.len();
        let mut j = n - 1;
        for i in 0..n {
            let (a, b) = (poly[i], poly[j]);
            if (a[1] > p[1]) != (b[1] > p[1]) && p[0] < (b[0] - a[0]) * (p[1] - a[1]) / (b[1] - a[1]) + a[0] {
                inside = !inside;
            }
            j = i;
        }
        inside
    }

    fn fixture_polygons() -> Vec<Vec<Point>> {
        let mut polys: Vec<Vec<Point>> = RoadMap::straight_road(2, 3.5, 50.0)
            .lanes
            .into_iter()
            .map(|l| l.polygon)
            .collect();
        polys.push(vec![[0.0, 0.0], [10.0, 0.0], [10.0, 10.0], [5.0, 3.0], [0.0, 10.0]]);
        polys.push(vec![
            [0.0, 0.0],
            [4.0, -2.0],
            [8.0, 1.0],
            [6.0, 6.0],
            [2.0, 7.0],
            [-1.0, 4.0],
        ]);
        polys
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn point_in_polygon_agrees_with_ray_casting(x in -12.0..15.0f64, y in -5.0..55.0f64) {
            for poly in fixture_polygons() {
                let on_boundary = (0..poly.len()).any(|i| {
                    let a = poly[i];
                    let b = poly[(i + 1) % poly.len()];
                    let len = geometry::dist(a, b);
                    let cross = ((b[0] - a[0]) * (y - a[1]) - (b[1] - a[1]) * (x - a[0])).abs() / len;
                    cross < 1e-6
                });
                prop_assume!(!on_boundary);
                prop_assert_eq!(geometry::point_in_polygon([x, y], &poly), ray_cast([x, y], &poly));
            }
        }

        #[test]
        fn angle_outputs_are_wrapped(a in -100.0..100.0f64, b in -100.0..100.0f64,
                                     x in -10.0..10.0f64, y in -10.0..10.0f64) {
            let w = geometry::wrap_angle(a - b);
            prop_assert!(w > -PI && w <= PI);
            prop_assume!(x != 0.0 || y != 0.0);
            let h = geometry::angle_between([0.0, 0.0], [x, y]);
            prop_assert!(h > -PI && h <= PI);
        }
    }
}

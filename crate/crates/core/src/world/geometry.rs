//! Planar geometry in the heading convention of the scenario language:
//! heading 0 points along +y and angles grow counter-clockwise.

use std::f64::consts::PI;

pub type Point = [f64; 2];

pub const TAU: f64 = 2.0 * PI;

/// Wrap an angle to (-π, π].
pub fn wrap_angle(a: f64) -> f64 {
    if !a.is_finite() {
        return a;
    }
    let mut r = a.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    r
}

/// Unit vector pointing along `heading`.
pub fn heading_vector(heading: f64) -> Point {
    [-heading.sin(), heading.cos()]
}

/// Heading of the direction from `from` to `to`.
pub fn angle_between(from: Point, to: Point) -> f64 {
    let dx = to[0] - from[0];
    let dy = to[1] - from[1];
    wrap_angle((-dx).atan2(dy))
}

/// Express the global displacement `d` in a frame whose forward axis is `heading`:
/// the result is (lateral-right, forward).
pub fn to_local(d: Point, heading: f64) -> Point {
    let (s, c) = heading.sin_cos();
    [d[0] * c + d[1] * s, -d[0] * s + d[1] * c]
}

/// Inverse of [`to_local`].
pub fn to_global(local: Point, heading: f64) -> Point {
    let (s, c) = heading.sin_cos();
    [local[0] * c - local[1] * s, local[0] * s + local[1] * c]
}

pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

pub fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1]]
}

pub fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

pub const BOUNDARY_EPS: f64 = 1e-9;

/// Closed point-in-polygon test: boundary points count as inside.
pub fn point_in_polygon(p: Point, poly: &[Point]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        if point_on_segment(p, poly[i], poly[(i + 1) % n]) {
            return true;
        }
    }
    // Winding number; robust to vertex order.
    let mut winding = 0i32;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if a[1] <= p[1] {
            if b[1] > p[1] && cross(a, b, p) > 0.0 {
                winding += 1;
            }
        } else if b[1] <= p[1] && cross(a, b, p) < 0.0 {
            winding -= 1;
        }
    }
    winding != 0
}

pub fn point_on_segment(p: Point, a: Point, b: Point) -> bool {
    let len = dist(a, b);
    if len == 0.0 {
        return dist(p, a) <= BOUNDARY_EPS;
    }
    let t = dot(sub(p, a), sub(b, a)) / (len * len);
    if !(-BOUNDARY_EPS..=1.0 + BOUNDARY_EPS).contains(&t) {
        return false;
    }
    let proj = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
    dist(p, proj) <= BOUNDARY_EPS
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && point_on_segment(a, c, d))
        || (d2 == 0.0 && point_on_segment(b, c, d))
        || (d3 == 0.0 && point_on_segment(c, a, b))
        || (d4 == 0.0 && point_on_segment(d, a, b))
}

/// True when no two non-adjacent edges touch.
pub fn polygon_is_simple(poly: &[Point]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        for j in i + 1..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            if segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

pub fn bounding_box(poly: &[Point]) -> (Point, Point) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in poly {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (lo, hi)
}

/// Membership of `h` in the wrapped heading interval [lo, hi].
pub fn heading_in_interval(h: f64, lo: f64, hi: f64, tol: f64) -> bool {
    if hi - lo >= TAU - tol {
        return true;
    }
    if hi < lo {
        return false;
    }
    let d = (h - lo).rem_euclid(TAU);
    d <= hi - lo + tol || d >= TAU - tol
}

/// Projection of a point onto a polyline.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Projection {
    /// Arc length from the first vertex to the foot point.
    pub s: f64,
    /// Signed offset, positive to the right of the travel direction.
    pub lateral: f64,
    pub heading: f64,
}

pub fn polyline_length(line: &[Point]) -> f64 {
    line.windows(2).map(|w| dist(w[0], w[1])).sum()
}

pub fn project_onto_polyline(p: Point, line: &[Point]) -> Option<Projection> {
    let mut best: Option<(f64, Projection)> = None;
    let mut s0 = 0.0;
    for w in line.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = dist(a, b);
        if len == 0.0 {
            continue;
        }
        let heading = angle_between(a, b);
        let t = (dot(sub(p, a), sub(b, a)) / (len * len)).clamp(0.0, 1.0);
        let foot = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
        let d = dist(p, foot);
        let local = to_local(sub(p, foot), heading);
        let cand = Projection {
            s: s0 + t * len,
            lateral: local[0],
            heading,
        };
        if best.as_ref().is_none_or(|(bd, _)| d < *bd - 1e-12) {
            best = Some((d, cand));
        }
        s0 += len;
    }
    best.map(|(_, p)| p)
}

/// Point at arc length `s` (clamped) plus its travel heading.
pub fn point_at_arclength(line: &[Point], s: f64) -> Option<(Point, f64)> {
    let mut remaining = s.max(0.0);
    let mut last = None;
    for w in line.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = dist(a, b);
        if len == 0.0 {
            continue;
        }
        let heading = angle_between(a, b);
        if remaining <= len {
            let t = remaining / len;
            return Some(([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])], heading));
        }
        remaining -= len;
        last = Some((b, heading));
    }
    last
}

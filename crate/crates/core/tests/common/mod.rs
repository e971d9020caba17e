//! Shared fixtures and random instance generators for integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use squery::compiler::CompileOptions;
use squery::query::Program;
use squery::trace::{Frame, LabelTrace, ObjectInfo, ObjectState};
use squery::world::RoadMap;

pub mod props;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap()
}

pub fn two_car_source() -> String {
    read_fixture("two_car.scq")
}

pub fn two_car() -> Program {
    Program::from_source(&two_car_source(), &CompileOptions::default()).unwrap()
}

pub fn two_car_map() -> RoadMap {
    RoadMap::load(&fixture("two_car_map.json")).unwrap()
}

pub fn two_car_trace() -> LabelTrace {
    LabelTrace::load(&fixture("two_car_trace.json")).unwrap()
}

pub const PRIMS: [&str; 3] = ["FollowLane", "LaneChange", "Brake"];

/// Two 3.5 m lanes along +y: Lane1 around x = 0, Lane2 around x = -3.5.
pub fn small_map() -> RoadMap {
    RoadMap::straight_road(2, 3.5, 60.0)
}

/// A random (program, trace, m) instance within the oracle budget.
#[derive(Clone, Debug)]
pub struct Instance {
    pub seed: u64,
    pub source: String,
    pub program: Program,
    pub trace: LabelTrace,
    pub m: usize,
}

struct Gen {
    rng: ChaCha8Rng,
    names: Vec<String>,
}

impl Gen {
    fn other(&mut self, not: &str) -> String {
        let pool: Vec<&String> = self.names.iter().filter(|n| *n != not).collect();
        match pool.choose(&mut self.rng) {
            Some(n) => n.to_string(),
            None => not.to_string(),
        }
    }

    fn num(&mut self, lo: f64, hi: f64) -> f64 {
        (self.rng.gen_range(lo..hi) * 2.0).round() / 2.0
    }

    /// Guards over positions only, so evaluation never fails on present objects.
    fn guard(&mut self) -> String {
        let who = if self.rng.gen_bool(0.7) {
            "self".to_string()
        } else {
            self.names[0].clone()
        };
        let tgt = self.other(&who);
        match self.rng.gen_range(0..5) {
            0 => {
                let lo = self.num(0.0, 10.0);
                let hi = lo + self.num(0.5, 20.0);
                format!("(distance from {who} to {tgt}) < Range({lo:?}, {hi:?})")
            }
            1 => format!("(distance from {who} to {tgt}) > {:?}", self.num(1.0, 25.0)),
            2 => format!("{who} in Lane2"),
            3 => format!("not ({who} in Lane1)"),
            _ => format!(
                "((distance from {who} to {tgt}) < {:?}) and ({who} in Lane1)",
                self.num(2.0, 30.0)
            ),
        }
    }

    fn prim(&mut self) -> &'static str {
        PRIMS.choose(&mut self.rng).unwrap()
    }

    /// A statement with exactly `leaves` primitive leaves.
    fn stmt(&mut self, leaves: usize, depth: usize, level: usize, out: &mut String) {
        let pad = "    ".repeat(level);
        if leaves == 1 || depth >= 2 {
            for _ in 0..leaves {
                let p = self.prim();
                if self.rng.gen_bool(0.5) {
                    let g = self.guard();
                    out.push_str(&format!("{pad}do {p} until {g}\n"));
                } else {
                    out.push_str(&format!("{pad}do {p}\n"));
                }
            }
            return;
        }
        if self.rng.gen_bool(0.5) {
            let a = self.rng.gen_range(1..leaves);
            let g = self.guard();
            out.push_str(&format!("{pad}try:\n"));
            self.stmt(a, depth + 1, level + 1, out);
            out.push_str(&format!("{pad}interrupt when {g}:\n"));
            self.stmt(leaves - a, depth + 1, level + 1, out);
        } else {
            let a = self.rng.gen_range(1..leaves);
            self.stmt(a, depth + 1, level, out);
            self.stmt(leaves - a, depth + 1, level, out);
        }
    }

    fn specifiers(&mut self, k: usize) -> Vec<String> {
        let ego = self.names[0].clone();
        let mut specs = Vec::new();
        for _ in 0..self.rng.gen_range(0..=2) {
            let s = match self.rng.gen_range(0..5) {
                0 => "on road".to_string(),
                1 => "in Lane1".to_string(),
                2 => "in Lane2".to_string(),
                3 if k > 0 => format!("visible from {ego}"),
                4 if k > 0 => format!("on {ego}.lane"),
                _ => continue,
            };
            if !specs.contains(&s) {
                specs.push(s);
            }
        }
        specs
    }
}

pub fn random_source(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=3);
    let mut names = vec!["ego".to_string()];
    names.extend((1..n).map(|k| format!("car{k}")));
    let mut g = Gen { rng, names };
    let mut out = String::new();
    let mut decls = Vec::new();
    let mut behaviors = 0;
    for k in 0..n {
        let class = if g.rng.gen_bool(0.8) { "Car" } else { "Pedestrian" };
        let mut parts = g.specifiers(k);
        match g.rng.gen_range(0..10) {
            0 => {}
            1 | 2 => parts.push(format!("with behavior {}", g.prim())),
            _ => {
                let name = format!("B{behaviors}");
                behaviors += 1;
                let leaves = g.rng.gen_range(1..=4);
                out.push_str(&format!("behavior {name}():\n"));
                g.stmt(leaves, 0, 1, &mut out);
                out.push('\n');
                parts.push(format!("with behavior {name}"));
            }
        }
        let head = format!("{} = new {class}", g.names[k]);
        decls.push(if parts.is_empty() {
            head
        } else {
            format!("{head} {}", parts.join(", "))
        });
    }
    out.push_str(&decls.join("\n"));
    out.push('\n');
    if n > 1 && g.rng.gen_bool(0.2) {
        out.push_str(&format!(
            "require (distance from ego to car1) < {:?}\n",
            g.num(5.0, 40.0)
        ));
    }
    out
}

pub fn random_trace(rng: &mut ChaCha8Rng, map: &RoadMap, max_frames: usize) -> LabelTrace {
    let len = rng.gen_range(1..=max_frames);
    let n = rng.gen_range(1..=4);
    let objects: Vec<ObjectInfo> = (0..n)
        .map(|k| ObjectInfo {
            id: format!("t{k}"),
            class: if rng.gen_bool(0.8) { "Car" } else { "Pedestrian" }.to_string(),
        })
        .collect();
    let mut frames: Vec<Frame> = (0..len)
        .map(|t| Frame {
            t: t as i64,
            objs: BTreeMap::new(),
        })
        .collect();
    for o in &objects {
        let (first, last) = if rng.gen_bool(0.8) {
            (0, len - 1)
        } else {
            let a = rng.gen_range(0..len);
            (a, rng.gen_range(a..len))
        };
        let mut x: f64 = rng.gen_range(-6.0..2.0);
        let mut y: f64 = rng.gen_range(0.0..40.0);
        let heading = *[0.0, std::f64::consts::PI, rng.gen_range(-3.0..3.0)]
            .choose(rng)
            .unwrap();
        for f in frames.iter_mut().take(last + 1).skip(first) {
            x = (x + rng.gen_range(-1.5..1.5)).clamp(-7.0, 3.0);
            y = (y + rng.gen_range(-6.0..6.0)).clamp(-2.0, 62.0);
            let k = *[1, 1, 1, 2, 2, 3].choose(rng).unwrap();
            let behaviors: BTreeSet<String> = PRIMS.choose_multiple(rng, k).map(|s| s.to_string()).collect();
            f.objs.insert(
                o.id.clone(),
                ObjectState {
                    pos: [x, y, 0.0],
                    heading,
                    lane: map.lane_at([x, y]).map(|l| l.id.clone()),
                    behaviors,
                },
            );
        }
    }
    LabelTrace {
        hz: 2.0,
        objects,
        frames,
    }
}

pub fn random_instance(seed: u64) -> Instance {
    let source = random_source(seed);
    let program = Program::from_source(&source, &CompileOptions::default())
        .unwrap_or_else(|e| panic!("generated program fails to compile: {e}\n{source}"));
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let trace = random_trace(&mut rng, &small_map(), 12);
    trace.validate().unwrap();
    let m = rng.gen_range(1..=trace.len());
    Instance {
        seed,
        source,
        program,
        trace,
        m,
    }
}

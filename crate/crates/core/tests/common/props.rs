//! Property bodies shared by the property test target and the acceptance run.

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use proptest::test_runner::{TestCaseResult, TestRunner};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{random_instance, random_source, random_trace, small_map, two_car};
use squery::compiler::{flatten, translate, CompileOptions, FlatNfa, FlatTarget, Hfsm, StateId};
use squery::dsl::{self, pretty, Expr, Stmt};
use squery::engine::{any_empty, initial_step, step_reachable, valid_step};
use squery::guards::{eval_concrete, guard_sat, EvalContext, TriState};
use squery::query::{match_window, query, CandidateEnumerator, Correspondence, QueryOptions};
use squery::synth::{generate_trace, SynthConfig};
use squery::trace::{Frame, LabelTrace, ObjectState};
use squery::world::ConeParams;

/// Run a property over `cases` inputs; the error carries the minimal failing input.
fn run<S: Strategy>(cases: u32, strategy: S, test: impl Fn(S::Value) -> TestCaseResult) -> Result<(), String> {
    let config = ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::with_cases(cases)
    };
    let mut runner = TestRunner::new(config);
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

// ---------------------------------------------------------------- dsl

pub fn pretty_printed_programs_reparse_identically(cases: u32) -> Result<(), String> {
    run(cases, any::<u64>(), |seed| {
        let src = random_source(seed);
        let ast = dsl::parse(&src).unwrap();
        let printed = pretty::program(&ast);
        let again = dsl::parse(&printed).unwrap();
        prop_assert_eq!(&ast, &again);
        prop_assert_eq!(printed, pretty::program(&again));
        Ok(())
    })
}

pub fn parse_never_panics_on_arbitrary_text(cases: u32) -> Result<(), String> {
    run(cases, "\\PC*", |s| {
        let _ = dsl::parse(&s);
        Ok(())
    })
}

pub fn parse_never_panics_on_mutated_programs(cases: u32) -> Result<(), String> {
    run(
        cases,
        (any::<u64>(), 0usize..400, "[a-z():=,. \n]{0,8}"),
        |(seed, cut, junk)| {
            let src = random_source(seed);
            let at = src
                .char_indices()
                .map(|(i, _)| i)
                .nth(cut % src.chars().count().max(1))
                .unwrap_or(0);
            let mutated = format!("{}{}{}", &src[..at], junk, &src[at..]);
            let _ = dsl::parse(&mutated);
            Ok(())
        },
    )
}

// ---------------------------------------------------------------- compiler

fn primitive_leaves(ast: &dsl::ScenarioAst, behavior: &str) -> usize {
    match ast.behaviors.get(behavior) {
        None => 1,
        Some(def) => {
            let mut n = 0;
            def.body.walk(&mut |s| {
                if let Stmt::Do { behavior, .. } = s {
                    n += primitive_leaves(ast, behavior);
                }
            });
            n
        }
    }
}

/// Base states reachable in one step of the flat machine.
fn flat_image(nfa: &FlatNfa, cur: &BTreeSet<usize>, table: &[TriState]) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    for &s in cur {
        for e in nfa.edges_from(s) {
            let enabled = e
                .literals
                .iter()
                .all(|(g, pol)| table[g.0 as usize].with_polarity(*pol).can_true);
            if let (true, FlatTarget::State(t)) = (enabled, e.to) {
                out.insert(t);
            }
        }
    }
    out
}

fn random_tristate(rng: &mut ChaCha8Rng) -> TriState {
    *[TriState::TRUE, TriState::FALSE, TriState::BOTH].choose(rng).unwrap()
}

fn check_flat_equivalence(h: &Hfsm, rng: &mut ChaCha8Rng, steps: usize) -> Result<(), TestCaseError> {
    let nfa = flatten(h);
    let to_flat =
        |set: &BTreeSet<StateId>| -> BTreeSet<usize> { set.iter().map(|s| nfa.index_of(*s).unwrap()).collect() };
    let mut hier = BTreeSet::from([h.initial_base()]);
    let mut flat = BTreeSet::from([nfa.initial]);
    prop_assert_eq!(to_flat(&hier), flat.clone());
    for _ in 0..steps {
        let table: Vec<TriState> = (0..h.guards.len()).map(|_| random_tristate(rng)).collect();
        let next_h = step_reachable(h, &hier, &mut |g| Ok(table[g.0 as usize])).unwrap();
        let next_f = flat_image(&nfa, &flat, &table);
        prop_assert_eq!(to_flat(&next_h), next_f.clone());
        // The same random pruning on both sides keeps runs comparable.
        let keep: BTreeSet<usize> = next_f.iter().copied().filter(|_| rng.gen_bool(0.7)).collect();
        hier = next_h
            .into_iter()
            .filter(|s| keep.contains(&nfa.index_of(*s).unwrap()))
            .collect();
        flat = keep;
        if flat.is_empty() {
            break;
        }
    }
    Ok(())
}

pub fn flat_machine_agrees_with_hierarchy(cases: u32) -> Result<(), String> {
    run(cases, (any::<u64>(), 1usize..=6), |(seed, steps)| {
        let ast = dsl::parse(&random_source(seed)).unwrap();
        let bundle = translate(&ast, &CompileOptions::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for h in &bundle.machines {
            check_flat_equivalence(h, &mut rng, steps)?;
        }
        Ok(())
    })
}

pub fn base_states_count_primitive_leaves(cases: u32) -> Result<(), String> {
    run(cases, any::<u64>(), |seed| {
        let ast = dsl::parse(&random_source(seed)).unwrap();
        let bundle = translate(&ast, &CompileOptions::default()).unwrap();
        for obj in &ast.objects {
            let h = bundle.get(&obj.name).unwrap();
            let expected = obj.behavior.as_deref().map_or(1, |b| primitive_leaves(&ast, b));
            prop_assert_eq!(h.base_states().len(), expected);
        }
        Ok(())
    })
}

pub fn translation_is_deterministic(cases: u32) -> Result<(), String> {
    run(cases, any::<u64>(), |seed| {
        let ast = dsl::parse(&random_source(seed)).unwrap();
        let a = translate(&ast, &CompileOptions::default()).unwrap();
        let b = translate(&ast, &CompileOptions::default()).unwrap();
        prop_assert_eq!(squery::compiler::to_json(&a), squery::compiler::to_json(&b));
        Ok(())
    })
}

// ---------------------------------------------------------------- guards

fn two_car_frame(a: [f64; 2], b: [f64; 2]) -> Frame {
    let st = |p: [f64; 2]| ObjectState {
        pos: [p[0], p[1], 0.0],
        heading: 0.0,
        lane: None,
        behaviors: BTreeSet::from(["FollowLane".to_string()]),
    };
    Frame {
        t: 0,
        objs: BTreeMap::from([("a".to_string(), st(a)), ("b".to_string(), st(b))]),
    }
}

fn ego_car1() -> Correspondence {
    Correspondence::new(vec![("ego".into(), "a".into()), ("car1".into(), "b".into())])
}

fn range_text(lo: f64, w: f64) -> String {
    format!("Range({lo:?}, {:?})", lo + w)
}

/// Guards with at most two single-occurrence unobserved variables.
fn guard_shape(k: u8, r1: (f64, f64), r2: (f64, f64), c: f64) -> String {
    let d = "(distance from ego to car1)";
    let (a, b) = (range_text(r1.0, r1.1), range_text(r2.0, r2.1));
    match k % 8 {
        0 => format!("{d} < {a}"),
        1 => format!("{d} > {a}"),
        2 => format!("({d} + {a}) < {c:?}"),
        3 => format!("({d} * {a}) > {c:?}"),
        4 => format!("{d} < ({a} + {b})"),
        5 => format!("({d} < {a}) and ({d} > {b})"),
        6 => format!("(({d} - {a}) * {b}) > {c:?}"),
        _ => format!("not ({d} >= {a})"),
    }
}

fn support_grid(e: &Expr, per_var: usize) -> Vec<BTreeMap<u32, f64>> {
    let mut grid = vec![BTreeMap::new()];
    for d in e.dist_refs() {
        let (lo, hi) = match d.kind {
            dsl::DistKind::Range { low, high } => (low, high),
            _ => unreachable!("only ranges are generated"),
        };
        let pts: Vec<f64> = (0..per_var)
            .map(|k| lo + (hi - lo) * k as f64 / (per_var - 1) as f64)
            .collect();
        grid = grid
            .into_iter()
            .flat_map(|g| {
                pts.iter().map(move |p| {
                    let mut g = g.clone();
                    g.insert(d.id, *p);
                    g
                })
            })
            .collect();
    }
    grid
}

fn grid_outcomes(e: &Expr, ctx: &EvalContext, per_var_for: fn(usize) -> usize) -> (bool, bool) {
    let n = e.dist_refs().len();
    let (mut t, mut f) = (false, false);
    for vals in support_grid(e, per_var_for(n)) {
        if eval_concrete(e, ctx, &vals).unwrap() {
            t = true;
        } else {
            f = true;
        }
        if t && f {
            break;
        }
    }
    (t, f)
}

pub fn guard_sat_agrees_with_dense_sampling(cases: u32) -> Result<(), String> {
    run(
        cases,
        (
            0u8..8,
            prop::array::uniform2(-30.0..30.0f64),
            prop::array::uniform2(-30.0..30.0f64),
            (-10.0..30.0f64, 0.1..20.0f64),
            (-10.0..30.0f64, 0.1..20.0f64),
            -50.0..200.0f64,
        ),
        |(k, a, b, r1, r2, c)| {
            let e = dsl::parse_expr(&guard_shape(k, r1, r2, c)).unwrap();
            let frame = two_car_frame(a, b);
            let corr = ego_car1();
            let cones = BTreeMap::<String, ConeParams>::new();
            let map = squery::world::RoadMap::default();
            let ctx = EvalContext {
                map: &map,
                frame: &frame,
                corr: &corr,
                cones: &cones,
                ego: "ego",
            };
            let ts = guard_sat(&e, &ctx).unwrap();
            // 10^4 support points in total.
            let (mut t, mut f) = grid_outcomes(&e, &ctx, |n| if n == 1 { 10_000 } else { 100 });
            if (t, f) != (ts.can_true, ts.can_false) {
                // A satisfying sliver narrower than the grid step; refine before judging.
                let fine = grid_outcomes(&e, &ctx, |n| if n == 1 { 1_000_000 } else { 1_000 });
                t |= fine.0;
                f |= fine.1;
            }
            prop_assert_eq!((ts.can_true, ts.can_false), (t, f), "{}", guard_shape(k, r1, r2, c));
            Ok(())
        },
    )
}

pub fn widening_support_preserves_satisfiability(cases: u32) -> Result<(), String> {
    run(
        cases,
        (
            0u8..8,
            prop::array::uniform2(-30.0..30.0f64),
            prop::array::uniform2(-30.0..30.0f64),
            (-10.0..30.0f64, 0.1..20.0f64),
            (-10.0..30.0f64, 0.1..20.0f64),
            (0.0..10.0f64, 0.0..10.0f64),
            -50.0..200.0f64,
        ),
        |(k, a, b, r1, r2, grow, c)| {
            let narrow = dsl::parse_expr(&guard_shape(k, r1, r2, c)).unwrap();
            let wide_r1 = (r1.0 - grow.0, r1.1 + grow.0 + grow.1);
            let wide = dsl::parse_expr(&guard_shape(k, wide_r1, r2, c)).unwrap();
            let frame = two_car_frame(a, b);
            let corr = ego_car1();
            let cones = BTreeMap::new();
            let map = squery::world::RoadMap::default();
            let ctx = EvalContext {
                map: &map,
                frame: &frame,
                corr: &corr,
                cones: &cones,
                ego: "ego",
            };
            let n = guard_sat(&narrow, &ctx).unwrap();
            let w = guard_sat(&wide, &ctx).unwrap();
            prop_assert!(!n.can_true || w.can_true);
            prop_assert!(!n.can_false || w.can_false);
            Ok(())
        },
    )
}

pub fn observed_guards_are_exact(cases: u32) -> Result<(), String> {
    run(
        cases,
        (
            prop::array::uniform2(-30.0..30.0f64),
            prop::array::uniform2(-30.0..30.0f64),
            0.0..60.0f64,
            0u8..3,
        ),
        |(a, b, c, k)| {
            let src = match k {
                0 => format!("(distance from ego to car1) < {c:?}"),
                1 => format!("((distance from ego to car1) > {c:?}) or (ego can see car1)"),
                _ => format!("not ((distance from car1 to ego) <= {c:?})"),
            };
            let e = dsl::parse_expr(&src).unwrap();
            let frame = two_car_frame(a, b);
            let corr = ego_car1();
            let cones = BTreeMap::new();
            let map = squery::world::RoadMap::default();
            let ctx = EvalContext {
                map: &map,
                frame: &frame,
                corr: &corr,
                cones: &cones,
                ego: "ego",
            };
            let ts = guard_sat(&e, &ctx).unwrap();
            prop_assert!(ts.can_true != ts.can_false);
            Ok(())
        },
    )
}

// ---------------------------------------------------------------- engine

pub fn pruned_states_carry_observed_labels(cases: u32) -> Result<(), String> {
    run(cases, any::<u64>(), |seed| {
        let inst = random_instance(seed);
        let map = small_map();
        let env = inst.program.env(&map);
        let trace = &inst.trace;
        for corr in CandidateEnumerator::new(&inst.program.ast, trace, 1) {
            let ids: Vec<&str> = corr.pairs().iter().map(|(_, id)| id.as_str()).collect();
            let present = |f: &Frame| ids.iter().all(|id| f.objs.contains_key(*id));
            let Some(start) = trace.frames.iter().position(present) else {
                continue;
            };
            let Ok(mut states) = initial_step(&inst.program.bundle, &trace.frames[start], &corr, &env) else {
                continue;
            };
            let mut j = start;
            loop {
                for h in &inst.program.bundle.machines {
                    let id = corr.get(&h.object).unwrap();
                    let observed = &trace.frames[j].objs[id].behaviors;
                    for s in &states[&h.object] {
                        prop_assert!(h.label(*s).unwrap().admits(observed));
                    }
                }
                j += 1;
                if any_empty(&states) || j >= trace.len() || !present(&trace.frames[j]) {
                    break;
                }
                match valid_step(&states, &inst.program.bundle, &trace.frames[j], &corr, &env) {
                    Ok(next) => {
                        // Frame-local: stepping twice from the same configuration agrees.
                        let again = valid_step(&states, &inst.program.bundle, &trace.frames[j], &corr, &env).unwrap();
                        prop_assert_eq!(&next, &again);
                        states = next;
                    }
                    Err(_) => break,
                }
            }
        }
        Ok(())
    })
}

// ---------------------------------------------------------------- query

pub fn matches_persist_for_shorter_windows(cases: u32) -> Result<(), String> {
    run(cases, any::<u64>(), |seed| {
        let inst = random_instance(seed);
        let map = small_map();
        let r = query(&inst.program, &inst.trace, inst.m, &map, &QueryOptions::default()).unwrap();
        if let Some(w) = r.witness {
            for m2 in 1..inst.m {
                prop_assert!(match_window(
                    &inst.program,
                    &inst.trace,
                    &w.correspondence,
                    w.window_start,
                    m2,
                    &map
                ));
                prop_assert!(
                    query(&inst.program, &inst.trace, m2, &map, &QueryOptions::default())
                        .unwrap()
                        .matched
                );
            }
        }
        Ok(())
    })
}

pub fn verdict_ignores_object_order(cases: u32) -> Result<(), String> {
    run(cases, any::<u64>(), |seed| {
        let inst = random_instance(seed);
        let map = small_map();
        let mut shuffled = inst.trace.clone();
        shuffled.objects.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let a = query(&inst.program, &inst.trace, inst.m, &map, &QueryOptions::default()).unwrap();
        let b = query(&inst.program, &shuffled, inst.m, &map, &QueryOptions::default()).unwrap();
        prop_assert_eq!(a.matched, b.matched);
        Ok(())
    })
}

pub fn failed_queries_check_every_window(cases: u32) -> Result<(), String> {
    run(cases, any::<u64>(), |seed| {
        let inst = random_instance(seed);
        let map = small_map();
        let r = query(&inst.program, &inst.trace, inst.m, &map, &QueryOptions::default()).unwrap();
        let cands: Vec<Correspondence> = CandidateEnumerator::new(&inst.program.ast, &inst.trace, inst.m).collect();
        let windows = (inst.trace.len() - inst.m + 1) as u64;
        if !r.matched {
            prop_assert_eq!(r.stats.correspondences_tried, cands.len() as u64);
            prop_assert_eq!(r.stats.windows_checked, cands.len() as u64 * windows);
            for c in &cands {
                for i in 0..windows as usize {
                    prop_assert!(!match_window(&inst.program, &inst.trace, c, i, inst.m, &map));
                }
            }
        } else {
            prop_assert!(r.stats.windows_checked <= cands.len() as u64 * windows);
        }
        Ok(())
    })
}

// ---------------------------------------------------------------- trace

pub fn trace_json_round_trip(cases: u32) -> Result<(), String> {
    run(cases, any::<u64>(), |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_trace(&mut rng, &small_map(), 12);
        let again = LabelTrace::from_json_str(&t.to_json_string()).unwrap();
        prop_assert_eq!(t.objects, again.objects.clone());
        prop_assert_eq!(t.frames.len(), again.frames.len());
        for (f, g) in t.frames.iter().zip(&again.frames) {
            prop_assert_eq!(f.t, g.t);
            prop_assert_eq!(f.objs.keys().collect::<Vec<_>>(), g.objs.keys().collect::<Vec<_>>());
            for (id, o) in &f.objs {
                let p = &g.objs[id];
                for k in 0..3 {
                    prop_assert!((o.pos[k] - p.pos[k]).abs() <= 1e-9);
                }
                prop_assert!((o.heading - p.heading).abs() <= 1e-9);
                prop_assert_eq!(&o.lane, &p.lane);
                prop_assert_eq!(&o.behaviors, &p.behaviors);
            }
        }
        Ok(())
    })
}

// ---------------------------------------------------------------- synth

pub fn generated_traces_match_their_program(cases: u32) -> Result<(), String> {
    run(cases, (any::<u64>(), 1usize..=60), |(seed, length)| {
        let p = two_car();
        let map = squery::synth::default_map();
        let trace = generate_trace(&p.ast, &map, &SynthConfig::new(seed, length)).unwrap();
        prop_assert_eq!(trace.len(), length);
        let r = query(&p, &trace, (length / 2).max(1), &map, &QueryOptions::default()).unwrap();
        prop_assert!(r.matched);
        Ok(())
    })
}

pub fn generation_is_deterministic(cases: u32) -> Result<(), String> {
    run(
        cases,
        (any::<u64>(), 1usize..=40, any::<bool>()),
        |(seed, length, shuffle)| {
            let p = two_car();
            let map = squery::synth::default_map();
            let cfg = SynthConfig {
                shuffle_ids: shuffle,
                ..SynthConfig::new(seed, length)
            };
            let a = generate_trace(&p.ast, &map, &cfg).unwrap();
            let b = generate_trace(&p.ast, &map, &cfg).unwrap();
            prop_assert_eq!(a.to_json_string(), b.to_json_string());
            Ok(())
        },
    )
}

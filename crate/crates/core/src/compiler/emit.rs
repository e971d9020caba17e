//! Serialized forms of compiled machines.

use std::fmt::Write;

use super::{Hfsm, HfsmBundle, StateKind, Trigger};
use crate::dsl::pretty;

pub fn to_json(bundle: &HfsmBundle) -> String {
    serde_json::to_string_pretty(bundle).expect("machines serialize")
}

fn node(h: &Hfsm, k: usize) -> String {
    format!("\"{}_{}\"", h.object, k)
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz rendering; composite states become clusters.
pub fn to_dot(bundle: &HfsmBundle) -> String {
    let mut out = String::from("digraph hfsm {\n  compound=true;\n  node [shape=box];\n");
    for h in &bundle.machines {
        let _ = writeln!(
            out,
            "  subgraph \"cluster_{}\" {{\n    label=\"{}\";",
            h.object,
            escape(&h.object)
        );
        write_machine(&mut out, h, h.root, 2);
        out.push_str("  }\n");
        for m in &h.machines {
            for t in &m.transitions {
                let label = match t.trigger {
                    Trigger::Guard { guard, positive } => {
                        let g = pretty::expr(&h.guards[guard.0 as usize].expr);
                        if positive {
                            g
                        } else {
                            format!("not ({g})")
                        }
                    }
                    Trigger::ChildTerminated => "done".to_string(),
                };
                let _ = writeln!(
                    out,
                    "  {} -> {} [label=\"{}\"];",
                    node(h, t.from.0 as usize),
                    node(h, t.to.0 as usize),
                    escape(&label)
                );
            }
        }
    }
    out.push_str("}\n");
    out
}

fn write_machine(out: &mut String, h: &Hfsm, m: super::MachineId, depth: usize) {
    let pad = "  ".repeat(depth);
    let mach = h.machine(m);
    for s in &mach.states {
        let st = h.state(*s);
        match &st.kind {
            StateKind::Composite(child) => {
                let _ = writeln!(out, "{pad}subgraph \"cluster_{}_{}\" {{", h.object, s.0);
                let _ = writeln!(out, "{pad}  label=\"{}\";", escape(&st.name));
                let _ = writeln!(out, "{pad}  {} [shape=point];", node(h, s.0 as usize));
                write_machine(out, h, *child, depth + 1);
                let _ = writeln!(out, "{pad}}}");
            }
            StateKind::Base(l) => {
                let style = if *s == mach.initial { ", style=bold" } else { "" };
                let _ = writeln!(
                    out,
                    "{pad}{} [label=\"{}\"{style}];",
                    node(h, s.0 as usize),
                    escape(&l.to_string())
                );
            }
            StateKind::Terminal => {
                let _ = writeln!(out, "{pad}{} [label=\"T\", shape=doublecircle];", node(h, s.0 as usize));
            }
        }
    }
}

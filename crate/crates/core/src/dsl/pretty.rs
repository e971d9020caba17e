//! Canonical source rendering. Output re-parses to a structurally equal AST.

use std::fmt::Write;

use super::ast::*;

pub fn program(ast: &ScenarioAst) -> String {
    let mut out = String::new();
    for def in ast.behaviors.values() {
        let _ = writeln!(out, "behavior {}():", def.name);
        stmt(&mut out, &def.body, 1);
        out.push('\n');
    }
    for obj in &ast.objects {
        out.push_str(&object(obj));
        out.push('\n');
    }
    for req in &ast.requires {
        let _ = writeln!(out, "require {}", expr(&req.condition));
    }
    out
}

pub fn object(obj: &ObjectDecl) -> String {
    let mut parts: Vec<String> = obj.specifiers.iter().map(specifier).collect();
    if let Some(b) = &obj.behavior {
        parts.push(format!("with behavior {b}"));
    }
    for (k, v) in &obj.properties {
        parts.push(format!("with {k} {}", expr(v)));
    }
    let head = if obj.named {
        format!("{} = new {}", obj.name, obj.class)
    } else {
        format!("new {}", obj.class)
    };
    if parts.is_empty() {
        head
    } else {
        format!("{head} {}", parts.join(", "))
    }
}

pub fn specifier(s: &Specifier) -> String {
    let opt = |kw: &str, e: &Option<Expr>| e.as_ref().map(|e| format!(" {kw} {}", expr(e))).unwrap_or_default();
    match s {
        Specifier::At(e) => format!("at {}", expr(e)),
        Specifier::In(e) => format!("in {}", expr(e)),
        Specifier::On(e) => format!("on {}", expr(e)),
        Specifier::OffsetBy(e) => format!("offset by {}", expr(e)),
        Specifier::OffsetAlong { direction, offset } => {
            format!("offset along {} by {}", expr(direction), expr(offset))
        }
        Specifier::Beyond { target, offset, from } => {
            format!("beyond {} by {}{}", expr(target), expr(offset), opt("from", from))
        }
        Specifier::VisibleFrom(from) => format!("visible{}", opt("from", from)),
        Specifier::AheadOf { target, by } => format!("ahead of {}{}", expr(target), opt("by", by)),
        Specifier::Behind { target, by } => format!("behind {}{}", expr(target), opt("by", by)),
        Specifier::Following { field, from, distance } => {
            format!("following {}{} for {}", expr(field), opt("from", from), expr(distance))
        }
        Specifier::Facing(e) => format!("facing {}", expr(e)),
        Specifier::FacingToward(e) => format!("facing toward {}", expr(e)),
        Specifier::FacingAwayFrom(e) => format!("facing away from {}", expr(e)),
        Specifier::ApparentlyFacing { heading, from } => {
            format!("apparently facing {}{}", expr(heading), opt("from", from))
        }
    }
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("    ");
    }
}

pub fn stmt(out: &mut String, s: &Stmt, level: usize) {
    match s {
        Stmt::Do { behavior, until, .. } => {
            indent(out, level);
            match until {
                Some(c) => {
                    let _ = writeln!(out, "do {behavior} until {}", expr(c));
                }
                None => {
                    let _ = writeln!(out, "do {behavior}");
                }
            }
        }
        Stmt::Seq(items) => items.iter().for_each(|i| stmt(out, i, level)),
        Stmt::TryInterrupt {
            body,
            condition,
            handler,
            ..
        } => {
            indent(out, level);
            out.push_str("try:\n");
            stmt(out, body, level + 1);
            indent(out, level);
            let _ = writeln!(out, "interrupt when {}:", expr(condition));
            stmt(out, handler, level + 1);
        }
        Stmt::Assign { target, value, .. } => {
            indent(out, level);
            let _ = writeln!(out, "{target} = {}", expr(value));
        }
        Stmt::Unsupported { construct, .. } => {
            indent(out, level);
            let _ = writeln!(out, "{construct}");
        }
    }
}

fn number(n: f64) -> String {
    format!("{n:?}")
}

/// Atomic expressions print bare; everything else is parenthesized.
fn atom(e: &Expr) -> String {
    match e {
        Expr::Number(n) if *n < 0.0 || (*n == 0.0 && n.is_sign_negative()) => format!("({})", number(*n)),
        Expr::Number(_) | Expr::Bool(_) | Expr::Name(_) | Expr::Attr(..) | Expr::Dist(_) | Expr::Vector(_) => expr(e),
        _ => format!("({})", expr(e)),
    }
}

pub fn expr(e: &Expr) -> String {
    let from = |f: &Option<Box<Expr>>| f.as_ref().map(|f| format!(" from {}", atom(f))).unwrap_or_default();
    match e {
        Expr::Number(n) => number(*n),
        Expr::Bool(b) => if *b { "True" } else { "False" }.to_string(),
        Expr::Name(n) => n.clone(),
        Expr::Attr(base, attr) => format!("{}.{attr}", atom(base)),
        Expr::Vector(items) => {
            let parts: Vec<String> = items.iter().map(expr).collect();
            format!("({})", parts.join(", "))
        }
        Expr::Dist(d) => {
            let params: Vec<String> = d.kind.params().into_iter().map(number).collect();
            format!("{}({})", d.kind.name(), params.join(", "))
        }
        Expr::Unary(UnaryOp::Neg, inner) => format!("-{}", atom(inner)),
        Expr::Unary(UnaryOp::Not, inner) => format!("not {}", atom(inner)),
        Expr::Binary(op, a, b) => format!("{} {} {}", atom(a), op.symbol(), atom(b)),
        Expr::Deg(inner) => format!("{} deg", atom(inner)),
        Expr::RelativeTo(a, b) => format!("{} relative to {}", atom(a), atom(b)),
        Expr::RelativeHeading { of, from: f } => format!("relative heading of {}{}", atom(of), from(f)),
        Expr::ApparentHeading { of, from: f } => format!("apparent heading of {}{}", atom(of), from(f)),
        Expr::Distance { from: f, to } => format!("distance{} to {}", from(f), atom(to)),
        Expr::Angle { from: f, to } => format!("angle{} to {}", from(f), atom(to)),
        Expr::CanSee(a, b) => format!("{} can see {}", atom(a), atom(b)),
        Expr::In(a, b) => format!("{} in {}", atom(a), atom(b)),
        Expr::OffsetBy(a, b) => format!("{} offset by {}", atom(a), atom(b)),
        Expr::OffsetAlong {
            base,
            direction,
            offset,
        } => {
            format!("{} offset along {} by {}", atom(base), atom(direction), atom(offset))
        }
        Expr::Visible {
            region,
            from: None,
            negated,
        } => {
            format!("{}visible {}", if *negated { "not " } else { "" }, atom(region))
        }
        Expr::Visible {
            region,
            from: Some(f),
            negated,
        } => format!(
            "{} {}visible from {}",
            atom(region),
            if *negated { "not " } else { "" },
            atom(f)
        ),
    }
}

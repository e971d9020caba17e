use serde::Serialize;

use super::ast::*;

/// A construct outside the supported scenario fragment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub construct: String,
    pub span: Span,
}

/// Report every out-of-fragment construct, in source order.
pub fn fragment_check(ast: &ScenarioAst) -> Vec<Violation> {
    let mut out: Vec<Violation> = ast
        .unsupported
        .iter()
        .map(|u| Violation {
            construct: u.construct.clone(),
            span: u.span,
        })
        .collect();
    for def in ast.behaviors.values() {
        def.body.walk(&mut |s| match s {
            Stmt::Assign { target, span, .. } => out.push(Violation {
                construct: format!("variable assignment '{target}' in behavior '{}'", def.name),
                span: *span,
            }),
            Stmt::Unsupported { construct, span } => out.push(Violation {
                construct: format!("statement '{construct}' in behavior '{}'", def.name),
                span: *span,
            }),
            _ => {}
        });
    }
    out.sort_by_key(|v| (v.span.line, v.span.col));
    out
}

#[cfg(test)]
mod tests {
    use super::super::{parse, parse_unchecked};
    use super::*;

    #[test]
    fn in_fragment_program_has_no_violations() {
        let ast = parse(super::super::tests::TWO_CAR).unwrap();
        assert!(fragment_check(&ast).is_empty());
    }

    #[test]
    fn record_statement_is_one_violation() {
        let src = format!("{}record ego.position as egoPos\n", super::super::tests::TWO_CAR);
        let ast = parse_unchecked(&src).unwrap();
        let v = fragment_check(&ast);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].construct, "record");
        assert_eq!(v[0].span.line, 9);
    }

    #[test]
    fn violations_inside_behaviors_are_located() {
        let src = "behavior B():\n    do FollowLane\n    take SetThrottleAction(1)\n    wait\nego = new Car with behavior B\n";
        let ast = parse_unchecked(src).unwrap();
        let v = fragment_check(&ast);
        assert_eq!(v.len(), 2);
        assert_eq!((v[0].span.line, v[1].span.line), (3, 4));
        assert!(v[0].construct.contains("take"));
    }
}

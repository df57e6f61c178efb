use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::domain::typed_list;
use super::sexpr::{self, Pos, Sexpr};
use super::{fluent_from_sexpr, Domain, Fluent, Literal, LiteralSet, PddlError, Problem};
use crate::time::Millis;

/// Parses a problem against an already parsed domain. Every literal in the
/// initial state and goal is checked against declared predicates, objects
/// and types.
pub fn parse_problem(text: &str, domain: &Domain) -> Result<Problem, PddlError> {
    let top = sexpr::parse_one(text)?;
    let items = top.expect_list("(define ...)")?;
    if items.first().and_then(Sexpr::as_atom) != Some("define") {
        return Err(PddlError::syntax(top.pos(), "expected (define ...)".into()));
    }
    let header = items
        .get(1)
        .ok_or_else(|| PddlError::syntax(top.pos(), "missing (problem NAME)".into()))?;
    let name = match header.as_list() {
        Some([kw, n]) if kw.as_atom() == Some("problem") => n.expect_atom("problem name")?.to_string(),
        _ => return Err(PddlError::syntax(header.pos(), "expected (problem NAME)".into())),
    };

    let mut problem = Problem {
        name,
        objects: domain.constants.clone(),
        ..Problem::default()
    };
    let mut init_expr = None;
    let mut goal_expr = None;
    for section in &items[2..] {
        let body = section.expect_list("problem section")?;
        match section.head().unwrap_or_default() {
            ":domain" => {
                let d = body
                    .get(1)
                    .ok_or_else(|| PddlError::syntax(section.pos(), "missing domain name".into()))?
                    .expect_atom("domain name")?;
                if d != domain.name {
                    return Err(PddlError::syntax(
                        section.pos(),
                        format!("problem is for domain `{d}`, not `{}`", domain.name),
                    ));
                }
                problem.domain = d.to_string();
            }
            ":objects" => {
                for (o, ty, pos) in typed_list(&body[1..])? {
                    if !domain.types.is_declared(&ty) {
                        return Err(PddlError::UndeclaredType { pos, name: ty });
                    }
                    problem.objects.insert(o, ty);
                }
            }
            ":init" => init_expr = Some(section),
            ":goal" => goal_expr = Some(section),
            ":metric" => {}
            ":constraints" => return Err(PddlError::unsupported(section.pos(), "state trajectory constraints")),
            other => {
                return Err(PddlError::syntax(
                    section.pos(),
                    format!("unknown problem section `{other}`"),
                ))
            }
        }
    }

    if let Some(init) = init_expr {
        for fact in &init.as_list().unwrap_or_default()[1..] {
            match fact.head() {
                Some("not") => {
                    return Err(PddlError::syntax(
                        fact.pos(),
                        "negative literal in :init (closed world)".into(),
                    ))
                }
                Some("=") => return Err(PddlError::unsupported(fact.pos(), "numeric fluents (:init assignment)")),
                Some("at") if is_timed_literal(fact) => {
                    return Err(PddlError::unsupported(fact.pos(), "timed initial literals"))
                }
                _ => {}
            }
            let f = fluent_from_sexpr(fact)?;
            check_ground(domain, &problem.objects, &f, fact)?;
            problem.init.insert(f);
        }
    }

    if let Some(goal) = goal_expr {
        let body = goal.as_list().unwrap_or_default();
        let mut lits = Vec::new();
        for g in &body[1..] {
            collect_goal(domain, &problem.objects, g, &mut lits)?;
        }
        problem.goal = LiteralSet::try_from_literals(lits).map_err(|f| PddlError::Contradiction {
            pos: goal.pos(),
            fluent: f.to_string(),
        })?;
    }
    Ok(problem)
}

fn is_timed_literal(expr: &Sexpr) -> bool {
    matches!(expr.as_list(), Some([_, t, l])
        if t.as_atom().is_some_and(|s| Millis::parse_secs(s).is_some()) && l.as_list().is_some())
}

fn collect_goal(
    domain: &Domain,
    objects: &BTreeMap<String, String>,
    expr: &Sexpr,
    out: &mut Vec<Literal>,
) -> Result<(), PddlError> {
    let items = expr.expect_list("goal condition")?;
    match expr.head() {
        None if items.is_empty() => Ok(()),
        Some("and") => {
            for c in &items[1..] {
                collect_goal(domain, objects, c, out)?;
            }
            Ok(())
        }
        Some("or") | Some("imply") => Err(PddlError::unsupported(expr.pos(), "disjunctive conditions")),
        Some("exists") | Some("forall") => Err(PddlError::unsupported(expr.pos(), "quantified goals")),
        Some(">=") | Some("<=") | Some("<") | Some(">") | Some("=") => {
            Err(PddlError::unsupported(expr.pos(), "numeric fluents (comparison)"))
        }
        Some("preference") => Err(PddlError::unsupported(expr.pos(), "preferences")),
        Some("not") => {
            let inner = match items {
                [_, inner] => inner,
                _ => return Err(PddlError::syntax(expr.pos(), "malformed (not ...)".into())),
            };
            let f = fluent_from_sexpr(inner)?;
            check_ground(domain, objects, &f, inner)?;
            out.push(Literal::neg(f));
            Ok(())
        }
        _ => {
            let f = fluent_from_sexpr(expr)?;
            check_ground(domain, objects, &f, expr)?;
            out.push(Literal::pos(f));
            Ok(())
        }
    }
}

fn check_ground(
    domain: &Domain,
    objects: &BTreeMap<String, String>,
    fluent: &Fluent,
    expr: &Sexpr,
) -> Result<(), PddlError> {
    let arg_pos = |i: usize| -> Pos { expr.as_list().and_then(|l| l.get(i + 1)).map_or(expr.pos(), Sexpr::pos) };
    let arg_types = domain
        .predicates
        .get(&fluent.name)
        .ok_or_else(|| PddlError::UndeclaredPredicate {
            pos: expr.pos(),
            name: fluent.name.clone(),
        })?;
    if arg_types.len() != fluent.args.len() {
        return Err(PddlError::Arity {
            pos: expr.pos(),
            name: fluent.name.clone(),
            got: fluent.args.len(),
            expected: arg_types.len(),
        });
    }
    for (i, (arg, expected)) in fluent.args.iter().zip(arg_types).enumerate() {
        let actual = objects.get(arg).ok_or_else(|| PddlError::UndeclaredObject {
            pos: arg_pos(i),
            name: arg.clone(),
        })?;
        if !domain.types.is_subtype(actual, expected) {
            return Err(PddlError::TypeMismatch {
                pos: arg_pos(i),
                object: arg.clone(),
                actual: actual.clone(),
                expected: expected.clone(),
            });
        }
    }
    Ok(())
}

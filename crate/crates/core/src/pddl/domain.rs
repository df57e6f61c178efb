use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::sexpr::{self, Pos, Sexpr};
use super::{Domain, DurativeActionSchema, LiftedLiteral, PddlError, Term, TypeTable, TypedParam};
use crate::time::Millis;

const UNSUPPORTED_REQUIREMENTS: &[(&str, &str)] = &[
    (":fluents", "numeric fluents (:fluents)"),
    (":numeric-fluents", "numeric fluents (:numeric-fluents)"),
    (":object-fluents", "object fluents (:object-fluents)"),
    (":conditional-effects", "conditional effects (:conditional-effects)"),
    (
        ":timed-initial-literals",
        "timed initial literals (:timed-initial-literals)",
    ),
    (":continuous-effects", "continuous effects (:continuous-effects)"),
    (":time", "PDDL+ processes (:time)"),
    (":derived-predicates", "derived predicates (:derived-predicates)"),
];

/// Parses a PDDL 2.1 domain restricted to STRIPS literals, typing and
/// durative actions.
pub fn parse_domain(text: &str) -> Result<Domain, PddlError> {
    let top = sexpr::parse_one(text)?;
    let items = top.expect_list("(define ...)")?;
    if items.first().and_then(Sexpr::as_atom) != Some("define") {
        return Err(PddlError::syntax(top.pos(), "expected (define ...)".into()));
    }
    let header = items
        .get(1)
        .ok_or_else(|| PddlError::syntax(top.pos(), "missing (domain NAME)".into()))?;
    let name = match header.as_list() {
        Some([kw, n]) if kw.as_atom() == Some("domain") => n.expect_atom("domain name")?.to_string(),
        _ => return Err(PddlError::syntax(header.pos(), "expected (domain NAME)".into())),
    };

    let mut domain = Domain {
        name,
        ..Domain::default()
    };
    let mut action_exprs = Vec::new();
    for section in &items[2..] {
        let body = section.expect_list("domain section")?;
        let key = section
            .head()
            .ok_or_else(|| PddlError::syntax(section.pos(), "expected section keyword".into()))?;
        match key {
            ":requirements" => {
                for r in &body[1..] {
                    let req = r.expect_atom("requirement")?;
                    if let Some((_, feature)) = UNSUPPORTED_REQUIREMENTS.iter().find(|(k, _)| *k == req) {
                        return Err(PddlError::unsupported(r.pos(), feature));
                    }
                    domain.requirements.push(req.to_string());
                }
            }
            ":types" => {
                for (t, parent, _) in typed_list(&body[1..])? {
                    if t != "object" {
                        domain.types.parents.insert(t, parent);
                    }
                }
                // parents that were never declared themselves hang off `object`
                let parents: Vec<String> = domain.types.parents.values().cloned().collect();
                for p in parents {
                    if p != "object" && !domain.types.parents.contains_key(&p) {
                        domain.types.parents.insert(p, "object".into());
                    }
                }
            }
            ":constants" => {
                for (c, ty, pos) in typed_list(&body[1..])? {
                    check_type(&domain.types, &ty, pos)?;
                    domain.constants.insert(c, ty);
                }
            }
            ":predicates" => {
                for p in &body[1..] {
                    let decl = p.expect_list("predicate declaration")?;
                    let (head, rest) = decl
                        .split_first()
                        .ok_or_else(|| PddlError::syntax(p.pos(), "empty predicate".into()))?;
                    let pname = head.expect_atom("predicate name")?.to_string();
                    let mut arg_types = Vec::new();
                    for (v, ty, pos) in typed_list(rest)? {
                        if !v.starts_with('?') {
                            return Err(PddlError::syntax(pos, format!("expected variable, got `{v}`")));
                        }
                        check_type(&domain.types, &ty, pos)?;
                        arg_types.push(ty);
                    }
                    domain.predicates.insert(pname, arg_types);
                }
            }
            ":functions" => return Err(PddlError::unsupported(section.pos(), "numeric fluents (:functions)")),
            ":durative-action" => action_exprs.push(section),
            ":action" => return Err(PddlError::unsupported(section.pos(), "instantaneous actions (:action)")),
            ":derived" => return Err(PddlError::unsupported(section.pos(), "derived predicates (:derived)")),
            ":process" | ":event" => return Err(PddlError::unsupported(section.pos(), "PDDL+ processes and events")),
            ":constraints" => return Err(PddlError::unsupported(section.pos(), "state trajectory constraints")),
            other => {
                return Err(PddlError::syntax(
                    section.pos(),
                    format!("unknown domain section `{other}`"),
                ))
            }
        }
    }
    for a in action_exprs {
        let schema = parse_action(&domain, a)?;
        if domain.action(&schema.name).is_some() {
            return Err(PddlError::syntax(
                a.pos(),
                format!("duplicate action `{}`", schema.name),
            ));
        }
        domain.actions.push(schema);
    }
    Ok(domain)
}

fn check_type(types: &TypeTable, ty: &str, pos: Pos) -> Result<(), PddlError> {
    if types.is_declared(ty) {
        Ok(())
    } else {
        Err(PddlError::UndeclaredType {
            pos,
            name: ty.to_string(),
        })
    }
}

/// `a b - t c - u d` -> [(a, t), (b, t), (c, u), (d, object)].
pub(super) fn typed_list(items: &[Sexpr]) -> Result<Vec<(String, String, Pos)>, PddlError> {
    let mut out = Vec::new();
    let mut pending: Vec<(String, Pos)> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let item = &items[i];
        if let Some(list) = item.as_list() {
            if list.first().and_then(Sexpr::as_atom) == Some("either") {
                return Err(PddlError::unsupported(item.pos(), "either types"));
            }
            return Err(PddlError::syntax(item.pos(), "expected name in typed list".into()));
        }
        let sym = item.as_atom().unwrap_or_default();
        if sym == "-" {
            let ty = items
                .get(i + 1)
                .ok_or_else(|| PddlError::syntax(item.pos(), "missing type after '-'".into()))?;
            if ty.head() == Some("either") {
                return Err(PddlError::unsupported(ty.pos(), "either types"));
            }
            let ty = ty.expect_atom("type name")?.to_string();
            if pending.is_empty() {
                return Err(PddlError::syntax(item.pos(), "type without names".into()));
            }
            for (n, p) in pending.drain(..) {
                out.push((n, ty.clone(), p));
            }
            i += 2;
        } else {
            pending.push((sym.to_string(), item.pos()));
            i += 1;
        }
    }
    for (n, p) in pending {
        out.push((n, "object".into(), p));
    }
    Ok(out)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum When {
    Start,
    Overall,
    End,
}

fn parse_action(domain: &Domain, expr: &Sexpr) -> Result<DurativeActionSchema, PddlError> {
    let items = expr.expect_list("durative action")?;
    let name = items
        .get(1)
        .ok_or_else(|| PddlError::syntax(expr.pos(), "missing action name".into()))?
        .expect_atom("action name")?
        .to_string();

    let mut schema = DurativeActionSchema {
        name,
        params: Vec::new(),
        cond_start: Vec::new(),
        cond_overall: Vec::new(),
        cond_end: Vec::new(),
        eff_start: Vec::new(),
        eff_end: Vec::new(),
        duration_min: Millis::ZERO,
        duration_max: None,
    };
    let mut saw_duration = false;
    let mut i = 2;
    while i < items.len() {
        let key = items[i].expect_atom("action keyword")?;
        let value = items
            .get(i + 1)
            .ok_or_else(|| PddlError::syntax(items[i].pos(), format!("missing value for {key}")))?;
        match key {
            ":parameters" => {
                for (v, ty, pos) in typed_list(value.expect_list("parameter list")?)? {
                    let Some(var) = v.strip_prefix('?') else {
                        return Err(PddlError::syntax(pos, format!("expected variable, got `{v}`")));
                    };
                    check_type(&domain.types, &ty, pos)?;
                    schema.params.push(TypedParam {
                        name: var.to_string(),
                        ty,
                    });
                }
            }
            ":duration" => {
                let (lo, hi) = parse_duration(value)?;
                schema.duration_min = lo;
                schema.duration_max = hi;
                saw_duration = true;
            }
            ":condition" => parse_conditions(domain, &mut schema, value, None)?,
            ":effect" => parse_effects(domain, &mut schema, value, None)?,
            other => {
                return Err(PddlError::syntax(
                    items[i].pos(),
                    format!("unknown action keyword `{other}`"),
                ))
            }
        }
        i += 2;
    }
    if !saw_duration {
        return Err(PddlError::syntax(
            expr.pos(),
            format!("action `{}` has no :duration", schema.name),
        ));
    }
    for (set, pos) in [
        (&schema.cond_start, expr.pos()),
        (&schema.cond_overall, expr.pos()),
        (&schema.cond_end, expr.pos()),
        (&schema.eff_start, expr.pos()),
        (&schema.eff_end, expr.pos()),
    ] {
        if let Some(l) = set.iter().find(|l| {
            set.iter()
                .any(|o| o.predicate == l.predicate && o.terms == l.terms && o.positive != l.positive)
        }) {
            return Err(PddlError::Contradiction {
                pos,
                fluent: format!("{} in `{}`", l, schema.name),
            });
        }
    }
    Ok(schema)
}

fn parse_number(expr: &Sexpr) -> Result<Millis, PddlError> {
    match expr.as_atom() {
        Some(s) => Millis::parse_secs(s)
            .ok_or_else(|| PddlError::syntax(expr.pos(), format!("expected a duration, got `{s}`"))),
        None => Err(PddlError::unsupported(
            expr.pos(),
            "numeric fluents (duration expression)",
        )),
    }
}

fn parse_duration(expr: &Sexpr) -> Result<(Millis, Option<Millis>), PddlError> {
    let items = expr.expect_list("duration constraint")?;
    let head = expr.head().unwrap_or_default();
    if head == "and" {
        let mut lo = Millis::ZERO;
        let mut hi = None;
        for c in &items[1..] {
            let (l, h) = parse_duration(c)?;
            lo = lo.max(l);
            hi = match (hi, h) {
                (None, h) => h,
                (Some(a), Some(b)) => Some(core::cmp::min(a, b)),
                (a, None) => a,
            };
        }
        if let Some(h) = hi {
            if h < lo {
                return Err(PddlError::syntax(expr.pos(), "empty duration interval".into()));
            }
        }
        return Ok((lo, hi));
    }
    if items.len() != 3 || items[1].as_atom() != Some("?duration") {
        return Err(PddlError::syntax(expr.pos(), "expected (= ?duration N)".into()));
    }
    let n = parse_number(&items[2])?;
    match head {
        "=" => Ok((n, Some(n))),
        "<=" => Ok((Millis::ZERO, Some(n))),
        ">=" => Ok((n, None)),
        "<" | ">" => Err(PddlError::unsupported(expr.pos(), "strict duration inequalities")),
        other => Err(PddlError::syntax(
            expr.pos(),
            format!("unknown duration operator `{other}`"),
        )),
    }
}

fn is_timed(expr: &Sexpr) -> Option<(When, &Sexpr)> {
    let items = expr.as_list()?;
    if items.len() != 3 || items[2].as_list().is_none() {
        return None;
    }
    match (items[0].as_atom()?, items[1].as_atom()?) {
        ("at", "start") => Some((When::Start, &items[2])),
        ("at", "end") => Some((When::End, &items[2])),
        ("over", "all") => Some((When::Overall, &items[2])),
        _ => None,
    }
}

fn unsupported_head(expr: &Sexpr) -> Option<&'static str> {
    match expr.head()? {
        "or" | "imply" => Some("disjunctive conditions"),
        "exists" => Some("existential conditions"),
        "forall" => Some("universal quantification"),
        "when" => Some("conditional effects"),
        "increase" | "decrease" | "assign" | "scale-up" | "scale-down" => Some("numeric fluents (numeric effect)"),
        ">=" | "<=" | "<" | ">" => Some("numeric fluents (comparison)"),
        "=" => Some("equality constraints"),
        _ => None,
    }
}

fn parse_conditions(
    domain: &Domain,
    schema: &mut DurativeActionSchema,
    expr: &Sexpr,
    when: Option<When>,
) -> Result<(), PddlError> {
    let items = expr.expect_list("condition")?;
    if items.is_empty() {
        return Ok(());
    }
    if expr.head() == Some("and") {
        for c in &items[1..] {
            parse_conditions(domain, schema, c, when)?;
        }
        return Ok(());
    }
    if let Some(f) = unsupported_head(expr) {
        return Err(PddlError::unsupported(expr.pos(), f));
    }
    if let Some((w, inner)) = is_timed(expr) {
        if when.is_some() {
            return Err(PddlError::syntax(expr.pos(), "nested time specifier".into()));
        }
        return parse_conditions(domain, schema, inner, Some(w));
    }
    let Some(w) = when else {
        return Err(PddlError::syntax(
            expr.pos(),
            "condition must be wrapped in (at start ...), (over all ...) or (at end ...)".into(),
        ));
    };
    let lit = lifted_literal(domain, schema, expr)?;
    let target = match w {
        When::Start => &mut schema.cond_start,
        When::Overall => &mut schema.cond_overall,
        When::End => &mut schema.cond_end,
    };
    if !target.contains(&lit) {
        target.push(lit);
    }
    Ok(())
}

fn parse_effects(
    domain: &Domain,
    schema: &mut DurativeActionSchema,
    expr: &Sexpr,
    when: Option<When>,
) -> Result<(), PddlError> {
    let items = expr.expect_list("effect")?;
    if items.is_empty() {
        return Ok(());
    }
    if expr.head() == Some("and") {
        for c in &items[1..] {
            parse_effects(domain, schema, c, when)?;
        }
        return Ok(());
    }
    if let Some(f) = unsupported_head(expr) {
        return Err(PddlError::unsupported(expr.pos(), f));
    }
    if let Some((w, inner)) = is_timed(expr) {
        if when.is_some() {
            return Err(PddlError::syntax(expr.pos(), "nested time specifier".into()));
        }
        if w == When::Overall {
            return Err(PddlError::unsupported(
                expr.pos(),
                "continuous effects (over all effect)",
            ));
        }
        return parse_effects(domain, schema, inner, Some(w));
    }
    let lit = lifted_literal(domain, schema, expr)?;
    let target = match when {
        Some(When::Start) => &mut schema.eff_start,
        Some(When::End) => &mut schema.eff_end,
        _ => {
            return Err(PddlError::syntax(
                expr.pos(),
                "effect must be wrapped in (at start ...) or (at end ...)".into(),
            ))
        }
    };
    if !target.contains(&lit) {
        target.push(lit);
    }
    Ok(())
}

fn lifted_literal(domain: &Domain, schema: &DurativeActionSchema, expr: &Sexpr) -> Result<LiftedLiteral, PddlError> {
    let (atom, positive) = if expr.head() == Some("not") {
        match expr.as_list() {
            Some([_, inner]) => (inner, false),
            _ => return Err(PddlError::syntax(expr.pos(), "malformed (not ...)".into())),
        }
    } else {
        (expr, true)
    };
    if let Some(f) = unsupported_head(atom) {
        return Err(PddlError::unsupported(atom.pos(), f));
    }
    let items = atom.expect_list("atom")?;
    let (head, rest) = items
        .split_first()
        .ok_or_else(|| PddlError::syntax(atom.pos(), "empty atom".into()))?;
    let predicate = head.expect_atom("predicate name")?.to_string();
    let arg_types = domain
        .predicates
        .get(&predicate)
        .ok_or_else(|| PddlError::UndeclaredPredicate {
            pos: atom.pos(),
            name: predicate.clone(),
        })?;
    if arg_types.len() != rest.len() {
        return Err(PddlError::Arity {
            pos: atom.pos(),
            name: predicate,
            got: rest.len(),
            expected: arg_types.len(),
        });
    }
    let mut terms = Vec::with_capacity(rest.len());
    for (arg, expected) in rest.iter().zip(arg_types) {
        let sym = arg.expect_atom("term")?;
        let (term, actual) = if let Some(v) = sym.strip_prefix('?') {
            let ty = schema
                .params
                .iter()
                .find(|p| p.name == v)
                .map(|p| p.ty.as_str())
                .ok_or_else(|| PddlError::UnboundParameter {
                    pos: arg.pos(),
                    name: sym.to_string(),
                })?;
            (Term::Var(v.to_string()), ty.to_string())
        } else {
            let ty = domain.constants.get(sym).ok_or_else(|| PddlError::UndeclaredObject {
                pos: arg.pos(),
                name: sym.to_string(),
            })?;
            (Term::Const(sym.to_string()), ty.clone())
        };
        // a parameter of a supertype may still be bound to a valid object
        if !domain.types.is_subtype(&actual, expected) && !domain.types.is_subtype(expected, &actual) {
            return Err(PddlError::TypeMismatch {
                pos: arg.pos(),
                object: sym.to_string(),
                actual,
                expected: expected.clone(),
            });
        }
        terms.push(term);
    }
    Ok(LiftedLiteral {
        predicate,
        terms,
        positive,
    })
}

//! PDDL 2.1 subset: STRIPS literals, typing and durative actions, plus the
//! time-triggered plan format produced by temporal planners.

mod domain;
mod plan;
mod problem;
pub mod sexpr;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use domain::parse_domain;
pub use plan::parse_plan;
pub use problem::parse_problem;
pub use sexpr::Pos;

use crate::time::Millis;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PddlError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("unsupported feature `{feature}` at {pos}")]
    Unsupported { pos: Pos, feature: String },
    #[error("undeclared predicate `{name}` at {pos}")]
    UndeclaredPredicate { pos: Pos, name: String },
    #[error("undeclared object `{name}` at {pos}")]
    UndeclaredObject { pos: Pos, name: String },
    #[error("undeclared type `{name}` at {pos}")]
    UndeclaredType { pos: Pos, name: String },
    #[error("unbound parameter `{name}` at {pos}")]
    UnboundParameter { pos: Pos, name: String },
    #[error("type mismatch at {pos}: `{object}` is `{actual}`, expected `{expected}`")]
    TypeMismatch {
        pos: Pos,
        object: String,
        actual: String,
        expected: String,
    },
    #[error("wrong number of arguments for `{name}` at {pos}: got {got}, expected {expected}")]
    Arity {
        pos: Pos,
        name: String,
        got: usize,
        expected: usize,
    },
    #[error("contradictory literals on `{fluent}` at {pos}")]
    Contradiction { pos: Pos, fluent: String },
    #[error("unknown action `{name}` at {pos}")]
    UnknownAction { pos: Pos, name: String },
    #[error("duration {duration} of `{signature}` at {pos} is outside [{min}, {max}]")]
    DurationOutOfBounds {
        pos: Pos,
        signature: String,
        duration: String,
        min: String,
        max: String,
    },
    #[error("duplicate plan step `{signature}` at time {time} (line {pos})")]
    DuplicateStep { pos: Pos, signature: String, time: String },
}

impl PddlError {
    pub(crate) fn syntax(pos: Pos, msg: String) -> Self {
        PddlError::Syntax { pos, msg }
    }

    pub(crate) fn unsupported(pos: Pos, feature: &str) -> Self {
        PddlError::Unsupported {
            pos,
            feature: feature.into(),
        }
    }
}

/// A ground atom such as `(light match1)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Fluent {
    pub name: String,
    pub args: Vec<String>,
}

impl Fluent {
    pub fn new<S: Into<String>>(name: S, args: Vec<String>) -> Self {
        Fluent {
            name: name.into(),
            args,
        }
    }

    /// Parses a ground atom like `(light match1)`.
    pub fn parse(text: &str) -> Result<Fluent, PddlError> {
        let expr = sexpr::parse_one(text)?;
        fluent_from_sexpr(&expr)
    }
}

pub(crate) fn fluent_from_sexpr(expr: &sexpr::Sexpr) -> Result<Fluent, PddlError> {
    let items = expr.expect_list("atom")?;
    let (head, rest) = items
        .split_first()
        .ok_or_else(|| PddlError::syntax(expr.pos(), "empty atom".into()))?;
    let name = head.expect_atom("predicate name")?;
    let mut args = Vec::with_capacity(rest.len());
    for a in rest {
        args.push(String::from(a.expect_atom("object")?));
    }
    Ok(Fluent::new(name, args))
}

impl fmt::Display for Fluent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.name)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

/// A fluent or its negation.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub fluent: Fluent,
    pub positive: bool,
}

impl Literal {
    pub fn pos(fluent: Fluent) -> Self {
        Literal { fluent, positive: true }
    }

    pub fn neg(fluent: Fluent) -> Self {
        Literal {
            fluent,
            positive: false,
        }
    }

    pub fn negated(&self) -> Literal {
        Literal {
            fluent: self.fluent.clone(),
            positive: !self.positive,
        }
    }

    /// Parses `(p a b)` or `(not (p a b))`.
    pub fn parse(text: &str) -> Result<Literal, PddlError> {
        let expr = sexpr::parse_one(text)?;
        if expr.head() == Some("not") {
            let items = expr.as_list().unwrap_or_default();
            if items.len() != 2 {
                return Err(PddlError::syntax(expr.pos(), "malformed (not ...)".into()));
            }
            Ok(Literal::neg(fluent_from_sexpr(&items[1])?))
        } else {
            Ok(Literal::pos(fluent_from_sexpr(&expr)?))
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "{}", self.fluent)
        } else {
            write!(f, "(not {})", self.fluent)
        }
    }
}

/// A contradiction-free set of literals, used both for conditions and for
/// effects.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LiteralSet(BTreeSet<Literal>);

pub type ConditionSet = LiteralSet;
pub type EffectSet = LiteralSet;

impl LiteralSet {
    pub fn new() -> Self {
        LiteralSet(BTreeSet::new())
    }

    /// Builds a set, rejecting `p` together with `(not p)`. Returns the
    /// offending fluent on conflict.
    pub fn try_from_literals<I: IntoIterator<Item = Literal>>(lits: I) -> Result<Self, Fluent> {
        let mut set = BTreeSet::new();
        for lit in lits {
            if set.contains(&lit.negated()) {
                return Err(lit.fluent);
            }
            set.insert(lit);
        }
        Ok(LiteralSet(set))
    }

    pub fn insert(&mut self, lit: Literal) -> Result<(), Fluent> {
        if self.0.contains(&lit.negated()) {
            return Err(lit.fluent);
        }
        self.0.insert(lit);
        Ok(())
    }

    pub fn remove(&mut self, lit: &Literal) -> bool {
        self.0.remove(lit)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Literal> + '_ {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, lit: &Literal) -> bool {
        self.0.contains(lit)
    }

    /// Fluents mentioned by any literal, regardless of sign.
    pub fn fluents(&self) -> impl Iterator<Item = &Fluent> + '_ {
        self.0.iter().map(|l| &l.fluent)
    }
}

impl fmt::Display for LiteralSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for l in &self.0 {
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl<'a> IntoIterator for &'a LiteralSet {
    type Item = &'a Literal;
    type IntoIter = alloc::collections::btree_set::Iter<'a, Literal>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// An argument of a lifted atom: a `?parameter` or a constant.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Term {
    Var(String),
    Const(String),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "?{v}"),
            Term::Const(c) => f.write_str(c),
        }
    }
}

/// A literal inside an action schema, before parameters are bound.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LiftedLiteral {
    pub predicate: String,
    pub terms: Vec<Term>,
    pub positive: bool,
}

impl LiftedLiteral {
    fn ground(&self, binding: &BTreeMap<String, String>) -> Option<Literal> {
        let mut args = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            args.push(match t {
                Term::Var(v) => binding.get(v)?.clone(),
                Term::Const(c) => c.clone(),
            });
        }
        Some(Literal {
            fluent: Fluent::new(self.predicate.clone(), args),
            positive: self.positive,
        })
    }
}

impl fmt::Display for LiftedLiteral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.positive {
            f.write_str("(not ")?;
        }
        write!(f, "({}", self.predicate)?;
        for t in &self.terms {
            write!(f, " {t}")?;
        }
        f.write_str(")")?;
        if !self.positive {
            f.write_str(")")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypedParam {
    pub name: String,
    pub ty: String,
}

/// A durative action as declared in the domain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DurativeActionSchema {
    pub name: String,
    pub params: Vec<TypedParam>,
    pub cond_start: Vec<LiftedLiteral>,
    pub cond_overall: Vec<LiftedLiteral>,
    pub cond_end: Vec<LiftedLiteral>,
    pub eff_start: Vec<LiftedLiteral>,
    pub eff_end: Vec<LiftedLiteral>,
    pub duration_min: Millis,
    /// `None` when the duration has no upper bound.
    pub duration_max: Option<Millis>,
}

impl DurativeActionSchema {
    pub fn admits_duration(&self, d: Millis) -> bool {
        d >= self.duration_min && self.duration_max.is_none_or(|max| d <= max)
    }
}

/// Object and type declarations shared by domain constants and problem
/// objects.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeTable {
    /// child type -> parent type; `object` is the implicit root.
    pub parents: BTreeMap<String, String>,
}

impl TypeTable {
    pub fn is_declared(&self, ty: &str) -> bool {
        ty == "object" || self.parents.contains_key(ty)
    }

    pub fn is_subtype(&self, ty: &str, ancestor: &str) -> bool {
        let mut cur = ty;
        // bounded walk in case of a malformed cyclic hierarchy
        for _ in 0..=self.parents.len() + 1 {
            if cur == ancestor || ancestor == "object" {
                return true;
            }
            match self.parents.get(cur) {
                Some(p) => cur = p,
                None => return false,
            }
        }
        false
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Domain {
    pub name: String,
    pub requirements: Vec<String>,
    pub types: TypeTable,
    /// constant -> type
    pub constants: BTreeMap<String, String>,
    /// predicate -> argument types
    pub predicates: BTreeMap<String, Vec<String>>,
    pub actions: Vec<DurativeActionSchema>,
}

impl Domain {
    pub fn action(&self, name: &str) -> Option<&DurativeActionSchema> {
        self.actions.iter().find(|a| a.name == name)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Problem {
    pub name: String,
    pub domain: String,
    /// object -> type (domain constants included)
    pub objects: BTreeMap<String, String>,
    pub init: BTreeSet<Fluent>,
    pub goal: ConditionSet,
}

/// A durative action with every parameter bound to an object.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundedDurativeAction {
    pub name: String,
    pub args: Vec<String>,
    pub signature: String,
    pub binding: BTreeMap<String, String>,
    pub cond_start: ConditionSet,
    pub cond_overall: ConditionSet,
    pub cond_end: ConditionSet,
    pub eff_start: EffectSet,
    pub eff_end: EffectSet,
    pub duration_min: Millis,
    pub duration_max: Option<Millis>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GroundingError {
    Arity { expected: usize, got: usize },
    Unbound(String),
    Contradiction(Fluent),
}

impl GroundedDurativeAction {
    /// Binds the schema's parameters positionally to `args`. Type checks
    /// belong to the caller, which knows the object table.
    pub fn ground(schema: &DurativeActionSchema, args: &[String]) -> Result<GroundedDurativeAction, GroundingError> {
        if args.len() != schema.params.len() {
            return Err(GroundingError::Arity {
                expected: schema.params.len(),
                got: args.len(),
            });
        }
        let binding: BTreeMap<String, String> = schema
            .params
            .iter()
            .zip(args)
            .map(|(p, a)| (p.name.clone(), a.clone()))
            .collect();
        let set = |lits: &[LiftedLiteral]| -> Result<LiteralSet, GroundingError> {
            let mut grounded = Vec::with_capacity(lits.len());
            for l in lits {
                grounded.push(
                    l.ground(&binding)
                        .ok_or_else(|| GroundingError::Unbound(l.to_string()))?,
                );
            }
            LiteralSet::try_from_literals(grounded).map_err(GroundingError::Contradiction)
        };
        Ok(GroundedDurativeAction {
            name: schema.name.clone(),
            args: args.to_vec(),
            signature: signature(&schema.name, args),
            cond_start: set(&schema.cond_start)?,
            cond_overall: set(&schema.cond_overall)?,
            cond_end: set(&schema.cond_end)?,
            eff_start: set(&schema.eff_start)?,
            eff_end: set(&schema.eff_end)?,
            duration_min: schema.duration_min,
            duration_max: schema.duration_max,
            binding,
        })
    }
}

/// Canonical `(name arg1 arg2 ...)` form.
pub fn signature(name: &str, args: &[String]) -> String {
    let mut s = String::with_capacity(name.len() + 2 + args.iter().map(|a| a.len() + 1).sum::<usize>());
    s.push('(');
    s.push_str(name);
    for a in args {
        s.push(' ');
        s.push_str(a);
    }
    s.push(')');
    s
}

/// Identity of a plan step. The same grounded action can occur more than
/// once, so the start time is part of the key.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StepId {
    pub signature: String,
    pub start: Millis,
}

impl fmt::Display for StepId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.signature, self.start)
    }
}

/// `<t, a, d>`: action `a` started at `t` with duration `d`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimedAction {
    pub start: Millis,
    pub action: GroundedDurativeAction,
    pub duration: Millis,
}

impl TimedAction {
    pub fn end(&self) -> Millis {
        self.start + self.duration
    }

    pub fn id(&self) -> StepId {
        StepId {
            signature: self.action.signature.clone(),
            start: self.start,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemporalPlan {
    pub steps: Vec<TimedAction>,
    pub problem_ref: String,
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn f(name: &str, args: &[&str]) -> Fluent {
        Fluent::new(name, args.iter().map(|s| s.to_string()).collect())
    }

    #[test]
    fn literal_negation_flips_sign_only() {
        let l = Literal::pos(f("light", &["match1"]));
        let n = l.negated();
        assert_eq!(n.fluent, l.fluent);
        assert!(!n.positive);
        assert_eq!(n.negated(), l);
    }

    #[test]
    fn literal_set_rejects_contradiction() {
        let p = f("handfree", &[]);
        let err = LiteralSet::try_from_literals(vec![Literal::pos(p.clone()), Literal::neg(p.clone())]).unwrap_err();
        assert_eq!(err, p);
    }

    #[test]
    fn display_and_parse_agree() {
        let l = Literal::neg(f("light", &["match1"]));
        assert_eq!(l.to_string(), "(not (light match1))");
        assert_eq!(Literal::parse(&l.to_string()).unwrap(), l);
        assert_eq!(Fluent::parse("(handfree)").unwrap(), f("handfree", &[]));
    }

    #[test]
    fn grounding_substitutes_every_parameter() {
        let schema = DurativeActionSchema {
            name: "mend_fuse".into(),
            params: vec![
                TypedParam {
                    name: "fuse".into(),
                    ty: "fuse".into(),
                },
                TypedParam {
                    name: "match".into(),
                    ty: "match".into(),
                },
            ],
            cond_start: vec![LiftedLiteral {
                predicate: "handfree".into(),
                terms: vec![],
                positive: true,
            }],
            cond_overall: vec![LiftedLiteral {
                predicate: "light".into(),
                terms: vec![Term::Var("match".into())],
                positive: true,
            }],
            cond_end: vec![],
            eff_start: vec![],
            eff_end: vec![LiftedLiteral {
                predicate: "mended".into(),
                terms: vec![Term::Var("fuse".into())],
                positive: true,
            }],
            duration_min: Millis(5000),
            duration_max: Some(Millis(5000)),
        };
        let g = GroundedDurativeAction::ground(&schema, &["fuse1".into(), "match1".into()]).unwrap();
        assert_eq!(g.signature, "(mend_fuse fuse1 match1)");
        assert!(g.cond_overall.contains(&Literal::pos(f("light", &["match1"]))));
        assert!(g.eff_end.contains(&Literal::pos(f("mended", &["fuse1"]))));
        assert!(matches!(
            GroundedDurativeAction::ground(&schema, &["fuse1".into()]),
            Err(GroundingError::Arity { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn subtype_walk() {
        let mut t = TypeTable::default();
        t.parents.insert("car_part".into(), "object".into());
        t.parents.insert("wheel".into(), "car_part".into());
        assert!(t.is_subtype("wheel", "car_part"));
        assert!(t.is_subtype("wheel", "object"));
        assert!(!t.is_subtype("car_part", "wheel"));
    }
}

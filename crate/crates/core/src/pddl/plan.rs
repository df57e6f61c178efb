use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::sexpr::Pos;
use super::{Domain, GroundedDurativeAction, GroundingError, PddlError, Problem, StepId, TemporalPlan, TimedAction};
use crate::time::{Millis, SecsDisplay};

/// Parses a time-triggered plan, one `TIME: (NAME ARGS...) [DURATION]` per
/// line. Blank lines and `;` comments are skipped.
pub fn parse_plan(text: &str, domain: &Domain, problem: &Problem) -> Result<TemporalPlan, PddlError> {
    let mut plan = TemporalPlan {
        steps: Vec::new(),
        problem_ref: problem.name.clone(),
    };
    let mut seen: BTreeSet<StepId> = BTreeSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find(';') {
            Some(i) => &raw[..i],
            None => raw,
        };
        if line.trim().is_empty() {
            continue;
        }
        let step = parse_line(line, line_no, domain, problem)?;
        if !seen.insert(step.id()) {
            return Err(PddlError::DuplicateStep {
                pos: Pos { line: line_no, col: 1 },
                signature: step.action.signature.clone(),
                time: step.start.to_secs_string(),
            });
        }
        plan.steps.push(step);
    }
    Ok(plan)
}

fn col_of(line: &str, sub: &str) -> usize {
    // sub is always a slice of line
    sub.as_ptr() as usize - line.as_ptr() as usize + 1
}

fn parse_line(line: &str, line_no: usize, domain: &Domain, problem: &Problem) -> Result<TimedAction, PddlError> {
    let at = |col: usize| Pos { line: line_no, col };
    let malformed = |col: usize, msg: &str| {
        PddlError::syntax(at(col), format!("{msg}; expected `TIME: (NAME ARGS...) [DURATION]`"))
    };

    let (time_part, rest) = line
        .split_once(':')
        .ok_or_else(|| malformed(1, "missing ':' after start time"))?;
    let time_txt = time_part.trim();
    let start = Millis::parse_secs(time_txt)
        .ok_or_else(|| malformed(col_of(line, time_part), &format!("bad start time `{time_txt}`")))?;

    let open = rest
        .find('(')
        .ok_or_else(|| malformed(col_of(line, rest), "missing '('"))?;
    if !rest[..open].trim().is_empty() {
        return Err(malformed(col_of(line, rest), "unexpected text before '('"));
    }
    let after_open = &rest[open + 1..];
    let close = after_open
        .find(')')
        .ok_or_else(|| malformed(col_of(line, after_open), "missing ')'"))?;
    let call = &after_open[..close];
    let mut words = call.split_whitespace().map(|w| w.to_lowercase());
    let name = words
        .next()
        .ok_or_else(|| malformed(col_of(line, call), "empty action"))?;
    let args: Vec<String> = words.collect();

    let tail = &after_open[close + 1..];
    let lb = tail
        .find('[')
        .ok_or_else(|| malformed(col_of(line, tail), "missing '[DURATION]'"))?;
    if !tail[..lb].trim().is_empty() {
        return Err(malformed(col_of(line, tail), "unexpected text before '['"));
    }
    let dur_body = &tail[lb + 1..];
    let rb = dur_body
        .find(']')
        .ok_or_else(|| malformed(col_of(line, dur_body), "missing ']'"))?;
    let dur_txt = dur_body[..rb].trim();
    let duration = Millis::parse_secs(dur_txt)
        .ok_or_else(|| malformed(col_of(line, dur_body), &format!("bad duration `{dur_txt}`")))?;
    let trailing = &dur_body[rb + 1..];
    if !trailing.trim().is_empty() {
        return Err(malformed(col_of(line, trailing), "trailing text"));
    }

    let action_col = col_of(line, after_open) - 1;
    let schema = domain.action(&name).ok_or_else(|| PddlError::UnknownAction {
        pos: at(action_col),
        name: name.clone(),
    })?;
    for (arg, param) in args.iter().zip(&schema.params) {
        let ty = problem.objects.get(arg).ok_or_else(|| PddlError::UndeclaredObject {
            pos: at(action_col),
            name: arg.clone(),
        })?;
        if !domain.types.is_subtype(ty, &param.ty) {
            return Err(PddlError::TypeMismatch {
                pos: at(action_col),
                object: arg.clone(),
                actual: ty.clone(),
                expected: param.ty.clone(),
            });
        }
    }
    let action = GroundedDurativeAction::ground(schema, &args).map_err(|e| match e {
        GroundingError::Arity { expected, got } => PddlError::Arity {
            pos: at(action_col),
            name: name.clone(),
            got,
            expected,
        },
        GroundingError::Unbound(l) => PddlError::UnboundParameter {
            pos: at(action_col),
            name: l,
        },
        GroundingError::Contradiction(f) => PddlError::Contradiction {
            pos: at(action_col),
            fluent: f.to_string(),
        },
    })?;
    if !schema.admits_duration(duration) {
        return Err(PddlError::DurationOutOfBounds {
            pos: at(col_of(line, dur_body)),
            signature: action.signature.clone(),
            duration: duration.to_secs_string(),
            min: format!("{}", SecsDisplay(schema.duration_min)),
            max: schema
                .duration_max
                .map_or_else(|| "inf".to_string(), |m| m.to_secs_string()),
        });
    }
    Ok(TimedAction {
        start,
        action,
        duration,
    })
}

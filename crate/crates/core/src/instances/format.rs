//! Line-oriented text format for instances.
//!
//! ```text
//! c <comment>
//! p mx3 <M> <N2> <N3> <num_constraints>
//! d pred <id> <mask 0..255>
//! <weight> <±i1> <±j2> <±k3> <pred-id>
//! ```
//!
//! Predicate id 0 is always C = G₃ ∪ G₁ and may not be redefined.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{Constraint, Instance, InstanceError, Literal, Predicate3};
use crate::sign::Sign;

pub fn parse(text: &str) -> Result<Instance, InstanceError> {
    let mut header: Option<([usize; 3], usize)> = None;
    let mut preds: BTreeMap<u32, Predicate3> = BTreeMap::from([(0, Predicate3::XOR_EVEN)]);
    let mut constraints = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.trim();
        if body.is_empty() || body.starts_with('c') {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        match fields[0] {
            "p" => {
                if header.is_some() {
                    return Err(InstanceError::MalformedHeader {
                        line,
                        reason: "second header".into(),
                    });
                }
                header = Some(parse_header(&fields, line)?);
            }
            "d" => {
                let (id, pred) = parse_pred_def(&fields, line)?;
                if preds.insert(id, pred).is_some() {
                    return Err(InstanceError::DuplicatePredicate { line, id });
                }
            }
            _ => {
                let Some((sizes, _)) = header else {
                    return Err(InstanceError::MissingHeader);
                };
                constraints.push(parse_constraint(&fields, line, sizes, &preds)?);
            }
        }
    }

    let (sizes, declared) = header.ok_or(InstanceError::MissingHeader)?;
    if declared != constraints.len() {
        return Err(InstanceError::ConstraintCount {
            declared,
            found: constraints.len(),
        });
    }
    Instance::new(sizes, constraints)
}

fn parse_header(fields: &[&str], line: usize) -> Result<([usize; 3], usize), InstanceError> {
    let bad = |reason: &str| InstanceError::MalformedHeader {
        line,
        reason: reason.into(),
    };
    if fields.len() != 6 || fields[1] != "mx3" {
        return Err(bad("expected `p mx3 <M> <N2> <N3> <num_constraints>`"));
    }
    let nums: Vec<usize> = fields[2..]
        .iter()
        .map(|f| f.parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad("sizes must be non-negative integers"))?;
    Ok(([nums[0], nums[1], nums[2]], nums[3]))
}

fn parse_pred_def(fields: &[&str], line: usize) -> Result<(u32, Predicate3), InstanceError> {
    let bad = |reason: &str| InstanceError::MalformedLine {
        line,
        reason: reason.into(),
    };
    if fields.len() != 4 || fields[1] != "pred" {
        return Err(bad("expected `d pred <id> <mask>`"));
    }
    let id: u32 = fields[2].parse().map_err(|_| bad("bad predicate id"))?;
    let mask: u8 = fields[3].parse().map_err(|_| bad("mask must be in 0..=255"))?;
    Ok((id, Predicate3(mask)))
}

fn parse_constraint(
    fields: &[&str],
    line: usize,
    sizes: [usize; 3],
    preds: &BTreeMap<u32, Predicate3>,
) -> Result<Constraint, InstanceError> {
    let bad = |reason: &str| InstanceError::MalformedLine {
        line,
        reason: reason.into(),
    };
    if fields.len() != 5 {
        return Err(bad("expected `<weight> <±i1> <±j2> <±k3> <pred-id>`"));
    }
    let weight: f64 = fields[0].parse().map_err(|_| bad("bad weight"))?;
    if weight < 0.0 {
        return Err(InstanceError::NegativeWeight { line, weight });
    }
    if !weight.is_finite() {
        return Err(bad("weight must be finite"));
    }
    let mut lits = [Literal::pos(1); 3];
    for b in 0..3 {
        let raw: i64 = fields[1 + b]
            .trim_start_matches('+')
            .parse()
            .map_err(|_| bad("bad literal"))?;
        let index = raw.unsigned_abs() as usize;
        if index == 0 || index > sizes[b] {
            return Err(InstanceError::LiteralOutOfRange {
                line,
                block: b + 1,
                literal: raw,
                size: sizes[b],
            });
        }
        let sign = if raw < 0 { Sign::Minus } else { Sign::Plus };
        lits[b] = Literal::new(index, sign);
    }
    let id: u32 = fields[4].parse().map_err(|_| bad("bad predicate id"))?;
    let pred = *preds
        .get(&id)
        .ok_or(InstanceError::UnknownPredicate { line, id })?;
    Ok(Constraint::new(lits, weight, pred))
}

/// Canonical text: constraints sorted, predicate ids renumbered by mask.
pub fn serialize(inst: &Instance) -> String {
    serialize_with_comments(inst, &[])
}

pub fn serialize_with_comments(inst: &Instance, comments: &[String]) -> String {
    let canon = inst.canonicalized();
    let mut ids: BTreeMap<Predicate3, u32> = BTreeMap::new();
    let mut extra: Vec<Predicate3> = canon
        .constraints()
        .iter()
        .map(|c| c.pred)
        .filter(|p| *p != Predicate3::XOR_EVEN)
        .collect();
    extra.sort();
    extra.dedup();
    ids.insert(Predicate3::XOR_EVEN, 0);
    for (k, p) in extra.iter().enumerate() {
        ids.insert(*p, k as u32 + 1);
    }

    let mut out = String::new();
    for c in comments {
        for l in c.lines() {
            let _ = writeln!(out, "c {l}");
        }
    }
    let [m, n2, n3] = canon.sizes();
    let _ = writeln!(out, "p mx3 {m} {n2} {n3} {}", canon.constraints().len());
    for p in &extra {
        let _ = writeln!(out, "d pred {} {}", ids[p], p.mask());
    }
    for c in canon.constraints() {
        let _ = writeln!(
            out,
            "{} {} {} {} {}",
            c.weight, c.lits[0], c.lits[1], c.lits[2], ids[&c.pred]
        );
    }
    out
}

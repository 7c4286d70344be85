//! Cover description files.
//!
//! ```text
//! base figure8.graph
//! root 0
//! tree 0 3
//! perm s (1 2)
//! voltage 4 s
//! trunc 12
//! ```
//!
//! Generators are either permutations in 1-based cycle notation (all of the
//! same degree, set with an optional `fiber <n>` line) or builtin rules
//! `rule <name> identity|z-shift|z2-shift-a|z2-shift-b|free-left-mult <letter>`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::graph::{io::parse_operator, SchrodingerOp};
use crate::scalar::Scalar;

use super::{lift_cover, CoveringGraph, FiberAction, Generator, Move, Voltages};

#[derive(Clone, Debug)]
pub struct CoverSpec<T> {
    pub base: SchrodingerOp<T>,
    pub action: Arc<FiberAction>,
    pub voltages: Voltages,
    pub trunc: usize,
}

impl<T: Scalar> CoverSpec<T> {
    pub fn build(&self) -> Result<CoveringGraph<T>> {
        lift_cover(
            self.base.graph_arc().clone(),
            self.voltages.clone(),
            self.action.clone(),
            self.trunc,
        )
    }
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn number(line: usize, s: &str) -> Result<usize> {
    s.parse()
        .map_err(|_| err(line, format!("expected a non-negative integer, got `{s}`")))
}

/// Parses a cover file; `resolve` returns the text of the named base graph.
pub fn parse_cover<T: Scalar>(text: &str, resolve: impl Fn(&str) -> Result<String>) -> Result<CoverSpec<T>> {
    let mut base = None;
    let mut root = 0;
    let mut tree: Option<Vec<usize>> = None;
    let mut fiber: Option<usize> = None;
    let mut perms: Vec<(String, String, usize)> = Vec::new();
    let mut generators: Vec<Generator> = Vec::new();
    let mut voltages: Vec<(usize, String, usize)> = Vec::new();
    let mut trunc = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, rest) = content
            .split_once(char::is_whitespace)
            .map_or((content, ""), |(k, r)| (k, r.trim()));
        let words: Vec<&str> = rest.split_whitespace().collect();
        match key {
            "base" => {
                let body = resolve(rest).map_err(|e| err(line, format!("base `{rest}`: {e}")))?;
                base = Some(parse_operator::<T>(&body)?);
            }
            "root" if words.len() == 1 => root = number(line, words[0])?,
            "tree" => tree = Some(words.iter().map(|w| number(line, w)).collect::<Result<_>>()?),
            "fiber" if words.len() == 1 => fiber = Some(number(line, words[0])?),
            "perm" if !words.is_empty() => {
                let cycles = rest[words[0].len()..].trim().to_string();
                perms.push((words[0].to_string(), cycles, line));
            }
            "rule" if words.len() >= 2 => {
                let action = match (words[1], words.get(2)) {
                    ("identity", None) => Move::Identity,
                    ("z-shift", None) => Move::ZShift,
                    ("z2-shift-a", None) => Move::Z2ShiftA,
                    ("z2-shift-b", None) => Move::Z2ShiftB,
                    ("free-left-mult", Some(l)) => match l.as_bytes() {
                        [c @ b'a'..=b'd'] => Move::FreeLeftMult(c - b'a'),
                        _ => return Err(err(line, format!("free letter must be a-d, got `{l}`"))),
                    },
                    _ => return Err(err(line, format!("unknown rule `{rest}`"))),
                };
                generators.push(Generator {
                    name: words[0].to_string(),
                    action,
                });
            }
            "voltage" if words.len() == 2 => voltages.push((number(line, words[0])?, words[1].to_string(), line)),
            "trunc" if words.len() == 1 => trunc = number(line, words[0])?,
            _ => return Err(err(line, format!("unrecognized line `{content}`"))),
        }
    }
    let base = base.ok_or_else(|| err(0, "missing `base` line"))?;
    if !perms.is_empty() {
        let n = match fiber {
            Some(n) => n,
            None => perms
                .iter()
                .flat_map(|(_, c, _)| {
                    c.split(|ch: char| !ch.is_ascii_digit())
                        .filter_map(|s| s.parse::<usize>().ok())
                })
                .max()
                .unwrap_or(1),
        };
        for (name, cycles, line) in perms {
            let action = Move::from_cycles(n, &cycles).map_err(|e| err(line, e.to_string()))?;
            generators.push(Generator { name, action });
        }
    }
    let action = FiberAction::new(generators)?;
    let assigned = voltages
        .into_iter()
        .map(|(e, name, line)| {
            action
                .generator_index(&name)
                .map(|g| (e, g))
                .ok_or_else(|| err(line, format!("undefined generator `{name}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    let graph = base.graph_arc().clone();
    let voltages = match tree {
        Some(t) => Voltages::with_tree(&graph, root, t, &assigned)?,
        None => Voltages::new(&graph, root, &assigned)?,
    };
    Ok(CoverSpec {
        base,
        action: Arc::new(action),
        voltages,
        trunc,
    })
}

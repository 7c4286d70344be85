//! Line-oriented interchange:
//!
//! ```text
//! graph <name> <nV> <nE> [base]
//! v <id> <mu> <V> <boundary:0|1>
//! e <u> <v> <w>
//! ```
//!
//! Numbers are parsed with [`Scalar::from_decimal`], so rational scalars
//! read decimals exactly. `#` starts a comment. The optional `base` flag
//! admits loops and parallel edges.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{GraphBuilder, Measure, SchrodingerOp};

pub(crate) fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

pub(crate) fn parse_index(tok: Option<&str>, line: usize, what: &str) -> Result<usize> {
    tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?
        .parse()
        .map_err(|_| parse_err(line, format!("bad {what}")))
}

pub(crate) fn parse_scalar<T: Scalar>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    T::from_decimal(tok).ok_or_else(|| parse_err(line, format!("bad {what} `{tok}`")))
}

/// Meaningful lines with their 1-based numbers.
pub(crate) fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((i + 1, line))
    })
}

/// Reads a graph together with its potential and mask.
pub fn parse_operator<T: Scalar>(text: &str) -> Result<SchrodingerOp<T>> {
    let mut header: Option<(String, usize, usize, bool)> = None;
    let mut mu: Vec<Option<T>> = Vec::new();
    let mut pot: Vec<T> = Vec::new();
    let mut mask = Vec::new();
    let mut edges = Vec::new();

    for (no, line) in lines(text) {
        let mut toks = line.split_whitespace();
        let kind = toks.next().unwrap_or_default();
        match kind {
            "graph" => {
                if header.is_some() {
                    return Err(parse_err(no, "second graph header"));
                }
                let name = toks.next().ok_or_else(|| parse_err(no, "missing name"))?.to_string();
                let nv = parse_index(toks.next(), no, "vertex count")?;
                let ne = parse_index(toks.next(), no, "edge count")?;
                let base = match toks.next() {
                    None => false,
                    Some("base") => true,
                    Some(other) => return Err(parse_err(no, format!("unknown flag `{other}`"))),
                };
                mu = vec![None; nv];
                pot = vec![T::zero(); nv];
                header = Some((name, nv, ne, base));
            }
            "v" => {
                let (_, nv, _, _) = header.as_ref().ok_or_else(|| parse_err(no, "vertex before header"))?;
                let id = parse_index(toks.next(), no, "vertex id")?;
                if id >= *nv {
                    return Err(parse_err(no, format!("vertex {id} out of range")));
                }
                if mu[id].is_some() {
                    return Err(parse_err(no, format!("vertex {id} declared twice")));
                }
                mu[id] = Some(parse_scalar(toks.next(), no, "measure")?);
                pot[id] = parse_scalar(toks.next(), no, "potential")?;
                match toks.next() {
                    Some("0") => {}
                    Some("1") => mask.push(id),
                    _ => return Err(parse_err(no, "boundary flag must be 0 or 1")),
                }
            }
            "e" => {
                if header.is_none() {
                    return Err(parse_err(no, "edge before header"));
                }
                let u = parse_index(toks.next(), no, "edge endpoint")?;
                let v = parse_index(toks.next(), no, "edge endpoint")?;
                let w: T = parse_scalar(toks.next(), no, "weight")?;
                edges.push((u, v, w));
            }
            other => return Err(parse_err(no, format!("unknown record `{other}`"))),
        }
        if toks.next().is_some() {
            return Err(parse_err(no, "trailing tokens"));
        }
    }

    let (name, nv, ne, base) = header.ok_or_else(|| parse_err(0, "missing graph header"))?;
    if edges.len() != ne {
        return Err(parse_err(0, format!("declared {ne} edges, found {}", edges.len())));
    }
    let mu = mu
        .into_iter()
        .enumerate()
        .map(|(i, m)| m.ok_or_else(|| parse_err(0, format!("vertex {i} not declared"))))
        .collect::<Result<Vec<T>>>()?;
    let mut builder = GraphBuilder::new(name, nv).measure(Measure::Custom(mu)).mask(mask);
    if base {
        builder = builder.voltage_base();
    }
    for (u, v, w) in edges {
        builder.add_edge(u, v, w);
    }
    let graph = Arc::new(builder.build()?);
    SchrodingerOp::new(graph, pot)
}

pub fn write_operator<T: Scalar>(op: &SchrodingerOp<T>) -> String {
    let g = op.graph();
    let mut out = String::new();
    let flag = if g.is_voltage_base() { " base" } else { "" };
    let _ = writeln!(out, "graph {} {} {}{flag}", g.name(), g.num_vertices(), g.num_edges());
    for v in 0..g.num_vertices() {
        let _ = writeln!(
            out,
            "v {v} {} {} {}",
            g.mu(v),
            op.potential()[v],
            u8::from(op.mask()[v])
        );
    }
    for e in g.edges() {
        let _ = writeln!(out, "e {} {} {}", e.u, e.v, e.w);
    }
    out
}

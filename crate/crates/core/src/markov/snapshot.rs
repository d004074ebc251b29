//! `format=graph/v1` snapshots.
//!
//! ```text
//! format=graph/v1
//! states<TAB>n
//! <index><TAB><canonical hypothesis>        (n lines)
//! counts<TAB>m
//! <src><TAB><dst><TAB><count>               (m lines)
//! meta<TAB>k                                 (optional)
//! <src><TAB><dst><TAB>viability<TAB>succeeding<TAB>discounting<TAB>plain<TAB>alpha<TAB>beta<TAB>gamma<TAB>tier
//! ```
//!
//! Absorbing vertices are `n` (success) and `n + 1` (failure). Floats use the
//! shortest representation that parses back to the same value, and
//! probabilities are recomputed on load, so a round trip is bit-exact.

use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use super::{EdgeCounts, GraphError, MarkovGraph, StateSpace};
use crate::format::{body_lines, FormatError, GRAPH_V1};
use crate::meta::{AlphaTier, EdgeMeta, EdgeParams, EdgeRoleRatios, MetaSection};
use crate::session::parse_hypothesis;
use crate::Scalar;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

pub fn write_graph<T: Scalar>(graph: &MarkovGraph<T>) -> String {
    let mut out = String::new();
    let space = graph.space();
    let _ = writeln!(out, "{GRAPH_V1}");
    let _ = writeln!(out, "states\t{}", space.len());
    for (i, h) in space.hypotheses().iter().enumerate() {
        let _ = writeln!(out, "{i}\t{h}");
    }
    let _ = writeln!(out, "counts\t{}", graph.counts().len());
    for (&(src, dst), count) in graph.counts() {
        let _ = writeln!(out, "{src}\t{dst}\t{count}");
    }
    if let Some(meta) = graph.meta() {
        let _ = writeln!(out, "meta\t{}", meta.len());
        for (&(src, dst), m) in meta {
            let tier = m.tier.map_or("-", AlphaTier::as_str);
            let _ = writeln!(
                out,
                "{src}\t{dst}\t{:?}\t{:?}\t{:?}\t{:?}\t{:?}\t{:?}\t{:?}\t{tier}",
                m.roles.viability,
                m.roles.succeeding,
                m.roles.discounting,
                m.roles.plain,
                m.params.alpha,
                m.params.beta,
                m.params.gamma,
            );
        }
    }
    out
}

struct Lines<'a, I: Iterator<Item = (usize, &'a str)>> {
    inner: I,
    last: usize,
}

impl<'a, I: Iterator<Item = (usize, &'a str)>> Lines<'a, I> {
    fn next_line(&mut self, what: &str) -> Result<(usize, &'a str), FormatError> {
        let (n, line) = self
            .inner
            .next()
            .ok_or_else(|| FormatError::line(self.last + 1, format!("missing {what}")))?;
        self.last = n;
        Ok((n, line))
    }

    fn section(&mut self, name: &str) -> Result<usize, FormatError> {
        let (n, line) = self.next_line(&format!("`{name}` section"))?;
        section_size(n, line, name)
    }
}

fn section_size(n: usize, line: &str, name: &str) -> Result<usize, FormatError> {
    match line.split_once('\t') {
        Some((tag, size)) if tag == name => parse_field(n, size, "section size"),
        _ => Err(FormatError::line(n, format!("expected `{name}` section"))),
    }
}

fn parse_field<F: FromStr>(n: usize, field: &str, what: &str) -> Result<F, FormatError> {
    field
        .parse()
        .map_err(|_| FormatError::line(n, format!("invalid {what} `{field}`")))
}

fn fields(n: usize, line: &str, expected: usize) -> Result<Vec<&str>, FormatError> {
    let parts: Vec<&str> = line.split('\t').collect();
    if parts.len() != expected {
        return Err(FormatError::line(
            n,
            format!("expected {expected} fields, found {}", parts.len()),
        ));
    }
    Ok(parts)
}

pub fn read_graph<T: Scalar>(text: &str) -> Result<MarkovGraph<T>, SnapshotError> {
    let mut lines = Lines {
        inner: body_lines(text, GRAPH_V1)?,
        last: 1,
    };

    let n = lines.section("states")?;
    let mut hypotheses = Vec::with_capacity(n);
    for expected in 0..n {
        let (ln, line) = lines.next_line("state row")?;
        let (index, canonical) = line
            .split_once('\t')
            .ok_or_else(|| FormatError::line(ln, "expected `<index>\\t<hypothesis>`"))?;
        let index: usize = parse_field(ln, index, "state index")?;
        if index != expected {
            return Err(FormatError::line(ln, format!("state {index} out of order")).into());
        }
        let h = parse_hypothesis(canonical).map_err(|e| FormatError::line(ln, e))?;
        if hypotheses.last().is_some_and(|prev| prev >= &h) {
            return Err(FormatError::line(ln, "states are not in canonical order").into());
        }
        hypotheses.push(h);
    }
    let space = StateSpace::new(hypotheses);

    let m = lines.section("counts")?;
    let mut counts = EdgeCounts::new();
    for _ in 0..m {
        let (ln, line) = lines.next_line("count row")?;
        let f = fields(ln, line, 3)?;
        let edge = (parse_field(ln, f[0], "source")?, parse_field(ln, f[1], "target")?);
        if counts.insert(edge, parse_field(ln, f[2], "count")?).is_some() {
            return Err(FormatError::line(ln, "duplicate edge").into());
        }
    }

    let mut meta = None;
    if let Some((ln, line)) = lines.inner.next() {
        let k = section_size(ln, line, "meta")?;
        let mut section = MetaSection::new();
        for _ in 0..k {
            let (ln, line) = lines.next_line("meta row")?;
            let f = fields(ln, line, 10)?;
            let float = |i: usize, what: &str| parse_field::<f64>(ln, f[i], what);
            let record = EdgeMeta {
                roles: EdgeRoleRatios {
                    viability: float(2, "viability ratio")?,
                    succeeding: float(3, "succeeding ratio")?,
                    discounting: float(4, "discounting ratio")?,
                    plain: float(5, "plain ratio")?,
                },
                params: EdgeParams {
                    alpha: float(6, "alpha")?,
                    beta: float(7, "beta")?,
                    gamma: float(8, "gamma")?,
                },
                tier: match f[9] {
                    "-" => None,
                    t => Some(t.parse().map_err(|e: String| FormatError::line(ln, e))?),
                },
            };
            let edge = (parse_field(ln, f[0], "source")?, parse_field(ln, f[1], "target")?);
            if section.insert(edge, record).is_some() {
                return Err(FormatError::line(ln, "duplicate meta edge").into());
            }
        }
        meta = Some(section);
    }
    if let Some((ln, _)) = lines.inner.next() {
        return Err(FormatError::line(ln, "trailing content").into());
    }
    Ok(MarkovGraph::from_counts(space, counts, meta)?)
}

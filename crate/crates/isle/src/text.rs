//! Human-readable text formats for trees and rules. Numbers are written in
//! Rust's shortest round-trip form, so parsing a rendered value gives the
//! same bits back.

use std::fmt::Write as _;

use isle_core::rules::{Condition, RuleSource};
use isle_core::tree::{Node, Split, SplitCondition};
use isle_core::{RegressionTree, Rule, RuleSet};

use crate::error::{CliError, Result};

/// One line per node, indented by depth:
///
/// ```text
/// tree max_depth=2 features=3 nodes=3
/// node 0 depth=0 count=20 value=1.5 split=x1<=0.25 left=1 right=2
///   node 1 depth=1 count=8 value=0.5 leaf
///   node 2 depth=1 count=12 value=2.1666666666666665 leaf
/// ```
pub fn render_tree(t: &RegressionTree) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "tree max_depth={} features={} nodes={}", t.max_depth(), t.n_features(), t.nodes().len());
    for (id, n) in t.nodes().iter().enumerate() {
        let _ = write!(out, "{:indent$}node {id} depth={} count={} value={}", "", n.depth, n.training_count, n.value, indent = 2 * n.depth);
        match &n.split {
            Some(s) => {
                let _ = writeln!(
                    out,
                    " split=x{}<={} left={} right={}",
                    s.condition.feature, s.condition.threshold, s.left, s.right
                );
            }
            None => out.push_str(" leaf\n"),
        }
    }
    out
}

fn bad(line: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("tree text line {line}: {msg}"))
}

fn field<'a>(tok: Option<&'a str>, key: &str, line: usize) -> Result<&'a str> {
    tok.and_then(|t| t.strip_prefix(key)).and_then(|t| t.strip_prefix('=')).ok_or_else(|| bad(line, format!("expected {key}=")))
}

fn num<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.parse().map_err(|_| bad(line, format!("cannot parse {s:?}")))
}

pub fn parse_tree(text: &str) -> Result<RegressionTree> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, head) = lines.next().ok_or_else(|| bad(1, "empty tree"))?;
    let mut toks = head.split_whitespace();
    if toks.next() != Some("tree") {
        return Err(bad(1, "expected header \"tree ...\""));
    }
    let max_depth: usize = num(field(toks.next(), "max_depth", 1)?, 1)?;
    let features: usize = num(field(toks.next(), "features", 1)?, 1)?;
    let count: usize = num(field(toks.next(), "nodes", 1)?, 1)?;
    let mut nodes = Vec::with_capacity(count);
    for (i, l) in lines {
        let ln = i + 1;
        let mut toks = l.split_whitespace();
        if toks.next() != Some("node") {
            return Err(bad(ln, "expected \"node\""));
        }
        let id: usize = num(toks.next().unwrap_or(""), ln)?;
        if id != nodes.len() {
            return Err(bad(ln, format!("node {id} out of order")));
        }
        let depth = num(field(toks.next(), "depth", ln)?, ln)?;
        let training_count = num(field(toks.next(), "count", ln)?, ln)?;
        let value = num(field(toks.next(), "value", ln)?, ln)?;
        let split = match toks.next() {
            Some("leaf") => None,
            Some(tok) => {
                let cond = field(Some(tok), "split", ln)?;
                let (f, t) = cond
                    .strip_prefix('x')
                    .and_then(|c| c.split_once("<="))
                    .ok_or_else(|| bad(ln, format!("malformed split {cond:?}")))?;
                Some(Split {
                    condition: SplitCondition { feature: num(f, ln)?, threshold: num(t, ln)? },
                    left: num(field(toks.next(), "left", ln)?, ln)?,
                    right: num(field(toks.next(), "right", ln)?, ln)?,
                })
            }
            None => return Err(bad(ln, "expected split or leaf")),
        };
        if toks.next().is_some() {
            return Err(bad(ln, "trailing tokens"));
        }
        nodes.push(Node { split, value, depth, training_count });
    }
    if nodes.len() != count {
        return Err(bad(0, format!("header declares {count} nodes, found {}", nodes.len())));
    }
    Ok(RegressionTree::from_nodes(nodes, max_depth, features)?)
}

fn var(feature: usize, names: Option<&[String]>) -> String {
    match names.and_then(|n| n.get(feature)) {
        Some(name) => name.clone(),
        None => format!("x{feature}"),
    }
}

/// `x12 in (0.31, inf) AND x4 in (-inf, 0.77]`, optionally with column
/// names in place of `x<index>`.
pub fn render_conditions(rule: &Rule, names: Option<&[String]>) -> String {
    rule.conditions()
        .iter()
        .map(|c| {
            let close = if c.upper == f64::INFINITY { ')' } else { ']' };
            format!("{} in ({}, {}{close}", var(c.feature, names), c.lower, c.upper)
        })
        .collect::<Vec<_>>()
        .join(" AND ")
}

/// `tree 3 node 5: x12 in (0.31, inf) AND x4 in (-inf, 0.77]`
pub fn render_rule(rule: &Rule) -> String {
    let s = rule.source();
    format!("tree {} node {}: {}", s.tree, s.node, render_conditions(rule, None))
}

pub fn render_rules(rs: &RuleSet) -> String {
    rs.rules().iter().map(|r| render_rule(r) + "\n").collect()
}

fn rule_err(text: &str, msg: &str) -> CliError {
    CliError::Data(format!("rule {text:?}: {msg}"))
}

fn parse_condition(text: &str) -> Result<Condition> {
    let err = |m: &str| rule_err(text, m);
    let (v, interval) = text.split_once(" in ").ok_or_else(|| err("expected \"<var> in <interval>\""))?;
    let feature = v.trim().strip_prefix('x').and_then(|f| f.parse().ok()).ok_or_else(|| err("expected x<index>"))?;
    let inner = interval.trim().strip_prefix('(').ok_or_else(|| err("interval must open with '('"))?;
    let (inner, closed) = match (inner.strip_suffix(']'), inner.strip_suffix(')')) {
        (Some(i), _) => (i, true),
        (_, Some(i)) => (i, false),
        _ => return Err(err("interval must close with ']' or ')'")),
    };
    let (lo, hi) = inner.split_once(',').ok_or_else(|| err("expected two bounds"))?;
    let lower: f64 = lo.trim().parse().map_err(|_| err("bad lower bound"))?;
    let upper: f64 = hi.trim().parse().map_err(|_| err("bad upper bound"))?;
    if closed == (upper == f64::INFINITY) {
        return Err(err("only an infinite upper bound is open"));
    }
    Ok(Condition { feature, lower, upper })
}

pub fn parse_rule(line: &str) -> Result<Rule> {
    let (src, body) = line.split_once(':').ok_or_else(|| rule_err(line, "expected \"tree T node N: ...\""))?;
    let t: Vec<&str> = src.split_whitespace().collect();
    let source = match t.as_slice() {
        ["tree", tree, "node", node] => RuleSource {
            tree: tree.parse().map_err(|_| rule_err(line, "bad tree id"))?,
            node: node.parse().map_err(|_| rule_err(line, "bad node id"))?,
        },
        _ => return Err(rule_err(line, "expected \"tree T node N\"")),
    };
    let conds = body.split(" AND ").map(parse_condition).collect::<Result<Vec<_>>>()?;
    Ok(Rule::new(conds, source)?)
}

pub fn parse_rules(text: &str) -> Result<RuleSet> {
    let rules = text.lines().filter(|l| !l.trim().is_empty()).map(parse_rule).collect::<Result<Vec<_>>>()?;
    let n = rules.len();
    let rs = RuleSet::from_rules(rules);
    if rs.len() != n {
        return Err(CliError::Data("rule list contains duplicates".into()));
    }
    Ok(rs)
}
